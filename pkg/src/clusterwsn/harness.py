"""Parameter sweeps: config parsing, grid expansion, execution and CSV output.

A sweep config is a flat TOML document. Every key names a :class:`RunConfig`
field; giving a list instead of a scalar turns that field into a sweep axis.
Two extra keys are understood: ``seeds`` (a count or an explicit list) and
``out_dir``. Axes are expanded in :class:`RunConfig` field order, whatever the
order in the file, with the last field varying fastest.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import itertools
import json
import logging
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .election import CandidacyMode, ElectionModel
from .engine import COUNTER_FIELDS, ConfigError, RunConfig, run
from .routing import StuckPolicy
from .topology import ClusterSizingModel, SinkPlacementModel, TopologyError

log = logging.getLogger(__name__)

CONFIG_FIELDS = tuple(f.name for f in dataclasses.fields(RunConfig) if f.name != "seed")
_DEFAULTS = RunConfig()

_ENUMS = {
    "sink_placement": SinkPlacementModel,
    "sizing": ClusterSizingModel,
    "election_model": ElectionModel,
    "stuck_policy": StuckPolicy,
}

RESULT_FIELDS = (
    "config_hash",
    *CONFIG_FIELDS,
    "seed",
    "lifetime_rounds",
    "first_dead_node",
    "truncated",
    "total_energy",
    *COUNTER_FIELDS,
)

SUMMARY_FIELDS = ("config_hash", *CONFIG_FIELDS, "n_seeds", "n_truncated", "mean_lifetime", "stdev_lifetime")

FIGURE_FIELDS = ("x_value", "election_model", "mean_lifetime", "stdev", "n_seeds")

FAMILY_AXES = {
    "tiers": "tier_count",
    "density": "node_count",
    "sinks": "sink_count",
    "coverage": "coverage_radius",
}


class SweepConfigError(ValueError):
    pass


class FigureError(ValueError):
    pass


# -- value coding -----------------------------------------------------------


def _parse_enum(key: str, enum_cls, raw):
    if isinstance(raw, bool):
        raise SweepConfigError(f"{key}: expected one of {_enum_choices(enum_cls)}, got {raw!r}")
    if isinstance(raw, int):
        for member in enum_cls:
            if member.value == raw:
                return member
    if isinstance(raw, str):
        for member in enum_cls:
            if raw.lower() in (member.name.lower(), str(member.value).lower()):
                return member
    raise SweepConfigError(f"{key}: invalid value {raw!r}; expected one of {_enum_choices(enum_cls)}")


def _enum_choices(enum_cls) -> str:
    values = [m.value for m in enum_cls]
    if all(isinstance(v, int) for v in values):
        return "{" + ",".join(str(v) for v in values) + "} or " + "/".join(m.name.lower() for m in enum_cls)
    return "/".join(str(v) for v in values)


def parse_value(key: str, raw: Any):
    """Coerce one scalar config value to the type of RunConfig field ``key``."""
    if key in _ENUMS:
        return _parse_enum(key, _ENUMS[key], raw)
    if key == "candidacy_mode":
        if raw in (None, "auto"):
            return None
        return _parse_enum(key, CandidacyMode, raw)
    default = getattr(_DEFAULTS, key)
    if isinstance(default, bool):
        if not isinstance(raw, bool):
            raise SweepConfigError(f"{key}: expected true/false, got {raw!r}")
        return raw
    if isinstance(default, int):
        if isinstance(raw, bool) or not isinstance(raw, int):
            raise SweepConfigError(f"{key}: expected an integer, got {raw!r}")
        return raw
    if isinstance(default, float):
        if isinstance(raw, bool) or not isinstance(raw, (int, float)):
            raise SweepConfigError(f"{key}: expected a number, got {raw!r}")
        return float(raw)
    raise SweepConfigError(f"{key}: unsupported field")  # pragma: no cover


def format_value(v) -> str:
    if v is None:
        return "auto"
    if isinstance(v, bool):
        return "true" if v else "false"
    if hasattr(v, "name") and hasattr(v, "value"):
        return v.name.lower()
    return repr(v) if isinstance(v, float) else str(v)


def config_echo(cfg: RunConfig) -> dict[str, str]:
    return {k: format_value(getattr(cfg, k)) for k in CONFIG_FIELDS}


def config_from_echo(echo: dict[str, str], seed: int = 0) -> RunConfig:
    values = {}
    for k in CONFIG_FIELDS:
        raw = echo[k]
        default = getattr(_DEFAULTS, k)
        if k in _ENUMS or k == "candidacy_mode":
            values[k] = parse_value(k, raw)
        elif isinstance(default, bool):
            values[k] = raw == "true"
        elif isinstance(default, int):
            values[k] = int(raw)
        else:
            values[k] = float(raw)
    return RunConfig(**values, seed=seed)


def config_hash(cfg: RunConfig) -> str:
    text = json.dumps(config_echo(cfg), sort_keys=True)
    return hashlib.sha1(text.encode()).hexdigest()[:12]


# -- sweep config -----------------------------------------------------------


@dataclass
class SweepConfig:
    base: dict[str, Any] = field(default_factory=dict)
    axes: dict[str, list] = field(default_factory=dict)
    seeds: list[int] = field(default_factory=lambda: [0])
    out_dir: str | None = None

    def base_config(self) -> RunConfig:
        return RunConfig(**self.base)


def parse_config(text: str) -> SweepConfig:
    """Strictly parse sweep config text; unknown keys and bad values raise."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise SweepConfigError(f"malformed config: {exc}") from exc
    base: dict[str, Any] = {}
    axes: dict[str, list] = {}
    seeds = [0]
    out_dir = None
    for key, raw in doc.items():
        if key == "seeds":
            seeds = _parse_seeds(raw)
        elif key == "out_dir":
            if not isinstance(raw, str):
                raise SweepConfigError("out_dir must be a string")
            out_dir = raw
        elif key == "seed":
            seeds = _parse_seeds([raw])
        elif key in CONFIG_FIELDS:
            if isinstance(raw, list):
                if not raw:
                    raise SweepConfigError(f"axis {key} is empty")
                axes[key] = [parse_value(key, v) for v in raw]
            else:
                base[key] = parse_value(key, raw)
        elif isinstance(raw, dict):
            raise SweepConfigError(f"unknown section [{key}]; the config is flat")
        else:
            raise SweepConfigError(f"unknown key {key!r}")
    if not axes:
        try:
            RunConfig(**base)
        except (ConfigError, TopologyError, ValueError) as exc:
            raise SweepConfigError(str(exc)) from exc
    elif "sink_placement" not in axes and "sink_count" not in axes:
        if base.get("sink_placement") is SinkPlacementModel.CENTER and base.get("sink_count", 1) != 1:
            raise SweepConfigError("center sink placement requires sink_count = 1")
    return SweepConfig(base=base, axes={k: axes[k] for k in CONFIG_FIELDS if k in axes}, seeds=seeds, out_dir=out_dir)


def _parse_seeds(raw) -> list[int]:
    if isinstance(raw, bool):
        raise SweepConfigError("seeds must be a count or a list of integers")
    if isinstance(raw, int):
        if raw < 1:
            raise SweepConfigError("at least one seed is required")
        return list(range(raw))
    if isinstance(raw, list) and raw and all(isinstance(s, int) and not isinstance(s, bool) and 0 <= s < 2**64 for s in raw):
        return list(raw)
    raise SweepConfigError("seeds must be a positive count or a nonempty list of unsigned integers")


def expand_sweep(config: SweepConfig) -> list[RunConfig]:
    """Cartesian product of the axes; infeasible combinations are skipped."""
    unknown = set(config.axes) - set(CONFIG_FIELDS)
    if unknown:
        raise SweepConfigError(f"unknown sweep axes {sorted(unknown)}")
    names = [k for k in CONFIG_FIELDS if k in config.axes]
    out = []
    for combo in itertools.product(*(config.axes[n] for n in names)):
        values = {**config.base, **dict(zip(names, combo))}
        try:
            out.append(RunConfig(**values))
        except (ConfigError, TopologyError) as exc:
            log.warning("skipping %s: %s", {n: format_value(v) for n, v in zip(names, combo)}, exc)
    return out


# -- execution --------------------------------------------------------------


def _run_row(job: tuple[int, RunConfig, int]) -> tuple[int, int, dict[str, str]]:
    idx, cfg, seed = job
    res = run(cfg.replace(seed=seed))
    if not res.ledger_balanced:  # pragma: no cover
        raise RuntimeError(f"energy ledger does not balance for config {idx} seed {seed}")
    row = {
        "config_hash": config_hash(cfg),
        **config_echo(cfg),
        "seed": str(seed),
        "lifetime_rounds": str(res.lifetime_rounds),
        "first_dead_node": "" if res.first_dead_node is None else str(res.first_dead_node),
        "truncated": format_value(res.truncated),
        "total_energy": repr(res.total_energy),
        **{k: str(getattr(res.counters, k)) for k in COUNTER_FIELDS},
    }
    return idx, seed, row


def execute(configs: Sequence[RunConfig], seeds: Sequence[int], parallelism: int = 1) -> list[dict[str, str]]:
    """Run every (config, seed) pair; rows come back sorted by (config index, seed)."""
    jobs = [(i, cfg, s) for i, cfg in enumerate(configs) for s in seeds]
    if parallelism <= 1 or len(jobs) <= 1:
        done = [_run_row(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            done = list(pool.map(_run_row, jobs, chunksize=max(1, len(jobs) // (4 * parallelism))))
    done.sort(key=lambda t: (t[0], t[1]))
    return [row for _, _, row in done]


def write_csv(rows: Iterable[dict], path, fields: Sequence[str] = RESULT_FIELDS) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(fields), lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: row[k] for k in fields})


def read_csv(path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _mean_stdev(values: Sequence[int]) -> tuple[float, float | None]:
    mean = statistics.fmean(values)
    sd = statistics.stdev(values) if len(values) > 1 else None
    return mean, sd


def summarize(rows: Sequence[dict[str, str]]) -> list[dict[str, str]]:
    """Per-config mean and sample stdev of lifetime; truncated runs are excluded."""
    if not rows:
        raise ValueError("nothing to summarize")
    groups: dict[str, list[dict[str, str]]] = {}
    for row in rows:
        groups.setdefault(row["config_hash"], []).append(row)
    out = []
    for h, group in groups.items():
        kept = [int(r["lifetime_rounds"]) for r in group if r["truncated"] != "true"]
        rec = {"config_hash": h, **{k: group[0][k] for k in CONFIG_FIELDS}}
        rec["n_seeds"] = str(len(kept))
        rec["n_truncated"] = str(len(group) - len(kept))
        if kept:
            mean, sd = _mean_stdev(kept)
            rec["mean_lifetime"] = repr(mean)
            rec["stdev_lifetime"] = "" if sd is None else repr(sd)
        else:
            rec["mean_lifetime"] = rec["stdev_lifetime"] = ""
        out.append(rec)
    return out


def emit_figure_data(rows: Sequence[dict[str, str]], family: str) -> dict[tuple[str, str], list[dict[str, str]]]:
    """Long-format tables, one per (placement, sizing) pair, for one figure family.

    Each table has one row per (x value, election model) with the mean and
    sample stdev of lifetime over the non-truncated seeds.
    """
    if family not in FAMILY_AXES:
        raise FigureError(f"unknown family {family!r}; expected one of {sorted(FAMILY_AXES)}")
    axis = FAMILY_AXES[family]
    if family == "sinks" and any(r["sink_placement"] == "center" for r in rows):
        raise FigureError("the sinks family has no center-placement variant")
    fixed = [k for k in CONFIG_FIELDS if k not in (axis, "sink_placement", "sizing", "election_model")]
    tables: dict[tuple[str, str], dict[tuple, list[int]]] = {}
    rest: dict[tuple[str, str], set] = {}
    for r in rows:
        key = (r["sink_placement"], r["sizing"])
        rest.setdefault(key, set()).add(tuple(r[k] for k in fixed))
        cell = tables.setdefault(key, {}).setdefault((r[axis], r["election_model"]), [])
        if r["truncated"] != "true":
            cell.append(int(r["lifetime_rounds"]))
    for key, variants in rest.items():
        if len(variants) > 1:
            raise FigureError(f"rows for {key} vary in more than the {axis} axis")
    out = {}
    for key, cells in tables.items():
        xs = sorted({x for x, _ in cells}, key=float)
        if family != "tiers" and len(xs) < 2:
            raise FigureError(f"rows for {key} do not sweep {axis}")
        recs = []
        for x in xs:
            for em in sorted({e for _, e in cells}, key=lambda e: _parse_enum("election_model", ElectionModel, e).value):
                vals = cells.get((x, em))
                if vals is None:
                    continue
                if vals:
                    mean, sd = _mean_stdev(vals)
                    mean_s, sd_s = repr(mean), "" if sd is None else repr(sd)
                else:
                    mean_s = sd_s = ""
                recs.append({"x_value": x, "election_model": em, "mean_lifetime": mean_s, "stdev": sd_s, "n_seeds": str(len(vals))})
        out[key] = recs
    return out


def write_figure_tables(rows: Sequence[dict[str, str]], family: str, out_dir) -> list[Path]:
    paths = []
    for (placement, sizing), recs in emit_figure_data(rows, family).items():
        path = Path(out_dir) / f"fig_{family}_{placement}_{sizing}.csv"
        write_csv(recs, path, FIGURE_FIELDS)
        paths.append(path)
    return paths


def csv_text(rows: Sequence[dict], fields: Sequence[str] = RESULT_FIELDS) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(fields), lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: row[k] for k in fields})
    return buf.getvalue()


# -- canonical figure sweeps ------------------------------------------------

CANONICAL_SEEDS = 10
CANONICAL_AXES = {
    "density": [100, 200, 300, 400, 500],
    "tiers": [1, 2, 3, 4, 5],
    "sinks": [1, 2, 4, 8],
    "coverage": [75.0, 100.0, 125.0, 150.0],
}
ALL_ELECTIONS = list(ElectionModel)


def canonical_base(placement: SinkPlacementModel, sizing: ClusterSizingModel) -> dict[str, Any]:
    return {
        "node_count": 300,
        "tier_count": 2,
        "sink_placement": placement,
        "sink_count": 1 if placement is SinkPlacementModel.CENTER else 4,
        "sizing": sizing,
    }


def figure_sweeps() -> list[tuple[str, SweepConfig]]:
    """The 25 figure analogues: 1 tiers, 9 density, 6 sinks, 9 coverage."""
    seeds = list(range(CANONICAL_SEEDS))
    out = []
    tiers_base = canonical_base(SinkPlacementModel.ONE_SIDE, ClusterSizingModel.SMALLER_NEAR_SINK)
    tiers_base["node_count"] = 500
    out.append(("tiers", SweepConfig(tiers_base, {"tier_count": CANONICAL_AXES["tiers"], "election_model": ALL_ELECTIONS}, seeds)))
    for family in ("density", "sinks", "coverage"):
        axis = FAMILY_AXES[family]
        for sizing in ClusterSizingModel:
            for placement in SinkPlacementModel:
                if family == "sinks" and placement is SinkPlacementModel.CENTER:
                    continue
                base = canonical_base(placement, sizing)
                axes = {axis: CANONICAL_AXES[family], "election_model": ALL_ELECTIONS}
                out.append((family, SweepConfig(base, {k: axes[k] for k in CONFIG_FIELDS if k in axes}, seeds)))
    return out
