"""Node field, sink placement and tier/cluster partitioning.

Geometry conventions
--------------------
The area is the square ``[0, side]^2`` with the origin at the lower-left corner.

* ``ONE_SIDE`` sinks sit on the edge ``y = 0``. Tiers are horizontal bands
  measured by ``y`` and cells are rectangles.
* ``CENTER`` and ``AROUND`` use concentric square rings around the area center.
  Ring position is the Chebyshev radius ``r = max(|dx|, |dy|)``. For ``CENTER``
  the tier coordinate is ``r`` itself; for ``AROUND`` it is ``side/2 - r``
  (depth inward from the perimeter), so tier 0 is always the band nearest the
  sinks. Cells are ring sectors cut by the perimeter parameter ``u`` (see
  :func:`perimeter_param`), which makes sector area linear in ``u``.

Random deployment uses numpy's PCG64 generator (``numpy.random.default_rng``).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

ID_GRID = 256  # quantization cells per axis for node ids


class TopologyError(ValueError):
    pass


class Point(NamedTuple):
    x: float
    y: float


def distance(a: Sequence[float], b: Sequence[float]) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


class SinkPlacementModel(enum.Enum):
    ONE_SIDE = 1
    CENTER = 2
    AROUND = 3


class ClusterSizingModel(enum.Enum):
    SMALLER_NEAR_SINK = 1
    LARGER_NEAR_SINK = 2
    EQUAL = 3


@dataclass(frozen=True)
class Deployment:
    area_side: float
    nodes: tuple[Point, ...]
    seed: int

    def __len__(self) -> int:
        return len(self.nodes)

    def as_array(self) -> np.ndarray:
        return np.array(self.nodes, dtype=float).reshape(-1, 2)


@dataclass(frozen=True)
class Tier:
    index: int
    band: tuple[float, float]


@dataclass(frozen=True)
class RectCell:
    x0: float
    y0: float
    x1: float
    y1: float

    @property
    def area(self) -> float:
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    def center(self) -> Point:
        return Point((self.x0 + self.x1) / 2, (self.y0 + self.y1) / 2)

    def contains(self, p: Sequence[float]) -> bool:
        return self.x0 <= p[0] <= self.x1 and self.y0 <= p[1] <= self.y1


@dataclass(frozen=True)
class RingSectorCell:
    """Part of the square ring ``r0 <= r <= r1`` with ``u0 <= u <= u1``."""

    cx: float
    cy: float
    r0: float
    r1: float
    u0: float
    u1: float

    @property
    def area(self) -> float:
        return 4.0 * (self.r1**2 - self.r0**2) * (self.u1 - self.u0)

    def center(self) -> Point:
        # mid-radius, mid-perimeter point; unlike the centroid it always lies
        # inside the sector, including full rings and wide sectors
        dx, dy = perimeter_point((self.u0 + self.u1) / 2, (self.r0 + self.r1) / 2)
        return Point(self.cx + dx, self.cy + dy)

    def contains(self, p: Sequence[float]) -> bool:
        dx, dy = p[0] - self.cx, p[1] - self.cy
        r = max(abs(dx), abs(dy))
        if not self.r0 <= r <= self.r1:
            return False
        u = perimeter_param(dx, dy)
        return self.u0 <= u <= self.u1 or (self.u1 == 1.0 and u == 0.0)


Cell = RectCell | RingSectorCell


@dataclass(frozen=True)
class Cluster:
    id: int
    tier_index: int
    cell: Cell
    center: Point
    target_sink_index: int
    member_indices: tuple[int, ...] = ()


@dataclass(frozen=True)
class TierPlan:
    area_side: float
    placement: SinkPlacementModel
    tiers: tuple[Tier, ...]
    clusters: tuple[Cluster, ...]
    sinks: tuple[Point, ...]
    coverage_radius: float = 100.0


def perimeter_param(dx: float, dy: float) -> float:
    """Position in ``[0, 1)`` of ``(dx, dy)`` along its own square ring.

    The walk starts at the midpoint of the lower edge and runs clockwise
    (lower edge leftwards, left edge upwards, top edge rightwards, right edge
    downwards). The origin maps to 0.
    """
    r = max(abs(dx), abs(dy))
    if r == 0.0:
        return 0.0
    if dy == -r and dx <= 0:
        s = -dx
    elif dx == -r:
        s = r + (dy + r)
    elif dy == r:
        s = 3 * r + (dx + r)
    elif dx == r:
        s = 5 * r + (r - dy)
    else:  # lower edge, right half
        s = 7 * r + (r - dx)
    u = s / (8 * r)
    return 0.0 if u >= 1.0 else u


def perimeter_point(u: float, r: float) -> tuple[float, float]:
    """Inverse of :func:`perimeter_param` on the ring of half-width ``r``."""
    s = (u % 1.0) * 8 * r
    if s <= r:
        return -s, -r
    if s <= 3 * r:
        return -r, s - 2 * r
    if s <= 5 * r:
        return s - 4 * r, r
    if s <= 7 * r:
        return r, 6 * r - s
    return 8 * r - s, -r


def quantize_axis(v: float, area_side: float) -> int:
    return min(ID_GRID - 1, int(math.floor(v * ID_GRID / area_side)))


def deploy_nodes(seed: int, node_count: int, area_side: float) -> Deployment:
    """Draw ``node_count`` uniform positions over ``[0, area_side)^2``.

    A draw that lands in an id quantization cell already occupied by an
    earlier node is re-drawn, so positions are distinct and the packed node
    ids (8 bits per axis) are unique.
    """
    if node_count < 1:
        raise TopologyError(f"node_count must be >= 1, got {node_count}")
    if node_count > ID_GRID * ID_GRID:
        raise TopologyError(f"node_count {node_count} exceeds the id space")
    if not area_side > 0:
        raise TopologyError(f"area_side must be positive, got {area_side}")
    rng = np.random.default_rng(np.uint64(seed))
    taken: set[tuple[int, int]] = set()
    nodes: list[Point] = []
    while len(nodes) < node_count:
        batch = rng.uniform(0.0, area_side, size=(node_count - len(nodes), 2))
        for x, y in batch.tolist():
            key = (quantize_axis(x, area_side), quantize_axis(y, area_side))
            if key in taken:
                continue
            taken.add(key)
            nodes.append(Point(x, y))
    return Deployment(area_side=float(area_side), nodes=tuple(nodes), seed=int(seed))


def place_sinks(model: SinkPlacementModel, sink_count: int, area_side: float) -> list[Point]:
    if sink_count < 1:
        raise TopologyError(f"sink_count must be >= 1, got {sink_count}")
    if model is SinkPlacementModel.CENTER:
        if sink_count != 1:
            raise TopologyError("center placement requires exactly one sink")
        return [Point(area_side / 2, area_side / 2)]
    if model is SinkPlacementModel.ONE_SIDE:
        return [Point(area_side * (k + 0.5) / sink_count, 0.0) for k in range(sink_count)]
    half = area_side / 2
    sinks = []
    for k in range(sink_count):
        dx, dy = perimeter_point(k / sink_count, half)
        sinks.append(Point(half + dx, half + dy))
    return sinks


def _band_widths(extent: float, tier_count: int, sizing: ClusterSizingModel, growth: float) -> list[float]:
    weights = _tier_weights(tier_count, sizing, growth)
    total = sum(weights)
    return [extent * w / total for w in weights]


def _tier_weights(tier_count: int, sizing: ClusterSizingModel, growth: float) -> list[float]:
    if sizing is ClusterSizingModel.SMALLER_NEAR_SINK:
        return [growth**t for t in range(tier_count)]
    if sizing is ClusterSizingModel.LARGER_NEAR_SINK:
        return [growth ** (tier_count - 1 - t) for t in range(tier_count)]
    return [1.0] * tier_count


def _cells_per_tier(areas: Sequence[float], sizing: ClusterSizingModel, weights: Sequence[float], target_total: int) -> list[int]:
    """Cell count per tier.

    The default is ceil(band area / target) with one target cell area for the
    whole plan. Rounding up can invert the mean cell areas of neighboring
    tiers (or spread EQUAL tiers past 5%) when bands hold only a few cells; such
    plans use :func:`_weighted_counts` instead.
    """
    target = sum(areas) / target_total
    counts = [max(1, math.ceil(a / target - 1e-9)) for a in areas]
    if _sizing_holds([a / n for a, n in zip(areas, counts)], sizing):
        return counts
    return _weighted_counts(areas, weights, target_total)


def _sizing_holds(cell_areas: Sequence[float], sizing: ClusterSizingModel) -> bool:
    pairs = list(zip(cell_areas, cell_areas[1:]))
    if sizing is ClusterSizingModel.SMALLER_NEAR_SINK:
        return all(a < b for a, b in pairs)
    if sizing is ClusterSizingModel.LARGER_NEAR_SINK:
        return all(a > b for a, b in pairs)
    return max(cell_areas) <= 1.05 * min(cell_areas)


def _weighted_counts(areas: Sequence[float], weights: Sequence[float], target_total: int) -> list[int]:
    # Target cell area in tier t is unit * weight_t. The unit is fixed by giving
    # the tier with the smallest area/weight ratio exactly k cells, with k chosen
    # so that the total lands near target_total. Equal-width square rings have
    # areas in ratio 1:3:5:..., so EQUAL sizing gets exactly equal cells.
    ratios = [a / w for a, w in zip(areas, weights)]
    ref = min(ratios)
    rel = [r / ref for r in ratios]
    best = None
    for k in range(1, target_total + 1):
        counts = [max(1, round(k * x)) for x in rel]
        miss = abs(sum(counts) - target_total)
        if best is None or miss < best[0]:
            best = (miss, counts)
    return best[1]


def partition(
    area_side: float,
    sinks: Sequence[Point],
    placement: SinkPlacementModel,
    tier_count: int,
    sizing: ClusterSizingModel,
    growth: float = 1.5,
    base_clusters_per_tier: int = 4,
    coverage_radius: float = 100.0,
) -> TierPlan:
    """Cut the area into ``tier_count`` bands and each band into cluster cells.

    Band widths follow a geometric progression with ratio ``growth``, growing
    away from the sinks for SMALLER_NEAR_SINK and shrinking for
    LARGER_NEAR_SINK. Cells within a tier have equal area.
    """
    if tier_count < 1:
        raise TopologyError(f"tier_count must be >= 1, got {tier_count}")
    if not sinks:
        raise TopologyError("at least one sink is required")
    if base_clusters_per_tier < 1:
        raise TopologyError("base_clusters_per_tier must be >= 1")
    if not growth >= 1.0:
        raise TopologyError(f"growth ratio must be >= 1, got {growth}")
    if not coverage_radius > 0:
        raise TopologyError("coverage_radius must be positive")

    ring = placement is not SinkPlacementModel.ONE_SIDE
    extent = area_side / 2 if ring else area_side
    widths = _band_widths(extent, tier_count, sizing, growth)
    if min(widths) < 1.0:
        raise TopologyError(f"{tier_count} tiers leave a band narrower than 1 m")

    edges = [0.0]
    for w in widths:
        edges.append(edges[-1] + w)
    edges[-1] = extent
    tiers = tuple(Tier(t, (edges[t], edges[t + 1])) for t in range(tier_count))

    if ring:
        half = area_side / 2
        if placement is SinkPlacementModel.CENTER:
            radii = [(lo, hi) for lo, hi in (t.band for t in tiers)]
        else:
            radii = [(half - hi, half - lo) for lo, hi in (t.band for t in tiers)]
        radii = [(0.0 if r0 < 1e-9 else r0, r1) for r0, r1 in radii]
        areas = [4.0 * (r1**2 - r0**2) for r0, r1 in radii]
    else:
        areas = [area_side * (hi - lo) for lo, hi in (t.band for t in tiers)]

    weights = _tier_weights(tier_count, sizing, growth)
    counts = _cells_per_tier(areas, sizing, weights, tier_count * base_clusters_per_tier)

    clusters: list[Cluster] = []
    for t, n in enumerate(counts):
        for i in range(n):
            if ring:
                r0, r1 = radii[t]
                cell: Cell = RingSectorCell(half, half, r0, r1, i / n, (i + 1) / n)
            else:
                lo, hi = tiers[t].band
                cell = RectCell(area_side * i / n, lo, area_side * (i + 1) / n, hi)
            center = cell.center()
            clusters.append(
                Cluster(
                    id=len(clusters),
                    tier_index=t,
                    cell=cell,
                    center=center,
                    target_sink_index=target_sink(center, sinks),
                )
            )
    return TierPlan(
        area_side=float(area_side),
        placement=placement,
        tiers=tiers,
        clusters=tuple(clusters),
        sinks=tuple(Point(*s) for s in sinks),
        coverage_radius=float(coverage_radius),
    )


def assign_clusters(deployment: Deployment, plan: TierPlan) -> list[int]:
    """Cluster id for every node; points on shared edges go to the lower id."""
    membership = []
    for idx, p in enumerate(deployment.nodes):
        for c in plan.clusters:
            if c.cell.contains(p):
                membership.append(c.id)
                break
        else:
            raise TopologyError(f"node {idx} at {tuple(p)} lies outside every cell")
    return membership


def with_members(plan: TierPlan, membership: Sequence[int]) -> TierPlan:
    groups: list[list[int]] = [[] for _ in plan.clusters]
    for idx, cid in enumerate(membership):
        groups[cid].append(idx)
    clusters = tuple(
        Cluster(c.id, c.tier_index, c.cell, c.center, c.target_sink_index, tuple(g))
        for c, g in zip(plan.clusters, groups)
    )
    return TierPlan(plan.area_side, plan.placement, plan.tiers, clusters, plan.sinks, plan.coverage_radius)


def neighbors(node_index: int, deployment: Deployment, coverage_radius: float) -> list[int]:
    # squared comparison so scalar and vectorized paths agree bit-for-bit
    hx, hy = deployment.nodes[node_index]
    r2 = coverage_radius * coverage_radius
    return [
        j
        for j, (x, y) in enumerate(deployment.nodes)
        if j != node_index and (x - hx) * (x - hx) + (y - hy) * (y - hy) <= r2
    ]


def neighbor_table(positions: np.ndarray, coverage_radius: float) -> list[np.ndarray]:
    """Vectorized :func:`neighbors` for every node at once."""
    dx = positions[None, :, 0] - positions[:, None, 0]
    dy = positions[None, :, 1] - positions[:, None, 1]
    within = dx * dx + dy * dy <= coverage_radius * coverage_radius
    np.fill_diagonal(within, False)
    return [np.flatnonzero(row) for row in within]


def target_sink(center: Sequence[float], sinks: Sequence[Sequence[float]]) -> int:
    if not sinks:
        raise TopologyError("at least one sink is required")
    best, best_d = 0, math.inf
    for k, s in enumerate(sinks):
        d = distance(center, s)
        if d < best_d:
            best, best_d = k, d
    return best
