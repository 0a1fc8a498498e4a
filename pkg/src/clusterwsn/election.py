"""Timer-based cluster-head election.

Every member would start a timer of length ``Tw`` and the first to expire
announces leadership, so the outcome is simply the argmin of ``Tw``. It is
computed directly instead of simulating clocks.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .topology import distance


class ElectionError(ValueError):
    pass


class ElectionModel(enum.Enum):
    CENTRE = 1  # distance to cluster centre
    TOWARD_SINK_CONSTRAINED = 2  # sink distance, candidates between centre and sink only
    TOWARD_SINK = 3  # sink distance, any member

    @property
    def label(self) -> str:
        return _LABELS[self]


_LABELS = {
    ElectionModel.CENTRE: "SelectCH_Centre",
    ElectionModel.TOWARD_SINK_CONSTRAINED: "SelectCH_EN_AfterCentre",
    ElectionModel.TOWARD_SINK: "SelectCH_EN_withNoCons",
}


class CandidacyMode(enum.Enum):
    LITERAL_Y = "literal_y"
    TOWARD_SINK = "toward_sink"


def candidacy(node, cluster_center, target_sink, mode: CandidacyMode) -> float:
    """1 if the node may run for CH under the constrained model, else infinity."""
    if mode is CandidacyMode.LITERAL_Y:
        ok = node[1] < cluster_center[1]
    else:
        ok = distance(node, target_sink) < distance(cluster_center, target_sink)
    return 1.0 if ok else math.inf


def waiting_time(
    node,
    residual: float,
    model: ElectionModel,
    cluster_center,
    target_sink,
    mode: CandidacyMode = CandidacyMode.LITERAL_Y,
) -> float:
    if not residual > 0:
        raise ElectionError(f"residual energy must be positive, got {residual}")
    if model is ElectionModel.CENTRE:
        return distance(node, cluster_center) / residual
    if model is ElectionModel.TOWARD_SINK_CONSTRAINED:
        if candidacy(node, cluster_center, target_sink, mode) == math.inf:
            return math.inf
    return distance(node, target_sink) / residual


@dataclass(frozen=True)
class ElectionOutcome:
    cluster_id: int
    winner: int
    waiting_times: Mapping[int, float] = field(default_factory=dict)
    fallback_used: bool = False


def argmin_tw(waiting_times: Mapping[int, float]) -> int | None:
    """Lowest finite ``Tw``; ties go to the lower node index."""
    best, best_tw = None, math.inf
    for idx in sorted(waiting_times):
        tw = waiting_times[idx]
        if tw < best_tw:
            best, best_tw = idx, tw
    return best


def elect(
    cluster_id: int,
    members: Sequence[tuple[int, Sequence[float], float]],
    model: ElectionModel,
    cluster_center,
    target_sink,
    mode: CandidacyMode = CandidacyMode.LITERAL_Y,
) -> ElectionOutcome:
    """Pick the CH among ``(node index, position, residual)`` triples.

    Members with no residual energy cannot run. Under the constrained model a
    cluster with no eligible candidate falls back to the unconstrained rule.
    """
    alive = [(i, p, e) for i, p, e in members if e > 0]
    if not alive:
        raise ElectionError(f"cluster {cluster_id} has no member able to serve")
    tws = {i: waiting_time(p, e, model, cluster_center, target_sink, mode) for i, p, e in alive}
    winner = argmin_tw(tws)
    fallback = False
    if winner is None:
        if model is not ElectionModel.TOWARD_SINK_CONSTRAINED:
            # every Tw is infinite only if a distance overflowed; not reachable
            raise ElectionError(f"cluster {cluster_id}: no finite waiting time")
        tws = {
            i: waiting_time(p, e, ElectionModel.TOWARD_SINK, cluster_center, target_sink, mode)
            for i, p, e in alive
        }
        winner = argmin_tw(tws)
        fallback = True
    return ElectionOutcome(cluster_id, winner, tws, fallback)
