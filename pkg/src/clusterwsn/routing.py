"""Greedy geographic next-hop selection.

Distances are compared squared (``dx*dx + dy*dy``) so that the coverage test,
the neighbor relation and the progress test all use one arithmetic path.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .topology import neighbor_table


class HopKind(enum.Enum):
    DIRECT = "direct"
    FORWARD = "forward"
    STUCK = "stuck"


class HopDecision(NamedTuple):
    kind: HopKind
    node: int | None = None


DIRECT = HopDecision(HopKind.DIRECT)
STUCK = HopDecision(HopKind.STUCK)


class StuckPolicy(enum.Enum):
    DIRECT_FALLBACK = "direct_fallback"
    DROP = "drop"


class RouteStatus(enum.Enum):
    DELIVERED = "delivered"
    DROPPED_STUCK = "dropped_stuck"
    DROPPED_DEAD = "dropped_dead"


@dataclass
class RoutingContext:
    """Snapshot of what routing needs: positions, neighbors, clusters, alive set."""

    positions: np.ndarray
    sinks: np.ndarray
    membership: np.ndarray
    coverage_radius: float
    alive: np.ndarray = None
    neighbors: list[np.ndarray] = field(default=None)

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float).reshape(-1, 2)
        self.sinks = np.asarray(self.sinks, dtype=float).reshape(-1, 2)
        self.membership = np.asarray(self.membership, dtype=int)
        n = len(self.positions)
        if self.alive is None:
            self.alive = np.ones(n, dtype=bool)
        if self.neighbors is None:
            self.neighbors = neighbor_table(self.positions, self.coverage_radius)
        self._r2 = self.coverage_radius * self.coverage_radius

    def _d2_to(self, idx, point: np.ndarray):
        dx = self.positions[idx, 0] - point[0]
        dy = self.positions[idx, 1] - point[1]
        return dx * dx + dy * dy

    def _greedy(self, current: int, target: np.ndarray, same_cluster: bool) -> HopDecision:
        here = self._d2_to(current, target)
        if here <= self._r2:
            return DIRECT
        nb = self.neighbors[current]
        ok = self.alive[nb]
        if same_cluster:
            ok &= self.membership[nb] == self.membership[current]
        cand = nb[ok]
        if len(cand) == 0:
            return STUCK
        d2 = self._d2_to(cand, target)
        closer = d2 < here
        if not closer.any():
            return STUCK
        cand, d2 = cand[closer], d2[closer]
        # argmin returns the first minimum and cand is index-sorted
        return HopDecision(HopKind.FORWARD, int(cand[int(np.argmin(d2))]))

    def next_intra_hop(self, current: int, ch: int) -> HopDecision:
        return self._greedy(current, self.positions[ch], same_cluster=True)

    def next_inter_hop(self, current: int, sink_index: int) -> HopDecision:
        return self._greedy(current, self.sinks[sink_index], same_cluster=False)


def next_intra_hop(current: int, ch: int, ctx: RoutingContext) -> HopDecision:
    return ctx.next_intra_hop(current, ch)


def next_inter_hop(current: int, sink_index: int, ctx: RoutingContext) -> HopDecision:
    return ctx.next_inter_hop(current, sink_index)


class Hop(NamedTuple):
    sender: int
    receiver: int | None  # None when the receiver is a sink
    distance: float


@dataclass(frozen=True)
class Route:
    hops: tuple[Hop, ...]
    status: RouteStatus
    stuck: bool = False

    @property
    def nodes(self) -> list[int]:
        path = [h.sender for h in self.hops]
        if self.hops and self.hops[-1].receiver is not None:
            path.append(self.hops[-1].receiver)
        return path


def route(
    origin: int,
    ctx: RoutingContext,
    *,
    ch: int | None = None,
    sink: int | None = None,
    stuck_policy: StuckPolicy = StuckPolicy.DIRECT_FALLBACK,
) -> Route:
    """Iterate the greedy rule from ``origin`` to a CH (intra) or a sink (inter)."""
    if (ch is None) == (sink is None):
        raise ValueError("give exactly one of ch= or sink=")
    if ch is not None:
        target = ctx.positions[ch]
        step = lambda cur: ctx.next_intra_hop(cur, ch)  # noqa: E731
    else:
        target = ctx.sinks[sink]
        step = lambda cur: ctx.next_inter_hop(cur, sink)  # noqa: E731

    def final(cur: int) -> Hop:
        d = math.hypot(ctx.positions[cur, 0] - target[0], ctx.positions[cur, 1] - target[1])
        return Hop(cur, ch, d)

    hops: list[Hop] = []
    cur = origin
    # strict progress bounds the walk by the node count
    for _ in range(len(ctx.positions) + 1):
        decision = step(cur)
        if decision.kind is HopKind.DIRECT:
            hops.append(final(cur))
            return Route(tuple(hops), RouteStatus.DELIVERED)
        if decision.kind is HopKind.STUCK:
            if stuck_policy is StuckPolicy.DROP:
                return Route(tuple(hops), RouteStatus.DROPPED_STUCK, stuck=True)
            hops.append(final(cur))
            return Route(tuple(hops), RouteStatus.DELIVERED, stuck=True)
        nxt = decision.node
        d = math.hypot(*(ctx.positions[cur] - ctx.positions[nxt]))
        hops.append(Hop(cur, nxt, d))
        cur = nxt
    raise RuntimeError("greedy walk failed to make progress")  # pragma: no cover

