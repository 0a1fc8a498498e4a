"""Round loop: election, intra-cluster delivery, aggregation, inter-cluster delivery.

Events run in a fixed order (phase, then cluster id, then member index) so a
run is a pure function of its configuration and seed.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .election import CandidacyMode, ElectionModel, ElectionOutcome, elect
from .energy import AJ_PER_J, Battery, DebitStatus, EnergyParams, rx_energy, to_aj, tx_energy
from .packets import inter_packet_bits, intra_packet_bits
from .routing import Route, RouteStatus, RoutingContext, StuckPolicy, route
from .topology import (
    ClusterSizingModel,
    Deployment,
    SinkPlacementModel,
    TierPlan,
    assign_clusters,
    deploy_nodes,
    distance,
    partition,
    place_sinks,
    with_members,
)


class ConfigError(ValueError):
    pass


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class RunConfig:
    area_side: float = 500.0
    node_count: int = 300
    sink_placement: SinkPlacementModel = SinkPlacementModel.ONE_SIDE
    sink_count: int = 1
    tier_count: int = 2
    sizing: ClusterSizingModel = ClusterSizingModel.SMALLER_NEAR_SINK
    growth: float = 1.5
    base_clusters_per_tier: int = 4
    election_model: ElectionModel = ElectionModel.CENTRE
    candidacy_mode: CandidacyMode | None = None  # None: literal y for one-side sinks
    coverage_radius: float = 100.0
    e_elec: float = 50e-9
    eps_fs: float = 10e-12
    eps_mp: float = 0.0013e-12
    d0: float = 85.0
    data_rate: float = 250_000.0
    initial_energy: float = 0.5
    e_da: float = 0.0
    mac_overhead: bool = False
    election_broadcast: bool = True
    ctrl_bits: int = 128
    stuck_policy: StuckPolicy = StuckPolicy.DIRECT_FALLBACK
    seed: int = 0
    max_rounds: int = 100_000

    def __post_init__(self):
        if self.node_count < 1:
            raise ConfigError("node_count must be >= 1")
        if self.sink_count < 1:
            raise ConfigError("sink_count must be >= 1")
        if self.sink_placement is SinkPlacementModel.CENTER and self.sink_count != 1:
            raise ConfigError("center sink placement requires sink_count = 1")
        if self.tier_count < 1:
            raise ConfigError("tier_count must be >= 1")
        if self.max_rounds < 1:
            raise ConfigError("max_rounds must be >= 1")
        if not self.area_side > 0 or not self.coverage_radius > 0:
            raise ConfigError("area_side and coverage_radius must be positive")
        if self.ctrl_bits < 0:
            raise ConfigError("ctrl_bits must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        self.energy  # validates the radio constants

    @property
    def energy(self) -> EnergyParams:
        return EnergyParams(
            e_elec=self.e_elec,
            eps_fs=self.eps_fs,
            eps_mp=self.eps_mp,
            d0=self.d0,
            data_rate=self.data_rate,
            initial_energy=self.initial_energy,
            e_da=self.e_da,
        )

    @property
    def effective_candidacy(self) -> CandidacyMode:
        if self.candidacy_mode is not None:
            return self.candidacy_mode
        if self.sink_placement is SinkPlacementModel.ONE_SIDE:
            return CandidacyMode.LITERAL_Y
        return CandidacyMode.TOWARD_SINK

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


class MacOverhead(NamedTuple):
    rts: int = 0
    cts: int = 0
    ack: int = 0


def mac_bits(config: RunConfig) -> MacOverhead:
    """Control frames exchanged around every data hop.

    The sender transmits RTS and receives CTS and ACK; the receiver does the
    opposite. Frames are collision-free, so this is pure energy overhead.
    """
    if config.mac_overhead:
        return MacOverhead(rts=160, cts=112, ack=112)
    return MacOverhead()


def hop_costs(bits: int, d: float, mac: MacOverhead, p: EnergyParams) -> tuple[float, float]:
    """(sender, receiver) energy for one data hop of ``bits`` over ``d`` meters."""
    back = mac.cts + mac.ack
    sender = tx_energy(bits + mac.rts, d, p) + rx_energy(back, p)
    receiver = rx_energy(bits + mac.rts, p) + tx_energy(back, d, p)
    return sender, receiver


class BroadcastCharge(NamedTuple):
    node: int
    amount: float


def election_broadcast(ch: int, members, positions, params: EnergyParams, ctrl_bits: int = 128) -> list[BroadcastCharge]:
    """Charges for the leadership announcement: CH transmits, members listen.

    ``members`` are the alive members of the cluster, the CH included or not.
    """
    others = [m for m in members if m != ch]
    if not others:
        return []
    reach = max(distance(positions[ch], positions[m]) for m in others)
    charges = [BroadcastCharge(ch, tx_energy(ctrl_bits, reach, params))]
    charges.extend(BroadcastCharge(m, rx_energy(ctrl_bits, params)) for m in others)
    return charges


@dataclass
class Counters:
    intra_sent: int = 0
    intra_delivered: int = 0
    inter_sent: int = 0
    inter_delivered: int = 0
    stuck_events: int = 0
    dropped_dead: int = 0
    relayed: int = 0
    fallback_elections: int = 0

    def add(self, other: "Counters") -> None:
        for f in dataclasses.fields(self):
            setattr(self, f.name, getattr(self, f.name) + getattr(other, f.name))


COUNTER_FIELDS = tuple(f.name for f in dataclasses.fields(Counters))


@dataclass
class RoundReport:
    round: int
    elections: list[ElectionOutcome]
    counters: Counters
    energy_spent: float
    deaths: list[int]

    def to_record(self) -> dict:
        return {
            "round": self.round,
            "cluster_heads": {o.cluster_id: o.winner for o in self.elections},
            **dataclasses.asdict(self.counters),
            "energy_spent": self.energy_spent,
            "deaths": list(self.deaths),
        }


@dataclass
class RunResult:
    config: RunConfig
    lifetime_rounds: int
    first_dead_node: int | None
    truncated: bool
    rounds_executed: int
    consumed: list[float]
    counters: Counters
    total_debited_aj: int = field(repr=False, default=0)
    initial_aj: int = field(repr=False, default=0)
    residual_aj: int = field(repr=False, default=0)

    @property
    def seed(self) -> int:
        return self.config.seed

    @property
    def total_energy(self) -> float:
        return self.total_debited_aj / AJ_PER_J

    @property
    def ledger_balanced(self) -> bool:
        return self.total_debited_aj == self.initial_aj - self.residual_aj


class ClusterPlan(NamedTuple):
    charges: tuple[tuple[int, int], ...]  # (node, attojoules)
    counters: Counters


class Simulation:
    """Mutable state of one run. Not shared between runs."""

    def __init__(self, config: RunConfig, deployment: Deployment | None = None, fast: bool = True):
        self.config = config
        self.fast = fast
        self.params = config.energy
        if deployment is None:
            deployment = deploy_nodes(config.seed, config.node_count, config.area_side)
        self.deployment = deployment
        sinks = place_sinks(config.sink_placement, config.sink_count, config.area_side)
        plan = partition(
            config.area_side,
            sinks,
            config.sink_placement,
            config.tier_count,
            config.sizing,
            growth=config.growth,
            base_clusters_per_tier=config.base_clusters_per_tier,
            coverage_radius=config.coverage_radius,
        )
        self.membership = assign_clusters(deployment, plan)
        self.plan: TierPlan = with_members(plan, self.membership)
        self.positions = deployment.nodes
        self.ctx = RoutingContext(
            positions=deployment.as_array(),
            sinks=np.array(self.plan.sinks, dtype=float),
            membership=self.membership,
            coverage_radius=config.coverage_radius,
        )
        self.batteries = [Battery.charged(self.params.initial_energy) for _ in deployment.nodes]
        self.initial_aj = sum(b.residual_aj for b in self.batteries)
        self.mac = mac_bits(config)
        self.mode = config.effective_candidacy
        self.round = 0
        self.debited_aj = 0
        self.consumed_aj = [0] * len(deployment.nodes)
        self.totals = Counters()
        self.first_dead: int | None = None
        self._routes: dict[tuple, Route] = {}
        self._plans: dict[tuple[int, int], ClusterPlan] = {}
        self._round_deaths: list[int] = []
        self._round_spent = 0

    # -- energy -----------------------------------------------------------

    def _charge(self, node: int, amount: float) -> bool:
        b = self.batteries[node]
        if not b.alive:
            raise SimulationError(f"node {node} acted after death")
        before = b.residual_aj
        status = b.debit_aj(to_aj(amount))
        taken = before - b.residual_aj
        self.debited_aj += taken
        self.consumed_aj[node] += taken
        self._round_spent += taken
        if status is DebitStatus.DIED:
            self._round_deaths.append(node)
            if self.first_dead is None:
                self.first_dead = node
            self.ctx.alive[node] = False
            self._routes.clear()
            self._plans.clear()
            return False
        return True

    def _alive(self, node: int) -> bool:
        return self.batteries[node].alive

    # -- routing ----------------------------------------------------------

    def _route(self, origin: int, *, ch: int | None = None, sink: int | None = None) -> Route:
        key = (origin, ch, sink)
        r = self._routes.get(key)
        if r is None:
            r = route(origin, self.ctx, ch=ch, sink=sink, stuck_policy=self.config.stuck_policy)
            self._routes[key] = r
        return r

    def _deliver(self, r: Route, bits: int, c: Counters) -> bool:
        if r.stuck:
            c.stuck_events += 1
        for k, hop in enumerate(r.hops):
            if not self._alive(hop.sender) or (hop.receiver is not None and not self._alive(hop.receiver)):
                c.dropped_dead += 1
                return False
            tx, rx = hop_costs(bits, hop.distance, self.mac, self.params)
            if not self._charge(hop.sender, tx):
                c.dropped_dead += 1
                return False
            if hop.receiver is not None:
                if not self._charge(hop.receiver, rx):
                    c.dropped_dead += 1
                    return False
            if k > 0:
                c.relayed += 1
        return r.status is RouteStatus.DELIVERED

    # -- round ------------------------------------------------------------

    def _elect(self, c: Counters) -> list[ElectionOutcome]:
        outcomes = []
        model = self.config.election_model
        for cl in self.plan.clusters:
            alive = [i for i in cl.member_indices if self._alive(i)]
            if not alive:
                continue
            members = [(i, self.positions[i], self.batteries[i].residual) for i in alive]
            if all(e <= 0 for _, _, e in members):
                # nobody can pay for anything; the lowest index serves and dies
                outcomes.append(ElectionOutcome(cl.id, alive[0]))
                continue
            sink = self.plan.sinks[cl.target_sink_index]
            out = elect(cl.id, members, model, cl.center, sink, self.mode)
            if out.fallback_used:
                c.fallback_elections += 1
            outcomes.append(out)
        return outcomes

    def run_round(self) -> RoundReport:
        if not any(b.alive for b in self.batteries):
            raise SimulationError("no alive node left to run a round")
        self.round += 1
        self._round_deaths = []
        self._round_spent = 0
        c = Counters()
        outcomes = self._elect(c)
        if self.fast and self.first_dead is None and self._apply_plans(outcomes, c):
            return self._report(outcomes, c)
        clusters = self.plan.clusters
        active = []

        for out in outcomes:
            ch = out.winner
            if self.config.election_broadcast:
                members = [i for i in clusters[out.cluster_id].member_indices if self._alive(i)]
                ok = True
                for charge in election_broadcast(ch, members, self.positions, self.params, self.config.ctrl_bits):
                    if self._alive(charge.node) and not self._charge(charge.node, charge.amount):
                        if charge.node == ch:
                            ok = False
                            break
                if not ok:
                    continue
            active.append(out)

        intra_bits = intra_packet_bits()
        held = {}
        for out in active:
            ch = out.winner
            held[out.cluster_id] = 1 if self._alive(ch) else 0
            for m in clusters[out.cluster_id].member_indices:
                if m == ch or not self._alive(m):
                    continue
                if not self._alive(ch):
                    break
                c.intra_sent += 1
                if self._deliver(self._route(m, ch=ch), intra_bits, c):
                    c.intra_delivered += 1
                    held[out.cluster_id] += 1

        if self.params.e_da > 0:
            for out in active:
                ch = out.winner
                if self._alive(ch) and held[out.cluster_id]:
                    self._charge(ch, self.params.e_da * intra_bits * held[out.cluster_id])

        for out in active:
            ch = out.winner
            if not self._alive(ch) or not held[out.cluster_id]:
                continue
            sink = clusters[out.cluster_id].target_sink_index
            c.inter_sent += 1
            if self._deliver(self._route(ch, sink=sink), inter_packet_bits(held[out.cluster_id]), c):
                c.inter_delivered += 1

        return self._report(outcomes, c)

    def _report(self, outcomes, c: Counters) -> RoundReport:
        self.totals.add(c)
        return RoundReport(
            round=self.round,
            elections=outcomes,
            counters=c,
            energy_spent=self._round_spent / AJ_PER_J,
            deaths=list(self._round_deaths),
        )

    # -- death-free fast path ----------------------------------------------
    #
    # While nobody has died the alive set, and with it every route, is fixed,
    # so one cluster's whole round depends only on who its CH is. Those
    # charges are cached per (cluster, CH). A round in which every node can
    # cover its summed charges cannot kill anyone, and then the order of the
    # debits is irrelevant and they are applied at once. Any other round goes
    # through the exact sequential path.

    def _plan_cluster(self, cluster_id: int, ch: int) -> "ClusterPlan":
        key = (cluster_id, ch)
        plan = self._plans.get(key)
        if plan is not None:
            return plan
        charges: dict[int, int] = {}
        c = Counters()

        def add(node: int, amount: float) -> None:
            charges[node] = charges.get(node, 0) + to_aj(amount)

        members = self.plan.clusters[cluster_id].member_indices
        if self.config.election_broadcast:
            for charge in election_broadcast(ch, list(members), self.positions, self.params, self.config.ctrl_bits):
                add(charge.node, charge.amount)
        intra_bits = intra_packet_bits()
        held = 1
        for m in members:
            if m == ch:
                continue
            c.intra_sent += 1
            if self._walk(self._route(m, ch=ch), intra_bits, c, add):
                c.intra_delivered += 1
                held += 1
        if self.params.e_da > 0:
            add(ch, self.params.e_da * intra_bits * held)
        sink = self.plan.clusters[cluster_id].target_sink_index
        c.inter_sent += 1
        if self._walk(self._route(ch, sink=sink), inter_packet_bits(held), c, add):
            c.inter_delivered += 1
        plan = ClusterPlan(tuple(charges.items()), c)
        self._plans[key] = plan
        return plan

    def _walk(self, r: Route, bits: int, c: Counters, add) -> bool:
        if r.stuck:
            c.stuck_events += 1
        for k, hop in enumerate(r.hops):
            tx, rx = hop_costs(bits, hop.distance, self.mac, self.params)
            add(hop.sender, tx)
            if hop.receiver is not None:
                add(hop.receiver, rx)
            if k > 0:
                c.relayed += 1
        return r.status is RouteStatus.DELIVERED

    def _apply_plans(self, outcomes: list[ElectionOutcome], c: Counters) -> bool:
        plans = [self._plan_cluster(o.cluster_id, o.winner) for o in outcomes]
        total: dict[int, int] = {}
        for plan in plans:
            for node, aj in plan.charges:
                total[node] = total.get(node, 0) + aj
        batteries = self.batteries
        if any(batteries[n].residual_aj < aj for n, aj in total.items()):
            return False
        spent = 0
        for n, aj in total.items():
            batteries[n].residual_aj -= aj
            self.consumed_aj[n] += aj
            spent += aj
        self.debited_aj += spent
        self._round_spent += spent
        for plan in plans:
            c.add(plan.counters)
        return True

    def result(self, lifetime: int, truncated: bool) -> RunResult:
        return RunResult(
            config=self.config,
            lifetime_rounds=lifetime,
            first_dead_node=self.first_dead,
            truncated=truncated,
            rounds_executed=self.round,
            consumed=[a / AJ_PER_J for a in self.consumed_aj],
            counters=self.totals,
            total_debited_aj=self.debited_aj,
            initial_aj=self.initial_aj,
            residual_aj=sum(b.residual_aj for b in self.batteries),
        )


def run(
    config: RunConfig,
    deployment: Deployment | None = None,
    trace: Callable[[RoundReport], None] | None = None,
) -> RunResult:
    """Run rounds until the first node dies; lifetime counts the clean rounds."""
    sim = Simulation(config, deployment)
    for _ in range(config.max_rounds):
        report = sim.run_round()
        if trace is not None:
            trace(report)
        if report.deaths:
            return sim.result(sim.round - 1, truncated=False)
    return sim.result(config.max_rounds, truncated=True)

