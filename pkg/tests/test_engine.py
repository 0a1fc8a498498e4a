import math
from fractions import Fraction

import pytest

from clusterwsn.election import ElectionModel
from clusterwsn.energy import DEFAULT_PARAMS, rx_energy, tx_energy
from clusterwsn.engine import (
    ConfigError,
    MacOverhead,
    RunConfig,
    Simulation,
    election_broadcast,
    hop_costs,
    mac_bits,
    run,
)
from clusterwsn.topology import ClusterSizingModel, Deployment, Point, SinkPlacementModel


def single_node_rounds(initial, d, bits):
    """Rounds a lone CH survives sending one aggregate of ``bits`` per round.

    Worked out from the radio law in exact rational arithmetic; no engine code.
    """
    e_elec = Fraction(50, 10**9)
    if d < 85:
        per_bit = e_elec + Fraction(10, 10**12) * Fraction(d) ** 2
    else:
        per_bit = e_elec + Fraction(13, 10**16) * Fraction(d) ** 4
    per_round = per_bit * bits
    return math.floor(Fraction(initial) / per_round)


def lone(initial, y=50.0, **kw):
    cfg = RunConfig(node_count=1, initial_energy=initial, **kw)
    dep = Deployment(500.0, (Point(250.0, y),), 0)
    return cfg, dep


class TestSingleNode:
    def test_oracle_value(self):
        assert single_node_rounds(Fraction(1, 100), 50, 48 + 416) == 287

    def test_lifetime_287(self):
        cfg, dep = lone(0.01)
        res = run(cfg, dep)
        assert res.lifetime_rounds == 287
        assert res.first_dead_node == 0
        assert not res.truncated
        assert res.rounds_executed == 288

    @pytest.mark.parametrize("initial, y", [(0.02, 50.0), (0.005, 80.0), (0.01, 120.0), (0.003, 10.0)])
    def test_matches_oracle(self, initial, y):
        cfg, dep = lone(initial, y=y)
        assert run(cfg, dep).lifetime_rounds == single_node_rounds(Fraction(initial), y, 464)

    def test_zero_energy_means_zero_lifetime(self):
        cfg, dep = lone(0.0)
        res = run(cfg, dep)
        assert res.lifetime_rounds == 0
        assert res.first_dead_node == 0

    def test_doubling_energy_roughly_doubles_lifetime(self):
        a = run(*lone(0.01)).lifetime_rounds
        b = run(*lone(0.02)).lifetime_rounds
        assert b in (2 * a, 2 * a + 1)


class TestHelpers:
    def test_broadcast_charges(self):
        pos = [(0, 0), (30, 40), (60, 80)]
        got = election_broadcast(0, [0, 1, 2], pos, DEFAULT_PARAMS, 128)
        assert got[0].node == 0
        assert got[0].amount == pytest.approx(tx_energy(128, 100.0, DEFAULT_PARAMS))
        assert [(c.node, c.amount) for c in got[1:]] == [
            (1, pytest.approx(128 * 50e-9)),
            (2, pytest.approx(128 * 50e-9)),
        ]

    def test_broadcast_skipped_for_lone_ch(self):
        assert election_broadcast(0, [0], [(0, 0)], DEFAULT_PARAMS) == []

    def test_mac_bits(self):
        assert mac_bits(RunConfig()) == MacOverhead()
        assert mac_bits(RunConfig(mac_overhead=True)) == MacOverhead(160, 112, 112)

    def test_hop_costs(self):
        p = DEFAULT_PARAMS
        s, r = hop_costs(416, 50.0, MacOverhead(), p)
        assert s == pytest.approx(tx_energy(416, 50, p))
        assert r == pytest.approx(rx_energy(416, p))
        s, r = hop_costs(416, 50.0, MacOverhead(160, 112, 112), p)
        assert s == pytest.approx(tx_energy(576, 50, p) + rx_energy(224, p))
        assert r == pytest.approx(rx_energy(576, p) + tx_energy(224, 50, p))


class TestConfig:
    def test_center_needs_one_sink(self):
        with pytest.raises(ConfigError):
            RunConfig(sink_placement=SinkPlacementModel.CENTER, sink_count=4)

    @pytest.mark.parametrize(
        "kw",
        [{"node_count": 0}, {"sink_count": 0}, {"tier_count": 0}, {"max_rounds": 0}, {"coverage_radius": 0}, {"seed": -1}],
    )
    def test_rejects(self, kw):
        with pytest.raises(ConfigError):
            RunConfig(**kw)

    def test_bad_radio_constant(self):
        with pytest.raises(ValueError):
            RunConfig(e_elec=-1.0)


SMALL = RunConfig(node_count=80, initial_energy=0.05)


class TestRuns:
    def test_deterministic(self):
        a, b = run(SMALL.replace(seed=3)), run(SMALL.replace(seed=3))
        assert a == b

    def test_seed_matters(self):
        lifetimes = {run(SMALL.replace(seed=s)).lifetime_rounds for s in range(4)}
        assert len(lifetimes) > 1

    @pytest.mark.parametrize(
        "cfg",
        [
            SMALL,
            SMALL.replace(sink_placement=SinkPlacementModel.AROUND, sink_count=4, e_da=5e-9),
            SMALL.replace(sink_placement=SinkPlacementModel.CENTER, mac_overhead=True),
            SMALL.replace(election_model=ElectionModel.TOWARD_SINK_CONSTRAINED, coverage_radius=60.0),
            SMALL.replace(election_broadcast=False, tier_count=4, sizing=ClusterSizingModel.EQUAL),
        ],
    )
    def test_ledger_balances(self, cfg):
        res = run(cfg)
        assert res.ledger_balanced
        assert res.total_debited_aj > 0
        assert sum(res.consumed) == pytest.approx(res.total_energy)

    def test_mac_overhead_never_helps(self):
        for seed in range(3):
            base = SMALL.replace(seed=seed)
            assert run(base.replace(mac_overhead=True)).lifetime_rounds <= run(base).lifetime_rounds

    def test_truncation(self):
        res = run(SMALL.replace(max_rounds=5))
        assert res.truncated and res.lifetime_rounds == 5 and res.first_dead_node is None

    def test_lifetime_is_rounds_before_first_death(self):
        reports = []
        res = run(SMALL.replace(seed=1), trace=reports.append)
        assert [r.round for r in reports] == list(range(1, res.lifetime_rounds + 2))
        assert all(not r.deaths for r in reports[:-1])
        assert res.first_dead_node in reports[-1].deaths

    def test_counters_are_consistent(self):
        reports = []
        res = run(SMALL.replace(seed=2), trace=reports.append)
        c = res.counters
        assert c.intra_delivered <= c.intra_sent
        assert c.inter_delivered <= c.inter_sent
        assert c.intra_sent == sum(r.counters.intra_sent for r in reports)
        # one CH per non-empty cluster in the first round
        sim = Simulation(SMALL.replace(seed=2))
        occupied = sum(1 for cl in sim.plan.clusters if cl.member_indices)
        assert len(reports[0].elections) == occupied

    def test_first_round_all_packets_delivered(self):
        reports = []
        run(SMALL.replace(seed=0), trace=reports.append)
        first = reports[0].counters
        assert first.intra_sent == first.intra_delivered == SMALL.node_count - len(reports[0].elections)
        assert first.inter_delivered == first.inter_sent == len(reports[0].elections)

    def test_drop_policy_runs(self):
        from clusterwsn.routing import StuckPolicy

        res = run(SMALL.replace(stuck_policy=StuckPolicy.DROP, coverage_radius=40.0))
        assert res.ledger_balanced


def _rounds(cfg, fast):
    sim = Simulation(cfg, fast=fast)
    records = []
    while True:
        rep = sim.run_round()
        records.append(rep.to_record())
        if rep.deaths:
            break
    return sim.result(sim.round - 1, False), records


@pytest.mark.parametrize(
    "cfg",
    [
        SMALL,
        SMALL.replace(seed=4, sink_placement=SinkPlacementModel.AROUND, sink_count=4, e_da=5e-9, mac_overhead=True),
        SMALL.replace(seed=5, sink_placement=SinkPlacementModel.CENTER, election_model=ElectionModel.TOWARD_SINK_CONSTRAINED),
    ],
)
def test_cached_rounds_match_sequential_rounds(cfg):
    from clusterwsn.routing import StuckPolicy

    for c in (cfg, cfg.replace(stuck_policy=StuckPolicy.DROP, coverage_radius=50.0)):
        assert _rounds(c, True) == _rounds(c, False)
