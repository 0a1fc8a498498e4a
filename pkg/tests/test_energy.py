import math

import pytest
from hypothesis import given, strategies as st

from clusterwsn.energy import (
    Battery,
    DeadBatteryError,
    DebitStatus,
    EnergyError,
    EnergyParams,
    rx_energy,
    tx_energy,
    tx_time,
)

P = EnergyParams()


def rel(a, b):
    return abs(a - b) / abs(b)


@pytest.mark.parametrize(
    "bits, d, expected",
    [
        (416, 0.0, 20.8e-6),  # 416 * 50 nJ
        (416, 50.0, 31.2e-6),  # 416 * (50 + 25) nJ, free-space branch
        (416, 100.0, 74.88e-6),  # 416 * (50 + 130) nJ, multipath branch
    ],
)
def test_tx_energy_hand_values(bits, d, expected):
    assert rel(tx_energy(bits, d, P), expected) < 1e-12


@pytest.mark.parametrize("bits, expected", [(0, 0.0), (416, 20.8e-6), (4208, 210.4e-6)])
def test_rx_energy_hand_values(bits, expected):
    got = rx_energy(bits, P)
    assert got == expected if expected == 0 else rel(got, expected) < 1e-12


def test_threshold_discontinuity():
    below = tx_energy(1, math.nextafter(85.0, 0.0), P) - P.e_elec
    at = tx_energy(1, 85.0, P) - P.e_elec
    assert rel(below, 72.25e-9) < 1e-9
    assert rel(at, 67.86e-9) < 1e-3
    assert at < below


@pytest.mark.parametrize("bits, seconds", [(0, 0.0), (416, 1664e-6), (4208, 16.832e-3)])
def test_tx_time(bits, seconds):
    assert tx_time(bits, P) == pytest.approx(seconds, rel=1e-12)


def test_negative_inputs_rejected():
    with pytest.raises(EnergyError):
        tx_energy(-1, 10)
    with pytest.raises(EnergyError):
        tx_energy(10, -1)
    with pytest.raises(EnergyError):
        rx_energy(-5)


def test_params_validation():
    with pytest.raises(EnergyError):
        EnergyParams(d0=0)
    with pytest.raises(EnergyError):
        EnergyParams(data_rate=0)
    with pytest.raises(EnergyError):
        EnergyParams(e_elec=-1)


@given(st.integers(0, 10_000), st.floats(0, 500), st.integers(1, 5))
def test_tx_linear_in_bits(bits, d, k):
    assert tx_energy(k * bits, d) == pytest.approx(k * tx_energy(bits, d), rel=1e-12)


@given(st.integers(0, 10_000), st.floats(0, 1000))
def test_tx_at_least_rx(bits, d):
    assert tx_energy(bits, d) >= rx_energy(bits)


@given(st.floats(0, 84.9), st.floats(0, 84.9))
def test_tx_monotone_free_space(a, b):
    lo, hi = sorted((a, b))
    assert tx_energy(416, lo) <= tx_energy(416, hi)


@given(st.floats(85, 1000), st.floats(85, 1000))
def test_tx_monotone_multipath(a, b):
    lo, hi = sorted((a, b))
    assert tx_energy(416, lo) <= tx_energy(416, hi)


class TestBattery:
    def test_subtraction(self):
        b = Battery.charged(1.0)
        assert b.debit(0.3) is DebitStatus.OK
        assert b.residual == pytest.approx(0.7, abs=1e-18)
        assert b.alive

    def test_insufficient_dies(self):
        b = Battery.charged(0.2)
        assert b.debit(0.3) is DebitStatus.DIED
        assert b.residual == 0 and not b.alive

    def test_exact_spend_survives(self):
        b = Battery.charged(0.3)
        assert b.debit(0.3) is DebitStatus.OK
        assert b.residual == 0 and b.alive

    def test_dead_battery_debit_is_a_bug(self):
        b = Battery.charged(0.1)
        b.debit(1.0)
        with pytest.raises(DeadBatteryError):
            b.debit(0.0)

    def test_negative_debit(self):
        with pytest.raises(EnergyError):
            Battery.charged(1.0).debit(-0.1)

    @given(st.lists(st.floats(0, 1e-3), max_size=200))
    def test_conservation_is_exact(self, amounts):
        b = Battery.charged(0.05)
        start = b.residual_aj
        taken = 0
        for a in amounts:
            if not b.alive:
                break
            before = b.residual_aj
            b.debit(a)
            taken += before - b.residual_aj
        assert taken == start - b.residual_aj
