"""First-order radio energy model and battery accounting.

Battery charge is held as an integer count of attojoules so that every debit
is exact: the sum of debits always equals initial minus residual, and replays
are bit-identical regardless of summation order.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

AJ_PER_J = 10**18


class EnergyError(ValueError):
    pass


class DeadBatteryError(RuntimeError):
    """A debit was attempted on a node that already died."""


@dataclass(frozen=True)
class EnergyParams:
    e_elec: float = 50e-9  # J/bit
    eps_fs: float = 10e-12  # J/bit/m^2
    eps_mp: float = 0.0013e-12  # J/bit/m^4
    d0: float = 85.0  # m
    data_rate: float = 250_000.0  # bit/s
    initial_energy: float = 0.5  # J
    e_da: float = 0.0  # J/bit

    def __post_init__(self):
        for name in ("e_elec", "eps_fs", "eps_mp", "initial_energy", "e_da"):
            if getattr(self, name) < 0:
                raise EnergyError(f"{name} must be >= 0")
        if not self.d0 > 0:
            raise EnergyError("d0 must be positive")
        if not self.data_rate > 0:
            raise EnergyError("data_rate must be positive")


DEFAULT_PARAMS = EnergyParams()


def tx_energy(bits: float, d: float, p: EnergyParams = DEFAULT_PARAMS) -> float:
    if bits < 0 or d < 0:
        raise EnergyError(f"negative input: bits={bits}, d={d}")
    if d < p.d0:
        return bits * p.e_elec + bits * p.eps_fs * d * d
    return bits * p.e_elec + bits * p.eps_mp * d**4


def rx_energy(bits: float, p: EnergyParams = DEFAULT_PARAMS) -> float:
    if bits < 0:
        raise EnergyError(f"negative bit count {bits}")
    return bits * p.e_elec


def tx_time(bits: float, p: EnergyParams = DEFAULT_PARAMS) -> float:
    return bits / p.data_rate


def to_aj(joules: float) -> int:
    return round(joules * AJ_PER_J)


class DebitStatus(enum.Enum):
    OK = "ok"
    DIED = "died"


@dataclass
class Battery:
    residual_aj: int
    alive: bool = True

    @classmethod
    def charged(cls, joules: float) -> "Battery":
        return cls(to_aj(joules))

    @property
    def residual(self) -> float:
        return self.residual_aj / AJ_PER_J

    def debit(self, amount: float) -> DebitStatus:
        if amount < 0:
            raise EnergyError(f"negative debit {amount}")
        return self.debit_aj(to_aj(amount))

    def debit_aj(self, amount_aj: int) -> DebitStatus:
        """Pay ``amount_aj`` or die trying; an exact spend leaves the node alive."""
        if not self.alive:
            raise DeadBatteryError("debit on a dead battery")
        if self.residual_aj >= amount_aj:
            self.residual_aj -= amount_aj
            return DebitStatus.OK
        self.residual_aj = 0
        self.alive = False
        return DebitStatus.DIED
