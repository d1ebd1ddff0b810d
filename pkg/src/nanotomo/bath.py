"""Ohmic bath: transition rates, coherence times and thermal inversion."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .constants import HBAR, K_B
from .errors import DomainError


@dataclass(frozen=True)
class OhmicBath:
    alpha: float
    omega_c: float
    T: float

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha >= 0):
            raise DomainError(f"alpha must be >= 0, got {self.alpha!r}")
        if not (math.isfinite(self.omega_c) and self.omega_c > 0):
            raise DomainError(f"omega_c must be > 0, got {self.omega_c!r}")
        if not (math.isfinite(self.T) and self.T > 0):
            raise DomainError(f"T must be > 0, got {self.T!r}")


@dataclass(frozen=True)
class DissipationRates:
    """Rates in 1/s, times in s. ``T1``/``T2`` are ``inf`` for vanishing rates."""

    gamma_up: float
    gamma_down: float
    gamma_phi: float
    Gamma1: float
    Gamma2: float
    T1: float
    T2: float
    Z_eq: float

    @classmethod
    def from_rates(cls, Gamma1: float, Gamma2: float, Z_eq: float = -1.0) -> "DissipationRates":
        """Build the bundle from the Bloch decay rates directly.

        The up/down split follows from ``Z_eq = (up - down)/(up + down)`` and
        the dephasing rate from ``Gamma2 = Gamma1/2 + 2 gamma_phi``.
        """
        if Gamma1 < 0 or Gamma2 < 0:
            raise DomainError("decay rates must be non-negative")
        if not -1.0 <= Z_eq <= 1.0:
            raise DomainError(f"Z_eq must lie in [-1, 1], got {Z_eq!r}")
        return cls(
            gamma_up=0.5 * Gamma1 * (1.0 + Z_eq),
            gamma_down=0.5 * Gamma1 * (1.0 - Z_eq),
            gamma_phi=0.5 * (Gamma2 - 0.5 * Gamma1),
            Gamma1=Gamma1,
            Gamma2=Gamma2,
            T1=_inverse(Gamma1),
            T2=_inverse(Gamma2),
            Z_eq=Z_eq,
        )

    @classmethod
    def from_times(cls, T1: float, T2: float, Z_eq: float = -1.0) -> "DissipationRates":
        return cls.from_rates(_inverse(T1), _inverse(T2), Z_eq)

    def to_dict(self) -> dict:
        return asdict(self)


def _inverse(x: float) -> float:
    return math.inf if x == 0 else (0.0 if math.isinf(x) else 1.0 / x)


def spectral_density(bath: OhmicBath, omega: float) -> float:
    """``J(omega) = 2 alpha omega exp(-omega/omega_c)``."""
    if omega < 0:
        raise DomainError(f"omega must be >= 0, got {omega!r}")
    return 2.0 * bath.alpha * omega * math.exp(-omega / bath.omega_c)


def _hbar_omega_over_kT(bath: OhmicBath, omega: float) -> float:
    return HBAR * omega / (K_B * bath.T)


def thermal_occupation(bath: OhmicBath, omega: float) -> float:
    """Bose-Einstein occupation, evaluated with ``expm1`` for accuracy."""
    if not omega > 0:
        raise DomainError(f"omega must be > 0, got {omega!r}")
    x = _hbar_omega_over_kT(bath, omega)
    if x > 700.0:
        return math.exp(-x)
    return 1.0 / math.expm1(x)


def thermal_inversion(bath: OhmicBath, omega0: float) -> float:
    return -math.tanh(0.5 * _hbar_omega_over_kT(bath, omega0))


def pure_dephasing_rate(bath: OhmicBath) -> float:
    """Ohmic low-frequency estimate ``2 pi alpha k_B T / hbar``."""
    return 2.0 * math.pi * bath.alpha * K_B * bath.T / HBAR


def dissipation_rates(bath: OhmicBath, omega0: float, include_pure_dephasing: bool = False) -> DissipationRates:
    if not omega0 > 0:
        raise DomainError(f"omega0 must be > 0, got {omega0!r}")
    j = spectral_density(bath, omega0)
    n = thermal_occupation(bath, omega0)
    up = 2.0 * math.pi * j * n
    down = 2.0 * math.pi * j * (n + 1.0)
    phi = pure_dephasing_rate(bath) if include_pure_dephasing else 0.0
    g1 = up + down
    g2 = 0.5 * g1 + 2.0 * phi
    return DissipationRates(
        gamma_up=up,
        gamma_down=down,
        gamma_phi=phi,
        Gamma1=g1,
        Gamma2=g2,
        T1=_inverse(g1),
        T2=_inverse(g2),
        Z_eq=thermal_inversion(bath, omega0),
    )
