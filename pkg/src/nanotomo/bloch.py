"""Driven, damped two-level dynamics in the rotating frame.

Bloch equations (drive axis azimuth ``phase``; ``phase=0`` drives along x)::

    dX/dt = -G2 X + D Y - W sin(phase) Z
    dY/dt = -G2 Y - D X + W cos(phase) Z
    dZ/dt = -G1 (Z - Zeq) + W sin(phase) X - W cos(phase) Y

with ``W`` the Rabi frequency and ``D`` the detuning. Populations use
``sigma_z = |1><1| - |0><0|`` so ``P1 = (1 + Z)/2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from .bath import DissipationRates
from .errors import DomainError, IntegrationError, InvariantError

NORM_TOL = 1e-9


@dataclass(frozen=True)
class DriveParams:
    """Rotating-frame drive. ``omega0`` is only needed for the RWA check."""

    Omega_R: float
    Delta: float = 0.0
    omega0: Optional[float] = None
    phase: float = 0.0

    def __post_init__(self):
        if not self.Omega_R >= 0:
            raise DomainError(f"Omega_R must be >= 0, got {self.Omega_R!r}")

    @property
    def omega_d(self) -> Optional[float]:
        return None if self.omega0 is None else self.omega0 - self.Delta

    @property
    def rwa_valid(self) -> Optional[bool]:
        if self.omega0 is None:
            return None
        return self.Omega_R < 0.1 * self.omega0 and abs(self.Delta) < 0.1 * self.omega0

    def off(self) -> "DriveParams":
        return DriveParams(0.0, self.Delta, self.omega0, self.phase)


@dataclass(frozen=True)
class BlochVector:
    X: float
    Y: float
    Z: float

    def __post_init__(self):
        if self.norm() > 1.0 + NORM_TOL:
            raise InvariantError(f"|B| = {self.norm()!r} exceeds 1")

    @classmethod
    def ground(cls) -> "BlochVector":
        return cls(0.0, 0.0, -1.0)

    @classmethod
    def from_array(cls, a) -> "BlochVector":
        return cls(float(a[0]), float(a[1]), float(a[2]))

    def as_array(self) -> np.ndarray:
        return np.array([self.X, self.Y, self.Z])

    def norm(self) -> float:
        return math.sqrt(self.X**2 + self.Y**2 + self.Z**2)

    @property
    def P1(self) -> float:
        return excited_population(self.Z)


@dataclass(frozen=True)
class TLSDensity:
    """Two-level density matrix; ``rho01 = <0|rho|1>``, ``rho10`` its conjugate."""

    rho00: float
    rho11: float
    rho01: complex

    def __post_init__(self):
        tol = 1e-12
        if abs(self.rho00 + self.rho11 - 1.0) > tol:
            raise InvariantError("trace must equal 1")
        if not (-tol <= self.rho00 <= 1 + tol and -tol <= self.rho11 <= 1 + tol):
            raise InvariantError("populations must lie in [0, 1]")
        if abs(self.rho01) ** 2 > self.rho00 * self.rho11 + 1e-12:
            raise InvariantError("coherence exceeds positivity bound |rho01|^2 <= rho00 rho11")

    @property
    def rho10(self) -> complex:
        return complex(self.rho01).conjugate()

    def matrix(self) -> np.ndarray:
        """2x2 matrix in the ordered basis (|0>, |1>)."""
        return np.array([[self.rho00, self.rho01], [self.rho10, self.rho11]], dtype=complex)


@dataclass(frozen=True)
class SimOptions:
    rel_tol: float = 1e-9
    abs_tol: float = 1e-9
    max_step: float = math.inf

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol"):
            v = getattr(self, name)
            if not 0 < v <= 1e-3:
                raise DomainError(f"{name} must lie in (0, 1e-3], got {v!r}")
        if not self.max_step > 0:
            raise DomainError("max_step must be positive")


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    Z: np.ndarray

    def __post_init__(self):
        for a in (self.t, self.X, self.Y, self.Z):
            a.setflags(write=False)

    @property
    def P1(self) -> np.ndarray:
        return excited_population(self.Z)

    def final(self) -> BlochVector:
        return BlochVector(float(self.X[-1]), float(self.Y[-1]), float(self.Z[-1]))


def excited_population(Z):
    return 0.5 * (1.0 + Z)


def bloch_to_density(b: BlochVector) -> TLSDensity:
    return TLSDensity(0.5 * (1.0 - b.Z), 0.5 * (1.0 + b.Z), 0.5 * complex(b.X, b.Y))


def density_to_bloch(rho: TLSDensity) -> BlochVector:
    c = complex(rho.rho01)
    return BlochVector(2.0 * c.real, 2.0 * c.imag, rho.rho11 - rho.rho00)


def _generator(drive: DriveParams, rates: DissipationRates):
    """Affine form ``dB/dt = M B + c`` of the Bloch equations."""
    w, d = drive.Omega_R, drive.Delta
    s, co = math.sin(drive.phase), math.cos(drive.phase)
    g1, g2 = rates.Gamma1, rates.Gamma2
    M = np.array(
        [
            [-g2, d, -w * s],
            [-d, -g2, w * co],
            [w * s, -w * co, -g1],
        ]
    )
    c = np.array([0.0, 0.0, g1 * rates.Z_eq])
    return M, c


@dataclass(frozen=True)
class BlochDerivative(BlochVector):
    """Rate of change of a Bloch vector, 1/s; exempt from the norm bound."""

    def __post_init__(self):
        pass


def bloch_rhs(state: BlochVector, drive: DriveParams, rates: DissipationRates) -> BlochDerivative:
    M, c = _generator(drive, rates)
    d = M @ state.as_array() + c
    return BlochDerivative(float(d[0]), float(d[1]), float(d[2]))


def integrate_bloch(
    initial: BlochVector,
    drive: DriveParams,
    rates: DissipationRates,
    t_grid,
    opts: SimOptions = SimOptions(),
) -> Trajectory:
    """Integrate the Bloch equations with an adaptive 8(5,3) Dormand-Prince pair.

    The solution is reported on ``t_grid`` through the integrator's dense output.
    """
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size == 0 or t[0] != 0.0:
        raise DomainError("t_grid must be a non-empty 1-D grid starting at 0")
    if np.any(np.diff(t) <= 0):
        raise DomainError("t_grid must be strictly increasing")
    y0 = initial.as_array()
    if t.size == 1:
        return Trajectory(t.copy(), y0[:1].copy(), y0[1:2].copy(), y0[2:].copy())

    M, c = _generator(drive, rates)
    sol = solve_ivp(
        lambda _t, y: M @ y + c,
        (0.0, t[-1]),
        y0,
        method="DOP853",
        t_eval=t,
        rtol=opts.rel_tol,
        atol=opts.abs_tol,
        max_step=opts.max_step,
    )
    if not sol.success:
        raise IntegrationError(sol.message, float(sol.t[-1]) if sol.t.size else 0.0)
    return Trajectory(sol.t, sol.y[0], sol.y[1], sol.y[2])


def propagate(b: BlochVector, drive: DriveParams, rates: DissipationRates, duration: float, opts: SimOptions = SimOptions()) -> BlochVector:
    """Final state after ``duration`` seconds of evolution."""
    if duration < 0:
        raise DomainError("duration must be non-negative")
    if duration == 0:
        return b
    return integrate_bloch(b, drive, rates, [0.0, duration], opts).final()


SINE_COEFFICIENTS = ("initial-conditions", "printed")


def rabi_population_analytic(Omega_R, Gamma1, Gamma2, t, sine_coefficient: str = "initial-conditions"):
    """On-resonance damped Rabi population for a start at the south pole, ``Zeq = -1``.

    ``P1 = P_inf [1 - exp(-lam t) (C(t) + k S(t))]`` with ``lam = (G1+G2)/2``,
    ``C = cos(Wd t)``, ``S = sin(Wd t)/Wd`` and ``Wd**2 = W**2 - (G1-G2)**2/4``.
    Negative ``Wd**2`` continues to cosh/sinh; small ``|Wd| t`` uses the series.

    ``sine_coefficient`` selects ``k``: ``"initial-conditions"`` gives
    ``k = (G1+G2)/2``, the value fixed by ``z(0) = dz/dt(0) = 0`` and the one
    that matches direct integration; ``"printed"`` gives ``k = (G1-G2)/2``.
    """
    if sine_coefficient not in SINE_COEFFICIENTS:
        raise ValueError(f"sine_coefficient must be one of {SINE_COEFFICIENTS}")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("t must be non-negative")
    p_inf = steady_state_population(Omega_R, Gamma1, Gamma2)
    lam = 0.5 * (Gamma1 + Gamma2)
    k = lam if sine_coefficient == "initial-conditions" else 0.5 * (Gamma1 - Gamma2)
    wd2 = Omega_R**2 - 0.25 * (Gamma1 - Gamma2) ** 2
    C, S = _oscillator_pair(wd2, t)
    return p_inf * (1.0 - np.exp(-lam * t) * (C + k * S))


def _oscillator_pair(wd2: float, t: np.ndarray):
    """``(cos(w t), sin(w t)/w)`` with ``w = sqrt(wd2)`` continued to ``wd2 <= 0``."""
    w = math.sqrt(abs(wd2))
    x = w * t
    small = x < 1e-4
    if wd2 > 0:
        C = np.cos(x)
        S = np.divide(np.sin(x), w, out=np.zeros_like(t), where=~small)
    else:
        C = np.cosh(x)
        S = np.divide(np.sinh(x), w, out=np.zeros_like(t), where=~small)
    t2 = t * t
    C = np.where(small, 1.0 - 0.5 * wd2 * t2, C)
    S = np.where(small, t * (1.0 - wd2 * t2 / 6.0), S)
    return C, S


def steady_state_population(Omega_R: float, Gamma1: float, Gamma2: float) -> float:
    den = Omega_R**2 + Gamma1 * Gamma2
    if den <= 0:
        raise DomainError("Omega_R**2 + Gamma1*Gamma2 must be positive")
    return Omega_R**2 / (2.0 * den)
