"""Wigner function of the decohering two-level superposition and displaced-parity tomography.

Phase-space coordinates are ``alpha = (x + i p)/sqrt(2)``; Wigner values are
densities in the alpha plane, so a map integrates to one over ``d Re(alpha) d Im(alpha)``.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._rng import stream
from .bloch import TLSDensity
from .constants import HBAR
from .errors import DomainError, InvariantError

W_BOUND = 2.0 / math.pi
# Band of parity windows expected for suspended nanotubes, s.
T_PI_SANITY_BAND = (1e-6, 20e-6)
MARGIN = 10.0


@dataclass(frozen=True)
class PhaseSpacePoint:
    alpha: complex

    @classmethod
    def polar(cls, r: float, theta: float) -> "PhaseSpacePoint":
        if r < 0:
            raise DomainError("r must be non-negative")
        return cls(complex(r * math.cos(theta), r * math.sin(theta)))

    @property
    def r(self) -> float:
        return abs(self.alpha)

    @property
    def theta(self) -> float:
        return math.atan2(self.alpha.imag, self.alpha.real) % (2.0 * math.pi)


@dataclass(frozen=True)
class WignerGrid:
    """Square uniform map; ``values[i, j]`` sits at ``axis[j] + 1j*axis[i]``."""

    extent: float
    n_points: int
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (self.n_points, self.n_points):
            raise ValueError("values must be n_points x n_points")
        if np.iscomplexobj(self.values):
            raise ValueError("Wigner values must be real")

    @property
    def axis(self) -> np.ndarray:
        return grid_axis(self.extent, self.n_points)

    @property
    def cell_area(self) -> float:
        h = 2.0 * self.extent / (self.n_points - 1)
        return h * h

    def alphas(self) -> np.ndarray:
        return grid_alphas(self.extent, self.n_points)

    def integral(self) -> float:
        return float(self.values.sum() * self.cell_area)


def grid_axis(extent: float, n_points: int) -> np.ndarray:
    if not extent > 0 or n_points < 2:
        raise DomainError("grid needs extent > 0 and at least 2 points per axis")
    return np.linspace(-extent, extent, n_points)


def grid_alphas(extent: float, n_points: int) -> np.ndarray:
    ax = grid_axis(extent, n_points)
    return ax[None, :] + 1j * ax[:, None]


@dataclass(frozen=True)
class DisplacementPulse:
    F0: float
    t_d: float
    phi_d: float = 0.0

    def __post_init__(self):
        if self.F0 < 0 or self.t_d < 0:
            raise DomainError("F0 and t_d must be non-negative")


@dataclass(frozen=True)
class ParityMapConfig:
    """Number-dependent phase rate ``chi`` (rad/s); the window defaults to ``pi/chi``."""

    chi: float
    t_pi: Optional[float] = None

    def __post_init__(self):
        if not self.chi > 0:
            raise DomainError("chi must be positive")
        if self.t_pi is None:
            object.__setattr__(self, "t_pi", math.pi / self.chi)
        elif not math.isclose(self.t_pi, math.pi / self.chi, rel_tol=1e-12):
            raise DomainError("t_pi must equal pi/chi")

    def violations(self, omega0: float, T2: float) -> list[str]:
        out = []
        period = 2.0 * math.pi / omega0
        if self.t_pi < MARGIN * period:
            out.append(f"t_pi={self.t_pi:.3e} s is not >> mode period {period:.3e} s (need factor {MARGIN:g})")
        if self.t_pi > T2 / MARGIN:
            out.append(f"t_pi={self.t_pi:.3e} s is not << T2={T2:.3e} s (need factor {MARGIN:g})")
        return out

    def valid(self, omega0: float, T2: float) -> bool:
        return not self.violations(omega0, T2)

    def check(self, omega0: float, T2: float) -> None:
        """Warn for timing violations and for windows outside the expected band."""
        for msg in self.violations(omega0, T2):
            warnings.warn(msg, stacklevel=2)
        lo, hi = T_PI_SANITY_BAND
        if not lo <= self.t_pi <= hi:
            warnings.warn(f"t_pi={self.t_pi:.3e} s outside the typical {lo:g}-{hi:g} s band", stacklevel=2)


@dataclass(frozen=True)
class NegativityMetrics:
    min_value: float
    negative_volume: float


def superposition_density() -> TLSDensity:
    return TLSDensity(0.5, 0.5, 0.5 + 0j)


def decohered_density(t: float, T1: float, T2: float, omega0: float, rho_initial: TLSDensity) -> TLSDensity:
    """Cold-bath relaxation: populations decay at ``1/T1``, coherence at ``1/T2`` while rotating at ``omega0``."""
    if t < 0:
        raise DomainError("t must be non-negative")
    if t == 0:
        return rho_initial
    rho11 = rho_initial.rho11 * math.exp(-t / T1)
    coh = complex(rho_initial.rho01) * math.exp(-t / T2) * complex(math.cos(omega0 * t), -math.sin(omega0 * t))
    return TLSDensity(1.0 - rho11, rho11, coh)


def wigner_from_density(rho: TLSDensity, alpha, visibility: float = 1.0):
    """``(2/pi) e^{-2|a|^2} [rho00 + rho11 (4|a|^2 - 1) + 4 Re(a rho01)]``.

    ``rho01 = <0|rho|1>``; the cross term equals ``4 Re(conj(a) <1|rho|0>)``.
    ``visibility`` scales the coherence term only.
    """
    a = np.asarray(alpha, dtype=complex)
    r2 = (a * a.conj()).real
    cross = 4.0 * visibility * (a * complex(rho.rho01)).real
    w = W_BOUND * np.exp(-2.0 * r2) * (rho.rho00 + rho.rho11 * (4.0 * r2 - 1.0) + cross)
    return float(w) if w.ndim == 0 else w


def wigner_superposition(r, theta, t, T1, T2, omega0):
    """Time-dependent Wigner function of the relaxing equal superposition."""
    r = np.asarray(r, dtype=float)
    P = 0.5 * math.exp(-t / T1)
    val = W_BOUND * np.exp(-2.0 * r * r) * (
        (1.0 - P) + P * (4.0 * r * r - 1.0) + 2.0 * r * math.exp(-t / T2) * np.cos(np.asarray(theta) - omega0 * t)
    )
    return float(val) if np.ndim(val) == 0 else val


def displacement_amplitude(pulse: DisplacementPulse, m_eff: float, omega0: float) -> complex:
    """``alpha = F0 t_d / sqrt(2 m_eff hbar omega0) * exp(i phi_d)``."""
    if not (m_eff > 0 and omega0 > 0):
        raise DomainError("m_eff and omega0 must be positive")
    mag = pulse.F0 * pulse.t_d / math.sqrt(2.0 * m_eff * HBAR * omega0)
    return complex(mag * math.cos(pulse.phi_d), mag * math.sin(pulse.phi_d))


def displaced_parity_probability(W):
    """Excited-state probability ``(1 - (pi/2) W)/2`` read out after the parity map."""
    W = np.asarray(W, dtype=float)
    if np.any(np.abs(W) > W_BOUND * (1.0 + 1e-12)):
        raise DomainError("|W| exceeds 2/pi; input is not a physical Wigner value")
    p = 0.5 * (1.0 - 0.5 * math.pi * W)
    return float(p) if p.ndim == 0 else p


def wigner_from_parity_probability(P1):
    P1 = np.asarray(P1, dtype=float)
    w = (1.0 - 2.0 * P1) / (0.5 * math.pi)
    return float(w) if w.ndim == 0 else w


def wigner_grid(rho: TLSDensity, extent: float = 3.0, n_points: int = 201, visibility: float = 1.0) -> WignerGrid:
    return WignerGrid(extent, n_points, wigner_from_density(rho, grid_alphas(extent, n_points), visibility))


@dataclass(frozen=True)
class TomographyResult:
    ideal: WignerGrid
    sampled: WignerGrid
    p1_sampled: np.ndarray
    shots: int


def tomography_sweep(
    rho: TLSDensity,
    parity: ParityMapConfig,
    omega0: float,
    T2: float,
    shots: int,
    seed: int,
    extent: float = 3.0,
    n_points: int = 201,
    apply_visibility: bool = False,
    workers: int = 1,
) -> TomographyResult:
    """Displaced-parity sampling of ``rho`` on a square grid.

    Each cell's displaced parity is taken from the closed-form Wigner function
    at the displaced argument, converted to an excited-state probability,
    sampled with ``shots`` binomial trials from the cell's own random stream,
    and inverted back to a Wigner estimate. Cell ``k`` (row-major) always
    draws from ``stream(seed, k)``, so ``workers`` does not change the result.
    """
    bad = parity.violations(omega0, T2)
    if bad:
        raise DomainError("invalid parity window: " + "; ".join(bad))
    if shots < 1:
        raise DomainError("shots must be >= 1")
    vis = math.exp(-parity.t_pi / T2) if apply_visibility else 1.0
    ideal = wigner_grid(rho, extent, n_points, vis)
    p1 = displaced_parity_probability(ideal.values)
    flat = p1.ravel()
    counts = np.empty(flat.size, dtype=np.int64)

    def run(rows):
        for k in range(rows.start * n_points, rows.stop * n_points):
            counts[k] = stream(seed, k).binomial(shots, min(max(flat[k], 0.0), 1.0))

    bounds = np.linspace(0, n_points, max(1, workers) + 1).astype(int)
    chunks = [range(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    if workers <= 1:
        for ch in chunks:
            run(ch)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, chunks))

    p_hat = (counts / shots).reshape(n_points, n_points)
    sampled = WignerGrid(extent, n_points, wigner_from_parity_probability(p_hat))
    return TomographyResult(ideal, sampled, p_hat, shots)


def negativity_metrics(grid: WignerGrid) -> NegativityMetrics:
    v = grid.values
    neg = v[v < 0]
    return NegativityMetrics(float(v.min()), abs(float(neg.sum() * grid.cell_area)))


def check_bounded(values) -> None:
    if np.any(np.abs(values) > W_BOUND * (1.0 + 1e-12)):
        raise InvariantError("Wigner values exceed 2/pi")
