"""Mechanical pulse sequences and Ramsey fringes.

Pulse phases are measured relative to the first pi/2 pulse of a Ramsey
sequence: a pi/2 rotation with ``phase=0`` takes the ground state (0, 0, -1)
to (1, 0, 0), and a second pi/2 rotation with phase ``phi0`` maps the
equatorial components to ``Z = X cos(phi0) + Y sin(phi0)``. In terms of the
drive-axis azimuth used by :mod:`nanotomo.bloch` this is ``phase + pi/2``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .bath import DissipationRates
from .bloch import BlochVector, DriveParams, SimOptions, propagate
from .errors import DomainError


@dataclass(frozen=True)
class Rotation:
    """Resonant rotation by ``angle``; ``duration=None`` means ``angle/Omega_R``."""

    angle: float
    phase: float = 0.0
    duration: Optional[float] = None


@dataclass(frozen=True)
class FreeEvolution:
    duration: float


@dataclass(frozen=True)
class Displacement:
    alpha: complex


@dataclass(frozen=True)
class ParityWindow:
    duration: float


PulseElement = Union[Rotation, FreeEvolution, Displacement, ParityWindow]


@dataclass(frozen=True)
class RamseyConfig:
    Delta: float
    T2: float
    phi0: float = 0.0
    tau_grid: Sequence[float] = field(default_factory=tuple)

    def __post_init__(self):
        if not self.T2 > 0:
            raise DomainError("T2 must be positive")
        tau = np.asarray(self.tau_grid, dtype=float)
        if tau.size and (np.any(tau < 0) or np.any(np.diff(tau) <= 0)):
            raise DomainError("tau_grid must be non-negative and strictly increasing")


def drive_azimuth(phase: float) -> float:
    return phase + 0.5 * math.pi


def rotate(b: BlochVector, angle: float, phase: float = 0.0) -> BlochVector:
    """Instantaneous rotation generated by the Bloch equations with the drive on.

    The equations turn the state by ``-angle`` about the unit axis at azimuth
    ``drive_azimuth(phase)`` (Rodrigues formula).
    """
    a = drive_azimuth(phase)
    n = np.array([math.cos(a), math.sin(a), 0.0])
    v = b.as_array()
    th = -angle
    out = v * math.cos(th) + np.cross(n, v) * math.sin(th) + n * (n @ v) * (1.0 - math.cos(th))
    return BlochVector.from_array(out)


def rotate_pi_half(b: BlochVector, phase: float = 0.0) -> BlochVector:
    return rotate(b, 0.5 * math.pi, phase)


def free_evolution(b: BlochVector, Delta: float, rates: DissipationRates, tau: float) -> BlochVector:
    """Closed-form drive-off evolution.

    The transverse part precesses as ``dX/dt = Delta Y``, ``dY/dt = -Delta X``
    and decays at ``Gamma2``; ``Z`` relaxes toward ``Z_eq`` at ``Gamma1``.
    """
    if tau < 0:
        raise DomainError("tau must be non-negative")
    if tau == 0:
        return b
    e2 = math.exp(-rates.Gamma2 * tau)
    c, s = math.cos(Delta * tau), math.sin(Delta * tau)
    X = e2 * (b.X * c + b.Y * s)
    Y = e2 * (b.Y * c - b.X * s)
    Z = rates.Z_eq + (b.Z - rates.Z_eq) * math.exp(-rates.Gamma1 * tau)
    return BlochVector(X, Y, Z)


def ramsey_probability_analytic(cfg: RamseyConfig, tau):
    """``P1(tau) = (1 + exp(-tau/T2) cos(Delta tau + phi0)) / 2``."""
    tau = np.asarray(tau, dtype=float)
    return 0.5 * (1.0 + np.exp(-tau / cfg.T2) * np.cos(cfg.Delta * tau + cfg.phi0))


def ramsey_sequence(tau: float, phi0: float = 0.0) -> list[PulseElement]:
    return [Rotation(0.5 * math.pi), FreeEvolution(tau), Rotation(0.5 * math.pi, phi0)]


def parity_sequence(t_pi: float, alpha: complex = 0j) -> list[PulseElement]:
    """Displacement followed by the {pi/2, t_pi, -pi/2} parity map."""
    return [
        Displacement(alpha),
        Rotation(0.5 * math.pi),
        ParityWindow(t_pi),
        Rotation(0.5 * math.pi, math.pi),
    ]


def simulate_ramsey_sequence(
    seq: Sequence[PulseElement],
    drive: DriveParams,
    rates: DissipationRates,
    opts: SimOptions = SimOptions(),
    initial: BlochVector = BlochVector(0.0, 0.0, -1.0),
) -> float:
    """Excited-state probability after running ``seq`` from ``initial``.

    Rotations are integrated with the drive on (finite duration
    ``angle/Omega_R`` unless given); a rotation with ``duration=0`` is applied
    instantaneously. Free evolution and parity windows use the closed form.
    Displacements act on the oscillator, not on the Bloch vector, and are
    rejected here; see :func:`nanotomo.wigner.tomography_sweep`.
    """
    b = initial
    for el in seq:
        if isinstance(el, Rotation):
            duration = el.duration
            if duration is None:
                if drive.Omega_R <= 0:
                    raise DomainError("finite rotations need Omega_R > 0")
                duration = el.angle / drive.Omega_R
            if duration == 0:
                b = rotate(b, el.angle, el.phase)
            else:
                w = el.angle / duration
                on = DriveParams(w, drive.Delta, drive.omega0, drive_azimuth(el.phase))
                b = propagate(b, on, rates, duration, opts)
        elif isinstance(el, (FreeEvolution, ParityWindow)):
            b = free_evolution(b, drive.Delta, rates, el.duration)
        elif isinstance(el, Displacement):
            raise DomainError("displacements cannot be represented on the two-level Bloch vector")
        else:
            raise TypeError(f"unknown pulse element {el!r}")
    return b.P1


def ramsey_fringes(tau_grid, Delta: float, phi0: float, Omega_R: float, rates: DissipationRates, opts: SimOptions = SimOptions()):
    """Analytic and finite-pulse fringes on ``tau_grid``.

    ``tau`` is the free-evolution interval between the end of the first pulse
    and the start of the second; pulses last ``pi/(2 Omega_R)`` each.
    """
    tau = np.asarray(tau_grid, dtype=float)
    cfg = RamseyConfig(Delta, rates.T2, phi0, tuple(tau))
    analytic = ramsey_probability_analytic(cfg, tau)
    drive = DriveParams(Omega_R, Delta)
    simulated = np.array([simulate_ramsey_sequence(ramsey_sequence(t, phi0), drive, rates, opts) for t in tau])
    return analytic, simulated


def sequence_to_json(seq: Sequence[PulseElement]) -> str:
    out = []
    for el in seq:
        if isinstance(el, Rotation):
            out.append({"type": "rotation", "angle": el.angle, "phase": el.phase, "duration": el.duration})
        elif isinstance(el, FreeEvolution):
            out.append({"type": "free", "duration": el.duration})
        elif isinstance(el, Displacement):
            a = complex(el.alpha)
            out.append({"type": "displacement", "re": a.real, "im": a.imag})
        elif isinstance(el, ParityWindow):
            out.append({"type": "parity", "duration": el.duration})
        else:
            raise TypeError(f"unknown pulse element {el!r}")
    return json.dumps(out)


def sequence_from_json(text: str) -> list[PulseElement]:
    seq = []
    for i, obj in enumerate(json.loads(text)):
        kind = obj.get("type")
        try:
            if kind == "rotation":
                seq.append(Rotation(float(obj["angle"]), float(obj.get("phase", 0.0)), obj.get("duration")))
            elif kind == "free":
                seq.append(FreeEvolution(float(obj["duration"])))
            elif kind == "displacement":
                seq.append(Displacement(complex(float(obj["re"]), float(obj["im"]))))
            elif kind == "parity":
                seq.append(ParityWindow(float(obj["duration"])))
            else:
                raise ValueError(f"element {i}: unknown type {kind!r}")
        except KeyError as exc:
            raise ValueError(f"element {i}: missing field {exc.args[0]!r}") from None
        if getattr(seq[-1], "duration", 0) is not None and getattr(seq[-1], "duration", 0) < 0:
            raise ValueError(f"element {i}: negative duration")
    return seq
