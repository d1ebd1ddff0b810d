"""Shot-noise-limited synthetic records and least-squares parameter recovery.

Fits minimise binomially weighted residuals with a Levenberg-Marquardt solver
(MINPACK via :func:`scipy.optimize.least_squares`) fed a central-difference
Jacobian. Positive parameters are optimised in log space, so the difference
step of 1e-6 is relative to the parameter's size.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import least_squares
from scipy.signal import hilbert

from ._rng import stream
from .bloch import rabi_population_analytic
from .errors import DomainError

FD_STEP = 1e-6
XTOL = 1e-10
GTOL = 1e-12
MAX_ITER = 500
N_RESTARTS = 5
# chi-square improvement over a flat record needed to call a signal resolved
SIGNAL_DCHI2 = 30.0


class RecordKind(str, enum.Enum):
    RABI = "rabi"
    RAMSEY = "ramsey"
    RINGDOWN = "ringdown"
    PARITY_MAP = "parity"


@dataclass(frozen=True)
class MeasurementRecord:
    """Success counts out of ``shots`` trials at each abscissa point (s)."""

    abscissa: np.ndarray
    counts: np.ndarray
    shots: np.ndarray
    kind: RecordKind

    def __post_init__(self):
        x = np.asarray(self.abscissa, dtype=float)
        c = np.asarray(self.counts, dtype=float)
        n = np.broadcast_to(np.asarray(self.shots, dtype=float), x.shape).copy()
        if c.shape != x.shape:
            raise DomainError("counts and abscissa must have the same length")
        if x.size and np.any(np.diff(x) <= 0):
            raise DomainError("abscissa must be strictly increasing")
        if np.any(n < 1):
            raise DomainError("shots must be >= 1")
        if np.any(c < 0) or np.any(c > n):
            raise DomainError("counts must lie in [0, shots]")
        object.__setattr__(self, "abscissa", x)
        object.__setattr__(self, "counts", c)
        object.__setattr__(self, "shots", n)
        object.__setattr__(self, "kind", RecordKind(self.kind))

    @property
    def p_hat(self) -> np.ndarray:
        return self.counts / self.shots

    @property
    def sigma(self) -> np.ndarray:
        """Per-point standard error, floored so no point gets zero variance."""
        p = self.p_hat
        return np.sqrt(np.maximum(p * (1.0 - p), 0.25 / self.shots) / self.shots)

    @classmethod
    def from_probabilities(cls, abscissa, p, shots, kind) -> "MeasurementRecord":
        """Noiseless record: expected (fractional) counts."""
        p = _checked_probabilities(p)
        return cls(np.asarray(abscissa, float), p * np.asarray(shots, float), shots, kind)


def _checked_probabilities(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if np.any(~np.isfinite(p)) or np.any(p < 0) or np.any(p > 1):
        raise DomainError("model probabilities must lie in [0, 1]")
    return p


def sample_record(model, abscissa, shots: int, seed: int, kind=RecordKind.RAMSEY) -> MeasurementRecord:
    """Binomial draws at each point; point ``i`` uses the stream ``(seed, i)``.

    ``model`` is either an array of probabilities or a callable of the abscissa.
    """
    x = np.asarray(abscissa, dtype=float)
    p = _checked_probabilities(model(x) if callable(model) else model)
    p = np.broadcast_to(p, x.shape)
    if shots < 1:
        raise DomainError("shots must be >= 1")
    counts = np.array([stream(seed, i).binomial(shots, p[i]) for i in range(x.size)], dtype=np.int64)
    return MeasurementRecord(x, counts, shots, kind)


def write_record(path, rec: MeasurementRecord) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "count", "shots"])
        for x, c, n in zip(rec.abscissa, rec.counts, rec.shots):
            w.writerow([repr(float(x)), _num(c), _num(n)])


def _num(v) -> str:
    v = float(v)
    return str(int(v)) if v.is_integer() else repr(v)


def read_record(path, kind) -> MeasurementRecord:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise DomainError(f"{path}: empty record")
    try:
        x = [float(r["x"]) for r in rows]
        c = [float(r["count"]) for r in rows]
        n = [float(r["shots"]) for r in rows]
    except KeyError as exc:
        raise DomainError(f"{path}: missing column {exc.args[0]!r}") from None
    return MeasurementRecord(np.array(x), np.array(c), np.array(n), kind)


@dataclass
class FitResult:
    params: dict
    stderr: dict
    residual_norm: float
    converged: bool
    iterations: int
    units: dict = field(default_factory=dict)
    diagnostics: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "params": {k: _jsonable(v) for k, v in self.params.items()},
            "stderr": {k: _jsonable(v) for k, v in self.stderr.items()},
            "units": dict(self.units),
            "residual_norm": _jsonable(self.residual_norm),
            "converged": bool(self.converged),
            "iterations": int(self.iterations),
            "diagnostics": list(self.diagnostics),
        }


def _jsonable(v):
    v = float(v)
    return v if math.isfinite(v) else str(v)


# Parameter transforms: "pos" x = s exp(u), "lin" x = s u, "phase" x = u.
@dataclass(frozen=True)
class _Param:
    name: str
    kind: str
    unit: str

    def to_internal(self, x: float, scale: float) -> float:
        if self.kind == "pos":
            return math.log(x / scale)
        if self.kind == "lin":
            return x / scale
        return x

    def to_natural(self, u, scale: float):
        if self.kind == "pos":
            return scale * np.exp(u)
        if self.kind == "lin":
            return scale * u
        return u

    def derivative(self, x: float, scale: float) -> float:
        return {"pos": x, "lin": scale}.get(self.kind, 1.0)


def _central_jacobian(fun, u):
    cols = []
    for k in range(u.size):
        du = np.zeros_like(u)
        du[k] = FD_STEP
        cols.append((fun(u + du) - fun(u - du)) / (2.0 * FD_STEP))
    return np.column_stack(cols)


def _fit(
    rec: MeasurementRecord,
    model: Callable,
    specs: Sequence[_Param],
    starts: Sequence[Sequence[float]],
    null_level: Optional[float] = None,
    signal_params: Sequence[str] = (),
    seed: int = 0,
) -> tuple:
    """Multi-start weighted fit.

    ``null_level`` is the flat prediction of a record with no signal (``None``
    means the weighted mean). If the fit does not beat it by
    ``SIGNAL_DCHI2`` the parameters in ``signal_params`` are flagged.
    """
    x, y, sigma = rec.abscissa, rec.p_hat, rec.sigma
    base = [np.asarray(s, dtype=float) for s in starts]
    scales = np.array([abs(v) if (sp.kind != "phase" and v != 0) else 1.0 for sp, v in zip(specs, base[0])])

    def natural(u):
        return np.array([sp.to_natural(ui, s) for sp, ui, s in zip(specs, u, scales)])

    def resid(u):
        with np.errstate(all="ignore"):
            r = (model(x, natural(u)) - y) / sigma
        return np.where(np.isfinite(r), r, 1e150)

    def internal(v):
        return np.array([sp.to_internal(vi, s) for sp, vi, s in zip(specs, v, scales)])

    u_starts = [internal(v) for v in base]
    rng = np.random.default_rng(seed)
    u0 = u_starts[0]
    for k in range(N_RESTARTS):
        jitter = rng.normal(0.0, 0.1, size=u0.size)
        centre = u_starts[k % len(u_starts)]
        u_starts.append(centre + jitter)

    best = None
    iterations = 0
    for u in u_starts:
        try:
            sol = least_squares(
                resid, u, jac=lambda v: _central_jacobian(resid, v), method="lm",
                xtol=XTOL, gtol=GTOL, ftol=1e-15, max_nfev=MAX_ITER,
            )
        except (ValueError, np.linalg.LinAlgError):
            continue
        iterations += int(sol.njev or 0)
        cost = float(np.sum(sol.fun**2))
        if not math.isfinite(cost):
            continue
        key = (cost, float(np.linalg.norm(sol.x)))
        if best is None or key[0] < best[0][0] * (1 - 1e-12) or (
            abs(key[0] - best[0][0]) <= 1e-12 * best[0][0] and key[1] < best[0][1]
        ):
            best = (key, sol)
    if best is None:
        nan = {sp.name: math.nan for sp in specs}
        return nan, {sp.name: math.inf for sp in specs}, math.inf, False, iterations, ["all starts failed"]

    sol = best[1]
    u = sol.x
    values = natural(u)
    J = _central_jacobian(resid, u)
    stderr_u = _stderr_from_jacobian(J)
    params = {sp.name: float(v) for sp, v in zip(specs, values)}
    stderr = {
        sp.name: float(abs(sp.derivative(v, s)) * e) if math.isfinite(e) else math.inf
        for sp, v, s, e in zip(specs, values, scales, stderr_u)
    }
    diagnostics = []
    ok = sol.status > 0
    if not ok:
        diagnostics.append(f"solver stopped: {sol.message}")
    for sp in specs:
        e, v = stderr[sp.name], params[sp.name]
        if not math.isfinite(e):
            diagnostics.append(f"{sp.name} unidentifiable: singular normal matrix")
        elif sp.kind == "phase" and e > math.pi:
            diagnostics.append(f"{sp.name} unidentifiable: stderr exceeds pi")
        elif sp.kind == "pos" and e > abs(v):
            diagnostics.append(f"{sp.name} unidentifiable: stderr exceeds value")
    w = sigma**-2
    flat = float(np.sum(w * y) / np.sum(w)) if null_level is None else null_level
    dchi2 = float(np.sum(((y - flat) / sigma) ** 2) - np.sum(sol.fun**2))
    if dchi2 < SIGNAL_DCHI2:
        for name in signal_params:
            diagnostics.append(f"{name} unidentifiable: signal not resolved above shot noise (dchi2={dchi2:.1f})")
    converged = ok and not any("unidentifiable" in d for d in diagnostics)
    return params, stderr, float(np.linalg.norm(sol.fun)), converged, iterations, diagnostics


def _stderr_from_jacobian(J: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(J)):
        return np.full(J.shape[1], math.inf)
    _, s, vt = np.linalg.svd(J, full_matrices=False)
    if s[0] == 0 or s[-1] < 1e-10 * s[0]:
        out = np.full(J.shape[1], math.inf)
        good = s >= 1e-10 * s[0]
        # directions with support on a null singular vector are unbounded
        weak = np.any(np.abs(vt[~good]) > 1e-6, axis=0)
        cov = (vt[good].T / s[good] ** 2) @ vt[good]
        out[~weak] = np.sqrt(np.diag(cov))[~weak]
        return out
    cov = (vt.T / s**2) @ vt
    return np.sqrt(np.diag(cov))


def _uniform(x: np.ndarray, y: np.ndarray):
    xu = np.linspace(x[0], x[-1], x.size)
    return xu, np.interp(xu, x, y)


def dominant_angular_frequency(x, y) -> float:
    """Angular frequency of the largest spectral peak above the record's lowest resolvable frequency."""
    xu, yu = _uniform(np.asarray(x, float), np.asarray(y, float))
    yu = yu - yu.mean()
    m = 16 * xu.size
    spec = np.abs(np.fft.rfft(yu * np.hanning(yu.size), n=m))
    f = np.fft.rfftfreq(m, xu[1] - xu[0])
    band = f >= 1.0 / (xu[-1] - xu[0])
    if not np.any(band) or not np.any(spec[band] > 0):
        return 2.0 * math.pi / (xu[-1] - xu[0])
    return 2.0 * math.pi * f[band][np.argmax(spec[band])]


def envelope_decay_rate(x, dev, noise: float) -> Optional[float]:
    """Decay rate from a log-linear fit to the analytic-signal envelope of ``dev``."""
    xu, du = _uniform(np.asarray(x, float), np.asarray(dev, float))
    env = np.abs(hilbert(du))
    lo, hi = int(0.05 * xu.size), int(0.9 * xu.size)
    sel = np.zeros(xu.size, bool)
    sel[lo:hi] = True
    sel &= env > 5.0 * noise
    if sel.sum() < 3:
        return None
    slope = np.polyfit(xu[sel], np.log(env[sel]), 1)[0]
    return -slope if slope < 0 else None


def _noise(rec: MeasurementRecord) -> float:
    return float(np.median(np.sqrt(0.25 / rec.shots)))


def _require(rec: MeasurementRecord, kind: RecordKind):
    if rec.kind != kind:
        raise DomainError(f"expected a {kind.value} record, got {rec.kind.value}")
    if rec.abscissa.size < 4:
        raise DomainError("need at least 4 points to fit")


RABI_PARAMS = (
    _Param("Omega_R", "pos", "rad/s"),
    _Param("Gamma1", "pos", "1/s"),
    _Param("Gamma2", "pos", "1/s"),
)


def fit_rabi(rec: MeasurementRecord, guess: Optional[dict] = None) -> FitResult:
    """Recover ``(Omega_R, Gamma1, Gamma2)`` from an on-resonance Rabi record."""
    _require(rec, RecordKind.RABI)
    x, y = rec.abscissa, rec.p_hat
    if guess is None:
        tail = y[int(0.8 * y.size):].mean()
        wp = dominant_angular_frequency(x, y - tail)
        lam = envelope_decay_rate(x, y - tail, _noise(rec)) or 3.0 / (x[-1] - x[0])
        g1, g2 = 4.0 * lam / 3.0, 2.0 * lam / 3.0
        guess = {"Omega_R": math.hypot(wp, 0.5 * (g1 - g2)), "Gamma1": g1, "Gamma2": g2}
    start = [guess[p.name] for p in RABI_PARAMS]

    def model(t, v):
        return rabi_population_analytic(v[0], v[1], v[2], t)

    params, stderr, rn, conv, it, diag = _fit(rec, model, RABI_PARAMS, [start], signal_params=("Omega_R", "Gamma1", "Gamma2"))
    g1, e1 = params["Gamma1"], stderr["Gamma1"]
    params["T1"] = 1.0 / g1 if g1 > 0 else math.inf
    stderr["T1"] = e1 / g1**2 if g1 > 0 else math.inf
    units = {p.name: p.unit for p in RABI_PARAMS} | {"T1": "s"}
    return FitResult(params, stderr, rn, conv, it, units, diag)


RAMSEY_PARAMS = (
    _Param("Delta", "pos", "rad/s"),
    _Param("T2", "pos", "s"),
    _Param("phi0", "phase", "rad"),
)


def ramsey_model(tau, v):
    return 0.5 * (1.0 + np.exp(-tau / v[1]) * np.cos(v[0] * tau + v[2]))


def fit_ramsey(rec: MeasurementRecord, guess: Optional[dict] = None) -> FitResult:
    """Recover ``(Delta, T2, phi0)``; ``Delta`` is reported non-negative."""
    _require(rec, RecordKind.RAMSEY)
    x, y = rec.abscissa, rec.p_hat
    if guess is None:
        delta = dominant_angular_frequency(x, y - 0.5)
        rate = envelope_decay_rate(x, y - 0.5, _noise(rec)) or 3.0 / (x[-1] - x[0])
        T2 = 1.0 / rate
        c0 = float(np.clip((2.0 * y[0] - 1.0) * math.exp(x[0] / T2), -1.0, 1.0))
        phi = math.acos(c0)
        starts = [[delta, T2, phi - delta * x[0]], [delta, T2, -phi - delta * x[0]]]
    else:
        starts = [[guess["Delta"], guess["T2"], guess.get("phi0", 0.0)]]

    params, stderr, rn, conv, it, diag = _fit(rec, ramsey_model, RAMSEY_PARAMS, starts, null_level=0.5, signal_params=("Delta", "T2"))
    params["phi0"] = float(math.remainder(params["phi0"], 2.0 * math.pi)) if math.isfinite(params["phi0"]) else params["phi0"]
    return FitResult(params, stderr, rn, conv, it, {p.name: p.unit for p in RAMSEY_PARAMS}, diag)


RINGDOWN_PARAMS = (
    _Param("A", "lin", "1"),
    _Param("T1", "pos", "s"),
    _Param("c", "lin", "1"),
)


def ringdown_model(t, v):
    return v[0] * np.exp(-t / v[1]) + v[2]


def fit_ringdown(rec: MeasurementRecord, guess: Optional[dict] = None) -> FitResult:
    """Fit ``A exp(-t/T1) + c``."""
    _require(rec, RecordKind.RINGDOWN)
    x, y = rec.abscissa, rec.p_hat
    if guess is None:
        c = float(y[int(0.9 * y.size):].mean())
        A = float(y[0] - c) or 1e-3
        dev = (y - c) / A
        sel = dev > 5.0 * _noise(rec) / max(abs(A), 1e-12)
        T1 = (x[-1] - x[0]) / 3.0
        if sel.sum() >= 3:
            slope = np.polyfit(x[sel], np.log(dev[sel]), 1)[0]
            if slope < 0:
                T1 = -1.0 / slope
        guess = {"A": A, "T1": T1, "c": c if c != 0 else 1e-3}
    start = [guess["A"], guess["T1"], guess["c"]]
    params, stderr, rn, conv, it, diag = _fit(rec, ringdown_model, RINGDOWN_PARAMS, [start], signal_params=("T1",))
    return FitResult(params, stderr, rn, conv, it, {p.name: p.unit for p in RINGDOWN_PARAMS}, diag)


FITTERS = {
    RecordKind.RABI: fit_rabi,
    RecordKind.RAMSEY: fit_ramsey,
    RecordKind.RINGDOWN: fit_ringdown,
}
