"""Command-line entry point: ``nanotomo <command> [options]``.

Every command writes plot-ready files into ``--out`` plus a ``<command>_run.json``
manifest embedding the resolved configuration, so ``--config <manifest>``
reproduces the run. Exit codes: 0 ok, 2 configuration error, 3 numerical
failure, 4 fit did not converge (the fit JSON is still written).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .bath import DissipationRates
from .bloch import BlochVector, DriveParams, integrate_bloch, rabi_population_analytic
from .device import TABLE_COLUMNS, compare_with_reference, device_table
from .errors import ConfigError, DomainError, IntegrationError
from .estimation import FITTERS, RecordKind, read_record, sample_record, write_record
from .ramsey import ramsey_fringes
from .wigner import (
    decohered_density,
    grid_axis,
    negativity_metrics,
    superposition_density,
    tomography_sweep,
    wigner_grid,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_FIT = 0, 2, 3, 4


class FitNotConverged(Exception):
    pass


def _fmt(v) -> str:
    if v is None:
        return "nan"
    v = float(v)
    return repr(v)


def _json_value(v):
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, dict):
        return {k: _json_value(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_value(x) for x in v]
    if isinstance(v, np.integer):
        return int(v)
    return v


def write_json(path: Path, obj) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump(_json_value(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_table(path: Path, columns, rows, as_json: bool) -> Path:
    """Rows are sequences aligned with ``columns``; CSV by default, JSON array with ``as_json``."""
    if as_json:
        path = path.with_suffix(".json")
        write_json(path, [dict(zip(columns, r)) for r in rows])
        return path
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
    return path


class Run:
    """Shared state for one command invocation."""

    def __init__(self, args):
        self.args = args
        self.cfg = cfgmod.load(args.config, args.set, seed=args.seed, shots=args.shots)
        self.out = Path(args.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.outputs: list[str] = []
        self.report: dict = {}

    def table(self, name, columns, rows):
        p = write_table(self.out / f"{name}.csv", columns, rows, self.args.json)
        self.outputs.append(p.name)

    def document(self, name, body):
        body = {"command": self.args.command, "config": self.cfg.to_json_obj(), **body}
        write_json(self.out / f"{name}.json", body)
        self.outputs.append(f"{name}.json")

    def manifest(self):
        extra = {k: v for k, v in vars(self.args).items() if k not in _GLOBAL_KEYS and k != "func"}
        write_json(
            self.out / f"{self.args.command}_run.json",
            {"command": self.args.command, "config": self.cfg.to_json_obj(), "args": extra,
             "outputs": self.outputs, "report": self.report},
        )


def _sample(run: Run, name: str, x, p, kind: RecordKind):
    rec = sample_record(np.clip(p, 0.0, 1.0), x, run.cfg.shots, run.cfg.seed, kind)
    write_record(run.out / f"{name}_record.csv", rec)
    run.outputs.append(f"{name}_record.csv")


def _time_grid(t_max: float, n: int) -> np.ndarray:
    if n < 1:
        raise ConfigError("--n-points", "must be >= 1")
    if n == 1:
        return np.zeros(1)
    if not (math.isfinite(t_max) and t_max > 0):
        raise ConfigError("--t-max", "must be a positive finite time")
    return np.linspace(0.0, t_max, n)


def cmd_device(run: Run):
    lengths = [L * 1e-9 for L in run.args.lengths]
    rows = device_table(lengths, run.cfg.template(), run.cfg.t_pi2)
    shown = [r.presentation() for r in rows]
    # 12 significant digits hides unit-conversion noise such as 100.00000000000001 nm
    run.table("device", TABLE_COLUMNS, [[float(f"{s[c]:.12g}") for c in TABLE_COLUMNS] for s in shown])
    cells = compare_with_reference(rows)
    run.report = {"reference_comparison": cells}
    for c in cells:
        if c["flagged"]:
            label = "flagged" if c["note"] else "deviation"
            msg = f"{label}: L={c['L_nm']:g} nm {c['column']} computed {c['computed']:.4g} vs reference {c['reference']:g} ({100 * c['rel_dev']:.1f}%)"
            if c["note"]:
                msg += f"; {c['note']}"
            print(msg, file=sys.stderr)


def cmd_rates(run: Run):
    rates = run.cfg.rates()
    body = {"rates": rates.to_dict()}
    if (run.cfg.raw.get("device") or {}).get("L_m") is not None:
        body["omega0_rad_s"] = run.cfg.omega0()
    run.document("rates", body)


RABI_COLUMNS = ("t_s", "X", "Y", "Z", "P1", "P1_analytic")


def _rabi_curve(run: Run, name: str, drive: DriveParams, rates: DissipationRates):
    a = run.args
    if a.t_max is not None:
        t_max = a.t_max
    elif rates.Gamma1 > 0:
        t_max = 10.0 / rates.Gamma1
    else:
        t_max = 10.0 * 2.0 * math.pi / max(drive.Omega_R, 1e-300)
    t = _time_grid(t_max, a.n_points)
    traj = integrate_bloch(BlochVector.ground(), drive, rates, t, run.cfg.sim())
    if drive.Delta == 0 and rates.Z_eq == -1.0:
        ana = rabi_population_analytic(drive.Omega_R, rates.Gamma1, rates.Gamma2, t)
    else:
        ana = np.full(t.size, math.nan)
    run.table(name, RABI_COLUMNS, list(zip(t, traj.X, traj.Y, traj.Z, traj.P1, ana)))
    if a.record:
        _sample(run, name, t, ana if np.all(np.isfinite(ana)) else traj.P1, RecordKind.RABI)


def cmd_rabi(run: Run):
    drive = run.cfg.drive()
    if run.args.gamma_ratios:
        for g in run.args.gamma_ratios:
            if not g > 0:
                raise ConfigError("--gamma-ratios", "ratios must be positive")
            G1 = g * drive.Omega_R
            rates = DissipationRates.from_rates(G1, 0.5 * G1, -1.0)
            _rabi_curve(run, f"rabi_G1_{g:g}", drive, rates)
    else:
        _rabi_curve(run, "rabi", drive, run.cfg.rates())


def cmd_ramsey(run: Run):
    a, cfg = run.args, run.cfg
    drive, rates = cfg.drive(), cfg.rates()
    if a.tau_max is not None:
        tau_max = a.tau_max
    elif math.isfinite(rates.T2):
        tau_max = 3.0 * rates.T2
    elif drive.Delta != 0:
        tau_max = 10.0 * 2.0 * math.pi / abs(drive.Delta)
    else:
        raise ConfigError("--tau-max", "needed when T2 is infinite and Delta is zero")
    tau = _time_grid(tau_max, a.n_points)
    analytic, simulated = ramsey_fringes(tau, drive.Delta, cfg.phi0, drive.Omega_R, rates, cfg.sim())
    run.table("ramsey", ("tau_s", "P1_analytic", "P1_simulated"), list(zip(tau, analytic, simulated)))
    run.report = {"max_abs_difference": float(np.max(np.abs(analytic - simulated)))}
    if a.record:
        _sample(run, "ramsey", tau, analytic, RecordKind.RAMSEY)


def cmd_ringdown(run: Run):
    """Relaxation from the excited state with the drive off."""
    a, cfg = run.args, run.cfg
    rates = cfg.rates()
    if a.t_max is not None:
        t_max = a.t_max
    elif rates.Gamma1 > 0:
        t_max = 5.0 * rates.T1
    else:
        raise ConfigError("--t-max", "needed when Gamma1 is zero")
    t = _time_grid(t_max, a.n_points)
    drive = DriveParams(0.0, 2.0 * math.pi * cfg._num("drive", "Delta_Hz"))
    traj = integrate_bloch(BlochVector(0.0, 0.0, 1.0), drive, rates, t, cfg.sim())
    p_eq = 0.5 * (1.0 + rates.Z_eq)
    analytic = p_eq + (1.0 - p_eq) * np.exp(-rates.Gamma1 * t)
    run.table("ringdown", ("t_s", "P1_analytic", "P1_ode"), list(zip(t, analytic, traj.P1)))
    if a.record:
        _sample(run, "ringdown", t, analytic, RecordKind.RINGDOWN)


def _decay_times(run: Run, omega0: float):
    if run.args.T1_omega0 is not None:
        if not run.args.T1_omega0 > 0:
            raise ConfigError("--T1-omega0", "must be positive")
        T1 = run.args.T1_omega0 / omega0
        return T1, 2.0 * T1
    rates = run.cfg.rates()
    return rates.T1, rates.T2


def cmd_wigner(run: Run):
    cfg, a = run.cfg, run.args
    omega0 = cfg.omega0()
    T1, T2 = _decay_times(run, omega0)
    times = list(a.times) if a.times else [k * T1 for k in a.times_T1]
    if any(t < 0 for t in times):
        raise ConfigError("--times", "times must be non-negative")
    extent, n = cfg.grid()
    ax = grid_axis(extent, n)
    maps = []
    for i, t in enumerate(times):
        grid = wigner_grid(decohered_density(t, T1, T2, omega0, superposition_density()), extent, n)
        name = f"wigner_{i}"
        rows = [(ax[j], ax[k], grid.values[k, j]) for k in range(n) for j in range(n)]
        run.table(name, ("re_alpha", "im_alpha", "W"), rows)
        m = negativity_metrics(grid)
        maps.append({"file": run.outputs[-1], "t_s": t, "integral": grid.integral(),
                     "min_value": m.min_value, "negative_volume": m.negative_volume})
    run.document("wigner", {"omega0_rad_s": omega0, "T1_s": T1, "T2_s": T2,
                            "grid": {"extent": extent, "n_points": n}, "maps": maps})


def cmd_tomo(run: Run):
    cfg, a = run.cfg, run.args
    omega0 = cfg.omega0()
    T1, T2 = _decay_times(run, omega0)
    parity = cfg.parity()
    bad = parity.violations(omega0, T2)
    if bad:
        raise ConfigError("parity.chi_rad_s", "; ".join(bad))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        parity.check(omega0, T2)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    if a.time < 0:
        raise ConfigError("--time", "must be non-negative")
    rho = decohered_density(a.time, T1, T2, omega0, superposition_density())
    extent, n = cfg.grid()
    res = tomography_sweep(rho, parity, omega0, T2, cfg.shots, cfg.seed, extent, n,
                           cfg.apply_visibility, workers=a.workers)
    ax = grid_axis(extent, n)
    rows = [
        (ax[j], ax[k], res.ideal.values[k, j], res.sampled.values[k, j], res.p1_sampled[k, j])
        for k in range(n) for j in range(n)
    ]
    run.table("tomo", ("re_alpha", "im_alpha", "W_ideal", "W_sampled", "P1_sampled"), rows)
    mi, ms = negativity_metrics(res.ideal), negativity_metrics(res.sampled)
    run.document("tomo", {
        "grid": {"extent": extent, "n_points": n, "layout": "row-major, im_alpha outer, re_alpha inner"},
        "t_s": a.time, "omega0_rad_s": omega0, "T1_s": T1, "T2_s": T2, "t_pi_s": parity.t_pi,
        "seed": cfg.seed, "shots": cfg.shots,
        "ideal": {"min_value": mi.min_value, "negative_volume": mi.negative_volume},
        "sampled": {"min_value": ms.min_value, "negative_volume": ms.negative_volume},
        "max_abs_deviation": float(np.max(np.abs(res.sampled.values - res.ideal.values))),
    })


def cmd_fit(run: Run):
    a = run.args
    kind = RecordKind(a.kind)
    try:
        rec = read_record(a.record, kind)
    except FileNotFoundError:
        raise ConfigError("--record", f"file not found: {a.record}") from None
    except (DomainError, ValueError) as exc:
        raise ConfigError("--record", str(exc)) from None
    res = FITTERS[kind](rec)
    run.document("fit", {"kind": kind.value, "record": Path(a.record).name, "n_points": int(rec.abscissa.size),
                         "result": res.to_dict()})
    run.report = {"converged": res.converged, "diagnostics": res.diagnostics}
    if not res.converged:
        raise FitNotConverged("; ".join(res.diagnostics) or "fit did not converge")


_GLOBAL_KEYS = {"config", "seed", "shots", "out", "json", "set", "command"}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("global options")
    g.add_argument("--config", help="JSON config file (a result or run manifest is accepted too)")
    g.add_argument("--seed", type=int, help="random seed (overrides config)")
    g.add_argument("--shots", type=int, help="trials per point (overrides config)")
    g.add_argument("--out", default=".", help="output directory (default: current)")
    g.add_argument("--json", action="store_true", help="write tables as JSON arrays instead of CSV")
    g.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="dotted config override, e.g. drive.Delta_Hz=3e5; repeatable")

    p = argparse.ArgumentParser(prog="nanotomo", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("device", parents=[common], help="mode parameters versus beam length")
    s.add_argument("--lengths", type=float, nargs="+", default=[100.0, 500.0, 1000.0], metavar="NM")
    s.set_defaults(func=cmd_device)

    s = sub.add_parser("rates", parents=[common], help="dissipation rates as JSON")
    s.set_defaults(func=cmd_rates)

    s = sub.add_parser("rabi", parents=[common], help="driven population, ODE and closed form")
    s.add_argument("--t-max", type=float)
    s.add_argument("--n-points", type=int, default=501)
    s.add_argument("--gamma-ratios", type=float, nargs="+", metavar="G1/OMEGA_R",
                   help="one curve per ratio with Gamma2 = Gamma1/2, Z_eq = -1")
    s.add_argument("--record", action="store_true", help="also write a shot-sampled record")
    s.set_defaults(func=cmd_rabi)

    s = sub.add_parser("ramsey", parents=[common], help="fringes, closed form and finite pulses")
    s.add_argument("--tau-max", type=float)
    s.add_argument("--n-points", type=int, default=151)
    s.add_argument("--record", action="store_true")
    s.set_defaults(func=cmd_ramsey)

    s = sub.add_parser("ringdown", parents=[common], help="free relaxation from the excited state")
    s.add_argument("--t-max", type=float)
    s.add_argument("--n-points", type=int, default=201)
    s.add_argument("--record", action="store_true")
    s.set_defaults(func=cmd_ringdown)

    for name, helptext in (("wigner", "Wigner maps of the decaying superposition"),
                           ("tomo", "displaced-parity tomography with shot noise")):
        s = sub.add_parser(name, parents=[common], help=helptext)
        s.add_argument("--T1-omega0", type=float, dest="T1_omega0",
                       help="set T1 = value/omega0 and T2 = 2 T1 instead of the configured rates")
        if name == "wigner":
            s.add_argument("--times", type=float, nargs="+", help="evaluation times, s")
            s.add_argument("--times-T1", type=float, nargs="+", default=[0.0, 1.0, 5.0], dest="times_T1",
                           help="evaluation times in units of T1 (default 0 1 5)")
            s.set_defaults(func=cmd_wigner)
        else:
            s.add_argument("--time", type=float, default=0.0, help="state preparation delay, s")
            s.add_argument("--workers", type=int, default=1, help="threads for the grid sweep")
            s.set_defaults(func=cmd_tomo)

    s = sub.add_parser("fit", parents=[common], help="fit an x,count,shots record")
    s.add_argument("--record", required=True)
    s.add_argument("--kind", required=True, choices=[k.value for k in FITTERS])
    s.set_defaults(func=cmd_fit)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        run = Run(args)
        args.func(run)
        run.manifest()
    except ConfigError as exc:
        print(json.dumps(exc.to_dict()), file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as exc:
        print(json.dumps({"error": "config", "field": None, "message": str(exc)}), file=sys.stderr)
        return EXIT_CONFIG
    except FitNotConverged as exc:
        run.manifest()
        print(json.dumps({"error": "fit", "message": str(exc)}), file=sys.stderr)
        return EXIT_FIT
    except (IntegrationError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(json.dumps({"error": "numerical", "message": str(exc)}), file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
