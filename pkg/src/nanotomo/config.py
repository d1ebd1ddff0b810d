"""Run configuration: one JSON document, SI units, dotted-path overrides.

Schema (all keys optional unless a command needs them)::

    device: L_m, r_m, t_wall_m, E_Pa, rho_kg_m3, Q, t_pi2_s
    bath:   alpha, omega_c_rad_s, T_K, include_pure_dephasing
    rates:  Gamma1_per_s, Gamma2_per_s, Z_eq          (explicit override)
    drive:  Omega_R_rad_s, Delta_Hz, phi0_rad
    parity: chi_rad_s, apply_visibility
    sim:    rel_tol, abs_tol, max_step_s
    grid:   extent, n_points
    seed, shots

``drive.Delta_Hz`` is a linear frequency; it is converted to rad/s once, here.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass
from typing import Any, Optional

from .bath import DissipationRates, OhmicBath, dissipation_rates
from .bloch import DriveParams, SimOptions
from .device import DeviceGeometry, flexural_frequency, ringdown_T1
from .errors import ConfigError, DomainError
from .wigner import ParityMapConfig

DEFAULTS: dict = {
    "device": {"r_m": 1e-9, "t_wall_m": 0.34e-9, "E_Pa": 1e12, "rho_kg_m3": 2200.0, "Q": 1e4, "t_pi2_s": 100e-9},
    "bath": {"T_K": 0.05, "include_pure_dephasing": False},
    "drive": {"Omega_R_rad_s": 2.0 * math.pi * 0.75e6, "Delta_Hz": 0.0, "phi0_rad": 0.0},
    "parity": {"apply_visibility": False},
    "sim": {"rel_tol": 1e-9, "abs_tol": 1e-9, "max_step_s": None},
    "grid": {"extent": 3.0, "n_points": 201},
    "seed": 0,
    "shots": 10000,
}

SECTIONS = ("device", "bath", "rates", "drive", "parity", "sim", "grid")


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def load_document(path: Optional[str]) -> dict:
    """Read a config file; a result envelope is accepted and its embedded config used."""
    if path is None:
        return {}
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ConfigError("--config", f"file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("--config", f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("--config", "top level must be an object")
    if "config" in doc and isinstance(doc["config"], dict):
        doc = doc["config"]
    return doc


def apply_overrides(doc: dict, assignments) -> dict:
    """Apply ``key.sub=value`` assignments; values parse as JSON, else as strings."""
    out = copy.deepcopy(doc)
    for item in assignments or ():
        if "=" not in item:
            raise ConfigError("--set", f"expected key=value, got {item!r}")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = out
        parts = key.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(key, "cannot assign below a scalar")
        node[parts[-1]] = value
    return out


def resolve(doc: dict) -> dict:
    unknown = set(doc) - set(SECTIONS) - {"seed", "shots"}
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown config key")
    return _merge(DEFAULTS, doc)


@dataclass(frozen=True)
class RunConfig:
    """Resolved configuration; typed blocks are built on demand with field-named errors."""

    raw: dict

    @classmethod
    def from_document(cls, doc: dict) -> "RunConfig":
        cfg = cls(resolve(doc))
        seed, shots = cfg.raw.get("seed"), cfg.raw.get("shots")
        if not isinstance(seed, int) or seed < 0:
            raise ConfigError("seed", "must be a non-negative integer")
        if not isinstance(shots, int) or shots < 1:
            raise ConfigError("shots", "must be a positive integer")
        return cfg

    @property
    def seed(self) -> int:
        return self.raw["seed"]

    @property
    def shots(self) -> int:
        return self.raw["shots"]

    def _num(self, section: str, key: str, required: bool = True, default=None):
        block = self.raw.get(section) or {}
        if key not in block or block[key] is None:
            if required:
                raise ConfigError(f"{section}.{key}", "required field is missing")
            return default
        v = block[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ConfigError(f"{section}.{key}", f"must be a finite number, got {v!r}")
        return float(v)

    def _build(self, field_prefix: str, fn, *args):
        try:
            return fn(*args)
        except DomainError as exc:
            raise ConfigError(field_prefix, str(exc)) from None

    def template(self) -> DeviceGeometry:
        """Geometry with a placeholder length, for sweeps over ``L``."""
        return self.geometry(length=1e-6)

    def geometry(self, length: Optional[float] = None) -> DeviceGeometry:
        L = length if length is not None else self._num("device", "L_m")
        return self._build(
            "device",
            DeviceGeometry,
            L,
            self._num("device", "r_m"),
            self._num("device", "t_wall_m"),
            self._num("device", "E_Pa"),
            self._num("device", "rho_kg_m3"),
            self._num("device", "Q"),
        )

    @property
    def t_pi2(self) -> float:
        return self._num("device", "t_pi2_s")

    def omega0(self) -> float:
        return flexural_frequency(self.geometry())

    def bath(self) -> OhmicBath:
        return self._build(
            "bath",
            OhmicBath,
            self._num("bath", "alpha"),
            self._num("bath", "omega_c_rad_s"),
            self._num("bath", "T_K"),
        )

    def rates(self) -> DissipationRates:
        """Explicit ``rates`` block, else the Ohmic bath, else device ringdown with T2 = 2 T1."""
        if self.raw.get("rates"):
            return self._build(
                "rates",
                DissipationRates.from_rates,
                self._num("rates", "Gamma1_per_s"),
                self._num("rates", "Gamma2_per_s"),
                self._num("rates", "Z_eq", required=False, default=-1.0),
            )
        bath_block = self.raw.get("bath") or {}
        if "alpha" in bath_block or "omega_c_rad_s" in bath_block:
            return dissipation_rates(self.bath(), self.omega0(), bool(bath_block.get("include_pure_dephasing")))
        T1 = ringdown_T1(self.geometry())
        return DissipationRates.from_times(T1, 2.0 * T1, -1.0)

    def drive(self) -> DriveParams:
        omega0 = None
        if (self.raw.get("device") or {}).get("L_m") is not None:
            omega0 = self.omega0()
        return self._build(
            "drive",
            DriveParams,
            self._num("drive", "Omega_R_rad_s"),
            2.0 * math.pi * self._num("drive", "Delta_Hz"),
            omega0,
        )

    @property
    def phi0(self) -> float:
        return self._num("drive", "phi0_rad")

    def parity(self) -> ParityMapConfig:
        return self._build("parity", ParityMapConfig, self._num("parity", "chi_rad_s"))

    @property
    def apply_visibility(self) -> bool:
        return bool((self.raw.get("parity") or {}).get("apply_visibility", False))

    def sim(self) -> SimOptions:
        max_step = self._num("sim", "max_step_s", required=False, default=math.inf)
        return self._build("sim", SimOptions, self._num("sim", "rel_tol"), self._num("sim", "abs_tol"), max_step)

    def grid(self) -> tuple[float, int]:
        extent = self._num("grid", "extent")
        n = self.raw["grid"].get("n_points")
        if not isinstance(n, int) or n < 2:
            raise ConfigError("grid.n_points", "must be an integer >= 2")
        if extent <= 0:
            raise ConfigError("grid.extent", "must be positive")
        return extent, n

    def to_json_obj(self) -> dict:
        return copy.deepcopy(self.raw)


def load(path: Optional[str], overrides=(), **top_level: Any) -> RunConfig:
    doc = apply_overrides(load_document(path), overrides)
    for k, v in top_level.items():
        if v is not None:
            doc[k] = v
    return RunConfig.from_document(doc)
