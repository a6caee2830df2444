"""Run configuration for the command-line front end.

A configuration is a JSON object. Every key is optional; missing keys take
the defaults in :data:`DEFAULTS`, and unknown keys are rejected. The schema
is documented in the README.

Profiles (``omega``, ``g``) are descriptors understood by
:meth:`etapt.model.TimeProfile.from_dict`: a bare number for a constant, or
an object with a ``kind`` key.
"""

from __future__ import annotations

import json
import math
import numbers
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

from .dynamics import IntegratorConfig
from .fock import FockSpace
from .model import ModelParams, TimeProfile


class ConfigError(ValueError):
    """Invalid configuration; the command line maps it to exit status 2."""


DEFAULT_SCAN = {"omega0": [0.5, 2.0, 3], "g0": [0.0, 1.0, 3]}

DEFAULTS: Dict[str, Any] = {
    "dim": 64,
    "buffer": 8,
    "gamma": math.pi / 4,
    "omega": 2.0,
    "coupling_mode": "derived",
    "g": None,
    "t_start": 0.0,
    "t_end": 5.0,
    "dt": 1e-3,
    "initial_n": 0,
    "padding": 192,
    "eval_time": 0.0,
    "heisenberg_dt": 1e-3,
    "spectrum_count": None,
    "threads": 1,
    "output_path": None,
    "scan": DEFAULT_SCAN,
}


@dataclass(frozen=True)
class ScanGrid:
    """Rectangular grid ``(omega0, g0)``; each axis is ``[low, high, count]``."""

    omega0: Tuple[float, float, int]
    g0: Tuple[float, float, int]

    def axis(self, name: str):
        lo, hi, n = getattr(self, name)
        if n == 1:
            return [lo]
        return [lo + (hi - lo) * i / (n - 1) for i in range(n)]

    def points(self):
        """Grid points in row-major order (``omega0`` outer, ``g0`` inner)."""
        return [(w, g) for w in self.axis("omega0") for g in self.axis("g0")]


@dataclass(frozen=True)
class RunConfig:
    """Validated run configuration; see :data:`DEFAULTS` for the keys."""

    dim: int
    buffer: int
    gamma: float
    omega: TimeProfile
    coupling_mode: str
    g: Optional[TimeProfile]
    t_start: float
    t_end: float
    dt: float
    initial_n: int
    padding: int
    eval_time: float
    heisenberg_dt: float
    spectrum_count: Optional[int]
    threads: int
    output_path: Optional[str]
    scan: ScanGrid = field(repr=False)

    @property
    def space(self) -> FockSpace:
        return FockSpace(self.dim, self.buffer)

    @property
    def spectrum_size(self) -> int:
        """``spectrum_count``, or ``min(16, dim // 4)`` when it is unset."""
        if self.spectrum_count is None:
            return min(16, self.dim // 4)
        return self.spectrum_count

    def model(self) -> ModelParams:
        return ModelParams(self.omega, self.gamma, self.space, self.coupling_mode, self.g)

    def integrator(self) -> IntegratorConfig:
        return IntegratorConfig(self.dt, self.t_end, self.t_start)

    def with_overrides(self, **changes) -> "RunConfig":
        """Re-validate after replacing raw keys (same spelling as the JSON schema)."""
        raw = self.to_dict()
        raw.update({k: v for k, v in changes.items() if v is not None})
        return parse_config(raw)

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in DEFAULTS if k not in ("omega", "g", "scan")}
        d["omega"] = self.omega.to_dict()
        d["g"] = None if self.g is None else self.g.to_dict()
        d["scan"] = {"omega0": list(self.scan.omega0), "g0": list(self.scan.g0)}
        return d


def _integer(raw, key, minimum=None) -> int:
    v = raw[key]
    if isinstance(v, bool) or not isinstance(v, numbers.Integral):
        raise ConfigError(f"{key} must be an integer, got {v!r}")
    if minimum is not None and v < minimum:
        raise ConfigError(f"{key} must be at least {minimum}")
    return int(v)


def _real(raw, key) -> float:
    v = raw[key]
    if isinstance(v, bool) or not isinstance(v, numbers.Real) or not math.isfinite(v):
        raise ConfigError(f"{key} must be a finite number, got {v!r}")
    return float(v)


def _axis(name, v) -> Tuple[float, float, int]:
    if not isinstance(v, (list, tuple)) or len(v) != 3:
        raise ConfigError(f"scan.{name} must be [low, high, count]")
    lo, hi, n = v
    for x in (lo, hi):
        if isinstance(x, bool) or not isinstance(x, numbers.Real) or not math.isfinite(x):
            raise ConfigError(f"scan.{name} bounds must be finite numbers")
    if isinstance(n, bool) or not isinstance(n, numbers.Integral) or n < 1:
        raise ConfigError(f"scan.{name} count must be a positive integer")
    if hi < lo:
        raise ConfigError(f"scan.{name} high bound is below the low bound")
    return (float(lo), float(hi), int(n))


def parse_config(data: Optional[dict] = None) -> RunConfig:
    """Validate a raw mapping against the schema and fill in defaults.

    Raises
    ------
    ConfigError
        On unknown keys, wrong types, or values violating the model or
        integrator invariants.
    """
    data = {} if data is None else data
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object")
    unknown = sorted(set(data) - set(DEFAULTS))
    if unknown:
        raise ConfigError(f"unknown configuration keys: {unknown}")
    raw = dict(DEFAULTS)
    raw.update(data)

    scan_raw = raw["scan"]
    if not isinstance(scan_raw, dict):
        raise ConfigError("scan must be an object")
    bad = sorted(set(scan_raw) - set(DEFAULT_SCAN))
    if bad:
        raise ConfigError(f"unknown scan keys: {bad}")
    scan_raw = {**DEFAULT_SCAN, **scan_raw}
    scan = ScanGrid(_axis("omega0", scan_raw["omega0"]), _axis("g0", scan_raw["g0"]))

    out = raw["output_path"]
    if out is not None and not isinstance(out, str):
        raise ConfigError("output_path must be a string or null")
    mode = raw["coupling_mode"]
    if mode not in ("derived", "explicit"):
        raise ConfigError(f"coupling_mode must be 'derived' or 'explicit', got {mode!r}")

    try:
        omega = TimeProfile.from_dict(raw["omega"])
        g = None if raw["g"] is None else TimeProfile.from_dict(raw["g"])
        cfg = RunConfig(
            dim=_integer(raw, "dim"),
            buffer=_integer(raw, "buffer", 0),
            gamma=_real(raw, "gamma"),
            omega=omega,
            coupling_mode=mode,
            g=g,
            t_start=_real(raw, "t_start"),
            t_end=_real(raw, "t_end"),
            dt=_real(raw, "dt"),
            initial_n=_integer(raw, "initial_n", 0),
            padding=_integer(raw, "padding", 0),
            eval_time=_real(raw, "eval_time"),
            heisenberg_dt=_real(raw, "heisenberg_dt"),
            spectrum_count=None if raw["spectrum_count"] is None else _integer(raw, "spectrum_count", 1),
            threads=_integer(raw, "threads", 1),
            output_path=out,
            scan=scan,
        )
        # the domain objects carry the remaining invariants
        cfg.model()
        cfg.integrator().n_steps
        if cfg.heisenberg_dt <= 0:
            raise ConfigError("heisenberg_dt must be positive")
        if cfg.spectrum_size > cfg.dim // 4:
            raise ConfigError(f"spectrum_count must not exceed dim/4 = {cfg.dim // 4}")
        if cfg.initial_n >= cfg.space.interior:
            raise ConfigError(f"initial_n must lie below dim - buffer = {cfg.space.interior}")
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def load_config(path: Optional[str]) -> RunConfig:
    """Read and validate a JSON file; ``None`` yields the defaults."""
    if path is None:
        return parse_config({})
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read configuration: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"configuration is not valid JSON: {exc}") from None
    return parse_config(data)
