"""Run configuration: flat ``key=value`` text with dotted namespaces.

Example::

    # decay study
    mesh.h=0.01
    mesh.T=200
    data.family=rational_bump
    data.M=0.05
    sampling.kind=van_der_corput

Every key has a default; ``serialize_config`` writes all of them in sorted order.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Iterable
from dataclasses import dataclass, field, replace
from pathlib import Path

from ks_glimm.errors import ConfigError
from ks_glimm.glimm import MeshConfig, SamplingSequence
from ks_glimm.initial_data import InitialDataSpec
from ks_glimm.model import ModelParams

logger = logging.getLogger(__name__)

__all__ = [
    "ConvergenceConfig",
    "FitConfig",
    "InitialDataSpec",
    "MeshConfig",
    "ModelParams",
    "OracleConfig",
    "OutputConfig",
    "RiemannConfig",
    "RunConfig",
    "SamplingSequence",
    "apply_overrides",
    "load_config",
    "parse_config",
    "serialize_config",
]


def _check_window(name: str, w: tuple[float, float] | None) -> None:
    if w is not None and not (0.0 <= w[0] < w[1]):
        raise ConfigError(f"{name} must satisfy 0 <= lo < hi, got {w}")


@dataclass(frozen=True)
class OutputConfig:
    dir: str = ""
    snapshot_times: tuple[float, ...] = ()
    every: int = 1
    log_every: int = 0

    def __post_init__(self) -> None:
        if self.every < 1:
            raise ConfigError(f"output.every must be >= 1, got {self.every}")
        if self.log_every < 0:
            raise ConfigError(f"output.log_every must be >= 0, got {self.log_every}")
        if any(t < 0.0 for t in self.snapshot_times):
            raise ConfigError("output.snapshot_times must be nonnegative")


@dataclass(frozen=True)
class FitConfig:
    """Fit windows; ``None`` selects ``[T/4, T]`` for the tail and ``[0, min(10, T/4)]`` for the head."""

    tail_window: tuple[float, float] | None = None
    head_window: tuple[float, float] | None = None
    residual_threshold: float = 0.05

    def __post_init__(self) -> None:
        _check_window("fit.tail_window", self.tail_window)
        _check_window("fit.head_window", self.head_window)
        if self.residual_threshold <= 0.0:
            raise ConfigError(f"fit.residual_threshold must be positive, got {self.residual_threshold}")

    def tail(self, T: float) -> tuple[float, float]:
        return self.tail_window or (T / 4.0, T)

    def head(self, T: float) -> tuple[float, float]:
        return self.head_window or (0.0, min(10.0, T / 4.0))


@dataclass(frozen=True)
class OracleConfig:
    dx: float = 1e-3
    cfl: float = 0.4

    def __post_init__(self) -> None:
        if self.dx <= 0.0:
            raise ConfigError(f"oracle.dx must be positive, got {self.dx}")
        if not (0.0 < self.cfl <= 0.4):
            raise ConfigError(f"oracle.cfl must lie in (0, 0.4], got {self.cfl}")


@dataclass(frozen=True)
class RiemannConfig:
    """Shifted-frame states of the ``riemann`` subcommand and the sampling of its profile."""

    left: tuple[float, float] = (0.0, 0.0)
    right: tuple[float, float] = (0.0, 0.0)
    theta: float = 0.0
    t: float = 1.0
    points: int = 401

    def __post_init__(self) -> None:
        if len(self.left) != 2 or len(self.right) != 2:
            raise ConfigError("riemann.left and riemann.right take two comma-separated values")
        if self.t <= 0.0:
            raise ConfigError(f"riemann.t must be positive, got {self.t}")
        if self.points < 2:
            raise ConfigError(f"riemann.points must be >= 2, got {self.points}")


@dataclass(frozen=True)
class ConvergenceConfig:
    h_values: tuple[float, ...] = (0.04, 0.02, 0.01)
    T: float = 1.0

    def __post_init__(self) -> None:
        if len(self.h_values) < 2 or any(h <= 0.0 for h in self.h_values):
            raise ConfigError("convergence.h_values needs at least two positive values")
        if self.T < 0.0:
            raise ConfigError(f"convergence.T must be nonnegative, got {self.T}")


@dataclass(frozen=True)
class RunConfig:
    mesh: MeshConfig = field(default_factory=MeshConfig)
    sampling: SamplingSequence = field(default_factory=SamplingSequence)
    model: ModelParams = field(default_factory=ModelParams)
    data: InitialDataSpec = field(default_factory=InitialDataSpec)
    output: OutputConfig = field(default_factory=OutputConfig)
    fit: FitConfig = field(default_factory=FitConfig)
    oracle: OracleConfig = field(default_factory=OracleConfig)
    riemann: RiemannConfig = field(default_factory=RiemannConfig)
    convergence: ConvergenceConfig = field(default_factory=ConvergenceConfig)
    kappa: float = 20.0

    def __post_init__(self) -> None:
        if self.kappa <= 0.0:
            raise ConfigError(f"diagnostics.kappa must be positive, got {self.kappa}")
        late = [t for t in self.output.snapshot_times if t > self.mesh.T]
        if late:
            raise ConfigError(f"output.snapshot_times beyond mesh.T={self.mesh.T}: {late}")
        for name, w in (("fit.tail_window", self.fit.tail_window), ("fit.head_window", self.fit.head_window)):
            if w is not None and w[1] > self.mesh.T:
                raise ConfigError(f"{name} {w} extends past mesh.T={self.mesh.T}")


# value codecs ---------------------------------------------------------------


def _parse_float(s: str) -> float:
    v = float(s)
    if not math.isfinite(v):
        raise ValueError(f"not a finite number: {s!r}")
    return v


def _parse_bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_floats(s: str) -> tuple[float, ...]:
    s = s.strip()
    return tuple(_parse_float(p) for p in s.split(",")) if s else ()


def _parse_window(s: str) -> tuple[float, float] | None:
    vals = _parse_floats(s)
    if not vals:
        return None
    if len(vals) != 2:
        raise ValueError(f"expected 'lo,hi', got {s!r}")
    return vals  # type: ignore[return-value]


def _parse_optional_float(s: str) -> float | None:
    return _parse_float(s) if s.strip() else None


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ",".join(_fmt(v) for v in value)
    return str(value)


# key -> (RunConfig attribute, dataclass field, parser); attribute None addresses RunConfig itself
_KEYS: dict[str, tuple[str | None, str, Callable[[str], object]]] = {
    "mesh.h": ("mesh", "h", _parse_float),
    "mesh.lambda_cfl": ("mesh", "lambda_cfl", _parse_float),
    "mesh.X": ("mesh", "X", _parse_float),
    "mesh.T": ("mesh", "T", _parse_float),
    "mesh.boundary_tol": ("mesh", "boundary_tol", _parse_float),
    "sampling.kind": ("sampling", "kind", str.strip),
    "sampling.seed": ("sampling", "seed", int),
    "model.rho0": ("model", "rho0", _parse_float),
    "model.source": ("model", "source_enabled", _parse_bool),
    "model.theta": ("model", "theta_enabled", _parse_bool),
    "data.family": ("data", "family", str.strip),
    "data.a": ("data", "a", _parse_float),
    "data.p": ("data", "p", _parse_float),
    "data.b": ("data", "b", _parse_float),
    "data.M": ("data", "M", _parse_optional_float),
    "data.shift": ("data", "shift", _parse_float),
    "data.v_left": ("data", "v_left", _parse_float),
    "data.u_left": ("data", "u_left", _parse_float),
    "data.v_right": ("data", "v_right", _parse_float),
    "data.u_right": ("data", "u_right", _parse_float),
    "data.width": ("data", "width", _parse_float),
    "data.table": ("data", "table", str.strip),
    "output.dir": ("output", "dir", str.strip),
    "output.snapshot_times": ("output", "snapshot_times", _parse_floats),
    "output.every": ("output", "every", int),
    "output.log_every": ("output", "log_every", int),
    "diagnostics.kappa": (None, "kappa", _parse_float),
    "fit.tail_window": ("fit", "tail_window", _parse_window),
    "fit.head_window": ("fit", "head_window", _parse_window),
    "fit.residual_threshold": ("fit", "residual_threshold", _parse_float),
    "oracle.dx": ("oracle", "dx", _parse_float),
    "oracle.cfl": ("oracle", "cfl", _parse_float),
    "riemann.left": ("riemann", "left", _parse_floats),
    "riemann.right": ("riemann", "right", _parse_floats),
    "riemann.theta": ("riemann", "theta", _parse_float),
    "riemann.t": ("riemann", "t", _parse_float),
    "riemann.points": ("riemann", "points", int),
    "convergence.h_values": ("convergence", "h_values", _parse_floats),
    "convergence.T": ("convergence", "T", _parse_float),
}

KEYS: tuple[str, ...] = tuple(sorted(_KEYS))


def _read_lines(text: str) -> list[tuple[int, str, str]]:
    out: list[tuple[int, str, str]] = []
    seen: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"expected key=value, got {line!r}", line=lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"unknown key {key!r}", line=lineno)
        if key in seen:
            raise ConfigError(f"duplicate key {key!r} (first set on line {seen[key]})", line=lineno)
        seen[key] = lineno
        out.append((lineno, key, value))
    return out


def _build(entries: Iterable[tuple[int | None, str, str]], base: RunConfig | None = None) -> RunConfig:
    base = base or RunConfig()
    parsed: dict[str | None, dict[str, object]] = {}
    where: dict[str | None, list[tuple[int | None, str]]] = {}
    for lineno, key, value in entries:
        section, attr, parse = _KEYS[key]
        try:
            parsed.setdefault(section, {})[attr] = parse(value)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"{key}: {e}", line=lineno) from e
        where.setdefault(section, []).append((lineno, key))

    def locate(section: str | None, msg: str) -> int | None:
        hits = where.get(section, [])
        for lineno, key in hits:
            if key in msg:
                return lineno
        return hits[0][0] if hits else None

    updates: dict[str, object] = {}
    for section, values in parsed.items():
        if section is None:
            updates.update(values)
            continue
        try:
            updates[section] = replace(getattr(base, section), **values)
        except ConfigError as e:
            if e.line is not None:
                raise
            raise type(e)(str(e), line=locate(section, str(e))) from e

    try:
        return replace(base, **updates)
    except ConfigError as e:
        if e.line is not None:
            raise
        lineno = None
        for section in where:
            lineno = lineno or locate(section, str(e))
        raise type(e)(str(e), line=lineno) from e


def parse_config(text: str, base: RunConfig | None = None) -> RunConfig:
    return _build(_read_lines(text), base)


def load_config(path: str | Path) -> RunConfig:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    return parse_config(p.read_text(encoding="utf-8"))


def apply_overrides(cfg: RunConfig, items: Iterable[str]) -> RunConfig:
    """Apply ``--set key=value`` items on top of ``cfg``."""
    entries = []
    for item in items:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = (s.strip() for s in item.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"--set: unknown key {key!r}")
        entries.append((None, key, value))
    return _build(entries, cfg) if entries else cfg


def config_items(cfg: RunConfig) -> dict[str, str]:
    out: dict[str, str] = {}
    for key in KEYS:
        section, attr, _ = _KEYS[key]
        obj = cfg if section is None else getattr(cfg, section)
        out[key] = _fmt(getattr(obj, attr))
    return out


def serialize_config(cfg: RunConfig) -> str:
    return "".join(f"{k}={v}\n" for k, v in config_items(cfg).items())
