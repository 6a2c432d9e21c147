"""Initial-data families with their smallness measures.

``delta`` is the total variation of ``(v0, u0 - 1)`` and ``sigma`` the root of
``int (1 + x^2) (v0^2 + (u0 - 1)^2) dx``. The bumps have closed forms through Beta
integrals; the pulse and tabulated families are measured numerically.
"""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd
from scipy import integrate, special

from ks_glimm.errors import ConfigError, HypothesisError

logger = logging.getLogger(__name__)

FAMILIES = ("rational_bump", "derivative_bump", "riemann_datum", "custom_table")


@dataclass(frozen=True)
class InitialDataSpec:
    """Parameters of a data family; unused fields are ignored by the other families.

    rational_bump: ``v0 = a (1 + (x - shift)^2)^{-p}`` (``a`` fixed by ``M`` when given),
    plus ``u0 - 1 = b d/dx (1 + (x - shift)^2)^{-1}`` when ``b`` is nonzero.
    derivative_bump: only the ``b`` part. riemann_datum: the pulse
    ``(v_left, u_left)`` on ``[shift - width, shift)`` and ``(v_right, u_right)`` on
    ``[shift, shift + width)``, equilibrium elsewhere. custom_table: CSV with columns
    ``x, v, u`` interpolated linearly and taken at equilibrium outside its range.
    """

    family: str = "rational_bump"
    a: float = 0.0
    p: float = 1.0
    b: float = 0.0
    M: float | None = None
    shift: float = 0.0
    v_left: float = 0.0
    u_left: float = 1.0
    v_right: float = 0.0
    u_right: float = 1.0
    width: float = 1.0
    table: str = ""

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ConfigError(f"data.family must be one of {', '.join(FAMILIES)}, got {self.family!r}")
        if self.family == "rational_bump" and 2.0 * self.p <= 1.5:
            raise HypothesisError(f"decay power r = 2p = {2.0 * self.p:g} must exceed 3/2")
        if self.family == "riemann_datum" and self.width <= 0.0:
            raise HypothesisError(f"data.width must be positive, got {self.width}")
        if self.family == "custom_table" and not self.table:
            raise ConfigError("data.table is required for the custom_table family")


@dataclass(frozen=True)
class InitialData:
    """Primitive fields ``v0(x)``, ``u0(x)`` with their measured size and mass."""

    v0: Callable[[np.ndarray], np.ndarray]
    u0: Callable[[np.ndarray], np.ndarray]
    delta: float
    sigma: float
    M: float
    spec: InitialDataSpec

    def shifted(self, profile) -> Callable[[np.ndarray], np.ndarray]:
        """``W0(x) = (v0 - theta(x, 0), u0 - 1)`` for the given profile."""

        def W0(x):
            x = np.asarray(x, dtype=float)
            return np.stack([self.v0(x) - profile.theta(x, 0.0), self.u0(x) - 1.0], axis=-1)

        return W0


def _rational_amplitude(spec: InitialDataSpec) -> float:
    if spec.M is None:
        return spec.a
    return spec.M / special.beta(0.5, spec.p - 0.5)


def _bumps(spec: InitialDataSpec) -> InitialData:
    a = _rational_amplitude(spec) if spec.family == "rational_bump" else 0.0
    p, b, c = spec.p, spec.b, spec.shift

    def v0(x):
        return a * (1.0 + (np.asarray(x, dtype=float) - c) ** 2) ** (-p)

    def u0(x):
        y = np.asarray(x, dtype=float) - c
        return 1.0 - 2.0 * b * y / (1.0 + y * y) ** 2

    tv_v = 2.0 * abs(a)
    tv_u = 1.5 * np.sqrt(3.0) * abs(b)
    sigma2_v = a * a * special.beta(0.5, 2.0 * p - 1.5)
    sigma2_u = b * b * np.pi / 2.0
    # the shift moves the weight (1 + x^2) off-centre
    if c != 0.0:
        sigma2_v += c * c * a * a * special.beta(0.5, 2.0 * p - 0.5)
        sigma2_u += c * c * b * b * np.pi / 4.0
    mass = a * special.beta(0.5, p - 0.5)
    return InitialData(v0, u0, float(tv_v + tv_u), float(np.sqrt(sigma2_v + sigma2_u)), float(mass), spec)


def _pulse(spec: InitialDataSpec) -> InitialData:
    lo, mid, hi = spec.shift - spec.width, spec.shift, spec.shift + spec.width
    vl, vr = spec.v_left, spec.v_right
    ul, ur = spec.u_left - 1.0, spec.u_right - 1.0

    def v0(x):
        x = np.asarray(x, dtype=float)
        return np.where((x >= lo) & (x < mid), vl, np.where((x >= mid) & (x < hi), vr, 0.0))

    def u0(x):
        x = np.asarray(x, dtype=float)
        return 1.0 + np.where((x >= lo) & (x < mid), ul, np.where((x >= mid) & (x < hi), ur, 0.0))

    delta = abs(vl) + abs(vr - vl) + abs(vr) + abs(ul) + abs(ur - ul) + abs(ur)

    def weight_integral(x0, x1):
        return (x1 - x0) + (x1**3 - x0**3) / 3.0

    sigma2 = (vl * vl + ul * ul) * weight_integral(lo, mid) + (vr * vr + ur * ur) * weight_integral(mid, hi)
    mass = spec.width * (vl + vr)
    return InitialData(v0, u0, float(delta), float(np.sqrt(sigma2)), float(mass), spec)


def load_table(path: str | Path) -> pd.DataFrame:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"data.table not found: {p}")
    df = pd.read_csv(p, comment="#")
    missing = {"x", "v", "u"} - set(df.columns)
    if missing:
        raise ConfigError(f"data.table is missing columns: {', '.join(sorted(missing))}")
    df = df.sort_values("x").reset_index(drop=True)
    if df["x"].duplicated().any():
        raise ConfigError("data.table has duplicate x values")
    return df


def _table(spec: InitialDataSpec) -> InitialData:
    df = load_table(spec.table)
    xs = df["x"].to_numpy(dtype=float)
    vs = df["v"].to_numpy(dtype=float)
    us = df["u"].to_numpy(dtype=float) - 1.0

    def v0(x):
        return np.interp(np.asarray(x, dtype=float), xs, vs, left=0.0, right=0.0)

    def u0(x):
        return 1.0 + np.interp(np.asarray(x, dtype=float), xs, us, left=0.0, right=0.0)

    vv = np.concatenate([[0.0], vs, [0.0]])
    uu = np.concatenate([[0.0], us, [0.0]])
    delta = np.abs(np.diff(vv)).sum() + np.abs(np.diff(uu)).sum()
    sigma2 = integrate.trapezoid((1.0 + xs * xs) * (vs * vs + us * us), xs)
    mass = integrate.trapezoid(vs, xs)
    return InitialData(v0, u0, float(delta), float(np.sqrt(sigma2)), float(mass), spec)


def make_initial_data(spec: InitialDataSpec) -> InitialData:
    if spec.family in ("rational_bump", "derivative_bump"):
        data = _bumps(spec)
    elif spec.family == "riemann_datum":
        data = _pulse(spec)
    else:
        data = _table(spec)
    logger.debug("initial data %s: delta=%.6g sigma=%.6g M=%.12g", spec.family, data.delta, data.sigma, data.M)
    return data
