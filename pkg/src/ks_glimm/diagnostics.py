"""Functionals tracked along a Glimm run and decay-rate fitting.

Per-strip quantities are collected into :class:`DiagnosticsRecord` by
:class:`DiagnosticsAccumulator`, which also keeps the running time integrals
(weighted dissipation, ``Y``, entropy dissipation). Snapshot functionals work on a
:class:`CellField` so they apply equally to Glimm strips and to hand-built fields.

Quadrature is the midpoint rule on the cells; integrals are truncated at the
cell range.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import asdict, dataclass, field
from typing import TYPE_CHECKING

import numpy as np
from scipy import optimize, stats

from ks_glimm.errors import ConfigError, FitError
from ks_glimm.model import AsymptoticProfile, entropy_pair

if TYPE_CHECKING:
    from ks_glimm.glimm import GridSolution, SplitStates, StripFans

logger = logging.getLogger(__name__)

CSV_COLUMNS: dict[str, str] = {
    "t": "t",
    "TV": "TV_total",
    "K": "K_m",
    "L": "L_m",
    "Mint": "M_m",
    "N": "N_m",
    "mass_v": "mass_v",
    "mass_w1": "mass_w1",
    "L1_v_theta": "L1_to_theta",
    "L1_u": "L1_u_to_1",
    "wL2": "weighted_L2",
    "diss": "dissipation_accum",
    "Y": "Y_accum",
    "eta": "entropy_total",
    "slack": "entropy_slack",
    "m": "m",
    "Delta": "Delta_m",
    "J": "J_m",
    "TV_waves": "wave_jump_tv",
    "eta_step": "entropy_production_step",
}


@dataclass(frozen=True)
class CellField:
    """Piecewise-constant shifted-frame field on cells of equal ``width`` centred at ``x``."""

    x: np.ndarray
    width: float
    W: np.ndarray
    t: float = 0.0
    profile: AsymptoticProfile = field(default_factory=lambda: AsymptoticProfile(0.0))

    @property
    def theta(self) -> np.ndarray:
        return self.profile.theta(self.x, self.t)


@dataclass(frozen=True)
class DiagnosticsRecord:
    m: int
    t: float
    TV_total: float
    K_m: float
    L_m: float
    M_m: float
    N_m: float
    mass_v: float
    mass_w1: float
    L1_to_theta: float
    L1_u_to_1: float
    weighted_L2: float
    dissipation_accum: float
    Y_accum: float
    entropy_total: float
    entropy_production_step: float
    entropy_slack: float
    Delta_m: float
    J_m: float
    wave_jump_tv: float

    def as_row(self) -> dict[str, float]:
        d = asdict(self)
        return {col: d[attr] for col, attr in CSV_COLUMNS.items()}


@dataclass(frozen=True)
class FitResult:
    """Least-squares fit of ``log(value)`` against ``log(t+1)`` (power) or ``t`` (exponential).

    ``residual`` is the RMS of the log residuals; ``accepted`` compares it to the threshold.
    """

    exponent: float
    prefactor: float
    residual: float
    window: tuple[float, float]
    model: str = "power"
    n_samples: int = 0
    accepted: bool = True


@dataclass(frozen=True)
class TwoTermFit:
    tail_coefficient: float
    head_coefficient: float
    nu: float
    residual: float


def _as_field(sol) -> CellField:
    return sol if isinstance(sol, CellField) else sol.cell_field()


def total_variation(states) -> float:
    """Sum of 1-norm jumps between consecutive states of a piecewise-constant field."""
    states = np.asarray(states, dtype=float).reshape(-1, 2)
    if states.shape[0] < 2:
        return 0.0
    return float(np.abs(np.diff(states, axis=0)).sum())


def strip_representation(split: SplitStates, fans: StripFans) -> np.ndarray:
    """Left-to-right states of ``What_h`` just after the strip starts.

    Order per cell: ``What^L``, ``What^R``, then the fan's middle state (in the hatted
    frame of its rectangle) before the next cell.
    """
    n = split.k.size
    out = np.empty((3 * n - 1, 2))
    out[0::3] = split.W_hat_L
    out[1::3] = split.W_hat_R
    mid = fans.fans.middle.copy()
    mid[:, 1] -= fans.phi_center
    out[2::3] = mid
    return out


def tv_split(split: SplitStates, fans: StripFans) -> tuple[float, float, float]:
    """``(K_m, L_m, wave jump TV)``: odd-point jumps, wave strengths, 1-norm jumps across waves."""
    K = float(np.abs(split.W_hat_R - split.W_hat_L).sum())
    L = float(fans.fans.strengths().sum())
    waves = float(fans.fans.jump_norms().sum())
    return K, L, waves


def interaction_potential(positions, families, amplitudes) -> float:
    """Sum of strength products over approaching pairs.

    A pair (left wave i, right wave j at a larger position) approaches when i is a plus
    wave and j a minus wave, or when both are of the same family and at least one is a
    shock. ``families`` holds 0 for minus and 1 for plus.
    """
    pos = np.asarray(positions, dtype=float)
    fam = np.asarray(families, dtype=int)
    amp = np.asarray(amplitudes, dtype=float)
    if pos.size < 2:
        return 0.0
    order = np.lexsort((fam, pos))
    pos, fam, amp = pos[order], fam[order], amp[order]
    strength = np.abs(amp)

    plus_left = np.concatenate([[0.0], np.cumsum(np.where(fam == 1, strength, 0.0))[:-1]])
    total = float(np.sum(np.where(fam == 0, strength * plus_left, 0.0)))

    for f in (0, 1):
        a = strength[fam == f]
        r = np.where(amp[fam == f] > 0.0, a, 0.0)
        total += 0.5 * (a.sum() ** 2 - (a * a).sum()) - 0.5 * (r.sum() ** 2 - (r * r).sum())
    return float(max(total, 0.0))


def strip_interaction_potential(fans: StripFans) -> float:
    n = fans.k.size
    pos = np.repeat(fans.k.astype(float), 2)
    fam = np.tile([0, 1], n)
    return interaction_potential(pos, fam, fans.fans.gamma.reshape(-1))


def glimm_functional(L_m: float, M_m: float, kappa: float = 20.0) -> float:
    if kappa <= 0.0:
        raise ConfigError(f"kappa must be positive, got {kappa}")
    return L_m + kappa * M_m


def interaction_defect(prev: StripFans, fans: StripFans, zeta: float, lambda_cfl: float) -> float:
    """``sum_k |eps_k - alpha_k - beta_k|`` over the diamonds of the strip of ``fans``.

    ``alpha_k`` is the part of the fan at ``k-1`` lying right of the sampling ray
    ``xi = zeta * lambda_cfl``, ``beta_k`` the part of the fan at ``k+1`` lying left of it.
    """
    left_part, right_part = prev.fans.split(zeta * lambda_cfl)
    alpha = np.zeros_like(fans.fans.gamma)
    beta = np.zeros_like(fans.fans.gamma)
    for target, parts, shift in ((alpha, right_part, -1), (beta, left_part, 1)):
        src = fans.k + shift
        idx = np.searchsorted(prev.k, src)
        idx = np.clip(idx, 0, prev.k.size - 1)
        hit = prev.k[idx] == src
        target[hit] = parts[idx[hit]]
    return float(np.abs(fans.fans.gamma - alpha - beta).sum())


def _integral(f: CellField, values) -> float:
    return float(np.sum(values) * f.width)


def weighted_l2(sol, t: float | None = None) -> float:
    f = _as_field(sol)
    t = f.t if t is None else t
    return _integral(f, (f.x**2 + t + 1.0) * (f.W[:, 0] ** 2 + f.W[:, 1] ** 2))


def dissipation_increment(sol, t: float | None = None) -> float:
    f = _as_field(sol)
    t = f.t if t is None else t
    return _integral(f, (f.x**2 + t + 1.0) * (f.W[:, 1] + f.profile.theta_x(f.x, t)) ** 2)


def Y_increment(sol) -> float:
    f = _as_field(sol)
    return _integral(f, f.W[:, 0] ** 2)


def masses(sol) -> tuple[float, float]:
    """``(mass of v, mass of w1)`` over the cells."""
    f = _as_field(sol)
    m_w1 = _integral(f, f.W[:, 0])
    return m_w1 + _integral(f, f.theta), m_w1


def l1_distance_to_profile(sol) -> tuple[float, float]:
    """``(int |v - theta|, int |u - 1|)``."""
    f = _as_field(sol)
    return _integral(f, np.abs(f.W[:, 0])), _integral(f, np.abs(f.W[:, 1]))


def entropy_integral(sol) -> float:
    f = _as_field(sol)
    eta, _, _ = entropy_pair(f.W[:, 0] + f.theta, f.W[:, 1])
    return _integral(f, eta)


def entropy_dissipation(sol) -> float:
    f = _as_field(sol)
    _, _, diss = entropy_pair(f.W[:, 0] + f.theta, f.W[:, 1])
    return _integral(f, diss)


def entropy_budget(sol_t1, sol_t2, accumulated_dissipation: float) -> float:
    """Signed slack of the integrated entropy inequality; admissible runs give <= tol(h)."""
    return entropy_integral(sol_t2) - entropy_integral(sol_t1) + accumulated_dissipation


def potential_psi(sol) -> np.ndarray:
    """``Psi(x) = int_{-inf}^x w1`` at the cell edges (left edge of the first cell first)."""
    f = _as_field(sol)
    return np.concatenate([[0.0], np.cumsum(f.W[:, 0]) * f.width])


def check_zero_tails(psi) -> float:
    psi = np.asarray(psi, dtype=float)
    return float(max(abs(psi[0]), abs(psi[-1])))


@dataclass
class DiagnosticsAccumulator:
    """Builds one record per strip and carries the running time integrals."""

    kappa: float = 20.0
    dissipation_accum: float = 0.0
    Y_accum: float = 0.0
    entropy_dissipation_accum: float = 0.0
    entropy_initial: float | None = None
    entropy_previous: float | None = None
    entropy_increment_previous: float = 0.0
    previous_fans: StripFans | None = None

    def update(self, sol: GridSolution, split: SplitStates, fans: StripFans) -> DiagnosticsRecord:
        f = sol.cell_field()
        tau = sol.mesh.tau

        K, L, waves = tv_split(split, fans)
        tv = K + waves
        M = strip_interaction_potential(fans)
        mass_v, mass_w1 = masses(f)
        l1_v, l1_u = l1_distance_to_profile(f)
        eta = entropy_integral(f)
        if self.entropy_initial is None:
            self.entropy_initial = eta
        step = 0.0 if self.entropy_previous is None else eta - self.entropy_previous + self.entropy_increment_previous
        slack = eta - self.entropy_initial + self.entropy_dissipation_accum

        if self.previous_fans is not None and sol.zeta is not None:
            delta = interaction_defect(self.previous_fans, fans, sol.zeta, sol.mesh.lambda_cfl)
        else:
            delta = 0.0
        phi_tv = float(np.abs(np.diff(sol.phi)).sum())

        rec = DiagnosticsRecord(
            m=sol.m,
            t=sol.t,
            TV_total=tv,
            K_m=K,
            L_m=L,
            M_m=M,
            N_m=glimm_functional(L, M, self.kappa),
            mass_v=mass_v,
            mass_w1=mass_w1,
            L1_to_theta=l1_v,
            L1_u_to_1=l1_u,
            weighted_L2=weighted_l2(f),
            dissipation_accum=self.dissipation_accum,
            Y_accum=self.Y_accum,
            entropy_total=eta,
            entropy_production_step=step,
            entropy_slack=slack,
            Delta_m=delta,
            J_m=tau * (tv + phi_tv),
            wave_jump_tv=waves,
        )

        self.dissipation_accum += tau * dissipation_increment(f)
        self.Y_accum += tau * Y_increment(f)
        self.entropy_increment_previous = tau * entropy_dissipation(f) if sol.params.source_enabled else 0.0
        self.entropy_dissipation_accum += self.entropy_increment_previous
        self.entropy_previous = eta
        self.previous_fans = fans
        return rec


def _window_mask(t: np.ndarray, window: tuple[float, float] | None) -> np.ndarray:
    if window is None:
        return np.ones(t.shape, dtype=bool)
    lo, hi = window
    return (t >= lo) & (t <= hi)


def _prepare(t, values, window, min_samples: int):
    t = np.asarray(t, dtype=float)
    y = np.asarray(values, dtype=float)
    mask = _window_mask(t, window)
    t, y = t[mask], y[mask]
    if t.size < min_samples:
        raise FitError(f"need at least {min_samples} samples in the fit window, got {t.size}")
    if np.any(~np.isfinite(y)) or np.any(y <= 0.0):
        raise FitError("fit requires positive finite values")
    win = (float(t.min()), float(t.max())) if window is None else (float(window[0]), float(window[1]))
    return t, y, win


def _linear_fit(xs: np.ndarray, ys: np.ndarray) -> tuple[float, float, float]:
    if np.ptp(ys) == 0.0:
        return 0.0, float(ys[0]), 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        res = stats.linregress(xs, ys)
    resid = ys - (res.intercept + res.slope * xs)
    return float(res.slope), float(res.intercept), float(np.sqrt(np.mean(resid * resid)))


def fit_decay(
    t,
    values,
    window: tuple[float, float] | None = None,
    *,
    residual_threshold: float = 0.05,
    min_samples: int = 20,
) -> FitResult:
    """Power law ``value ~ prefactor * (t+1)^exponent`` by least squares in log-log."""
    t, y, win = _prepare(t, values, window, min_samples)
    slope, intercept, resid = _linear_fit(np.log(t + 1.0), np.log(y))
    return FitResult(
        exponent=slope,
        prefactor=float(np.exp(intercept)),
        residual=resid,
        window=win,
        model="power",
        n_samples=int(t.size),
        accepted=resid <= residual_threshold,
    )


def fit_exponential(
    t,
    values,
    window: tuple[float, float] | None = None,
    *,
    residual_threshold: float = 0.05,
    min_samples: int = 20,
) -> FitResult:
    """``value ~ prefactor * exp(exponent * t)``; the decay rate nu is ``-exponent``."""
    t, y, win = _prepare(t, values, window, min_samples)
    slope, intercept, resid = _linear_fit(t, np.log(y))
    return FitResult(
        exponent=slope,
        prefactor=float(np.exp(intercept)),
        residual=resid,
        window=win,
        model="exponential",
        n_samples=int(t.size),
        accepted=resid <= residual_threshold,
    )


def fit_two_term(t, values, tail: FitResult, head: FitResult) -> TwoTermFit:
    """``A (t+1)^{-1/4} + B exp(-nu t)`` seeded from separate tail and head fits."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(values, dtype=float)

    def model(tt, A, B, nu):
        return A * (tt + 1.0) ** -0.25 + B * np.exp(-nu * tt)

    A0 = tail.prefactor * (tail.window[0] + 1.0) ** (tail.exponent + 0.25)
    p0 = [max(A0, 1e-12), max(head.prefactor - A0, 1e-12), max(-head.exponent, 1e-3)]
    try:
        popt, _ = optimize.curve_fit(model, t, y, p0=p0, bounds=([0.0, 0.0, 0.0], [np.inf, np.inf, np.inf]), maxfev=20000)
    except (RuntimeError, ValueError) as e:
        raise FitError(f"two-term fit failed: {e}") from e
    resid = y - model(t, *popt)
    return TwoTermFit(
        tail_coefficient=float(popt[0]),
        head_coefficient=float(popt[1]),
        nu=float(popt[2]),
        residual=float(np.sqrt(np.mean(resid * resid))),
    )


def envelope_check(t, values, window: tuple[float, float], exponent: float = -0.25) -> tuple[float, float]:
    """Calibrate ``b`` on the first half of the window, count violations over all of it.

    Returns ``(b, violation fraction)`` for ``value <= b (t+1)^exponent``.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(values, dtype=float)
    mask = _window_mask(t, window)
    t, y = t[mask], y[mask]
    if t.size == 0:
        raise FitError("empty envelope window")
    scaled = y * (t + 1.0) ** (-exponent)
    half = t <= 0.5 * (window[0] + window[1])
    b = float(scaled[half].max()) if np.any(half) else float(scaled.max())
    violations = scaled > b * (1.0 + 1e-12)
    return b, float(np.mean(violations))
