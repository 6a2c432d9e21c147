"""Exact Riemann solver for the frozen-coefficient homogeneous system.

With theta frozen at a value ``theta`` the homogeneous part of the shifted system is,
in primitive variables ``v = w1 + theta`` and ``u = 1 + w2``,

    v_t + u_x = 0,    u_t + (u v)_x = 0,

whose characteristic speeds are the roots of ``lam^2 - v lam - u = 0``. Both families
are genuinely nonlinear and both admit closed forms:

  - Hugoniot locus from ``(v0, u0)`` with right value ``v``: speed ``s = lam(v, u0)`` and
    ``u = u0 + s (v - v0)``;
  - integral curves keep ``C = (v - 2 lam / 3) |lam|^{1/2}`` constant, so a state on the
    curve is recovered from its speed by ``v = 2 lam / 3 + C |lam|^{-1/2}``, ``u = lam^2 - v lam``.

Amplitudes are the signed jump of the first component across a wave. With that
parametrisation ``dP/dgamma = (1, lam) = r`` exactly at ``gamma = 0``; negative amplitudes
are shocks and positive ones rarefactions.

Everything here works on batches: the scalar operations (``forward_wave_curve``,
``amplitude`` ...) are thin wrappers over the array code that the Glimm scheme calls
once per strip.
"""

from __future__ import annotations

import logging
import warnings
from collections.abc import Callable
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy import optimize

from ks_glimm.errors import DomainError, HyperbolicityError, RiemannSolverError, SingularityError
from ks_glimm.model import check_amplitude, eigenvector_matrix_inverse

logger = logging.getLogger(__name__)

Family = Literal["minus", "plus"]
FAMILIES: tuple[Family, Family] = ("minus", "plus")

CURVE_TOL = 1e-14
AMPLITUDE_TOL = 1e-13
MAX_ITER = 50


@dataclass(frozen=True)
class FrozenContext:
    """theta frozen at the centre of a Riemann rectangle."""

    theta_val: float = 0.0

    def __post_init__(self) -> None:
        if not np.isfinite(self.theta_val):
            raise DomainError(f"theta_val must be finite, got {self.theta_val}")


def _lam(v, u, s: float):
    disc = v * v + 4.0 * u
    if np.any(disc <= 0.0):
        raise HyperbolicityError(f"discriminant must be positive, got min {float(np.min(disc))!r}")
    return 0.5 * (v + s * np.sqrt(disc))


def _dlam_dv(v, u, s: float):
    return 0.5 * (1.0 + s * v / np.sqrt(v * v + 4.0 * u))


def _invariant(v, u, s: float):
    lam = _lam(v, u, s)
    return (v - 2.0 * lam / 3.0) * np.sqrt(np.abs(lam))


def _v_on_curve(C, lam):
    return 2.0 * lam / 3.0 + C / np.sqrt(np.abs(lam))


def _newton(func: Callable, x0, fprime: Callable, *, tol: float) -> tuple[np.ndarray, np.ndarray]:
    """scipy Newton on a batch of independent scalar equations; returns (root, converged)."""
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if x0.size == 0:
        return x0.copy(), np.ones(0, dtype=bool)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        try:
            if x0.size == 1:
                root, info = optimize.newton(
                    lambda z: float(func(np.array([z]))[0]),
                    float(x0[0]),
                    fprime=lambda z: float(fprime(np.array([z]))[0]),
                    tol=tol,
                    maxiter=MAX_ITER,
                    full_output=True,
                    disp=False,
                )
                return np.array([root]), np.array([bool(info.converged)])
            res = optimize.newton(func, x0, fprime=fprime, tol=tol, maxiter=MAX_ITER, full_output=True)
            return np.asarray(res.root, dtype=float), np.asarray(res.converged, dtype=bool)
        except (RuntimeError, ZeroDivisionError, FloatingPointError):
            return x0.copy(), np.zeros(x0.shape, dtype=bool)


def _lam_on_curve(C, v_target, s: float, lam_guess):
    """Speed of the state with first component ``v_target`` on the integral curve ``C``."""
    lam, ok = _newton(
        lambda lam: _v_on_curve(C, lam) - v_target,
        lam_guess,
        lambda lam: 2.0 / 3.0 - 0.5 * C * np.sign(lam) * np.abs(lam) ** -1.5,
        tol=CURVE_TOL,
    )
    if not np.all(ok) or np.any(np.sign(lam) != s):
        raise RiemannSolverError("integral-curve inversion did not converge")
    return lam


def _check_density(u) -> None:
    if np.any(u <= 0.0):
        raise SingularityError(f"wave curve reached 1 + w2 <= 0 (min u = {float(np.min(u))!r})")


def _forward_one(v, u, gamma, s: float):
    """Right end of a single wave of family ``s`` from primitive ``(v, u)``."""
    v, u, gamma = np.broadcast_arrays(*(np.atleast_1d(np.asarray(a, dtype=float)) for a in (v, u, gamma)))
    vr = v + gamma
    ur = u.copy()
    shock = gamma < 0.0
    if np.any(shock):
        sig = _lam(vr[shock], u[shock], s)
        ur[shock] = u[shock] + sig * gamma[shock]
    rare = gamma > 0.0
    if np.any(rare):
        C = _invariant(v[rare], u[rare], s)
        guess = _lam(v[rare], u[rare], s) + gamma[rare] * _dlam_dv(v[rare], u[rare], s)
        lam = _lam_on_curve(C, vr[rare], s, guess)
        ur[rare] = lam * lam - vr[rare] * lam
    _check_density(ur)
    return vr, ur


def _backward_one(v, u, gamma, s: float):
    """Left end of a single wave of family ``s`` whose right state is ``(v, u)``."""
    v, u, gamma = np.broadcast_arrays(*(np.atleast_1d(np.asarray(a, dtype=float)) for a in (v, u, gamma)))
    vl = v - gamma
    ul = u.copy()
    shock = gamma < 0.0
    if np.any(shock):
        sig = _lam(vl[shock], u[shock], s)
        ul[shock] = u[shock] - sig * gamma[shock]
    rare = gamma > 0.0
    if np.any(rare):
        C = _invariant(v[rare], u[rare], s)
        guess = _lam(v[rare], u[rare], s) - gamma[rare] * _dlam_dv(v[rare], u[rare], s)
        lam = _lam_on_curve(C, vl[rare], s, guess)
        ul[rare] = lam * lam - vl[rare] * lam
    _check_density(ul)
    return vl, ul


def _du_forward(v, u, gamma, vr, ur, s: float):
    """d u_right / d gamma along a forward wave curve."""
    out = _lam(vr, ur, s)
    shock = gamma < 0.0
    if np.any(shock):
        sig = _lam(vr[shock], u[shock], s)
        out[shock] = sig + gamma[shock] * _dlam_dv(vr[shock], u[shock], s)
    return out


def _du_backward(v, u, gamma, vl, ul, s: float):
    """d u_left / d gamma along a backward wave curve."""
    out = -_lam(vl, ul, s)
    shock = gamma < 0.0
    if np.any(shock):
        sig = _lam(vl[shock], u[shock], s)
        out[shock] = -sig + gamma[shock] * _dlam_dv(vl[shock], u[shock], s)
    return out


def _to_primitive(U, theta):
    U = np.asarray(U, dtype=float)
    return U[..., 0] + theta, 1.0 + U[..., 1]


def _from_primitive(v, u, theta):
    return np.stack([v - theta, u - 1.0], axis=-1)


def _flatten(U, theta):
    U = np.asarray(U, dtype=float)
    shape = U.shape[:-1]
    th = np.broadcast_to(np.asarray(theta, dtype=float), shape).reshape(-1)
    return U.reshape(-1, 2), th, shape


def forward_wave_curve(U_L, gamma, ctx: FrozenContext | float = 0.0) -> np.ndarray:
    """P: right end-state of the fan with left state ``U_L`` and amplitudes ``gamma``."""
    theta = ctx.theta_val if isinstance(ctx, FrozenContext) else ctx
    U, th, shape = _flatten(U_L, theta)
    g = np.asarray(gamma, dtype=float).reshape(-1, 2)
    v, u = _to_primitive(U, th)
    v, u = _forward_one(v, u, g[:, 0], -1.0)
    v, u = _forward_one(v, u, g[:, 1], 1.0)
    return _from_primitive(v, u, th).reshape(shape + (2,))


def backward_wave_curve(U_R, gamma, ctx: FrozenContext | float = 0.0) -> np.ndarray:
    """Q: left end-state of the fan with right state ``U_R`` and amplitudes ``gamma``."""
    theta = ctx.theta_val if isinstance(ctx, FrozenContext) else ctx
    U, th, shape = _flatten(U_R, theta)
    g = np.asarray(gamma, dtype=float).reshape(-1, 2)
    v, u = _to_primitive(U, th)
    v, u = _backward_one(v, u, g[:, 1], 1.0)
    v, u = _backward_one(v, u, g[:, 0], -1.0)
    return _from_primitive(v, u, th).reshape(shape + (2,))


def _solve_minus_amplitude(vl, ul, vr, ur, gamma0):
    """Find the minus amplitude so that the minus curve from L meets the backward plus curve into R."""
    dv = vr - vl
    cache: dict[str, np.ndarray] = {}

    def evaluate(gm):
        if "gm" in cache and np.array_equal(cache["gm"], gm):
            return cache
        gp = dv - gm
        vm, um = _forward_one(vl, ul, gm, -1.0)
        vq, uq = _backward_one(vr, ur, gp, 1.0)
        cache.update(gm=gm.copy(), gp=gp, vm=vm, um=um, vq=vq, uq=uq)
        return cache

    def g(gm):
        c = evaluate(gm)
        return c["um"] - c["uq"]

    def dg(gm):
        c = evaluate(gm)
        return _du_forward(vl, ul, gm, c["vm"], c["um"], -1.0) + _du_backward(vr, ur, c["gp"], c["vq"], c["uq"], 1.0)

    gm, ok = _newton(g, gamma0, dg, tol=AMPLITUDE_TOL)
    if not np.all(ok):
        logger.debug("Newton did not converge for %d Riemann problems, bracketing instead", int(np.sum(~ok)))
    for i in np.flatnonzero(~ok):
        gm[i] = _bisect_minus_amplitude(vl[i], ul[i], vr[i], ur[i], gamma0[i])
    return gm


def _bisect_minus_amplitude(vl, ul, vr, ur, guess) -> float:
    def g(gm: float) -> float:
        _, um = _forward_one(vl, ul, gm, -1.0)
        _, uq = _backward_one(vr, ur, (vr - vl) - gm, 1.0)
        return float(um[0] - uq[0])

    width = 2.0 * (abs(vr - vl) + abs(ur - ul)) + 1e-8
    for _ in range(8):
        lo, hi = guess - width, guess + width
        try:
            if g(lo) * g(hi) <= 0.0:
                return float(optimize.brentq(g, lo, hi, xtol=1e-15, maxiter=200))
        except (SingularityError, HyperbolicityError, RiemannSolverError):
            break
        width *= 2.0
    raise RiemannSolverError(
        f"middle-state solve failed: v_L={vl!r} u_L={ul!r} v_R={vr!r} u_R={ur!r}",
        left=(vl, ul),
        right=(vr, ur),
    )


@dataclass(frozen=True)
class FanBatch:
    """Wave fans of many independent Riemann problems, one row per problem.

    ``speeds[i, f]`` is ``(s_lo, s_hi)`` of family ``f`` (0 = minus, 1 = plus).
    """

    left: np.ndarray
    right: np.ndarray
    middle: np.ndarray
    gamma: np.ndarray
    theta: np.ndarray
    speeds: np.ndarray

    def __len__(self) -> int:
        return int(self.gamma.shape[0])

    def max_abs_speed(self) -> float:
        return float(np.max(np.abs(self.speeds))) if len(self) else 0.0

    def strengths(self) -> np.ndarray:
        return np.abs(self.gamma)

    def jump_norms(self) -> np.ndarray:
        """1-norm of the state jump across each wave, shape (n, 2)."""
        return np.stack(
            [np.abs(self.middle - self.left).sum(axis=-1), np.abs(self.right - self.middle).sum(axis=-1)],
            axis=-1,
        )

    def _curve_states(self):
        vl, ul = _to_primitive(self.left, self.theta)
        vm, um = _to_primitive(self.middle, self.theta)
        return (vl, ul), (vm, um)

    def sample(self, xi) -> np.ndarray:
        """States at similarity coordinate ``xi = x / t`` (scalar or one value per fan)."""
        n = len(self)
        xi = np.broadcast_to(np.asarray(xi, dtype=float), (n,))
        (vl, ul), (vm, um) = self._curve_states()
        out = self.right.copy()
        m_lo, m_hi = self.speeds[:, 0, 0], self.speeds[:, 0, 1]
        p_lo, p_hi = self.speeds[:, 1, 0], self.speeds[:, 1, 1]

        in_plus = (xi >= p_lo) & (xi < p_hi)
        if np.any(in_plus):
            C = _invariant(vm[in_plus], um[in_plus], 1.0)
            lam = xi[in_plus]
            v = _v_on_curve(C, lam)
            out[in_plus] = _from_primitive(v, lam * lam - v * lam, self.theta[in_plus])
        mid = (xi >= m_hi) & (xi < p_lo)
        out[mid] = self.middle[mid]
        in_minus = (xi >= m_lo) & (xi < m_hi)
        if np.any(in_minus):
            C = _invariant(vl[in_minus], ul[in_minus], -1.0)
            lam = xi[in_minus]
            v = _v_on_curve(C, lam)
            out[in_minus] = _from_primitive(v, lam * lam - v * lam, self.theta[in_minus])
        left = xi < m_lo
        out[left] = self.left[left]
        return out

    def split(self, xi) -> tuple[np.ndarray, np.ndarray]:
        """Amplitudes lying left of and right of the ray ``xi``, each shape (n, 2)."""
        n = len(self)
        xi = np.broadcast_to(np.asarray(xi, dtype=float), (n,))
        (vl, ul), (vm, um) = self._curve_states()
        left_part = np.zeros_like(self.gamma)
        bases = ((vl, ul), (vm, um))
        for f, s in enumerate((-1.0, 1.0)):
            g = self.gamma[:, f]
            lo, hi = self.speeds[:, f, 0], self.speeds[:, f, 1]
            shock = g < 0.0
            left_part[shock, f] = np.where(lo[shock] <= xi[shock], g[shock], 0.0)
            rare = g > 0.0
            full = rare & (xi >= hi)
            left_part[full, f] = g[full]
            inside = rare & (xi > lo) & (xi < hi)
            if np.any(inside):
                v0, u0 = bases[f][0][inside], bases[f][1][inside]
                C = _invariant(v0, u0, s)
                left_part[inside, f] = _v_on_curve(C, xi[inside]) - v0
        return left_part, self.gamma - left_part

    def fan(self, i: int) -> WaveFan:
        waves = []
        states = (self.left[i], self.middle[i], self.right[i])
        for f, family in enumerate(FAMILIES):
            waves.append(
                ElementaryWave(
                    family=family,
                    amplitude=float(self.gamma[i, f]),
                    left_state=states[f].copy(),
                    right_state=states[f + 1].copy(),
                    speed_range=(float(self.speeds[i, f, 0]), float(self.speeds[i, f, 1])),
                )
            )
        return WaveFan(
            gamma=self.gamma[i].copy(),
            waves=(waves[0], waves[1]),
            middle_state=self.middle[i].copy(),
            theta_val=float(self.theta[i]),
        )


def solve_riemann_batch(U_L, U_R, theta, *, rho0: float | None = None) -> FanBatch:
    """Solve ``len(U_L)`` Riemann problems at once; ``theta`` is scalar or one value per problem."""
    UL = np.atleast_2d(np.asarray(U_L, dtype=float))
    UR = np.atleast_2d(np.asarray(U_R, dtype=float))
    n = UL.shape[0]
    th = np.broadcast_to(np.asarray(theta, dtype=float), (n,)).copy()
    if rho0 is not None:
        check_amplitude(UL, rho0, what="Riemann left state")
        check_amplitude(UR, rho0, what="Riemann right state")

    vl, ul = _to_primitive(UL, th)
    vr, ur = _to_primitive(UR, th)
    _check_density(ul)
    _check_density(ur)

    Rinv = eigenvector_matrix_inverse(UL, th)
    gamma0 = np.einsum("...ij,...j->...i", Rinv, UR - UL)[:, 0]
    same = np.all(UL == UR, axis=-1)
    gamma0[same] = 0.0
    gm = _solve_minus_amplitude(vl, ul, vr, ur, gamma0)
    gm[same] = 0.0
    gp = (vr - vl) - gm

    vm, um = _forward_one(vl, ul, gm, -1.0)
    middle = _from_primitive(vm, um, th)
    middle[same] = UL[same]
    vm, um = _to_primitive(middle, th)

    speeds = np.empty((n, 2, 2))
    speeds[:, 0, 0] = _lam(vl, ul, -1.0)
    speeds[:, 0, 1] = _lam(vm, um, -1.0)
    speeds[:, 1, 0] = _lam(vm, um, 1.0)
    speeds[:, 1, 1] = _lam(vr, ur, 1.0)
    m_shock = gm < 0.0
    if np.any(m_shock):
        speeds[m_shock, 0, :] = _lam(vm[m_shock], ul[m_shock], -1.0)[:, None]
    p_shock = gp < 0.0
    if np.any(p_shock):
        speeds[p_shock, 1, :] = _lam(vr[p_shock], um[p_shock], 1.0)[:, None]

    if rho0 is not None:
        check_amplitude(middle, rho0, what="Riemann middle state")
    return FanBatch(left=UL.copy(), right=UR.copy(), middle=middle, gamma=np.stack([gm, gp], axis=-1), theta=th, speeds=speeds)


@dataclass(frozen=True)
class ElementaryWave:
    family: Family
    amplitude: float
    left_state: np.ndarray
    right_state: np.ndarray
    speed_range: tuple[float, float]

    @property
    def is_shock(self) -> bool:
        return self.amplitude < 0.0

    @property
    def is_rarefaction(self) -> bool:
        return self.amplitude > 0.0

    @property
    def strength(self) -> float:
        return abs(self.amplitude)


@dataclass(frozen=True)
class WaveFan:
    gamma: np.ndarray
    waves: tuple[ElementaryWave, ElementaryWave]
    middle_state: np.ndarray
    theta_val: float = 0.0

    @property
    def left_state(self) -> np.ndarray:
        return self.waves[0].left_state

    @property
    def right_state(self) -> np.ndarray:
        return self.waves[1].right_state

    def as_batch(self) -> FanBatch:
        speeds = np.array([[w.speed_range for w in self.waves]], dtype=float)
        return FanBatch(
            left=self.left_state[None, :],
            right=self.right_state[None, :],
            middle=self.middle_state[None, :],
            gamma=self.gamma[None, :],
            theta=np.array([self.theta_val]),
            speeds=speeds,
        )


def amplitude(U_L, U_R, ctx: FrozenContext | float = 0.0) -> np.ndarray:
    """Omega: the amplitude vector with ``P(U_L, gamma) = U_R``."""
    theta = ctx.theta_val if isinstance(ctx, FrozenContext) else ctx
    UL, th, shape = _flatten(U_L, theta)
    UR = np.asarray(U_R, dtype=float).reshape(-1, 2)
    return solve_riemann_batch(UL, UR, th).gamma.reshape(shape + (2,))


def H(U, Z, ctx: FrozenContext | float = 0.0) -> np.ndarray:
    return amplitude(U, np.asarray(U, dtype=float) + np.asarray(Z, dtype=float), ctx)


def solve_riemann(U_L, U_R, ctx: FrozenContext | float = 0.0, *, rho0: float | None = None) -> WaveFan:
    theta = ctx.theta_val if isinstance(ctx, FrozenContext) else ctx
    batch = solve_riemann_batch(np.asarray(U_L, dtype=float)[None, :], np.asarray(U_R, dtype=float)[None, :], theta, rho0=rho0)
    return batch.fan(0)


def sample_fan(fan: WaveFan, xi: float) -> np.ndarray:
    return fan.as_batch().sample(xi)[0]


def split_fan(fan: WaveFan, xi: float) -> tuple[np.ndarray, np.ndarray]:
    """Amplitudes of ``fan`` lying left and right of the ray ``x / t = xi``.

    A shock belongs to the side its speed lies on; a rarefaction is cut at ``xi``.
    """
    left, right = fan.as_batch().split(xi)
    return left[0], right[0]
