"""The hyperbolic Keller-Segel balance law in its three coordinate frames.

Frames:
  - primitive ``(v, u)``: chemical gradient and cell density, equilibrium ``(0, 1)``
  - shifted ``W = (w1, w2) = (v - theta, u - 1)``: zero-mass perturbation of the heat-kernel profile
  - hatted ``What = (w1, w3) = W - Phi`` with ``Phi = (0, phi)`` and ``phi = 1/2 * int_{-inf}^x w1``

In the shifted frame the system reads ``W_t + F(W, x, t)_x + G(W, x, t) = 0`` with

    F(W) = (w2, (w1 + theta)(1 + w2)),    G(W) = (theta_t, (1 + w2) w2).

All functions are vectorised: states are arrays whose last axis has length 2 and
every scalar argument may be an array broadcasting against the leading axes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from ks_glimm.errors import AmplitudeGuardError, ConfigError, DomainError, HyperbolicityError, RegimeError, SingularityError


@dataclass(frozen=True)
class PrimitiveState:
    v: float
    u: float

    def to_shifted(self, theta: float) -> ShiftedState:
        return ShiftedState(self.v - theta, self.u - 1.0)


@dataclass(frozen=True)
class ShiftedState:
    w1: float
    w2: float

    def as_array(self) -> np.ndarray:
        return np.array([self.w1, self.w2], dtype=float)

    def to_primitive(self, theta: float) -> PrimitiveState:
        return PrimitiveState(self.w1 + theta, 1.0 + self.w2)

    def to_hat(self, phi: float) -> HatState:
        return HatState(self.w1, self.w2 - phi)


@dataclass(frozen=True)
class HatState:
    w1: float
    w3: float

    def as_array(self) -> np.ndarray:
        return np.array([self.w1, self.w3], dtype=float)

    def to_shifted(self, phi: float) -> ShiftedState:
        return ShiftedState(self.w1, self.w3 + phi)


@dataclass(frozen=True)
class ModelParams:
    """Amplitude guard radius and the two model toggles.

    ``source_enabled=False`` removes the logistic damping and the potential
    redistribution (Phi = 0); ``theta_enabled=False`` replaces the profile by
    theta = 0. With both off the scheme is classical Glimm for a conservation law.
    """

    rho0: float = 0.25
    source_enabled: bool = True
    theta_enabled: bool = True

    def __post_init__(self) -> None:
        if not (0.0 < self.rho0 < 0.5):
            raise ConfigError(f"model.rho0 must lie in (0, 1/2), got {self.rho0}")

    def profile(self, mass: float) -> AsymptoticProfile:
        return AsymptoticProfile(mass if self.theta_enabled else 0.0)


@dataclass(frozen=True)
class AsymptoticProfile:
    """Heat kernel ``theta = M (4 pi (t+1))^{-1/2} exp(-x^2 / (4 (t+1)))`` and its derivatives."""

    M: float

    def theta(self, x, t):
        s = np.asarray(t, dtype=float) + 1.0
        x = np.asarray(x, dtype=float)
        return self.M / np.sqrt(4.0 * np.pi * s) * np.exp(-(x * x) / (4.0 * s))

    def theta_x(self, x, t):
        s = np.asarray(t, dtype=float) + 1.0
        x = np.asarray(x, dtype=float)
        return -x / (2.0 * s) * self.theta(x, t)

    def theta_xx(self, x, t):
        s = np.asarray(t, dtype=float) + 1.0
        x = np.asarray(x, dtype=float)
        return (x * x / (4.0 * s * s) - 1.0 / (2.0 * s)) * self.theta(x, t)

    def theta_xxx(self, x, t):
        s = np.asarray(t, dtype=float) + 1.0
        x = np.asarray(x, dtype=float)
        return (3.0 * x / (4.0 * s * s) - x**3 / (8.0 * s**3)) * self.theta(x, t)

    def theta_t(self, x, t):
        s = np.asarray(t, dtype=float) + 1.0
        x = np.asarray(x, dtype=float)
        return (-1.0 / (2.0 * s) + x * x / (4.0 * s * s)) * self.theta(x, t)

    def mass(self) -> float:
        return float(self.M)

    def tail_mass(self, X: float, t: float) -> float:
        """Mass of |theta| outside [-X, X] at time t."""
        return float(abs(self.M) * special.erfc(X / (2.0 * np.sqrt(t + 1.0))))


def _split(W) -> tuple[np.ndarray, np.ndarray]:
    W = np.asarray(W, dtype=float)
    return W[..., 0], W[..., 1]


def flux_W(W, theta_val) -> np.ndarray:
    w1, w2 = _split(W)
    return np.stack(np.broadcast_arrays(w2, (w1 + theta_val) * (1.0 + w2)), axis=-1)


def source_G(W, theta_t_val) -> np.ndarray:
    w1, w2 = _split(W)
    return np.stack(np.broadcast_arrays(np.zeros_like(w1) + theta_t_val, (1.0 + w2) * w2), axis=-1)


DENSITY_FLOOR = 1e-8


def _require_positive_density(w2) -> None:
    if np.any(1.0 + np.asarray(w2) <= DENSITY_FLOOR):
        raise SingularityError(f"1 + w2 must be positive, got min {float(np.min(1.0 + np.asarray(w2)))!r}")


def jacobian_and_inverse(W, theta_val) -> tuple[np.ndarray, np.ndarray]:
    """Return ``F_W`` and its closed-form inverse."""
    w1, w2 = _split(W)
    _require_positive_density(w2)
    a, b = np.broadcast_arrays(w1 + theta_val, 1.0 + w2)
    J = np.empty(a.shape + (2, 2))
    J[..., 0, 0] = 0.0
    J[..., 0, 1] = 1.0
    J[..., 1, 0] = b
    J[..., 1, 1] = a
    Jinv = np.empty_like(J)
    Jinv[..., 0, 0] = -a / b
    Jinv[..., 0, 1] = 1.0 / b
    Jinv[..., 1, 0] = 1.0
    Jinv[..., 1, 1] = 0.0
    return J, Jinv


def eigenvalues(W, theta_val) -> tuple[np.ndarray, np.ndarray]:
    w1, w2 = _split(W)
    a = w1 + theta_val
    disc = a * a + 4.0 * (1.0 + w2)
    if np.any(disc <= 0.0):
        raise HyperbolicityError(f"discriminant must be positive, got min {float(np.min(disc))!r}")
    root = np.sqrt(disc)
    return 0.5 * (a - root), 0.5 * (a + root)


def eigenvector_matrix(W, theta_val) -> np.ndarray:
    lam_m, lam_p = eigenvalues(W, theta_val)
    lam_m, lam_p = np.broadcast_arrays(lam_m, lam_p)
    R = np.empty(lam_m.shape + (2, 2))
    R[..., 0, 0] = 1.0
    R[..., 0, 1] = 1.0
    R[..., 1, 0] = lam_m
    R[..., 1, 1] = lam_p
    return R


def eigenvector_matrix_inverse(W, theta_val) -> np.ndarray:
    lam_m, lam_p = eigenvalues(W, theta_val)
    lam_m, lam_p = np.broadcast_arrays(lam_m, lam_p)
    det = lam_p - lam_m
    Rinv = np.empty(lam_m.shape + (2, 2))
    Rinv[..., 0, 0] = lam_p / det
    Rinv[..., 0, 1] = -1.0 / det
    Rinv[..., 1, 0] = -lam_m / det
    Rinv[..., 1, 1] = 1.0 / det
    return Rinv


def entropy_pair(v, u_tilde) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Entropy ``eta``, entropy flux ``q`` and the dissipation ``u~(1+u~)ln(1+u~)``."""
    v = np.asarray(v, dtype=float)
    ut = np.asarray(u_tilde, dtype=float)
    if np.any(1.0 + ut <= 0.0):
        raise DomainError("entropy requires 1 + u~ > 0")
    g = (1.0 + ut) * np.log1p(ut)
    return 0.5 * v * v + g - ut, v * g, ut * g


def hat_flux(W_hat, Phi, theta_val, *, rho0: float | None = None) -> np.ndarray:
    """``F^(What, Phi) = F(What + Phi) - F(Phi)`` with theta frozen."""
    W_hat = np.asarray(W_hat, dtype=float)
    Phi = np.asarray(Phi, dtype=float)
    W = W_hat + Phi
    if rho0 is not None:
        check_amplitude(W, rho0, what="What + Phi")
        check_amplitude(Phi, rho0, what="Phi")
    return flux_W(W, theta_val) - flux_W(Phi, theta_val)


def hat_source(W_hat, phi, theta_val, theta_x, theta_xx) -> np.ndarray:
    w1, w3 = _split(W_hat)
    g1 = 0.5 * w1 + theta_xx
    g2 = 0.5 * w3 + 0.5 * theta_val * w1 + 0.5 * phi + theta_x * (0.5 + phi) + (w3 + phi) ** 2
    return np.stack(np.broadcast_arrays(g1, g2), axis=-1)


def homogeneous_hat_source(W_hat, theta_xx) -> np.ndarray:
    """Source left when the logistic term is switched off: only theta_t = theta_xx remains."""
    w1, _ = _split(W_hat)
    return np.stack(np.broadcast_arrays(np.zeros_like(w1) + theta_xx, np.zeros_like(w1)), axis=-1)


def in_ball(W, rho0: float) -> np.ndarray:
    w1, w2 = _split(W)
    return np.abs(w1) + np.abs(w2) < rho0


def check_amplitude(W, rho0: float, *, what: str = "state", strip: int | None = None) -> None:
    """Raise AmplitudeGuardError unless every state lies strictly inside the rho0 ball."""
    ok = in_ball(W, rho0)
    if not np.all(ok):
        w1, w2 = _split(W)
        worst = float(np.max(np.abs(w1) + np.abs(w2)))
        raise AmplitudeGuardError(f"{what} left the rho0={rho0} ball (|w1|+|w2| = {worst:.6g})", strip=strip)


def inverse_hopf_cole(s, h: float) -> np.ndarray:
    """``v = s_x / s`` by second-order centred differences on a uniform grid."""
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0.0):
        raise DomainError("inverse Hopf-Cole requires s > 0 everywhere")
    if s.size < 3:
        raise DomainError("inverse Hopf-Cole needs at least 3 samples")
    return np.gradient(s, h, edge_order=2) / s


@dataclass(frozen=True)
class RescaledParameters:
    """Reduced damping rate and the factors taking physical to dimensionless variables."""

    r: float
    time_scale: float
    space_scale: float
    v_scale: float
    u_scale: float
    D: float

    def to_scaled_fields(self, x, t, v, u):
        """Map physical ``(x, t, v, u)`` samples to ``(x~, t~, v~, u~)``."""
        return (
            np.asarray(x, dtype=float) * self.space_scale,
            np.asarray(t, dtype=float) * self.time_scale,
            np.asarray(v, dtype=float) * self.v_scale,
            np.asarray(u, dtype=float) * self.u_scale,
        )


def rescale_parameters(chi: float, mu: float, K: float, a: float, D: float = 0.0) -> RescaledParameters:
    chi_mu = chi * mu
    if chi_mu <= 0.0:
        raise RegimeError(f"chi*mu must be positive, got {chi_mu}")
    if K <= 0.0 or a <= 0.0:
        raise RegimeError(f"K and a must be positive, got K={K}, a={a}")
    c = chi_mu * K
    return RescaledParameters(
        r=a / c,
        time_scale=c,
        space_scale=float(np.sqrt(c)),
        v_scale=float(np.sign(chi) * np.sqrt(chi / (mu * K))),
        u_scale=1.0 / K,
        D=D,
    )


def primitive_to_shifted(P, theta) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    return np.stack(np.broadcast_arrays(P[..., 0] - theta, P[..., 1] - 1.0), axis=-1)


def shifted_to_primitive(W, theta) -> np.ndarray:
    w1, w2 = _split(W)
    return np.stack(np.broadcast_arrays(w1 + theta, w2 + 1.0), axis=-1)


def shifted_to_hat(W, phi) -> np.ndarray:
    w1, w2 = _split(W)
    return np.stack(np.broadcast_arrays(w1, w2 - phi), axis=-1)


def hat_to_shifted(W_hat, phi) -> np.ndarray:
    w1, w3 = _split(W_hat)
    return np.stack(np.broadcast_arrays(w1, w3 + phi), axis=-1)
