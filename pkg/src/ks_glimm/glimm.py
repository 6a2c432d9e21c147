"""Random-choice scheme with operator splitting for the hatted system.

Mesh layout on strip ``m`` (time ``m * tau``):
  - cells sit at mesh indices ``k`` with ``k + m`` odd; a cell carries the sampled state
    ``What_{k,m}`` on ``((k-1)h, (k+1)h)`` and is split into ``What^L`` / ``What^R`` halves;
  - Riemann problems are centred at the indices in between (``k + m`` even), with data
    ``(W^R_{k-1,m}, W^L_{k+1,m})`` and theta frozen at ``(kh, m tau)``;
  - the fan centred at ``k`` is sampled at ``y_{k,m+1} = (k + zeta_{m+1}) h`` to give the cell
    ``k`` of strip ``m + 1``.

The domain is ``[-X, X]`` with cells kept on indices ``[-N-1, N+1]`` (``N = X / h``); cells
beyond ``N`` are equilibrium ghosts.
"""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from ks_glimm.errors import BoundaryInfluenceError, CFLViolationError, ConfigError, DomainError, HypothesisError
from ks_glimm.model import (
    AsymptoticProfile,
    ModelParams,
    check_amplitude,
    hat_flux,
    hat_source,
    homogeneous_hat_source,
    jacobian_and_inverse,
)
from ks_glimm.riemann import FanBatch, solve_riemann_batch

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MeshConfig:
    h: float = 0.01
    lambda_cfl: float = 2.0
    X: float = 60.0
    T: float = 200.0
    boundary_tol: float = 1e-4

    def __post_init__(self) -> None:
        if self.h <= 0.0:
            raise ConfigError(f"mesh.h must be positive, got {self.h}")
        if self.lambda_cfl < 2.0:
            raise ConfigError(f"mesh.lambda_cfl must be >= 2, got {self.lambda_cfl}")
        if self.X < 4.0 * self.h:
            raise ConfigError(f"mesh.X must span at least 4 cells, got X={self.X}, h={self.h}")
        if self.T < 0.0:
            raise ConfigError(f"mesh.T must be nonnegative, got {self.T}")
        if self.boundary_tol <= 0.0:
            raise ConfigError(f"mesh.boundary_tol must be positive, got {self.boundary_tol}")

    @property
    def tau(self) -> float:
        return self.h / self.lambda_cfl

    @property
    def N(self) -> int:
        return int(round(self.X / self.h))

    def n_strips(self, T: float | None = None) -> int:
        T = self.T if T is None else T
        return int(np.floor(T / self.tau + 1e-9))

    def mesh_indices(self) -> np.ndarray:
        """Mesh indices that may carry a cell, ``-N-1 .. N+1``."""
        return np.arange(-self.N - 1, self.N + 2)

    @property
    def phi_offset(self) -> int:
        """Position of mesh index 0 in potential arrays, which cover ``-N-2 .. N+2``."""
        return self.N + 2


@dataclass(frozen=True)
class SamplingSequence:
    kind: str = "van_der_corput"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ("van_der_corput", "seeded_prng"):
            raise ConfigError(f"sampling.kind must be van_der_corput or seeded_prng, got {self.kind!r}")


def sample_sequence_value(m: int, seq: SamplingSequence) -> float:
    """zeta_m in (-1, 1)."""
    if m < 1:
        raise DomainError(f"sampling index must be >= 1, got {m}")
    if seq.kind == "van_der_corput":
        engine = qmc.Halton(d=1, scramble=False)
        engine.fast_forward(m)
        return float(2.0 * engine.random(1)[0, 0] - 1.0)
    rng = np.random.default_rng([seq.seed, m])
    z = 2.0 * rng.random() - 1.0
    return float(max(z, np.nextafter(-1.0, 0.0)))


def discrete_potential(k_cells: np.ndarray, w1_cells: np.ndarray, mesh: MeshConfig) -> np.ndarray:
    """``phi(jh) = 1/2 * int_{-inf}^{jh} w1`` on mesh indices ``-N-2 .. N+2``.

    Each cell ``k`` covers the two unit intervals ``[(k-1)h, kh]`` and ``[kh, (k+1)h]``.
    """
    off = mesh.phi_offset
    sub = np.zeros(2 * off)
    np.add.at(sub, k_cells - 1 + off, w1_cells)
    np.add.at(sub, k_cells + off, w1_cells)
    return 0.5 * mesh.h * np.concatenate([[0.0], np.cumsum(sub)])


def _cell_indices(m: int, mesh: MeshConfig) -> np.ndarray:
    k = mesh.mesh_indices()
    return k[(k + m) % 2 == 1]


@dataclass(frozen=True)
class GridSolution:
    """Cell states ``What_{k,m}`` at the bottom of strip ``m`` plus the potential samples.

    ``phi[j]`` holds ``phi`` at mesh index ``j - N - 2``. ``zeta`` is the sampling value that
    produced this strip (None for the initial data).
    """

    m: int
    k: np.ndarray
    w_hat: np.ndarray
    phi: np.ndarray
    mesh: MeshConfig
    profile: AsymptoticProfile
    params: ModelParams = field(default_factory=ModelParams)
    zeta: float | None = None

    @property
    def t(self) -> float:
        return self.m * self.mesh.tau

    @property
    def x(self) -> np.ndarray:
        return self.k * self.mesh.h

    def phi_at(self, k) -> np.ndarray:
        return self.phi[np.asarray(k) + self.mesh.phi_offset]

    @property
    def W(self) -> np.ndarray:
        """Shifted-frame cell states ``What + Phi``."""
        W = self.w_hat.copy()
        W[:, 1] += self.phi_at(self.k)
        return W

    def cell_field(self):
        from ks_glimm.diagnostics import CellField

        return CellField(x=self.x, width=2.0 * self.mesh.h, W=self.W, t=self.t, profile=self.profile)


@dataclass(frozen=True)
class SplitStates:
    """Split states of every cell of one strip; all arrays are indexed like ``k``."""

    m: int
    k: np.ndarray
    w_hat: np.ndarray
    W: np.ndarray
    S: np.ndarray
    S_tilde: np.ndarray
    G: np.ndarray
    W_L: np.ndarray
    W_R: np.ndarray
    W_hat_L: np.ndarray
    W_hat_R: np.ndarray
    phi_left: np.ndarray
    phi_right: np.ndarray
    theta_left: np.ndarray
    theta_right: np.ndarray


@dataclass(frozen=True)
class StripFans:
    """Riemann fans of one strip, centred at ``k`` (``k + m`` even)."""

    m: int
    k: np.ndarray
    phi_center: np.ndarray
    fans: FanBatch


def _phi_vec(phi: np.ndarray) -> np.ndarray:
    return np.stack([np.zeros_like(phi), phi], axis=-1)


def init_solution(
    W0: Callable[[np.ndarray], np.ndarray],
    profile: AsymptoticProfile,
    mesh: MeshConfig,
    params: ModelParams | None = None,
) -> GridSolution:
    """Sample ``W0`` at cell midpoints and subtract the discrete potential."""
    params = params or ModelParams()
    k = _cell_indices(0, mesh)
    W = np.array(W0(k * mesh.h), dtype=float).reshape(-1, 2)
    if not np.all(np.isfinite(W)):
        raise HypothesisError("initial data is not finite on the mesh")
    near_edge = np.abs(k) >= mesh.N - 2
    edge = np.abs(W[near_edge]).sum(axis=-1)
    if edge.size and float(edge.max()) > mesh.boundary_tol:
        raise HypothesisError(f"initial data is not at equilibrium near +/-X (|W| = {float(edge.max()):.3g} > {mesh.boundary_tol})")
    W[np.abs(k) > mesh.N] = 0.0
    check_amplitude(W, params.rho0, what="initial data", strip=0)

    if params.source_enabled:
        phi = discrete_potential(k, W[:, 0], mesh)
        # phi(X) = int w1 / 2 relaxes at rate 1/2 and shifts the far field by tau * phi(X) / 2 each strip
        edge_shift = 0.5 * mesh.tau * abs(float(phi[-1]))
        if edge_shift > mesh.boundary_tol:
            raise HypothesisError(
                f"initial w1 = v - theta carries mass {2.0 * float(phi[-1]):.3g} on the mesh, moving the far field by "
                f"{edge_shift:.3g} per strip (> {mesh.boundary_tol}); the profile mass must match the mass of v"
            )
    else:
        phi = np.zeros(2 * mesh.phi_offset + 1)
    w_hat = W.copy()
    w_hat[:, 1] -= phi[k + mesh.phi_offset]
    return GridSolution(m=0, k=k, w_hat=w_hat, phi=phi, mesh=mesh, profile=profile, params=params)


def compute_split_states(sol: GridSolution) -> SplitStates:
    mesh, params, prof = sol.mesh, sol.params, sol.profile
    h, tau, t = mesh.h, mesh.tau, sol.t
    k = sol.k
    x = k * h

    th = prof.theta(x, t)
    thx = prof.theta_x(x, t)
    thxx = prof.theta_xx(x, t)
    phi_k = sol.phi_at(k)
    phi_l = sol.phi_at(k - 1)
    phi_r = sol.phi_at(k + 1)
    Phi_k, Phi_l, Phi_r = _phi_vec(phi_k), _phi_vec(phi_l), _phi_vec(phi_r)

    w_hat = sol.w_hat
    W = w_hat + Phi_k
    check_amplitude(W, params.rho0, what="cell state", strip=sol.m)

    _, Jinv_W = jacobian_and_inverse(W, th)
    J_Phi, _ = jacobian_and_inverse(Phi_k, th)
    S = Jinv_W @ J_Phi

    S_tilde = np.zeros_like(W)
    S_tilde[:, 0] = thx * w_hat[:, 1] / (1.0 + W[:, 1])

    if params.source_enabled:
        G = hat_source(w_hat, phi_k, th, thx, thxx)
    else:
        G = homogeneous_hat_source(w_hat, thxx)

    W_L = W + np.einsum("nij,nj->ni", S, Phi_l - Phi_k) + h * S_tilde - tau * G
    W_R = W + np.einsum("nij,nj->ni", S, Phi_r - Phi_k) - h * S_tilde - tau * G
    check_amplitude(W_L, params.rho0, what="left split state", strip=sol.m)
    check_amplitude(W_R, params.rho0, what="right split state", strip=sol.m)

    return SplitStates(
        m=sol.m,
        k=k,
        w_hat=w_hat,
        W=W,
        S=S,
        S_tilde=S_tilde,
        G=G,
        W_L=W_L,
        W_R=W_R,
        W_hat_L=W_L - Phi_l,
        W_hat_R=W_R - Phi_r,
        phi_left=phi_l,
        phi_right=phi_r,
        theta_left=prof.theta((k - 1) * h, t),
        theta_right=prof.theta((k + 1) * h, t),
    )


def flux_mismatch(split: SplitStates, k: int | None = None):
    """Sup-norm of ``F^(What^R, Phi_{k+1}) - F^(What^L, Phi_{k-1})`` per cell, or at cell ``k``."""
    right = hat_flux(split.W_hat_R, _phi_vec(split.phi_right), split.theta_right)
    left = hat_flux(split.W_hat_L, _phi_vec(split.phi_left), split.theta_left)
    mism = np.max(np.abs(right - left), axis=-1)
    if k is None:
        return mism
    idx = np.flatnonzero(split.k == k)
    if idx.size == 0:
        raise KeyError(f"no split state at mesh index {k}")
    return float(mism[idx[0]])


def solve_strip(split: SplitStates, sol: GridSolution) -> StripFans:
    """Solve the Riemann problems between consecutive cells of the strip."""
    mesh = sol.mesh
    centers = split.k[:-1] + 1
    theta_c = sol.profile.theta(centers * mesh.h, sol.t)
    fans = solve_riemann_batch(split.W_R[:-1], split.W_L[1:], theta_c)
    check_amplitude(fans.middle, sol.params.rho0, what="Riemann middle state", strip=sol.m)
    speed = fans.max_abs_speed()
    if speed >= mesh.lambda_cfl:
        raise CFLViolationError(f"wave speed {speed:.6g} >= lambda_cfl {mesh.lambda_cfl}", strip=sol.m)
    return StripFans(m=sol.m, k=centers, phi_center=sol.phi_at(centers), fans=fans)


def riemann_step(split: SplitStates, sol: GridSolution, seq: SamplingSequence, fans: StripFans | None = None) -> GridSolution:
    """Advance from the bottom of strip ``m`` to the bottom of strip ``m + 1``."""
    mesh, params = sol.mesh, sol.params
    fans = fans or solve_strip(split, sol)
    m_next = sol.m + 1
    zeta = sample_sequence_value(m_next, seq)
    U = fans.fans.sample(zeta * mesh.lambda_cfl)

    k_new = _cell_indices(m_next, mesh)
    pos = np.searchsorted(k_new, fans.k)
    W_new = np.zeros((k_new.size, 2))
    W_new[pos] = U
    W_new[np.abs(k_new) > mesh.N] = 0.0

    near_edge = np.abs(k_new) >= mesh.N - 2
    edge = np.abs(W_new[near_edge]).sum(axis=-1)
    if edge.size and float(edge.max()) > mesh.boundary_tol:
        raise BoundaryInfluenceError(f"disturbance of size {float(edge.max()):.3g} within 2h of the boundary", strip=m_next)

    if params.source_enabled:
        phi_new = discrete_potential(k_new, W_new[:, 0], mesh)
    else:
        phi_new = np.zeros_like(sol.phi)

    w_hat = W_new.copy()
    w_hat[:, 1] -= phi_new[k_new + mesh.phi_offset]
    w_hat[pos, 1] = U[:, 1] - fans.phi_center
    return GridSolution(m=m_next, k=k_new, w_hat=w_hat, phi=phi_new, mesh=mesh, profile=sol.profile, params=params, zeta=zeta)


def advance(
    sol: GridSolution,
    seq: SamplingSequence,
    n_strips: int,
    *,
    kappa: float = 20.0,
    observer: Callable[[GridSolution], None] | None = None,
    log_every: int = 0,
):
    """Run ``n_strips`` strips, returning the final solution and one DiagnosticsRecord per strip."""
    from ks_glimm.diagnostics import DiagnosticsAccumulator

    mesh = sol.mesh
    if (sol.m + n_strips) * mesh.tau > mesh.T + 1e-9 * max(1.0, mesh.T):
        raise ConfigError(f"{n_strips} strips of tau={mesh.tau} overrun T={mesh.T}")

    acc = DiagnosticsAccumulator(kappa=kappa)
    records = []
    for _ in range(n_strips):
        if observer is not None:
            observer(sol)
        split = compute_split_states(sol)
        fans = solve_strip(split, sol)
        records.append(acc.update(sol, split, fans))
        sol = riemann_step(split, sol, seq, fans=fans)
        if log_every and sol.m % log_every == 0:
            last = records[-1]
            logger.info("strip %d t=%.4f TV=%.6g N=%.6g mass_v=%.12g", sol.m, sol.t, last.TV_total, last.N_m, last.mass_v)
    if observer is not None:
        observer(sol)
    return sol, records
