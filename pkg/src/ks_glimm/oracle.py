"""First-order finite-volume reference solver.

Works in the primitive frame ``(v, u)`` where the balance law reads

    v_t + u_x = 0,    u_t + (u v)_x = u (1 - u)

(the profile theta only enters through the conversion to the shifted frame). The
hyperbolic part uses a Lax-Friedrichs interface flux on a uniform grid with
transmissive ghost cells; the logistic source is integrated exactly and combined
by Strang splitting.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np

from ks_glimm.errors import CFLViolationError, ConfigError
from ks_glimm.model import AsymptoticProfile, check_amplitude, eigenvalues

logger = logging.getLogger(__name__)

SPEED_BOUND = 2.0


@dataclass(frozen=True)
class FVConfig:
    """Grid and time stepping of the reference solver.

    ``dt = cfl * dx / SPEED_BOUND``. ``flux`` selects the dissipation coefficient:
    ``"local"`` uses the local maximal wave speed (Rusanov), ``"global"`` the grid
    ratio ``dx / dt`` of the textbook scheme.
    """

    dx: float = 1e-3
    X: float = 1.0
    T: float = 0.2
    cfl: float = 0.4
    flux: str = "local"

    def __post_init__(self) -> None:
        if self.dx <= 0.0:
            raise ConfigError(f"oracle.dx must be positive, got {self.dx}")
        if not (0.0 < self.cfl <= 0.4):
            raise ConfigError(f"oracle.cfl must lie in (0, 0.4], got {self.cfl}")
        if self.X <= self.dx:
            raise ConfigError(f"oracle domain X={self.X} is smaller than dx={self.dx}")
        if self.T < 0.0:
            raise ConfigError(f"oracle T must be nonnegative, got {self.T}")
        if self.flux not in ("local", "global"):
            raise ConfigError(f"oracle flux must be local or global, got {self.flux!r}")

    @property
    def dt(self) -> float:
        return self.cfl * self.dx / SPEED_BOUND

    @property
    def n_cells(self) -> int:
        return int(round(2.0 * self.X / self.dx))

    def centers(self) -> np.ndarray:
        return -self.X + (np.arange(self.n_cells) + 0.5) * self.dx


@dataclass
class FVResult:
    x: np.ndarray
    times: list[float] = field(default_factory=list)
    W: list[np.ndarray] = field(default_factory=list)
    mass_v: list[float] = field(default_factory=list)

    def at(self, t: float) -> np.ndarray:
        i = int(np.argmin(np.abs(np.asarray(self.times) - t)))
        return self.W[i]


def ks_flux(U: np.ndarray) -> np.ndarray:
    v, u = U[..., 0], U[..., 1]
    return np.stack([u, u * v], axis=-1)


def ks_speed(U: np.ndarray) -> np.ndarray:
    lam_m, lam_p = eigenvalues(np.stack([U[..., 0], U[..., 1] - 1.0], axis=-1), 0.0)
    return np.maximum(np.abs(lam_m), np.abs(lam_p))


def burgers_flux(u: np.ndarray) -> np.ndarray:
    return 0.5 * u * u


def burgers_speed(u: np.ndarray) -> np.ndarray:
    return np.abs(u)


def lax_friedrichs_step(
    U: np.ndarray,
    dt: float,
    dx: float,
    flux: Callable[[np.ndarray], np.ndarray],
    speed: Callable[[np.ndarray], np.ndarray] | None = None,
) -> np.ndarray:
    """One conservative step with transmissive boundaries; ``U`` is (n,) or (n, d).

    Without ``speed`` the interface dissipation is ``dx / dt`` (classical scheme).
    """
    pad = ((1, 1),) + ((0, 0),) * (U.ndim - 1)
    Ug = np.pad(U, pad, mode="edge")
    Fg = flux(Ug)
    left, right = Ug[:-1], Ug[1:]
    if speed is None:
        a = np.full(left.shape[0], dx / dt)
    else:
        a = np.maximum(speed(left), speed(right))
    if U.ndim > 1:
        a = a[:, None]
    F_half = 0.5 * (Fg[:-1] + Fg[1:]) - 0.5 * a * (right - left)
    return U - dt / dx * (F_half[1:] - F_half[:-1])


def logistic_step(u: np.ndarray, dt: float) -> np.ndarray:
    """Exact flow of ``u' = u (1 - u)`` over ``dt``."""
    return u / (u + (1.0 - u) * np.exp(-dt))


def _snapshot_steps(times: Sequence[float], dt: float, T: float) -> dict[int, float]:
    out: dict[int, float] = {}
    for t in times:
        if t < 0.0 or t > T + 1e-12:
            raise ConfigError(f"snapshot time {t} outside [0, {T}]")
        out[int(round(t / dt))] = float(t)
    return out


def fv_solve(
    W0: Callable[[np.ndarray], np.ndarray],
    profile: AsymptoticProfile,
    cfg: FVConfig,
    source_enabled: bool = True,
    *,
    times: Sequence[float] | None = None,
    rho0: float | None = 0.25,
) -> FVResult:
    """Evolve shifted-frame data ``W0(x)`` and return shifted-frame snapshots.

    Snapshots are taken at the step nearest each requested time (default: ``0`` and ``T``).
    """
    x = cfg.centers()
    dt, dx = cfg.dt, cfg.dx
    W = np.asarray(W0(x), dtype=float).reshape(-1, 2)
    if rho0 is not None:
        check_amplitude(W, rho0, what="oracle initial data", strip=0)
    U = np.empty_like(W)
    U[:, 0] = W[:, 0] + profile.theta(x, 0.0)
    U[:, 1] = 1.0 + W[:, 1]

    n_steps = int(round(cfg.T / dt))
    wanted = _snapshot_steps([0.0, cfg.T] if times is None else times, dt, cfg.T)
    speed = ks_speed if cfg.flux == "local" else None
    res = FVResult(x=x)

    def record(n: int) -> None:
        t = n * dt
        Wt = np.stack([U[:, 0] - profile.theta(x, t), U[:, 1] - 1.0], axis=-1)
        res.times.append(t)
        res.W.append(Wt)
        res.mass_v.append(float(U[:, 0].sum() * dx))

    logger.debug("fv_solve: %d cells, %d steps of dt=%.3g", x.size, n_steps, dt)
    for n in range(n_steps + 1):
        if n in wanted:
            record(n)
        if n == n_steps:
            break
        s = float(np.max(ks_speed(U)))
        if s >= SPEED_BOUND:
            raise CFLViolationError(f"oracle wave speed {s:.6g} reached the bound {SPEED_BOUND}", strip=n)
        if source_enabled:
            U[:, 1] = logistic_step(U[:, 1], 0.5 * dt)
        U = lax_friedrichs_step(U, dt, dx, ks_flux, speed)
        if source_enabled:
            U[:, 1] = logistic_step(U[:, 1], 0.5 * dt)
    return res


def scalar_solve(u0: np.ndarray, dx: float, T: float, *, cfl: float = 0.4) -> np.ndarray:
    """Burgers sanity mode: same stepping with ``f(u) = u^2 / 2``."""
    u = np.asarray(u0, dtype=float).copy()
    bound = max(float(np.max(np.abs(u))), 1e-12)
    dt = cfl * dx / bound
    n = int(np.ceil(T / dt))
    dt = T / n if n else dt
    for _ in range(n):
        u = lax_friedrichs_step(u, dt, dx, burgers_flux, burgers_speed)
    return u


def l1_difference(a: np.ndarray, b: np.ndarray, dx: float) -> float:
    return float(np.abs(np.asarray(a) - np.asarray(b)).sum() * dx)


def restrict(values: np.ndarray, x_src: np.ndarray, x_dst: np.ndarray) -> np.ndarray:
    """Piecewise-constant lookup of cell values at ``x_dst`` (nearest cell of ``x_src``)."""
    edges = 0.5 * (x_src[1:] + x_src[:-1])
    idx = np.searchsorted(edges, x_dst)
    return np.asarray(values)[idx]
