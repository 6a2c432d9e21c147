from __future__ import annotations

import numpy as np
import pytest

from ks_glimm.errors import CFLViolationError, ConfigError
from ks_glimm.model import AsymptoticProfile
from ks_glimm.oracle import FVConfig, fv_solve, l1_difference, logistic_step, restrict, scalar_solve
from ks_glimm.riemann import sample_fan, solve_riemann

ZERO = AsymptoticProfile(0.0)


def _bump(x):
    x = np.asarray(x, dtype=float)
    return np.stack([0.05 * np.exp(-((x / 0.1) ** 2)), -0.02 * np.exp(-((x / 0.1) ** 2))], axis=-1)


def test_fv_config_validation() -> None:
    cfg = FVConfig(dx=1e-3, X=1.0, T=0.2, cfl=0.4)
    assert cfg.dt == pytest.approx(2e-4)
    assert cfg.n_cells == 2000
    assert cfg.centers()[0] == pytest.approx(-1.0 + 5e-4)
    with pytest.raises(ConfigError):
        FVConfig(cfl=0.5)
    with pytest.raises(ConfigError):
        FVConfig(flux="upwind")
    with pytest.raises(ConfigError):
        FVConfig(dx=0.0)


def test_equilibrium_is_stationary() -> None:
    res = fv_solve(lambda x: np.zeros((np.size(x), 2)), ZERO, FVConfig(dx=1e-2, X=1.0, T=0.2))
    assert res.times[0] == 0.0
    assert res.times[-1] == pytest.approx(0.2)
    assert np.all(res.at(0.2) == 0.0)


def test_logistic_step_is_exact_flow() -> None:
    u0 = np.array([0.5, 0.9, 1.0, 1.2])
    exact = 1.0 / (1.0 + (1.0 / u0 - 1.0) * np.exp(-0.3))
    np.testing.assert_allclose(logistic_step(u0, 0.3), exact, rtol=1e-14)
    np.testing.assert_allclose(logistic_step(logistic_step(u0, 0.1), 0.2), logistic_step(u0, 0.3), rtol=1e-14)
    assert logistic_step(np.array([1.0]), 5.0)[0] == 1.0


def test_mass_of_v_is_conserved() -> None:
    res = fv_solve(_bump, ZERO, FVConfig(dx=2e-3, X=1.0, T=0.2), times=[0.0, 0.1, 0.2])
    assert len(res.mass_v) == 3
    assert res.mass_v[-1] == pytest.approx(res.mass_v[0], abs=1e-12)
    assert res.mass_v[0] == pytest.approx(0.05 * 0.1 * np.sqrt(np.pi), abs=1e-9)


def test_snapshot_time_outside_run() -> None:
    with pytest.raises(ConfigError):
        fv_solve(_bump, ZERO, FVConfig(dx=1e-2, X=1.0, T=0.2), times=[0.5])


def test_wave_speed_bound() -> None:
    with pytest.raises(CFLViolationError):
        fv_solve(lambda x: np.tile([2.0, 0.0], (np.size(x), 1)), ZERO, FVConfig(dx=1e-2, X=1.0, T=0.1), rho0=None)


def test_burgers_mode_creates_no_new_extrema() -> None:
    x = np.linspace(-1.0, 1.0, 401)
    u0 = np.where(np.abs(x) < 0.5, np.cos(np.pi * x), 0.0)
    u = scalar_solve(u0, x[1] - x[0], 0.5)
    assert u.max() <= u0.max() + 1e-12
    assert u.min() >= u0.min() - 1e-12
    assert float(u.sum()) == pytest.approx(float(u0.sum()), abs=1e-9)


def test_burgers_shock_speed() -> None:
    dx = 1e-3
    x = -1.0 + (np.arange(2000) + 0.5) * dx
    u0 = np.where(x < 0.0, 1.0, 0.0)
    u = scalar_solve(u0, dx, 0.4)
    exact = np.where(x < 0.2, 1.0, 0.0)
    assert l1_difference(u, exact, dx) < 0.02


def test_riemann_pulse_matches_exact_fan() -> None:
    UL = np.array([0.05, 0.0])
    UR = np.array([-0.03, 0.02])

    def W0(x):
        x = np.asarray(x, dtype=float)
        left = (x >= -1.0) & (x < 0.0)
        right = (x >= 0.0) & (x < 1.0)
        return np.where(left[:, None], UL, np.where(right[:, None], UR, 0.0))

    fan = solve_riemann(UL, UR, 0.0)
    errors = []
    for dx in (2e-3, 1e-3):
        cfg = FVConfig(dx=dx, X=2.0, T=0.2)
        res = fv_solve(W0, ZERO, cfg, source_enabled=False)
        near = np.abs(res.x) < 0.5
        exact = np.stack([sample_fan(fan, xi) for xi in res.x[near] / 0.2])
        errors.append(l1_difference(res.at(0.2)[near], exact, dx))
    assert errors[1] < 5e-3
    assert errors[1] < errors[0]


def test_restrict_picks_nearest_cell() -> None:
    x_src = np.array([0.0, 1.0, 2.0])
    vals = np.array([10.0, 20.0, 30.0])
    np.testing.assert_array_equal(restrict(vals, x_src, np.array([-0.2, 0.4, 0.6, 1.9, 5.0])), [10.0, 10.0, 20.0, 30.0, 30.0])


def _pulse(UL, UR):
    def W0(x):
        x = np.asarray(x, dtype=float)
        left = (x >= -1.0) & (x < 0.0)
        right = (x >= 0.0) & (x < 1.0)
        return np.where(left[:, None], UL, np.where(right[:, None], UR, 0.0))

    return W0


def test_random_riemann_problems_match_exact_fans() -> None:
    rng = np.random.default_rng(12)
    worst = 0.0
    for _ in range(20):
        UL = rng.uniform(-0.05, 0.05, size=2)
        UR = UL + rng.uniform(-0.05, 0.05, size=2)
        fan = solve_riemann(UL, UR, 0.0)
        errors = []
        for dx in (2e-3, 1e-3):
            res = fv_solve(_pulse(UL, UR), ZERO, FVConfig(dx=dx, X=2.0, T=0.2), source_enabled=False)
            near = np.abs(res.x) < 0.5
            exact = np.stack([sample_fan(fan, xi) for xi in res.x[near] / 0.2])
            errors.append(l1_difference(res.at(0.2)[near], exact, dx))
        assert errors[1] < errors[0], (UL, UR, errors)
        worst = max(worst, errors[1])
    assert worst < 5e-3
