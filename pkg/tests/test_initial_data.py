from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from ks_glimm.errors import ConfigError, HypothesisError
from ks_glimm.initial_data import InitialDataSpec, make_initial_data
from ks_glimm.model import AsymptoticProfile


def _grid_measures(data, lo: float = -400.0, hi: float = 400.0, dx: float = 1e-3) -> tuple[float, float, float]:
    x = np.arange(lo, hi, dx) + 0.5 * dx
    v = data.v0(x)
    ut = data.u0(x) - 1.0
    tv = np.abs(np.diff(v)).sum() + np.abs(np.diff(ut)).sum()
    sigma2 = np.sum((1.0 + x * x) * (v * v + ut * ut)) * dx
    return float(tv), float(np.sqrt(sigma2)), float(v.sum() * dx)


def test_rational_bump_closed_forms() -> None:
    data = make_initial_data(InitialDataSpec(a=0.1, p=1.0))
    assert data.M == pytest.approx(0.1 * np.pi)
    assert data.delta == pytest.approx(0.2)
    assert data.sigma**2 == pytest.approx(0.01 * np.pi)
    assert float(data.v0(np.array([0.0]))[0]) == pytest.approx(0.1)
    np.testing.assert_array_equal(data.u0(np.linspace(-3, 3, 7)), 1.0)


def test_zero_amplitude_is_equilibrium() -> None:
    data = make_initial_data(InitialDataSpec(a=0.0))
    assert (data.delta, data.sigma, data.M) == (0.0, 0.0, 0.0)
    x = np.linspace(-5.0, 5.0, 11)
    W0 = data.shifted(AsymptoticProfile(0.0))
    np.testing.assert_array_equal(W0(x), 0.0)


def test_derivative_bump_has_no_mass() -> None:
    data = make_initial_data(InitialDataSpec(family="derivative_bump", b=0.04))
    assert data.M == 0.0
    assert data.delta == pytest.approx(1.5 * np.sqrt(3.0) * 0.04)
    assert data.sigma**2 == pytest.approx(0.04**2 * np.pi / 2.0)
    np.testing.assert_array_equal(data.v0(np.linspace(-3, 3, 7)), 0.0)


def test_shifted_bump_measures_match_quadrature() -> None:
    data = make_initial_data(InitialDataSpec(a=0.1, p=1.5, b=0.05, shift=0.5))
    tv, sigma, mass = _grid_measures(data)
    assert data.delta == pytest.approx(tv, rel=1e-6)
    assert data.sigma == pytest.approx(sigma, rel=1e-6)
    assert data.M == pytest.approx(mass, rel=1e-5)


def test_decay_power_hypothesis() -> None:
    with pytest.raises(HypothesisError):
        InitialDataSpec(a=0.1, p=0.75)
    with pytest.raises(HypothesisError):
        InitialDataSpec(a=0.1, p=0.5)
    InitialDataSpec(a=0.1, p=0.8)


def test_mass_target_sets_amplitude() -> None:
    data = make_initial_data(InitialDataSpec(p=1.0, M=0.2))
    assert data.M == pytest.approx(0.2)
    assert float(data.v0(np.array([0.0]))[0]) == pytest.approx(0.2 / np.pi)


def test_shifted_frame_subtracts_profile() -> None:
    data = make_initial_data(InitialDataSpec(a=0.1, p=1.0))
    prof = AsymptoticProfile(data.M)
    x = np.linspace(-4.0, 4.0, 9)
    W = data.shifted(prof)(x)
    np.testing.assert_allclose(W[:, 0], data.v0(x) - prof.theta(x, 0.0))
    np.testing.assert_array_equal(W[:, 1], 0.0)


def test_riemann_pulse() -> None:
    spec = InitialDataSpec(family="riemann_datum", v_left=0.05, u_left=1.0, v_right=-0.03, u_right=1.02, width=1.0)
    data = make_initial_data(spec)
    assert data.delta == pytest.approx(0.2)
    assert data.M == pytest.approx(0.02)
    np.testing.assert_allclose(data.v0(np.array([-1.5, -0.5, 0.0, 0.5, 1.0])), [0.0, 0.05, -0.03, -0.03, 0.0])
    np.testing.assert_allclose(data.u0(np.array([-0.5, 0.5, 2.0])), [1.0, 1.02, 1.0])
    with pytest.raises(HypothesisError):
        InitialDataSpec(family="riemann_datum", width=0.0)


def test_custom_table(tmp_path: Path) -> None:
    p = tmp_path / "data.csv"
    p.write_text("x,v,u\n1,0,1\n-1,0,1\n0,0.1,1.05\n", encoding="utf-8")
    data = make_initial_data(InitialDataSpec(family="custom_table", table=str(p)))
    assert data.M == pytest.approx(0.1)
    assert data.delta == pytest.approx(0.2 + 0.1)
    np.testing.assert_allclose(data.v0(np.array([-2.0, -0.5, 0.0, 0.5, 2.0])), [0.0, 0.05, 0.1, 0.05, 0.0])
    np.testing.assert_allclose(data.u0(np.array([0.0, 3.0])), [1.05, 1.0])


def test_custom_table_errors(tmp_path: Path) -> None:
    with pytest.raises(ConfigError):
        InitialDataSpec(family="custom_table")
    with pytest.raises(ConfigError):
        make_initial_data(InitialDataSpec(family="custom_table", table=str(tmp_path / "missing.csv")))
    bad = tmp_path / "bad.csv"
    bad.write_text("x,v\n0,0.1\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        make_initial_data(InitialDataSpec(family="custom_table", table=str(bad)))
    with pytest.raises(ConfigError):
        InitialDataSpec(family="gaussian")
