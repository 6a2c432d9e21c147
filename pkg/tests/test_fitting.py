from __future__ import annotations

import numpy as np
import pytest

from ks_glimm.diagnostics import envelope_check, fit_decay, fit_exponential, fit_two_term
from ks_glimm.errors import FitError
from ks_glimm.glimm import MeshConfig, SamplingSequence, advance, init_solution
from ks_glimm.initial_data import InitialDataSpec, make_initial_data
from ks_glimm.model import ModelParams


def _times() -> np.ndarray:
    return np.linspace(0.0, 200.0, 401)


def test_power_law_recovered() -> None:
    t = _times()
    fit = fit_decay(t, 0.3 * (t + 1.0) ** -0.25, window=(50.0, 200.0))
    assert fit.exponent == pytest.approx(-0.25, abs=1e-3)
    assert fit.prefactor == pytest.approx(0.3, rel=1e-6)
    assert fit.accepted
    assert fit.model == "power"
    assert fit.window == (50.0, 200.0)
    assert fit.n_samples == 301


def test_exponential_is_not_a_power_law() -> None:
    t = _times()
    values = np.exp(-t / 20.0)
    power = fit_decay(t, values, window=(50.0, 200.0))
    assert not power.accepted
    expo = fit_exponential(t, values, window=(50.0, 200.0))
    assert expo.exponent == pytest.approx(-0.05, rel=1e-9)
    assert expo.accepted

    fast = fit_exponential(t, np.exp(-t), window=(0.0, 20.0))
    assert -fast.exponent == pytest.approx(1.0, rel=1e-9)


def test_constant_series_has_zero_exponent() -> None:
    t = _times()
    fit = fit_decay(t, np.full_like(t, 0.7))
    assert fit.exponent == 0.0
    assert fit.prefactor == pytest.approx(0.7)
    assert fit.residual == 0.0


def test_fit_is_scale_equivariant() -> None:
    t = _times()
    values = 0.2 * (t + 1.0) ** -0.3 * (1.0 + 0.01 * np.sin(t))
    a = fit_decay(t, values, window=(20.0, 200.0))
    b = fit_decay(t, 1000.0 * values, window=(20.0, 200.0))
    assert b.exponent == pytest.approx(a.exponent, abs=1e-12)
    assert b.prefactor == pytest.approx(1000.0 * a.prefactor, rel=1e-9)


def test_fit_rejects_bad_input() -> None:
    t = np.arange(10.0)
    with pytest.raises(FitError):
        fit_decay(t, np.ones(10))
    t = _times()
    values = (t + 1.0) ** -0.25
    values[5] = 0.0
    with pytest.raises(FitError):
        fit_decay(t, values)
    with pytest.raises(FitError):
        fit_decay(t, (t + 1.0) ** -0.25, window=(1000.0, 2000.0))


def test_two_term_fit() -> None:
    t = _times()
    values = 0.2 * (t + 1.0) ** -0.25 + 0.5 * np.exp(-0.5 * t)
    tail = fit_decay(t, values, window=(100.0, 200.0))
    head = fit_exponential(t, values, window=(0.0, 10.0))
    fit = fit_two_term(t, values, tail, head)
    assert fit.tail_coefficient == pytest.approx(0.2, rel=1e-4)
    assert fit.head_coefficient == pytest.approx(0.5, rel=1e-3)
    assert fit.nu == pytest.approx(0.5, rel=1e-3)
    assert fit.residual < 1e-8


def test_envelope_check() -> None:
    t = _times()
    b, frac = envelope_check(t, 0.3 * (t + 1.0) ** -0.25, (10.0, 200.0))
    assert b == pytest.approx(0.3)
    assert frac == 0.0

    slower = 0.3 * (t + 1.0) ** -0.1
    _, frac = envelope_check(t, slower, (10.0, 200.0))
    assert frac > 0.4

    with pytest.raises(FitError):
        envelope_check(t, slower, (500.0, 600.0))


def _bump_run(a: float, X: float, T: float):
    data = make_initial_data(InitialDataSpec(family="rational_bump", a=a, p=2.0))
    profile = ModelParams().profile(data.M)
    mesh = MeshConfig(h=0.05, X=X, T=T)
    _, records = advance(init_solution(data.shifted(profile), profile, mesh), SamplingSequence(), mesh.n_strips())
    return data, records


def test_bump_run_decays() -> None:
    _, records = _bump_run(0.05 / (np.pi / 2.0), X=20.0, T=8.0)
    t = np.array([r.t for r in records])
    tv = np.array([r.TV_total for r in records])
    l1 = np.array([r.L1_to_theta + r.L1_u_to_1 for r in records])
    assert tv[-1] < tv[0]
    assert l1[-1] < l1[0]
    assert fit_decay(t, tv, window=(2.0, 8.0)).exponent < 0.0
    assert fit_decay(t, l1, window=(2.0, 8.0)).exponent < 0.0


def test_decay_scales_with_data_size() -> None:
    a = 0.03
    big_data, big = _bump_run(a, X=16.0, T=4.0)
    small_data, small = _bump_run(0.5 * a, X=16.0, T=4.0)
    assert big_data.sigma == pytest.approx(2.0 * small_data.sigma)

    def l1_fit(records):
        t = np.array([r.t for r in records])
        return fit_decay(t, [r.L1_to_theta + r.L1_u_to_1 for r in records], window=(1.0, 4.0))

    ratio = l1_fit(big).prefactor / l1_fit(small).prefactor
    assert 1.4 <= ratio <= 2.6
    l2_ratio = max(r.weighted_L2 for r in big) / max(r.weighted_L2 for r in small)
    assert 2.4 <= l2_ratio <= 5.6
