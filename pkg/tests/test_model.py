from __future__ import annotations

import numpy as np
import pytest

from ks_glimm.errors import AmplitudeGuardError, ConfigError, DomainError, RegimeError, SingularityError
from ks_glimm.model import (
    AsymptoticProfile,
    ModelParams,
    ShiftedState,
    check_amplitude,
    eigenvalues,
    eigenvector_matrix,
    eigenvector_matrix_inverse,
    entropy_pair,
    flux_W,
    hat_flux,
    hat_source,
    hat_to_shifted,
    homogeneous_hat_source,
    inverse_hopf_cole,
    jacobian_and_inverse,
    primitive_to_shifted,
    rescale_parameters,
    shifted_to_hat,
    shifted_to_primitive,
    source_G,
)


def _ball_samples(n: int, rho0: float = 0.25, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    W = rng.uniform(-rho0, rho0, size=(n, 2))
    return W[np.abs(W).sum(axis=1) < rho0]


def test_flux_examples() -> None:
    np.testing.assert_allclose(flux_W([0.0, 0.0], 0.0), [0.0, 0.0])
    np.testing.assert_allclose(flux_W([0.1, 0.2], 0.0), [0.2, 0.12])
    np.testing.assert_allclose(flux_W([0.1, 0.25], 0.1), [0.25, 0.25])


def test_source_examples() -> None:
    np.testing.assert_allclose(source_G([0.0, 0.1], 0.0), [0.0, 0.11])
    np.testing.assert_allclose(source_G([0.3, -0.1], 0.02), [0.02, -0.09])


def test_jacobian_and_inverse() -> None:
    J, Jinv = jacobian_and_inverse([0.0, 0.0], 0.0)
    np.testing.assert_allclose(J, [[0.0, 1.0], [1.0, 0.0]])
    np.testing.assert_allclose(Jinv, [[0.0, 1.0], [1.0, 0.0]])

    J, Jinv = jacobian_and_inverse([0.1, 0.2], 0.0)
    np.testing.assert_allclose(J, [[0.0, 1.0], [1.2, 0.1]])
    np.testing.assert_allclose(J @ Jinv, np.eye(2), atol=1e-14)

    with pytest.raises(SingularityError):
        jacobian_and_inverse([0.0, -1.0 + 1e-9], 0.0)


def test_eigenvalues_examples() -> None:
    lm, lp = eigenvalues([0.0, 0.0], 0.0)
    assert lm == pytest.approx(-1.0)
    assert lp == pytest.approx(1.0)

    lm, lp = eigenvalues([0.2, 0.21], 0.1)
    assert lm == pytest.approx(-0.96018, abs=1e-5)
    assert lp == pytest.approx(1.26018, abs=1e-5)


def test_hyperbolicity_gap_in_ball() -> None:
    W = _ball_samples(10_000)
    lm, lp = eigenvalues(W, 0.0)
    assert np.all(lp - lm >= 2.0 * np.sqrt(1.0 - 0.25))


def test_eigenvectors() -> None:
    np.testing.assert_allclose(eigenvector_matrix([0.0, 0.0], 0.0), [[1.0, 1.0], [-1.0, 1.0]])
    W = _ball_samples(200, seed=1)
    R = eigenvector_matrix(W, 0.05)
    Rinv = eigenvector_matrix_inverse(W, 0.05)
    np.testing.assert_allclose(R @ Rinv, np.broadcast_to(np.eye(2), R.shape), atol=1e-12)
    J, _ = jacobian_and_inverse(W, 0.05)
    lm, lp = eigenvalues(W, 0.05)
    np.testing.assert_allclose(np.einsum("nij,nj->ni", J, R[..., 0]), lm[:, None] * R[..., 0], atol=1e-12)
    np.testing.assert_allclose(np.einsum("nij,nj->ni", J, R[..., 1]), lp[:, None] * R[..., 1], atol=1e-12)


def test_genuine_nonlinearity() -> None:
    W = _ball_samples(10_000, seed=2)
    eps = 1e-6
    R = eigenvector_matrix(W, 0.0)
    for f in (0, 1):
        r = R[..., f]
        lam_plus = eigenvalues(W + eps * r, 0.0)[f]
        lam_minus = eigenvalues(W - eps * r, 0.0)[f]
        grad_dot_r = (lam_plus - lam_minus) / (2.0 * eps)
        assert np.all(np.abs(grad_dot_r) >= 0.1)


def test_entropy_pair() -> None:
    eta, q, diss = entropy_pair(0.0, 0.0)
    assert (float(eta), float(q), float(diss)) == (0.0, 0.0, 0.0)
    eta, _, _ = entropy_pair(0.2, 0.1)
    assert float(eta) == pytest.approx(0.0248412, abs=1e-6)

    ut = np.linspace(-0.24, 0.24, 97)
    _, _, diss = entropy_pair(np.zeros_like(ut), ut)
    assert np.all(diss >= 0.0)

    with pytest.raises(DomainError):
        entropy_pair(0.0, -1.0)


def test_entropy_convexity() -> None:
    # Hessian of eta in (v, u~) is diag(1, 1/(1+u~))
    ut = np.linspace(-0.24, 0.24, 11)
    h = 1e-4
    eta = lambda v, u: entropy_pair(v, u)[0]  # noqa: E731
    d2u = (eta(0.0, ut + h) - 2.0 * eta(0.0, ut) + eta(0.0, ut - h)) / h**2
    np.testing.assert_allclose(d2u, 1.0 / (1.0 + ut), rtol=1e-5)


def test_hat_flux_examples() -> None:
    np.testing.assert_allclose(hat_flux([0.0, 0.0], [0.0, 0.3], 0.2), [0.0, 0.0])
    np.testing.assert_allclose(hat_flux([0.1, 0.2], [0.0, 0.05], 0.1), [0.2, 0.145])
    W = np.array([0.07, -0.03])
    np.testing.assert_allclose(hat_flux(W, [0.0, 0.0], 0.15), flux_W(W, 0.15) - np.array([0.0, 0.15]))


def test_hat_source_examples() -> None:
    np.testing.assert_allclose(hat_source([0.0, 0.0], 0.0, 0.0, 0.0, 0.0), [0.0, 0.0])
    np.testing.assert_allclose(hat_source([0.2, 0.1], 0.05, 0.0, 0.0, 0.0), [0.1, 0.0975])
    np.testing.assert_allclose(homogeneous_hat_source([0.2, 0.1], -0.3), [-0.3, 0.0])


def test_hat_source_jacobian() -> None:
    Wh = np.array([0.04, -0.02])
    phi, th, thx, thxx = 0.03, 0.12, -0.05, 0.01
    eps = 1e-6
    cols = []
    for j in range(2):
        e = np.zeros(2)
        e[j] = eps
        cols.append((hat_source(Wh + e, phi, th, thx, thxx) - hat_source(Wh - e, phi, th, thx, thxx)) / (2.0 * eps))
    jac = np.stack(cols, axis=-1)
    expected = [[0.5, 0.0], [0.5 * th, 0.5 + 2.0 * (Wh[1] + phi)]]
    np.testing.assert_allclose(jac, expected, atol=1e-6)


def test_profile_heat_identity_and_mass() -> None:
    prof = AsymptoticProfile(0.7)
    rng = np.random.default_rng(3)
    x = rng.uniform(-20.0, 20.0, 1000)
    t = rng.uniform(0.0, 50.0, 1000)
    assert np.max(np.abs(prof.theta_t(x, t) - prof.theta_xx(x, t))) <= 1e-12

    X = 10.0 * np.sqrt(2.0)
    xs = np.linspace(-X, X, 200_001)
    dx = xs[1] - xs[0]
    mids = 0.5 * (xs[1:] + xs[:-1])
    assert float(np.sum(prof.theta(mids, 1.0)) * dx) == pytest.approx(0.7, abs=1e-8)
    assert prof.tail_mass(X, 1.0) < 1e-8
    assert prof.tail_mass(0.0, 1.0) == pytest.approx(0.7)


def test_profile_derivatives_match_differences() -> None:
    prof = AsymptoticProfile(0.3)
    x = np.linspace(-5.0, 5.0, 41)
    h = 1e-5
    np.testing.assert_allclose(prof.theta_x(x, 2.0), (prof.theta(x + h, 2.0) - prof.theta(x - h, 2.0)) / (2 * h), atol=1e-9)
    np.testing.assert_allclose(prof.theta_xxx(x, 2.0), (prof.theta_xx(x + h, 2.0) - prof.theta_xx(x - h, 2.0)) / (2 * h), atol=1e-9)


def test_model_params() -> None:
    with pytest.raises(ConfigError):
        ModelParams(rho0=0.5)
    assert ModelParams(theta_enabled=False).profile(0.4).M == 0.0
    assert ModelParams().profile(0.4).M == 0.4


def test_amplitude_guard() -> None:
    check_amplitude(np.array([[0.1, 0.1]]), 0.25)
    with pytest.raises(AmplitudeGuardError) as ei:
        check_amplitude(np.array([[0.1, 0.1], [0.2, 0.1]]), 0.25, strip=7)
    assert ei.value.strip == 7


def test_inverse_hopf_cole() -> None:
    x = np.arange(-1.0, 1.0 + 1e-12, 0.01)
    np.testing.assert_allclose(inverse_hopf_cole(np.ones_like(x), 0.01), 0.0, atol=1e-14)
    np.testing.assert_allclose(inverse_hopf_cole(np.exp(0.3 * x), 0.01), 0.3, atol=1e-5)
    s = np.ones_like(x)
    s[5] = 0.0
    with pytest.raises(DomainError):
        inverse_hopf_cole(s, 0.01)


def test_rescale_parameters() -> None:
    p = rescale_parameters(1.0, 1.0, 1.0, 1.0)
    assert p.r == 1.0
    assert (p.time_scale, p.space_scale, p.v_scale, p.u_scale) == (1.0, 1.0, 1.0, 1.0)
    assert rescale_parameters(2.0, 1.0, 1.0, 4.0).r == pytest.approx(2.0)
    with pytest.raises(RegimeError):
        rescale_parameters(-1.0, 1.0, 1.0, 1.0)

    xs, ts, vs, us = rescale_parameters(2.0, 1.0, 1.0, 4.0).to_scaled_fields([1.0], [1.0], [1.0], [2.0])
    assert float(ts[0]) == pytest.approx(2.0)
    assert float(us[0]) == pytest.approx(2.0)


def test_frame_round_trip() -> None:
    rng = np.random.default_rng(4)
    P = np.stack([rng.uniform(-0.2, 0.2, 50), 1.0 + rng.uniform(-0.2, 0.2, 50)], axis=-1)
    theta = rng.uniform(0.0, 0.1, 50)
    phi = rng.uniform(-0.05, 0.05, 50)
    W = primitive_to_shifted(P, theta)
    back = shifted_to_primitive(hat_to_shifted(shifted_to_hat(W, phi), phi), theta)
    np.testing.assert_allclose(back, P, atol=1e-14)

    s = ShiftedState(0.1, -0.05)
    back_s = s.to_hat(0.02).to_shifted(0.02)
    assert (back_s.w1, back_s.w2) == pytest.approx((0.1, -0.05))
    assert s.to_primitive(0.3).to_shifted(0.3).w2 == pytest.approx(-0.05)
