import warnings

import numpy as np
import pytest
from scipy import stats

from tbq.linear_task import analytic_mse_theorem1
from tbq.mathkit import psd_sqrt
from tbq.quadratic_task import (
    branch_inputs,
    build_G,
    covariance_recovery_model,
    design_corollary1,
    design_no_combining_quadratic,
    empirical_moments,
    gaussian_fourth_moments,
    lift,
    quadratic_task_model,
    run_quadratic_pipeline,
)

from .conftest import random_spd, within_stderr


@pytest.fixture(scope="module")
def cov_model():
    return covariance_recovery_model()


def test_lift_examples():
    np.testing.assert_array_equal(lift([1.0, 2.0]), [1.0, 2.0, 2.0, 4.0])
    np.testing.assert_array_equal(lift([3.0]), [9.0])
    x = np.array([1.0, 2.0, 3.0])
    L = lift(x)
    # column-major: entry j*N + i is x_i x_j
    assert L[1 * 3 + 0] == 2.0 and L[2 * 3 + 1] == 6.0
    batch = np.random.default_rng(0).standard_normal((7, 3))
    np.testing.assert_allclose(lift(batch), np.stack([lift(r) for r in batch]))


def test_build_G_examples():
    np.testing.assert_array_equal(build_G([np.eye(2)]), [[1.0, 0.0, 0.0, 1.0]])
    # asymmetric forms are symmetrized
    np.testing.assert_array_equal(build_G([[[0.0, 1.0], [0.0, 0.0]]]), [[0.0, 0.5, 0.5, 0.0]])
    with pytest.raises(ValueError):
        build_G([np.eye(2), np.eye(3)])
    with pytest.raises(ValueError):
        build_G([])


def test_G_lift_matches_forms(rng):
    for _ in range(20):
        N = int(rng.integers(1, 6))
        Cs = [rng.standard_normal((N, N)) for _ in range(3)]
        x = rng.standard_normal(N)
        np.testing.assert_allclose(build_G(Cs) @ lift(x), [x @ C @ x for C in Cs], rtol=1e-12, atol=1e-12)


def test_fourth_moments_scalar():
    mean, cov = gaussian_fourth_moments([[1.0]])
    np.testing.assert_array_equal(mean, [1.0])
    np.testing.assert_array_equal(cov, [[2.0]])
    _, cov = gaussian_fourth_moments([[3.0]])
    assert cov[0, 0] == 18.0


def test_fourth_moments_identity2():
    mean, cov = gaussian_fourth_moments(np.eye(2))
    np.testing.assert_array_equal(mean, [1.0, 0.0, 0.0, 1.0])
    # x1^2, x2^2 have variance 2; x1 x2 appears twice with variance 1
    expected = np.array([[2, 0, 0, 0], [0, 1, 1, 0], [0, 1, 1, 0], [0, 0, 0, 2]], dtype=float)
    np.testing.assert_array_equal(cov, expected)


def test_fourth_moments_monte_carlo(rng):
    S = random_spd(rng, 3, cond=5.0)
    mean, cov = gaussian_fourth_moments(S)
    x = rng.multivariate_normal(np.zeros(3), S, size=400_000)
    L = lift(x)
    np.testing.assert_allclose(L.mean(0), mean, atol=6 * np.sqrt(np.diag(cov).max() / len(x)))
    Lc = L - mean
    prods = Lc[:, :, None] * Lc[:, None, :]
    se = prods.std(0) / np.sqrt(len(x))
    emp = prods.mean(0)
    # 81 entries compared at once, so the band is 5 sigma
    assert np.all(np.abs(emp - cov) <= 5 * se + 1e-12)


def test_empirical_moments(rng):
    x = rng.standard_normal((200_000, 2))
    mean, cov = empirical_moments(x)
    a_mean, a_cov = gaussian_fourth_moments(np.eye(2))
    np.testing.assert_allclose(mean, a_mean, atol=0.02)
    np.testing.assert_allclose(cov, a_cov, atol=0.05)
    np.testing.assert_allclose(cov, cov.T)


def test_empirical_moments_constant():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        mean, cov = empirical_moments(np.ones((100, 2)))
    np.testing.assert_allclose(mean, 1.0)
    np.testing.assert_allclose(cov, 0.0, atol=1e-12)


def test_empirical_moments_sample_checks():
    with pytest.raises(ValueError, match="N\\^2"):
        empirical_moments(np.ones((3, 2)))
    with pytest.warns(UserWarning, match="10 N\\^4"):
        empirical_moments(np.random.default_rng(0).standard_normal((50, 2)))


@pytest.mark.parametrize("N", [1, 2, 3, 4])
def test_lift_covariance_rank(N, rng):
    _, cov = gaussian_fourth_moments(random_spd(rng, N))
    assert psd_sqrt(cov).rank == N * (N + 1) // 2


def test_model_validation():
    with pytest.raises(ValueError):
        quadratic_task_model(np.eye(3), [np.eye(2)])
    with pytest.raises(ValueError, match="samples"):
        quadratic_task_model(np.eye(2), [np.eye(2)], moments="empirical")
    with pytest.raises(ValueError, match="moments"):
        quadratic_task_model(np.eye(2), [np.eye(2)], moments="bogus")
    with pytest.raises(np.linalg.LinAlgError):
        quadratic_task_model(-np.eye(2), [np.eye(2)])


def test_scalar_energy_design():
    model = quadratic_task_model([[1.0]], [[[1.0]]])
    d = design_corollary1(model, 1, 4, training_samples=50_000)
    np.testing.assert_allclose(d.eigenvalues, [2.0], rtol=1e-12)
    assert model.mean_s[0] == 1.0
    np.testing.assert_allclose(d.D @ d.A, model.G, atol=1e-12)


def test_single_level_returns_mean(cov_model, rng):
    d = design_corollary1(cov_model, 6, 1)
    assert d.M_tilde == 1 and np.all(d.rho == 1.0)
    _, x = cov_model.sample(rng, 100)
    np.testing.assert_allclose(run_quadratic_pipeline(d, cov_model, x), np.tile(cov_model.mean_s, (100, 1)))
    assert analytic_mse_theorem1(d.eigenvalues, d.rho, 6, 6) == pytest.approx(d.eigenvalues.sum())


def test_bypass_recovers_task(cov_model, rng):
    d = design_corollary1(cov_model, 6, 1)
    s, x = cov_model.sample(rng, 1000)
    np.testing.assert_allclose(run_quadratic_pipeline(d, cov_model, x, bypass_quantizer=True), s, atol=1e-10)
    np.testing.assert_allclose(run_quadratic_pipeline(d, cov_model, x[0], bypass_quantizer=True), s[0], atol=1e-10)


def test_branch_inputs_match_explicit_lift(cov_model, rng):
    d = design_corollary1(cov_model, 6, 1)
    _, x = cov_model.sample(rng, 300)
    explicit = (lift(x) - cov_model.mean_xbar) @ d.A.T
    np.testing.assert_allclose(branch_inputs(d.A, cov_model, x), explicit, atol=1e-10)


def test_branch_whitening(cov_model):
    d = design_corollary1(cov_model, 6, 1)
    np.testing.assert_allclose(d.A @ cov_model.Sigma_xbar @ d.A.T, np.eye(6), atol=1e-9)
    _, x = cov_model.sample(np.random.default_rng(4), 400_000)
    Y = branch_inputs(d.A, cov_model, x)
    n = len(Y)
    for p in range(6):
        y = Y[:, p]
        assert within_stderr(np.mean(y), 0.0, np.std(y) / np.sqrt(n), k=4)
        assert within_stderr(np.mean(y * y), 1.0, np.std(y * y) / np.sqrt(n), k=4)


def test_branches_are_not_gaussian(cov_model):
    d = design_corollary1(cov_model, 6, 1)
    _, x = cov_model.sample(np.random.default_rng(5), 400_000)
    kurt = stats.kurtosis(branch_inputs(d.A, cov_model, x), axis=0)
    assert np.all(kurt > 10 * np.sqrt(24 / 400_000))


def test_covariance_recovery_structure(cov_model):
    assert cov_model.N == 12 and cov_model.K == 6
    assert cov_model.G.shape == (6, 144)
    Sy = np.exp(-np.abs(np.subtract.outer(np.arange(3), np.arange(3))))
    upper = [Sy[i, j] for i in range(3) for j in range(i, 3)]
    np.testing.assert_allclose(cov_model.mean_s, upper, rtol=1e-12)
    assert psd_sqrt(cov_model.Sigma_xbar).rank == 78


def test_design_errors(cov_model):
    with pytest.raises(ValueError, match="rank"):
        design_corollary1(cov_model, 79, 2**79)
    with pytest.raises(ValueError):
        design_corollary1(cov_model, 6, 0)
    with pytest.raises(ValueError, match="kind"):
        design_corollary1(cov_model, 6, 64, quantizer_kind="nope")


def test_trained_design_rho(cov_model):
    d = design_corollary1(cov_model, 6, 4**6, training_samples=100_000, seed=1)
    assert d.M_tilde == 4
    assert np.all((d.rho > 0) & (d.rho < 1))
    u = design_corollary1(cov_model, 6, 4**6, training_samples=100_000, seed=1, quantizer_kind="uniform")
    assert np.all(u.rho > 0)
    again = design_corollary1(cov_model, 6, 4**6, training_samples=100_000, seed=1)
    np.testing.assert_array_equal(d.rho, again.rho)


def test_no_combining_quadratic(cov_model):
    d = design_no_combining_quadratic(cov_model, 2**77)
    assert d.P == 78 and d.M_tilde == 1
    np.testing.assert_allclose(d.A @ cov_model.Sigma_xbar @ d.A.T, np.eye(78), atol=1e-9)
    fac = psd_sqrt(cov_model.Sigma_xbar)
    np.testing.assert_allclose(d.D @ d.A, cov_model.G @ fac.sqrt @ fac.inv_sqrt, atol=1e-9)
