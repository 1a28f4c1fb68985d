"""Tests for the moment formulas of the branching field.

Strategy: closed-form overlap integrals pin the u = 0 pair correlation;
the Fourier and real-space routes cross-check each other at u > 0;
covariance matrices must be symmetric positive semidefinite and satisfy
Cauchy-Schwarz; the occupation-variance quadrature is checked against a
naive double-loop reimplementation; tree moments are checked against
Monte Carlo; the decay-exponent table is asserted against hand-computed
values and its regime gates against both sides of every boundary.
"""

import math

import numpy as np
import pytest

from stablebranch import (
    ConfigError,
    CovarianceSpec,
    Exponential,
    RegimeError,
    StableKernel,
    TestFunction,
    build_renewal,
    decay_exponent_prediction,
    field_covariance,
    lebesgue_integral,
    make_pareto_tail,
    occupation_mean,
    occupation_variance,
    pair_correlation,
    pair_correlation_realspace,
    semigroup_apply,
    tree_batch,
    tree_second_moment,
)

EXP1 = Exponential(rate=1.0)


def _center(dim, offset):
    c = np.zeros(dim)
    c[0] = offset
    return c


def bump(dim, center=0.0, radius=1.0):
    return TestFunction(shape="bump", center=_center(dim, center),
                        radius=radius)


def indicator(dim, center=0.0, radius=1.0):
    return TestFunction(shape="indicator", center=_center(dim, center),
                        radius=radius)


# ---------------------------------------------------------------------------
# first moment
# ---------------------------------------------------------------------------


def test_occupation_mean_closed_form():
    phi = bump(1)  # integral 16/15
    assert occupation_mean(phi, 15.0) == pytest.approx(16.0, rel=1e-12)
    assert occupation_mean(phi, 0.0) == 0.0
    with pytest.raises(ValueError):
        occupation_mean(phi, -1.0)


# ---------------------------------------------------------------------------
# pair correlation at zero lag: closed-form overlap integrals
# ---------------------------------------------------------------------------


def test_zero_lag_self_overlap_bump_1d():
    kernel = StableKernel(alpha=2.0, dim=1)
    phi = bump(1)
    # Int_{-1}^{1} (1 - x^2)^4 dx = 256/315
    val = pair_correlation(kernel, phi, phi, 0.0)
    assert val == pytest.approx(256.0 / 315.0, rel=1e-10)


@pytest.mark.parametrize("delta", [0.0, 0.6, 1.3])
def test_zero_lag_indicator_overlap_1d(delta):
    kernel = StableKernel(alpha=2.0, dim=1)
    phi, psi = indicator(1), indicator(1, center=delta)
    val = pair_correlation(kernel, phi, psi, 0.0)
    assert val == pytest.approx(2.0 - delta, rel=1e-10)


def test_zero_lag_indicator_lens_2d():
    kernel = StableKernel(alpha=1.5, dim=2)
    delta = 0.8
    phi, psi = indicator(2), indicator(2, center=delta)
    exact = 2.0 * math.acos(delta / 2.0) - (delta / 2.0) * math.sqrt(
        4.0 - delta * delta)
    val = pair_correlation(kernel, phi, psi, 0.0)
    assert val == pytest.approx(exact, rel=1e-5)


def test_zero_lag_indicator_lens_3d():
    kernel = StableKernel(alpha=2.0, dim=3)
    delta = 0.5
    phi, psi = indicator(3), indicator(3, center=delta)
    exact = math.pi / 12.0 * (4.0 + delta) * (2.0 - delta) ** 2
    val = pair_correlation(kernel, phi, psi, 0.0)
    assert val == pytest.approx(exact, rel=1e-8)


def test_zero_lag_disjoint_supports_vanish():
    kernel = StableKernel(alpha=2.0, dim=1)
    assert pair_correlation(kernel, bump(1), bump(1, center=2.5), 0.0) == 0.0


# ---------------------------------------------------------------------------
# pair correlation at positive lag
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("alpha,dim,u,nodes,rtol", [
    (2.0, 1, 0.5, None, 2e-4),
    (1.0, 1, 1.0, None, 2e-4),
    (1.5, 2, 0.8, None, 2e-4),
    # coarse Simpson grid at d = 3 keeps the check affordable; its own
    # quadrature error dominates the comparison there
    (2.0, 3, 1.0, 17, 2e-3),
])
def test_fourier_and_realspace_routes_agree(alpha, dim, u, nodes, rtol):
    kernel = StableKernel(alpha=alpha, dim=dim)
    phi = bump(dim)
    psi = bump(dim, center=0.7)
    a = pair_correlation(kernel, phi, psi, u)
    b = pair_correlation_realspace(kernel, phi, psi, u, nodes_per_dim=nodes)
    assert a == pytest.approx(b, rel=rtol), (a, b)


def test_pair_correlation_symmetric_in_test_functions():
    kernel = StableKernel(alpha=1.5, dim=1)
    phi = bump(1, radius=1.0)
    psi = indicator(1, center=0.5, radius=0.7)
    a = pair_correlation_realspace(kernel, phi, psi, 0.8)
    b = pair_correlation_realspace(kernel, psi, phi, 0.8)
    assert a == pytest.approx(b, rel=1e-6)


def test_pair_correlation_decreasing_in_lag():
    """With phi = psi centered together, spreading mass can only lower
    the correlation."""
    kernel = StableKernel(alpha=1.5, dim=1)
    phi = bump(1)
    vals = [pair_correlation(kernel, phi, phi, u)
            for u in (0.0, 0.25, 0.5, 1.0, 2.0, 4.0)]
    assert all(a > b > 0.0 for a, b in zip(vals[:-1], vals[1:])), vals


def test_pair_correlation_rejects_negative_lag():
    kernel = StableKernel(alpha=2.0, dim=1)
    with pytest.raises(ValueError):
        pair_correlation(kernel, bump(1), bump(1), -0.5)
    with pytest.raises(ValueError):
        pair_correlation_realspace(kernel, bump(1), bump(1), -0.5)


def test_torus_images_equal_sum_of_free_space_twins():
    """Wrapping on the torus is the same as summing the free-space pair
    correlation over the shifted periodic copies of psi."""
    kernel = StableKernel(alpha=2.0, dim=1)
    L = 2.0
    phi = bump(1)
    u = 1.5
    wrapped = pair_correlation(kernel, phi, phi, u, torus_half_side=L,
                               n_images=2)
    free = sum(
        pair_correlation(kernel, phi, bump(1, center=2.0 * L * k), u)
        for k in range(-2, 3)
    )
    assert wrapped == pytest.approx(free, rel=1e-8)
    # images contribute: the wrapped value strictly exceeds the free one
    assert wrapped > pair_correlation(kernel, phi, phi, u)


# ---------------------------------------------------------------------------
# field covariance
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def exp_table():
    return build_renewal(EXP1, 8.5, 0.005)


def test_covariance_spec_validation(exp_table):
    phi = bump(1)
    with pytest.raises(ValueError):
        CovarianceSpec(kernel=StableKernel(alpha=2.0, dim=1), table=exp_table,
                       phi=phi, psi=phi, s=2.0, t=1.0)
    with pytest.raises(ValueError):
        CovarianceSpec(kernel=StableKernel(alpha=2.0, dim=1), table=exp_table,
                       phi=phi, psi=phi, s=1.0, t=100.0)


def test_covariance_at_s_zero_is_pair_correlation(exp_table):
    kernel = StableKernel(alpha=2.0, dim=1)
    phi, psi = bump(1), bump(1, center=0.4)
    spec = CovarianceSpec(kernel=kernel, table=exp_table, phi=phi, psi=psi,
                          s=0.0, t=1.5)
    assert field_covariance(spec) == pytest.approx(
        pair_correlation(kernel, phi, psi, 1.5), rel=1e-12)


def test_covariance_gram_matrix_is_psd(exp_table):
    kernel = StableKernel(alpha=1.5, dim=1)
    phi = bump(1)
    times = [0.5, 1.0, 2.0]
    n = len(times)
    mat = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            spec = CovarianceSpec(kernel=kernel, table=exp_table, phi=phi,
                                  psi=phi, s=times[i], t=times[j])
            mat[i, j] = mat[j, i] = field_covariance(spec)
    eig = np.linalg.eigvalsh(mat)
    assert mat == pytest.approx(mat.T)
    assert eig.min() >= -1e-6 * eig.max(), eig


def test_covariance_cauchy_schwarz(exp_table):
    kernel = StableKernel(alpha=2.0, dim=1)
    phi = bump(1)
    psi = indicator(1, center=0.5, radius=0.8)

    def cov(f, g, s, t):
        return field_covariance(CovarianceSpec(
            kernel=kernel, table=exp_table, phi=f, psi=g, s=s, t=t))

    c = cov(phi, psi, 1.0, 2.0)
    v1 = cov(phi, phi, 1.0, 1.0)
    v2 = cov(psi, psi, 2.0, 2.0)
    assert abs(c) <= math.sqrt(v1 * v2) * (1.0 + 1e-6)


def test_covariance_swap_symmetry_at_equal_times(exp_table):
    kernel = StableKernel(alpha=2.0, dim=1)
    phi = bump(1)
    psi = indicator(1, center=0.3, radius=0.6)
    a = field_covariance(CovarianceSpec(kernel=kernel, table=exp_table,
                                        phi=phi, psi=psi, s=1.0, t=1.0))
    b = field_covariance(CovarianceSpec(kernel=kernel, table=exp_table,
                                        phi=psi, psi=phi, s=1.0, t=1.0))
    assert a == pytest.approx(b, rel=1e-6)


# ---------------------------------------------------------------------------
# single-tree second moment
# ---------------------------------------------------------------------------


def test_tree_second_moment_s_zero_exact(exp_table):
    kernel = StableKernel(alpha=2.0, dim=1)
    phi = bump(1)
    psi = bump(1, center=0.5)
    x0 = np.array([0.2])
    val = tree_second_moment(kernel, exp_table, x0, 0.0, 1.5, phi, psi)
    exact = float(phi.evaluate(x0[None, :])[0]) * float(
        semigroup_apply(kernel, psi, 1.5, x0))
    assert val == pytest.approx(exact, rel=1e-12)


def test_tree_second_moment_validation(exp_table):
    kernel = StableKernel(alpha=2.0, dim=1)
    phi = bump(1)
    with pytest.raises(ValueError):
        tree_second_moment(kernel, exp_table, [0.0], 2.0, 1.0, phi, phi)
    with pytest.raises(ValueError):
        tree_second_moment(kernel, exp_table, [0.0, 0.0], 1.0, 2.0, phi, phi)
    with pytest.raises(ValueError):
        tree_second_moment(kernel, exp_table, [0.0], 50.0, 60.0, phi, phi)


def test_tree_second_moment_swap_symmetry_at_equal_times(exp_table):
    kernel = StableKernel(alpha=2.0, dim=1)
    phi = bump(1)
    psi = bump(1, center=0.4, radius=0.8)
    a = tree_second_moment(kernel, exp_table, [0.1], 1.0, 1.0, phi, psi)
    b = tree_second_moment(kernel, exp_table, [0.1], 1.0, 1.0, psi, phi)
    assert a == pytest.approx(b, rel=1e-5)


def test_tree_second_moment_matches_monte_carlo(exp_table):
    kernel = StableKernel(alpha=2.0, dim=1)
    phi = bump(1, radius=1.5)
    s, t = 1.0, 2.0
    analytic = tree_second_moment(kernel, exp_table, [0.0], s, t, phi, phi)
    res = tree_batch(kernel, EXP1, np.zeros((20000, 1)), horizon=t,
                     obs_times=np.array([0.0, s, t]), seed=41,
                     population_cap=10**6, weights={"phi": phi.evaluate})
    series = res.ok("phi")
    prods = series[:, 1] * series[:, 2]
    se = prods.std(ddof=1) / np.sqrt(len(prods))
    z = (prods.mean() - analytic) / se
    assert abs(z) <= 3.5, (prods.mean(), analytic, z)


# ---------------------------------------------------------------------------
# occupation-time variance
# ---------------------------------------------------------------------------


def naive_occupation_variance(kernel, table, phi, horizon, grid_points):
    """Direct double-loop reimplementation of the variance quadrature."""
    m = grid_points - 1
    delta = horizon / m
    ts = np.arange(m + 1) * delta

    def g(u):
        return pair_correlation(kernel, phi, phi, u)

    def cov(s, t):
        out = g(abs(t - s))
        s0 = min(s, t)
        if s0 == 0.0:
            return out
        n = int(round(s0 / delta))
        rs = np.arange(n + 1) * delta
        uvals = table.value(rs)
        gvals = np.array([g(s0 + max(s, t) - 2.0 * r) for r in rs])
        return out + float(
            np.sum(0.5 * (gvals[1:] + gvals[:-1]) * np.diff(uvals)))

    mat = np.array([[cov(a, b) for b in ts] for a in ts])
    w = np.full(m + 1, delta)
    w[[0, -1]] = delta / 2.0
    return float(w @ mat @ w)


def test_occupation_variance_matches_naive_reimplementation(exp_table):
    kernel = StableKernel(alpha=2.0, dim=1)
    phi = bump(1)
    fast = occupation_variance(kernel, exp_table, phi, 2.0, grid_points=9)
    slow = naive_occupation_variance(kernel, exp_table, phi, 2.0, 9)
    assert fast == pytest.approx(slow, rel=1e-9)


def test_occupation_variance_monotone_in_horizon(exp_table):
    kernel = StableKernel(alpha=2.0, dim=1)
    phi = bump(1)
    vals = [occupation_variance(kernel, exp_table, phi, T, grid_points=33)
            for T in (1.0, 2.0, 4.0, 8.0)]
    assert all(b > a > 0.0 for a, b in zip(vals[:-1], vals[1:])), vals


def test_occupation_variance_grid_insensitivity(exp_table):
    kernel = StableKernel(alpha=2.0, dim=1)
    phi = bump(1)
    coarse = occupation_variance(kernel, exp_table, phi, 4.0, grid_points=17)
    fine = occupation_variance(kernel, exp_table, phi, 4.0, grid_points=33)
    assert coarse == pytest.approx(fine, rel=0.05)


def test_occupation_variance_edge_cases(exp_table):
    kernel = StableKernel(alpha=2.0, dim=1)
    phi = bump(1)
    assert occupation_variance(kernel, exp_table, phi, 0.0) == 0.0
    with pytest.raises(ValueError):
        occupation_variance(kernel, exp_table, phi, -1.0)
    with pytest.raises(ValueError):
        occupation_variance(kernel, exp_table, phi, 100.0)


def test_occupation_variance_torus_exceeds_free_space(exp_table):
    """Periodic wrapping adds image correlations, so on a small torus
    the occupation variance is strictly larger."""
    kernel = StableKernel(alpha=2.0, dim=1)
    phi = bump(1)
    free = occupation_variance(kernel, exp_table, phi, 2.0, grid_points=17)
    torus = occupation_variance(kernel, exp_table, phi, 2.0, grid_points=17,
                                torus_half_side=2.0, n_images=2)
    assert torus > free


# ---------------------------------------------------------------------------
# variance decay exponents
# ---------------------------------------------------------------------------


def test_decay_exponent_heavy_tail_values():
    assert decay_exponent_prediction(1, 1.5, 0.5) == pytest.approx(-1.0 / 6.0)
    assert decay_exponent_prediction(2, 1.5, 0.5) == pytest.approx(-5.0 / 6.0)
    assert decay_exponent_prediction(2, 2.0, 0.7) == pytest.approx(-0.3)
    # deeper in the window the lifetime tail term still dominates
    assert decay_exponent_prediction(3, 2.0, 0.9) == pytest.approx(-0.6)


def test_decay_exponent_finite_mean_values():
    assert decay_exponent_prediction(3, 2.0) == pytest.approx(-0.5)
    assert decay_exponent_prediction(5, 2.0) == pytest.approx(-1.0)
    assert decay_exponent_prediction(2, 1.5) == pytest.approx(-1.0 / 3.0)


def test_decay_exponent_heavy_tail_gates():
    # boundary d = alpha*gamma refused from both sides of the interface
    with pytest.raises(RegimeError):
        decay_exponent_prediction(1, 2.0, 0.5)
    # local-extinction side d < alpha*gamma
    with pytest.raises(RegimeError):
        decay_exponent_prediction(1, 2.0, 0.9)
    # d >= 2*alpha is outside the window
    with pytest.raises(RegimeError):
        decay_exponent_prediction(3, 1.5, 0.5)
    with pytest.raises(RegimeError):
        decay_exponent_prediction(4, 2.0, 0.5)
    with pytest.raises(ValueError):
        decay_exponent_prediction(1, 1.5, 1.5)


def test_decay_exponent_finite_mean_gates():
    with pytest.raises(RegimeError):
        decay_exponent_prediction(2, 2.0)  # d = alpha boundary
    with pytest.raises(RegimeError):
        decay_exponent_prediction(1, 2.0)  # recurrent migration
    with pytest.raises(ConfigError):
        decay_exponent_prediction(3, 2.0, 0.5, regime="finite_mean")
    with pytest.raises(ConfigError):
        decay_exponent_prediction(3, 2.0, regime="heavy_tail")
    with pytest.raises(ConfigError):
        decay_exponent_prediction(3, 2.0, regime="subcritical")


def test_decay_exponent_infers_regime_from_gamma():
    heavy = decay_exponent_prediction(1, 1.5, 0.5)
    assert heavy == decay_exponent_prediction(1, 1.5, 0.5,
                                              regime="heavy_tail")
    finite = decay_exponent_prediction(3, 2.0)
    assert finite == decay_exponent_prediction(3, 2.0, regime="finite_mean")
