import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from jacobi_needlets.setting import (
    DegreeLimitError,
    GaussJacobiRule,
    JacobiSetting,
    PoincareInconsistency,
    PointTheta,
    ball_comparability,
    ball_measure,
    ball_measure_quad,
    ball_measure_theta,
    band_degree,
    d_localizer,
    doubling_certify,
    eigenvalue,
    gauss_jacobi_rule,
    intrinsic_distance,
    measure_theta_interval,
    oracle_rule,
    ortho_basis,
    ortho_jacobi,
    poincare_sweep,
    verify_poincare,
)


def test_rejects_bad_exponents():
    with pytest.raises(ValueError):
        JacobiSetting(-1.5, 0.0)
    with pytest.raises(ValueError):
        JacobiSetting(0.0, -1.0)


def test_dict_roundtrip_and_unknown_keys(tmp_path):
    s = JacobiSetting(0.25, -0.5, max_degree=100)
    p = tmp_path / "s.json"
    s.save(p)
    assert JacobiSetting.load(p) == s
    with pytest.raises(ValueError):
        JacobiSetting.from_dict({"alpha": 0, "gamma": 1})


def test_total_mass_closed_form():
    # frozen: mpmath quadrature of the half-angle density over [0, pi]
    assert JacobiSetting(-0.3, 0.7).total_mass == pytest.approx(2.5057955763406788124, rel=1e-14)
    assert JacobiSetting(0, 0).total_mass == pytest.approx(2.0, rel=1e-15)


def test_eigenvalues_and_band_degree():
    s = JacobiSetting(0, 0)
    assert eigenvalue(s, 3) == 12
    # n(4): largest k with k(k+1) <= 16 is 3
    assert band_degree(s, 4.0) == 3
    assert band_degree(s, math.sqrt(12)) == 3
    assert band_degree(s, math.sqrt(12) - 1e-9) == 2
    assert band_degree(s, 0.5) == 0


@given(st.floats(0.0, 500.0), st.floats(-0.9, 2.0), st.floats(-0.9, 2.0))
def test_band_degree_is_max(lam, a, b):
    s = JacobiSetting(a, b)
    n = band_degree(s, lam)
    assert math.sqrt(eigenvalue(s, n)) <= lam * (1 + 1e-12) or n == 0
    assert math.sqrt(eigenvalue(s, n + 1)) > lam * (1 - 1e-12)


def test_orthonormal_basis_matches_scipy(setting):
    x = np.linspace(-1, 1, 11)
    P = ortho_basis(setting, 12, x)
    a, b = setting.alpha, setting.beta
    for k in (0, 1, 5, 12):
        hk2 = (2 ** (a + b + 1) / (2 * k + a + b + 1) * special.gamma(k + a + 1) * special.gamma(k + b + 1)
               / (special.gamma(k + a + b + 1) * special.factorial(k)))
        np.testing.assert_allclose(P[:, k], special.eval_jacobi(k, a, b, x) / math.sqrt(hk2), rtol=1e-12,
                                   atol=1e-12)


def test_ortho_value_extended_precision():
    # frozen: mpmath hypergeometric Jacobi value / sqrt(h_5) at 40 digits
    s = JacobiSetting(-0.3, 0.7)
    assert ortho_jacobi(s, 5, 0.37) == pytest.approx(0.6806030832097112395, rel=1e-13)


def test_gram_matrix_identity(setting):
    n = 64
    rule = oracle_rule(setting, 2 * n)
    P = ortho_basis(setting, n, rule.nodes)
    G = P.T @ (P * rule.weights[:, None])
    assert np.max(np.abs(G - np.eye(n + 1))) < 1e-12


def test_degree_limit():
    s = JacobiSetting(0, 0, max_degree=10)
    with pytest.raises(DegreeLimitError):
        ortho_basis(s, 11, [0.0])


def test_gauss_jacobi_matches_scipy(setting):
    rule = gauss_jacobi_rule(setting, 20)
    x, w = special.roots_jacobi(20, setting.alpha, setting.beta)
    np.testing.assert_allclose(rule.nodes, x, atol=1e-13)
    np.testing.assert_allclose(rule.weights, w, rtol=1e-11)
    assert rule.degree_exact == 39
    assert rule.weights.sum() == pytest.approx(setting.total_mass, rel=1e-13)


def test_gauss_rule_csv_roundtrip(tmp_path, legendre):
    rule = gauss_jacobi_rule(legendre, 9)
    rule.to_csv(tmp_path / "r.csv")
    back = GaussJacobiRule.from_csv(tmp_path / "r.csv")
    assert np.array_equal(back.nodes, rule.nodes) and np.array_equal(back.weights, rule.weights)


@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1))
def test_metric_axioms(x, y, z):
    assert intrinsic_distance(x, x) == 0
    assert intrinsic_distance(x, y) == intrinsic_distance(y, x)
    assert intrinsic_distance(x, z) <= intrinsic_distance(x, y) + intrinsic_distance(y, z) + 1e-12
    assert 0 <= intrinsic_distance(x, y) <= math.pi


def test_point_theta():
    p, q = PointTheta.from_x(0.0), PointTheta(0.0)
    assert p.distance(q) == pytest.approx(math.pi / 2)
    with pytest.raises(ValueError):
        PointTheta(4.0)


def test_ball_measure_closed_form_legendre():
    s = JacobiSetting(0, 0)
    # mu(B) = cos(theta - r) - cos(theta + r) = 2 sin(theta) sin(r)
    assert ball_measure(s, 0.0, math.pi / 3) == pytest.approx(math.sqrt(3), rel=1e-14)
    assert ball_measure(s, 1.0, 4.0) == pytest.approx(2.0, rel=1e-14)


def test_ball_measure_extended_precision():
    # frozen: mpmath quadrature at 40 digits
    s = JacobiSetting(0.5, 0.5)
    assert ball_measure_theta(s, 1.0, 0.4) == pytest.approx(0.54926273395283027836, rel=1e-13)
    s = JacobiSetting(-0.3, 0.7)
    assert measure_theta_interval(s, 0.0, 0.25) == pytest.approx(0.20346081044561032084, rel=1e-13)


def test_ball_measure_against_quad(setting):
    for x in (-1.0, -0.9, 0.0, 0.5, 1.0):
        for r in (1e-3, 0.1, 1.0, 3.0):
            assert ball_measure(setting, x, r) == pytest.approx(ball_measure_quad(setting, x, r), rel=1e-9)


def test_ball_measure_rejects_nonpositive_radius(legendre):
    with pytest.raises(ValueError):
        ball_measure(legendre, 0.0, 0.0)


def test_ball_comparability_bounded(setting):
    lo, hi = ball_comparability(setting, 100, 30)
    assert 0 < lo <= hi < math.inf
    # constants do not drift under grid refinement
    lo2, hi2 = ball_comparability(setting, 400, 120)
    assert lo2 == pytest.approx(lo, rel=0.05) and hi2 == pytest.approx(hi, rel=0.05)


def _doubling_bruteforce(s, g=64):
    theta = np.linspace(0, math.pi, 4 * g + 1)
    r = np.geomspace(1e-4, math.pi, 2 * g)
    worst, rev = 0.0, math.inf
    for t in theta:
        for rr in r:
            m1 = measure_theta_interval(s, max(t - rr, 0), min(t + rr, math.pi))
            m2 = measure_theta_interval(s, max(t - 2 * rr, 0), min(t + 2 * rr, math.pi))
            worst = max(worst, math.log2(m2 / m1))
            if rr <= math.pi / 3:
                rev = min(rev, math.log2(m2 / m1))
    return worst, rev


def test_doubling_matches_bruteforce_oracle(legendre):
    d, beta = doubling_certify(legendre)
    wd, wb = _doubling_bruteforce(legendre)
    assert wd <= d <= wd + 1e-3
    assert wb - 1e-3 <= beta <= wb
    assert d == pytest.approx(2.0, abs=1e-3)
    assert beta > 0


@pytest.mark.parametrize("ab,d_expected", [((0.5, 0.5), 3.0), ((-0.3, 0.7), 3.4)])
def test_doubling_exponent_endpoint_growth(ab, d_expected):
    # near an endpoint mu(B(x, r)) ~ r^{2 max(a, b) + 2}
    d, beta = doubling_certify(JacobiSetting(*ab))
    assert d == pytest.approx(d_expected, abs=2e-2)
    assert beta > 0


def test_localizer_symmetric_and_decaying(setting):
    x, y = 0.3, -0.8
    assert d_localizer(setting, 0.1, 3, x, y) == pytest.approx(d_localizer(setting, 0.1, 3, y, x))
    assert d_localizer(setting, 0.1, 3, x, x) > d_localizer(setting, 0.1, 3, x, y)


def test_poincare_closed_form():
    s = JacobiSetting(0, 0)
    c = verify_poincare(s, lambda x: x, lambda x: np.ones_like(x), (-1.0, 1.0))
    assert abs(c - 1 / (2 * math.pi ** 2)) < 1e-10


def test_poincare_constant_function_is_zero(setting):
    assert verify_poincare(setting, lambda x: 3 + 0 * x, lambda x: 0 * x, (-0.5, 0.5)) == 0.0


def test_poincare_inconsistency_detected(legendre):
    with pytest.raises(PoincareInconsistency):
        verify_poincare(legendre, lambda x: x, lambda x: 0 * x, (-1.0, 1.0))


@settings(max_examples=25, deadline=None)
@given(st.floats(0.01, 3.0), st.floats(0.05, 3.0))
def test_poincare_bounded_on_random_intervals(t0, width):
    s = JacobiSetting(-0.3, 0.7)
    t1 = min(math.pi, t0 + width)
    c = verify_poincare(s, lambda x: x ** 3 - x, lambda x: 3 * x ** 2 - 1, (math.cos(t1), math.cos(t0)))
    assert 0 <= c < 1


def test_poincare_sweep_bounded(setting):
    out = poincare_sweep(setting, 30, seed=1)
    assert out["finite"] and out["max"] < 1
