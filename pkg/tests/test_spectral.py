import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jacobi_needlets.setting import JacobiSetting, oracle_rule, ortho_basis
from jacobi_needlets.spectral import (
    LPSystem,
    PositivityViolation,
    SpectralVector,
    apply_L_power,
    apply_spectral,
    approx_identity_check,
    band_lower_bound,
    diagonal_kernel,
    function_lp_norm,
    gaussian_bound_fit,
    heat_cutoff_degree,
    heat_kernel,
    heat_kernel_matrix,
    kernel_eval,
    kernel_matrix,
    kernel_norms_check,
    localization_profile,
    lp_norm,
    make_cutoff,
    markov_defect,
    near_best_error,
    plateau,
    project,
    random_band_limited,
    spectral_dim_check,
    spectral_dimension,
    verify_spectral_inequalities,
)


# -- cutoffs -----------------------------------------------------------------

def test_plateau_shape():
    u = np.linspace(0, 3, 3001)
    v = plateau(u)
    assert np.all(v[u <= 1] == 1) and np.all(v[u >= 2] == 0)
    assert np.all(np.diff(v) <= 0)
    assert plateau(1.5) == pytest.approx(0.5)


def test_band_lower_bound_positive():
    assert band_lower_bound(2.0) > 0.01


def test_custom_cutoff_requires_support():
    with pytest.raises(ValueError):
        make_cutoff("custom", fn=lambda u: u)
    with pytest.raises(ValueError):
        make_cutoff("plateau", b=1.0)


@pytest.mark.parametrize("kind", ["partition", "tight", "dual"])
def test_lp_system_resolves_identity(kind):
    lp = LPSystem(2.0, kind, split=1 / 3)
    u = np.linspace(0, 2 ** 9, 20001)
    assert lp.partition_residual(u, 9) < 1e-14


@given(st.integers(1, 12), st.floats(0, 1e4))
def test_blocks_supported_in_annulus(j, u):
    lp = LPSystem(2.0, "partition")
    lo, hi = lp.support(j)
    if u <= lo or u >= hi:
        assert lp.block(j, u) == 0


# -- spectral vectors ----------------------------------------------------------

def test_spectral_vector_arithmetic(legendre):
    f = SpectralVector(legendre, [1.0, 2.0])
    g = SpectralVector(legendre, [0.0, 0.0, 3.0])
    h = f + g
    assert np.array_equal(h.coeffs, [1, 2, 3])
    assert (h - g).norm2() == pytest.approx(math.sqrt(5))
    assert (2 * f).norm2() == pytest.approx(2 * math.sqrt(5))
    assert h.truncate(math.sqrt(2)).degree == 1
    assert not h.in_band(math.sqrt(2)) and h.in_band(math.sqrt(6))


def test_spectral_vector_mismatched_settings():
    f = SpectralVector(JacobiSetting(0, 0), [1.0])
    g = SpectralVector(JacobiSetting(0.5, 0), [1.0])
    with pytest.raises(ValueError):
        f + g


def test_projection_roundtrip(setting):
    rng = np.random.default_rng(3)
    f = random_band_limited(setting, 20, rng)
    back = project(setting, f, f.degree)
    assert np.max(np.abs(back.coeffs - f.coeffs)) < 1e-12


def test_lp_norms(setting):
    one = project(setting, lambda x: np.ones_like(x), 0)
    mu = setting.total_mass
    assert lp_norm(one, 2) == pytest.approx(math.sqrt(mu), rel=1e-13)
    assert lp_norm(one, 1) == pytest.approx(mu, rel=1e-13)
    assert lp_norm(one, math.inf) == pytest.approx(1.0, rel=1e-13)


def test_lp2_matches_coefficient_norm(setting):
    f = random_band_limited(setting, 30, np.random.default_rng(0))
    assert lp_norm(f, 2) == pytest.approx(f.norm2(), rel=1e-12)


def test_function_lp_norm_legendre(legendre):
    # int |x|^3 dx over [-1, 1] = 1/2
    assert function_lp_norm(legendre, lambda x: x, 3) == pytest.approx(0.5 ** (1 / 3), rel=1e-12)


# -- kernels -------------------------------------------------------------------

def test_plateau_kernel_extended_precision():
    # frozen: 40-digit mpmath sums of the same multiplier series
    phi = make_cutoff("plateau", 2.0)
    v = kernel_eval(JacobiSetting(0, 0), phi, 1 / 8, 0.0, 0.0)
    assert float(v) == pytest.approx(3.8221925718104305577, rel=1e-13)
    v = kernel_eval(JacobiSetting(-0.3, 0.7), phi, 1 / 4, 0.3, -0.2)
    assert float(v) == pytest.approx(0.04927946233200759691, rel=1e-11)
    assert not v.tail_warning


def test_heat_kernel_extended_precision():
    s = JacobiSetting(0.5, 0.5)
    assert heat_kernel(s, 0.1, 0.5, -0.5) == pytest.approx(0.084746207480702829747, rel=1e-12)


def test_kernel_symmetry_exact(setting):
    phi = make_cutoff("plateau")
    for x, y in [(0.3, -0.7), (0.99, 0.1), (-1.0, 1.0)]:
        assert float(kernel_eval(setting, phi, 0.05, x, y)) == float(kernel_eval(setting, phi, 0.05, y, x))


def test_kernel_tail_warning(legendre):
    with pytest.warns(RuntimeWarning):
        v = kernel_eval(legendre, lambda u: np.exp(-u), 0.5, 0.0, 0.0, max_degree=3)
    assert v.tail_warning


def test_kernel_matrix_reproduces_band(setting):
    """Lambda with the plateau at delta reproduces every f in Sigma_{1/delta}."""
    phi = make_cutoff("plateau")
    rule = oracle_rule(setting, 200)
    f = random_band_limited(setting, 10, np.random.default_rng(1))
    K = kernel_matrix(setting, phi, 0.1, rule.nodes, rule.nodes)
    smoothed = K @ (rule.weights * f(rule.nodes))
    assert np.max(np.abs(smoothed - f(rule.nodes))) < 1e-10


def test_apply_spectral_matches_kernel(setting):
    phi = make_cutoff("plateau")
    f = random_band_limited(setting, 40, np.random.default_rng(2))
    g = apply_spectral(phi, 1 / 12, f)
    assert g.degree <= f.degree
    with pytest.raises(ValueError):
        apply_spectral(phi, 0, f)


def test_diagonal_kernel_integrates_to_dimension(setting):
    phi = make_cutoff("plateau")
    rule = oracle_rule(setting, 200)
    diag = diagonal_kernel(setting, phi, 1 / 16, rule.nodes)
    # trace of the multiplier operator
    lam = np.arange(200) * (np.arange(200) + setting.alpha + setting.beta + 1)
    expected = plateau(np.sqrt(lam) / 16).sum()
    assert rule.weights @ diag == pytest.approx(expected, rel=1e-12)


def test_heat_markov_property(setting):
    xs = np.linspace(-1, 1, 21)
    for t in (1e-3, 1e-2, 0.1, 1.0):
        assert markov_defect(setting, t, xs).max() < 1e-10


def test_heat_semigroup(setting):
    rule = oracle_rule(setting, 300)
    xs = np.array([-0.6, 0.2, 0.9])
    A = heat_kernel_matrix(setting, 0.02, xs, rule.nodes)
    B = heat_kernel_matrix(setting, 0.03, rule.nodes, xs)
    np.testing.assert_allclose((A * rule.weights) @ B, heat_kernel_matrix(setting, 0.05, xs, xs),
                               rtol=1e-10, atol=1e-13)


def test_heat_cutoff_degree_monotone(legendre):
    degs = [heat_cutoff_degree(legendre, t) for t in (1.0, 0.1, 0.01, 0.001)]
    assert degs == sorted(degs)
    with pytest.raises(ValueError):
        heat_cutoff_degree(legendre, 0.0)


def test_gaussian_fit_finite(setting):
    xs = np.cos(np.linspace(0, math.pi, 9))
    fit = gaussian_bound_fit(setting, [0.01, 0.05, 0.2], xs)
    for c in (fit.c1_prime, fit.c1, fit.c2_prime, fit.c2):
        assert 0 < c < math.inf
    # far pairs at small t sit at round-off level, never clearly negative
    assert fit.min_value > -1e-12 * fit.diag_range[1]


def test_positivity_violation_raised(monkeypatch, legendre):
    import jacobi_needlets.spectral as sp
    monkeypatch.setattr(sp, "heat_kernel_matrix",
                        lambda *a, **k: np.array([[1.0, -0.5], [-0.5, 1.0]]))
    with pytest.raises(PositivityViolation):
        sp.gaussian_bound_fit(legendre, [0.1], np.array([0.0, 0.5]))


def test_localization_profile_finite(legendre):
    out = localization_profile(legendre, make_cutoff("plateau"), [2 ** -2, 2 ** -3, 2 ** -4], [2], n_grid=257)
    assert out["uniformity"][2] < 5


def test_kernel_norms_bounded(legendre):
    table = kernel_norms_check(legendre, make_cutoff("plateau"), 1 / 16, [1, 2, math.inf],
                               np.linspace(-1, 1, 7))
    for p in (1, 2, math.inf):
        assert 0 < table[p]["c1"] <= table[p]["c2"] < 50
    # ||Lambda(x, .)||_2^2 equals the diagonal of the squared multiplier
    np.testing.assert_allclose(table[2]["norms"] ** 2, table["diag_fn2"], rtol=1e-10)


# -- inequalities ----------------------------------------------------------------

def test_bernstein_single_mode(legendre):
    f = SpectralVector(legendre, [0, 0, 0, 1.0])
    g = apply_L_power(f, 2)
    assert g.coeffs[3] == pytest.approx(144.0)


def test_bernstein_constant_at_most_one_for_p2(setting):
    out = verify_spectral_inequalities(setting, "bernstein", p=2, draws=10)
    assert out["max_constant"] <= 1 + 1e-12


def test_nikolski_bounded(setting):
    out = verify_spectral_inequalities(setting, "nikolski", p=2, q=math.inf, draws=10, lambdas=(4, 8, 16))
    assert out["spread"] < 10


def test_jackson(legendre):
    f = project(legendre, lambda x: np.abs(x) ** 3, 40)
    out = verify_spectral_inequalities(legendre, "jackson", f=f, t_list=[2, 4, 8], m=1)
    assert out["max_constant"] < 10
    with pytest.raises(ValueError):
        verify_spectral_inequalities(legendre, "jackson")
    with pytest.raises(ValueError):
        verify_spectral_inequalities(legendre, "nope")


def test_near_best_error_p2(legendre):
    f = SpectralVector(legendre, [1.0, 1.0, 1.0, 1.0])
    assert near_best_error(f, math.sqrt(2.5), 2) == pytest.approx(math.sqrt(2))


def test_spectral_dimension(setting):
    assert spectral_dimension(setting, 0.1) == 1
    out = spectral_dim_check(setting, [4, 16, 64])
    assert out["factor"] < 2


def test_approx_identity_decreases(legendre):
    out = approx_identity_check(legendre, make_cutoff("plateau"), lambda x: np.abs(x), 2,
                                [1 / 4, 1 / 8, 1 / 16, 1 / 32], n_quad=1024)
    assert out["monotone"]


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 40), st.floats(-0.9, 1.5), st.floats(-0.9, 1.5))
def test_basis_orthonormal_property(n, a, b):
    s = JacobiSetting(a, b)
    rule = oracle_rule(s, 2 * n + 2)
    P = ortho_basis(s, n, rule.nodes)
    assert np.max(np.abs(P.T @ (P * rule.weights[:, None]) - np.eye(n + 1))) < 1e-11
