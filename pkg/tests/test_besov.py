import csv
import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from jacobi_needlets.setting import JacobiSetting
from jacobi_needlets.spectral import SpectralVector, plateau, random_band_limited
from jacobi_needlets.frames import analyze, build_tight_frame
from jacobi_needlets.besov import (
    DEFAULT_TRIPLES,
    REPORT_HEADER,
    BesovDomainError,
    BesovParams,
    approx_errors,
    approx_space_norm,
    besov_norm_heat,
    besov_norm_lp,
    besov_seq_norm,
    embedding_check,
    equivalence_sweep,
    lip_seminorm,
    lipschitz_compare,
    lipschitz_threshold,
    lp_blocks,
    make_corpus,
    norm_report,
    write_reports,
)

LEG = JacobiSetting(0, 0)


def _mode(setting, k):
    c = np.zeros(k + 1)
    c[k] = 1.0
    return SpectralVector(setting, c)


@pytest.fixture(scope="module")
def tight():
    return build_tight_frame(JacobiSetting(-0.3, 0.7), J=6)


def test_params_domain():
    with pytest.raises(BesovDomainError):
        BesovParams(0, 2, 2)
    with pytest.raises(BesovDomainError):
        BesovParams(1, 0.5, 2)
    with pytest.raises(BesovDomainError):
        BesovParams(1, 2, 0)
    assert BesovParams(0.5, math.inf, math.inf).label() == "s=0.5,p=inf,q=inf"


def test_heat_norm_single_mode_closed_form():
    # g(t)^2 = t lam^2 exp(-2 t lam); int_0^1 g^2 dt/t = lam/2 (1 - exp(-2 lam)); lam_12 = 156
    f = _mode(LEG, 12)
    exact = 1 + math.sqrt(78 * (1 - math.exp(-312)))
    assert besov_norm_heat(LEG, f, BesovParams(1, 2, 2)) == pytest.approx(exact, rel=1e-3)
    fine = np.geomspace(1e-6, 1, 2000)
    assert besov_norm_heat(LEG, f, BesovParams(1, 2, 2), t_grid=fine) == pytest.approx(exact, rel=1e-6)


def test_heat_norm_rejects_small_m():
    with pytest.raises(BesovDomainError):
        besov_norm_heat(LEG, _mode(LEG, 3), BesovParams(2, 2, 2), m=1)


def test_approx_norm_single_mode_p2():
    # E_{2^j} = 1 while 2^j < sqrt(156), i.e. j = 0..3
    f = _mode(LEG, 12)
    np.testing.assert_allclose(approx_errors(f, 2)[:5], [1, 1, 1, 1, 0])
    assert approx_space_norm(LEG, f, BesovParams(1, 2, 2)) == pytest.approx(1 + math.sqrt(85), rel=1e-14)


def test_lp_norm_single_mode_p2():
    f = _mode(LEG, 12)
    u = math.sqrt(156)
    b3 = plateau(u / 8) - plateau(u / 4)
    b4 = plateau(u / 16) - plateau(u / 8)
    exact = math.sqrt((8 * b3) ** 2 + (16 * b4) ** 2)
    assert besov_norm_lp(LEG, f, BesovParams(1, 2, 2)) == pytest.approx(exact, rel=1e-12)


def test_lp_blocks_sum_to_function():
    f = random_band_limited(LEG, 40, np.random.default_rng(0))
    assert np.sum(lp_blocks(f, 2) ** 2) <= f.norm2() ** 2 * (1 + 1e-12)


@given(st.floats(0.1, 3.0), st.sampled_from([1.0, 2.0, math.inf]))
def test_lp_norm_monotone_in_s(s, p):
    f = _mode(LEG, 9)
    assert besov_norm_lp(LEG, f, BesovParams(s, p, 2)) <= besov_norm_lp(LEG, f, BesovParams(s + 0.5, p, 2))


def test_seq_norm_p2_matches_tight_energy(tight):
    """With p = q = 2 and s -> 0 the sequence norm is the Parseval energy."""
    f = random_band_limited(tight.setting, tight.spectral_band(), np.random.default_rng(1))
    tree = analyze(tight, f)
    assert besov_seq_norm(tree, tight, BesovParams(1e-12, 2, 2)) == pytest.approx(f.norm2(), rel=1e-9)


def test_seq_norm_shape_checks(tight):
    f = _mode(tight.setting, 3)
    tree = analyze(tight, f)
    tree.coeffs = tree.coeffs[:-1]
    with pytest.raises(ValueError):
        besov_seq_norm(tree, tight, BesovParams(1, 2, 2))


def test_corpus_sizes(tight):
    s = tight.setting
    c1, c2 = make_corpus(s), make_corpus(s, doubled=True)
    assert len(c1) == 30 and len(c2) == 60
    assert len({fid for fid, _ in c2}) == 60
    assert all(f.degree <= 127 for _, f in c2)
    # the doubled corpus contains the original one
    assert {fid for fid, _ in c1} <= {fid for fid, _ in c2}


def test_equivalence_sweep_small(tmp_path, tight):
    s = tight.setting
    corpus = make_corpus(s)[::5]
    out = equivalence_sweep(s, corpus, [(0.5, 2, 2), (1, 1, 1)], tight)
    assert len(out["reports"]) == 2 * len(corpus)
    for summ in out["summary"].values():
        assert summ["all_finite"] and 1 <= summ["constant"] < 100
    write_reports(out["reports"], tmp_path / "n.csv", out["summary"], tmp_path / "n.json")
    with open(tmp_path / "n.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == REPORT_HEADER and len(rows) == 1 + len(out["reports"])
    assert set(json.loads((tmp_path / "n.json").read_text())) >= set(out["summary"])


def test_norm_report_ratios(tight):
    s = tight.setting
    rep = norm_report(s, "m", _mode(s, 5), BesovParams(1, 2, 2), tight)
    v = rep.values()
    assert rep.ratios["lp/heat"] == pytest.approx(v["lp"] / v["heat"])
    assert len(rep.row()) == len(REPORT_HEADER)


def test_default_triples():
    assert len(DEFAULT_TRIPLES) == 6


def test_embedding_trace_condition():
    corpus = make_corpus(LEG)[:6]
    # d = 2 for the Legendre setting: 3/2/2 - 1 = 1/2/2 - 1/2
    out = embedding_check(LEG, corpus, 1.5, 1, 0.5, 2, 2, 2, d=2.0)
    assert out["finite"]
    with pytest.raises(BesovDomainError):
        embedding_check(LEG, corpus, 1, 1, 0.5, 2, 2, 2, d=2.0)
    with pytest.raises(BesovDomainError):
        embedding_check(LEG, corpus, 1.5, 2, 0.5, 1, 2, 2, d=2.0)


def test_lip_seminorm_linear():
    # x = cos(theta) is 1-Lipschitz in theta
    f = SpectralVector(LEG, [0, math.sqrt(2 / 3)])
    assert lip_seminorm(f, 1.0) == pytest.approx(1.0, rel=1e-4)


def test_lipschitz_compare():
    corpus = make_corpus(LEG)[:4]
    out = lipschitz_compare(LEG, corpus, 0.5)
    assert out["converse_applicable"]
    assert math.isfinite(out["besov_over_lip_max"])
    with pytest.raises(BesovDomainError):
        lipschitz_compare(LEG, corpus, 0)


def test_lipschitz_threshold_above_one():
    out = lipschitz_threshold(LEG, make_corpus(LEG, band=32))
    assert out["threshold"] is not None and out["threshold"] > 1
