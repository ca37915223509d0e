"""Besov norms four ways: Littlewood-Paley blocks, heat semigroup, frame
coefficients, and best approximation.  Plus the test corpus and the
embedding / Lipschitz comparisons.
"""
from __future__ import annotations

import csv
import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .frames import CoefficientTree, FramePair, analyze
from .setting import JacobiSetting, ball_measure_theta, band_degree, doubling_certify, eigenvalues
from .spectral import LPSystem, SpectralVector, apply_spectral, lp_norm, near_best_error, project

NORM_NAMES = ("lp", "heat", "seq", "approx")
DEFAULT_TRIPLES = ((0.5, 2, 2), (1, 2, 2), (0.5, math.inf, math.inf), (1, 1, 1), (0.7, 2, math.inf), (1.5, 2, 2))


class BesovDomainError(ValueError):
    pass


@dataclass(frozen=True)
class BesovParams:
    s: float
    p: float
    q: float

    def __post_init__(self):
        if not self.s > 0:
            raise BesovDomainError(f"smoothness s must be positive, got {self.s}")
        if not 1 <= self.p <= math.inf:
            raise BesovDomainError(f"p must lie in [1, inf], got {self.p}")
        if not 0 < self.q <= math.inf:
            raise BesovDomainError(f"q must lie in (0, inf], got {self.q}")

    def label(self) -> str:
        return f"s={self.s:g},p={self.p:g},q={self.q:g}"


def _lq(terms, q: float) -> float:
    terms = np.asarray(terms, dtype=float)
    if terms.size == 0:
        return 0.0
    if math.isinf(q):
        return float(terms.max())
    return float(np.sum(terms ** q) ** (1.0 / q))


def _levels_for(f: SpectralVector, b: float = 2.0) -> int:
    """Highest block index that can meet the spectrum of f."""
    top = math.sqrt(eigenvalues(f.setting, f.degree)[-1]) if f.degree > 0 else 0.0
    return 1 if top <= 1 else int(math.ceil(math.log(top, b))) + 1


# ---------------------------------------------------------------------------
# the four norms

def lp_blocks(f: SpectralVector, p: float, lp_system: LPSystem | None = None, J_max: int | None = None):
    lp_system = LPSystem(2.0) if lp_system is None else lp_system
    J = _levels_for(f, lp_system.b) if J_max is None else J_max
    return np.array([lp_norm(apply_spectral(lambda u, j=j: lp_system.psi(j, u), 1.0, f), p)
                     for j in range(J + 1)])


def besov_norm_lp(setting: JacobiSetting, f: SpectralVector, params: BesovParams,
                  lp_system: LPSystem | None = None, J_max: int | None = None) -> float:
    """(sum_j (2^{sj} ||phi_j(sqrt L) f||_p)^q)^{1/q}; exact for band-limited f."""
    blocks = lp_blocks(f, params.p, lp_system, J_max)
    return _lq(2.0 ** (params.s * np.arange(len(blocks))) * blocks, params.q)


def default_heat_grid(f: SpectralVector, m: int) -> np.ndarray:
    """64 log-spaced t on [1e-4, 1], extended below 1e-4 (16 per decade) to reach the top mode of f."""
    lam_top = eigenvalues(f.setting, max(f.degree, 1))[-1]
    t_min = min(1e-4, m / (16.0 * lam_top))
    if t_min >= 1e-4:
        return np.geomspace(1e-4, 1.0, 64)
    n = max(64, int(math.ceil(16 * -math.log10(t_min))) + 1)
    return np.geomspace(t_min, 1.0, n)


def heat_profile(f: SpectralVector, s: float, p: float, m: int, t_grid) -> np.ndarray:
    """t^{-s/2} ||(tL)^m e^{-tL} f||_p on t_grid."""
    lam = eigenvalues(f.setting, len(f.coeffs) - 1)
    out = []
    for t in t_grid:
        g = SpectralVector(f.setting, f.coeffs * (t * lam) ** m * np.exp(-t * lam))
        out.append(t ** (-s / 2) * lp_norm(g, p))
    return np.array(out)


def besov_norm_heat(setting: JacobiSetting, f: SpectralVector, params: BesovParams, m: int | None = None,
                    t_grid=None) -> float:
    """||f||_p + (int_0^1 (t^{-s/2} ||(tL)^m e^{-tL} f||_p)^q dt/t)^{1/q}.

    The integral is a trapezoid rule in log t.  Below the first grid point the
    integrand behaves like t^{(m - s/2)}, which gives the small-t tail in closed form.
    """
    m = int(math.floor(params.s / 2)) + 1 if m is None else int(m)
    if 2 * m <= params.s:
        raise BesovDomainError(f"need 2m > s, got m={m}, s={params.s}")
    t = default_heat_grid(f, m) if t_grid is None else np.asarray(t_grid, dtype=float)
    g = heat_profile(f, params.s, params.p, m, t)
    base = lp_norm(f, params.p)
    if math.isinf(params.q):
        return base + float(g.max())
    q = params.q
    body = integrate.trapezoid(g ** q, np.log(t))
    tail = g[0] ** q / ((m - params.s / 2) * q)
    return base + float((body + tail) ** (1.0 / q))


def besov_seq_norm(tree: CoefficientTree, pair: FramePair, params: BesovParams) -> float:
    """(sum_j b^{jsq} [sum_xi (|B(xi, b^-j)|^{1/p - 1/2} |a_{j xi}|)^p]^{q/p})^{1/q}."""
    if len(tree.coeffs) != len(pair.levels):
        raise ValueError(f"tree has {len(tree.coeffs)} levels, frame has {len(pair.levels)}")
    inv_p = 0.0 if math.isinf(params.p) else 1.0 / params.p
    terms = []
    for lv, a in zip(pair.levels, tree.coeffs):
        if np.size(a) != len(lv):
            raise ValueError(f"level {lv.j}: coefficient count {np.size(a)} != {len(lv)} centers")
        B = ball_measure_theta(pair.setting, lv.net.centers, pair.b ** -lv.j)
        terms.append(pair.b ** (lv.j * params.s) * _lq(B ** (inv_p - 0.5) * np.abs(a), params.p))
    return _lq(terms, params.q)


def approx_errors(f: SpectralVector, p: float, J_max: int | None = None) -> np.ndarray:
    """E_{2^j}(f)_p for j = 0..J_max (near-best surrogate for p != 2)."""
    J = _levels_for(f) + 1 if J_max is None else J_max
    out = []
    for j in range(J + 1):
        e = near_best_error(f, 2.0 ** j, p)
        out.append(e)
        if e == 0.0 and J_max is None:
            break
    return np.array(out)


def approx_space_norm(setting: JacobiSetting, f: SpectralVector, params: BesovParams,
                      J_max: int | None = None) -> float:
    """||f||_p + (sum_j (2^{sj} E_{2^j}(f)_p)^q)^{1/q}."""
    E = approx_errors(f, params.p, J_max)
    return lp_norm(f, params.p) + _lq(2.0 ** (params.s * np.arange(len(E))) * E, params.q)


# ---------------------------------------------------------------------------
# reports

RATIO_PAIRS = tuple(itertools.combinations(NORM_NAMES, 2))


@dataclass
class NormReport:
    fid: str
    params: BesovParams
    lp_norm: float
    heat_norm: float
    seq_norm: float
    approx_norm: float
    ratios: dict = field(default_factory=dict)

    def __post_init__(self):
        vals = self.values()
        self.ratios = {f"{a}/{b}": vals[a] / vals[b] if vals[b] > 0 else math.inf for a, b in RATIO_PAIRS}

    def values(self) -> dict:
        return {"lp": self.lp_norm, "heat": self.heat_norm, "seq": self.seq_norm, "approx": self.approx_norm}

    def row(self) -> list:
        return [self.fid, self.params.s, self.params.p, self.params.q,
                *self.values().values(), *self.ratios.values()]


REPORT_HEADER = ["function", "s", "p", "q", *NORM_NAMES, *[f"{a}/{b}" for a, b in RATIO_PAIRS]]


def norm_report(setting: JacobiSetting, fid: str, f: SpectralVector, params: BesovParams, pair: FramePair,
                tree: CoefficientTree | None = None) -> NormReport:
    tree = analyze(pair, f) if tree is None else tree
    return NormReport(fid, params,
                      besov_norm_lp(setting, f, params),
                      besov_norm_heat(setting, f, params),
                      besov_seq_norm(tree, pair, params),
                      approx_space_norm(setting, f, params))


def equivalence_sweep(setting: JacobiSetting, corpus, triples, pair: FramePair) -> dict:
    """NormReports for every (member, triple) and the max/min ratio spread per triple."""
    trees = {fid: analyze(pair, f) for fid, f in corpus}
    reports = []
    summary = {}
    for trip in triples:
        params = trip if isinstance(trip, BesovParams) else BesovParams(*trip)
        rows = [norm_report(setting, fid, f, params, pair, trees[fid]) for fid, f in corpus]
        reports.extend(rows)
        spread = {}
        for key in rows[0].ratios:
            r = np.array([x.ratios[key] for x in rows])
            spread[key] = float(r.max() / r.min()) if np.all(np.isfinite(r)) and r.min() > 0 else math.inf
        summary[params.label()] = {"constant": max(spread.values()), "spread": spread,
                                   "all_finite": bool(all(math.isfinite(v) for x in rows for v in x.ratios.values()))}
    return {"reports": reports, "summary": summary}


def write_reports(reports, csv_path, summary: dict | None = None, json_path=None) -> None:
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_HEADER)
        for r in reports:
            w.writerow([v if isinstance(v, str) else format(float(v), ".17g") for v in r.row()])
    if json_path is not None:
        with open(json_path, "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True, default=float)
            fh.write("\n")


# ---------------------------------------------------------------------------
# corpus

def corpus_degree(setting: JacobiSetting, band: float = 128.0) -> int:
    return band_degree(setting, band)


def make_corpus(setting: JacobiSetting, doubled: bool = False, band: float = 128.0, seed: int = 0) -> list:
    """30 functions (60 when doubled) from four families, all truncated to Sigma_band.

    The doubled corpus interleaves new parameters between the original ones, so
    it samples the same families over the same parameter ranges.
    """
    n = corpus_degree(setting, band)
    rng = np.random.default_rng(seed)
    members = []
    k = 2 if doubled else 1
    # (i) random band-limited, bands 4..32
    for i in range(8 * k):
        lam = 2.0 ** (2 + i % 4)
        members.append((f"random_{i}_band{int(lam)}", SpectralVector(setting, rng.standard_normal(
            band_degree(setting, lam) + 1)).padded(n)))
    # (ii) point singularities |theta - theta0|^g
    theta0 = [math.pi / 4, math.pi / 2, 3 * math.pi / 4]
    if doubled:
        theta0 += [3 * math.pi / 8, 5 * math.pi / 8, 7 * math.pi / 16]
    for g in (0.3, 0.5, 0.8):
        for t0 in theta0:
            fn = lambda x, g=g, t0=t0: np.abs(np.arccos(np.clip(x, -1, 1)) - t0) ** g  # noqa: E731
            members.append((f"cusp_g{g}_t{t0:.4f}", project(setting, fn, n, n_quad=2048).coeffs))
    # (iii) smooth bumps in theta
    bumps = [(0.5, 0.3), (1.2, 0.3), (math.pi / 2, 0.3), (2.0, 0.3), (2.6, 0.3), (1.0, 0.15), (2.2, 0.15)]
    if doubled:
        bumps += [(0.8, 0.3), (1.4, 0.25), (1.8, 0.3), (2.3, 0.2), (0.7, 0.2), (1.6, 0.15), (2.4, 0.15)]
    for c, w in bumps:
        fn = lambda x, c=c, w=w: np.exp(-((np.arccos(np.clip(x, -1, 1)) - c) ** 2) / (2 * w * w))  # noqa: E731
        members.append((f"bump_c{c:.4f}_w{w}", project(setting, fn, n, n_quad=2048).coeffs))
    # (iv) single modes
    modes = [1, 4, 12, 30, 64, 110]
    if doubled:
        modes += [2, 7, 20, 45, 90, 100]
    for m in modes:
        c = np.zeros(n + 1)
        c[min(m, n)] = 1.0
        members.append((f"mode_{m}", c))
    return [(fid, SpectralVector(setting, c)) for fid, c in members]


# ---------------------------------------------------------------------------
# embeddings and Lipschitz spaces

def embedding_check(setting: JacobiSetting, corpus, s: float, p: float, s1: float, p1: float, q: float, q1: float,
                    d: float | None = None, tol: float = 1e-9) -> dict:
    """Ratios ||f||_{B^{s1}_{p1 q1}} / ||f||_{B^s_{pq}} when s/d - 1/p = s1/d - 1/p1."""
    d = doubling_certify(setting)[0] if d is None else d
    if not (1 <= p <= p1 < math.inf):
        raise BesovDomainError(f"need 1 <= p <= p1 < inf, got p={p}, p1={p1}")
    if not q <= q1:
        raise BesovDomainError(f"need q <= q1, got q={q}, q1={q1}")
    if not 0 < s1 <= s:
        raise BesovDomainError(f"need 0 < s1 <= s, got s={s}, s1={s1}")
    lhs, rhs = s / d - 1 / p, s1 / d - 1 / p1
    if abs(lhs - rhs) > tol:
        raise BesovDomainError(f"trace condition fails with d={d}: s/d-1/p={lhs:.6g} but s1/d-1/p1={rhs:.6g}")
    big, small = BesovParams(s, p, q), BesovParams(s1, p1, q1)
    rows = []
    for fid, f in corpus:
        num, den = besov_norm_lp(setting, f, small), besov_norm_lp(setting, f, big)
        rows.append({"function": fid, "ratio": num / den})
    ratios = [r["ratio"] for r in rows]
    return {"d": d, "rows": rows, "bound": max(ratios), "finite": bool(np.all(np.isfinite(ratios)))}


def lip_seminorm(f: SpectralVector, s: float, n_grid: int = 1025) -> float:
    """sup |f(x) - f(y)| / rho(x, y)^s over a uniform theta grid."""
    theta = np.linspace(0, math.pi, n_grid)
    v = f.on_theta(theta)
    worst = 0.0
    for i in range(n_grid - 1):
        d = theta[i + 1:] - theta[i]
        worst = max(worst, float(np.max(np.abs(v[i + 1:] - v[i]) / d ** s)))
    return worst


def lipschitz_compare(setting: JacobiSetting, corpus, s: float, holder_exponent: float = 1.0) -> dict:
    """Compare ||f||_inf + Lip-s seminorm with the B^s_{inf inf} norm over the corpus."""
    if not s > 0:
        raise BesovDomainError("s must be positive")
    params = BesovParams(s, math.inf, math.inf)
    rows = []
    for fid, f in corpus:
        lip = lp_norm(f, math.inf) + lip_seminorm(f, s)
        bes = besov_norm_lp(setting, f, params)
        rows.append({"function": fid, "lip": lip, "besov": bes, "besov/lip": bes / lip})
    r = np.array([x["besov/lip"] for x in rows])
    return {"rows": rows, "besov_over_lip_max": float(r.max()), "lip_over_besov_max": float((1 / r).max()),
            "converse_applicable": bool(s < holder_exponent)}


def lipschitz_threshold(setting: JacobiSetting, corpus, s_list=(0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.5, 2.0),
                        jump: float = 3.0) -> dict:
    """Empirical s where the converse bound Lip-s <= C B^s_inf,inf stops holding uniformly.

    Reports lip/besov maxima per s; the threshold is the first s whose maximum exceeds
    jump times the smallest maximum seen at lower s (None if no such s).
    """
    rows = []
    for s in s_list:
        out = lipschitz_compare(setting, corpus, s)
        rows.append({"s": float(s), "lip_over_besov_max": out["lip_over_besov_max"]})
    threshold, floor = None, math.inf
    for r in rows:
        if r["lip_over_besov_max"] > jump * floor:
            threshold = r["s"]
            break
        floor = min(floor, r["lip_over_besov_max"])
    return {"rows": rows, "threshold": threshold}
