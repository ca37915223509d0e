"""Maximal delta-nets with companion cells, sampling checks and positive cubature.

Nets live in the angular coordinate theta = arccos x, where the intrinsic
metric is the plain distance |theta - theta'|.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .setting import (
    JacobiSetting,
    ball_measure_theta,
    band_degree,
    measure_theta_interval,
    ortho_basis,
    theta_interval_rule,
)
from .spectral import SpectralVector, lp_norm, random_band_limited


class CubatureInfeasible(ArithmeticError):
    def __init__(self, msg, degree=None):
        super().__init__(msg)
        self.degree = degree


@dataclass
class NetLevel:
    setting: JacobiSetting
    delta: float
    centers: np.ndarray
    cell_lo: np.ndarray
    cell_hi: np.ndarray
    cell_measures: np.ndarray

    def __len__(self):
        return len(self.centers)

    @property
    def x(self) -> np.ndarray:
        return np.cos(self.centers)

    def check_invariants(self, tol: float = 1e-12) -> dict:
        c, lo, hi, d = self.centers, self.cell_lo, self.cell_hi, self.delta
        sep = float(np.min(np.diff(c))) if len(c) > 1 else math.inf
        gaps = np.concatenate([[c[0]], np.diff(c) / 2, [math.pi - c[-1]]])
        cover = float(np.max(gaps))
        inner_lo = np.maximum(c - d / 2, 0.0)
        inner_hi = np.minimum(c + d / 2, math.pi)
        sandwich = bool(np.all(lo <= inner_lo + tol) and np.all(hi >= inner_hi - tol)
                        and np.all(lo >= c - d - tol) and np.all(hi <= c + d + tol))
        tiling = bool(lo[0] == 0.0 and hi[-1] == math.pi and np.all(lo[1:] == hi[:-1]))
        mass_err = abs(float(np.sum(self.cell_measures)) - self.setting.total_mass)
        return {
            "min_separation": sep,
            "separated": sep >= d * (1 - 1e-12),
            "cover_radius": cover,
            "covering": cover <= d * (1 + 1e-12),
            # a midpoint at distance >= delta from every center could be added
            "maximal": bool(np.max(np.diff(c)) < 2 * d) if len(c) > 1 else True,
            "sandwich": sandwich,
            "tiling": tiling,
            "mass_error": mass_err,
            "mass_ok": mass_err <= tol * max(1.0, self.setting.total_mass),
        }

    def to_csv(self, path, weights=None, meta: dict | None = None) -> None:
        _write_net_csv(path, self, weights, meta or {})

    @classmethod
    def from_csv(cls, path, setting: JacobiSetting) -> "NetLevel":
        return _read_net_csv(path, setting)[0]


@dataclass
class CubatureRule:
    net: NetLevel
    weights: np.ndarray
    degree_exact: int

    @property
    def setting(self):
        return self.net.setting

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))

    def moment_residuals(self, degree: int | None = None) -> np.ndarray:
        n = self.degree_exact if degree is None else degree
        P = ortho_basis(self.setting, n, self.net.x)
        target = np.zeros(n + 1)
        target[0] = math.sqrt(self.setting.total_mass)
        return P.T @ self.weights - target

    def window(self) -> dict:
        """Per-weight membership in [2/3 |B(xi, delta/2)|, 2 |B(xi, delta)|]."""
        s, c, d = self.setting, self.net.centers, self.net.delta
        lo = 2.0 / 3.0 * ball_measure_theta(s, c, d / 2)
        hi = 2.0 * ball_measure_theta(s, c, d)
        inside = (self.weights >= lo) & (self.weights <= hi)
        ratio = self.weights / self.net.cell_measures
        return {"inside": inside, "fraction": float(np.mean(inside)),
                "ratio_min": float(ratio.min()), "ratio_max": float(ratio.max())}

    def check(self) -> dict:
        res = self.moment_residuals()
        mass = self.setting.total_mass
        return {
            "positive": bool(np.all(self.weights > 0)),
            "max_moment_residual": float(np.max(np.abs(res))),
            "moments_ok": bool(np.max(np.abs(res)) <= 1e-10 * mass),
            "window_fraction": self.window()["fraction"],
        }

    def to_csv(self, path, meta: dict | None = None) -> None:
        m = {"degree_exact": self.degree_exact}
        m.update(meta or {})
        _write_net_csv(path, self.net, self.weights, m)

    @classmethod
    def from_csv(cls, path, setting: JacobiSetting) -> "CubatureRule":
        net, weights, meta = _read_net_csv(path, setting)
        if weights is None or "degree_exact" not in meta:
            raise ValueError(f"{path}: not a cubature file")
        return cls(net, weights, int(meta["degree_exact"]))


# ---------------------------------------------------------------------------
# CSV: a '#'-prefixed metadata line, then theta,cell_lo,cell_hi,cell_measure,weight

def _fmt(v) -> str:
    return format(float(v), ".17g")


def _write_net_csv(path, net: NetLevel, weights, meta: dict) -> None:
    head = {"delta": _fmt(net.delta), "alpha": _fmt(net.setting.alpha), "beta": _fmt(net.setting.beta)}
    head.update({k: str(v) for k, v in meta.items()})
    with open(path, "w", newline="") as fh:
        fh.write("# " + " ".join(f"{k}={v}" for k, v in head.items()) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["theta", "cell_lo", "cell_hi", "cell_measure", "weight"])
        for i in range(len(net)):
            wt = "" if weights is None else _fmt(weights[i])
            w.writerow([_fmt(net.centers[i]), _fmt(net.cell_lo[i]), _fmt(net.cell_hi[i]),
                        _fmt(net.cell_measures[i]), wt])


def _read_net_csv(path, setting: JacobiSetting):
    with open(path, newline="") as fh:
        first = fh.readline()
        if not first.startswith("#"):
            raise ValueError(f"{path}: missing metadata line")
        meta = dict(kv.split("=", 1) for kv in first[1:].split())
        rows = list(csv.DictReader(fh))
    if float(meta["alpha"]) != setting.alpha or float(meta["beta"]) != setting.beta:
        raise ValueError(f"{path}: written for alpha={meta['alpha']}, beta={meta['beta']}")
    col = lambda k: np.array([float(r[k]) for r in rows])  # noqa: E731
    net = NetLevel(setting, float(meta["delta"]), col("theta"), col("cell_lo"), col("cell_hi"),
                   col("cell_measure"))
    weights = col("weight") if rows and rows[0]["weight"] != "" else None
    return net, weights, meta


# ---------------------------------------------------------------------------
# construction

def _cells(setting, centers):
    mids = (centers[1:] + centers[:-1]) / 2
    lo = np.concatenate([[0.0], mids])
    hi = np.concatenate([mids, [math.pi]])
    return lo, hi, measure_theta_interval(setting, lo, hi)


def maximal_net(setting: JacobiSetting, delta: float) -> NetLevel:
    """Equally spaced net 0, h, ..., pi with h = pi / floor(pi / delta) in [delta, 2 delta).

    The spacing keeps both endpoints as centers, is delta-separated, and leaves
    no gap of width 2 delta, so the net is maximal.  Cells are Voronoi intervals.
    """
    if not 0 < delta <= math.pi:
        raise ValueError(f"delta must lie in (0, pi], got {delta}")
    K = max(1, int(math.floor(math.pi / delta * (1 + 1e-12))))
    centers = math.pi * np.arange(K + 1) / K
    centers[-1] = math.pi
    lo, hi, meas = _cells(setting, centers)
    return NetLevel(setting, float(delta), centers, lo, hi, meas)


def net_from_centers(setting: JacobiSetting, centers, delta: float | None = None) -> NetLevel:
    """Net from user-supplied angular centers; delta defaults to the minimal separation.

    The invariants are not enforced here; use check_invariants.
    """
    c = np.unique(np.asarray(centers, dtype=float))
    if c.size == 0 or c[0] < 0 or c[-1] > math.pi:
        raise ValueError("centers must be non-empty and lie in [0, pi]")
    if delta is None:
        delta = float(np.min(np.diff(c))) if c.size > 1 else math.pi
    lo, hi, meas = _cells(setting, c)
    return NetLevel(setting, float(delta), c, lo, hi, meas)


# ---------------------------------------------------------------------------
# sampling

def _cell_nodes(net: NetLevel, m: int):
    phis, wts = [], []
    for lo, hi in zip(net.cell_lo, net.cell_hi):
        phi, w = theta_interval_rule(net.setting, lo, hi, m)
        phis.append(phi)
        wts.append(w)
    return np.array(phis), np.array(wts)


def mz_defect(net: NetLevel, f: SpectralVector, p: float = 2.0, nodes_per_cell: int = 16) -> float:
    """(sum_xi int_{A_xi} |f(x) - f(xi)|^p dmu)^{1/p} / ||f||_p."""
    if not 1 <= p < math.inf:
        raise ValueError("p must lie in [1, inf)")
    phi, w = _cell_nodes(net, nodes_per_cell)
    vals = f(np.cos(phi))
    at_centers = f(net.x)[:, None]
    num = np.sum(w * np.abs(vals - at_centers) ** p) ** (1.0 / p)
    den = lp_norm(f, p)
    return float(num / den) if den > 0 else 0.0


def sampling_ratio(net: NetLevel, f: SpectralVector, p: float = 2.0) -> float:
    """sum |A_xi| |f(xi)|^p / ||f||_p^p."""
    return float(np.dot(net.cell_measures, np.abs(f(net.x)) ** p) / lp_norm(f, p) ** p)


def sampling_check(net: NetLevel, f: SpectralVector, p: float = 2.0, epsilon: float | None = None):
    """Return (ratio, passed).  epsilon=None uses the factor-2 window [1/2, 2]."""
    r = sampling_ratio(net, f, p)
    lo, hi = (0.5, 2.0) if epsilon is None else (1 - epsilon, 1 + epsilon)
    return r, bool(lo <= r <= hi)


def sampling_ensemble(setting: JacobiSetting, gamma: float, lam: float = 64.0, draws: int = 200,
                      p: float = 2.0, seed: int = 0) -> np.ndarray:
    net = maximal_net(setting, gamma / lam)
    rng = np.random.default_rng(seed)
    return np.array([sampling_ratio(net, random_band_limited(setting, lam, rng), p) for _ in range(draws)])


def certify_gamma(setting: JacobiSetting, lam: float = 64.0, draws: int = 200, p: float = 2.0,
                  seed: int = 0, max_halvings: int = 12) -> dict:
    """Largest gamma = 2^-m whose ensemble ratios all lie in [1/2, 2]."""
    table = []
    for m in range(max_halvings + 1):
        gamma = 2.0 ** -m
        r = sampling_ensemble(setting, gamma, lam, draws, p, seed)
        ok = bool(np.all((r >= 0.5) & (r <= 2.0)))
        table.append({"gamma": gamma, "ratio_min": float(r.min()), "ratio_max": float(r.max()), "pass": ok})
        if ok:
            return {"gamma_star": gamma, "table": table}
    raise ArithmeticError(f"no gamma >= 2^-{max_halvings} passes the factor-2 sampling check")


# ---------------------------------------------------------------------------
# cubature

def build_cubature(setting: JacobiSetting, net: NetLevel, degree_exact: int,
                   floor: float = 1e-8, tol: float = 1e-10) -> CubatureRule:
    """Positive weights exact through degree_exact, closest to the cell measures.

    Writing w = |A| (1 + v), minimize |v|^2 subject to the moment equations and
    w >= floor |A|.  The minimum-norm solution is taken first; weights that
    break the floor are pinned there and the rest re-solved (active set).
    """
    n_c = len(net)
    if degree_exact + 1 > n_c:
        raise CubatureInfeasible(f"degree {degree_exact} needs at least {degree_exact + 1} centers, net has {n_c}",
                                 degree_exact)
    a = net.cell_measures
    M = ortho_basis(setting, degree_exact, net.x).T
    target = np.zeros(degree_exact + 1)
    target[0] = math.sqrt(setting.total_mass)
    A = M * a
    r = target - M @ a
    pinned = np.zeros(n_c, dtype=bool)
    v = np.zeros(n_c)
    for _ in range(n_c):
        free = ~pinned
        v[pinned] = floor - 1.0
        rhs = r - A[:, pinned] @ v[pinned]
        v[free] = np.linalg.lstsq(A[:, free], rhs, rcond=None)[0]
        low = free & (v < floor - 1.0)
        if not low.any():
            break
        pinned |= low
    w = a * (1.0 + v)
    res = M @ w - target
    bad = np.flatnonzero(np.abs(res) > tol * setting.total_mass)
    if bad.size:
        raise CubatureInfeasible(f"moment system infeasible at degree {int(bad[0])} "
                                 f"(residual {abs(res[bad[0]]):.2e}); refine the net", int(bad[0]))
    if pinned.any():
        warnings.warn(f"{int(pinned.sum())} cubature weights sit at the floor", RuntimeWarning, stacklevel=2)
    return CubatureRule(net, w, degree_exact)


def cubature_degree(setting: JacobiSetting, j: int, b: float = 2.0, kappa: float = 2.0) -> int:
    """Exactness degree at level j: covers Sigma_{kappa b^{j+1}} and products of two Sigma_{b^{j+1}}."""
    return max(band_degree(setting, kappa * b ** (j + 1)), 2 * band_degree(setting, b ** (j + 1)))


def cubature_for_level(setting: JacobiSetting, j: int, b: float = 2.0, gamma: float = 0.5,
                       kappa: float = 2.0) -> CubatureRule:
    if j < 0:
        raise ValueError("level must be >= 0")
    net = maximal_net(setting, min(math.pi, gamma / (kappa * b ** (j + 1))))
    try:
        return build_cubature(setting, net, cubature_degree(setting, j, b, kappa))
    except CubatureInfeasible as e:
        raise CubatureInfeasible(f"level {j}: {e}", e.degree) from e


# ---------------------------------------------------------------------------
# discrete companion bounds

def companion_sums(net: NetLevel, d: float, n_x: int = 401) -> dict:
    """max_x sum |A| (1 + rho/delta)^{-d-1} / |B(x, delta)| and max_x sum (1 + rho/delta)^{-2d-1}."""
    tx = np.linspace(0, math.pi, n_x)
    rho = np.abs(tx[:, None] - net.centers[None, :]) / net.delta
    B = ball_measure_theta(net.setting, tx, net.delta)
    first = ((1 + rho) ** (-d - 1) @ net.cell_measures) / B
    second = np.sum((1 + rho) ** (-2 * d - 1), axis=1)
    return {"weighted": float(first.max()), "counting": float(second.max())}
