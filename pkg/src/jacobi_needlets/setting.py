"""The interval [-1, 1] with Jacobi weight as a metric measure space.

Geometry is done in the angular coordinate theta = arccos(x), where the
intrinsic distance is the plain absolute difference.  Spectral data of the
Jacobi operator (eigenvalues, orthonormal polynomials) live here too, along
with the Gauss-Jacobi rule that every other module uses as its integration
oracle.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate, linalg, special

DEFAULT_MAX_DEGREE = 4096


class DegreeLimitError(ValueError):
    """Requested polynomial degree exceeds the configured maximum."""


@dataclass(frozen=True)
class JacobiSetting:
    alpha: float = 0.0
    beta: float = 0.0
    max_degree: int = DEFAULT_MAX_DEGREE
    rtol: float = 1e-12

    def __post_init__(self):
        if not (self.alpha > -1 and self.beta > -1):
            raise ValueError(f"Jacobi exponents must exceed -1, got alpha={self.alpha}, beta={self.beta}")
        if self.max_degree < 1:
            raise ValueError("max_degree must be positive")

    @property
    def total_mass(self) -> float:
        a, b = self.alpha, self.beta
        return float(2.0 ** (a + b + 1) * special.beta(a + 1, b + 1))

    @property
    def diameter(self) -> float:
        return math.pi

    def weight(self, x):
        x = np.asarray(x, dtype=float)
        return (1 - x) ** self.alpha * (1 + x) ** self.beta

    def norm_constants(self, n: int) -> np.ndarray:
        """h_k with P_k = p_k / h_k orthonormal, p_k the classical Jacobi polynomial."""
        return _norm_constants(self.alpha, self.beta, n)

    @property
    def doubling_exponent(self) -> float:
        return doubling_certify(self)[0]

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta, "max_degree": self.max_degree,
                "tolerances": {"rtol": self.rtol}}

    @classmethod
    def from_dict(cls, d: dict) -> "JacobiSetting":
        unknown = set(d) - {"alpha", "beta", "max_degree", "tolerances"}
        if unknown:
            raise ValueError(f"unknown setting keys: {sorted(unknown)}")
        tol = d.get("tolerances", {}) or {}
        return cls(alpha=float(d.get("alpha", 0.0)), beta=float(d.get("beta", 0.0)),
                   max_degree=int(d.get("max_degree", DEFAULT_MAX_DEGREE)),
                   rtol=float(tol.get("rtol", 1e-12)))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)

    @classmethod
    def load(cls, path) -> "JacobiSetting":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class PointTheta:
    theta: float

    def __post_init__(self):
        if not 0.0 <= self.theta <= math.pi:
            raise ValueError("theta must lie in [0, pi]")

    @property
    def x(self) -> float:
        return math.cos(self.theta)

    @classmethod
    def from_x(cls, x: float) -> "PointTheta":
        return cls(float(np.arccos(np.clip(x, -1.0, 1.0))))

    def distance(self, other: "PointTheta") -> float:
        return abs(self.theta - other.theta)


@dataclass(frozen=True)
class GaussJacobiRule:
    nodes: np.ndarray
    weights: np.ndarray
    degree_exact: int
    setting: JacobiSetting = field(repr=False, compare=False, default=None)

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["node", "weight"])
            for xn, wn in zip(self.nodes, self.weights):
                w.writerow([f"{xn:.17g}", f"{wn:.17g}"])

    @classmethod
    def from_csv(cls, path) -> "GaussJacobiRule":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(nodes=data[:, 0].copy(), weights=data[:, 1].copy(),
                   degree_exact=2 * len(data) - 1)


# ---------------------------------------------------------------------------
# spectral data

def eigenvalue(setting: JacobiSetting, k):
    """lambda_k = k (k + alpha + beta + 1); vectorized over k."""
    k = np.asarray(k)
    lam = k * (k + setting.alpha + setting.beta + 1.0)
    return float(lam) if lam.ndim == 0 else lam


def eigenvalues(setting: JacobiSetting, n: int) -> np.ndarray:
    k = np.arange(n + 1, dtype=float)
    return k * (k + setting.alpha + setting.beta + 1.0)


def band_degree(setting: JacobiSetting, lam: float) -> int:
    """n(lambda) = max{k : sqrt(lambda_k) <= lambda}, i.e. the top degree of Sigma_lambda."""
    if lam < 0:
        return -1
    s = setting.alpha + setting.beta + 1.0
    # positive root of k^2 + s k - lam^2 = 0, then fix rounding
    k = int(math.floor((-s + math.sqrt(s * s + 4 * lam * lam)) / 2))
    k = max(k, 0)
    while k > 0 and k * (k + s) > lam * lam * (1 + 1e-14):
        k -= 1
    while (k + 1) * (k + 1 + s) <= lam * lam * (1 + 1e-14):
        k += 1
    return k


@lru_cache(maxsize=64)
def _norm_constants(a: float, b: float, n: int) -> np.ndarray:
    k = np.arange(n + 1, dtype=float)
    s = a + b
    with np.errstate(divide="ignore", invalid="ignore"):
        logh2 = ((s + 1) * math.log(2) - np.log(2 * k + s + 1)
                 + special.gammaln(k + a + 1) + special.gammaln(k + b + 1)
                 - special.gammaln(k + s + 1) - special.gammaln(k + 1))
    # k = 0 is singular in the closed form when a + b + 1 == 0
    logh2[0] = (s + 1) * math.log(2) + special.betaln(a + 1, b + 1)
    h = np.exp(0.5 * logh2)
    h.setflags(write=False)
    return h


def jacobi_classical(setting: JacobiSetting, n: int, x) -> np.ndarray:
    """Classical P_k^{(a,b)}(x) for k = 0..n; shape x.shape + (n+1,)."""
    a, b = setting.alpha, setting.beta
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape + (n + 1,))
    out[..., 0] = 1.0
    if n >= 1:
        out[..., 1] = 0.5 * (a - b) + 0.5 * (a + b + 2) * x
    for k in range(2, n + 1):
        c = 2 * k + a + b
        a1 = 2 * k * (k + a + b) * (c - 2)
        a2 = (c - 1) * (a * a - b * b)
        a3 = (c - 1) * c * (c - 2)
        a4 = 2 * (k + a - 1) * (k + b - 1) * c
        out[..., k] = ((a2 + a3 * x) * out[..., k - 1] - a4 * out[..., k - 2]) / a1
    return out


def ortho_basis(setting: JacobiSetting, n: int, x) -> np.ndarray:
    """Orthonormal P_0..P_n at x; shape x.shape + (n+1,)."""
    if n > setting.max_degree:
        raise DegreeLimitError(f"degree {n} exceeds max_degree={setting.max_degree}")
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1 + 1e-14):
        raise ValueError("ortho_basis requires |x| <= 1")
    return jacobi_classical(setting, n, np.clip(x, -1.0, 1.0)) / setting.norm_constants(n)


def ortho_jacobi(setting: JacobiSetting, k: int, x):
    """Value of the L^2(mu)-orthonormal Jacobi polynomial P_k at x."""
    if k < 0:
        raise ValueError("degree must be nonnegative")
    vals = ortho_basis(setting, k, x)[..., k]
    return float(vals) if np.ndim(vals) == 0 else vals


# ---------------------------------------------------------------------------
# quadrature oracle

def recurrence_coefficients(setting: JacobiSetting, n: int):
    """Diagonal and off-diagonal of the Jacobi matrix of the orthonormal family."""
    a, b = setting.alpha, setting.beta
    k = np.arange(n, dtype=float)
    c = 2 * k + a + b
    with np.errstate(divide="ignore", invalid="ignore"):
        diag = (b * b - a * a) / (c * (c + 2))
    diag[0] = (b - a) / (a + b + 2)
    k1 = np.arange(1, n, dtype=float)
    c1 = 2 * k1 + a + b
    off = np.sqrt(4 * k1 * (k1 + a) * (k1 + b) * (k1 + a + b) / (c1 * c1 * (c1 + 1) * (c1 - 1)))
    if n > 1 and abs(a + b + 1) < 1e-15:
        off[0] = math.sqrt(4 * (1 + a) * (1 + b) / ((a + b + 2) ** 2 * (a + b + 3)))
    return diag, off


@lru_cache(maxsize=64)
def _gauss_jacobi(a: float, b: float, n: int, max_degree: int):
    setting = JacobiSetting(a, b, max_degree=max(max_degree, n))
    diag, off = recurrence_coefficients(setting, n)
    try:
        nodes = linalg.eigh_tridiagonal(diag, off, eigvals_only=True)
    except linalg.LinAlgError as exc:
        raise ArithmeticError(f"Golub-Welsch eigen-solve failed for n={n}, alpha={a}, beta={b}") from exc
    nodes = np.clip(np.sort(nodes), -1.0, 1.0)
    # Christoffel numbers 1 / sum_k P_k(x)^2 are accurate even where weights are tiny
    P = ortho_basis(setting, n - 1, nodes)
    weights = 1.0 / np.einsum("ij,ij->i", P, P)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def gauss_jacobi_rule(setting: JacobiSetting, n: int) -> GaussJacobiRule:
    """n-point Gauss-Jacobi rule, exact for polynomials of degree <= 2n - 1."""
    if n < 1:
        raise ValueError("need at least one node")
    nodes, weights = _gauss_jacobi(setting.alpha, setting.beta, int(n), setting.max_degree)
    return GaussJacobiRule(nodes, weights, 2 * n - 1, setting)


def oracle_rule(setting: JacobiSetting, degree: int) -> GaussJacobiRule:
    """Smallest Gauss-Jacobi rule integrating polynomials of the given degree exactly."""
    return gauss_jacobi_rule(setting, max(1, degree // 2 + 1))


# ---------------------------------------------------------------------------
# metric and measure

def intrinsic_distance(x, y):
    """rho(x, y) = |arccos x - arccos y|."""
    x = np.clip(np.asarray(x, dtype=float), -1.0, 1.0)
    y = np.clip(np.asarray(y, dtype=float), -1.0, 1.0)
    d = np.abs(np.arccos(x) - np.arccos(y))
    return float(d) if d.ndim == 0 else d


def measure_theta_interval(setting: JacobiSetting, lo, hi):
    """mu of {cos(phi) : lo <= phi <= hi} for 0 <= lo <= hi <= pi (vectorized).

    Uses the regularized incomplete beta function: the tail mass near x = 1
    is total_mass * I_{(1-x)/2}(alpha+1, beta+1).  Each interval is computed
    from whichever tail keeps both arguments small.
    """
    a, b = setting.alpha, setting.beta
    lo = np.clip(np.asarray(lo, dtype=float), 0.0, math.pi)
    hi = np.clip(np.asarray(hi, dtype=float), 0.0, math.pi)
    # (1 - cos phi)/2 = sin^2(phi/2) avoids cancellation near phi = 0
    s_lo = np.sin(lo / 2) ** 2
    s_hi = np.sin(hi / 2) ** 2
    c_lo = np.cos(lo / 2) ** 2
    c_hi = np.cos(hi / 2) ** 2
    upper = special.betainc(a + 1, b + 1, s_hi) - special.betainc(a + 1, b + 1, s_lo)
    lower = special.betainc(b + 1, a + 1, c_lo) - special.betainc(b + 1, a + 1, c_hi)
    mid = 0.5 * (lo + hi)
    out = setting.total_mass * np.where(mid <= math.pi / 2, upper, lower)
    out = np.maximum(out, 0.0)
    return float(out) if out.ndim == 0 else out


def ball_measure(setting: JacobiSetting, x, r):
    """mu(B(x, r)) for the open intrinsic ball; saturates at total_mass when r >= pi."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("ball radius must be positive")
    theta = np.arccos(np.clip(np.asarray(x, dtype=float), -1.0, 1.0))
    return measure_theta_interval(setting, theta - r, theta + r)


def ball_measure_theta(setting: JacobiSetting, theta, r):
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("ball radius must be positive")
    theta = np.asarray(theta, dtype=float)
    return measure_theta_interval(setting, theta - r, theta + r)


def ball_measure_quad(setting: JacobiSetting, x: float, r: float) -> float:
    """Adaptive quadrature in theta; independent check on ball_measure."""
    if r <= 0:
        raise ValueError("ball radius must be positive")
    theta = math.acos(min(1.0, max(-1.0, x)))
    lo, hi = max(0.0, theta - r), min(math.pi, theta + r)
    a, b = setting.alpha, setting.beta

    def density(phi):
        # (1-cos)^a (1+cos)^b sin, written with half angles
        s, c = math.sin(phi / 2), math.cos(phi / 2)
        return 2.0 ** (a + b + 1) * s ** (2 * a + 1) * c ** (2 * b + 1)

    val, _ = integrate.quad(density, lo, hi, epsabs=1e-13 * setting.total_mass, epsrel=1e-12, limit=200)
    return val


def ball_comparability(setting: JacobiSetting, n_x: int = 200, n_r: int = 50):
    """Range of mu(B(x,r)) / [r (1-x+r^2)^(a+1/2) (1+x+r^2)^(b+1/2)] over an (x, r) grid."""
    x = np.cos(np.linspace(0, math.pi, n_x))
    r = np.geomspace(1e-3, math.pi, n_r)
    X, R = np.meshgrid(x, r, indexing="ij")
    model = R * (1 - X + R * R) ** (setting.alpha + 0.5) * (1 + X + R * R) ** (setting.beta + 0.5)
    ratio = ball_measure(setting, X, R) / model
    return float(ratio.min()), float(ratio.max())


def doubling_certify(setting: JacobiSetting, grid_density: int = 64):
    """Empirical doubling and reverse-doubling exponents (d_est, beta_est).

    The grid covers theta in [0, pi] and log-spaced radii; the reverse bound
    only uses r <= diam/3.  Exponents are rounded outward to 1e-3.
    """
    return _doubling(setting.alpha, setting.beta, int(grid_density))


@lru_cache(maxsize=32)
def _doubling(a: float, b: float, grid_density: int):
    setting = JacobiSetting(a, b)
    theta = np.linspace(0.0, math.pi, 4 * grid_density + 1)
    r = np.geomspace(1e-4, math.pi, 2 * grid_density)
    T, R = np.meshgrid(theta, r, indexing="ij")
    small = ball_measure_theta(setting, T, R)
    big = ball_measure_theta(setting, T, 2 * R)
    lr = np.log2(big / small)
    d_est = math.ceil(lr.max() * 1000 - 1e-9) / 1000
    rev = R <= math.pi / 3
    beta_est = math.floor(lr[rev].min() * 1000 + 1e-9) / 1000
    return d_est, beta_est


def non_collapsing_constant(setting: JacobiSetting, n_x: int = 401) -> float:
    theta = np.linspace(0, math.pi, n_x)
    return float(ball_measure_theta(setting, theta, 1.0).min())


def d_localizer(setting: JacobiSetting, delta: float, sigma: float, x, y):
    """D_{delta,sigma}(x,y) = (|B(x,delta)| |B(y,delta)|)^{-1/2} (1 + rho(x,y)/delta)^{-sigma}."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    bx = ball_measure(setting, x, delta)
    by = ball_measure(setting, y, delta)
    return (bx * by) ** -0.5 * (1 + intrinsic_distance(x, y) / delta) ** (-sigma)


def d_localizer_theta(setting: JacobiSetting, delta: float, sigma: float, tx, ty):
    bx = ball_measure_theta(setting, tx, delta)
    by = ball_measure_theta(setting, ty, delta)
    return (bx * by) ** -0.5 * (1 + np.abs(np.asarray(tx) - np.asarray(ty)) / delta) ** (-sigma)


# ---------------------------------------------------------------------------
# Poincare inequality

def theta_interval_rule(setting: JacobiSetting, lo: float, hi: float, n: int):
    """Nodes phi and weights integrating g(phi) against mu on the angular interval [lo, hi].

    The mu-density in phi is 2^{a+b+1} sin(phi/2)^{2a+1} cos(phi/2)^{2b+1}; the
    endpoint powers are carried by a Gauss-Jacobi rule in u, phi = lo + (u+1)(hi-lo)/2.
    """
    a, b = setting.alpha, setting.beta
    diam = hi - lo
    at_one, at_minus_one = lo <= 0.0, hi >= math.pi
    u, wu = _roots_jacobi_cached(n, 2 * b + 1 if at_minus_one else 0.0, 2 * a + 1 if at_one else 0.0)
    phi = lo + (u + 1) * diam / 2
    s, c = np.sin(phi / 2), np.cos(phi / 2)
    fs = (s / (1 + u)) ** (2 * a + 1) if at_one else s ** (2 * a + 1)
    fc = (c / (1 - u)) ** (2 * b + 1) if at_minus_one else c ** (2 * b + 1)
    return phi, wu * 2.0 ** (a + b + 1) * (diam / 2) * fs * fc


@lru_cache(maxsize=64)
def _roots_jacobi_cached(n, ea, eb):
    u, w = special.roots_jacobi(n, ea, eb)
    u.setflags(write=False)
    w.setflags(write=False)
    return u, w


class PoincareInconsistency(ArithmeticError):
    pass


def verify_poincare(setting: JacobiSetting, f, f_deriv, interval, n_nodes: int = 400) -> float:
    """Realized constant int_I |f - f_I|^2 w / (diam(I)^2 int_I |f'|^2 (1-x^2) w).

    Both integrals are taken in the angular variable, where the integrand is
    smooth apart from the weight's endpoint powers.
    """
    lo, hi = float(interval[0]), float(interval[1])
    if not -1 <= lo < hi <= 1:
        raise ValueError("interval must satisfy -1 <= a < b <= 1")
    t_lo, t_hi = math.acos(hi), math.acos(lo)
    diam = t_hi - t_lo
    phi, dens = theta_interval_rule(setting, t_lo, t_hi, n_nodes)
    x = np.cos(phi)
    fx = np.asarray(f(x), dtype=float) * np.ones_like(x)
    dfx = np.asarray(f_deriv(x), dtype=float) * np.ones_like(x)
    mass = dens.sum()
    mean = np.dot(dens, fx) / mass
    lhs = np.dot(dens, (fx - mean) ** 2)
    rhs = np.dot(dens, dfx ** 2 * (1 - x * x))
    if rhs <= 0:
        if lhs > 1e-14 * max(1.0, abs(mean)) ** 2 * mass:
            raise PoincareInconsistency("Dirichlet integral vanishes for a nonconstant function")
        return 0.0
    return float(lhs / (diam * diam * rhs))


def poincare_sweep(setting: JacobiSetting, n_pairs: int = 100, seed: int = 0, max_degree: int = 6) -> dict:
    """Realized Poincare constants over random (polynomial, interval) pairs."""
    rng = np.random.default_rng(seed)
    consts = []
    for _ in range(n_pairs):
        poly = np.polynomial.Polynomial(rng.standard_normal(rng.integers(2, max_degree + 2)))
        deriv = poly.deriv()
        t = np.sort(rng.uniform(0, math.pi, 2))
        if t[1] - t[0] < 1e-3:
            t[1] = min(math.pi, t[0] + 1e-3)
        consts.append(verify_poincare(setting, poly, deriv, (math.cos(t[1]), math.cos(t[0]))))
    consts = np.array(consts)
    return {"max": float(consts.max()), "min": float(consts.min()), "finite": bool(np.all(np.isfinite(consts)))}
