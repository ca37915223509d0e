"""Functional calculus f(delta sqrt(L)) in the orthonormal Jacobi basis.

Every operator here is diagonal in {P_k}: a multiplier acts on the
coefficient vector, and its kernel is sum_k m_k P_k(x) P_k(y).  The
verification helpers measure the constants in the localization, norm,
Nikolski/Bernstein/Jackson and dimension estimates.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import integrate

from .setting import (
    JacobiSetting,
    ball_measure,
    ball_measure_theta,
    band_degree,
    eigenvalues,
    oracle_rule,
    ortho_basis,
)

INF_GRID_STEPS = 4096


# ---------------------------------------------------------------------------
# functions in the Jacobi basis

@dataclass
class SpectralVector:
    """A finite Jacobi expansion sum_k coeffs[k] P_k."""

    setting: JacobiSetting
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.atleast_1d(np.asarray(self.coeffs))
        if not np.iscomplexobj(self.coeffs):
            self.coeffs = self.coeffs.astype(float)

    @property
    def degree(self) -> int:
        nz = np.flatnonzero(self.coeffs)
        return int(nz[-1]) if nz.size else 0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return ortho_basis(self.setting, len(self.coeffs) - 1, x) @ self.coeffs

    def on_theta(self, theta):
        return self(np.cos(theta))

    def norm2(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2)))

    def padded(self, n: int) -> np.ndarray:
        """Coefficients for degrees 0..n (zero-padded or truncated)."""
        out = np.zeros(n + 1, dtype=self.coeffs.dtype)
        m = min(n + 1, len(self.coeffs))
        out[:m] = self.coeffs[:m]
        return out

    def truncate(self, lam: float) -> "SpectralVector":
        """Orthogonal projection onto Sigma_lam."""
        n = band_degree(self.setting, lam)
        return SpectralVector(self.setting, self.padded(n))

    def in_band(self, lam: float) -> bool:
        n = band_degree(self.setting, lam)
        return not np.any(self.coeffs[n + 1:])

    def _binary(self, other, op):
        if other.setting != self.setting:
            raise ValueError("spectral vectors live in different Jacobi settings")
        n = max(len(self.coeffs), len(other.coeffs)) - 1
        return SpectralVector(self.setting, op(self.padded(n), other.padded(n)))

    def __add__(self, other):
        return self._binary(other, np.add)

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __mul__(self, c):
        return SpectralVector(self.setting, self.coeffs * c)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1


def project(setting: JacobiSetting, f: Callable, degree: int, n_quad: int | None = None) -> SpectralVector:
    """Jacobi coefficients <f, P_k> for k <= degree by the Gauss-Jacobi oracle."""
    rule = oracle_rule(setting, 4 * max(degree, 1)) if n_quad is None else _rule_n(setting, n_quad)
    P = ortho_basis(setting, degree, rule.nodes)
    vals = np.asarray(f(rule.nodes)) * np.ones_like(rule.nodes)
    return SpectralVector(setting, P.T @ (rule.weights * vals))


def _rule_n(setting, n):
    from .setting import gauss_jacobi_rule
    return gauss_jacobi_rule(setting, n)


def random_band_limited(setting: JacobiSetting, lam: float, rng: np.random.Generator) -> SpectralVector:
    """Standard normal coefficients on every degree of Sigma_lam."""
    n = band_degree(setting, lam)
    return SpectralVector(setting, rng.standard_normal(n + 1))


@lru_cache(maxsize=32)
def _inf_grid_basis(alpha: float, beta: float, n: int) -> np.ndarray:
    theta = np.linspace(0, math.pi, INF_GRID_STEPS + 1)
    B = ortho_basis(JacobiSetting(alpha, beta, max_degree=max(n, 1)), n, np.cos(theta))
    B.setflags(write=False)
    return B


@lru_cache(maxsize=32)
def _oracle_basis(alpha: float, beta: float, n: int):
    setting = JacobiSetting(alpha, beta, max_degree=max(n, 1))
    rule = oracle_rule(setting, 4 * max(n, 1))
    B = ortho_basis(setting, n, rule.nodes)
    B.setflags(write=False)
    return B, rule.weights


def lp_norm(f: SpectralVector, p: float) -> float:
    """||f||_p; oracle quadrature of degree >= 4 deg f, dense theta grid (step pi/4096) for p = inf."""
    n = len(f.coeffs) - 1
    s = f.setting
    if math.isinf(p):
        return float(np.max(np.abs(_inf_grid_basis(s.alpha, s.beta, n) @ f.coeffs)))
    B, w = _oracle_basis(s.alpha, s.beta, n)
    vals = np.abs(B @ f.coeffs)
    return float(np.dot(w, vals ** p) ** (1.0 / p))


def function_lp_norm(setting: JacobiSetting, g: Callable, p: float, n_quad: int = 2048) -> float:
    """||g||_p for a vectorized callable on [-1, 1]."""
    if math.isinf(p):
        theta = np.linspace(0, math.pi, INF_GRID_STEPS + 1)
        return float(np.max(np.abs(g(np.cos(theta)))))
    rule = _rule_n(setting, n_quad)
    return float(np.dot(rule.weights, np.abs(g(rule.nodes)) ** p) ** (1.0 / p))


# ---------------------------------------------------------------------------
# cutoffs

def _h(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def plateau(u, b: float = 2.0):
    """C-infinity: 1 on [0, 1], 0 on [b, inf), monotone in between."""
    u = np.asarray(u, dtype=float)
    s = (u - 1.0) / (b - 1.0)
    left, right = _h(1.0 - s), _h(s)
    with np.errstate(invalid="ignore"):
        mid = left / (left + right)
    out = np.where(u <= 1.0, 1.0, np.where(u >= b, 0.0, mid))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class CutoffSpec:
    kind: str
    b: float
    support: tuple
    evaluator: Callable = field(repr=False)
    smoothness_order: int | None = None  # None: C-infinity

    def __call__(self, u):
        return self.evaluator(u)

    def scaled(self, s: float) -> "CutoffSpec":
        """u -> self(s u)."""
        lo, hi = self.support
        return CutoffSpec(self.kind, self.b, (lo / s, hi / s), lambda u: self.evaluator(s * np.asarray(u)),
                          self.smoothness_order)


def make_cutoff(kind: str = "plateau", b: float = 2.0, smoothness_order: int | None = None,
                fn: Callable | None = None, support: tuple | None = None) -> CutoffSpec:
    if b <= 1:
        raise ValueError("b must exceed 1")
    if kind == "plateau":
        return CutoffSpec("plateau", b, (0.0, b), lambda u: plateau(u, b), smoothness_order)
    if kind == "band":
        return CutoffSpec("band", b, (1.0 / b, b), lambda u: plateau(u, b) - plateau(b * np.asarray(u), b),
                          smoothness_order)
    if kind == "custom":
        if fn is None or support is None:
            raise ValueError("custom cutoff needs fn and support")
        return CutoffSpec("custom", b, tuple(support), fn, smoothness_order)
    raise ValueError(f"unknown cutoff kind {kind!r}")


def band_lower_bound(b: float = 2.0, n: int = 4001) -> float:
    """min of Phi(u) - Phi(bu) over [b^-3/4, b^3/4]."""
    psi = make_cutoff("band", b)
    u = np.geomspace(b ** -0.75, b ** 0.75, n)
    return float(np.min(psi(u)))


class LPSystem:
    """Dyadic system Psi_0(u), Psi_j(u) = Psi(b^-j u), with optional duals.

    kind:
      "partition" - sum_j Psi_j = 1 (Littlewood-Paley / natural frame)
      "tight"     - Psi_j = sqrt(partition block), so sum_j Psi_j^2 = 1
      "dual"      - Psi_j = block^split, dual = block^(1-split), sum Psi_j dual_j = 1
    """

    def __init__(self, b: float = 2.0, kind: str = "partition", split: float = 0.5):
        if b <= 1:
            raise ValueError("b must exceed 1")
        if kind not in ("partition", "tight", "dual"):
            raise ValueError(f"unknown LP system kind {kind!r}")
        self.b = b
        self.kind = kind
        self.split = {"partition": 1.0, "tight": 0.5, "dual": split}[kind]

    def block(self, j: int, u):
        """Partition block: Phi(u) for j = 0, Phi(b^-j u) - Phi(b^{1-j} u) otherwise."""
        u = np.asarray(u, dtype=float)
        b = self.b
        if j == 0:
            return plateau(u, b)
        return np.clip(plateau(u * b ** -j, b) - plateau(u * b ** (1 - j), b), 0.0, 1.0)

    def psi(self, j: int, u):
        blk = self.block(j, u)
        return blk if self.split == 1.0 else blk ** self.split

    def dual(self, j: int, u):
        if self.kind == "partition":
            return np.ones_like(np.asarray(u, dtype=float))
        return self.block(j, u) ** (1.0 - self.split)

    @property
    def has_duals(self) -> bool:
        return self.kind != "partition"

    def support(self, j: int) -> tuple:
        b = self.b
        return (0.0, b) if j == 0 else (b ** (j - 1), b ** (j + 1))

    def partition_residual(self, u, J: int) -> float:
        """max |sum_{j<=J} Psi_j(u) Psi~_j(u) - 1| (Psi~ = 1 for partition) over u <= b^J."""
        u = np.asarray(u, dtype=float)
        u = u[u <= self.b ** J]
        tot = sum(self.psi(j, u) * (self.dual(j, u) if self.has_duals else 1.0) for j in range(J + 1))
        if self.kind == "tight":
            tot = sum(self.psi(j, u) ** 2 for j in range(J + 1))
        return float(np.max(np.abs(tot - 1.0)))


# ---------------------------------------------------------------------------
# operators and kernels

def multiplier(setting: JacobiSetting, fn: Callable, delta: float, n: int) -> np.ndarray:
    """fn(delta sqrt(lambda_k)) for k = 0..n."""
    return np.asarray(fn(delta * np.sqrt(eigenvalues(setting, n))), dtype=float) * np.ones(n + 1)


def apply_spectral(fn: Callable, delta: float, f: SpectralVector) -> SpectralVector:
    if delta <= 0:
        raise ValueError("delta must be positive")
    n = len(f.coeffs) - 1
    out = multiplier(f.setting, fn, delta, n) * f.coeffs
    nz = np.flatnonzero(out)
    keep = int(nz[-1]) + 1 if nz.size else 1
    return SpectralVector(f.setting, out[:keep])


def support_degree(setting: JacobiSetting, fn, delta: float) -> int | None:
    """Top degree reached by a compactly supported cutoff at scale delta."""
    support = getattr(fn, "support", None)
    if support is None:
        return None
    return band_degree(setting, support[1] / delta)


class KernelValue(float):
    """Kernel value carrying its truncation degree and a tail-size warning flag."""

    degree: int
    tail_warning: bool

    def __new__(cls, value, degree, tail_warning):
        obj = super().__new__(cls, value)
        obj.degree = degree
        obj.tail_warning = tail_warning
        return obj


def _kernel_degree(setting, fn, delta, max_degree):
    n = support_degree(setting, fn, delta)
    if n is None:
        if max_degree is None:
            raise ValueError("max_degree required for a cutoff without declared support")
        n = max_degree
    elif max_degree is not None:
        n = min(n, max_degree)
    return n


def kernel_eval(setting: JacobiSetting, fn: Callable, delta: float, x: float, y: float,
                max_degree: int | None = None) -> KernelValue:
    """Lambda_delta(x, y) = sum_k fn(delta sqrt(lambda_k)) P_k(x) P_k(y)."""
    n = _kernel_degree(setting, fn, delta, max_degree)
    m = multiplier(setting, fn, delta, n + 3)
    tail = bool(np.any(np.abs(m[n + 1:]) > 1e-14))
    if tail:
        warnings.warn(f"kernel truncated at degree {n} with multiplier tail {np.abs(m[n + 1:]).max():.2e}",
                      RuntimeWarning, stacklevel=2)
    px = ortho_basis(setting, n, x)
    py = ortho_basis(setting, n, y)
    # product px*py is commutative, so the value is exactly symmetric
    return KernelValue(float(np.sum(m[: n + 1] * (px * py))), n, tail)


def kernel_matrix(setting: JacobiSetting, fn: Callable, delta: float, xs, ys,
                  max_degree: int | None = None) -> np.ndarray:
    n = _kernel_degree(setting, fn, delta, max_degree)
    m = multiplier(setting, fn, delta, n)
    return (ortho_basis(setting, n, xs) * m) @ ortho_basis(setting, n, ys).T


def heat_cutoff_degree(setting: JacobiSetting, t: float, tol: float = 1e-14) -> int:
    """Smallest K with sum_{k>K} exp(-lambda_k t) max|P_k|^2 < tol.

    max|P_k| is estimated on a Chebyshev-Lobatto grid (endpoints included).
    """
    if t <= 0:
        raise ValueError("t must be positive")
    n = min(setting.max_degree, int(math.ceil(math.sqrt(60.0 / t))) + 16)
    theta = np.linspace(0, math.pi, 513)
    M = np.max(np.abs(ortho_basis(setting, n, np.cos(theta))), axis=0)
    terms = np.exp(-eigenvalues(setting, n) * t) * M * M
    tails = np.cumsum(terms[::-1])[::-1]  # tails[k] = sum_{i >= k}
    ok = np.flatnonzero(tails < tol)
    return int(ok[0]) - 1 if ok.size else n


def heat_kernel(setting: JacobiSetting, t: float, x, y, tol: float = 1e-14):
    """p_t(x, y) = sum_k exp(-lambda_k t) P_k(x) P_k(y); broadcasts over x and y."""
    if t <= 0:
        raise ValueError("t must be positive")
    n = max(heat_cutoff_degree(setting, t, tol), 1)
    m = np.exp(-eigenvalues(setting, n) * t)
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    val = np.sum(m * (ortho_basis(setting, n, x) * ortho_basis(setting, n, y)), axis=-1)
    return float(val) if val.ndim == 0 else val


def heat_kernel_matrix(setting: JacobiSetting, t: float, xs, ys, tol: float = 1e-14) -> np.ndarray:
    n = max(heat_cutoff_degree(setting, t, tol), 1)
    m = np.exp(-eigenvalues(setting, n) * t)
    return (ortho_basis(setting, n, xs) * m) @ ortho_basis(setting, n, ys).T


def markov_defect(setting: JacobiSetting, t: float, xs) -> np.ndarray:
    """|int p_t(x, .) dmu - 1| by the Gauss-Jacobi oracle at each x."""
    n = max(heat_cutoff_degree(setting, t), 1)
    rule = oracle_rule(setting, n)
    H = heat_kernel_matrix(setting, t, xs, rule.nodes)
    return np.abs(H @ rule.weights - 1.0)


# ---------------------------------------------------------------------------
# Gaussian bounds and Hoelder regularity

class PositivityViolation(ArithmeticError):
    pass


@dataclass
class GaussianFit:
    c1_prime: float
    c1: float
    c2_prime: float
    c2: float
    holder_exponent_est: float
    max_upper_slack: float
    diag_range: tuple
    min_value: float


def gaussian_bound_fit(setting: JacobiSetting, t_grid, xy_grid, margin: float = 2.0,
                       positivity_tol: float = 1e-12) -> GaussianFit:
    """Fit the two-sided envelope c' exp(-c rho^2/t) / sqrt(|B(x,sqrt t)| |B(y,sqrt t)|).

    With v = log(p_t V) and u = rho^2/t, the upper exponent c2 is the largest
    slope for which v + c2 u stays below log(margin * max v); the lower c1 is
    the smallest for which v + c1 u stays above log(min diagonal v / margin).
    The companion constants are then the realized extremes.

    Entries below positivity_tol * max p_t are at round-off level (far pairs at
    small t) and are left out of the fit; an entry below -positivity_tol * max p_t
    is a genuine sign violation.
    """
    xs = np.asarray(xy_grid, dtype=float)
    theta = np.arccos(xs)
    us, vs, diag = [], [], []
    min_val = math.inf
    for t in t_grid:
        P = heat_kernel_matrix(setting, t, xs, xs)
        floor = positivity_tol * float(np.max(np.abs(P)))
        min_val = min(min_val, float(P.min()))
        if P.min() < -floor or np.max(P) <= 0:
            raise PositivityViolation(f"p_t not positive at t={t}: min {P.min():.3e}")
        B = ball_measure_theta(setting, theta, math.sqrt(t))
        V = np.sqrt(np.outer(B, B))
        rho = np.abs(theta[:, None] - theta[None, :])
        keep = P > floor
        us.append((rho ** 2 / t)[keep])
        vs.append(np.log(P[keep] * V[keep]))
        diag.append(np.diag(P) * B)
    u, v = np.concatenate(us), np.concatenate(vs)
    diag = np.concatenate(diag)
    hi = math.log(margin) + v.max()
    lo = math.log(diag.min() / margin)
    far = u > 0
    c2 = float(np.min((hi - v[far]) / u[far]))
    c1 = float(max(np.max((lo - v[far]) / u[far]), 0.0))
    c2p = float(np.exp(np.max(v + c2 * u)))
    c1p = float(np.exp(np.min(v + c1 * u)))
    slack = float(np.max(np.exp(v + c2 * u) / c2p))
    holder = holder_exponent_estimate(setting, t_grid, xs)
    return GaussianFit(c1p, c1, c2p, c2, holder, slack, (float(diag.min()), float(diag.max())), min_val)


def holder_exponent_estimate(setting: JacobiSetting, t_grid, xs, steps=(1e-2, 1e-3)) -> float:
    """Log-log slope of max |p_t(x,y) - p_t(x,y')| against rho(y,y')/sqrt(t)."""
    theta = np.arccos(np.asarray(xs, dtype=float))
    slopes = []
    for t in t_grid:
        maxdiff = []
        for h in steps:
            step = h * math.sqrt(t)
            ty = np.clip(theta, 0, math.pi - step)
            P0 = heat_kernel_matrix(setting, t, xs, np.cos(ty))
            P1 = heat_kernel_matrix(setting, t, xs, np.cos(ty + step))
            B = ball_measure_theta(setting, theta, math.sqrt(t))
            maxdiff.append(np.max(np.abs(P1 - P0) * np.sqrt(np.outer(B, B))))
        slopes.append(math.log(maxdiff[0] / maxdiff[1]) / math.log(steps[0] / steps[1]))
    return float(min(slopes))


# ---------------------------------------------------------------------------
# localization and kernel norms

def localization_profile(setting: JacobiSetting, fn: Callable, delta_list, sigma_list,
                         n_grid: int = 257) -> dict:
    """C(delta, sigma) = max |Lambda_delta(x,y)| sqrt(|B(x,delta)||B(y,delta)|) (1+rho/delta)^sigma."""
    theta = np.linspace(0, math.pi, n_grid)
    xs = np.cos(theta)
    rho = np.abs(theta[:, None] - theta[None, :])
    rows = []
    for delta in delta_list:
        K = np.abs(kernel_matrix(setting, fn, delta, xs, xs))
        B = ball_measure_theta(setting, theta, delta)
        base = K * np.sqrt(np.outer(B, B))
        for sigma in sigma_list:
            C = float(np.max(base * (1 + rho / delta) ** sigma))
            rows.append({"delta": float(delta), "sigma": float(sigma), "C": C})
    uniformity = {}
    for sigma in sigma_list:
        vals = [r["C"] for r in rows if r["sigma"] == sigma]
        uniformity[float(sigma)] = max(vals) / min(vals)
    return {"rows": rows, "uniformity": uniformity}


def lipschitz_profile(setting: JacobiSetting, fn: Callable, delta: float, sigma: float,
                      n_grid: int = 257, steps=(1e-2, 1e-3)) -> dict:
    """Weighted |Lambda(x,y) - Lambda(x,y')| profile; returns constants and exponent."""
    theta = np.linspace(0, math.pi, n_grid)
    xs = np.cos(theta)
    rho = np.abs(theta[:, None] - theta[None, :])
    B = ball_measure_theta(setting, theta, delta)
    consts = []
    for h in steps:
        step = h * delta
        ty = np.clip(theta, 0, math.pi - step)
        K0 = kernel_matrix(setting, fn, delta, xs, np.cos(ty))
        K1 = kernel_matrix(setting, fn, delta, xs, np.cos(ty + step))
        W = np.sqrt(np.outer(B, B)) * (1 + rho / delta) ** sigma / h
        consts.append(float(np.max(np.abs(K1 - K0) * W)))
    # |diff| ~ C h^a: exponent from the two steps (consts are |diff|/h)
    exponent = 1.0 + math.log(consts[0] / consts[1]) / math.log(steps[0] / steps[1])
    return {"constants": consts, "exponent": exponent}


def kernel_norms_check(setting: JacobiSetting, fn: Callable, delta: float, p_list, x_grid) -> dict:
    """||Lambda_delta(x, .)||_p / |B(x,delta)|^{1/p-1} for each p and x."""
    xs = np.asarray(x_grid, dtype=float)
    n = _kernel_degree(setting, fn, delta, None)
    m = multiplier(setting, fn, delta, n)
    Px = ortho_basis(setting, n, xs) * m
    rule = oracle_rule(setting, 4 * n)
    Py = ortho_basis(setting, n, rule.nodes)
    Kq = Px @ Py.T
    theta_inf = np.linspace(0, math.pi, INF_GRID_STEPS + 1)
    Kinf = Px @ ortho_basis(setting, n, np.cos(theta_inf)).T
    B = ball_measure(setting, xs, delta)
    table = {}
    for p in p_list:
        if math.isinf(p):
            norms = np.max(np.abs(Kinf), axis=1)
            expo = -1.0
        else:
            norms = (np.abs(Kq) ** p @ rule.weights) ** (1.0 / p)
            expo = 1.0 / p - 1.0
        ratio = norms / B ** expo
        table[p] = {"norms": norms, "ratio": ratio, "c1": float(ratio.min()), "c2": float(ratio.max())}
    # exact identity ||Lambda(x,.)||_2^2 = (fn^2)(delta sqrt L)(x,x)
    table["diag_fn2"] = np.sum(Px * Px, axis=1)
    table["diag_fn"] = np.sum(Px * ortho_basis(setting, n, xs), axis=1)
    return table


def diagonal_kernel(setting: JacobiSetting, fn: Callable, delta: float, xs, n: int | None = None):
    n = _kernel_degree(setting, fn, delta, n)
    m = multiplier(setting, fn, delta, n)
    P = ortho_basis(setting, n, np.asarray(xs, dtype=float))
    return P ** 2 @ m


# ---------------------------------------------------------------------------
# Nikolski, Bernstein, Jackson

def apply_L_power(f: SpectralVector, m: int) -> SpectralVector:
    lam = eigenvalues(f.setting, len(f.coeffs) - 1)
    return SpectralVector(f.setting, f.coeffs * lam ** m)


def near_best_error(f: SpectralVector, t: float, p: float, b: float = 2.0) -> float:
    """E_t(f)_p surrogate: exact truncation for p = 2, ||theta(t^-1 sqrt L) f - f||_p otherwise.

    The plateau used for p != 2 is 1 on [0, 1/b] and supported in [0, 1], so
    the approximant lies in Sigma_t.
    """
    if p == 2:
        return (f - f.truncate(t)).norm2()
    approx = apply_spectral(lambda u: plateau(b * np.asarray(u), b), 1.0 / t, f)
    return lp_norm(f - approx, p)


def verify_spectral_inequalities(setting: JacobiSetting, kind: str, *, p: float = 2.0,
                                 q: float = math.inf, lambdas=(2, 4, 8, 16, 32), m: int = 1,
                                 draws: int = 100, seed: int = 0, d: float | None = None,
                                 f: SpectralVector | None = None, t_list=None) -> dict:
    """Realized constants for the Nikolski, Bernstein or Jackson inequality."""
    rng = np.random.default_rng(seed)
    if kind == "nikolski":
        if d is None:
            from .setting import doubling_certify
            d = doubling_certify(setting)[0]
        rows = []
        for lam in lambdas:
            worst = 0.0
            for _ in range(draws):
                g = random_band_limited(setting, lam, rng)
                worst = max(worst, lp_norm(g, q) / (lam ** (d * (1 / p - 1 / q)) * lp_norm(g, p)))
            rows.append({"lambda": float(lam), "constant": worst})
        consts = [r["constant"] for r in rows]
        return {"kind": kind, "d": d, "rows": rows, "max_constant": max(consts),
                "spread": max(consts) / min(consts)}
    if kind == "bernstein":
        rows = []
        for lam in lambdas:
            worst = 0.0
            for _ in range(draws):
                g = random_band_limited(setting, lam, rng) if f is None else f
                worst = max(worst, lp_norm(apply_L_power(g, m), p) / (lam ** (2 * m) * lp_norm(g, p)))
            rows.append({"lambda": float(lam), "constant": worst})
        return {"kind": kind, "rows": rows, "max_constant": max(r["constant"] for r in rows)}
    if kind == "jackson":
        if f is None:
            raise ValueError("jackson check needs a function")
        Lmf = lp_norm(apply_L_power(f, m), p)
        rows = []
        for t in t_list:
            E = near_best_error(f, t, p)
            bound = t ** (-2 * m) * Lmf
            rows.append({"t": float(t), "E": E, "bound": bound,
                         "constant": E / bound if bound > 0 else 0.0})
        return {"kind": kind, "rows": rows, "max_constant": max(r["constant"] for r in rows)}
    raise ValueError(f"unknown inequality kind {kind!r}")


# ---------------------------------------------------------------------------
# dimension and approximation of identity

def spectral_dimension(setting: JacobiSetting, lam: float) -> int:
    return band_degree(setting, lam) + 1


def inverse_ball_integral(setting: JacobiSetting, r: float) -> float:
    """int_M mu(B(x, r))^{-1} dmu(x), integrated in theta with breakpoints at r and pi - r."""
    a, b = setting.alpha, setting.beta

    def integrand(phi):
        s, c = math.sin(phi / 2), math.cos(phi / 2)
        dens = 2.0 ** (a + b + 1) * s ** (2 * a + 1) * c ** (2 * b + 1)
        return dens / ball_measure_theta(setting, phi, r)

    pts = sorted({min(max(v, 1e-12), math.pi - 1e-12) for v in (r, math.pi - r)})
    val, _ = integrate.quad(integrand, 0.0, math.pi, points=pts, limit=400, epsrel=1e-10)
    return val


def spectral_dim_check(setting: JacobiSetting, lambda_list) -> dict:
    rows = []
    for lam in lambda_list:
        dim = spectral_dimension(setting, lam)
        integral = inverse_ball_integral(setting, 1.0 / lam)
        rows.append({"lambda": float(lam), "dim": dim, "integral": integral, "ratio": dim / integral})
    ratios = [r["ratio"] for r in rows]
    return {"rows": rows, "ratio_min": min(ratios), "ratio_max": max(ratios),
            "factor": max(ratios) / min(ratios)}


def approx_identity_check(setting: JacobiSetting, fn: Callable, f: Callable, p: float, delta_list,
                          n_quad: int = 4096) -> dict:
    """||fn(delta sqrt L) f - f||_p along delta_list.

    The smoothed function is the kernel integral int Lambda_delta(x,y) f(y) dmu(y),
    evaluated by an n_quad-point Gauss-Jacobi rule.
    """
    rule = _rule_n(setting, n_quad)
    fy = np.asarray(f(rule.nodes), dtype=float) * np.ones_like(rule.nodes)
    errors = []
    for delta in delta_list:
        n = _kernel_degree(setting, fn, delta, None)
        coeffs = ortho_basis(setting, n, rule.nodes).T @ (rule.weights * fy)
        smoothed = SpectralVector(setting, coeffs * multiplier(setting, fn, delta, n))
        err_fn = lambda x, s=smoothed: s(x) - f(x)  # noqa: E731
        errors.append(function_lp_norm(setting, err_fn, p, n_quad=min(n_quad, 4 * n + 64)))
    errors = np.array(errors)
    rates = np.log2(errors[:-1] / errors[1:]) if len(errors) > 1 else np.array([])
    return {"delta": [float(d) for d in delta_list], "errors": errors.tolist(),
            "rates": rates.tolist(), "monotone": bool(np.all(np.diff(errors) <= 1e-15))}
