"""Frame constructions in the Jacobi basis.

Each frame element is stored as its coefficient vector in {P_k}.  A level j
holds two matrices of shape (centers, degree+1): the synthesis elements psi and
the analysis elements psi~ (the same matrix for tight frames).

kinds:
  tight    psi = psi~ = sqrt(w) Psi_j(sqrt L)(., xi), Psi_j = sqrt(partition block)
  needlet  psi = sqrt(w) Psi_j(...), psi~ = sqrt(w) Psi~_j(...), Psi_j Psi~_j = block
  natural  psi = |A|^{1/2} Psi_j(...), Psi_j = partition block (analysis frame only)
  general  natural psi with duals c |A|^{1/2} T[Gamma(., xi)] built by a Neumann series
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .nets import CubatureRule, NetLevel, certify_gamma, cubature_for_level, maximal_net
from .setting import JacobiSetting, ball_measure_theta, band_degree, eigenvalues, oracle_rule, ortho_basis
from .spectral import LPSystem, SpectralVector, plateau, project

KINDS = ("tight", "needlet", "natural", "general")


class NeumannDivergence(ArithmeticError):
    pass


class FrameShapeError(ValueError):
    pass


@dataclass
class FrameLevel:
    j: int
    net: NetLevel
    weights: np.ndarray
    psi: np.ndarray
    dual: np.ndarray | None = None  # None: psi~ = psi

    @property
    def analysis(self) -> np.ndarray:
        return self.psi if self.dual is None else self.dual

    def __len__(self):
        return len(self.net)


@dataclass
class FramePair:
    kind: str
    setting: JacobiSetting
    b: float
    J: int
    gamma: float
    degree: int
    levels: list
    epsilon: float | None = None
    sigma: float | None = None
    split: float | None = None
    diagnostics: dict = field(default_factory=dict)

    def level_sizes(self) -> list:
        return [len(lv) for lv in self.levels]

    def element(self, j: int, i: int, dual: bool = False) -> SpectralVector:
        lv = self.levels[j]
        return SpectralVector(self.setting, (lv.analysis if dual else lv.psi)[i])

    def spectral_band(self) -> float:
        """Reconstruction holds on Sigma_{b^{J-1}}."""
        return self.b ** (self.J - 1)


@dataclass
class CoefficientTree:
    centers: list
    coeffs: list

    def energy(self) -> float:
        return float(sum(np.sum(np.abs(c) ** 2) for c in self.coeffs))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["level", "center", "re", "im"])
            for j, (cs, vals) in enumerate(zip(self.centers, self.coeffs)):
                for c, v in zip(cs, vals):
                    w.writerow([j, format(float(c), ".17g"), format(float(np.real(v)), ".17g"),
                                format(float(np.imag(v)), ".17g")])

    @classmethod
    def from_csv(cls, path) -> "CoefficientTree":
        levels: dict = {}
        with open(path, newline="") as fh:
            for r in csv.DictReader(fh):
                lv = levels.setdefault(int(r["level"]), ([], []))
                lv[0].append(float(r["center"]))
                lv[1].append(complex(float(r["re"]), float(r["im"])))
        if sorted(levels) != list(range(len(levels))):
            raise FrameShapeError(f"{path}: levels are not contiguous from 0")
        centers, coeffs = [], []
        for j in range(len(levels)):
            c, v = levels[j]
            v = np.array(v)
            centers.append(np.array(c))
            coeffs.append(v.real if not np.any(v.imag) else v)
        return cls(centers, coeffs)

    def zeros_like(self) -> "CoefficientTree":
        return CoefficientTree(list(self.centers), [np.zeros_like(c) for c in self.coeffs])


# ---------------------------------------------------------------------------
# construction

@lru_cache(maxsize=16)
def _certified_gamma(alpha: float, beta: float) -> float:
    return certify_gamma(JacobiSetting(alpha, beta))["gamma_star"]


def default_gamma(setting: JacobiSetting) -> float:
    """Half the empirically certified sampling constant."""
    return _certified_gamma(setting.alpha, setting.beta) / 2


def _check_args(b, J):
    if b <= 1:
        raise ValueError("b must exceed 1")
    if J < 1:
        raise ValueError("J must be >= 1")


def _cubature_frame(kind, setting, b, J, gamma, lp: LPSystem) -> FramePair:
    _check_args(b, J)
    gamma = default_gamma(setting) if gamma is None else gamma
    N = band_degree(setting, b ** (J + 1))
    rt = np.sqrt(eigenvalues(setting, N))
    levels = []
    for j in range(J + 1):
        rule: CubatureRule = cubature_for_level(setting, j, b, gamma)
        P = ortho_basis(setting, N, rule.net.x) * np.sqrt(rule.weights)[:, None]
        psi = P * lp.psi(j, rt)
        dual = None if kind == "tight" else P * lp.dual(j, rt)
        levels.append(FrameLevel(j, rule.net, rule.weights, psi, dual))
    return FramePair(kind, setting, b, J, gamma, N, levels, split=lp.split)


def build_tight_frame(setting: JacobiSetting, b: float = 2.0, J: int = 6, gamma: float | None = None) -> FramePair:
    return _cubature_frame("tight", setting, b, J, gamma, LPSystem(b, "tight"))


def build_needlet_pair(setting: JacobiSetting, b: float = 2.0, J: int = 6, gamma: float | None = None,
                       psi_system: LPSystem | None = None) -> FramePair:
    lp = LPSystem(b, "dual", 1.0 / 3.0) if psi_system is None else psi_system
    if not lp.has_duals:
        raise ValueError("needlet pair needs an LP system with duals")
    return _cubature_frame("needlet", setting, b, J, gamma, lp)


def _natural_levels(setting, b, J, gamma, N):
    lp = LPSystem(b, "partition")
    rt = np.sqrt(eigenvalues(setting, N))
    levels = []
    for j in range(J + 1):
        net = maximal_net(setting, min(math.pi, gamma * b ** (-j - 2)))
        P = ortho_basis(setting, N, net.x) * np.sqrt(net.cell_measures)[:, None]
        levels.append(FrameLevel(j, net, net.cell_measures.copy(), P * lp.psi(j, rt)))
    return levels


def build_natural_frame(setting: JacobiSetting, b: float = 2.0, J: int = 6, gamma: float | None = None) -> FramePair:
    _check_args(b, J)
    gamma = default_gamma(setting) if gamma is None else gamma
    N = band_degree(setting, b ** (J + 1))
    return FramePair("natural", setting, b, J, gamma, N, _natural_levels(setting, b, J, gamma, N))


def gamma_multiplier(b: float, j: int, u):
    """Gamma_{lambda_j}: Phi(u/b) at j = 0, Gamma_1(b^{1-j} u) with Gamma_1(u) = Phi(u/b^2) - Phi(b u)."""
    u = np.asarray(u, dtype=float)
    if j == 0:
        return plateau(u / b, b)
    v = u * b ** (1 - j)
    return np.clip(plateau(v / b ** 2, b) - plateau(b * v, b), 0.0, 1.0)


def theta_multiplier(b: float, j: int, u):
    """Theta_{lambda_j} = Phi(u / b^{j+2}); identically 1 on the support of Gamma_{lambda_j}."""
    return plateau(np.asarray(u, dtype=float) / b ** (j + 2), b)


@dataclass
class NeumannLevel:
    """Dual-construction operators of one level, as matrices on degrees 0..n."""

    G: np.ndarray
    Th: np.ndarray
    U: np.ndarray
    R: np.ndarray
    T: np.ndarray
    norm_R: float
    terms: int
    eps_emp: float


def neumann_level(setting: JacobiSetting, net: NetLevel, b: float, j: int, epsilon: float) -> NeumannLevel:
    n = band_degree(setting, b ** (j + 3))
    rt = np.sqrt(eigenvalues(setting, n))
    G = gamma_multiplier(b, j, rt)
    Th = theta_multiplier(b, j, rt)
    kappa = net.cell_measures / (1 + epsilon)
    S = ortho_basis(setting, n, net.x)
    ST = S * Th
    U = ST.T @ (ST * kappa[:, None])
    R = G[:, None] * (np.eye(n + 1) - U) * G[None, :]
    R = (R + R.T) / 2
    norm_R = float(np.max(np.abs(np.linalg.eigvalsh(R))))
    # sampling defect of the unscaled cell measures on Sigma_{b^{j+2}}, where Theta = 1
    m = band_degree(setting, b ** (j + 2))
    Sm = S[:, : m + 1]
    eig = np.linalg.eigvalsh(Sm.T @ (Sm * net.cell_measures[:, None]))
    eps_emp = float(max(1 - eig.min(), eig.max() - 1))
    if norm_R >= 1:
        raise NeumannDivergence(f"level {j}: ||R|| = {norm_R:.3f} >= 1; decrease gamma to refine the net")
    T = np.eye(n + 1)
    term = np.eye(n + 1)
    k = 0
    while True:
        k += 1
        term = term @ R
        T += term
        if norm_R ** (k + 1) / (1 - norm_R) < 1e-12 or k > 10000:
            break
    return NeumannLevel(G, Th, U, R, T, norm_R, k, eps_emp)


def build_general_dual(setting: JacobiSetting, b: float = 2.0, J: int = 6, gamma: float | None = None,
                       epsilon: float = 0.2, sigma: float = 4.0, keep_operators: bool = False) -> FramePair:
    _check_args(b, J)
    if not 0 < epsilon < 0.5:
        raise ValueError("epsilon must lie in (0, 1/2)")
    gamma = default_gamma(setting) if gamma is None else gamma
    N = band_degree(setting, b ** (J + 3))
    levels = _natural_levels(setting, b, J, gamma, N)
    diag = {"levels": []}
    ops = []
    for lv in levels:
        nl = neumann_level(setting, lv.net, b, lv.j, epsilon)
        n = len(nl.G) - 1
        S = ortho_basis(setting, n, lv.net.x)
        dual = np.zeros((len(lv), N + 1))
        dual[:, : n + 1] = (np.sqrt(lv.net.cell_measures)[:, None] / (1 + epsilon)) * ((S * nl.G) @ nl.T)
        lv.dual = dual
        diag["levels"].append({"j": lv.j, "norm_R": nl.norm_R, "eps_emp": nl.eps_emp,
                               "R_bound": (epsilon + nl.eps_emp) / (1 + epsilon), "neumann_terms": nl.terms})
        if keep_operators:
            ops.append(nl)
    pair = FramePair("general", setting, b, J, gamma, N, levels, epsilon=epsilon, sigma=sigma, diagnostics=diag)
    if keep_operators:
        pair.operators = ops
    return pair


def build_frame(kind: str, setting: JacobiSetting, b: float = 2.0, J: int = 6, gamma: float | None = None,
                **kw) -> FramePair:
    builders = {"tight": build_tight_frame, "needlet": build_needlet_pair, "natural": build_natural_frame,
                "general": build_general_dual}
    if kind not in builders:
        raise ValueError(f"unknown frame kind {kind!r}")
    return builders[kind](setting, b=b, J=J, gamma=gamma, **kw)


# ---------------------------------------------------------------------------
# analysis / synthesis

def _as_coeffs(pair: FramePair, f) -> np.ndarray:
    if isinstance(f, SpectralVector):
        return f.padded(pair.degree)
    if callable(f):
        return project(pair.setting, f, pair.degree).coeffs
    raise TypeError("f must be a SpectralVector or a callable")


def analyze(pair: FramePair, f, swap: bool = False) -> CoefficientTree:
    """Coefficients <f, psi~_{j xi}> (or <f, psi_{j xi}> with swap=True)."""
    c = _as_coeffs(pair, f)
    mats = [lv.psi if swap else lv.analysis for lv in pair.levels]
    return CoefficientTree([lv.net.centers for lv in pair.levels], [M @ c for M in mats])


def synthesize(pair: FramePair, tree: CoefficientTree, swap: bool = False) -> SpectralVector:
    """sum a_{j xi} psi_{j xi} (or psi~ with swap=True)."""
    if len(tree.coeffs) != len(pair.levels):
        raise FrameShapeError(f"tree has {len(tree.coeffs)} levels, frame has {len(pair.levels)}")
    out = None
    for lv, a in zip(pair.levels, tree.coeffs):
        if np.shape(a) != (len(lv),):
            raise FrameShapeError(f"level {lv.j}: tree has {np.size(a)} coefficients, frame has {len(lv)}")
        M = lv.analysis if swap else lv.psi
        term = a @ M
        out = term if out is None else out + term
    return SpectralVector(pair.setting, out)


def frame_operator(pair: FramePair, n: int, dual: bool = True) -> np.ndarray:
    S = np.zeros((n + 1, n + 1))
    for lv in pair.levels:
        M = (lv.analysis if dual else lv.psi)[:, : n + 1]
        S += M.T @ M
    return S


def frame_bounds(pair: FramePair, J_test: int | None = None, dual: bool = True) -> tuple:
    """Extreme eigenvalues of the frame operator restricted to Sigma_{b^J_test}."""
    J_test = pair.J - 1 if J_test is None else J_test
    n = band_degree(pair.setting, pair.b ** J_test)
    ev = np.linalg.eigvalsh(frame_operator(pair, n, dual))
    return float(ev[0]), float(ev[-1])


def reconstruction_residual(pair: FramePair, f: SpectralVector, swap: bool = False) -> float:
    g = synthesize(pair, analyze(pair, f, swap), swap)
    return (g - f).norm2() / f.norm2()


def kernel_reproduction_residual(pair: FramePair, j: int, n_pairs: int = 100, seed: int = 0) -> float:
    """max |sum_xi psi(y) psi~(x) - Psi_j(x, y)| at random (x, y)."""
    rng = np.random.default_rng(seed)
    lv = pair.levels[j]
    xs, ys = rng.uniform(-1, 1, n_pairs), rng.uniform(-1, 1, n_pairs)
    Px, Py = ortho_basis(pair.setting, pair.degree, xs), ortho_basis(pair.setting, pair.degree, ys)
    left = np.sum((Px @ lv.analysis.T) * (Py @ lv.psi.T), axis=1)
    rt = np.sqrt(eigenvalues(pair.setting, pair.degree))
    if pair.kind == "natural":
        mult = LPSystem(pair.b, "partition").psi(j, rt) ** 2
    elif pair.kind == "general":
        mult = LPSystem(pair.b, "partition").psi(j, rt)
    else:
        lp = LPSystem(pair.b, "tight" if pair.kind == "tight" else "dual", pair.split or 0.5)
        mult = lp.block(j, rt)
    right = np.sum(Px * mult * Py, axis=1)
    return float(np.max(np.abs(left - right)))


def neumann_checks(pair: FramePair, draws: int = 50, seed: int = 0) -> list:
    """Per level: ||R||, sandwich ||f|| <= ||T f|| <= ||f||/(1-||R||), and the reproducing identity."""
    if pair.kind != "general":
        raise ValueError("Neumann checks apply to general dual pairs")
    rng = np.random.default_rng(seed)
    rows = []
    for lv in pair.levels:
        nl = neumann_level(pair.setting, lv.net, pair.b, lv.j, pair.epsilon)
        n = len(nl.G) - 1
        worst_lo, worst_hi = math.inf, 0.0
        for _ in range(draws):
            f = rng.standard_normal(n + 1)
            r = np.linalg.norm(nl.T @ f) / np.linalg.norm(f)
            worst_lo, worst_hi = min(worst_lo, r), max(worst_hi, r * (1 - nl.norm_R))
        S = ortho_basis(pair.setting, n, lv.net.x)
        kappa = lv.net.cell_measures / (1 + pair.epsilon)
        rep = 0.0
        for _ in range(5):
            f = rng.standard_normal(n + 1) * (nl.G == 1.0)
            g = ((S @ f) * kappa) @ ((S * nl.G) @ nl.T)
            rep = max(rep, np.linalg.norm(g - f) / np.linalg.norm(f))
        rows.append({"j": lv.j, "norm_R": nl.norm_R, "eps_emp": nl.eps_emp,
                     "R_bound": (pair.epsilon + nl.eps_emp) / (1 + pair.epsilon),
                     "sandwich_lower": worst_lo, "sandwich_upper": worst_hi,
                     "sandwich_ok": bool(worst_lo >= 1 - 1e-12 and worst_hi <= 1 + 1e-12),
                     "reproduction_residual": float(rep), "neumann_terms": nl.terms})
    return rows


# ---------------------------------------------------------------------------
# localization and norms of elements

def _sample_indices(n: int, k: int) -> np.ndarray:
    return np.unique(np.round(np.linspace(0, n - 1, min(k, n))).astype(int))


def frame_localization_check(pair: FramePair, sigma_list=(2, 4, 6), dual: bool = False, n_centers: int = 9,
                             n_grid: int = 4097) -> dict:
    """max |psi_{j xi}(x)| |B(xi, b^-j)|^{1/2} (1 + b^j rho(x, xi))^sigma per (j, sigma)."""
    theta = np.linspace(0, math.pi, n_grid)
    Pg = ortho_basis(pair.setting, pair.degree, np.cos(theta))
    if dual and pair.kind == "general":
        sigma_list = [s for s in sigma_list if s <= pair.sigma]
    table = {float(s): [] for s in sigma_list}
    for lv in pair.levels:
        idx = _sample_indices(len(lv), n_centers)
        M = (lv.analysis if dual else lv.psi)[idx]
        vals = np.abs(M @ Pg.T)
        xi = lv.net.centers[idx]
        scale = pair.b ** lv.j
        B = ball_measure_theta(pair.setting, xi, pair.b ** -lv.j)
        rho = np.abs(theta[None, :] - xi[:, None])
        base = vals * np.sqrt(B)[:, None]
        for s in sigma_list:
            table[float(s)].append(float(np.max(base * (1 + scale * rho) ** s)))
    spread = {s: max(v) / min(v) for s, v in table.items()}
    return {"constants": table, "spread": spread,
            "finite": bool(all(np.isfinite(v).all() for v in table.values()))}


def element_norm_scaling(pair: FramePair, p_list=(1, 2, math.inf), n_centers: int = 9, dual: bool = False) -> dict:
    """||psi_{j xi}||_p |B(xi, b^-j)|^{1/2 - 1/p} over levels and sampled centers."""
    rule = oracle_rule(pair.setting, 4 * pair.degree)
    Pq = ortho_basis(pair.setting, pair.degree, rule.nodes)
    theta = np.linspace(0, math.pi, 4097)
    Pg = ortho_basis(pair.setting, pair.degree, np.cos(theta))
    out = {}
    for p in p_list:
        vals = []
        for lv in pair.levels:
            idx = _sample_indices(len(lv), n_centers)
            M = (lv.analysis if dual else lv.psi)[idx]
            B = ball_measure_theta(pair.setting, lv.net.centers[idx], pair.b ** -lv.j)
            if math.isinf(p):
                nrm = np.max(np.abs(M @ Pg.T), axis=1)
                vals.extend(nrm * B ** 0.5)
            else:
                nrm = (np.abs(M @ Pq.T) ** p @ rule.weights) ** (1 / p)
                vals.extend(nrm * B ** (0.5 - 1 / p))
        vals = np.array(vals)
        out[p] = {"min": float(vals.min()), "max": float(vals.max())}
    return out


def l1_stability(pair: FramePair, n_x: int = 513) -> float:
    """max over x and j of sum_xi |psi~_{j xi}(x)| ||psi_{j xi}||_1."""
    rule = oracle_rule(pair.setting, 4 * pair.degree)
    Pq = ortho_basis(pair.setting, pair.degree, rule.nodes)
    Px = ortho_basis(pair.setting, pair.degree, np.cos(np.linspace(0, math.pi, n_x)))
    worst = 0.0
    for lv in pair.levels:
        l1 = np.abs(lv.psi @ Pq.T) @ rule.weights
        worst = max(worst, float(np.max(np.abs(Px @ lv.analysis.T) @ l1)))
    return worst


# ---------------------------------------------------------------------------
# persistence

def _fmt(v) -> str:
    return format(float(v), ".17g")


def save_pair(pair: FramePair, directory, certification: dict | None = None) -> str:
    """Write level CSVs, an element-coefficient CSV and manifest.json; returns the content hash."""
    os.makedirs(directory, exist_ok=True)
    files = []
    for lv in pair.levels:
        name = f"level_{lv.j}.csv"
        CubatureRule(lv.net, lv.weights, -1).to_csv(os.path.join(directory, name), {"level": lv.j})
        files.append(name)
    elem = "elements.csv"
    with open(os.path.join(directory, elem), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["level", "center", "degree", "coefficient", "dual_coefficient"])
        for lv in pair.levels:
            for i in range(len(lv)):
                nz = np.flatnonzero((lv.psi[i] != 0) | (lv.analysis[i] != 0))
                for k in nz:
                    dual = "" if lv.dual is None else _fmt(lv.dual[i, k])
                    w.writerow([lv.j, i, int(k), _fmt(lv.psi[i, k]), dual])
    files.append(elem)
    digest = hashlib.sha256()
    for name in files:
        with open(os.path.join(directory, name), "rb") as fh:
            digest.update(fh.read())
    manifest = {
        "kind": pair.kind, "alpha": pair.setting.alpha, "beta": pair.setting.beta, "b": pair.b, "J": pair.J,
        "gamma": pair.gamma, "epsilon": pair.epsilon, "sigma": pair.sigma, "split": pair.split,
        "degree": pair.degree, "level_sizes": pair.level_sizes(), "files": files,
        "content_hash": digest.hexdigest(), "diagnostics": pair.diagnostics,
        "certification": certification or {},
    }
    with open(os.path.join(directory, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest["content_hash"]


def load_pair(directory) -> FramePair:
    path = os.path.join(directory, "manifest.json")
    if not os.path.isfile(path):
        raise FileNotFoundError(f"no frame manifest in {directory}")
    with open(path) as fh:
        man = json.load(fh)
    setting = JacobiSetting(man["alpha"], man["beta"])
    N = man["degree"]
    levels = []
    for j in range(man["J"] + 1):
        rule = CubatureRule.from_csv(os.path.join(directory, f"level_{j}.csv"), setting)
        n = len(rule.net)
        has_dual = man["kind"] != "tight" and man["kind"] != "natural"
        levels.append(FrameLevel(j, rule.net, rule.weights, np.zeros((n, N + 1)),
                                 np.zeros((n, N + 1)) if has_dual else None))
    with open(os.path.join(directory, "elements.csv"), newline="") as fh:
        for r in csv.DictReader(fh):
            lv = levels[int(r["level"])]
            i, k = int(r["center"]), int(r["degree"])
            lv.psi[i, k] = float(r["coefficient"])
            if lv.dual is not None:
                lv.dual[i, k] = float(r["dual_coefficient"])
    return FramePair(man["kind"], setting, man["b"], man["J"], man["gamma"], N, levels,
                     epsilon=man["epsilon"], sigma=man["sigma"], split=man["split"],
                     diagnostics=man.get("diagnostics", {}))
