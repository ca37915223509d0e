"""Command-line front end.

    jacobi-needlets certify
    jacobi-needlets frame build|analyze|synth|verify
    jacobi-needlets besov

Exit codes: 0 pass, 1 check failure, 2 config error, 3 missing artifact,
4 numerical divergence.
"""
from __future__ import annotations

import argparse
import copy
import csv
import json
import math
import os
import shutil
import sys
import tempfile

import numpy as np

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_MISSING, EXIT_DIVERGENCE = 0, 1, 2, 3, 4

DEFAULTS = {
    "setting": {"alpha": 0.0, "beta": 0.0},
    "frame": {"kind": "tight", "b": 2.0, "J": 6, "gamma": None, "epsilon": 0.2, "sigma": 4.0},
    "verification": {
        "draws": 50,
        "reconstruction_tol": 1e-9,
        "parseval_tol": 1e-8,
        "markov_tol": 1e-8,
        "gaussian_grid": 50,
        "gaussian_times": [0.1, 0.15848931924611134, 0.25118864315095796, 0.3981071705534973,
                           0.6309573444801932, 1.0],
        "poincare_pairs": 100,
        "sampling_draws": 200,
    },
    "corpus": {"doubled": False},
    "besov": {"triples": [[0.5, 2, 2], [1, 2, 2], [0.5, "inf", "inf"], [1, 1, 1], [0.7, 2, "inf"], [1.5, 2, 2]]},
    "output": "out",
    "seed": 0,
}


class ConfigError(ValueError):
    pass


class MissingArtifact(FileNotFoundError):
    pass


def _num(v):
    if isinstance(v, str) and v.lower() in ("inf", "infinity"):
        return math.inf
    return float(v)


def _merge(base: dict, over: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if k not in base:
            raise ConfigError(f"unknown config key {path + k!r}")
        if isinstance(base[k], dict):
            if not isinstance(v, dict):
                raise ConfigError(f"config key {path + k!r} must be a table")
            out[k] = _merge(base[k], v, path + k + ".")
        else:
            out[k] = v
    return out


def load_config(path: str | None, args: argparse.Namespace | None = None) -> dict:
    """Defaults, then the JSON config file, then command-line flags; validated."""
    cfg = copy.deepcopy(DEFAULTS)
    if path:
        try:
            with open(path) as fh:
                cfg = _merge(cfg, json.load(fh))
        except FileNotFoundError as e:
            raise ConfigError(f"config file not found: {path}") from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"config file {path} is not valid JSON: {e}") from e
    if args is not None:
        flags = {("setting", "alpha"): "alpha", ("setting", "beta"): "beta", ("frame", "J"): "levels",
                 ("frame", "b"): "b", ("frame", "kind"): "kind", ("frame", "gamma"): "gamma",
                 ("frame", "epsilon"): "epsilon"}
        for (sec, key), attr in flags.items():
            v = getattr(args, attr, None)
            if v is not None:
                cfg[sec][key] = v
        if getattr(args, "seed", None) is not None:
            cfg["seed"] = args.seed
        if getattr(args, "out", None) is not None:
            cfg["output"] = args.out
    validate(cfg)
    return cfg


def validate(cfg: dict) -> None:
    from .besov import BesovDomainError, BesovParams
    from .setting import JacobiSetting

    try:
        JacobiSetting(float(cfg["setting"]["alpha"]), float(cfg["setting"]["beta"]))
    except (TypeError, ValueError) as e:
        raise ConfigError(f"setting: {e}") from e
    fr = cfg["frame"]
    if fr["kind"] not in ("tight", "needlet", "general", "natural"):
        raise ConfigError(f"frame.kind must be tight|needlet|general|natural, got {fr['kind']!r}")
    if not float(fr["b"]) > 1:
        raise ConfigError("frame.b must exceed 1")
    if int(fr["J"]) != fr["J"] or int(fr["J"]) < 1:
        raise ConfigError("frame.J must be an integer >= 1")
    if fr["gamma"] is not None and not 0 < float(fr["gamma"]) <= 1:
        raise ConfigError("frame.gamma must lie in (0, 1]")
    if not 0 < float(fr["epsilon"]) < 0.5:
        raise ConfigError("frame.epsilon must lie in (0, 1/2)")
    for k, v in cfg["verification"].items():
        if k.endswith("_tol") and not float(v) > 0:
            raise ConfigError(f"verification.{k} must be positive")
    if int(cfg["seed"]) != cfg["seed"]:
        raise ConfigError("seed must be an integer")
    for t in cfg["besov"]["triples"]:
        try:
            BesovParams(*(_num(v) for v in t))
        except (BesovDomainError, TypeError) as e:
            raise ConfigError(f"besov triple {t}: {e}") from e


def _setting(cfg):
    from .setting import JacobiSetting
    return JacobiSetting(float(cfg["setting"]["alpha"]), float(cfg["setting"]["beta"]))


def _dump(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(_clean(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


# ---------------------------------------------------------------------------
# certify

def certify(cfg: dict) -> tuple:
    from .nets import certify_gamma
    from .setting import doubling_certify, poincare_sweep, verify_poincare
    from .spectral import PositivityViolation, gaussian_bound_fit, markov_defect

    s = _setting(cfg)
    ver = cfg["verification"]
    seed = int(cfg["seed"])
    checks = {}
    report = {"setting": s.to_dict(), "seed": seed}

    d_est, beta_est = doubling_certify(s)
    report["doubling"] = {"d_est": d_est, "beta_est": beta_est}
    checks["doubling"] = bool(math.isfinite(d_est) and d_est > 0 and beta_est > 0)

    xs = np.cos(np.linspace(0, math.pi, 20))
    markov = max(float(markov_defect(s, t, xs).max()) for t in (0.01, 0.1, 1.0))
    report["markov_max_defect"] = markov
    checks["markov"] = markov < float(ver["markov_tol"])

    n = int(ver["gaussian_grid"])
    times = [float(t) for t in ver["gaussian_times"]]
    try:
        fit = gaussian_bound_fit(s, times, np.cos(np.linspace(0, math.pi, n)))
        fine = gaussian_bound_fit(s, times, np.cos(np.linspace(0, math.pi, 2 * n - 1)))
        consts = ("c1_prime", "c1", "c2_prime", "c2")
        stab = {c: getattr(fine, c) / getattr(fit, c) for c in consts}
        report["gaussian"] = {c: getattr(fit, c) for c in consts}
        report["gaussian"].update(holder_exponent_est=fit.holder_exponent_est, refinement_ratio=stab)
        checks["gaussian"] = bool(all(0 < getattr(fit, c) < math.inf for c in consts)
                                  and all(0.5 <= r <= 2 for r in stab.values()))
    except PositivityViolation as e:
        report["gaussian"] = {"error": str(e)}
        checks["gaussian"] = False

    cert = certify_gamma(s, draws=int(ver["sampling_draws"]), seed=seed)
    report["gamma_star"] = cert["gamma_star"]
    report["gamma_table"] = cert["table"]
    checks["gamma"] = True

    sweep = poincare_sweep(s, int(ver["poincare_pairs"]), seed)
    report["poincare"] = sweep
    checks["poincare"] = sweep["finite"]
    if s.alpha == 0 and s.beta == 0:
        c = verify_poincare(s, lambda x: x, lambda x: np.ones_like(x), (-1.0, 1.0))
        report["poincare"]["closed_form_error"] = abs(c - 1 / (2 * math.pi ** 2))
        checks["poincare"] = checks["poincare"] and report["poincare"]["closed_form_error"] < 1e-10

    report["checks"] = checks
    report["passed"] = all(checks.values())
    return report, (EXIT_OK if report["passed"] else EXIT_CHECK)


# ---------------------------------------------------------------------------
# frame commands

def _frame_dir(cfg, args) -> str:
    return getattr(args, "frame", None) or os.path.join(cfg["output"], "frame")


def _load_frame(path):
    from .frames import load_pair
    if not os.path.isfile(os.path.join(path, "manifest.json")):
        raise MissingArtifact(f"no frame directory at {path}; run 'frame build' first")
    return load_pair(path)


def frame_build(cfg, args) -> int:
    from .frames import build_frame, save_pair

    s = _setting(cfg)
    fr = cfg["frame"]
    kw = {"epsilon": float(fr["epsilon"]), "sigma": float(fr["sigma"])} if fr["kind"] == "general" else {}
    gamma = None if fr["gamma"] is None else float(fr["gamma"])
    pair = build_frame(fr["kind"], s, b=float(fr["b"]), J=int(fr["J"]), gamma=gamma, **kw)
    target = _frame_dir(cfg, args)
    parent = os.path.dirname(os.path.abspath(target))
    os.makedirs(parent, exist_ok=True)
    tmp = tempfile.mkdtemp(prefix="frame-", dir=parent)
    try:
        digest = save_pair(pair, tmp, {"seed": int(cfg["seed"])})
        if os.path.isdir(target) and os.listdir(target):
            try:
                with open(os.path.join(target, "manifest.json")) as fh:
                    old = json.load(fh).get("content_hash")
            except (OSError, ValueError):
                old = None
            if old != digest:
                raise ConfigError(f"{target} holds a different frame; choose a new --out")
            print(f"frame unchanged at {target} ({digest[:12]})")
            return EXIT_OK
        if os.path.isdir(target):
            os.rmdir(target)
        shutil.move(tmp, target)
        tmp = None
    finally:
        if tmp is not None:
            shutil.rmtree(tmp, ignore_errors=True)
    print(f"frame {fr['kind']} J={fr['J']} written to {target} ({digest[:12]})")
    return EXIT_OK


def _function_from_args(pair, cfg, args):
    """SpectralVector from --coeffs CSV (degree,coefficient) or --function corpus id."""
    from .besov import make_corpus
    from .spectral import SpectralVector

    if getattr(args, "coeffs", None):
        if not os.path.isfile(args.coeffs):
            raise MissingArtifact(f"coefficient file not found: {args.coeffs}")
        return read_coeffs(pair.setting, args.coeffs)
    if getattr(args, "function", None):
        corpus = dict(make_corpus(pair.setting, band=pair.spectral_band(), seed=int(cfg["seed"])))
        if args.function not in corpus:
            raise ConfigError(f"unknown corpus function {args.function!r}; known: {', '.join(sorted(corpus))}")
        return corpus[args.function]
    return None


def write_coeffs(f, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["degree", "coefficient"])
        for k, c in enumerate(f.coeffs):
            w.writerow([k, format(float(np.real(c)), ".17g")])


def read_coeffs(setting, path):
    from .spectral import SpectralVector
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    n = max(int(r["degree"]) for r in rows)
    c = np.zeros(n + 1)
    for r in rows:
        c[int(r["degree"])] = float(r["coefficient"])
    return SpectralVector(setting, c)


def frame_analyze(cfg, args) -> int:
    from .frames import analyze

    pair = _load_frame(_frame_dir(cfg, args))
    f = _function_from_args(pair, cfg, args)
    if f is None:
        raise ConfigError("analyze needs --function ID or --coeffs CSV")
    out = args.tree or os.path.join(cfg["output"], "coefficients.csv")
    os.makedirs(os.path.dirname(os.path.abspath(out)), exist_ok=True)
    analyze(pair, f).to_csv(out)
    print(f"coefficients written to {out}")
    return EXIT_OK


def frame_synth(cfg, args) -> int:
    from .frames import CoefficientTree, FrameShapeError, synthesize

    pair = _load_frame(_frame_dir(cfg, args))
    tree_path = args.tree or os.path.join(cfg["output"], "coefficients.csv")
    if not os.path.isfile(tree_path):
        raise MissingArtifact(f"coefficient tree not found: {tree_path}")
    try:
        tree = CoefficientTree.from_csv(tree_path)
        g = synthesize(pair, tree)
    except FrameShapeError as e:
        raise MissingArtifact(f"coefficient tree does not match the frame: {e}") from e
    out_dir = cfg["output"]
    os.makedirs(out_dir, exist_ok=True)
    write_coeffs(g, os.path.join(out_dir, "reconstruction.csv"))
    report = {"degree": g.degree, "norm": g.norm2()}
    f = _function_from_args(pair, cfg, args)
    code = EXIT_OK
    if f is not None:
        report["residual"] = (g - f).norm2() / f.norm2()
        report["passed"] = report["residual"] < float(cfg["verification"]["reconstruction_tol"])
        code = EXIT_OK if report["passed"] else EXIT_CHECK
    _dump(report, os.path.join(out_dir, "synth.json"))
    print(json.dumps(_clean(report)))
    return code


def frame_verify(cfg, args) -> int:
    from . import frames
    from .spectral import random_band_limited

    pair = _load_frame(_frame_dir(cfg, args))
    ver = cfg["verification"]
    rng = np.random.default_rng(int(cfg["seed"]))
    report = {"kind": pair.kind, "J": pair.J, "b": pair.b, "gamma": pair.gamma}
    checks = {}
    dual = pair.kind != "natural"
    J_test = pair.J - 1
    A, B = frames.frame_bounds(pair, J_test, dual=dual)
    report["frame_bounds"] = {"A": A, "B": B, "condition": B / A, "J_test": J_test}
    if pair.kind == "tight":
        checks["frame_bounds"] = abs(A - 1) <= 1e-9 and abs(B - 1) <= 1e-9
    elif pair.kind == "natural":
        checks["frame_bounds"] = A >= 0.25 and B <= 2
    else:
        checks["frame_bounds"] = 0 < A <= B < math.inf
    if pair.kind != "natural":
        res = []
        for _ in range(int(ver["draws"])):
            f = random_band_limited(pair.setting, pair.spectral_band(), rng)
            res.append(frames.reconstruction_residual(pair, f))
        report["reconstruction_residual_max"] = max(res)
        checks["reconstruction"] = max(res) < float(ver["reconstruction_tol"])
        rep = [frames.kernel_reproduction_residual(pair, j) for j in range(pair.J + 1)]
        report["kernel_reproduction_residual"] = rep
        checks["kernel_reproduction"] = max(rep) < 1e-9
    loc = frames.frame_localization_check(pair, (2, 4, 6))
    report["localization"] = loc
    checks["localization_finite"] = loc["finite"]
    if pair.kind == "general":
        report["neumann"] = frames.neumann_checks(pair, int(ver["draws"]), int(cfg["seed"]))
        checks["neumann"] = all(r["norm_R"] < 1 and r["sandwich_ok"] for r in report["neumann"])
        dl = frames.frame_localization_check(pair, (2, 4), dual=True)
        report["dual_localization"] = dl
        checks["dual_localization_finite"] = dl["finite"]
    report["checks"] = checks
    report["passed"] = all(checks.values())
    os.makedirs(cfg["output"], exist_ok=True)
    _dump(report, os.path.join(cfg["output"], "frame_report.json"))
    print(f"frame verify: {'pass' if report['passed'] else 'FAIL'} {json.dumps(_clean(checks))}")
    return EXIT_OK if report["passed"] else EXIT_CHECK


# ---------------------------------------------------------------------------
# besov

def besov(cfg, args) -> int:
    from .besov import BesovParams, equivalence_sweep, make_corpus, write_reports

    pair = _load_frame(_frame_dir(cfg, args))
    triples = [BesovParams(*(_num(v) for v in t)) for t in cfg["besov"]["triples"]]
    corpus = make_corpus(pair.setting, doubled=bool(cfg["corpus"]["doubled"]),
                         band=pair.spectral_band(), seed=int(cfg["seed"]))
    out = equivalence_sweep(pair.setting, corpus, triples, pair)
    os.makedirs(cfg["output"], exist_ok=True)
    summary = {"frame_kind": pair.kind, "corpus_size": len(corpus), "triples": out["summary"]}
    write_reports(out["reports"], os.path.join(cfg["output"], "besov_norms.csv"))
    _dump(summary, os.path.join(cfg["output"], "besov_summary.json"))
    ok = all(v["all_finite"] for v in out["summary"].values())
    print(f"besov: {len(out['reports'])} rows, all ratios finite: {ok}")
    return EXIT_OK if ok else EXIT_CHECK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int)
    common.add_argument("--alpha", type=float)
    common.add_argument("--beta", type=float)
    common.add_argument("--levels", type=int, help="number of frame levels J")
    common.add_argument("--b", type=float, help="dilation base b > 1")
    common.add_argument("--kind", choices=["tight", "needlet", "general", "natural"])
    common.add_argument("--gamma", type=float, help="net spacing constant (default: certified gamma*/2)")
    common.add_argument("--epsilon", type=float)

    p = argparse.ArgumentParser(prog="jacobi-needlets", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("certify", parents=[common], help="measure the structural constants of the setting")
    fp = sub.add_parser("frame", help="build, apply and verify frames")
    fsub = fp.add_subparsers(dest="action", required=True)
    for name in ("build", "analyze", "synth", "verify"):
        a = fsub.add_parser(name, parents=[common])
        a.add_argument("--frame", help="frame directory (default OUT/frame)")
        if name in ("analyze", "synth"):
            a.add_argument("--function", help="corpus function id")
            a.add_argument("--coeffs", help="CSV of Jacobi coefficients (degree,coefficient)")
            a.add_argument("--tree", help="coefficient-tree CSV (default OUT/coefficients.csv)")
    bp = sub.add_parser("besov", parents=[common], help="Besov norm equivalence over the corpus")
    bp.add_argument("--frame", help="frame directory (default OUT/frame)")
    return p


def main(argv=None) -> int:
    from .frames import NeumannDivergence

    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args)
        if args.command == "certify":
            report, code = certify(cfg)
            os.makedirs(cfg["output"], exist_ok=True)
            _dump(report, os.path.join(cfg["output"], "certify.json"))
            print(f"certify: {'pass' if report['passed'] else 'FAIL'} {json.dumps(_clean(report['checks']))}")
            return code
        if args.command == "frame":
            return {"build": frame_build, "analyze": frame_analyze, "synth": frame_synth,
                    "verify": frame_verify}[args.action](cfg, args)
        return besov(cfg, args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except MissingArtifact as e:
        print(f"missing artifact: {e}", file=sys.stderr)
        return EXIT_MISSING
    except NeumannDivergence as e:
        print(f"divergence: {e}", file=sys.stderr)
        return EXIT_DIVERGENCE


if __name__ == "__main__":
    sys.exit(main())
