"""Heat kernel diagnostics and Besov norm comparison over a small corpus.

Run: python demos/heat_kernel_and_besov.py
"""
import math

import numpy as np

from jacobi_needlets.besov import DEFAULT_TRIPLES, equivalence_sweep, make_corpus
from jacobi_needlets.frames import build_tight_frame
from jacobi_needlets.setting import JacobiSetting
from jacobi_needlets.spectral import gaussian_bound_fit, heat_kernel, markov_defect

setting = JacobiSetting(0.5, 0.5)

xs = np.linspace(-1, 1, 20)
for t in (0.01, 0.1, 1.0):
    print(f"t={t}: max |int p_t(x, .) - 1| = {markov_defect(setting, t, xs).max():.1e}, "
          f"p_t(0, 0) = {heat_kernel(setting, t, 0.0, 0.0):.4f}")

fit = gaussian_bound_fit(setting, [0.1, 0.25, 0.5, 1.0], np.cos(np.linspace(0, math.pi, 40)))
print(f"Gaussian envelope: lower {fit.c1_prime:.3f} exp(-{fit.c1:.3f} rho^2/t), "
      f"upper {fit.c2_prime:.3f} exp(-{fit.c2:.3f} rho^2/t), Holder estimate {fit.holder_exponent_est:.2f}")

pair = build_tight_frame(setting, J=8)
out = equivalence_sweep(setting, make_corpus(setting), DEFAULT_TRIPLES, pair)
print("Besov norm equivalence constants (max/min of pairwise ratios over 30 functions):")
for label, summ in out["summary"].items():
    print(f"  {label:<22} {summ['constant']:.2f}")
