"""Print a handful of headline numbers from each module (runs in a few seconds)."""
import math

import numpy as np

from shavlab.exact_core import X0, X1, f_word_to_map
from shavlab.holder_analysis import SampledDiffeo
from shavlab.schwarzian_stats import C_g, sine_family
from shavlab.smooth_embed import build_generator, theta_f, verify_condition_b
from shavlab.special_functions import RATIO_LIMIT, T_ratio, v1
from shavlab.stitching_functional import stitch


def main():
    f = build_generator()
    print(f"generator: fixed point z = {f.z:.10f}, C = log f'(z) = {f.C:.10f}")
    h = X0 @ X1
    t = np.linspace(0, 1, 201)
    err = np.max(np.abs(theta_f(h, f)(t) - theta_f(X0, f)(theta_f(X1, f)(t))))
    print(f"theta_f(X0 X1) vs theta_f(X0) theta_f(X1): sup error {err:.2e}")
    w = verify_condition_b(f_word_to_map(("X0", "X1")), f, "X0X1")
    print(f"condition (b) witness at t = {w.t_star:.6f}: |log H'| = {w.value:.6f} >= {f.C:.6f}")
    print(f"v1(0) = {float(v1(0.0)):.15f}  (pi = {math.pi:.15f})")
    print(f"T_20 / (2^21 21!) = {T_ratio(20):.10f}, limit 2 e^-gamma / pi = {RATIO_LIMIT:.10f}")
    print(f"C_g for the sine family a = 1/4: {C_g(sine_family(0.25)):.6f}")
    I = SampledDiffeo.identity(512)
    E = SampledDiffeo.from_functions(lambda s: np.expm1(s) / math.expm1(1), lambda s: np.exp(s) / math.expm1(1), 512)
    q = stitch([0.5], [I, E])
    print(f"stitch(y = 1/2; id, exp): x1 = {q.x[1]:.15f}, (e - 1)/e = {math.expm1(1) / math.e:.15f}")


if __name__ == "__main__":
    main()
