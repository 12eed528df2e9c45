#!/usr/bin/env python3
"""Whitney-style flatness audit: boundary integrals against simplex volume.

A bounded form is flat when its integral around every small (k+1)-simplex
boundary is controlled by the simplex volume.  Smooth forms satisfy this
with constant |dw|; a jump transversal to the integration direction does
not, and the failure shows up as ratio blow-up at small scales.
"""

import numpy as np

from cubeforms import Cube, GridForm, Polynomial, PolyForm, flatness_check, sample

square = Cube.unit(2)
res = 256
xs = (np.arange(res) + 0.5) / res
jump = np.tile(np.sign(xs - 0.5)[:, None], (1, res))


def summarize(name, report):
    print(f"\n{name}")
    print(f"  coefficient bound N  = {report.coefficient_bound:.4g}")
    print(f"  max ratio (N')       = {report.max_ratio:.4g}")
    print("  scale band                     median        max")
    for d in report.scale_deciles:
        if d["count"]:
            print(f"  [{d['scale_lo']:.3f}, {d['scale_hi']:.3f}]  "
                  f"{d['median']:12.4g} {d['max']:12.4g}")


# sampled smooth form: ratios hug |dw| = 1 at every scale
smooth = sample(PolyForm(2, 1, {(2,): Polynomial.variable(2, 1)}), square, res)
summarize("x dy (smooth, flat with N' = |dw| = 1)",
          flatness_check(smooth, 800, seed=20260808, scale_range=(0.01, 0.3)))

# the same jump data, wedged two ways:
#   against dy the discontinuity is transversal -> not flat, 1/scale blow-up
#   against dx it is the derivative of a Lipschitz function -> flat, ratios ~ 0
summarize("sign(x - 1/2) dy (jump transversal: NOT flat)",
          flatness_check(GridForm(square, 1, res, {(2,): jump}), 800,
                         seed=20260808, scale_range=(0.01, 0.3)))

summarize("sign(x - 1/2) dx (exact differential of |x - 1/2|: flat)",
          flatness_check(GridForm(square, 1, res, {(1,): jump}), 800,
                         seed=20260808, scale_range=(0.01, 0.3)))
