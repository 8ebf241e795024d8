"""Widths of space-form balls and the comparison map between them.

Run with ``python demos/widths_and_comparison.py``.
"""

import math

import numpy as np

from spaceform_widths.comparison import comparison_case, solve_f, verify_contraction
from spaceform_widths.spaceform import SpaceFormBall, WarpedProfile, ball_area, beta, max_radius
from spaceform_widths.sweepout import arc_family, equatorial_family, tighten_1sweepout


def main():
    print("equatorial sweepouts: the largest slice is the central k-ball")
    for K in (-1.0, 0.0, 1.0):
        ball = SpaceFormBall(3, 2, min(1.0, max_radius(K)), K)
        fam = equatorial_family(ball)
        target = ball_area(2, WarpedProfile.space_form(K, ball.R))
        print(f"  K={K:+.0f}  max slice {fam.max_area:.10f}  central ball {target:.10f}")

    print("\nhemisphere: the width equals half the unit sphere area")
    for k in (1, 2, 3):
        area = ball_area(k, WarpedProfile.space_form(1.0, math.pi / 2))
        print(f"  k={k}  {area:.12f}  beta_k/2 = {beta(k) / 2:.12f}")

    print("\ncomparison maps f, contracting from curvature K onto K1")
    for case in (1, 2, 3):
        c = comparison_case(case, 2)
        fmap = solve_f(2, c.K, c.K1, c.R0)
        rep = verify_contraction(*c.profiles(), fmap)
        print(f"  case {case}: K={c.K:+g} -> K1={c.K1:+g}, R0={c.R0:.4f}, "
              f"f(R0)={fmap.R1:.6f}, min f'={np.min(fmap.derivative(fmap.r)):.6f}, "
              f"passed={rep.passed}")

    print("\ntightening polyline sweepouts of a geodesic disk of radius 1")
    for K in (-1.0, 0.0, 0.5):
        res = tighten_1sweepout(SpaceFormBall(2, 1, 1.0, K), arc_family(K, 1.0), steps=300)
        print(f"  K={K:+.1f}  longest curve {res.trace[0]:.4f} -> {res.trace[-1]:.4f}")


if __name__ == "__main__":
    main()
