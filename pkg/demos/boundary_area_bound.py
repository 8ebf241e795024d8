"""Boundary densities and the free-boundary area bound on discrete varifolds.

Run with ``python demos/boundary_area_bound.py``.
"""

import math

import numpy as np

from spaceform_widths.brendle import check_lemma_properties, lemma_samples
from spaceform_widths.estimates import density, fb_estimate_pipeline
from spaceform_widths.varifold import first_variation, tangent_test_basis
from spaceform_widths.varifold_fixtures import (catenoid_boundary_point, critical_catenoid,
                                                equatorial_disk, offcenter_disk)


def main():
    y = np.array([1.0, 0.0, 0.0])
    print("the boundary field: divergence slack on random k-planes")
    for k in (1, 2, 3):
        x, frames = lemma_samples(np.random.default_rng(0), y, k, 20_000)
        rep = check_lemma_properties(y, k, x, frames)
        print(f"  k={k}  min slack {rep.min_slack:+.3e}")

    print("\nstationarity: max |first variation| over the tangential test fields")
    basis = tangent_test_basis(3)
    for label, V in (("equatorial disk", equatorial_disk(100)),
                     ("off-centre disk", offcenter_disk(100))):
        print(f"  {label:16s} {max(abs(first_variation(V, X)) for X in basis):.3e}")

    print("\narea lower bound from a boundary point, in units of pi")
    for N in (50, 100, 200):
        rep = fb_estimate_pipeline(equatorial_disk(N), y)
        theta = density(equatorial_disk(N), y).density
        print(f"  disk N={N:3d}  Theta={theta:.4f}  bound={rep.mass_bound / math.pi:.4f}  "
              f"slack={rep.slack:+.4f}")
    rep = fb_estimate_pipeline(critical_catenoid(128), catenoid_boundary_point())
    print(f"  catenoid      mass={rep.mass / math.pi:.4f}  bound={rep.mass_bound / math.pi:.4f}  "
          f"slack={rep.slack:+.4f}")


if __name__ == "__main__":
    main()
