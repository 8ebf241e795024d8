"""Robin eigenvalues, stability certificates and the hyperbolic isoperimetric check.

Run with ``python demos/stability.py``.
"""

import math

from spaceform_widths.stability import (catenoid_mesh, certificate_field, equatorial_mesh,
                                        hemisphere_mesh, hyperbolic_disk_mesh, iso_check,
                                        robin_eigen)


def main():
    print("first Robin eigenvalue and the certificate value Q(u, u)")
    cases = (("flat disk", equatorial_mesh(16), -2 * math.pi),
             ("hemisphere disk", hemisphere_mesh(16), -4 * math.pi),
             ("hyperbolic disk", hyperbolic_disk_mesh(16), -2 * math.pi * math.cosh(1.0)))
    for label, mesh, target in cases:
        data = robin_eigen(mesh)
        q = data.form(certificate_field(mesh))
        print(f"  {label:16s} lambda1={data.lam1:+.4f}  gap={data.gap:.3f}  "
              f"Q={q:+.4f} (exact {target:+.4f})")
    data = robin_eigen(catenoid_mesh(64))
    print(f"  {'critical catenoid':16s} lambda1={data.lam1:+.4f}")

    print("\nisoperimetric calibration on hyperbolic geodesic disks")
    for rings in (8, 16, 32):
        rep = iso_check(hyperbolic_disk_mesh(rings))
        print(f"  rings={rings:2d}  identity slack {rep.iso1_slack:+.2e}  "
              f"ratio error {rep.ratio_rel:+.2e}")


if __name__ == "__main__":
    main()
