"""
Forward solver against the disk series solution
===============================================

Point source next to the unit disk: the Nystrom solution on the measurement
circle is compared with the separable series for sound-soft and sound-hard
disks, for a few wavenumbers and node counts.
"""

import numpy as np

from coinvert.forward import (SOUND_HARD, SOUND_SOFT, disk_scattered_series, eval_scattered,
                              measurement_circle, solve_scattering, unit_disk)

x, normals, w, _ = measurement_circle(512, 10.0)
source = (3.0, 0.0)

for bc in (SOUND_SOFT, SOUND_HARD):
    for k in (2.0, 6.0, 14.0):
        for n in (32, 64, 128):
            sol = solve_scattering(unit_disk(n, bc), k, [source])
            ref, _ = disk_scattered_series(x, source, k, 1.0, bc, normals)
            err = np.sqrt(np.sum(w * np.abs(eval_scattered(sol, x) - ref) ** 2) / np.sum(w * np.abs(ref) ** 2))
            print(f"{bc.label:10s} k={k:4.1f} n={n:4d}  relative L2 error {err:.2e}")
