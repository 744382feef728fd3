"""
Limited-aperture measurements
=============================

Only receivers (and auxiliary sources) with polar angle in [0, 3pi/2) are
used.  Sources in the illuminated sector are compared with those behind the
missing quarter of the circle.
"""

import math
import sys

from coinvert.config import load_preset
from coinvert.pipeline import run_experiment

out = sys.argv[1] if len(sys.argv) > 1 else "out/limited_aperture"
aperture = (0.0, 1.5 * math.pi)
for label, ap in (("full", None), ("limited", aperture)):
    cfg = load_preset("example2").with_overrides(aperture=ap, indicators=("I1", "I2hat"))
    d = run_experiment(cfg, f"{out}/{label}")["derived"]
    print(f"{label} aperture, {d['receivers_used']} receivers")
    for kind, key in (("I1", "S1"), ("I2hat", "S2")):
        for z, ok in zip(d["truth"][key], d["peaks"][kind]["top_n"]["matched"]):
            ang = math.degrees(math.atan2(z[1], z[0])) % 360
            sector = "lit" if ang < 270 else "shadow"
            print(f"  {kind:6s} source at {ang:5.1f} deg ({sector:6s}): {'found' if ok else 'missed'}")
