"""Lyapunov spectrum of the Cantor repeller of z**2 - 6.

Computes the tree pressure on a wide grid, takes its Legendre transform and
compares the result with the two-loop graph directed subsystem, whose pressure
is log(6**-d + 4**-d) up to distortion.

    python3 demos/cantor_spectrum.py [outdir]
"""
import sys
from pathlib import Path

import numpy as np

from lyapspec import RationalMap
from lyapspec.gds import loop_system, bridge, subsystem_pressure, system_bowen_root
from lyapspec.io import plot_spectrum
from lyapspec.pressure import alpha_range, legendre_spectrum, pressure_curve

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out")
out.mkdir(exist_ok=True)
f = RationalMap.quadratic(-6)

curve = pressure_curve(f, np.linspace(-12, 12, 481), "tree", 10)
lo, hi = alpha_range(curve)
spec = legendre_spectrum(curve, np.linspace(lo, hi, 2001))
print(f"full repeller:   alpha in [{spec.alpha_minus:.4f}, {spec.alpha_plus:.4f}], d0 = {spec.d0:.4f}")

# the two fixed-point loops and the bridged system joining them
l3, l2 = loop_system(f, 3, 0.1), loop_system(f, -2, 0.1)
joined = bridge(l3, l2, f)
for name, sy in (("loop at 3", l3), ("loop at -2", l2), ("bridged", joined)):
    print(f"{name:15s}  P(0) = {subsystem_pressure(sy, 0.0):.4f}  Bowen root = {system_bowen_root(sy):.4f}")

plot_spectrum(out / "cantor_spectrum.svg", spec.alpha, spec.F, spec.alpha_minus, spec.alpha_plus, spec.d0,
              title="z^2 - 6")
print(f"wrote {out / 'cantor_spectrum.svg'}")
