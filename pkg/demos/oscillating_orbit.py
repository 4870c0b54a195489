"""An orbit whose finite-time Lyapunov exponent never settles.

Alternates ever longer visits to the repelling fixed points 3 and -2 of
z**2 - 6, joined by bridges, so the running average of log|f'| swings between
log 6 and log 4 forever.

    python3 demos/oscillating_orbit.py
"""
import numpy as np

from lyapspec import RationalMap
from lyapspec.gds import loop_system
from lyapspec.wmeasure import build_schedule, subsystem_stats, synthesize_trace, verify_oscillation

f = RationalMap.quadratic(-6)
subs = [subsystem_stats(loop_system(f, p, 0.1)) for p in (3, -2)]
sched = build_schedule(subs, f, depth=6)
rep = verify_oscillation(synthesize_trace(sched, f), sched)

print("block  length                  target   average   residual")
for i, (m, t, a, r) in enumerate(zip(rep.checkpoints, rep.targets, rep.averages, rep.residuals)):
    print(f"{i:5d}  {m:22d}  {t:.5f}  {a:.5f}  {r:.2e}")
print(f"liminf = {rep.liminf:.5f} (log 4 = {np.log(4):.5f}), limsup = {rep.limsup:.5f} (log 6 = {np.log(6):.5f})")
