"""Heat and wave benchmarks treated as boundary value problems in space-time.

Each solve takes a couple of minutes at the default settings; pass a coarser
mesh on the command line for a quick look, e.g. ``python demos/space_time.py 0.125 200``.
"""
import sys

from dpgm import Settings, preset, solve

h = float(sys.argv[1]) if len(sys.argv) > 1 else 2.0**-4
dof = int(sys.argv[2]) if len(sys.argv) > 2 else 800

for name in ("example2", "example3"):
    sol = solve(preset(name), Settings(h=h, dof=dof), seed=0)
    e = sol.errors
    print(f"{name} ({sol.problem.kind}): system {sol.shape}, rank {sol.lstsq.rank_estimate}, "
          f"L2 error at t={e.time:g} {e.e_L2:.3e}, H1 error {e.e_H1:.3e}, "
          f"assembly {sol.timings['assemble']:.1f}s")
