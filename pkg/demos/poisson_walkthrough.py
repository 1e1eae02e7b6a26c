"""Solve the Poisson benchmark step by step and print what each stage builds.

    python demos/poisson_walkthrough.py
"""
import time

import numpy as np

from dpgm import NetworkArch, build_basis, preset, relative_errors, scalar_test_basis
from dpgm.assembly import assemble_dirichlet_rows, assemble_elliptic, stack
from dpgm.lstsq import solve_lstsq
from dpgm.mesh import build_mesh
from dpgm.metrics import evaluation_rule, field_functions
from dpgm.quadrature import face_region, sample_uniform

problem = preset("example1")
seed = 0

# Trial space: 200 frozen tanh features of a one-hidden-layer network.
basis = build_basis(NetworkArch("fc", (2, 200)), seed)

# Test space: bilinear hats on a 32 x 32 mesh, zero on the Dirichlet sides.
mesh = build_mesh(problem.box, 2.0**-5)
tests = scalar_test_basis(mesh, problem.partition)
print(f"{len(tests)} test functions on {mesh.n_cells} cells")

t0 = time.perf_counter()
weak = assemble_elliptic(problem, basis, tests)
rng = np.random.default_rng(seed)
pts = np.vstack([sample_uniform(face_region(problem.box, f), 100, rng).points
                 for f in sorted(problem.partition.dirichlet)])
bc = assemble_dirichlet_rows(basis, pts, problem.g_d)
M, b, provenance = stack(weak.blocks + bc.blocks)
print(f"stacked system {M.shape} assembled in {time.perf_counter() - t0:.2f}s")

result = solve_lstsq(M, b, provenance=provenance)
print(f"rank {result.rank_estimate}, residual {result.total_residual:.2e}, "
      f"per block {result.per_block_residual}")

u, grad = field_functions(basis, result.coeffs)
report = relative_errors(u, grad, problem.u_exact, problem.grad_exact, evaluation_rule(problem.box))
print(f"relative L2 error {report.e_L2:.3e}, relative H1 error {report.e_H1:.3e}")
