"""Compare the four first-order (mixed) weak forms on the Poisson benchmark."""
from dpgm import Settings, preset, solve

problem = preset("example1")
settings = Settings(h=2.0**-4, dof=600)
for form in (1, 2, 3, 4):
    sol = solve(problem.with_form(form), settings, seed=0)
    rows = ", ".join(f"{k}={v}" for k, v in sorted(sol.block_rows.items()))
    print(f"form {form}: e_L2={sol.errors.e_L2:.2e} e_H1={sol.errors.e_H1:.2e} ({rows})")
