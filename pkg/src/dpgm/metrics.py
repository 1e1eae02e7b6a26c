"""L2 and H1 error norms against a known solution."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .features import DEFAULT_FD_STEP
from .mesh import StructuredMesh
from .quadrature import cell_rule

__all__ = [
    "ErrorReport",
    "evaluation_rule",
    "field_functions",
    "relative_errors",
    "slice_errors_at_T",
]

EVAL_H = 2.0**-5
EVAL_POINTS = 10


@dataclass
class ErrorReport:
    e_L2: float
    e_H1: float
    relative: bool
    eval_h: float | None = None
    eval_order: int | None = None
    time: float | None = None
    h1_mode: str = "full"

    def as_dict(self):
        return asdict(self)


def evaluation_rule(box, h=EVAL_H, n_per_axis=EVAL_POINTS):
    """Gauss rule on a uniform mesh of ``box``, independent of any assembly mesh."""
    return cell_rule(StructuredMesh(box, h), n_per_axis)


def field_functions(basis, coeffs, component=0, fd_step=DEFAULT_FD_STEP):
    """Value and gradient callables for one component of a reconstructed field."""
    c = basis.coefficient_matrix(coeffs)[component]

    def value(x):
        return basis.values(x) @ c

    def grad(x):
        return np.einsum("j,njk->nk", c, basis.gradients(x, fd_step))

    return value, grad


def _norms(rule, u_num, grad_num, u_exact, grad_exact, to_input=None, n_space=None):
    pts = rule.points
    inp = pts if to_input is None else to_input(pts)
    w = rule.weights
    un = np.asarray(u_num(inp), dtype=float).reshape(-1)
    ue = np.asarray(u_exact(inp), dtype=float).reshape(-1)
    gn = np.asarray(grad_num(inp), dtype=float)
    ge = np.asarray(grad_exact(inp), dtype=float)
    if n_space is not None:
        gn, ge = gn[:, :n_space], ge[:, :n_space]
    e2 = w @ (un - ue) ** 2
    g2 = w @ np.sum((gn - ge) ** 2, axis=1)
    u2 = w @ ue**2
    gu2 = w @ np.sum(ge**2, axis=1)
    return e2, g2, u2, gu2


def _report(e2, g2, u2, gu2, relative, h1_mode, **meta):
    if h1_mode not in ("full", "semi"):
        raise ValueError(f"h1_mode must be 'full' or 'semi', got {h1_mode!r}")
    h1_err = g2 + (e2 if h1_mode == "full" else 0.0)
    h1_ref = gu2 + (u2 if h1_mode == "full" else 0.0)
    if relative:
        if u2 == 0 or h1_ref == 0:
            raise ValueError("exact solution has zero norm; use absolute errors (relative=False)")
        return ErrorReport(float(np.sqrt(e2 / u2)), float(np.sqrt(h1_err / h1_ref)), True, h1_mode=h1_mode, **meta)
    return ErrorReport(float(np.sqrt(e2)), float(np.sqrt(h1_err)), False, h1_mode=h1_mode, **meta)


def relative_errors(u_num, grad_num, u_exact, grad_exact, rule, relative=True, h1_mode="full"):
    """Errors of ``u_num`` over the region covered by ``rule``.

    ``u_num``/``u_exact`` map ``(N, d)`` points to values and ``grad_num``/
    ``grad_exact`` to ``(N, d)`` gradients.
    """
    e2, g2, u2, gu2 = _norms(rule, u_num, grad_num, u_exact, grad_exact)
    return _report(e2, g2, u2, gu2, relative, h1_mode, eval_order=(rule.exact_degree + 1) // 2)


def slice_errors_at_T(u_num, grad_num, u_exact, grad_exact, T, spatial_rule, time_interval=None,
                      relative=False, h1_mode="full"):
    """Spatial L2/H1 errors of a space-time field at ``t = T``.

    Only the spatial part of the gradients enters the H1 norm.
    """
    if time_interval is not None:
        lo, hi = time_interval
        if not lo <= T <= hi:
            raise ValueError(f"T={T} lies outside the time interval [{lo}, {hi}]")
    d = spatial_rule.points.shape[1]

    def lift(p):
        return np.hstack([p, np.full((len(p), 1), float(T))])

    e2, g2, u2, gu2 = _norms(spatial_rule, u_num, grad_num, u_exact, grad_exact, lift, d)
    return _report(e2, g2, u2, gu2, relative, h1_mode, time=float(T),
                   eval_order=(spatial_rule.exact_degree + 1) // 2)
