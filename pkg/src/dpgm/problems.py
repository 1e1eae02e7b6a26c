"""Problem definitions: coefficients, boundary data and manufactured solutions.

Data functions take an ``(N, n)`` array of points and return ``(N,)``.  For
space-time problems points are ``(x, y, t)`` with time last; ``h0`` and
``w0`` take spatial points only.  Neumann data takes ``(points, normals)``.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .expr import parse_expression
from .mesh import BoundaryPartition

__all__ = [
    "ProblemSpec",
    "KINDS",
    "example_poisson",
    "example_heat",
    "example_wave",
    "custom_problem",
    "preset",
    "PRESETS",
]

KINDS = ("diffusion_reaction", "poisson", "mixed", "heat", "wave")

PI = np.pi


def _const(c):
    def fn(x):
        return np.full(np.atleast_2d(x).shape[0], float(c))

    return fn


def _zero_flux(x, normals=None):
    return np.zeros(np.atleast_2d(x).shape[0])


@dataclass(frozen=True)
class ProblemSpec:
    """Everything needed to assemble one linear PDE problem.

    ``grad_exact`` returns the spatial gradient ``(N, d)`` of ``u_exact``.
    ``form`` selects the mixed formulation (1..4) when ``kind == "mixed"``.
    """

    kind: str
    box: tuple
    partition: BoundaryPartition
    f: Callable
    g_d: Optional[Callable] = None
    g_n: Optional[Callable] = None
    alpha: Callable = _const(1.0)
    delta: Callable = _const(0.0)
    h0: Optional[Callable] = None
    w0: Optional[Callable] = None
    time: Optional[tuple] = None
    u_exact: Optional[Callable] = None
    grad_exact: Optional[Callable] = None
    form: Optional[int] = None
    name: str = "custom"

    @property
    def dim(self) -> int:
        """Spatial dimension."""
        return len(self.box)

    @property
    def time_dependent(self) -> bool:
        return self.kind in ("heat", "wave")

    @property
    def input_dim(self) -> int:
        return self.dim + (1 if self.time_dependent else 0)

    @property
    def domain_box(self) -> np.ndarray:
        """Box the trial functions live on (space-time box for heat/wave)."""
        box = list(self.box)
        if self.time_dependent:
            box.append(tuple(self.time))
        return np.asarray(box, dtype=float)

    def with_form(self, form: int) -> "ProblemSpec":
        if form not in (1, 2, 3, 4):
            raise ValueError(f"mixed formulation must be 1..4, got {form}")
        if self.kind not in ("poisson", "mixed"):
            raise ValueError("mixed formulations are defined for the Poisson problem only")
        return dataclasses.replace(self, kind="mixed", form=form)

    def validate(self, n_samples: int = 1000, seed: int = 0) -> "ProblemSpec":
        if self.kind not in KINDS:
            raise ValueError(f"unknown problem kind {self.kind!r}")
        if self.kind == "mixed" and self.form not in (1, 2, 3, 4):
            raise ValueError(f"mixed problem needs form 1..4, got {self.form}")
        if self.time_dependent:
            if self.time is None or not self.time[1] > self.time[0]:
                raise ValueError(f"{self.kind} problem needs a time interval")
        if self.partition.dim != self.dim:
            raise ValueError("boundary partition dimension differs from the domain")
        missing = []
        if self.f is None:
            missing.append("f")
        if self.partition.dirichlet and self.g_d is None:
            missing.append("g_d")
        if self.partition.neumann and self.g_n is None:
            missing.append("g_n")
        if self.time_dependent and self.h0 is None:
            missing.append("h0")
        if self.kind == "wave" and self.w0 is None:
            missing.append("w0")
        if missing:
            raise ValueError(f"{self.kind} problem is missing data: {', '.join(missing)}")
        rng = np.random.Generator(np.random.PCG64(seed))
        box = np.asarray(self.box, dtype=float)
        pts = box[:, 0] + rng.random((n_samples, self.dim)) * (box[:, 1] - box[:, 0])
        a = np.asarray(self.alpha(pts))
        if not np.all(a > 0):
            raise ValueError(f"diffusion coefficient must be positive, min sampled {a.min():g}")
        d = np.asarray(self.delta(pts))
        if not np.all(d >= 0):
            raise ValueError(f"reaction coefficient must be non-negative, min sampled {d.min():g}")
        return self


# Example 1: u = cos(pi x) sin(pi y) on [0,1]^2, Dirichlet on y in {0,1},
# zero flux on x in {0,1}.  -Laplace u = 2 pi^2 u.


def _ex1_u(p):
    p = np.atleast_2d(p)
    return np.cos(PI * p[:, 0]) * np.sin(PI * p[:, 1])


def _ex1_grad(p):
    p = np.atleast_2d(p)
    x, y = p[:, 0], p[:, 1]
    return np.stack([-PI * np.sin(PI * x) * np.sin(PI * y), PI * np.cos(PI * x) * np.cos(PI * y)], 1)


def _ex1_f(p):
    return 2 * PI**2 * _ex1_u(p)


def example_poisson() -> ProblemSpec:
    return ProblemSpec(
        kind="poisson",
        box=((0.0, 1.0), (0.0, 1.0)),
        partition=BoundaryPartition(2, dirichlet=["y0", "y1"]),
        f=_ex1_f,
        g_d=_ex1_u,
        g_n=_zero_flux,
        u_exact=_ex1_u,
        grad_exact=_ex1_grad,
        name="example1",
    )


# Example 2: u = 2 exp(-t) sin(pi x/2) sin(pi y/2).
# u_t = -u and Laplace u = -(pi^2/2) u, so f = u_t - Laplace u = (pi^2/2 - 1) u.


def _ex2_u(p):
    p = np.atleast_2d(p)
    return 2 * np.exp(-p[:, 2]) * np.sin(PI / 2 * p[:, 0]) * np.sin(PI / 2 * p[:, 1])


def _ex2_grad(p):
    p = np.atleast_2d(p)
    x, y, t = p[:, 0], p[:, 1], p[:, 2]
    s = PI * np.exp(-t)
    return np.stack(
        [s * np.cos(PI / 2 * x) * np.sin(PI / 2 * y), s * np.sin(PI / 2 * x) * np.cos(PI / 2 * y)], 1
    )


def _ex2_f(p):
    return (PI**2 / 2 - 1) * _ex2_u(p)


def _ex2_h0(p):
    p = np.atleast_2d(p)
    return 2 * np.sin(PI / 2 * p[:, 0]) * np.sin(PI / 2 * p[:, 1])


def example_heat() -> ProblemSpec:
    return ProblemSpec(
        kind="heat",
        box=((0.0, 1.0), (0.0, 1.0)),
        time=(0.0, 1.0),
        partition=BoundaryPartition.all_dirichlet(2),
        f=_ex2_f,
        g_d=_ex2_u,
        h0=_ex2_h0,
        u_exact=_ex2_u,
        grad_exact=_ex2_grad,
        name="example2",
    )


# Example 3: u = sin(pi x/2) sin(pi y/2) sin(pi t/2).
# u_tt = -(pi^2/4) u and Laplace u = -(pi^2/2) u, so f = (pi^2/4) u.
# h0 = u(., 0) = 0 and w0 = u_t(., 0) = (pi/2) sin(pi x/2) sin(pi y/2).


def _ex3_u(p):
    p = np.atleast_2d(p)
    return np.sin(PI / 2 * p[:, 0]) * np.sin(PI / 2 * p[:, 1]) * np.sin(PI / 2 * p[:, 2])


def _ex3_grad(p):
    p = np.atleast_2d(p)
    x, y, t = p[:, 0], p[:, 1], p[:, 2]
    s = PI / 2 * np.sin(PI / 2 * t)
    return np.stack(
        [s * np.cos(PI / 2 * x) * np.sin(PI / 2 * y), s * np.sin(PI / 2 * x) * np.cos(PI / 2 * y)], 1
    )


def _ex3_f(p):
    return PI**2 / 4 * _ex3_u(p)


def _ex3_w0(p):
    p = np.atleast_2d(p)
    return PI / 2 * np.sin(PI / 2 * p[:, 0]) * np.sin(PI / 2 * p[:, 1])


def example_wave() -> ProblemSpec:
    return ProblemSpec(
        kind="wave",
        box=((0.0, 1.0), (0.0, 1.0)),
        time=(0.0, 1.0),
        partition=BoundaryPartition.all_dirichlet(2),
        f=_ex3_f,
        g_d=_ex3_u,
        h0=_const(0.0),
        w0=_ex3_w0,
        u_exact=_ex3_u,
        grad_exact=_ex3_grad,
        name="example3",
    )


PRESETS = {"example1": example_poisson, "example2": example_heat, "example3": example_wave}


def preset(name: str) -> ProblemSpec:
    try:
        return PRESETS[name]()
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def _flux_from_expr(expr):
    def g_n(x, normals=None):
        return expr(x)

    return g_n


def custom_problem(config: dict) -> ProblemSpec:
    """Build a problem from a mapping of expression strings.

    Keys: ``kind``, ``box`` (default unit square), ``time`` (heat/wave),
    ``dirichlet`` (face names; the rest are Neumann), ``form`` (mixed), and
    the expressions ``f``, ``g_d``, ``g_n``, ``alpha``, ``delta``, ``h0``,
    ``w0``, ``u_exact`` and ``grad_exact`` (a list, one per spatial axis).
    """
    cfg = dict(config)
    kind = cfg.get("kind", "poisson")
    if kind not in KINDS:
        raise ValueError(f"unknown problem kind {kind!r}; choose from {KINDS}")
    box = tuple(tuple(map(float, b)) for b in cfg.get("box", [(0, 1), (0, 1)]))
    dim = len(box)
    time_dependent = kind in ("heat", "wave")
    space_vars = ("x", "y", "z")[:dim]
    all_vars = space_vars + (("t",) if time_dependent else ())

    def expr(key, variables=all_vars):
        if cfg.get(key) is None:
            return None
        try:
            return parse_expression(cfg[key], variables)
        except ValueError as exc:
            raise ValueError(f"problem.{key}: {exc}") from None

    partition = BoundaryPartition(dim, dirichlet=cfg.get("dirichlet", []))
    alpha = expr("alpha", space_vars) or _const(1.0)
    delta = expr("delta", space_vars) or _const(0.0)
    if kind == "mixed" and ("alpha" in cfg or "delta" in cfg):
        raise ValueError("mixed formulations are for -Laplace u = f; drop alpha/delta")
    g_n = expr("g_n")
    grad = None
    if cfg.get("grad_exact") is not None:
        comps = [parse_expression(s, all_vars) for s in cfg["grad_exact"]]

        def _grad(p, comps=comps):
            return np.stack([c(p) for c in comps], axis=1)

        grad = _grad

    time = tuple(map(float, cfg["time"])) if cfg.get("time") is not None else None
    if time_dependent and time is None:
        time = (0.0, 1.0)
    spec = ProblemSpec(
        kind=kind,
        box=box,
        partition=partition,
        f=expr("f"),
        g_d=expr("g_d"),
        g_n=None if g_n is None else _flux_from_expr(g_n),
        alpha=alpha,
        delta=delta,
        h0=expr("h0", space_vars),
        w0=expr("w0", space_vars),
        time=time,
        u_exact=expr("u_exact"),
        grad_exact=grad,
        form=cfg.get("form"),
        name=cfg.get("name", "custom"),
    )
    return spec.validate()
