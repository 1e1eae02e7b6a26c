"""End-to-end solve: basis, test space, assembly, least squares, errors."""
from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass, field

import numpy as np

from . import assembly as asm
from .features import DEFAULT_FD_STEP, NetworkArch, build_basis
from .lstsq import DEFAULT_RCOND, LstsqResult, solve_lstsq
from .mesh import BoundaryPartition, Face, StructuredMesh, scalar_test_basis
from .metrics import ErrorReport, evaluation_rule, field_functions, relative_errors, slice_errors_at_T
from .problems import ProblemSpec

__all__ = ["Settings", "Solution", "StageError", "solve", "derived_seed", "make_bases"]


@dataclass(frozen=True)
class Settings:
    """Discretisation knobs for one solve.

    ``dof`` is the number of trial unknowns.  For mixed problems it is split
    evenly between ``u`` and the two components of ``p`` (each network gets
    ``dof // 3`` features).
    """

    h: float = 2.0**-5
    dof: int = 200
    depth: int = 2
    network: str = "fc"
    init: str = "uniform"
    radius: float = 1.0
    nv: int | None = None
    nv_mode: str = "prefix"
    quad_points: int | None = None
    face_points: int = 5
    boundary_samples: int = 100
    initial_samples: int = 100
    rcond: float = DEFAULT_RCOND
    fd_step: float = DEFAULT_FD_STEP
    eval_h: float = 2.0**-5
    eval_points: int = 10
    boundary_weight: float = 1.0
    heat_vanish_t0: bool = True
    wave_vanish_t0: bool = False
    vanish_T: bool = False
    relative_space_time: bool = False
    h1_mode: str = "full"

    def replace(self, **kw) -> "Settings":
        return dataclasses.replace(self, **kw)


@dataclass
class Solution:
    problem: ProblemSpec
    settings: Settings
    seed: int
    bases: dict
    coeffs: np.ndarray
    lstsq: LstsqResult
    shape: tuple
    block_rows: dict
    errors: ErrorReport | None
    timings: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def columns(self, name="u"):
        """Coefficient slice of field ``name`` (``"u"`` or ``"p"``)."""
        if self.problem.kind != "mixed":
            return self.coeffs
        npf = self.bases["p"].n_features
        d = self.problem.dim
        return self.coeffs[: d * npf] if name == "p" else self.coeffs[d * npf:]

    def u(self):
        """Value and gradient callables of the numerical ``u``."""
        return field_functions(self.bases["u"], self.columns("u"), 0, self.settings.fd_step)


def derived_seed(seed: int, stream: int) -> int:
    """Independent 64-bit seed for auxiliary stream ``stream`` of run ``seed``."""
    return int(np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, stream]).generate_state(1, np.uint64)[0])


def make_bases(problem: ProblemSpec, settings: Settings, seed: int) -> dict:
    """Trial bases for a run; the scalar field uses ``seed`` itself."""
    def arch(width, outputs=1):
        widths = (problem.input_dim,) + (width,) * (settings.depth - 1)
        return NetworkArch(settings.network, widths, outputs, settings.init, settings.radius)

    if problem.kind == "mixed":
        if settings.dof % 3:
            raise ValueError(f"mixed dof must be divisible by 3, got {settings.dof}")
        width = settings.dof // 3
        return {
            "u": build_basis(arch(width), seed),
            "p": build_basis(arch(width, problem.dim), derived_seed(seed, 2)),
        }
    return {"u": build_basis(arch(settings.dof), seed)}


def _mesh(problem, settings):
    return StructuredMesh(problem.domain_box, settings.h)


def _errors(problem, settings, basis, coeffs):
    if problem.u_exact is None or problem.grad_exact is None:
        return None
    value, grad = field_functions(basis, coeffs, 0, settings.fd_step)
    if problem.time_dependent:
        rule = evaluation_rule(problem.box, settings.eval_h, settings.eval_points)
        rep = slice_errors_at_T(value, grad, problem.u_exact, problem.grad_exact, problem.time[1], rule,
                                problem.time, relative=settings.relative_space_time, h1_mode=settings.h1_mode)
    else:
        rule = evaluation_rule(problem.box, settings.eval_h, settings.eval_points)
        rep = relative_errors(value, grad, problem.u_exact, problem.grad_exact, rule, h1_mode=settings.h1_mode)
    rep.eval_h = settings.eval_h
    return rep


def assemble(problem: ProblemSpec, settings: Settings, seed: int, bases=None):
    """Build the stacked system for one run; returns ``(system, bases, notes)``."""
    problem.validate()
    bases = bases or make_bases(problem, settings, seed)
    mesh = _mesh(problem, settings)
    rng = np.random.Generator(np.random.PCG64(derived_seed(seed, 1)))
    notes = []
    nq = settings.quad_points
    kind = problem.kind
    d = problem.dim
    if kind in ("poisson", "diffusion_reaction"):
        tests = scalar_test_basis(mesh, problem.partition, "dirichlet")
        tests = tests.subset(settings.nv, settings.nv_mode, derived_seed(seed, 3))
        system = asm.assemble_elliptic(problem, bases["u"], tests, nq or 5, settings.face_points,
                                       settings.fd_step)
        pts, _ = asm.boundary_samples(problem.box, problem.partition.dirichlet, settings.boundary_samples, rng)
        system.extend(asm.assemble_dirichlet_rows(bases["u"], pts, problem.g_d))
    elif kind == "mixed":
        form = problem.form
        q, v = asm.mixed_test_spaces(mesh, problem.partition, form)
        dpts = npts = None
        if form in (1, 3):
            dpts, _ = asm.boundary_samples(problem.box, problem.partition.dirichlet, settings.boundary_samples, rng)
        if form in (2, 3):
            npts = asm.boundary_samples(problem.box, problem.partition.neumann, settings.boundary_samples, rng)
        system = asm.assemble_mixed(problem, form, bases["u"], bases["p"], q, v, nq or 5,
                                    settings.face_points, settings.fd_step, dpts, npts)
        if form == 4:
            notes.append("form 4: boundary conditions built into the weak form, no boundary rows")
    elif kind in ("heat", "wave"):
        extra = []
        if (kind == "heat" and settings.heat_vanish_t0) or (kind == "wave" and settings.wave_vanish_t0):
            extra.append(Face(d, 0))
        if settings.vanish_T:
            extra.append(Face(d, 1))
        tests = scalar_test_basis(mesh, _space_time_partition(problem), "dirichlet", extra)
        tests = tests.subset(settings.nv, settings.nv_mode, derived_seed(seed, 3))
        if kind == "heat":
            system = asm.assemble_heat(problem, bases["u"], tests, nq or 10, settings.face_points,
                                       settings.fd_step, require_t0_vanish=settings.heat_vanish_t0)
        else:
            system = asm.assemble_wave(problem, bases["u"], tests, nq or 10, settings.face_points,
                                       settings.fd_step)
        pts, _ = asm.boundary_samples(problem.box, problem.partition.dirichlet, settings.boundary_samples,
                                      rng, problem.time)
        system.extend(asm.assemble_dirichlet_rows(bases["u"], pts, problem.g_d))
        init = asm.boundary_samples(problem.box, [Face(d, 0)], settings.initial_samples, rng, problem.time)[0] \
            if settings.initial_samples > 0 else np.empty((0, d + 1))
        system.extend(asm.assemble_initial_rows(bases["u"], init, problem.h0, problem.time[0]))
    else:
        raise ValueError(f"unsupported problem kind {kind!r}")
    if problem.partition.dirichlet and kind != "mixed" and system.rows(asm.DIRICHLET) == 0:
        notes.append("warning: Dirichlet faces present but no Dirichlet samples")
    return system, bases, notes


def _space_time_partition(problem):
    """Partition of the space-time box whose Dirichlet faces are the lateral ones."""
    d = problem.dim
    dirichlet = list(problem.partition.dirichlet)
    neumann = list(problem.partition.neumann) + [Face(d, 0), Face(d, 1)]
    return BoundaryPartition(d + 1, dirichlet, neumann)


class StageError(RuntimeError):
    """A pipeline failure tagged with the stage that raised it."""

    def __init__(self, stage, cause):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause


def solve(problem: ProblemSpec, settings: Settings = Settings(), seed: int = 0) -> Solution:
    """Run the whole pipeline once.

    Stages run in order basis, assemble, lstsq, metrics; any exception is
    re-raised as :class:`StageError` naming the stage.
    """
    def staged(stage, fn, *args):
        try:
            return fn(*args)
        except StageError:
            raise
        except Exception as exc:
            raise StageError(stage, exc) from exc

    t0 = time.perf_counter()
    bases = staged("basis", make_bases, problem, settings, seed)
    system, bases, notes = staged("assemble", assemble, problem, settings, seed, bases)
    t1 = time.perf_counter()
    weights = {asm.DIRICHLET: settings.boundary_weight, asm.NORMAL_TRACE: settings.boundary_weight,
               asm.INITIAL: settings.boundary_weight}

    def _lstsq():
        M, b, prov = asm.stack(system, weights)
        return M, prov, solve_lstsq(M, b, settings.rcond, prov)

    M, prov, result = staged("lstsq", _lstsq)
    t2 = time.perf_counter()
    if problem.kind == "mixed":
        d = problem.dim
        u_coeffs = result.coeffs[d * bases["p"].n_features:]
    else:
        u_coeffs = result.coeffs
    errors = staged("metrics", _errors, problem, settings, bases["u"], u_coeffs)
    t3 = time.perf_counter()
    expected = {"mixed": (asm.DIRICHLET, asm.NORMAL_TRACE), "heat": (asm.DIRICHLET, asm.INITIAL),
                "wave": (asm.DIRICHLET, asm.INITIAL)}.get(problem.kind, (asm.DIRICHLET,))
    block_rows = dict.fromkeys((asm.WEAK,) + expected, 0)
    for label, start, stop in prov:
        block_rows[label] = block_rows.get(label, 0) + stop - start
    return Solution(problem, settings, seed, bases, result.coeffs, result, M.shape, block_rows, errors,
                    {"assemble": t1 - t0, "solve": t2 - t1, "errors": t3 - t2}, notes)
