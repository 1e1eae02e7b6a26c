"""Assembly of the stacked rectangular system.

Weak-form rows come from integrating trial features against nodal test
functions cell by cell; boundary and initial conditions add collocation rows.
All blocks share the same columns (the trial coefficients) and are stacked
vertically in the order weak form, boundary, initial.

Mixed systems order their columns ``[p1 | p2 | u]``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .features import DEFAULT_FD_STEP
from .mesh import Face, TestSpace, hdiv_test_basis, reference_shape, scalar_test_basis
from .quadrature import face_region, face_rule, sample_uniform, tensor_rule

__all__ = [
    "Block",
    "StackedSystem",
    "WEAK",
    "DIRICHLET",
    "NORMAL_TRACE",
    "INITIAL",
    "assemble_elliptic",
    "assemble_heat",
    "assemble_wave",
    "assemble_mixed",
    "assemble_dirichlet_rows",
    "assemble_initial_rows",
    "assemble_normal_trace_rows",
    "mixed_test_spaces",
    "stack",
    "write_system",
]

WEAK = "weak_form"
DIRICHLET = "dirichlet"
NORMAL_TRACE = "normal_trace"
INITIAL = "initial"
_ORDER = {WEAK: 0, DIRICHLET: 1, NORMAL_TRACE: 1, INITIAL: 2}

# entries per (cells x points x columns) work array
_BATCH_BUDGET = 4_000_000


@dataclass
class Block:
    label: str
    matrix: np.ndarray
    rhs: np.ndarray
    note: str = ""

    def __post_init__(self):
        if self.label not in _ORDER:
            raise ValueError(f"unknown block label {self.label!r}")
        self.matrix = np.asarray(self.matrix, dtype=float).reshape(-1, self.matrix.shape[-1])
        self.rhs = np.asarray(self.rhs, dtype=float).reshape(-1)
        if self.matrix.shape[0] != self.rhs.shape[0]:
            raise ValueError(f"{self.label}: {self.matrix.shape[0]} rows but {len(self.rhs)} rhs entries")

    @property
    def rows(self) -> int:
        return self.matrix.shape[0]


class StackedSystem:
    """Ordered blocks sharing one column space."""

    def __init__(self, columns: int, blocks=()):
        self.columns = int(columns)
        self.blocks: list[Block] = []
        for b in blocks:
            self.add(b)

    def add(self, block: Block) -> "StackedSystem":
        if block.matrix.shape[1] != self.columns:
            raise ValueError(
                f"{block.label} block has {block.matrix.shape[1]} columns, system has {self.columns}"
            )
        self.blocks.append(block)
        return self

    def extend(self, other: "StackedSystem") -> "StackedSystem":
        for b in other.blocks:
            self.add(b)
        return self

    def rows(self, label=None) -> int:
        return sum(b.rows for b in self.blocks if label is None or b.label == label)

    @property
    def shape(self):
        return (self.rows(), self.columns)

    def ordered(self) -> list[Block]:
        return sorted(self.blocks, key=lambda b: _ORDER[b.label])

    def stack(self, weights=None):
        return stack(self, weights)


def stack(system, weights=None):
    """Concatenate blocks into ``(matrix, rhs, provenance)``.

    ``provenance`` lists ``(label, start, stop)`` row ranges.  ``weights``
    optionally scales blocks by label (default 1 for all).
    """
    blocks = system.ordered() if isinstance(system, StackedSystem) else list(system)
    if not blocks:
        raise ValueError("no blocks to stack")
    ncols = {b.matrix.shape[1] for b in blocks}
    if len(ncols) != 1:
        raise ValueError(f"blocks disagree on column count: {sorted(ncols)}")
    weights = weights or {}
    mats, rhss, prov = [], [], []
    start = 0
    for b in sorted(blocks, key=lambda b: _ORDER[b.label]):
        w = float(weights.get(b.label, 1.0))
        mats.append(b.matrix * w if w != 1.0 else b.matrix)
        rhss.append(b.rhs * w if w != 1.0 else b.rhs)
        prov.append((b.label, start, start + b.rows))
        start += b.rows
    return np.vstack(mats), np.concatenate(rhss), prov


def write_system(path, matrix, rhs, provenance):
    """Dump a stacked system as text.

    One matrix row per line, entries separated by spaces, the rhs entry last.
    Lines starting with ``#`` mark block boundaries.
    """
    with open(path, "w") as fh:
        fh.write(f"# dpgm system rows={matrix.shape[0]} cols={matrix.shape[1]} (last column = rhs)\n")
        for label, start, stop in provenance:
            fh.write(f"# block {label} rows {start}:{stop}\n")
            for i in range(start, stop):
                fh.write(" ".join(f"{v:.17g}" for v in matrix[i]))
                fh.write(f" {rhs[i]:.17g}\n")


# ---------------------------------------------------------------------------
# cell-integration engine


@dataclass
class _Term:
    """``sum_q w_q * weight * test_ref[l, q] * trial[q, :, cols]`` scattered to ``rowkey`` rows.

    Arrays are point-major: quadrature point first, then cell.  ``weight`` is
    ``(nq, nc)`` or a scalar.
    """

    rowkey: object
    cols: slice
    weight: object  # (nq, nc) or float
    trial: np.ndarray  # (nq, nc, ncols)
    test: np.ndarray  # (nloc, nq)


@dataclass
class _Rhs:
    rowkey: object
    weight: np.ndarray  # (nq, nc)
    test: np.ndarray  # (nloc, nq)


def _as_scalar(weight):
    """``weight`` as a float when it is constant, else ``None``."""
    w = np.asarray(weight, dtype=float)
    if w.ndim == 0:
        return float(w)
    first = w.flat[0]
    return float(first) if np.all(w == first) else None


def _integrate_cells(mesh, row_maps, nrows, ncols, n_per_axis, kernel, width):
    """Run ``kernel`` over batches of cells and scatter-add the local integrals.

    ``row_maps`` maps a row key to an array giving, per mesh node, the global
    row of that node's test function (-1 when absent).  ``kernel(pts, S, dS)``
    gets physical points ``(nq, nc, d)`` and reference shape values/gradients
    and returns ``(terms, rhs_terms)``.
    """
    ref = tensor_rule(n_per_axis, [(0.0, 1.0)] * mesh.dim)
    S, dS = reference_shape(ref.points, mesh.h)
    w = ref.weights * mesh.cell_volume
    nq = len(w)
    A = np.zeros((nrows, ncols))
    L = np.zeros(nrows)
    batch = max(1, _BATCH_BUDGET // (nq * max(width, 1)))
    for start in range(0, mesh.n_cells, batch):
        cells = np.arange(start, min(start + batch, mesh.n_cells))
        nc = len(cells)
        pts = mesh.cell_origins(cells)[None, :, :] + ref.points[:, None, :] * mesh.h
        corner_rows = mesh.cell_nodes(cells).T  # (nloc, nc)
        terms, rhs_terms = kernel(pts, S, dS)
        grouped = {}
        for t in terms:
            scale = _as_scalar(t.weight)
            if scale is not None:
                testw = t.test * (w * scale)
                X = t.trial
            else:
                testw = t.test * w
                X = t.weight[:, :, None] * t.trial
            k = X.shape[-1]
            local = (testw @ X.reshape(nq, nc * k)).reshape(-1, nc, k)
            key = (t.rowkey, t.cols.start, t.cols.stop)
            if key in grouped:
                grouped[key] += local
            else:
                grouped[key] = local
        for (rowkey, c0, c1), local in grouped.items():
            rows = row_maps[rowkey][corner_rows]
            ok = rows >= 0
            np.add.at(A, (rows[ok], slice(c0, c1)), local[ok])
        rgrouped = {}
        for r in rhs_terms:
            local = (r.test * w) @ r.weight
            rgrouped[r.rowkey] = rgrouped.get(r.rowkey, 0.0) + local
        for rowkey, local in rgrouped.items():
            rows = row_maps[rowkey][corner_rows]
            ok = rows >= 0
            np.add.at(L, rows[ok], local[ok])
    return A, L


def _locate(mesh, points):
    """Cell index and reference coordinates of points inside the mesh box."""
    pts = np.atleast_2d(points)
    rel = (pts - mesh.box[:, 0]) / mesh.h
    idx = np.clip(np.floor(rel).astype(np.int64), 0, np.array(mesh.shape) - 1)
    ref = rel - idx
    cells = np.ravel_multi_index(tuple(idx.T), mesh.shape)
    return cells, ref


def _scatter_points(mesh, row_map, nrows, points, weight, trial=None):
    """``sum_p weight_p v_i(x_p) trial_p`` for every test function ``i``.

    With ``trial`` of shape ``(N, ncols)`` returns a matrix, otherwise a vector.
    """
    out = np.zeros((nrows,) if trial is None else (nrows, trial.shape[1]))
    if len(points) == 0:
        return out
    cells, ref = _locate(mesh, points)
    nodes = mesh.cell_nodes(cells)
    corners = mesh.local_corners()
    fac = np.where(corners[:, None, :] == 1, ref[None], 1.0 - ref[None])
    vals = np.prod(fac, axis=2)  # (nloc, N)
    for l in range(len(corners)):
        rows = row_map[nodes[:, l]]
        ok = rows >= 0
        c = vals[l] * weight
        if trial is None:
            np.add.at(out, rows[ok], c[ok])
        else:
            np.add.at(out, rows[ok], c[ok, None] * trial[ok])
    return out


def _check_mesh(tests, mesh_dim):
    if tests.mesh.dim != mesh_dim:
        raise ValueError(f"test space lives on a {tests.mesh.dim}-d mesh, expected {mesh_dim}-d")


def _pointwise(fn, flat, nq, nc):
    """Evaluate a coefficient at flattened points, reshaped to ``(nq, nc)``."""
    return np.broadcast_to(np.asarray(fn(flat), dtype=float), (len(flat),)).reshape(nq, nc)


def _neumann_rhs(problem, tests, row_map, n_face):
    faces = sorted(problem.partition.neumann)
    if not faces:
        return np.zeros(len(tests))
    rule = face_rule(tests.mesh, faces, n_face)
    g = np.asarray(problem.g_n(rule.points, rule.normals[:, : problem.dim]), dtype=float)
    return _scatter_points(tests.mesh, row_map, len(tests), rule.points, rule.weights * g)


# ---------------------------------------------------------------------------
# elliptic


def assemble_elliptic(problem, basis, tests: TestSpace, n_per_axis=5, n_face=5,
                      fd_step=DEFAULT_FD_STEP) -> StackedSystem:
    """Weak-form rows ``a(phi_j, v_i)`` and ``l(v_i)`` for ``-div(alpha grad u) + delta u = f``."""
    if problem.kind not in ("poisson", "diffusion_reaction"):
        raise ValueError(f"assemble_elliptic does not handle {problem.kind!r} problems")
    d = problem.dim
    _check_mesh(tests, d)
    if basis.input_dim != d:
        raise ValueError(f"basis takes {basis.input_dim}-d input, problem is {d}-d")
    nf = basis.n_features
    all_cols = slice(0, nf)
    row_map = tests.row_map(-1)

    def kernel(pts, S, dS):
        nq, nc, _ = pts.shape
        flat = pts.reshape(-1, d)
        parts = basis.partials(flat, fd_step)
        alpha = _pointwise(problem.alpha, flat, nq, nc)
        terms = [_Term(-1, all_cols, alpha, parts[k].reshape(nq, nc, nf), dS[:, :, k]) for k in range(d)]
        delta = _pointwise(problem.delta, flat, nq, nc)
        if np.any(delta != 0):
            terms.append(_Term(-1, all_cols, delta, basis.values(flat).reshape(nq, nc, nf), S))
        return terms, [_Rhs(-1, _pointwise(problem.f, flat, nq, nc), S)]

    A, L = _integrate_cells(tests.mesh, {-1: row_map}, len(tests), nf, n_per_axis, kernel, nf * (d + 1))
    L += _neumann_rhs(problem, tests, row_map, n_face)
    return StackedSystem(nf, [Block(WEAK, A, L)])


# ---------------------------------------------------------------------------
# collocation rows


def assemble_dirichlet_rows(basis, samples, g_d, cols=None, ncols=None, label=DIRICHLET) -> StackedSystem:
    """Rows ``phi_j(x_k) = g_D(x_k)``; ``cols`` places them in a wider system."""
    pts = np.asarray(getattr(samples, "points", samples), dtype=float).reshape(-1, basis.input_dim)
    nf = basis.n_features
    ncols = nf if ncols is None else ncols
    cols = slice(0, nf) if cols is None else cols
    M = np.zeros((len(pts), ncols))
    if len(pts):
        M[:, cols] = basis.values(pts)
        G = np.asarray(g_d(pts), dtype=float).reshape(-1)
    else:
        G = np.zeros(0)
    return StackedSystem(ncols, [Block(label, M, G)])


def assemble_initial_rows(basis, samples, h0, t0=0.0) -> StackedSystem:
    """Rows ``phi_j(x_m, t0) = h0(x_m)``; samples may be spatial or already carry ``t``."""
    pts = np.asarray(getattr(samples, "points", samples), dtype=float)
    d = basis.input_dim - 1
    pts = pts.reshape(-1, pts.shape[-1] if pts.size else basis.input_dim)
    if pts.shape[1] == d:
        pts = np.hstack([pts, np.full((len(pts), 1), t0)])
    elif pts.shape[1] != d + 1:
        raise ValueError("initial samples have the wrong dimension")
    nf = basis.n_features
    if len(pts) == 0:
        return StackedSystem(nf, [Block(INITIAL, np.zeros((0, nf)), np.zeros(0))])
    if not np.allclose(pts[:, -1], t0):
        raise ValueError("initial samples must lie on the t = t0 slab")
    return StackedSystem(nf, [Block(INITIAL, basis.values(pts), h0(pts[:, :d]))])


def assemble_normal_trace_rows(basis_p, samples, normals, g_n, ncols=None) -> StackedSystem:
    """Rows ``p(x_k) . n_k = g_N(x_k)`` for a vector trial field sharing features."""
    pts = np.asarray(getattr(samples, "points", samples), dtype=float).reshape(-1, basis_p.input_dim)
    normals = np.asarray(normals, dtype=float).reshape(len(pts), -1)
    nf = basis_p.n_features
    m = basis_p.outputs
    ncols = m * nf if ncols is None else ncols
    M = np.zeros((len(pts), ncols))
    if len(pts):
        phi = basis_p.values(pts)
        for k in range(m):
            M[:, k * nf:(k + 1) * nf] = phi * normals[:, k:k + 1]
        G = np.asarray(g_n(pts, normals), dtype=float).reshape(-1)
    else:
        G = np.zeros(0)
    return StackedSystem(ncols, [Block(NORMAL_TRACE, M, G)])


# ---------------------------------------------------------------------------
# space-time


def _space_time_setup(problem, basis, tests):
    if problem.kind not in ("heat", "wave"):
        raise ValueError(f"expected a heat or wave problem, got {problem.kind!r}")
    d = problem.dim
    _check_mesh(tests, d + 1)
    if basis.input_dim != d + 1:
        raise ValueError(f"space-time basis needs {d + 1}-d input, got {basis.input_dim}")
    return d


def assemble_heat(problem, basis, tests: TestSpace, n_per_axis=10, n_face=5,
                  fd_step=DEFAULT_FD_STEP, require_t0_vanish=True) -> StackedSystem:
    """Rows ``int int (u_t v + alpha grad u . grad v)`` against space-time tests.

    The initial condition is imposed by collocation rows, so by default the
    test functions must vanish on ``Omega x {0}``.
    """
    d = _space_time_setup(problem, basis, tests)
    mesh = tests.mesh
    if require_t0_vanish and np.any(mesh.on_face(Face(d, 0))[tests.nodes]):
        raise ValueError("heat test functions must vanish on the initial slab t = 0")
    nf = basis.n_features
    all_cols = slice(0, nf)
    row_map = tests.row_map(-1)

    def kernel(pts, S, dS):
        nq, nc, _ = pts.shape
        flat = pts.reshape(-1, d + 1)
        parts = [g.reshape(nq, nc, nf) for g in basis.partials(flat, fd_step)]
        alpha = _pointwise(problem.alpha, flat[:, :d], nq, nc)
        terms = [_Term(-1, all_cols, 1.0, parts[d], S)]
        terms += [_Term(-1, all_cols, alpha, parts[k], dS[:, :, k]) for k in range(d)]
        return terms, [_Rhs(-1, _pointwise(problem.f, flat, nq, nc), S)]

    A, L = _integrate_cells(mesh, {-1: row_map}, len(tests), nf, n_per_axis, kernel, nf * (d + 1))
    L += _neumann_rhs(problem, tests, row_map, n_face)
    return StackedSystem(nf, [Block(WEAK, A, L)])


def assemble_wave(problem, basis, tests: TestSpace, n_per_axis=10, n_face=5,
                  fd_step=DEFAULT_FD_STEP) -> StackedSystem:
    """Rows of the wave weak form with the ``t = T`` slab term.

    ``a_w(u, v) = int int (-u_t v_t + alpha grad u . grad v) + int_Omega u_t(., T) v(., T)``
    and the initial velocity enters the rhs as ``int_Omega w0 v(., 0)``.
    """
    d = _space_time_setup(problem, basis, tests)
    if problem.w0 is None:
        raise ValueError("wave problem needs an initial velocity w0")
    mesh = tests.mesh
    nf = basis.n_features
    all_cols = slice(0, nf)
    row_map = tests.row_map(-1)

    def kernel(pts, S, dS):
        nq, nc, _ = pts.shape
        flat = pts.reshape(-1, d + 1)
        parts = [g.reshape(nq, nc, nf) for g in basis.partials(flat, fd_step)]
        alpha = _pointwise(problem.alpha, flat[:, :d], nq, nc)
        terms = [_Term(-1, all_cols, -1.0, parts[d], dS[:, :, d])]
        terms += [_Term(-1, all_cols, alpha, parts[k], dS[:, :, k]) for k in range(d)]
        return terms, [_Rhs(-1, _pointwise(problem.f, flat, nq, nc), S)]

    A, L = _integrate_cells(mesh, {-1: row_map}, len(tests), nf, n_per_axis, kernel, nf * (d + 1))
    top = face_rule(mesh, [Face(d, 1)], n_face)
    ut = basis.partials(top.points, fd_step, axes=[d])[0]
    A += _scatter_points(mesh, row_map, len(tests), top.points, top.weights, ut)
    bottom = face_rule(mesh, [Face(d, 0)], n_face)
    w0 = np.asarray(problem.w0(bottom.points[:, :d]), dtype=float)
    L += _scatter_points(mesh, row_map, len(tests), bottom.points, bottom.weights * w0)
    L += _neumann_rhs(problem, tests, row_map, n_face)
    return StackedSystem(nf, [Block(WEAK, A, L)])


# ---------------------------------------------------------------------------
# mixed Poisson


def mixed_test_spaces(mesh, partition, form: int):
    """``(q_tests, v_tests)`` for a mixed formulation.

    ``q`` is unconstrained in forms 1 and 3 and has zero normal trace on the
    Neumann faces in forms 2 and 4; ``v`` vanishes on the Dirichlet faces in
    forms 1 and 4 and is unconstrained in forms 2 and 3.
    """
    if form not in (1, 2, 3, 4):
        raise ValueError(f"mixed formulation must be 1..4, got {form}")
    if form in (1, 3):
        allnodes = np.arange(mesh.n_nodes)
        q = TestSpace(
            mesh,
            np.concatenate([allnodes] * mesh.dim),
            np.concatenate([np.full(mesh.n_nodes, k) for k in range(mesh.dim)]),
        )
    else:
        q = hdiv_test_basis(mesh, partition)
    v = scalar_test_basis(mesh, partition, "dirichlet" if form in (1, 4) else "none")
    return q, v


def assemble_mixed(problem, form, basis_u, basis_p, q_tests: TestSpace, v_tests: TestSpace,
                   n_per_axis=5, n_face=5, fd_step=DEFAULT_FD_STEP,
                   dirichlet_samples=None, neumann_samples=None) -> StackedSystem:
    """Rows of mixed formulation ``form`` for ``p = grad u``, ``-div p = f``.

    Weak rows come in three families: ``([q1, 0], 0)``, ``([0, q2], 0)`` and
    ``([0, 0], v)``.  ``dirichlet_samples`` (points on Dirichlet faces) add
    rows on ``u`` for forms 1 and 3; ``neumann_samples`` (a pair of points and
    outward normals) add ``p . n = g_N`` rows for forms 2 and 3.  Form 4 gets
    no boundary rows.
    """
    if form not in (1, 2, 3, 4):
        raise ValueError(f"mixed formulation must be 1..4, got {form}")
    d = problem.dim
    if d != 2:
        raise NotImplementedError("mixed formulations are implemented in 2D")
    if basis_p.outputs != d:
        raise ValueError(f"p basis needs {d} outputs, has {basis_p.outputs}")
    if form in (2, 4):
        for f in problem.partition.neumann:
            on = q_tests.mesh.on_face(f)[q_tests.nodes] & (q_tests.axes == f.axis)
            if np.any(on):
                raise ValueError(
                    f"form {form} needs q tests with zero normal trace on Neumann faces (use hdiv_test_basis)"
                )
    mesh = v_tests.mesh
    if q_tests.mesh is not mesh:
        _check_mesh(q_tests, mesh.dim)
    npf, nuf = basis_p.n_features, basis_u.n_features
    pcols = [slice(k * npf, (k + 1) * npf) for k in range(d)]
    ucols = slice(d * npf, d * npf + nuf)
    ncols = d * npf + nuf
    nq_rows = len(q_tests)
    nrows = nq_rows + len(v_tests)
    row_maps = {k: q_tests.row_map(k) for k in range(d)}
    row_maps["v"] = np.where(v_tests.row_map(-1) >= 0, v_tests.row_map(-1) + nq_rows, -1)
    diff_u = form in (1, 3)
    diff_p = form in (2, 3)

    def kernel(pts, S, dS):
        nq, nc, _ = pts.shape
        flat = pts.reshape(-1, d)
        phi_p = basis_p.values(flat).reshape(nq, nc, npf)
        terms = []
        # q rows: int p_k q
        for k in range(d):
            terms.append(_Term(k, pcols[k], 1.0, phi_p, S))
        if diff_u:
            grad_u = [g.reshape(nq, nc, nuf) for g in basis_u.partials(flat, fd_step)]
            for k in range(d):
                terms.append(_Term(k, ucols, -1.0, grad_u[k], S))
        else:
            phi_u = basis_u.values(flat).reshape(nq, nc, nuf)
            for k in range(d):
                terms.append(_Term(k, ucols, 1.0, phi_u, dS[:, :, k]))
        # v rows
        if diff_p:
            grad_p = [g.reshape(nq, nc, npf) for g in basis_p.partials(flat, fd_step)]
            for k in range(d):
                terms.append(_Term("v", pcols[k], -1.0, grad_p[k], S))
        else:
            for k in range(d):
                terms.append(_Term("v", pcols[k], 1.0, phi_p, dS[:, :, k]))
        return terms, [_Rhs("v", _pointwise(problem.f, flat, nq, nc), S)]

    width = (npf + nuf) * (d + 1)
    A, L = _integrate_cells(mesh, row_maps, nrows, ncols, n_per_axis, kernel, width)

    if form in (2, 4) and problem.partition.dirichlet:
        rule = face_rule(mesh, sorted(problem.partition.dirichlet), n_face)
        g = np.asarray(problem.g_d(rule.points), dtype=float)
        for k in range(d):
            L += _scatter_points(mesh, row_maps[k], nrows, rule.points, rule.weights * g * rule.normals[:, k])
    if form in (1, 4) and problem.partition.neumann:
        rule = face_rule(mesh, sorted(problem.partition.neumann), n_face)
        g = np.asarray(problem.g_n(rule.points, rule.normals), dtype=float)
        L += _scatter_points(mesh, row_maps["v"], nrows, rule.points, rule.weights * g)

    system = StackedSystem(ncols, [Block(WEAK, A, L, note=f"mixed form {form}")])
    if form in (1, 3) and dirichlet_samples is not None:
        system.extend(assemble_dirichlet_rows(basis_u, dirichlet_samples, problem.g_d, ucols, ncols))
    if form in (2, 3) and neumann_samples is not None:
        pts, normals = neumann_samples
        system.extend(assemble_normal_trace_rows(basis_p, pts, normals, problem.g_n, ncols))
    return system


def boundary_samples(box, faces, per_face, rng, time_interval=None):
    """Uniform samples on each listed face (space-time lateral faces if ``time_interval``).

    Returns ``(points, normals)`` concatenated in face order.
    """
    box = np.asarray(box, dtype=float).reshape(-1, 2)
    full = box if time_interval is None else np.vstack([box, [time_interval]])
    pts, nrm = [], []
    for face in sorted(Face.parse(f, len(full)) for f in faces):
        if per_face <= 0:
            continue
        s = sample_uniform(face_region(full, face), per_face, rng)
        pts.append(s.points)
        n = np.zeros((per_face, len(full)))
        n[:, face.axis] = face.normal_sign
        nrm.append(n)
    if not pts:
        return np.empty((0, len(full))), np.empty((0, len(full)))
    return np.concatenate(pts), np.concatenate(nrm)
