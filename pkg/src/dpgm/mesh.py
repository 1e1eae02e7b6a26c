"""Uniform box meshes and nodal multilinear test functions.

Nodes are numbered lexicographically: the multi-index ``(i_0, ..., i_{d-1})``
maps to a flat index in C order, so axis 0 varies slowest.  Faces of the box
are named by an axis letter and a side, e.g. ``"x0"`` is ``x = lo`` and
``"y1"`` is ``y = hi``.  In a space-time box the last axis is time and may be
called ``"t"``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Face",
    "StructuredMesh",
    "BoundaryPartition",
    "TestFunction",
    "TestSpace",
    "build_mesh",
    "scalar_test_basis",
    "hdiv_test_basis",
    "eval_test",
    "eval_test_grad",
    "eval_test_div",
    "reference_shape",
]

_AXIS_LETTERS = {"x": 0, "y": 1, "z": 2}


@dataclass(frozen=True, order=True)
class Face:
    axis: int
    side: int

    @classmethod
    def parse(cls, name, dim: int) -> "Face":
        if isinstance(name, Face):
            return name
        name = str(name).strip().lower()
        if len(name) != 2 or name[1] not in "01":
            raise ValueError(f"bad face name {name!r}; expected e.g. 'x0' or 'y1'")
        if name[0] == "t":
            axis = dim - 1
        elif name[0] in _AXIS_LETTERS:
            axis = _AXIS_LETTERS[name[0]]
        else:
            raise ValueError(f"bad face axis in {name!r}")
        if axis >= dim:
            raise ValueError(f"face {name!r} does not exist in {dim} dimensions")
        return cls(axis, int(name[1]))

    def name(self, time_axis: int | None = None) -> str:
        letter = "t" if self.axis == time_axis else "xyz"[self.axis]
        return f"{letter}{self.side}"

    @property
    def normal_sign(self) -> float:
        return -1.0 if self.side == 0 else 1.0


class StructuredMesh:
    """Axis-aligned box split into congruent cells of size ``h``.

    Parameters
    ----------
    box : sequence of (lo, hi)
    h : float or sequence of float
        Cell width per axis; must divide each extent.
    """

    def __init__(self, box, h):
        box = np.asarray(box, dtype=float).reshape(-1, 2)
        dim = box.shape[0]
        h = np.broadcast_to(np.asarray(h, dtype=float), (dim,)).copy()
        shape = []
        for k in range(dim):
            lo, hi = box[k]
            extent = hi - lo
            if not extent > 0:
                raise ValueError(f"axis {k}: empty interval [{lo}, {hi}]")
            if not h[k] > 0:
                raise ValueError(f"axis {k}: cell width must be positive")
            n = int(round(extent / h[k]))
            if n < 1 or abs(n * h[k] - extent) > 1e-12 * extent:
                raise ValueError(f"axis {k}: h={h[k]} does not divide extent {extent}")
            shape.append(n)
        self.box = box
        self.box.setflags(write=False)
        self.dim = dim
        self.h = h
        self.h.setflags(write=False)
        self.shape = tuple(shape)
        self.node_shape = tuple(n + 1 for n in shape)

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.node_shape))

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.shape))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.h))

    def node_multi(self, flat) -> np.ndarray:
        return np.stack(np.unravel_index(flat, self.node_shape), axis=-1)

    def node_flat(self, multi) -> np.ndarray:
        multi = np.asarray(multi)
        return np.ravel_multi_index(tuple(multi.T), self.node_shape)

    def node_coords(self, flat=None) -> np.ndarray:
        if flat is None:
            flat = np.arange(self.n_nodes)
        return self.box[:, 0] + self.node_multi(flat) * self.h

    def cell_multi(self, flat) -> np.ndarray:
        return np.stack(np.unravel_index(flat, self.shape), axis=-1)

    def cell_origins(self, cells=None) -> np.ndarray:
        if cells is None:
            cells = np.arange(self.n_cells)
        return self.box[:, 0] + self.cell_multi(cells) * self.h

    def local_corners(self) -> np.ndarray:
        """Corner offsets of a cell, ``(2**dim, dim)`` in C order."""
        return np.array(list(itertools.product((0, 1), repeat=self.dim)), dtype=int)

    def cell_nodes(self, cells=None) -> np.ndarray:
        """Flat node indices of each cell's corners, ``(ncells, 2**dim)``."""
        if cells is None:
            cells = np.arange(self.n_cells)
        base = self.cell_multi(cells)
        corners = self.local_corners()
        multi = base[:, None, :] + corners[None, :, :]
        return np.ravel_multi_index(tuple(np.moveaxis(multi, -1, 0)), self.node_shape)

    def node_cells(self, flat: int) -> list[int]:
        """Cells adjacent to a node (at most ``2**dim``)."""
        multi = self.node_multi(flat)
        cells = []
        for off in itertools.product((-1, 0), repeat=self.dim):
            c = multi + np.array(off)
            if np.all(c >= 0) and np.all(c < np.array(self.shape)):
                cells.append(int(np.ravel_multi_index(tuple(c), self.shape)))
        return sorted(cells)

    def on_face(self, face: Face) -> np.ndarray:
        """Boolean mask over all nodes lying on ``face``."""
        idx = self.node_multi(np.arange(self.n_nodes))[:, face.axis]
        return idx == (0 if face.side == 0 else self.node_shape[face.axis] - 1)

    def faces(self) -> list[Face]:
        return [Face(k, s) for k in range(self.dim) for s in (0, 1)]

    def contains(self, x, tol=1e-12) -> np.ndarray:
        x = np.atleast_2d(x)
        return np.all((x >= self.box[:, 0] - tol) & (x <= self.box[:, 1] + tol), axis=1)

    def __repr__(self):
        return f"StructuredMesh(box={self.box.tolist()}, h={self.h.tolist()})"


def build_mesh(box, h) -> StructuredMesh:
    return StructuredMesh(box, h)


class BoundaryPartition:
    """Split of the spatial boundary into Dirichlet and Neumann faces.

    ``dim`` is the spatial dimension; time faces of a space-time box are not
    part of the partition.
    """

    def __init__(self, dim: int, dirichlet=(), neumann=None):
        self.dim = dim
        every = {Face(k, s) for k in range(dim) for s in (0, 1)}
        self.dirichlet = frozenset(Face.parse(f, dim) for f in dirichlet)
        if neumann is None:
            self.neumann = frozenset(every - self.dirichlet)
        else:
            self.neumann = frozenset(Face.parse(f, dim) for f in neumann)
        if self.dirichlet & self.neumann:
            raise ValueError("a face cannot be both Dirichlet and Neumann")
        if (self.dirichlet | self.neumann) != every:
            missing = sorted(f.name() for f in every - self.dirichlet - self.neumann)
            raise ValueError(f"faces {missing} are neither Dirichlet nor Neumann")

    @classmethod
    def all_dirichlet(cls, dim):
        return cls(dim, [Face(k, s) for k in range(dim) for s in (0, 1)])

    def to_dict(self) -> dict:
        return {
            "dirichlet": sorted(f.name() for f in self.dirichlet),
            "neumann": sorted(f.name() for f in self.neumann),
        }

    def __repr__(self):
        return f"BoundaryPartition({self.to_dict()})"


@dataclass(frozen=True)
class TestFunction:
    """One nodal hat function; ``axis`` is set for a vector component."""

    node: tuple
    axis: int | None = None

    __test__ = False  # not a pytest class


class TestSpace:
    """Ordered collection of nodal test functions on one mesh.

    ``nodes[i]`` is the flat node index of function ``i`` and ``axes[i]`` its
    vector slot (``-1`` for a scalar function).
    """

    __test__ = False

    def __init__(self, mesh: StructuredMesh, nodes, axes=None):
        self.mesh = mesh
        self.nodes = np.asarray(nodes, dtype=np.int64)
        if axes is None:
            axes = np.full(self.nodes.shape, -1)
        self.axes = np.asarray(axes, dtype=np.int64)
        self.nodes.setflags(write=False)
        self.axes.setflags(write=False)

    def __len__(self):
        return len(self.nodes)

    def __getitem__(self, i) -> TestFunction:
        multi = tuple(int(v) for v in self.mesh.node_multi(self.nodes[i]))
        axis = int(self.axes[i])
        return TestFunction(multi, None if axis < 0 else axis)

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    @property
    def is_vector(self) -> bool:
        return bool(np.any(self.axes >= 0))

    def row_map(self, axis: int = -1) -> np.ndarray:
        """Row index of each mesh node's function in slot ``axis`` (``-1`` if absent)."""
        rows = np.full(self.mesh.n_nodes, -1, dtype=np.int64)
        sel = np.flatnonzero(self.axes == axis)
        rows[self.nodes[sel]] = sel
        return rows

    def subset(self, nv: int | None, mode: str = "prefix", seed: int = 0) -> "TestSpace":
        """Keep ``nv`` functions: the lexicographic prefix, or a seeded random pick."""
        if nv is None or nv >= len(self):
            return self
        if nv < 1:
            raise ValueError("nv must be positive")
        if mode == "prefix":
            keep = np.arange(nv)
        elif mode == "random":
            rng = np.random.Generator(np.random.PCG64(seed))
            keep = np.sort(rng.choice(len(self), size=nv, replace=False))
        else:
            raise ValueError(f"unknown subset mode {mode!r}")
        return TestSpace(self.mesh, self.nodes[keep], self.axes[keep])

    def values(self, x) -> np.ndarray:
        """Dense ``(N, len(self))`` value matrix; for small checks only."""
        x = np.atleast_2d(x)
        return np.stack([_hat_value(self.mesh, n, x) for n in self.nodes], axis=1)


def _excluded_nodes(mesh, faces) -> np.ndarray:
    mask = np.zeros(mesh.n_nodes, dtype=bool)
    for f in faces:
        mask |= mesh.on_face(f)
    return mask


def scalar_test_basis(mesh, partition=None, constraint="dirichlet", extra_faces=()):
    """Scalar nodal test functions.

    Parameters
    ----------
    constraint : {"dirichlet", "none"}
        ``"dirichlet"`` drops every node on a Dirichlet face (corners shared
        with Neumann faces included); ``"none"`` keeps all nodes.
    extra_faces : iterable of face names
        Further faces whose nodes are dropped, e.g. ``"t0"`` in space-time.
    """
    constraint = {"vanish_on_dirichlet": "dirichlet", None: "none"}.get(constraint, constraint)
    faces = [Face.parse(f, mesh.dim) for f in extra_faces]
    if constraint == "dirichlet":
        if partition is None:
            raise ValueError("dirichlet constraint needs a boundary partition")
        faces += list(partition.dirichlet)
    elif constraint != "none":
        raise ValueError(f"unknown constraint {constraint!r}")
    keep = np.flatnonzero(~_excluded_nodes(mesh, faces))
    return TestSpace(mesh, keep)


def hdiv_test_basis(mesh, partition) -> TestSpace:
    """Single-component vector test fields with zero normal trace on Neumann faces.

    Component ``k`` keeps every node not lying on a Neumann face whose normal
    is along axis ``k``.  Functions of component 0 come first.
    """
    if mesh.dim != 2:
        raise NotImplementedError("H(div) test fields are only built on 2D meshes")
    nodes, axes = [], []
    for k in range(mesh.dim):
        faces = [f for f in partition.neumann if f.axis == k]
        keep = np.flatnonzero(~_excluded_nodes(mesh, faces))
        nodes.append(keep)
        axes.append(np.full(keep.shape, k))
    return TestSpace(mesh, np.concatenate(nodes), np.concatenate(axes))


def _local_coords(mesh, node, x):
    node_x = mesh.node_coords(np.atleast_1d(node))[0]
    return (np.atleast_2d(x) - node_x) / mesh.h


def _hat_value(mesh, node, x):
    t = _local_coords(mesh, node, x)
    return np.prod(np.clip(1.0 - np.abs(t), 0.0, None), axis=1)


def _hat_grad(mesh, node, x):
    t = _local_coords(mesh, node, x)
    vals = np.clip(1.0 - np.abs(t), 0.0, None)
    slopes = np.where(np.abs(t) < 1.0, -np.sign(t), 0.0) / mesh.h
    out = np.empty_like(t)
    for k in range(mesh.dim):
        others = np.prod(np.delete(vals, k, axis=1), axis=1)
        out[:, k] = slopes[:, k] * others
    return out


def _node_of(mesh, fn: TestFunction):
    return mesh.node_flat(np.asarray(fn.node))


def eval_test(mesh, fn: TestFunction, x):
    """Value of ``fn``'s scalar profile at points ``x``."""
    x = np.asarray(x, dtype=float)
    v = _hat_value(mesh, _node_of(mesh, fn), x)
    return v[0] if x.ndim == 1 else v


def eval_test_grad(mesh, fn: TestFunction, x):
    """Gradient of the scalar profile; ``(N, dim)``."""
    x = np.asarray(x, dtype=float)
    g = _hat_grad(mesh, _node_of(mesh, fn), x)
    return g[0] if x.ndim == 1 else g


def eval_test_div(mesh, fn: TestFunction, x):
    """Divergence of a vector-component test field."""
    if fn.axis is None:
        raise ValueError("divergence is only defined for vector-component test functions")
    x = np.asarray(x, dtype=float)
    d = _hat_grad(mesh, _node_of(mesh, fn), x)[:, fn.axis]
    return d[0] if x.ndim == 1 else d


def reference_shape(ref_points, h):
    """Multilinear corner shape functions on one cell.

    ``ref_points`` are in ``[0, 1]^dim``.  Returns values ``(2**dim, nq)`` and
    physical gradients ``(2**dim, nq, dim)`` for a cell of widths ``h``;
    corners are in the order of :meth:`StructuredMesh.local_corners`.
    """
    ref_points = np.atleast_2d(ref_points)
    nq, dim = ref_points.shape
    h = np.broadcast_to(np.asarray(h, dtype=float), (dim,))
    corners = np.array(list(itertools.product((0, 1), repeat=dim)))
    # per-axis factor: xi for corner side 1, 1 - xi for side 0
    fac = np.where(corners[:, None, :] == 1, ref_points[None], 1.0 - ref_points[None])
    dfac = np.where(corners[:, None, :] == 1, 1.0, -1.0) / h
    vals = np.prod(fac, axis=2)
    grads = np.empty((len(corners), nq, dim))
    for k in range(dim):
        grads[:, :, k] = np.prod(np.delete(fac, k, axis=2), axis=2) * dfac[:, :, k]
    return vals, grads
