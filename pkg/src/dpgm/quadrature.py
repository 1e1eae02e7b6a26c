"""Gauss-Legendre rules on cells and boundary faces, and uniform samplers."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .mesh import Face, StructuredMesh

__all__ = [
    "QuadratureRule",
    "SampleSet",
    "gauss_legendre_1d",
    "tensor_rule",
    "cell_rule",
    "face_rule",
    "face_region",
    "sample_uniform",
]

MAX_POINTS = 64


@dataclass(frozen=True)
class QuadratureRule:
    """Points ``(N, d)`` and positive weights ``(N,)``.

    ``exact_degree`` is the per-axis polynomial degree integrated exactly.
    ``per_cell`` is the number of consecutive points belonging to one cell
    (0 when the rule is not cell-structured).  ``normals`` is set for face
    rules and holds the outward unit normal at each point.
    """

    points: np.ndarray
    weights: np.ndarray
    exact_degree: int
    per_cell: int = 0
    normals: np.ndarray | None = None

    def __len__(self):
        return len(self.weights)

    def integrate(self, f):
        """``sum_q w_q f(x_q)``; ``f`` maps ``(N, d)`` points to ``(N, ...)``."""
        vals = np.asarray(f(self.points), dtype=float)
        return np.tensordot(self.weights, vals, axes=(0, 0))


def gauss_legendre_1d(n: int, interval=(-1.0, 1.0)) -> QuadratureRule:
    """``n``-point Gauss-Legendre rule on ``[a, b]``, exact to degree ``2n - 1``."""
    if not (1 <= int(n) <= MAX_POINTS) or int(n) != n:
        raise ValueError(f"number of Gauss points must be in 1..{MAX_POINTS}, got {n}")
    n = int(n)
    a, b = map(float, interval)
    x, w = np.polynomial.legendre.leggauss(n)
    # leggauss nodes are accurate but not bitwise symmetric; symmetrise
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    half = 0.5 * (b - a)
    pts = (a + b) / 2 + half * x
    return QuadratureRule(pts[:, None], half * w, 2 * n - 1)


def tensor_rule(n_per_axis: int, box) -> QuadratureRule:
    """Tensor-product Gauss rule on an axis-aligned box ``[(lo, hi), ...]``.

    Points are ordered in C order over the per-axis node indices.
    """
    box = np.asarray(box, dtype=float).reshape(-1, 2)
    rules = [gauss_legendre_1d(n_per_axis, iv) for iv in box]
    pts = np.array(list(itertools.product(*[r.points[:, 0] for r in rules])))
    wts = np.array([np.prod(c) for c in itertools.product(*[r.weights for r in rules])])
    return QuadratureRule(pts.reshape(-1, len(box)), wts, 2 * n_per_axis - 1)


def cell_rule(mesh: StructuredMesh, n_per_axis: int | None = None, cells=None) -> QuadratureRule:
    """Gauss rule on every cell, concatenated cell by cell.

    Default ``n_per_axis`` is 5 in 2D and 10 in 3D.
    """
    if n_per_axis is None:
        n_per_axis = 5 if mesh.dim <= 2 else 10
    if n_per_axis < 1:
        raise ValueError("n_per_axis must be at least 1")
    ref = tensor_rule(n_per_axis, [(0.0, 1.0)] * mesh.dim)
    origins = mesh.cell_origins(cells)
    pts = origins[:, None, :] + ref.points[None, :, :] * mesh.h
    wts = np.broadcast_to(ref.weights * mesh.cell_volume, (len(origins), len(ref)))
    return QuadratureRule(
        pts.reshape(-1, mesh.dim), wts.reshape(-1).copy(), ref.exact_degree, per_cell=len(ref)
    )


def face_rule(mesh: StructuredMesh, faces, n_per_axis: int = 5) -> QuadratureRule:
    """(dim-1)-dimensional Gauss rule on each cell facet of the listed box faces."""
    dim = mesh.dim
    faces = sorted(Face.parse(f, dim) for f in faces)
    if not faces:
        return QuadratureRule(np.empty((0, dim)), np.empty(0), 2 * n_per_axis - 1,
                              normals=np.empty((0, dim)))
    pts, wts, nrm = [], [], []
    for face in faces:
        free = [k for k in range(dim) if k != face.axis]
        ref = tensor_rule(n_per_axis, [(0.0, 1.0)] * len(free))
        area = float(np.prod(mesh.h[free]))
        fixed = mesh.box[face.axis, face.side]
        for idx in itertools.product(*[range(mesh.shape[k]) for k in free]):
            p = np.empty((len(ref), dim))
            p[:, face.axis] = fixed
            for j, k in enumerate(free):
                p[:, k] = mesh.box[k, 0] + (idx[j] + ref.points[:, j]) * mesh.h[k]
            pts.append(p)
            wts.append(ref.weights * area)
            n = np.zeros((len(ref), dim))
            n[:, face.axis] = face.normal_sign
            nrm.append(n)
    return QuadratureRule(
        np.concatenate(pts), np.concatenate(wts), 2 * n_per_axis - 1, normals=np.concatenate(nrm)
    )


def face_region(box, face) -> np.ndarray:
    """Box with the axis of ``face`` pinned to that face's coordinate."""
    box = np.array(box, dtype=float).reshape(-1, 2)
    face = Face.parse(face, len(box))
    box[face.axis, :] = box[face.axis, face.side]
    return box


@dataclass(frozen=True)
class SampleSet:
    points: np.ndarray
    region: np.ndarray
    seed: object = None
    tag: str = ""

    def __len__(self):
        return len(self.points)


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def sample_uniform(region, n: int, seed=0, tag: str = "") -> SampleSet:
    """``n`` i.i.d. uniform points in an axis-aligned region.

    ``region`` is ``[(lo, hi), ...]``; an axis with ``lo == hi`` is pinned, so
    box faces (and the initial slab ``Omega x {0}``) are regions too.  ``seed``
    may be an integer or a ``numpy.random.Generator`` to continue a stream.
    """
    region = np.asarray(region, dtype=float).reshape(-1, 2)
    if int(n) < 1:
        raise ValueError("need at least one sample")
    extent = region[:, 1] - region[:, 0]
    if np.any(extent < 0):
        raise ValueError("region bounds must satisfy lo <= hi")
    if not np.any(extent > 0):
        raise ValueError("region has zero measure")
    rng = _rng(seed)
    u = rng.random((int(n), len(region)))
    pts = region[:, 0] + u * extent
    return SampleSet(pts, region, None if isinstance(seed, np.random.Generator) else seed, tag)
