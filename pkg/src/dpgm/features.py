"""Frozen random-weight networks used as global trial bases.

Only the output layer of these networks is ever "solved for"; every hidden
weight is drawn once from a seeded generator and then frozen.  The neurons of
the last hidden layer are therefore a fixed family of smooth functions
``phi_1, ..., phi_n`` and a trial function is a linear combination of them.

Derivatives are taken with central differences rather than automatic
differentiation.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "NetworkArch",
    "FeatureBasis",
    "ProbeBasis",
    "build_basis",
    "central_difference",
    "DEFAULT_FD_STEP",
]

DEFAULT_FD_STEP = 1e-6

_KINDS = ("fc", "resnet")
_INITS = ("uniform", "xavier")


@dataclass(frozen=True)
class NetworkArch:
    """Shape of a random-feature network.

    Parameters
    ----------
    kind : {"fc", "resnet"}
        Fully connected stack or residual blocks of uniform width.
    widths : tuple of int
        ``(n_0, ..., n_{D-1})``.  ``n_0`` is the input dimension (``d`` for
        stationary problems, ``d + 1`` in space-time) and ``n_{D-1}`` is the
        number of basis functions.
    outputs : int
        Number of output components sharing the features (1 for a scalar
        field, ``d`` for a vector field).
    init : {"uniform", "xavier"}
    radius : float
        Half-range ``r`` of ``U(-r, r)``; ignored for ``"xavier"``.
    """

    kind: str = "fc"
    widths: tuple[int, ...] = (2, 50)
    outputs: int = 1
    init: str = "uniform"
    radius: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        if self.kind not in _KINDS:
            raise ValueError(f"unknown network kind {self.kind!r}; expected one of {_KINDS}")
        if self.init not in _INITS:
            raise ValueError(f"unknown init {self.init!r}; expected one of {_INITS}")
        if len(self.widths) < 2:
            raise ValueError("a network needs at least an input layer and one hidden layer")
        for layer, w in enumerate(self.widths):
            if w <= 0:
                raise ValueError(f"layer {layer} has non-positive width {w}")
        if self.kind == "resnet" and len(set(self.widths[1:])) != 1:
            raise ValueError(
                f"resnet blocks must share one width, got widths {self.widths[1:]}"
            )
        if self.outputs <= 0:
            raise ValueError("outputs must be positive")
        if self.init == "uniform" and not self.radius > 0:
            raise ValueError("uniform init needs a positive radius")

    @property
    def depth(self) -> int:
        return len(self.widths)

    @property
    def input_dim(self) -> int:
        return self.widths[0]

    @property
    def n_features(self) -> int:
        return self.widths[-1]

    @classmethod
    def fully_connected(cls, input_dim, width, depth=2, **kw):
        return cls("fc", (input_dim,) + (width,) * (depth - 1), **kw)

    @classmethod
    def resnet(cls, input_dim, width, depth=2, **kw):
        kw.setdefault("init", "xavier")
        return cls("resnet", (input_dim,) + (width,) * (depth - 1), **kw)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "widths": list(self.widths),
            "outputs": self.outputs,
            "init": self.init,
            "radius": self.radius,
        }


def central_difference(fn: Callable, x, step: float = DEFAULT_FD_STEP) -> np.ndarray:
    """Central-difference Jacobian of a vector-valued point function.

    ``fn`` maps an ``(N, d)`` array to ``(N, n)``.  Returns ``(N, n, d)`` with
    entry ``[i, j, k] = (fn(x_i + step e_k)_j - fn(x_i - step e_k)_j) / (2 step)``.
    """
    if not step > 0:
        raise ValueError(f"finite-difference step must be positive, got {step}")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    npts, dim = x.shape
    cols = []
    for k in range(dim):
        shift = np.zeros(dim)
        shift[k] = step
        cols.append((fn(x + shift) - fn(x - shift)) / (2.0 * step))
    return np.stack(cols, axis=-1)


class _BasisBase:
    """Evaluation helpers shared by random and probe bases."""

    n_features: int
    input_dim: int
    outputs: int = 1

    def values(self, x) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    def _check_points(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        x = np.atleast_2d(x)
        if x.shape[-1] != self.input_dim:
            raise ValueError(
                f"points have dimension {x.shape[-1]}, basis expects {self.input_dim}"
            )
        return x

    def gradients(self, x, step: float = DEFAULT_FD_STEP) -> np.ndarray:
        """Feature Jacobian by central differences, shape ``(N, n_features, input_dim)``."""
        return np.stack(self.partials(x, step), axis=-1)

    def partials(self, x, step: float = DEFAULT_FD_STEP, axes=None) -> list:
        """Central-difference partials as a list of contiguous ``(N, n_features)`` arrays."""
        x = self._check_points(x)
        if not step > 0:
            raise ValueError(f"finite-difference step must be positive, got {step}")
        axes = range(self.input_dim) if axes is None else axes
        out = []
        for k in axes:
            shift = np.zeros(self.input_dim)
            shift[k] = step
            out.append((self.values(x + shift) - self.values(x - shift)) / (2.0 * step))
        return out

    def eval_features(self, x) -> np.ndarray:
        """Features at a single point."""
        x = np.asarray(x, dtype=float)
        if x.ndim != 1:
            raise ValueError("eval_features takes one point; use values() for batches")
        return self.values(x[None, :])[0]

    def eval_feature_grad(self, x, step: float = DEFAULT_FD_STEP) -> np.ndarray:
        """Feature Jacobian at a single point, shape ``(n_features, input_dim)``."""
        x = np.asarray(x, dtype=float)
        if x.ndim != 1:
            raise ValueError("eval_feature_grad takes one point")
        return self.gradients(x[None, :], step)[0]

    def coefficient_matrix(self, coeffs) -> np.ndarray:
        c = np.asarray(coeffs, dtype=float)
        expected = self.outputs * self.n_features
        if c.size != expected:
            raise ValueError(
                f"expected {expected} coefficients ({self.outputs} x {self.n_features}), got {c.size}"
            )
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        return c.reshape(self.outputs, self.n_features)

    def reconstruct(self, coeffs, x) -> np.ndarray:
        """Evaluate ``sum_j c[i, j] phi_j(x)`` for each output component ``i``.

        Returns shape ``(N, outputs)`` for a batch of points or ``(outputs,)``
        for a single point.
        """
        c = self.coefficient_matrix(coeffs)
        x = np.asarray(x, dtype=float)
        phi = self.values(np.atleast_2d(x))
        out = phi @ c.T
        return out[0] if x.ndim == 1 else out

    def reconstruct_grad(self, coeffs, x, step: float = DEFAULT_FD_STEP) -> np.ndarray:
        """Gradient of the reconstructed field, shape ``(N, outputs, input_dim)``."""
        c = self.coefficient_matrix(coeffs)
        dphi = self.gradients(x, step)
        return np.einsum("ij,njk->nik", c, dphi)


class FeatureBasis(_BasisBase):
    """Random tanh network with frozen hidden weights.

    ``layers`` holds ``(W, b)`` pairs in evaluation order.  For a fully
    connected network there is one pair per hidden layer.  For a ResNet the
    first pair is the input layer and each following *two* pairs form one
    residual block.
    """

    def __init__(self, arch: NetworkArch, layers, seed=None):
        self.arch = arch
        self.seed = seed
        frozen = []
        for W, b in layers:
            W = np.array(W, dtype=float)
            b = np.array(b, dtype=float)
            W.setflags(write=False)
            b.setflags(write=False)
            frozen.append((W, b))
        self.layers = tuple(frozen)
        expected = _layer_shapes(arch)
        got = [(W.shape, b.shape) for W, b in self.layers]
        if got != expected:
            raise ValueError(f"layer shapes {got} do not match architecture {expected}")
        self.input_dim = arch.input_dim
        self.n_features = arch.n_features
        self.outputs = arch.outputs

    def values(self, x) -> np.ndarray:
        x = self._check_points(x)
        return self._from_input_layer(self._input_preactivation(x))

    def _input_preactivation(self, x):
        W0, b0 = self.layers[0]
        z = np.empty((x.shape[0], W0.shape[0]))
        if x.shape[1] <= 4:
            # tiny inner dimension: explicit sum beats a GEMM call
            np.multiply(x[:, :1], W0[:, 0], out=z)
            for k in range(1, x.shape[1]):
                z += x[:, k:k + 1] * W0[:, k]
            z += b0
        else:
            np.matmul(x, W0.T, out=z)
            z += b0
        return z

    def _from_input_layer(self, z):
        h = np.tanh(z, out=z)
        if self.arch.kind == "fc":
            for W, b in self.layers[1:]:
                h = np.tanh(h @ W.T + b)
            return h
        for i in range(1, len(self.layers), 2):
            (W1, b1), (W2, b2) = self.layers[i], self.layers[i + 1]
            h = np.tanh(np.tanh(h @ W1.T + b1) @ W2.T + b2) + h
        return h

    def partials(self, x, step: float = DEFAULT_FD_STEP, axes=None) -> list:
        # Evaluating at x +- step e_k only moves the input-layer pre-activation
        # by +- step * W0[:, k]; reuse it instead of redoing the first product.
        x = self._check_points(x)
        if not step > 0:
            raise ValueError(f"finite-difference step must be positive, got {step}")
        axes = range(self.input_dim) if axes is None else axes
        z = self._input_preactivation(x)
        W0 = self.layers[0][0]
        out = []
        if self.arch.kind == "fc" and len(self.layers) == 1:
            # One tanh layer: the central quotient has the closed form
            # (tanh(z + a) - tanh(z - a)) / 2h = s (1 - t^2) / (h (1 - t^2 s^2))
            # with t = tanh(z), s = tanh(a), a = h W0[:, k].  Same quantity,
            # fewer transcendental evaluations and less cancellation.
            t2 = np.tanh(z, out=z)
            t2 *= t2
            sech2 = 1.0 - t2
            for k in axes:
                sk = np.tanh(step * W0[:, k])
                denom = t2 * (-(sk * sk))
                denom += 1.0
                np.divide(sech2 * (sk / step), denom, out=denom)
                out.append(denom)
            return out
        for k in axes:
            dz = step * W0[:, k]
            plus = self._from_input_layer(z + dz)
            plus -= self._from_input_layer(z - dz)
            plus *= 1.0 / (2.0 * step)
            out.append(plus)
        return out

    __call__ = values

    def __repr__(self):
        return f"FeatureBasis({self.arch.kind}, widths={self.arch.widths}, seed={self.seed})"


class ProbeBasis(_BasisBase):
    """Basis made of user-supplied functions; a test hook.

    Each function maps an ``(N, d)`` array to ``(N,)``.  Gradients come from
    central differences unless ``grads`` (functions returning ``(N, d)``) are
    given.
    """

    def __init__(self, funcs: Sequence[Callable], input_dim: int, outputs: int = 1, grads=None):
        self.funcs = list(funcs)
        self.grads = None if grads is None else list(grads)
        self.input_dim = input_dim
        self.n_features = len(self.funcs)
        self.outputs = outputs

    def values(self, x) -> np.ndarray:
        x = self._check_points(x)
        return np.stack(
            [np.broadcast_to(np.asarray(f(x), dtype=float), (x.shape[0],)) for f in self.funcs],
            axis=1,
        )

    def partials(self, x, step: float = DEFAULT_FD_STEP, axes=None) -> list:
        if self.grads is None:
            return super().partials(x, step, axes)
        x = self._check_points(x)
        axes = range(self.input_dim) if axes is None else axes
        g = np.stack(
            [np.broadcast_to(np.asarray(g(x), dtype=float), x.shape) for g in self.grads], axis=1
        )
        return [np.ascontiguousarray(g[:, :, k]) for k in axes]


def _layer_shapes(arch: NetworkArch):
    w = arch.widths
    if arch.kind == "fc":
        return [((w[l], w[l - 1]), (w[l],)) for l in range(1, len(w))]
    n = w[1]
    shapes = [((n, w[0]), (n,))]
    for _ in range(len(w) - 1):
        shapes += [((n, n), (n,)), ((n, n), (n,))]
    return shapes


def build_basis(arch: NetworkArch, seed: int) -> FeatureBasis:
    """Draw the hidden weights of ``arch`` from a PCG64 stream seeded by ``seed``.

    Draws are made layer by layer, weight matrix (row-major) before bias, so
    a given ``(arch, seed)`` reproduces bit-identical weights on any platform
    with the same NumPy bit generator.  Uniform init samples ``U(-r, r)``;
    Xavier init uses half-range ``sqrt(6 / (fan_in + fan_out))`` for both the
    matrix and the bias of each linear map.
    """
    rng = np.random.Generator(np.random.PCG64(int(seed) & 0xFFFFFFFFFFFFFFFF))
    layers = []
    for wshape, bshape in _layer_shapes(arch):
        if arch.init == "uniform":
            r = arch.radius
        else:
            fan_out, fan_in = wshape
            r = np.sqrt(6.0 / (fan_in + fan_out))
        W = rng.uniform(-r, r, size=wshape)
        b = rng.uniform(-r, r, size=bshape)
        layers.append((W, b))
    return FeatureBasis(arch, layers, seed=seed)
