import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dpgm.features import FeatureBasis, NetworkArch, ProbeBasis, build_basis, central_difference


def _scalar_feature(W, b, x, j):
    """tanh(w_j . x + b_j) recomputed one coordinate at a time."""
    s = b[j]
    for k in range(len(x)):
        s += W[j, k] * x[k]
    return math.tanh(s)


def test_fc_basis_has_requested_width():
    basis = build_basis(NetworkArch("fc", (2, 50)), seed=7)
    x = np.random.default_rng(0).uniform(0, 1, (13, 2))
    assert basis.n_features == 50
    assert basis.values(x).shape == (13, 50)


def test_same_seed_gives_identical_weights():
    arch = NetworkArch.resnet(3, 20, depth=3)
    a, b = build_basis(arch, 99), build_basis(arch, 99)
    for (Wa, ba), (Wb, bb) in zip(a.layers, b.layers):
        assert np.array_equal(Wa, Wb) and np.array_equal(ba, bb)
    c = build_basis(arch, 100)
    assert not np.array_equal(a.layers[0][0], c.layers[0][0])


def test_weights_are_frozen():
    basis = build_basis(NetworkArch("fc", (2, 5)), 1)
    with pytest.raises(ValueError):
        basis.layers[0][0][0, 0] = 3.0


def test_uniform_entries_within_radius():
    basis = build_basis(NetworkArch("fc", (2, 40, 40), radius=0.3), 5)
    for W, b in basis.layers:
        assert np.max(np.abs(W)) <= 0.3 and np.max(np.abs(b)) <= 0.3


def test_xavier_bound_resnet_depth3():
    basis = build_basis(NetworkArch.resnet(2, 100, depth=3), 11)
    bound = math.sqrt(6.0 / 200.0)
    # layers[1:3] form the first residual block: two 100 x 100 maps
    for W, b in basis.layers[1:3]:
        assert W.shape == (100, 100)
        assert np.max(np.abs(W)) <= bound
        assert np.max(np.abs(b)) <= bound


@pytest.mark.parametrize(
    "kw, layer",
    [
        ({"widths": (2, 0)}, "layer 1"),
        ({"widths": (0, 5)}, "layer 0"),
        ({"widths": (2, 5, -1)}, "layer 2"),
    ],
)
def test_invalid_width_names_layer(kw, layer):
    with pytest.raises(ValueError, match=layer):
        NetworkArch(**kw)


def test_resnet_requires_uniform_width():
    with pytest.raises(ValueError, match="share one width"):
        NetworkArch("resnet", (2, 10, 12))


def test_unknown_kind_and_init():
    with pytest.raises(ValueError):
        NetworkArch("cnn", (2, 3))
    with pytest.raises(ValueError):
        NetworkArch("fc", (2, 3), init="normal")


def test_zero_weights_give_zero_features():
    arch = NetworkArch("fc", (2, 4, 3))
    layers = [(np.zeros((4, 2)), np.zeros(4)), (np.zeros((3, 4)), np.zeros(3))]
    basis = FeatureBasis(arch, layers)
    assert np.all(basis.values(np.array([[0.3, -2.0], [5.0, 1.0]])) == 0.0)


def test_layer_shape_mismatch_rejected():
    with pytest.raises(ValueError, match="do not match"):
        FeatureBasis(NetworkArch("fc", (2, 4)), [(np.zeros((4, 3)), np.zeros(4))])


def test_fc_features_match_scalar_recomputation(rng):
    basis = build_basis(NetworkArch("fc", (2, 50)), 3)
    W, b = basis.layers[0]
    for x in rng.uniform(-1, 2, (20, 2)):
        got = basis.eval_features(x)
        want = np.array([_scalar_feature(W, b, x, j) for j in range(50)])
        assert np.max(np.abs(got - want)) <= 1e-15


def test_fc_features_bounded(rng):
    basis = build_basis(NetworkArch("fc", (3, 30, 30)), 8)
    vals = basis.values(rng.uniform(-50, 50, (500, 3)))
    assert np.all(np.abs(vals) <= 1.0)


def test_resnet_block_recomputation(rng):
    basis = build_basis(NetworkArch.resnet(2, 8, depth=2), 4)
    (W0, b0), (W1, b1), (W2, b2) = basis.layers
    for x in rng.uniform(0, 1, (10, 2)):
        h0 = [math.tanh(sum(W0[i, k] * x[k] for k in range(2)) + b0[i]) for i in range(8)]
        inner = [math.tanh(sum(W1[i, k] * h0[k] for k in range(8)) + b1[i]) for i in range(8)]
        outer = [math.tanh(sum(W2[i, k] * inner[k] for k in range(8)) + b2[i]) for i in range(8)]
        want = np.array(outer) + np.array(h0)
        assert np.max(np.abs(basis.eval_features(x) - want)) <= 1e-15


def test_eval_features_dimension_mismatch():
    basis = build_basis(NetworkArch("fc", (2, 5)), 0)
    with pytest.raises(ValueError, match="dimension"):
        basis.eval_features(np.zeros(3))


def test_fd_exact_on_quadratic_probe():
    probe = ProbeBasis([lambda p: p[:, 0] ** 2], input_dim=2)
    x = np.array([0.37, -1.2])
    g = probe.eval_feature_grad(x, step=1e-3)
    assert g[0, 0] == pytest.approx(2 * 0.37, abs=1e-12)
    assert g[0, 1] == pytest.approx(0.0, abs=1e-12)


def test_fd_step_must_be_positive():
    basis = build_basis(NetworkArch("fc", (2, 5)), 0)
    for bad in (0.0, -1e-6):
        with pytest.raises(ValueError, match="step"):
            basis.eval_feature_grad(np.zeros(2), bad)
        with pytest.raises(ValueError, match="step"):
            central_difference(basis.values, np.zeros((1, 2)), bad)


@pytest.mark.parametrize("input_dim", [2, 3])
def test_fd_matches_chain_rule(input_dim, rng):
    basis = build_basis(NetworkArch("fc", (input_dim, 200)), 21)
    W, b = basis.layers[0]
    x = rng.uniform(0, 1, (100, input_dim))
    t = np.tanh(x @ W.T + b)
    exact = (1 - t**2)[:, :, None] * W[None, :, :]
    assert np.max(np.abs(basis.gradients(x) - exact)) <= 1e-7


def test_fd_shortcut_agrees_with_generic_quotient(rng):
    basis = build_basis(NetworkArch("fc", (3, 64)), 2)
    x = rng.uniform(0, 1, (50, 3))
    generic = central_difference(basis.values, x, 1e-6)
    assert np.max(np.abs(basis.gradients(x) - generic)) <= 1e-8


def test_deep_fd_matches_generic_quotient(rng):
    basis = build_basis(NetworkArch.resnet(2, 16, depth=3), 6)
    x = rng.uniform(0, 1, (30, 2))
    generic = central_difference(basis.values, x, 1e-6)
    assert np.max(np.abs(basis.gradients(x) - generic)) <= 1e-8


def test_richardson_truncation_shrinks_quadratically():
    basis = build_basis(NetworkArch("fc", (2, 10)), 12)
    W, b = basis.layers[0]
    x = np.array([0.3, 0.6])
    t = np.tanh(W @ x + b)
    exact = (1 - t**2) * W[:, 0]
    e1 = np.abs(basis.eval_feature_grad(x, 1e-4)[:, 0] - exact)
    e2 = np.abs(basis.eval_feature_grad(x, 1e-5)[:, 0] - exact)
    j = int(np.argmax(e1))
    assert 50 < e1[j] / e2[j] < 200


def test_reconstruct_zero_and_unit(rng):
    basis = build_basis(NetworkArch("fc", (2, 12)), 4)
    x = rng.uniform(0, 1, (7, 2))
    assert np.all(basis.reconstruct(np.zeros(12), x) == 0)
    e = np.zeros(12)
    e[5] = 1.0
    assert np.array_equal(basis.reconstruct(e, x)[:, 0], basis.values(x)[:, 5])


def test_reconstruct_matches_extended_precision(rng):
    basis = build_basis(NetworkArch("fc", (2, 100)), 17)
    c = rng.normal(size=100)
    x = rng.uniform(0, 1, (5, 2))
    phi = basis.values(x)
    got = basis.reconstruct(c, x)[:, 0]
    with mpmath.workdps(50):
        for i in range(5):
            want = mpmath.fsum(mpmath.mpf(ci) * mpmath.mpf(pi) for ci, pi in zip(c, phi[i]))
            scale = mpmath.fsum(abs(mpmath.mpf(ci) * mpmath.mpf(pi)) for ci, pi in zip(c, phi[i]))
            assert abs(got[i] - want) <= 1e-13 * scale


def test_reconstruct_vector_field_and_length_check(rng):
    basis = build_basis(NetworkArch("fc", (2, 6), outputs=2), 1)
    c = rng.normal(size=12)
    x = rng.uniform(0, 1, (4, 2))
    out = basis.reconstruct(c, x)
    assert out.shape == (4, 2)
    assert np.allclose(out[:, 1], basis.values(x) @ c[6:])
    assert basis.reconstruct(c, x[0]).shape == (2,)
    with pytest.raises(ValueError, match="12 coefficients"):
        basis.reconstruct(np.zeros(11), x)
    with pytest.raises(ValueError, match="finite"):
        basis.reconstruct(np.full(12, np.nan), x)


@given(a=st.floats(-5, 5), b=st.floats(-5, 5), seed=st.integers(0, 2**63))
def test_reconstruct_is_linear(a, b, seed):
    basis = build_basis(NetworkArch("fc", (2, 9)), seed)
    g = np.random.default_rng(seed % 1000)
    c1, c2 = g.normal(size=9), g.normal(size=9)
    x = g.uniform(0, 1, (6, 2))
    lhs = basis.reconstruct(a * c1 + b * c2, x)
    rhs = a * basis.reconstruct(c1, x) + b * basis.reconstruct(c2, x)
    scale = np.abs(basis.values(x)) @ (np.abs(a * c1) + np.abs(b * c2))
    assert np.all(np.abs(lhs - rhs)[:, 0] <= 1e-13 * scale + 1e-300)


@given(seed=st.integers(0, 2**64 - 1))
def test_any_64bit_seed_is_deterministic(seed):
    arch = NetworkArch("fc", (2, 4))
    assert np.array_equal(build_basis(arch, seed).layers[0][0], build_basis(arch, seed).layers[0][0])


def test_arch_roundtrip_dict():
    arch = NetworkArch.resnet(3, 16, depth=4)
    assert NetworkArch(**arch.to_dict()) == arch
    assert arch.depth == 4 and arch.input_dim == 3 and arch.n_features == 16
