import math

import numpy as np
import pytest

from dpgm.expr import ExpressionError, parse_expression
from dpgm.mesh import BoundaryPartition
from dpgm.problems import ProblemSpec, custom_problem, example_heat, example_poisson, example_wave, preset

PI = math.pi


def _pt(*v):
    return np.array([v], dtype=float)


def test_example1_values():
    p = example_poisson()
    assert p.f(_pt(0.0, 0.5))[0] == pytest.approx(2 * PI**2, rel=1e-15)
    assert p.u_exact(_pt(0.0, 0.5))[0] == pytest.approx(1.0, rel=1e-15)
    assert p.g_n(_pt(0.0, 0.3), _pt(-1.0, 0.0))[0] == 0.0


def test_example2_values():
    p = example_heat()
    assert p.f(_pt(1, 1, 0))[0] == pytest.approx(PI**2 - 2, rel=1e-14)
    assert p.h0(_pt(1, 1))[0] == pytest.approx(2.0, rel=1e-15)
    assert p.u_exact(_pt(1, 1, 1))[0] == pytest.approx(2 / math.e, rel=1e-15)


def test_example3_values():
    p = example_wave()
    assert p.w0(_pt(1, 1))[0] == pytest.approx(PI / 2, rel=1e-15)
    assert p.f(_pt(1, 1, 1))[0] == pytest.approx(PI**2 / 4, rel=1e-15)
    assert p.h0(_pt(0.3, 0.4))[0] == 0.0


def _fd_laplace(u, x, h=1e-5, axes=(0, 1)):
    out = np.zeros(len(x))
    for k in axes:
        e = np.zeros(x.shape[1])
        e[k] = h
        out += (u(x + e) - 2 * u(x) + u(x - e)) / h**2
    return out


def _fd_t(u, x, h=1e-5, order=1):
    e = np.zeros(x.shape[1])
    e[-1] = h
    if order == 1:
        return (u(x + e) - u(x - e)) / (2 * h)
    return (u(x + e) - 2 * u(x) + u(x - e)) / h**2


def test_manufactured_residuals(rng):
    p1 = example_poisson()
    x = rng.uniform(0, 1, (200, 2))
    assert np.max(np.abs(-_fd_laplace(p1.u_exact, x) - p1.f(x))) <= 1e-5 * 2 * PI**2
    p2 = example_heat()
    xt = rng.uniform(0, 1, (200, 3))
    r2 = _fd_t(p2.u_exact, xt) - _fd_laplace(p2.u_exact, xt) - p2.f(xt)
    assert np.max(np.abs(r2)) <= 1e-4
    p3 = example_wave()
    r3 = _fd_t(p3.u_exact, xt, order=2) - _fd_laplace(p3.u_exact, xt) - p3.f(xt)
    assert np.max(np.abs(r3)) <= 1e-4


def test_gradients_match_difference_quotients(rng):
    for p in (example_poisson(), example_heat(), example_wave()):
        x = rng.uniform(0.05, 0.95, (50, p.input_dim))
        g = p.grad_exact(x)
        assert g.shape == (50, p.dim)
        for k in range(p.dim):
            e = np.zeros(p.input_dim)
            e[k] = 1e-6
            fd = (p.u_exact(x + e) - p.u_exact(x - e)) / 2e-6
            assert np.allclose(g[:, k], fd, atol=1e-7)


def test_boundary_and_initial_consistency(rng):
    p1 = example_poisson()
    s = rng.uniform(0, 1, 100)
    for y in (0.0, 1.0):
        pts = np.stack([s, np.full(100, y)], 1)
        assert np.max(np.abs(p1.g_d(pts) - p1.u_exact(pts))) <= 1e-14
    for x in (0.0, 1.0):
        pts = np.stack([np.full(100, x), s], 1)
        assert np.max(np.abs(p1.grad_exact(pts)[:, 0])) <= 1e-14
    xs = rng.uniform(0, 1, (100, 2))
    lifted = np.hstack([xs, np.zeros((100, 1))])
    p2, p3 = example_heat(), example_wave()
    assert np.max(np.abs(p2.h0(xs) - p2.u_exact(lifted))) <= 1e-14
    assert np.max(np.abs(p3.u_exact(lifted))) == 0.0
    assert np.allclose(p3.w0(xs), _fd_t(p3.u_exact, lifted, 1e-6), atol=1e-8)


def test_presets_validate_and_unknown():
    for name in ("example1", "example2", "example3"):
        assert preset(name).validate().name == name
    with pytest.raises(ValueError, match="unknown preset"):
        preset("example9")


def test_domain_box_and_dims():
    p = example_heat()
    assert p.input_dim == 3 and p.dim == 2
    assert p.domain_box.tolist() == [[0, 1], [0, 1], [0, 1]]
    assert example_poisson().with_form(3).kind == "mixed"
    with pytest.raises(ValueError, match="1..4"):
        example_poisson().with_form(5)
    with pytest.raises(ValueError, match="Poisson"):
        example_heat().with_form(1)


def test_expression_grammar():
    f = parse_expression("2*pi^2*cos(pi*x)*sin(pi*y)")
    assert f(_pt(0.0, 0.5))[0] == pytest.approx(2 * PI**2, rel=1e-15)
    g = parse_expression("-x**2 + exp(t) / 2", ("x", "y", "t"))
    assert g(_pt(2.0, 0.0, 0.0))[0] == pytest.approx(-3.5)
    assert parse_expression(3).__call__(np.zeros((4, 2))).tolist() == [3.0] * 4
    for bad, msg in [("z + 1", "unknown symbol 'z'"), ("tan(x)", "unknown function"),
                     ("x +", "cannot parse"), ("x < 1", "unsupported"), ("'a'", "literal")]:
        with pytest.raises(ExpressionError, match=msg):
            parse_expression(bad)
    with pytest.raises(ValueError, match="3-d points"):
        parse_expression("x")(np.zeros((2, 3)))


def test_custom_problem_roundtrip():
    p = custom_problem({
        "kind": "diffusion_reaction", "dirichlet": ["x0", "x1", "y0", "y1"],
        "f": "2*pi^2*sin(pi*x)*sin(pi*y) + sin(pi*x)*sin(pi*y)", "g_d": "0", "delta": "1",
        "u_exact": "sin(pi*x)*sin(pi*y)",
        "grad_exact": ["pi*cos(pi*x)*sin(pi*y)", "pi*sin(pi*x)*cos(pi*y)"],
    })
    assert p.g_n is None and p.delta(_pt(0.2, 0.3))[0] == 1.0
    assert p.grad_exact(_pt(0.0, 0.5))[0].tolist() == pytest.approx([PI, 0.0])
    heat = custom_problem({"kind": "heat", "dirichlet": ["x0", "x1", "y0", "y1"], "f": "t",
                           "g_d": "0", "h0": "x*y"})
    assert heat.time == (0.0, 1.0) and heat.h0(_pt(2.0, 3.0))[0] == 6.0


@pytest.mark.parametrize(
    "cfg, msg",
    [
        ({"kind": "elastic", "f": "1"}, "unknown problem kind"),
        ({"f": "1", "dirichlet": ["x0"]}, "g_n"),
        ({"f": "z"}, "problem.f"),
        ({"f": "1", "g_d": "0", "dirichlet": ["x0", "x1", "y0", "y1"], "alpha": "x - 0.5",
          "kind": "diffusion_reaction"}, "positive"),
        ({"kind": "mixed", "form": 1, "f": "1", "g_d": "0", "g_n": "0", "dirichlet": ["y0"], "alpha": "2"},
         "drop alpha"),
        ({"kind": "mixed", "f": "1", "g_d": "0", "dirichlet": ["x0", "x1", "y0", "y1"]}, "form 1..4"),
        ({"kind": "wave", "f": "1", "g_d": "0", "h0": "0", "dirichlet": ["x0", "x1", "y0", "y1"]}, "w0"),
        ({"kind": "heat", "f": "1", "g_d": "0", "h0": "0", "time": [1, 1],
          "dirichlet": ["x0", "x1", "y0", "y1"]}, "time interval"),
    ],
)
def test_custom_problem_errors(cfg, msg):
    with pytest.raises(ValueError, match=msg):
        custom_problem(cfg)


def test_validate_rejects_negative_reaction():
    p = ProblemSpec("diffusion_reaction", ((0, 1), (0, 1)), BoundaryPartition.all_dirichlet(2),
                    f=lambda x: x[:, 0], g_d=lambda x: x[:, 0], delta=lambda x: -np.ones(len(x)))
    with pytest.raises(ValueError, match="reaction"):
        p.validate()
