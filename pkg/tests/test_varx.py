import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pxkirchhoff.exponents import build_exponent_field
from pxkirchhoff.mesh import GridFunction, build_grid, x_norm
from pxkirchhoff.varx import (
    embedding_constants,
    estimate_embedding_constant,
    holder_bound,
    luxemburg_norm,
    modular,
    probe_fields,
    verify_norm_modular_relations,
)

FINE = build_grid(1, [1.0], 2049)
G = build_grid(1, [1.0], 65)


def exp(grid, v, principal=False):
    return build_exponent_field(v, grid, 7, principal=principal)


def test_modular_zero():
    assert modular(GridFunction.zeros(G), exp(G, 2.0)).value == 0.0


def test_modular_of_two_with_affine_exponent():
    u = GridFunction(FINE, np.full(FINE.shape, 2.0))
    # ∫₀¹ 2^{2+x} dx = 4/ln 2
    assert modular(u, exp(FINE, 2 + FINE.axes[0])).value == pytest.approx(4 / np.log(2), rel=1e-6)


def test_modular_of_x_squared():
    u = GridFunction(FINE, FINE.axes[0].copy())
    assert modular(u, exp(FINE, 2.0)).value == pytest.approx(1 / 3, rel=1e-6)


def test_luxemburg_examples():
    assert luxemburg_norm(GridFunction.zeros(G), exp(G, 2.0)).value == 0.0
    u = GridFunction(FINE, FINE.axes[0].copy())
    assert luxemburg_norm(u, exp(FINE, 2.0)).value == pytest.approx(np.sqrt(1 / 3), rel=1e-6)
    one = GridFunction(G, np.ones(G.shape))
    assert luxemburg_norm(one, exp(G, 1.3 + G.axes[0])).value == pytest.approx(1.0, abs=1e-9)


def test_luxemburg_residual_is_small():
    u = GridFunction(G, np.sin(7 * G.axes[0]) * 40)
    n = luxemburg_norm(u, exp(G, 1.5 + G.axes[0]))
    assert n.residual <= 1e-8


def test_relations_unit_constant_equality_branch():
    rep = verify_norm_modular_relations(GridFunction(G, np.ones(G.shape)), exp(G, 2.0))
    assert rep.branch == "=" and rep.passed


def test_relations_three_with_affine_exponent():
    u = GridFunction(FINE, np.full(FINE.shape, 3.0))
    p = exp(FINE, 2 + FINE.axes[0])
    rep = verify_norm_modular_relations(u, p)
    assert rep.branch == ">" and rep.passed
    assert rep.modular == pytest.approx(18 / np.log(3), rel=1e-6)
    assert rep.norm**2 <= rep.modular <= rep.norm**3


fields = st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=65, max_size=65).filter(
    lambda v: max(abs(x) for x in v) > 1e-6
)
exponents = st.tuples(st.floats(1.1, 3.5), st.floats(0.0, 0.5))


def _p(e):
    return exp(G, e[0] + e[1] * G.axes[0])


@given(fields, exponents)
def test_norm_modular_relations_property(vals, e):
    u = GridFunction(G, np.array(vals))
    p = _p(e)
    rep = verify_norm_modular_relations(u, p)
    assert rep.passed
    assert modular(u * (1 / rep.norm), p).value == pytest.approx(1.0, abs=1e-8)


@given(fields, exponents, st.floats(-50, 50).filter(lambda t: abs(t) > 1e-3))
def test_luxemburg_homogeneity(vals, e, t):
    u = GridFunction(G, np.array(vals))
    p = _p(e)
    assert luxemburg_norm(u * t, p).value == pytest.approx(abs(t) * luxemburg_norm(u, p).value, rel=1e-9)


@given(fields, exponents, st.floats(0, 5), st.floats(0, 5))
def test_modular_monotone_in_scale(vals, e, t1, t2):
    u = GridFunction(G, np.array(vals))
    p = _p(e)
    lo, hi = sorted((t1, t2))
    assert modular(u * lo, p).value <= modular(u * hi, p).value


def test_holder_examples():
    z = GridFunction.zeros(G)
    rep = holder_bound(z, z, exp(G, 2.0))
    assert rep.lhs == 0.0 and rep.rhs == 0.0 and rep.holds
    one = GridFunction(G, np.ones(G.shape))
    rep = holder_bound(one, one, exp(G, 2.0))
    assert rep.lhs == pytest.approx(1.0) and rep.rhs == pytest.approx(2.0) and rep.holds


@given(fields, fields, exponents)
def test_holder_property(a, b, e):
    assert holder_bound(GridFunction(G, np.array(a)), GridFunction(G, np.array(b)), _p(e)).holds


def test_embedding_single_probe_with_ratio_one():
    # on [0, π], u = sin x has |∇Δu|₂ = |u|₂, so the only ratio is 1 up to O(h²)
    g = build_grid(1, [np.pi], 513)
    p = build_exponent_field(2.0, g, 7)
    u = GridFunction(g, np.sin(g.axes[0]))
    est = estimate_embedding_constant(g, p, exp(g, 2.0), safety=1.2, fields=[u])
    assert est == pytest.approx(1.2, rel=1e-4)


def test_embedding_doubling_probes_never_decreases():
    p = build_exponent_field(2.0, G, 7)
    s = exp(G, 3.0)
    a = estimate_embedding_constant(G, p, s, probes=64, seed=5)
    b = estimate_embedding_constant(G, p, s, probes=128, seed=5)
    assert b >= a


def test_embedding_regression_baseline():
    g = build_grid(1, [1.0], 64)
    p = build_exponent_field(2.0, g, 7)
    assert estimate_embedding_constant(g, p, p, probes=512, seed=42) == pytest.approx(0.037840102214086, rel=1e-12)


def test_embedding_constants_shape():
    p = build_exponent_field(2.0, G, 7)
    c = embedding_constants(G, p, exp(G, 1.5), exp(G, 5.0), probes=32, seed=1)
    S = c.embedding
    assert c.C1 == pytest.approx(2 * max(S**1.5, S**1.5))
    assert c.C2 == pytest.approx(2 * S**5)
    assert c.C3 == pytest.approx(2 * S)
    assert min(c.C1, c.C2, c.C3) > 0
