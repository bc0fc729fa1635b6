import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geonorm.errors import NegativeDeterminant, Singular
from geonorm.groups import (AFFINE, LOWER_TRIANGULAR, PROJECTIVE, ROTATION,
                            SCALING, TRANSLATION, PlanarMap, apply_map,
                            compose, factor_linear, factor_projective,
                            factor_unitdet, format_map, invert, parse_map)

finite = st.floats(-10.0, 10.0, allow_nan=False)
small = st.floats(-0.05, 0.05, allow_nan=False)


def safe_linear(draw_vals):
    g = np.array(draw_vals).reshape(2, 2) + np.eye(2)
    if abs(np.linalg.det(g)) < 0.1:
        g = g + np.eye(2)
    return g


@st.composite
def projective_maps(draw):
    g = safe_linear([draw(st.floats(-0.8, 0.8)) for _ in range(4)])
    t = [draw(finite), draw(finite)]
    p = [draw(small), draw(small)]
    return PlanarMap.projective(g, t, p)


def test_apply_identity():
    m = PlanarMap.identity()
    x = np.array([1.3, -2.7])
    assert np.array_equal(apply_map(m, x), x)


def test_apply_quarter_rotation():
    got = apply_map(PlanarMap.rotation(math.pi / 2), [1.0, 0.0])
    assert np.allclose(got, [0.0, 1.0], atol=1e-15)


def test_apply_projective_substitution():
    m = PlanarMap.projective(np.eye(2), [0.0, 0.0], [1.0, 0.0])
    assert np.allclose(apply_map(m, [1.0, 1.0]), [0.5, 0.5])


def test_apply_batched_points():
    m = PlanarMap.rotation(0.3)
    pts = np.random.default_rng(0).normal(size=(17, 2))
    got = apply_map(m, pts)
    want = np.stack([apply_map(m, p) for p in pts])
    assert np.allclose(got, want, atol=1e-15)


def test_compose_with_identity_preserves_kind():
    s = PlanarMap.rotation(0.7)
    assert compose(PlanarMap.identity(), s) is s
    assert compose(s, PlanarMap.identity()) is s


def test_compose_translations_add_exactly():
    a = PlanarMap.translation([1.25, -3.5])
    b = PlanarMap.translation([0.5, 2.0])
    c = compose(a, b)
    assert c.kind == TRANSLATION
    assert np.array_equal(c.t, [1.75, -1.5])


def test_compose_kind_lattice():
    rot = PlanarMap.rotation(0.4)
    sc = PlanarMap.scaling(1.5)
    low = PlanarMap.lower_triangular([[2.0, 0.0], [0.3, 0.5]])
    tr = PlanarMap.translation([1.0, 2.0])
    refl = PlanarMap.reflection(1)
    assert compose(rot, rot).kind == ROTATION
    assert compose(sc, sc).kind == SCALING
    assert compose(low, sc).kind == LOWER_TRIANGULAR
    assert compose(refl, refl).kind == ROTATION
    assert compose(rot, sc).kind == "linear"
    assert compose(tr, rot).kind == AFFINE
    assert compose(low, low).kind == LOWER_TRIANGULAR
    assert compose(low, low).G[0, 1] == 0.0


def test_affine_composition_keeps_p_exactly_zero():
    rng = np.random.default_rng(1)
    a = PlanarMap.affine(safe_linear(rng.uniform(-0.5, 0.5, 4)),
                         rng.normal(size=2))
    b = PlanarMap.affine(safe_linear(rng.uniform(-0.5, 0.5, 4)),
                         rng.normal(size=2))
    c = compose(a, b)
    assert c.kind == AFFINE
    assert c.p[0] == 0.0 and c.p[1] == 0.0


@settings(max_examples=50, deadline=None)
@given(projective_maps(), projective_maps())
def test_compose_matches_pointwise(s2, s1):
    c = compose(s2, s1)
    pts = np.random.default_rng(0).uniform(-2.0, 2.0, size=(100, 2))
    want = apply_map(s2, apply_map(s1, pts))
    got = apply_map(c, pts)
    assert np.abs(got - want).max() < 1e-10


def test_invert_translation_and_rotation():
    t = invert(PlanarMap.translation([2.0, -3.0]))
    assert t.kind == TRANSLATION
    assert np.array_equal(t.t, [-2.0, 3.0])
    r = invert(PlanarMap.rotation(0.8))
    assert r.kind == ROTATION
    assert abs(r.theta + 0.8) < 1e-15


@settings(max_examples=50, deadline=None)
@given(projective_maps())
def test_invert_roundtrip_pointwise(s):
    pts = np.random.default_rng(1).uniform(-2.0, 2.0, size=(100, 2))
    got = apply_map(invert(s), apply_map(s, pts))
    assert np.abs(got - pts).max() < 1e-10


@settings(max_examples=50, deadline=None)
@given(projective_maps())
def test_compose_with_inverse_is_identity(s):
    ident = compose(s, invert(s))
    h = ident.homogeneous()
    assert np.abs(h - np.eye(3)).max() < 1e-12


@settings(max_examples=25, deadline=None)
@given(projective_maps(), projective_maps(), projective_maps())
def test_compose_associative(s3, s2, s1):
    a = compose(compose(s3, s2), s1).homogeneous()
    b = compose(s3, compose(s2, s1)).homogeneous()
    assert np.abs(a - b).max() < 1e-12


def test_factor_linear_identity_and_rotation():
    g, r = factor_linear(np.eye(2))
    assert np.allclose(g.G, np.eye(2)) and abs(r.theta) < 1e-15
    rot = PlanarMap.rotation(0.6)
    g, r = factor_linear(rot.G)
    assert np.abs(g.G - np.eye(2)).max() < 1e-15
    assert abs(r.theta - 0.6) < 1e-12


def test_factor_linear_recomposition_and_uniqueness():
    rng = np.random.default_rng(2)
    for _ in range(20):
        mat = safe_linear(rng.uniform(-1.0, 1.0, 4))
        g, r = factor_linear(mat)
        assert g.G[0, 0] > 0.0
        assert g.G[0, 1] == 0.0
        recomposed = g.G @ r.G
        assert np.abs(recomposed - mat).max() < 1e-12
        g2, r2 = factor_linear(recomposed)
        assert np.abs(g2.G - g.G).max() < 1e-12
        assert abs(r2.theta - r.theta) < 1e-12


def test_factor_linear_singular():
    with pytest.raises(Singular):
        factor_linear([[1.0, 2.0], [2.0, 4.0]])


def test_factor_unitdet_examples():
    gp, lam, rot = factor_unitdet(2.0 * np.eye(2))
    assert np.allclose(gp.G, np.eye(2)) and lam == 2.0
    assert abs(rot.theta) < 1e-15
    gp, lam, rot = factor_unitdet(PlanarMap.rotation(1.1).G)
    assert np.abs(gp.G - np.eye(2)).max() < 1e-12
    assert abs(lam - 1.0) < 1e-12


def test_factor_unitdet_recomposition():
    rng = np.random.default_rng(3)
    for _ in range(20):
        mat = safe_linear(rng.uniform(-1.0, 1.0, 4))
        if np.linalg.det(mat) < 0:
            mat = mat @ np.diag([-1.0, 1.0])
        gp, lam, rot = factor_unitdet(mat)
        assert abs(gp.det - 1.0) < 1e-12
        assert gp.G[0, 0] > 0.0
        recomposed = gp.G @ (lam * rot.G)
        assert np.abs(recomposed - mat).max() < 1e-12


def test_factor_unitdet_rejects_improper():
    with pytest.raises(NegativeDeterminant):
        factor_unitdet(np.diag([-1.0, 1.0]))


def test_factor_projective_affine_input():
    s = PlanarMap.affine([[1.2, 0.1], [-0.2, 0.9]], [0.4, -0.6])
    s2, s1 = factor_projective(s)
    assert np.array_equal(s2.p, [0.0, 0.0])
    assert np.abs(s1.homogeneous() - s.homogeneous()).max() < 1e-15


def test_factor_projective_restricted_input():
    s = PlanarMap.restricted_projective([0.02, -0.01])
    s2, s1 = factor_projective(s)
    assert s1.is_identity(tol=1e-15)
    assert np.allclose(s2.p, [0.02, -0.01])


@settings(max_examples=50, deadline=None)
@given(projective_maps())
def test_factor_projective_recomposition(s):
    s2, s1 = factor_projective(s)
    assert s1.p[0] == 0.0 and s1.p[1] == 0.0
    assert np.array_equal(s2.G, np.eye(2))
    pts = np.random.default_rng(4).uniform(-2.0, 2.0, size=(100, 2))
    want = apply_map(s, pts)
    got = apply_map(s2, apply_map(s1, pts))
    assert np.abs(got - want).max() < 1e-10


@pytest.mark.parametrize("m", [
    PlanarMap.translation([1.5, -2.0]),
    PlanarMap.rotation(2.1),
    PlanarMap.scaling(0.7),
    PlanarMap.reflection(2),
    PlanarMap.lower_triangular([[1.4, 0.0], [-0.3, 0.8]]),
    PlanarMap.linear([[1.1, 0.2], [-0.1, 0.9]]),
    PlanarMap.affine([[1.1, 0.2], [-0.1, 0.9]], [3.0, -4.0]),
    PlanarMap.projective([[1.1, 0.2], [-0.1, 0.9]], [3.0, -4.0],
                         [0.01, -0.02]),
])
def test_text_format_roundtrip(m):
    line = format_map(m)
    back = parse_map(line)
    assert back.kind == m.kind
    assert np.abs(back.homogeneous() - m.homogeneous()).max() < 1e-15


def test_parse_map_rejects_bad_lines():
    with pytest.raises(ValueError):
        parse_map("spline 1 2 3")
    with pytest.raises(ValueError):
        parse_map("rotation 1 2")


def test_promotion_consistency():
    pts = np.random.default_rng(5).uniform(-3.0, 3.0, size=(50, 2))
    for m in (PlanarMap.translation([1.0, 2.0]), PlanarMap.rotation(0.9),
              PlanarMap.scaling(1.7), PlanarMap.reflection(1)):
        promoted = PlanarMap.projective(m.G, m.t, m.p)
        assert np.array_equal(apply_map(m, pts), apply_map(promoted, pts))


def test_scaling_requires_positive_factor():
    with pytest.raises(ValueError):
        PlanarMap.scaling(-2.0)


def test_singular_linear_rejected():
    with pytest.raises(Singular):
        PlanarMap.linear([[1.0, 1.0], [1.0, 1.0]])
