from fractions import Fraction as F

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracle
from pamarkov.flatsurf import build_surface, collinear_overlap
from pamarkov.pamap import (
    MapError,
    apply_map,
    apply_map_arc,
    find_origami_map,
    make_origami_map,
    make_torus_map,
    map_from_json,
    separatrices,
)
from pamarkov.qfield import QuadNum

CAT = [[2, 1], [1, 1]]
L_RIGHT, L_TOP = [2, 1, 3], [3, 2, 1]
L_MATRIX = [[5, 2], [2, 1]]

cat = make_torus_map(CAT, [(0, 0)])
cat3 = make_torus_map(CAT, [(F(1, 2), F(1, 2))])
lmap = find_origami_map(build_surface(L_RIGHT, L_TOP), L_MATRIX)


def q5(a, b=0):
    return QuadNum.make(F(a), F(b), 5)


def test_cat_eigendata():
    assert cat.lam == q5(F(3, 2), F(1, 2))
    assert cat.dir_u == (q5(1), q5(F(-1, 2), F(1, 2)))
    for d, mu in ((cat.dir_u, cat.lam), (cat.dir_s, cat.lam.inverse())):
        image = (2 * d[0] + d[1], d[0] + d[1])
        assert image == (mu * d[0], mu * d[1])


def test_cat_separatrices_fixed():
    seps = separatrices(cat)
    assert sorted(s.tag for s in seps) == ["s", "s", "u", "u"]
    # positive eigenvalue: every prong maps to itself
    assert all(s.image == s.id for s in seps)


def test_non_hyperbolic_rejected():
    with pytest.raises(MapError):
        make_torus_map([[1, 1], [1, 0]], [(0, 0)])
    with pytest.raises(MapError):
        find_origami_map(build_surface(L_RIGHT, L_TOP), [[1, 1], [1, 0]])


def test_torus_needs_marked_point():
    with pytest.raises(MapError):
        make_torus_map(CAT, [])


def test_marked_point_outside_square():
    # rational torus points are always periodic under SL(2,Z), so only bad input can fail here
    with pytest.raises(MapError):
        make_torus_map(CAT, [(F(3, 2), 0)])


def test_period_three_orbit():
    assert sorted(oracle.torus_orbit(CAT, F(1, 2), F(1, 2))) == [(0, F(1, 2)), (F(1, 2), 0), (F(1, 2), F(1, 2))]
    points = sorted((s.point.x, s.point.y) for s in cat3.singularities)
    assert points == [(0, F(1, 2)), (F(1, 2), 0), (F(1, 2), F(1, 2))]
    assert all(s.period == 3 for s in cat3.singularities)
    p = cat3.singularities[2].point
    assert apply_map(cat3, p, 3) == p


def test_period_three_separatrices():
    seps = separatrices(cat3)
    assert sum(s.tag == "s" for s in seps) == 6
    assert {cat3.sep_cycle_length(s.id) for s in seps} == {3}


def test_fixed_point_power_ten():
    p = cat.singularities[0].point
    assert apply_map(cat, p, 10) == p


def test_power_zero_is_identity():
    p = cat.surface.point(1, q5(F(1, 3)), q5(F(2, 7)))
    assert apply_map(cat, p, 0) == p


def test_l_origami_map():
    assert lmap.lam == QuadNum.make(3, 2, 2)
    assert lmap.lam * lmap.lam == 6 * lmap.lam - 1
    (cone,) = [s for s in lmap.singularities if s.cone]
    assert cone.prongs == 6
    seps = separatrices(lmap)
    assert sum(s.tag == "u" for s in seps) == 6
    assert lmap.singularity_image[cone.id] == cone.id


def test_l_origami_matches_float_shadow():
    fmap = oracle.FloatOrigamiMap(L_RIGHT, L_TOP, L_MATRIX, (1, lmap.square_image[0]))
    for i in range(1, 4):
        sq, x, y = lmap._centre_images[i]
        fs, fx, fy = fmap.W[i]
        assert sq == fs
        assert abs(oracle.to_mpf(x) - fx) < 1e-60 and abs(oracle.to_mpf(y) - fy) < 1e-60
    pt = lmap.surface.point(2, QuadNum.make(F(1, 3), 0, 2), QuadNum.make(F(3, 7), 0, 2))
    img = apply_map(lmap, pt, 1)
    with mpmath.workprec(oracle.PREC):
        fs, fx, fy = fmap.apply(2, mpmath.mpf(1) / 3, mpmath.mpf(3) / 7)
    charts = lmap.surface.charts(img.square, img.x, img.y)
    assert any(c[0] == fs and abs(oracle.to_mpf(c[1]) - fx) < 1e-60 and abs(oracle.to_mpf(c[2]) - fy) < 1e-60 for c in charts)


def test_l_separatrix_images_match_oracle():
    fmap = oracle.FloatOrigamiMap(L_RIGHT, L_TOP, L_MATRIX, (1, lmap.square_image[0]))
    seps = separatrices(lmap)
    with mpmath.workprec(oracle.PREC):
        for sep in seps:
            sq, cx, cy = sep.chart
            d = tuple(oracle.to_mpf(c) for c in sep.direction)
            s2, corner, u = oracle.sep_image_directions(fmap, (sq, int(cx == 1), int(cy == 1)), d)
            img = seps[sep.image]
            assert img.chart[0] == s2 and (int(img.chart[1] == 1), int(img.chart[2] == 1)) == corner
            e = [oracle.to_mpf(c) for c in img.direction]
            n = mpmath.sqrt(e[0] ** 2 + e[1] ** 2)
            assert abs(e[0] / n - u[0]) < 1e-30 and abs(e[1] / n - u[1]) < 1e-30


def test_l_separatrices_respect_cyclic_order():
    seps = [s for s in separatrices(lmap) if s.tag == "u"]
    shift = {(seps[(k + 1) % 6].prong - seps[k].prong) % 6 for k in range(6)}
    assert shift == {1}
    images = [lmap.separatrices[s.image].prong for s in seps]
    offsets = {(images[k] - seps[k].prong) % 6 for k in range(6)}
    assert len(offsets) == 1


def test_torus_origami_agrees_with_torus_map():
    other = make_origami_map(build_surface([1], [1]), CAT, (1, 1))
    assert other.lam == cat.lam and other.dir_u == cat.dir_u and other.dir_s == cat.dir_s
    assert [s.point for s in other.singularities] == [s.point for s in cat.singularities]
    assert [(s.tag, s.image) for s in other.separatrices] == [(s.tag, s.image) for s in cat.separatrices]


def test_wrong_seed_rejected():
    # no affine lift of the shear sends square 1 to square 2 consistently here
    surface = build_surface(L_RIGHT, L_TOP)
    good = lmap.square_image[0]
    for j in (1, 2, 3):
        if j == good:
            continue
        with pytest.raises(MapError):
            make_origami_map(surface, L_MATRIX, (1, j))


def test_measure_scaling_and_containment():
    u = cat.sep_arc(cat.separatrices[0], 1)
    fu = apply_map_arc(cat, u, 1)
    assert fu.length == cat.lam * u.length
    back = apply_map_arc(cat, u, -1)
    assert back.length == u.length / cat.lam
    assert collinear_overlap(u, back) == (back.lo, back.hi)
    s = cat.sep_arc(cat.separatrices[1], 1)
    assert apply_map_arc(cat, s, -1).length == cat.lam * s.length


def test_negative_trace_map():
    m = make_torus_map([[-2, -1], [-1, -1]], [(0, 0)])
    assert m.lam == cat.lam and m.eps == -1
    # f swaps opposite prongs
    for s in m.separatrices:
        assert s.image != s.id
        assert m.separatrices[s.image].direction == (-s.direction[0], -s.direction[1])


def test_map_from_json():
    m = map_from_json({"kind": "torus", "matrix": CAT, "marked": [["1/2", "1/2"]]})
    assert len(m.singularities) == 3
    m2 = map_from_json({"kind": "origami", "squares": 3, "right": L_RIGHT, "top": L_TOP, "matrix": L_MATRIX})
    assert m2.square_image == lmap.square_image


coords = st.fractions(min_value=0, max_value=1, max_denominator=9)


@settings(max_examples=40, deadline=None)
@given(coords, coords, st.integers(-2, 2), st.integers(-2, 2))
def test_power_composition(x, y, a, b):
    p = cat3.surface.point(1, q5(x), q5(y))
    assert apply_map(cat3, apply_map(cat3, p, a), b) == apply_map(cat3, p, a + b)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3), coords, coords, st.integers(-1, 1))
def test_l_power_composition(sq, x, y, a):
    s = lmap.surface
    p = s.point(sq, QuadNum.make(x, 0, 2), QuadNum.make(y, 0, 2))
    assert apply_map(lmap, apply_map(lmap, p, a), 1) == apply_map(lmap, p, a + 1)
    assert apply_map(lmap, apply_map(lmap, p, 1), -1) == p


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3), coords, st.sampled_from(["r", "t"]))
def test_gluing_equivariance(sq, t, edge):
    s = lmap.surface
    t = QuadNum.make(t, 0, 2)
    one, zero = QuadNum.make(1, 0, 2), QuadNum.make(0, 0, 2)
    if edge == "r":
        a, b = (sq, one, t), (s.right[sq], zero, t)
    else:
        a, b = (sq, t, one), (s.top[sq], t, zero)
    assert lmap._forward(a) and s.point(*lmap._forward(a)) == s.point(*lmap._forward(b))


@settings(max_examples=25, deadline=None)
@given(coords, coords, st.fractions(min_value=F(1, 7), max_value=3, max_denominator=7))
def test_unstable_measure_scaling(x, y, length):
    arc = cat3.trace((1, q5(x), q5(y)), cat3.dir_u, 0, length)
    if arc.hit_singularity:
        return
    img = apply_map_arc(cat3, arc, 1)
    if img.hit_singularity:
        return
    assert img.length == cat3.lam * arc.length
    assert img.end == apply_map(cat3, arc.end, 1)
