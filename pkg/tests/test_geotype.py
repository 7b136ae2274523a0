import json
from fractions import Fraction as F

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracle
from pamarkov.flatsurf import build_surface
from pamarkov.geotype import (
    BRUTE_FORCE_LIMIT,
    GeometricType,
    GeoTypeError,
    canonical_key,
    canonical_type,
    compare_invariants,
    compatibility_order,
    extract_type,
    flip_type,
    geometrize,
    incidence_matrix,
    perron_root,
    primitive_types,
    relabel,
)
from pamarkov.intersections import first_intersection_points, image_point
from pamarkov.partition import PreconditionError, build_partition
from pamarkov.pamap import find_origami_map, make_torus_map

CAT = [[2, 1], [1, 1]]
cat = make_torus_map(CAT, [(0, 0)])
cat3 = make_torus_map(CAT, [(F(1, 2), F(1, 2))])
lmap = find_origami_map(build_surface([2, 1, 3], [3, 2, 1]), [[5, 2], [2, 1]])

CAT_Z = first_intersection_points(cat)
CAT_P = [build_partition(cat, z, 1) for z in CAT_Z]
CAT_T = [extract_type(geometrize(p)) for p in CAT_P]
L_Z = first_intersection_points(lmap)[0]
L_T = extract_type(geometrize(build_partition(lmap, L_Z, 1)))

# frozen from the first cat representative at n = 1
CAT_GOLDEN = (
    '{"eps":[[[1,1],1],[[1,2],1],[[1,3],1],[[2,1],1],[[2,2],1],[[2,3],1],[[3,1],1],[[3,2],1],'
    '[[4,1],1],[[4,2],1],[[4,3],1],[[5,1],1],[[5,2],1]],"n":5,"pairs":[[3,2],[3,3],[2,2],[3,3],[2,3]],'
    '"rho":[[[1,1],[2,2]],[[1,2],[3,1]],[[1,3],[1,1]],[[2,1],[2,3]],[[2,2],[3,2]],[[2,3],[1,2]],'
    '[[3,1],[4,2]],[[3,2],[5,2]],[[4,1],[4,1]],[[4,2],[5,1]],[[4,3],[2,1]],[[5,1],[4,3]],[[5,2],[5,3]]]}'
)


def test_golden_cat_type():
    assert canonical_key(CAT_T[0]) == CAT_GOLDEN


@pytest.mark.parametrize("t", CAT_T + [L_T], ids=["cat0", "cat1", "cat2", "cat3", "L"])
def test_counting_identity(t):
    assert sum(h for h, _ in t.pairs) == sum(v for _, v in t.pairs)
    a = incidence_matrix(t)
    assert [sum(row) for row in a] == [h for h, _ in t.pairs]
    assert [sum(a[i][k] for i in range(t.n)) for k in range(t.n)] == [v for _, v in t.pairs]


@pytest.mark.parametrize("k", range(4))
def test_incidence_matches_overlap_oracle(k):
    p = CAT_P[k]
    f = oracle.to_mpf
    X = tuple(f(c) for c in p.frame.X)
    Y = tuple(f(c) for c in p.frame.Y)
    rects = [((f(r.center[1]), f(r.center[2])), f(r.width), f(r.height)) for r in p.rectangles]
    assert oracle.torus_incidence(CAT, rects, X, Y, f(cat.lam)) == incidence_matrix(CAT_T[k])


@pytest.mark.parametrize("m,t", [(cat, CAT_T[0]), (lmap, L_T)], ids=["cat", "L"])
def test_perron_root_is_dilatation(m, t):
    a = incidence_matrix(t)
    root = perron_root(a)
    with mpmath.workprec(256):
        assert abs(root - oracle.perron_eig(a)) < mpmath.mpf(10) ** -30
        assert abs(root - oracle.to_mpf(m.lam)) < mpmath.mpf(10) ** -9


@pytest.mark.parametrize("t", CAT_T + [L_T], ids=["cat0", "cat1", "cat2", "cat3", "L"])
def test_incidence_matrix_is_primitive(t):
    a = incidence_matrix(t)
    n = t.n
    power = a
    # Wielandt: a primitive matrix has a positive power at most (n-1)^2 + 1
    for _ in range((n - 1) ** 2):
        if all(x > 0 for row in power for x in row):
            break
        power = [[sum(power[i][j] * a[j][k] for j in range(n)) for k in range(n)] for i in range(n)]
    assert all(x > 0 for row in power for x in row)


@settings(max_examples=40, deadline=None)
@given(st.permutations(list(range(1, 6))))
def test_canonical_form_ignores_labels(perm):
    t = CAT_T[0]
    assert canonical_key(relabel(t, perm)) == canonical_key(t)
    assert canonical_key(relabel(t, perm), True) == canonical_key(t, True)


def test_canonical_form_is_idempotent():
    for t in CAT_T + [L_T]:
        c = canonical_type(t)
        assert canonical_type(c) == c


@pytest.mark.parametrize("t", CAT_T + [L_T], ids=["cat0", "cat1", "cat2", "cat3", "L"])
def test_flip_is_an_involution(t):
    assert flip_type(flip_type(t)) == t


def test_flip_matches_flipped_geometry():
    for p, t in zip(CAT_P, CAT_T):
        assert extract_type(geometrize(p, True)) == flip_type(t)


def test_flip_quotient_identifies_flipped_types():
    for t in CAT_T:
        assert canonical_key(t, True) == canonical_key(flip_type(t), True)


def test_types_depend_on_the_iterate():
    t2 = extract_type(geometrize(build_partition(cat, CAT_Z[0], 2)))
    assert t2.n == 13
    assert canonical_key(t2) != canonical_key(CAT_T[0])


def test_orbit_constancy_cat():
    for z, t in zip(CAT_Z, CAT_T):
        w = image_point(cat, z, 1)
        assert canonical_key(extract_type(geometrize(build_partition(cat, w, 1)))) == canonical_key(t)


def test_orbit_constancy_period_three():
    z = first_intersection_points(cat3)[0]
    keys = set()
    for k in range(4):
        w = image_point(cat3, z, k)
        keys.add(canonical_key(extract_type(geometrize(build_partition(cat3, w, 2)))))
    assert len(keys) == 1


def test_json_round_trip():
    for t in CAT_T + [L_T]:
        again = GeometricType.from_json(json.loads(json.dumps(t.to_json())))
        assert again == t and again.dumps() == t.dumps()


def test_malformed_types_rejected():
    with pytest.raises(GeoTypeError):
        GeometricType(1, ((2, 1),), (((1, 1), (1, 1)),), (((1, 1), 1),))
    with pytest.raises(GeoTypeError):
        GeometricType(1, ((1, 1),), (((1, 1), (1, 2)),), (((1, 1), 1),))
    with pytest.raises(GeoTypeError):
        GeometricType(1, ((1, 1),), (((1, 1), (1, 1)),), ())


def _disconnected(n):
    return GeometricType(
        n,
        tuple((1, 1) for _ in range(n)),
        tuple(((i, 1), (i, 1)) for i in range(1, n + 1)),
        tuple(((i, 1), -1) for i in range(1, n + 1)),
    )


def test_disconnected_types_fall_back_to_brute_force():
    t = _disconnected(3)
    assert canonical_key(relabel(t, [3, 1, 2])) == canonical_key(t)
    with pytest.raises(GeoTypeError):
        canonical_key(_disconnected(BRUTE_FORCE_LIMIT + 1))


def test_type_sets_and_orders():
    assert compatibility_order(cat) == 1
    types = primitive_types(cat, 1)
    assert types == sorted(set(types)) and 1 <= len(types) <= 4
    assert CAT_GOLDEN in types
    with pytest.raises(PreconditionError):
        primitive_types(cat, 0)


def test_conjugate_maps_compare_equivalent():
    conj = make_torus_map([[3, -1], [1, 0]], [(0, 0)])
    res = compare_invariants(cat, conj)
    assert res.status == "equivalent" and res.order_a == res.order_b == 1
    assert res.to_json()["quotient"] == "relabel"
