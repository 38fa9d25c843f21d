import itertools
from fractions import Fraction as Q

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corners.edging import (Edging, EdgingError, FaceStructure, Polyhedron, PolyhedronError, boundary_decomposition,
                            compose_edgings, derived_index, disjoint_union_edging, face_restrict, polyhedron_faces,
                            slice_isomorphism_check, wedge_check)
from corners.lattice import FiniteLattice, all_partial_maps

KINDS = st.lists(st.sampled_from(["R", "R+", "I"]), min_size=1, max_size=3)
FACTOR_FACES = {"R": 1, "R+": 2, "I": 3}  # non-empty face sets per factor: {}, {lo}, {hi}


def triangle() -> Polyhedron:
    return Polyhedron([[1, 0], [0, 1], [-1, -1]], [0, 0, -1], ["a", "b", "c"])


@given(KINDS)
def test_box_face_count_is_product_of_factors(kinds):
    F = polyhedron_faces(Polyhedron.box(kinds))
    expected = 1
    for k in kinds:
        expected *= FACTOR_FACES[k]
    assert len(F.nonempty) == expected


def test_triangle_faces():
    F = polyhedron_faces(triangle())
    # whole space, three edges, three vertices; no triple meets
    assert len(F.nonempty) == 7
    assert F.mask("abc") not in F


@given(KINDS)
def test_relative_interior_points_sit_on_their_stratum(kinds):
    P = Polyhedron.box(kinds)
    for sigma in polyhedron_faces(P).nonempty:
        p = P.relative_interior_point(sigma)
        assert P.contains(p) and P.active(p) == sigma


def test_polyhedron_rejections():
    with pytest.raises(PolyhedronError, match="empty"):
        Polyhedron([[1], [-1]], [1, 0])
    with pytest.raises(PolyhedronError, match="full-dimensional"):
        Polyhedron([[1, 0], [0, 1], [-1, -1]], [0, 0, 0])
    with pytest.raises(PolyhedronError, match="hyperplane"):
        Polyhedron([[1, 0], [2, 0]], [0, 0])
    with pytest.raises(PolyhedronError):
        Polyhedron.box(["Q"])


def test_product_faces_match_product_structure():
    A, B = Polyhedron.box(["I"]), triangle()
    assert polyhedron_faces(A.product(B)) == polyhedron_faces(A).product(polyhedron_faces(B))


def test_face_structure_closure_rules():
    with pytest.raises(EdgingError, match="subset"):
        FaceStructure("ab", [0, 3], 2)
    with pytest.raises(EdgingError, match="codimension"):
        FaceStructure.from_sets("ab", [["a", "b"]], 1)


def test_stratum_of_square_corner_edge():
    F = polyhedron_faces(Polyhedron.box(["I", "I"]))
    edge = F.stratum(F.mask(["x1=0"]))
    assert edge.faces == ("x2=0", "x2=1") and edge.dim == 1 and len(edge.nonempty) == 3


@pytest.fixture
def square():
    return polyhedron_faces(Polyhedron.box(["I", "I"]))


@pytest.fixture
def interval():
    return polyhedron_faces(Polyhedron.box(["I"]))


def test_identity_is_valid_and_slices(square):
    beta = Edging.identity(square)
    assert beta.is_valid()
    for sigma in square.nonempty:
        assert slice_isomorphism_check(beta, sigma)


def test_violation_kinds(square, interval):
    merge = Edging.from_mapping(square, square, {"x1=0": "x1=0", "x2=0": "x1=0"})
    assert {v["kind"] for v in merge.violations()} >= {"not-injective"}
    empty = Edging.from_mapping(square, interval, {"x1=0": "x1=0", "x2=0": "x1=1"})
    assert {v["kind"] for v in empty.violations()} >= {"image-empty"}
    with pytest.raises(EdgingError):
        empty.check()


def test_folding_parallel_facets(square, interval):
    fold = Edging.from_mapping(square, interval, {"x1=0": "x1=0", "x1=1": "x1=0"}).check()
    comps = boundary_decomposition(fold, interval.mask(["x1=0"]))
    assert sorted(square.members(c) for c in comps) == [("x1=0",), ("x1=1",)]
    assert boundary_decomposition(fold, 0) == [0]


def test_wedge_on_identity(square):
    beta = Edging.identity(square)
    a, b = square.mask(["x1=0"]), square.mask(["x2=0"])
    assert wedge_check(beta, a, b)


def _valid_edgings(X, Y):
    out = []
    for f in all_partial_maps(X.faces, Y.faces):
        beta = Edging(X, Y, f)
        if beta.is_valid():
            out.append(beta)
    return out


def test_valid_edgings_of_interval(interval):
    # empty, one end to either end (4), both ends to the same or swapped/identical ends (4)
    assert len(_valid_edgings(interval, interval)) == 9


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_composition_of_valid_edgings_is_valid(data):
    X = polyhedron_faces(Polyhedron.box(["I", "R+"]))
    Y = polyhedron_faces(Polyhedron.box(["I"]))
    a = data.draw(st.sampled_from(_valid_edgings(X, Y)))
    b = data.draw(st.sampled_from(_valid_edgings(Y, Y)))
    c = compose_edgings(a, b)
    assert c.is_valid()
    for sigma in X.nonempty:
        assert c.tilde(sigma) == b.tilde(a.tilde(sigma))


def test_disjoint_union_and_restriction(square, interval):
    left = Edging.from_mapping(square, interval, {"x1=0": "x1=0"})
    bottom = Edging.from_mapping(square, interval, {"x2=0": "x1=1"})
    both = disjoint_union_edging(left, bottom)
    assert both.target.dim == 2 and both.is_valid()
    restricted = face_restrict(left, square.mask(["x2=1"]))
    assert restricted.source.faces == ("x1=0", "x1=1")
    with pytest.raises(EdgingError):
        face_restrict(left, square.mask(["x1=0"]))


def test_derived_index_size(square, interval):
    beta = Edging.from_mapping(square, interval, {"x1=0": "x1=0", "x1=1": "x1=1"})
    S = FiniteLattice.chain(2)
    idx = derived_index(beta, S)
    # 2 shape elements x 4 subsets of the two off-domain faces x 4 target face sets
    assert len(idx.elements) == 32 == len(idx.lattice)
    x20 = square.mask(["x2=0"])
    assert idx.components[(0, x20, interval.mask(["x1=0"]))] == [(0, x20 | square.mask(["x1=0"]))]
