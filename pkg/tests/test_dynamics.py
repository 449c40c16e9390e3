from __future__ import annotations

from fractions import Fraction
from typing import TYPE_CHECKING

import pytest

from graphdyn.constructions import wedge_power
from graphdyn.dynamics import Classification
from graphdyn.dynamics import _horseshoe_on
from graphdyn.dynamics import bound_report
from graphdyn.dynamics import classify
from graphdyn.dynamics import endpoint_cycles
from graphdyn.dynamics import fixed_germ_permutation
from graphdyn.dynamics import germ_orbit
from graphdyn.dynamics import is_transitive
from graphdyn.dynamics import loose_horseshoe_search
from graphdyn.dynamics import period_decomposition
from graphdyn.dynamics import periodic_points
from graphdyn.dynamics import solve_closed_walk
from graphdyn.exceptions import ResourceLimitError
from graphdyn.exceptions import ValidationError
from graphdyn.graphcore import Catalog
from graphdyn.graphcore import Germ
from graphdyn.graphcore import GraphPoint
from graphdyn.plmap import MarkovPartition
from graphdyn.plmap import PLMarkovMap
from graphdyn.plmap import Step
from graphdyn.rationals import LogValue


if TYPE_CHECKING:
    from graphdyn.config import Config
    from graphdyn.graphcore import TopoGraph


@pytest.fixture
def flip(arc: TopoGraph) -> PLMarkovMap:
    knots = {
        GraphPoint.at("a"): GraphPoint.at("b"),
        GraphPoint.at("b"): GraphPoint.at("a"),
    }

    return PLMarkovMap.from_point_images(arc, knots)


def test_tent3_is_exact(tent3_map: PLMarkovMap) -> None:
    certificate = is_transitive(tent3_map)

    assert certificate
    assert certificate.components == (("e#0", "e#1", "e#2"),)
    assert not certificate.heuristic
    assert classify(tent3_map) == Classification(True, True, True, 1, False)


def test_b1_is_transitive_with_period_two(b1_map: PLMarkovMap) -> None:
    assert classify(b1_map) == Classification(True, False, False, 2, False)

    decomposition = period_decomposition(b1_map)

    assert decomposition.k == 2
    assert decomposition.classes == (("e#0", "e#1", "e#2"), ("e#3",))


@pytest.mark.parametrize("copies", [2, 3])
def test_period_classes_map_into_the_next_class(
    tent3_map: PLMarkovMap, b1_map: PLMarkovMap, copies: int
) -> None:
    for m in (b1_map, wedge_power(tent3_map, GraphPoint.at("a"), copies).map):
        decomposition = period_decomposition(m)
        graph = m.markov_graph()
        k = decomposition.k

        for r, members in enumerate(decomposition.classes):
            following = set(decomposition.classes[(r + 1) % k])
            for iid in members:
                assert set(graph.successors(iid)) <= following
        assert sorted(iid for c in decomposition.classes for iid in c) == sorted(
            m.interval_ids
        )


def test_cyclic_permutation_is_not_transitive(flip: PLMarkovMap) -> None:
    certificate = is_transitive(flip)

    assert not certificate
    assert certificate.cyclic_permutation
    assert classify(flip) == Classification(False, False, False, None, False)
    with pytest.raises(ValidationError, match="transitive"):
        period_decomposition(flip)


def test_maps_on_circles_are_classified_heuristically() -> None:
    circle = Catalog.circle()
    partition = MarkovPartition(
        circle, {"v": GraphPoint.at("v"), "e@1/2": circle.point("e", Fraction(1, 2))}
    )
    around = [Step("e#0", "+"), Step("e#1", "+")]
    doubling = PLMarkovMap(
        partition, {"v": "v", "e@1/2": "v"}, {"e#0": around, "e#1": around}
    )

    assert classify(doubling) == Classification(True, True, True, 1, True)


def test_tent3_fixed_points(tent3_map: PLMarkovMap, arc: TopoGraph) -> None:
    found = periodic_points(tent3_map, 1)

    assert {p.point for p in found} == {
        GraphPoint.at("a"),
        arc.point("e", Fraction(1, 2)),
        GraphPoint.at("b"),
    }
    assert not any(p.non_unique for p in found)


def test_tent3_period_two_points(tent3_map: PLMarkovMap, arc: TopoGraph) -> None:
    found = periodic_points(tent3_map, 2)
    points = {p.point for p in found}

    assert len(found) == 9
    assert arc.point("e", Fraction(1, 5)) in points
    assert arc.point("e", Fraction(3, 5)) in points
    for point in points:
        assert tent3_map.evaluate(tent3_map.evaluate(point)) == point


def test_tent3_period_three_points(tent3_map: PLMarkovMap) -> None:
    found = periodic_points(tent3_map, 3)

    assert len({p.point for p in found}) == 27
    for p in found:
        point = p.point
        for _ in range(3):
            point = tent3_map.evaluate(point)
        assert point == p.point


def test_b1_fixed_point_sits_on_the_partition(
    b1_map: PLMarkovMap, arc: TopoGraph
) -> None:
    found = periodic_points(b1_map, 1)

    assert [p.point for p in found] == [arc.point("e", Fraction(1, 2))]


def test_closed_walk_solution(tent3_map: PLMarkovMap, arc: TopoGraph) -> None:
    solution = solve_closed_walk(tent3_map, ["e#0", "e#1"])

    assert solution is not None
    assert solution.point == arc.point("e", Fraction(1, 5))
    assert solution.itinerary == ("e#0", "e#1")


def test_periodic_points_respect_the_cycle_cap(
    tent3_map: PLMarkovMap, config: Config
) -> None:
    with pytest.raises(ResourceLimitError, match="period 6"):
        periodic_points(tent3_map, 6, config.with_overrides(cycle_cap=100))


def test_periodic_points_need_a_positive_period(tent3_map: PLMarkovMap) -> None:
    with pytest.raises(ValidationError, match="must be positive"):
        periodic_points(tent3_map, 0)


def test_tent3_tight_three_horseshoe(tent3_map: PLMarkovMap) -> None:
    horseshoe = loose_horseshoe_search(tent3_map, 3)

    assert horseshoe is not None
    assert horseshoe.arc == ("e#0", "e#1", "e#2")
    assert horseshoe.pieces == (("e#0",), ("e#1",), ("e#2",))
    assert not horseshoe.loose
    assert horseshoe.overshooting == ()


def test_tent3_loose_two_horseshoe(tent3_map: PLMarkovMap) -> None:
    horseshoe = loose_horseshoe_search(tent3_map, 2)

    assert horseshoe is not None
    assert horseshoe.loose
    assert horseshoe.pieces == (("e#0",), ("e#1",))
    assert horseshoe.unused == ("e#2",)


def test_overshooting_pieces_make_a_horseshoe_loose(tent3_map: PLMarkovMap) -> None:
    horseshoe = _horseshoe_on(tent3_map, ("e#0", "e#1"), 2)

    assert horseshoe is not None
    assert horseshoe.unused == ()
    assert horseshoe.overshooting == (0, 1)
    assert horseshoe.loose


def test_matrix_certificate_is_reported_separately(tent3_map: PLMarkovMap) -> None:
    tight = _horseshoe_on(tent3_map, ("e#0", "e#1", "e#2"), 3)
    loose = _horseshoe_on(tent3_map, ("e#0", "e#1", "e#2"), 2)

    assert tight is not None
    assert not tight.loose
    assert not tight.certified
    assert loose is not None
    assert loose.loose
    assert loose.certified


def test_b1_has_no_two_horseshoe(b1_map: PLMarkovMap) -> None:
    assert loose_horseshoe_search(b1_map, 2) is None


def test_horseshoe_needs_two_pieces(tent3_map: PLMarkovMap) -> None:
    with pytest.raises(ValidationError, match="at least two pieces"):
        loose_horseshoe_search(tent3_map, 1)


def test_bound_report_of_the_arc(arc: TopoGraph, config: Config) -> None:
    report = bound_report(arc, config)

    assert report.kappa == 3
    assert report.corollary_bound == LogValue(Fraction(3), 3)
    assert report.sharpened_bound == LogValue(Fraction(3), 2)
    assert report.fixed_point_power_bound == 2


@pytest.mark.parametrize(
    ("name", "kappa"),
    [
        ("sigma", 4),
        ("theta", 5),
        ("dumbbell", 5),
    ],
)
def test_bound_report_follows_kappa(name: str, kappa: int, config: Config) -> None:
    report = bound_report(Catalog.by_name(name), config)

    assert report.sharpened_bound == LogValue(Fraction(3), kappa - 1)
    assert report.sharpened_bound > report.corollary_bound


def test_endpoint_cycles(tent3_map: PLMarkovMap, b1_map: PLMarkovMap) -> None:
    assert endpoint_cycles(tent3_map) == [("a",), ("b",)]
    assert endpoint_cycles(b1_map) == [("a", "b")]


def test_sides_at_the_b1_fixed_point_are_swapped(b1_map: PLMarkovMap) -> None:
    permutation = fixed_germ_permutation(b1_map, "e@1/2")

    assert permutation == {
        Germ("e", "+"): Germ("e", "-"),
        Germ("e", "-"): Germ("e", "+"),
    }
    assert germ_orbit(permutation, Germ("e", "+"), 3) == [
        Germ("e", "+"),
        Germ("e", "-"),
        Germ("e", "+"),
    ]


def test_side_permutation_needs_a_fixed_point(b1_map: PLMarkovMap) -> None:
    with pytest.raises(ValidationError, match="not a fixed point"):
        fixed_germ_permutation(b1_map, "a")
