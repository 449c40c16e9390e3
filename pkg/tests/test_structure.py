from __future__ import annotations

from fractions import Fraction
from typing import TYPE_CHECKING

import pytest

from graphdyn.exceptions import ConstructionError
from graphdyn.exceptions import ValidationError
from graphdyn.graphcore import Catalog
from graphdyn.graphcore import Germ
from graphdyn.graphcore import GraphPoint
from graphdyn.plmap import PLMarkovMap
from graphdyn.purify import quotient_example
from graphdyn.structure import Side
from graphdyn.structure import detached_name
from graphdyn.structure import identify
from graphdyn.structure import side_image
from graphdyn.structure import side_permutation
from graphdyn.structure import unfold
from graphdyn.structure import vertex_sides


if TYPE_CHECKING:
    from graphdyn.config import Config
    from graphdyn.graphcore import TopoGraph


TAIL = Side("a+b", Germ("e", "+"))
HEAD = Side("a+b", Germ("e", "-"))


@pytest.fixture
def drift(arc: TopoGraph) -> PLMarkovMap:
    """Both ends fixed and hit by nothing else; the middle third flips."""
    return PLMarkovMap.from_point_images(
        arc,
        {
            GraphPoint.at("a"): GraphPoint.at("a"),
            arc.point("e", Fraction(1, 3)): arc.point("e", Fraction(2, 3)),
            arc.point("e", Fraction(2, 3)): arc.point("e", Fraction(1, 3)),
            GraphPoint.at("b"): GraphPoint.at("b"),
        },
    )


@pytest.fixture
def circle_map(drift: PLMarkovMap) -> PLMarkovMap:
    _, glued = identify(drift, [["a", "b"]])
    return glued


def test_identify_glues_the_ends(drift: PLMarkovMap) -> None:
    quotient, glued = identify(drift, [["a", "b"]])

    assert not quotient.graph.is_tree()
    assert glued.validate().valid
    assert glued.vertex_images["a+b"] == "a+b"
    assert dict(glued.interval_images) == dict(drift.interval_images)


def test_identify_needs_consistent_images() -> None:
    star = Catalog.star(2)
    m = PLMarkovMap.from_point_images(
        star,
        {
            GraphPoint.at("c"): GraphPoint.at("x1"),
            GraphPoint.at("x0"): GraphPoint.at("x0"),
            GraphPoint.at("x1"): GraphPoint.at("c"),
        },
    )

    with pytest.raises(ConstructionError, match="different image classes"):
        identify(m, [["x0", "x1"]])


def test_side_names(circle_map: PLMarkovMap) -> None:
    assert str(TAIL) == "a+b:e+"
    assert detached_name(TAIL) == "a+b|e:tail"
    assert detached_name(HEAD) == "a+b|e:head"
    assert vertex_sides(circle_map) == [TAIL, HEAD]


def test_sides_at_the_glued_vertex_are_fixed(circle_map: PLMarkovMap) -> None:
    assert side_image(circle_map, TAIL) == TAIL
    assert side_image(circle_map, HEAD) == HEAD
    assert side_permutation(circle_map) == {TAIL: TAIL, HEAD: HEAD}


def test_side_permutation_needs_cycles(b1_map: PLMarkovMap) -> None:
    a_side, b_side = Side("a", Germ("e", "+")), Side("b", Germ("e", "-"))

    assert side_permutation(b1_map, [a_side, b_side]) == {
        a_side: b_side,
        b_side: a_side,
    }
    with pytest.raises(ValidationError, match="union of cycles"):
        side_permutation(b1_map, [a_side])


@pytest.mark.parametrize(
    ("side", "message"),
    [
        (Side("e@1/2", Germ("e", "+")), "not at a vertex"),
        (Side("a", Germ("e", "-")), "is not a side of 'a'"),
    ],
)
def test_side_permutation_rejects_foreign_sides(
    b1_map: PLMarkovMap, side: Side, message: str
) -> None:
    with pytest.raises(ValidationError, match=message):
        side_permutation(b1_map, [side])


def test_unfolding_the_circle_gives_back_the_arc(
    circle_map: PLMarkovMap, drift: PLMarkovMap, config: Config
) -> None:
    unfolding = unfold(circle_map, [TAIL, HEAD], config)

    assert unfolding.graph.is_tree()
    assert unfolding.detached == ("a+b|e:head", "a+b|e:tail")
    assert dict(unfolding.map.interval_images) == dict(drift.interval_images)
    assert unfolding.vertices[TAIL] == "a+b|e:tail"
    assert unfolding.permutation[HEAD] == HEAD
    assert unfolding.projection.projection["a+b|e:head"] == "a+b"

    report = unfolding.report
    assert report.passed
    assert report.kappa == 3
    assert report.detached_below_kappa
    assert report.checked == config.samples + 4


def test_unfolding_a_single_side(circle_map: PLMarkovMap, config: Config) -> None:
    unfolding = unfold(circle_map, [TAIL], config)

    assert unfolding.graph.is_tree()
    assert set(unfolding.graph.vertices) == {"a+b", "a+b|e:tail"}
    assert unfolding.report.passed


def test_accessible_sides_cannot_be_unfolded(b1_map: PLMarkovMap) -> None:
    sides = [Side("a", Germ("e", "+")), Side("b", Germ("e", "-"))]

    with pytest.raises(ValidationError, match="discontinuous"):
        unfold(b1_map, sides)


def test_unfolding_nothing_is_the_identity(b1_map: PLMarkovMap, config: Config) -> None:
    unfolding = unfold(b1_map, [], config)

    assert unfolding.detached == ()
    assert unfolding.graph.is_isomorphic(b1_map.graph)
    assert dict(unfolding.map.vertex_images) == dict(b1_map.vertex_images)
    assert unfolding.report.passed


@pytest.mark.slow
@pytest.mark.parametrize("name", ["sigma", "dumbbell"])
def test_unfolding_a_quotient_example_gives_back_its_tree(
    name: str, config: Config, epsilon: Fraction
) -> None:
    example = quotient_example(name, epsilon, config=config)
    tree = example.tree.map

    unfolding = unfold(example.map, example.nacc, config)

    assert unfolding.graph.is_tree()
    assert unfolding.graph.is_homeomorphic(tree.graph)
    assert len(unfolding.detached) == len(example.nacc)
    assert unfolding.report.passed
    assert unfolding.report.detached_below_kappa
    assert dict(unfolding.map.interval_images) == dict(tree.interval_images)
