from __future__ import annotations

from fractions import Fraction
from typing import TYPE_CHECKING

import pytest

from graphdyn.exceptions import GraphError
from graphdyn.graphcore import Catalog
from graphdyn.graphcore import Edge
from graphdyn.graphcore import Germ
from graphdyn.graphcore import GraphPoint
from graphdyn.graphcore import Segment
from graphdyn.graphcore import TopoGraph
from graphdyn.graphcore import disconnection_number
from graphdyn.graphcore import identify_points
from graphdyn.graphcore import kappa
from graphdyn.graphcore import kappa_by_subgraphs
from graphdyn.graphcore import point_census
from graphdyn.graphcore import subgraph_models


if TYPE_CHECKING:
    from graphdyn.config import Config


@pytest.mark.parametrize(
    ("name", "expected"),
    [
        ("arc", 3),
        ("circle", 3),
        ("sigma", 4),
        ("theta", 5),
    ],
)
def test_kappa_of_catalog_graphs(name: str, expected: int, config: Config) -> None:
    assert kappa(Catalog.by_name(name), config) == expected


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_kappa_of_star_is_one_more_than_its_branches(n: int, config: Config) -> None:
    assert kappa(Catalog.star(n), config) == n + 1


@pytest.mark.parametrize(
    ("name", "expected"),
    [
        ("arc", 3),
        ("circle", 2),
        ("theta", 3),
    ],
)
def test_disconnection_number_of_catalog_graphs(
    name: str, expected: int, config: Config
) -> None:
    assert disconnection_number(Catalog.by_name(name), config) == expected


@pytest.mark.parametrize("name", Catalog.NAMES)
def test_kappa_formula_agrees_with_subgraph_enumeration(
    name: str, config: Config
) -> None:
    graph = Catalog.by_name(name)

    assert kappa(graph, config) == kappa_by_subgraphs(graph, config=config)


def test_kappa_by_subgraphs_rejects_a_zero_resolution(arc: TopoGraph) -> None:
    with pytest.raises(GraphError, match="resolution"):
        kappa_by_subgraphs(arc, resolution=0)


def test_stubs_are_half_their_parent_edge(theta: TopoGraph) -> None:
    smooth = theta.smoothed()
    models = subgraph_models(smooth)
    model = next(m for m in models if len(m.edges) == 1 and len(m.stubs) == 4)

    realized = model.realize(smooth, 2)

    for germ in model.stubs:
        stub = realized.edge(f"{germ}~stub")
        assert stub.length == smooth.edge(germ.edge).length / 2
    assert disconnection_number(realized) == 5
    assert kappa_by_subgraphs(theta) == kappa_by_subgraphs(theta, resolution=5) == 5


def test_point_census_of_sigma(sigma: TopoGraph) -> None:
    census = point_census(sigma)

    assert census.endpoints == frozenset({"x"})
    assert census.branching == frozenset({"v"})
    assert census.valence["v"] == 3


@pytest.mark.parametrize("n", [2, 3])
def test_binary_tree_has_power_of_two_endpoints(n: int) -> None:
    census = point_census(Catalog.binary_tree(n).smoothed())

    assert len(census.endpoints) == 2**n
    assert len(census.branching) == 2**n - 2


def test_euler_characteristic_of_catalog(theta: TopoGraph, arc: TopoGraph) -> None:
    assert theta.euler_characteristic() == -1
    assert arc.is_tree()
    assert not theta.is_tree()


@pytest.mark.parametrize(
    ("vertices", "edges", "message"),
    [
        (["a", "a"], [Edge("e", "a", "a", Fraction(1))], "unique"),
        (["a", "b"], [Edge("e", "a", "c", Fraction(1))], "unknown vertex"),
        (["a", "b"], [Edge("e", "a", "b", Fraction(0))], "positive length"),
        (["a", "b", "c"], [Edge("e", "a", "b", Fraction(1))], "Isolated"),
        (
            ["a", "b", "c", "d"],
            [Edge("e", "a", "b", Fraction(1)), Edge("f", "c", "d", Fraction(1))],
            "not connected",
        ),
        ([], [], "at least one edge"),
    ],
)
def test_invalid_graphs_are_rejected(
    vertices: list[str], edges: list[Edge], message: str
) -> None:
    with pytest.raises(GraphError, match=message):
        TopoGraph(vertices, edges)


def test_point_snaps_to_vertices(arc: TopoGraph) -> None:
    assert arc.point("e", 0) == GraphPoint.at("a")
    assert arc.point("e", 1) == GraphPoint.at("b")
    assert str(arc.point("e", Fraction(1, 3))) == "e@1/3"

    with pytest.raises(GraphError, match="outside"):
        arc.point("e", Fraction(3, 2))


def test_geodesic_on_star_passes_the_center() -> None:
    star = Catalog.star(3)

    path = star.geodesic(
        star.point("e0", Fraction(1, 2)), star.point("e1", Fraction(1, 4))
    )

    assert path == [
        Segment("e0", Fraction(1, 2), Fraction(0)),
        Segment("e1", Fraction(0), Fraction(1, 4)),
    ]
    assert star.distance(GraphPoint.at("x0"), GraphPoint.at("x2")) == 2


def test_geodesic_needs_a_tree(theta: TopoGraph) -> None:
    with pytest.raises(GraphError, match="trees"):
        theta.geodesic(GraphPoint.at("u"), GraphPoint.at("v"))


def test_germs_at_interior_point_and_vertex(sigma: TopoGraph) -> None:
    assert sigma.germs(sigma.point("e", Fraction(1, 2))) == [
        Germ("e", "+"),
        Germ("e", "-"),
    ]
    assert sigma.germs(GraphPoint.at("v")) == [
        Germ("loop", "+"),
        Germ("loop", "-"),
        Germ("e", "+"),
    ]


def test_subdivide_relocates_points(arc: TopoGraph) -> None:
    subdivision = arc.subdivide(arc.point("e", Fraction(1, 3)), "m")

    graph = subdivision.graph
    assert subdivision.vertex == "m"
    assert graph.valence("m") == 2
    assert subdivision.relocate(arc.point("e", Fraction(2, 3))) == graph.point(
        "e>", Fraction(1, 3)
    )
    assert subdivision.relocate(arc.point("e", Fraction(1, 6))) == graph.point(
        "e<", Fraction(1, 6)
    )
    assert graph.is_homeomorphic(arc)


def test_wedge_copies_build_a_star(arc: TopoGraph) -> None:
    wedge = arc.wedge_copies("a", 3)

    assert wedge.is_homeomorphic(Catalog.star(3))
    assert wedge.valence("a") == 3
    assert {"b/0", "b/1", "b/2"} <= set(wedge.vertices)


def test_with_arc_adds_a_tip(arc: TopoGraph) -> None:
    grown = arc.with_arc("b", "new", "tip")

    assert grown.valence("b") == 2
    assert grown.valence("tip") == 1
    assert grown.edge("new").length == 1


def test_identify_points_glues_vertices() -> None:
    star = Catalog.star(2)

    quotient = identify_points(star, [["x0", "x1"]])

    assert quotient.projection["x0"] == quotient.projection["x1"] == "x0+x1"
    assert quotient.graph.is_homeomorphic(Catalog.circle())
    assert quotient.project(GraphPoint.at("x1")) == GraphPoint.at("x0+x1")


def test_identify_points_rejects_overlapping_classes(arc: TopoGraph) -> None:
    with pytest.raises(GraphError, match="two classes"):
        identify_points(arc, [["a", "b"], ["b"]])


def test_smoothing_keeps_loops(sigma: TopoGraph) -> None:
    smooth = sigma.smoothed()

    assert smooth.is_isomorphic(sigma)
    assert Catalog.figure_eight().is_homeomorphic(Catalog.figure_eight())
    assert not Catalog.figure_eight().is_homeomorphic(Catalog.dumbbell())
