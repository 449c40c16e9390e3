from __future__ import annotations

import itertools
import logging

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from types import MappingProxyType
from typing import TYPE_CHECKING
from typing import ClassVar

import networkx as nx

from graphdyn.config import DEFAULT_CONFIG
from graphdyn.exceptions import GraphError
from graphdyn.exceptions import ResourceLimitError
from graphdyn.rationals import format_rational
from graphdyn.rationals import rational_tag


if TYPE_CHECKING:
    from collections.abc import Callable
    from collections.abc import Iterable
    from collections.abc import Mapping
    from collections.abc import Sequence

    from graphdyn.config import Config


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Edge:
    id: str
    tail: str
    head: str
    length: Fraction

    @property
    def is_loop(self) -> bool:
        return self.tail == self.head

    def end_vertex(self, end: str) -> str:
        return self.tail if end == "tail" else self.head


@dataclass(frozen=True)
class Germ:
    """
    A local side of a point: an edge together with the direction of travel.

    ``"+"`` leaves towards growing offsets, ``"-"`` towards shrinking ones.
    At a vertex the germ of a tail end is ``"+"`` and of a head end ``"-"``.
    """

    edge: str
    direction: str

    @property
    def end(self) -> str:
        return "tail" if self.direction == "+" else "head"

    def __str__(self) -> str:
        return f"{self.edge}{self.direction}"


@dataclass(frozen=True)
class GraphPoint:
    vertex: str | None = None
    edge: str | None = None
    offset: Fraction = Fraction(0)

    @classmethod
    def at(cls, vertex: str) -> GraphPoint:
        return cls(vertex=vertex)

    @property
    def is_vertex(self) -> bool:
        return self.vertex is not None

    def __str__(self) -> str:
        if self.vertex is not None:
            return self.vertex
        return f"{self.edge}@{rational_tag(self.offset)}"


@dataclass(frozen=True)
class Segment:
    """A directed piece of one edge, from offset ``start`` to offset ``end``."""

    edge: str
    start: Fraction
    end: Fraction

    @property
    def length(self) -> Fraction:
        return abs(self.end - self.start)

    @property
    def direction(self) -> str:
        return "+" if self.end > self.start else "-"


@dataclass(frozen=True)
class PointCensus:
    valence: Mapping[str, int]
    endpoints: frozenset[str]
    branching: frozenset[str]


@dataclass(frozen=True)
class Subdivision:
    graph: TopoGraph
    vertex: str
    relocate: Callable[[GraphPoint], GraphPoint]


@dataclass(frozen=True)
class Quotient:
    graph: TopoGraph
    projection: Mapping[str, str]

    def project(self, point: GraphPoint) -> GraphPoint:
        if point.vertex is not None:
            return GraphPoint.at(self.projection[point.vertex])
        return point


class TopoGraph:
    """
    A finite connected metric multigraph.

    Loops are allowed and carry the orientation of their edge record, so
    offsets along a loop are measured from its tail end. Instances are
    immutable; every edit returns a new graph.
    """

    def __init__(self, vertices: Iterable[str], edges: Iterable[Edge]) -> None:
        self._vertices = tuple(vertices)
        self._edges: dict[str, Edge] = {}
        for edge in edges:
            if edge.id in self._edges:
                raise GraphError(f"Duplicate edge id '{edge.id}'")
            self._edges[edge.id] = edge
        self._validate()

    def _validate(self) -> None:
        if len(set(self._vertices)) != len(self._vertices):
            raise GraphError("Vertex ids must be unique")
        if not self._edges:
            raise GraphError("A graph needs at least one edge")

        known = set(self._vertices)
        for edge in self._edges.values():
            if edge.length <= 0:
                raise GraphError(f"Edge '{edge.id}' must have a positive length")
            for vertex in (edge.tail, edge.head):
                if vertex not in known:
                    raise GraphError(
                        f"Edge '{edge.id}' refers to unknown vertex '{vertex}'"
                    )

        isolated = [v for v in self._vertices if not self.ends_at(v)]
        if isolated:
            raise GraphError(f"Isolated vertices: {', '.join(isolated)}")
        if not nx.is_connected(self.multigraph):
            raise GraphError("The graph is not connected")

    @property
    def vertices(self) -> tuple[str, ...]:
        return self._vertices

    @property
    def edges(self) -> Mapping[str, Edge]:
        return MappingProxyType(self._edges)

    def edge(self, edge_id: str) -> Edge:
        try:
            return self._edges[edge_id]
        except KeyError:
            raise GraphError(f"Unknown edge '{edge_id}'") from None

    @cached_property
    def multigraph(self) -> nx.MultiGraph:
        graph = nx.MultiGraph()
        graph.add_nodes_from(self._vertices)
        for edge in self._edges.values():
            graph.add_edge(edge.tail, edge.head, key=edge.id, length=edge.length)
        return graph

    @cached_property
    def _ends(self) -> dict[str, list[Germ]]:
        ends: dict[str, list[Germ]] = {v: [] for v in self._vertices}
        for edge in self._edges.values():
            ends[edge.tail].append(Germ(edge.id, "+"))
            ends[edge.head].append(Germ(edge.id, "-"))
        return ends

    def ends_at(self, vertex: str) -> list[Germ]:
        return list(self._ends[vertex])

    def valence(self, vertex: str) -> int:
        return len(self._ends[vertex])

    @property
    def total_length(self) -> Fraction:
        return sum((e.length for e in self._edges.values()), Fraction(0))

    def euler_characteristic(self) -> int:
        return len(self._vertices) - len(self._edges)

    def is_tree(self) -> bool:
        return self.euler_characteristic() == 1

    def point(self, edge_id: str, offset: Fraction | int) -> GraphPoint:
        edge = self.edge(edge_id)
        offset = Fraction(offset)
        if not 0 <= offset <= edge.length:
            raise GraphError(
                f"Offset {format_rational(offset)} lies outside edge '{edge_id}'"
            )
        if offset == 0:
            return GraphPoint.at(edge.tail)
        if offset == edge.length:
            return GraphPoint.at(edge.head)
        return GraphPoint(edge=edge_id, offset=offset)

    def vertex_point(self, vertex: str) -> GraphPoint:
        if vertex not in self._ends:
            raise GraphError(f"Unknown vertex '{vertex}'")
        return GraphPoint.at(vertex)

    def germs(self, point: GraphPoint) -> list[Germ]:
        if point.vertex is not None:
            return self.ends_at(point.vertex)
        assert point.edge is not None
        return [Germ(point.edge, "+"), Germ(point.edge, "-")]

    def coordinate(self, point: GraphPoint, edge_id: str) -> Fraction:
        """The offset of ``point`` on ``edge_id``; vertices use the tail side."""
        edge = self.edge(edge_id)
        if point.vertex is None:
            if point.edge != edge_id:
                raise GraphError(f"{point} does not lie on edge '{edge_id}'")
            return point.offset
        if point.vertex == edge.tail:
            return Fraction(0)
        if point.vertex == edge.head:
            return edge.length
        raise GraphError(f"{point} does not lie on edge '{edge_id}'")

    def move(self, point: GraphPoint, germ: Germ, distance: Fraction) -> GraphPoint:
        """Travel ``distance`` along ``germ``, staying on its edge."""
        edge = self.edge(germ.edge)
        if point.vertex is not None:
            start = Fraction(0) if germ.direction == "+" else edge.length
        else:
            start = point.offset
        target = start + distance if germ.direction == "+" else start - distance
        return self.point(edge.id, target)

    def room(self, point: GraphPoint, germ: Germ) -> Fraction:
        """Distance from ``point`` to the end of the edge along ``germ``."""
        edge = self.edge(germ.edge)
        if point.vertex is not None:
            return edge.length
        if germ.direction == "+":
            return edge.length - point.offset
        return point.offset

    def _exits(self, point: GraphPoint) -> list[tuple[str, Segment | None]]:
        if point.vertex is not None:
            return [(point.vertex, None)]
        edge = self.edge(point.edge or "")
        return [
            (edge.tail, Segment(edge.id, point.offset, Fraction(0))),
            (edge.head, Segment(edge.id, point.offset, edge.length)),
        ]

    def geodesic(self, source: GraphPoint, target: GraphPoint) -> list[Segment]:
        """The unique arc from ``source`` to ``target``; trees only."""
        if not self.is_tree():
            raise GraphError("Geodesics are only defined on trees")
        if source == target:
            return []
        if (
            source.edge is not None
            and source.edge == target.edge
            and source.vertex is None
            and target.vertex is None
        ):
            return [Segment(source.edge, source.offset, target.offset)]

        best: list[Segment] | None = None
        best_length = Fraction(0)
        for (start, head), (finish, tail) in itertools.product(
            self._exits(source), self._exits(target)
        ):
            segments = [] if head is None else [head]
            segments.extend(self._vertex_path(start, finish))
            if tail is not None:
                segments.append(Segment(tail.edge, tail.end, tail.start))
            length = sum((s.length for s in segments), Fraction(0))
            if best is None or length < best_length:
                best, best_length = segments, length

        assert best is not None
        return [s for s in best if s.length > 0]

    def _vertex_path(self, start: str, finish: str) -> list[Segment]:
        vertices = nx.shortest_path(self.multigraph, start, finish)
        segments = []
        for a, b in itertools.pairwise(vertices):
            edge_id = next(iter(self.multigraph[a][b]))
            edge = self._edges[edge_id]
            if edge.tail == a:
                segments.append(Segment(edge_id, Fraction(0), edge.length))
            else:
                segments.append(Segment(edge_id, edge.length, Fraction(0)))
        return segments

    def distance(self, source: GraphPoint, target: GraphPoint) -> Fraction:
        return sum((s.length for s in self.geodesic(source, target)), Fraction(0))

    def subdivide(self, point: GraphPoint, vertex_id: str | None = None) -> Subdivision:
        if point.vertex is not None:
            return Subdivision(self, point.vertex, lambda p: p)

        edge = self.edge(point.edge or "")
        cut = point.offset
        vertex_id = vertex_id or str(point)
        lower = Edge(f"{edge.id}<", edge.tail, vertex_id, cut)
        upper = Edge(f"{edge.id}>", vertex_id, edge.head, edge.length - cut)
        edges = [e for e in self._edges.values() if e.id != edge.id]
        graph = TopoGraph([*self._vertices, vertex_id], [*edges, lower, upper])

        def relocate(p: GraphPoint) -> GraphPoint:
            if p.edge != edge.id:
                return p
            if p.offset < cut:
                return graph.point(lower.id, p.offset)
            return graph.point(upper.id, p.offset - cut)

        return Subdivision(graph, vertex_id, relocate)

    def with_arc(
        self, vertex: str, edge_id: str, tip: str, length: Fraction = Fraction(1)
    ) -> TopoGraph:
        self.vertex_point(vertex)
        return TopoGraph(
            [*self._vertices, tip],
            [*self._edges.values(), Edge(edge_id, vertex, tip, length)],
        )

    def wedge_copies(self, vertex: str, k: int) -> TopoGraph:
        """``k`` copies glued at ``vertex``; copy ``i`` renames ``x`` to ``x/i``."""
        self.vertex_point(vertex)
        if k == 1:
            return self

        def rename(v: str, i: int) -> str:
            return v if v == vertex else f"{v}/{i}"

        vertices = [vertex] + [
            rename(v, i) for i in range(k) for v in self._vertices if v != vertex
        ]
        edges = [
            Edge(f"{e.id}/{i}", rename(e.tail, i), rename(e.head, i), e.length)
            for i in range(k)
            for e in self._edges.values()
        ]
        return TopoGraph(vertices, edges)

    def smoothed(self) -> TopoGraph:
        """Merge edges through vertices of valence two; the homeomorphism type stays."""
        graph: TopoGraph = self
        while True:
            for vertex in graph.vertices:
                ends = graph.ends_at(vertex)
                if len(ends) != 2 or ends[0].edge == ends[1].edge:
                    continue
                first, second = (graph.edge(g.edge) for g in ends)
                a = first.head if first.tail == vertex else first.tail
                b = second.head if second.tail == vertex else second.tail
                merged = Edge(
                    f"{first.id}+{second.id}", a, b, first.length + second.length
                )
                graph = TopoGraph(
                    [v for v in graph.vertices if v != vertex],
                    [
                        e
                        for e in graph.edges.values()
                        if e.id not in (first.id, second.id)
                    ]
                    + [merged],
                )
                break
            else:
                return graph

    def is_isomorphic(self, other: TopoGraph) -> bool:
        """Isomorphism of the underlying metric multigraphs, ignoring names."""
        return bool(
            nx.is_isomorphic(
                self.multigraph,
                other.multigraph,
                edge_match=_edge_lengths_match,
            )
        )

    def is_homeomorphic(self, other: TopoGraph) -> bool:
        """Same topology: isomorphic once valence-two vertices are smoothed."""
        return bool(
            nx.is_isomorphic(self.smoothed().multigraph, other.smoothed().multigraph)
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TopoGraph):
            return NotImplemented
        same_vertices = set(self._vertices) == set(other._vertices)
        return same_vertices and self._edges == other._edges

    def __hash__(self) -> int:
        return hash((frozenset(self._vertices), frozenset(self._edges.values())))

    def __repr__(self) -> str:
        return f"<TopoGraph {len(self._vertices)} vertices, {len(self._edges)} edges>"


def _edge_lengths_match(
    first: Mapping[str, Mapping[str, Fraction]],
    second: Mapping[str, Mapping[str, Fraction]],
) -> bool:
    return sorted(d["length"] for d in first.values()) == sorted(
        d["length"] for d in second.values()
    )


def euler_characteristic(g: TopoGraph) -> int:
    return g.euler_characteristic()


def point_census(g: TopoGraph) -> PointCensus:
    valence = {v: g.valence(v) for v in g.vertices}
    return PointCensus(
        valence=MappingProxyType(valence),
        endpoints=frozenset(v for v, n in valence.items() if n == 1),
        branching=frozenset(v for v, n in valence.items() if n > 2),
    )


class _ComplementModel:
    """
    Connectivity of ``G`` minus a candidate point set.

    Candidates are vertices and one interior marker per edge. A marked edge
    leaves two half-open pieces, an unmarked one a single open piece, and a
    deleted vertex simply stops gluing the pieces that touch it.
    """

    def __init__(self, g: TopoGraph) -> None:
        self.graph = g
        self.candidates: list[tuple[str, str]] = [("vertex", v) for v in g.vertices]
        self.candidates.extend(("marker", e) for e in g.edges)

    def is_connected(self, chosen: Sequence[tuple[str, str]]) -> bool:
        deleted = {name for kind, name in chosen if kind == "vertex"}
        marked = {name for kind, name in chosen if kind == "marker"}

        parts = nx.utils.UnionFind()
        nodes: list[tuple[str, ...]] = [
            ("vertex", v) for v in self.graph.vertices if v not in deleted
        ]
        for edge in self.graph.edges.values():
            if edge.id in marked:
                pieces = [
                    (("piece", edge.id, "tail"), edge.tail),
                    (("piece", edge.id, "head"), edge.head),
                ]
            else:
                pieces = [
                    (("piece", edge.id), edge.tail),
                    (("piece", edge.id), edge.head),
                ]
            for node, vertex in pieces:
                nodes.append(node)
                if vertex not in deleted:
                    parts.union(node, ("vertex", vertex))

        return len({parts[node] for node in nodes}) == 1


def disconnection_number(g: TopoGraph, config: Config = DEFAULT_CONFIG) -> int:
    """
    ``Disc(g)``: one more than the largest non-disconnecting point set.

    Two interior points of one edge always disconnect, so the search runs
    over vertex sets with at most one marker per edge. Disconnection is
    inherited by supersets, which lets the depth-first search prune.
    """
    model = _ComplementModel(g)
    candidates = model.candidates
    best = 0
    visited = 0

    def extend(start: int, chosen: list[tuple[str, str]]) -> None:
        nonlocal best, visited
        best = max(best, len(chosen))
        for index in range(start, len(candidates)):
            visited += 1
            if visited > config.enumeration_cap:
                raise ResourceLimitError(
                    "Disconnection search exceeded the enumeration cap"
                    f" ({config.enumeration_cap})"
                )
            chosen.append(candidates[index])
            if model.is_connected(chosen):
                extend(index + 1, chosen)
            chosen.pop()

    extend(0, [])
    return best + 1


def kappa(g: TopoGraph, config: Config = DEFAULT_CONFIG) -> int:
    return disconnection_number(g, config) - g.euler_characteristic() + 1


@dataclass(frozen=True)
class SubgraphModel:
    edges: frozenset[str]
    stubs: frozenset[Germ]
    vertices: frozenset[str]

    def realize(self, g: TopoGraph, resolution: int) -> TopoGraph:
        used = [g.edge(e) for e in sorted(self.edges)]
        stub_edges = []
        tips = []
        for germ in sorted(self.stubs, key=str):
            parent = g.edge(germ.edge)
            anchor = parent.end_vertex(germ.end)
            tip = f"{germ}~tip"
            tips.append(tip)
            stub_edges.append(
                Edge(f"{germ}~stub", anchor, tip, parent.length / resolution)
            )
        return TopoGraph(sorted(self.vertices) + tips, used + stub_edges)


def subgraph_models(
    g: TopoGraph, config: Config = DEFAULT_CONFIG
) -> list[SubgraphModel]:
    """Every nondegenerate subcontinuum of ``g`` up to homeomorphism type."""
    models: list[SubgraphModel] = []

    def add(model: SubgraphModel) -> None:
        models.append(model)
        if len(models) > config.enumeration_cap:
            raise ResourceLimitError(
                f"Subgraph enumeration exceeded the cap ({config.enumeration_cap})"
            )

    for vertex in g.vertices:
        ends = g.ends_at(vertex)
        for size in range(1, len(ends) + 1):
            for chosen in itertools.combinations(ends, size):
                add(SubgraphModel(frozenset(), frozenset(chosen), frozenset([vertex])))

    edge_ids = sorted(g.edges)
    for size in range(1, len(edge_ids) + 1):
        for subset in itertools.combinations(edge_ids, size):
            vertices = frozenset(
                v for e in subset for v in (g.edge(e).tail, g.edge(e).head)
            )
            induced = g.multigraph.edge_subgraph(
                (g.edge(e).tail, g.edge(e).head, e) for e in subset
            )
            if not nx.is_connected(induced):
                continue
            free = [
                germ
                for v in sorted(vertices)
                for germ in g.ends_at(v)
                if germ.edge not in subset
            ]
            for count in range(len(free) + 1):
                for stubs in itertools.combinations(free, count):
                    add(SubgraphModel(frozenset(subset), frozenset(stubs), vertices))

    return models


def kappa_by_subgraphs(
    g: TopoGraph, resolution: int = 2, config: Config = DEFAULT_CONFIG
) -> int:
    """
    ``max Disc`` over all subgraphs of ``g``.

    Stubs are realized as separate edges of length ``1/resolution`` of their
    parent edge, half of it by default.
    """
    if resolution < 1:
        raise GraphError("Stub resolution must be a positive integer")

    smooth = g.smoothed()
    models = subgraph_models(smooth, config)
    logger.debug("Enumerated %d subgraph models", len(models))
    return max(
        disconnection_number(model.realize(smooth, resolution), config)
        for model in models
    )


def identify_points(g: TopoGraph, classes: Iterable[Iterable[str]]) -> Quotient:
    projection = {v: v for v in g.vertices}
    seen: set[str] = set()
    for cls in classes:
        members = sorted(set(cls))
        if not members:
            continue
        for vertex in members:
            if vertex not in projection:
                raise GraphError(f"'{vertex}' is not a vertex and cannot be identified")
            if vertex in seen:
                raise GraphError(f"Vertex '{vertex}' appears in two classes")
            seen.add(vertex)
        name = "+".join(members)
        for vertex in members:
            projection[vertex] = name

    vertices = list(dict.fromkeys(projection[v] for v in g.vertices))
    edges = [
        Edge(e.id, projection[e.tail], projection[e.head], e.length)
        for e in g.edges.values()
    ]
    return Quotient(TopoGraph(vertices, edges), MappingProxyType(projection))


class Catalog:
    """Named test graphs."""

    NAMES: ClassVar[tuple[str, ...]] = (
        "arc",
        "circle",
        "sigma",
        "theta",
        "figure8",
        "dumbbell",
    )

    @staticmethod
    def arc(length: Fraction = Fraction(1)) -> TopoGraph:
        return TopoGraph(["a", "b"], [Edge("e", "a", "b", length)])

    @staticmethod
    def circle() -> TopoGraph:
        return TopoGraph(["v"], [Edge("e", "v", "v", Fraction(1))])

    @staticmethod
    def star(n: int) -> TopoGraph:
        if n < 1:
            raise GraphError("A star needs at least one branch")
        return TopoGraph(
            ["c"] + [f"x{i}" for i in range(n)],
            [Edge(f"e{i}", "c", f"x{i}", Fraction(1)) for i in range(n)],
        )

    @staticmethod
    def binary_tree(n: int) -> TopoGraph:
        """``B_n``: an arc, then two copies of ``B_{n-1}`` with a root arc each."""
        if n < 1:
            raise GraphError("Binary trees start at n = 1")
        graph = Catalog.arc()
        root = graph.subdivide(graph.point("e", Fraction(1, 2)), "r").graph
        root_vertex = "r"
        for level in range(2, n + 1):
            grown = root.with_arc(root_vertex, f"s{level}", f"t{level}")
            root = grown.wedge_copies(f"t{level}", 2)
            root_vertex = f"t{level}"
        return root

    @staticmethod
    def sigma() -> TopoGraph:
        return TopoGraph(
            ["v", "x"],
            [Edge("loop", "v", "v", Fraction(1)), Edge("e", "v", "x", Fraction(1))],
        )

    @staticmethod
    def theta() -> TopoGraph:
        return TopoGraph(
            ["u", "v"],
            [Edge(f"e{i}", "u", "v", Fraction(1)) for i in range(3)],
        )

    @staticmethod
    def figure_eight() -> TopoGraph:
        return TopoGraph(
            ["v"],
            [Edge("l0", "v", "v", Fraction(1)), Edge("l1", "v", "v", Fraction(1))],
        )

    @staticmethod
    def dumbbell() -> TopoGraph:
        return TopoGraph(
            ["u", "v"],
            [
                Edge("l0", "u", "u", Fraction(1)),
                Edge("bar", "u", "v", Fraction(1)),
                Edge("l1", "v", "v", Fraction(1)),
            ],
        )

    @classmethod
    def by_name(cls, name: str) -> TopoGraph:
        builders: dict[str, Callable[[], TopoGraph]] = {
            "arc": cls.arc,
            "circle": cls.circle,
            "sigma": cls.sigma,
            "theta": cls.theta,
            "figure8": cls.figure_eight,
            "dumbbell": cls.dumbbell,
        }
        try:
            return builders[name]()
        except KeyError:
            raise GraphError(f"Unknown catalog graph '{name}'") from None
