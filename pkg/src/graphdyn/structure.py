from __future__ import annotations

import logging
import random

from dataclasses import dataclass
from fractions import Fraction
from types import MappingProxyType
from typing import TYPE_CHECKING

from graphdyn.config import DEFAULT_CONFIG
from graphdyn.exceptions import ConstructionError
from graphdyn.exceptions import ValidationError
from graphdyn.graphcore import Edge
from graphdyn.graphcore import Germ
from graphdyn.graphcore import GraphPoint
from graphdyn.graphcore import Quotient
from graphdyn.graphcore import TopoGraph
from graphdyn.graphcore import identify_points
from graphdyn.graphcore import kappa
from graphdyn.plmap import MarkovPartition
from graphdyn.plmap import PLMarkovMap
from graphdyn.plmap import canonical_pid


if TYPE_CHECKING:
    from collections.abc import Iterable
    from collections.abc import Iterator
    from collections.abc import Mapping

    from graphdyn.config import Config


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Side:
    """A local side of the graph at a partition point."""

    point: str
    germ: Germ

    def __str__(self) -> str:
        return f"{self.point}:{self.germ}"


@dataclass(frozen=True)
class UnfoldReport:
    semiconjugacy: bool
    checked: int
    failures: tuple[str, ...]
    detached: int
    kappa: int
    unique_preimages: bool

    @property
    def detached_below_kappa(self) -> bool:
        return self.detached < self.kappa

    @property
    def passed(self) -> bool:
        return self.semiconjugacy and self.unique_preimages


@dataclass(frozen=True)
class Unfolding:
    map: PLMarkovMap
    projection: Quotient
    detached: tuple[str, ...]
    report: UnfoldReport
    permutation: Mapping[Side, Side]
    vertices: Mapping[Side, str]

    @property
    def graph(self) -> TopoGraph:
        return self.map.graph


def side_image(m: PLMarkovMap, side: Side) -> Side:
    return Side(m.vertex_images[side.point], m.germ_image(side.point, side.germ))


def vertex_sides(m: PLMarkovMap) -> list[Side]:
    return [
        Side(pid, germ)
        for pid, point in m.partition.points.items()
        if point.vertex is not None
        for germ in m.graph.ends_at(point.vertex)
    ]


def side_permutation(
    m: PLMarkovMap, sides: Iterable[Side] | None = None
) -> dict[Side, Side]:
    """
    The side map restricted to ``sides``, or on every vertex side.

    Raises when ``sides`` is not a union of cycles of the side map.
    """
    m.ensure_valid()
    if sides is None:
        return {side: side_image(m, side) for side in vertex_sides(m)}
    chosen = frozenset(sides)
    for side in chosen:
        point = m.partition.points.get(side.point)
        if point is None or point.vertex is None:
            raise ValidationError(f"Side {side} is not at a vertex of the partition")
        if side.germ not in m.graph.ends_at(point.vertex):
            raise ValidationError(f"{side.germ} is not a side of '{side.point}'")

    images = {side: side_image(m, side) for side in chosen}
    if set(images.values()) != chosen:
        raise ValidationError(
            "Inaccessible sides are not a union of cycles of the side map"
        )
    return images


def detached_name(side: Side) -> str:
    return f"{side.point}|{side.germ.edge}:{side.germ.end}"


def _split_graph(graph: TopoGraph, detached: dict[Side, str]) -> TopoGraph:
    def end(vertex: str, edge: str, direction: str) -> str:
        return detached.get(Side(vertex, Germ(edge, direction)), vertex)

    edges = [
        Edge(e.id, end(e.tail, e.id, "+"), end(e.head, e.id, "-"), e.length)
        for e in graph.edges.values()
    ]
    used = {v for e in edges for v in (e.tail, e.head)}
    vertices = [v for v in graph.vertices if v in used]
    vertices.extend(sorted(detached.values()))
    return TopoGraph(vertices, edges)


def _sample_points(m: PLMarkovMap, samples: int, seed: int) -> Iterator[GraphPoint]:
    yield from m.partition.points.values()
    rng = random.Random(seed)
    ids = m.interval_ids
    for _ in range(samples):
        interval = m.partition.intervals[rng.choice(ids)]
        t = Fraction(rng.randint(1, 999), 1000) * interval.length
        yield m.partition.at_local(interval.id, t)


def unfold(
    m: PLMarkovMap,
    nacc: Iterable[Side],
    config: Config = DEFAULT_CONFIG,
    seed: int = 0,
) -> Unfolding:
    """
    Detach the inaccessible sides ``nacc`` into new endpoints.

    Each side in ``nacc`` gets its own vertex ``<v>|<edge>:<end>``; the
    lifted map sends it to the vertex of its image side. The projection
    back is checked to be a semiconjugacy on every partition point and on
    ``config.samples`` seeded random points.
    """
    permutation = side_permutation(m, nacc)
    detached = {side: detached_name(side) for side in permutation}
    graph = _split_graph(m.graph, detached)

    remaining = set(graph.vertices)
    for side in permutation:
        vertex = side.point
        if vertex not in remaining:
            continue
        for germ in m.graph.ends_at(vertex):
            regular = Side(vertex, germ)
            if regular in permutation:
                continue
            if side_image(m, regular) in permutation:
                raise ValidationError(
                    f"Lifted map is discontinuous: regular side {regular} is"
                    " sent to an inaccessible side"
                )

    points: dict[str, GraphPoint] = {}
    vertex_images: dict[str, str] = {}
    for pid, point in m.partition.points.items():
        if point.vertex is not None and point.vertex not in remaining:
            continue
        points[pid] = point
        vertex_images[pid] = m.vertex_images[pid]
    for side, name in detached.items():
        points[name] = GraphPoint.at(name)
        vertex_images[name] = detached[permutation[side]]

    partition = MarkovPartition(graph, points)
    lifted = PLMarkovMap(partition, vertex_images, m.interval_images)
    if not lifted.report.valid:
        raise ValidationError("Lifted map is discontinuous", lifted.report.diagnostics)

    projection = {v: v for v in graph.vertices if v in m.graph.vertices}
    projection.update({name: side.point for side, name in detached.items()})
    quotient = Quotient(m.graph, MappingProxyType(projection))

    names = tuple(detached.values())
    report = _check_unfolding(m, lifted, quotient, names, config, seed)
    logger.debug("Unfolded %d sides: %s", len(detached), report)
    return Unfolding(
        lifted,
        quotient,
        tuple(sorted(detached.values())),
        report,
        MappingProxyType(permutation),
        MappingProxyType(detached),
    )


def _check_unfolding(
    m: PLMarkovMap,
    lifted: PLMarkovMap,
    quotient: Quotient,
    detached: tuple[str, ...],
    config: Config,
    seed: int,
) -> UnfoldReport:
    failures = []
    checked = 0
    for point in _sample_points(lifted, config.samples, seed):
        checked += 1
        upstairs = quotient.project(lifted.evaluate(point))
        downstairs = m.evaluate(quotient.project(point))
        if upstairs != downstairs:
            failures.append(f"{point}: {upstairs} != {downstairs}")

    preimages = {name: 0 for name in detached}
    for image in lifted.vertex_images.values():
        if image in preimages:
            preimages[image] += 1
    return UnfoldReport(
        semiconjugacy=not failures,
        checked=checked,
        failures=tuple(failures[:20]),
        detached=len(detached),
        kappa=kappa(m.graph, config),
        unique_preimages=all(count == 1 for count in preimages.values()),
    )


def identify(
    m: PLMarkovMap, classes: Iterable[Iterable[str]]
) -> tuple[Quotient, PLMarkovMap]:
    """
    Push ``m`` down to the graph with each class of vertices glued together.

    Every class has to be sent into a single class, otherwise the quotient
    map is not well defined.
    """
    quotient = identify_points(m.graph, classes)
    points: dict[str, GraphPoint] = {}
    vertex_images: dict[str, str] = {}
    for pid, point in m.partition.points.items():
        projected = quotient.project(point)
        new_pid = canonical_pid(projected)
        image = canonical_pid(quotient.project(m.image_of_pid(pid)))
        if vertex_images.setdefault(new_pid, image) != image:
            raise ConstructionError(
                f"Identified points in '{new_pid}' have different image classes"
            )
        points[new_pid] = projected

    partition = MarkovPartition(quotient.graph, points)
    return quotient, PLMarkovMap(partition, vertex_images, m.interval_images)
