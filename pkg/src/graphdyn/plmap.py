from __future__ import annotations

import bisect
import logging

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from types import MappingProxyType
from typing import TYPE_CHECKING

import networkx as nx
import numpy as np

from graphdyn.config import DEFAULT_CONFIG
from graphdyn.exceptions import ConstructionError
from graphdyn.exceptions import ResourceLimitError
from graphdyn.exceptions import ValidationError
from graphdyn.graphcore import GraphPoint
from graphdyn.graphcore import Germ
from graphdyn.graphcore import Segment


if TYPE_CHECKING:
    import numpy.typing as npt

    from collections.abc import Iterable
    from collections.abc import Mapping
    from collections.abc import Sequence

    from graphdyn.config import Config
    from graphdyn.graphcore import TopoGraph


logger = logging.getLogger(__name__)


def canonical_pid(point: GraphPoint) -> str:
    return str(point)


@dataclass(frozen=True)
class BasicInterval:
    id: str
    edge: str
    index: int
    lo: str
    hi: str
    start: Fraction
    end: Fraction

    @property
    def length(self) -> Fraction:
        return self.end - self.start


@dataclass(frozen=True)
class Step:
    interval: str
    direction: str

    def reversed(self) -> Step:
        return Step(self.interval, "-" if self.direction == "+" else "+")


@dataclass(frozen=True)
class Affine:
    """``t -> slope * t + shift`` in local interval coordinates."""

    slope: Fraction
    shift: Fraction

    def __call__(self, t: Fraction) -> Fraction:
        return self.slope * t + self.shift

    def then(self, other: Affine) -> Affine:
        return Affine(other.slope * self.slope, other.slope * self.shift + other.shift)


class MarkovPartition:
    """
    A finite cut set ``P`` of a graph and the basic intervals it induces.

    Basic intervals are numbered ``<edge>#<k>`` from the tail of each edge.
    Every vertex is cut whether or not it was listed, so a partition that
    forgets a vertex still tiles the graph; :meth:`PLMarkovMap.validate`
    reports the omission.
    """

    def __init__(self, graph: TopoGraph, points: Mapping[str, GraphPoint]) -> None:
        self.graph = graph
        self.points: Mapping[str, GraphPoint] = MappingProxyType(dict(points))
        self._pid_by_point = {p: pid for pid, p in self.points.items()}

        intervals: dict[str, BasicInterval] = {}
        self._cuts: dict[str, list[Fraction]] = {}
        for edge in graph.edges.values():
            offsets = {Fraction(0), edge.length}
            offsets.update(p.offset for p in self.points.values() if p.edge == edge.id)
            cuts = sorted(offsets)
            self._cuts[edge.id] = cuts
            for k, (start, end) in enumerate(zip(cuts, cuts[1:])):
                interval = BasicInterval(
                    id=f"{edge.id}#{k}",
                    edge=edge.id,
                    index=k,
                    lo=self._label(graph.point(edge.id, start)),
                    hi=self._label(graph.point(edge.id, end)),
                    start=start,
                    end=end,
                )
                intervals[interval.id] = interval
        self.intervals: Mapping[str, BasicInterval] = MappingProxyType(intervals)

    @classmethod
    def canonical(
        cls, graph: TopoGraph, points: Iterable[GraphPoint]
    ) -> MarkovPartition:
        everything = {GraphPoint.at(v) for v in graph.vertices}
        everything.update(points)
        ordered = sorted(everything, key=point_key)
        return cls(graph, {canonical_pid(p): p for p in ordered})

    def _label(self, point: GraphPoint) -> str:
        return self._pid_by_point.get(point, canonical_pid(point))

    @property
    def interval_ids(self) -> tuple[str, ...]:
        return tuple(self.intervals)

    def pid_of(self, point: GraphPoint) -> str | None:
        return self._pid_by_point.get(point)

    def contains(self, point: GraphPoint) -> bool:
        return point in self._pid_by_point

    def intervals_at(self, point: GraphPoint) -> list[str]:
        """Basic intervals whose closure contains ``point``."""
        if point.vertex is not None:
            found = []
            for germ in self.graph.ends_at(point.vertex):
                found.append(self.interval_along(point, germ).id)
            return sorted(set(found), key=list(self.intervals).index)

        assert point.edge is not None
        cuts = self._cuts[point.edge]
        k = bisect.bisect_left(cuts, point.offset)
        if cuts[k] == point.offset:
            return [f"{point.edge}#{k - 1}", f"{point.edge}#{k}"]
        return [f"{point.edge}#{k - 1}"]

    def interval_along(self, point: GraphPoint, germ: Germ) -> BasicInterval:
        """The basic interval leaving ``point`` in the direction of ``germ``."""
        cuts = self._cuts[germ.edge]
        if point.vertex is not None:
            offset = cuts[0] if germ.direction == "+" else cuts[-1]
        else:
            offset = point.offset
        k = bisect.bisect_left(cuts, offset)
        if cuts[k] != offset or germ.direction == "-":
            k -= 1
        return self.intervals[f"{germ.edge}#{k}"]

    def local(self, interval_id: str, point: GraphPoint) -> Fraction:
        interval = self.intervals[interval_id]
        if point.vertex is None:
            return point.offset - interval.start
        edge = self.graph.edge(interval.edge)
        if interval.start == 0 and point.vertex == edge.tail:
            return Fraction(0)
        if interval.end == edge.length and point.vertex == edge.head:
            return interval.length
        raise ValidationError(f"{point} is not an end of '{interval_id}'")

    def at_local(self, interval_id: str, t: Fraction) -> GraphPoint:
        interval = self.intervals[interval_id]
        return self.graph.point(interval.edge, interval.start + t)

    def step_ends(self, step: Step) -> tuple[str, str]:
        interval = self.intervals[step.interval]
        if step.direction == "+":
            return interval.lo, interval.hi
        return interval.hi, interval.lo

    def pieces(self, segment: Segment) -> list[Step]:
        """Split a segment between cut points into basic-interval steps."""
        cuts = self._cuts[segment.edge]
        low, high = sorted((segment.start, segment.end))
        first = bisect.bisect_left(cuts, low)
        last = bisect.bisect_left(cuts, high)
        if cuts[first] != low or cuts[last] != high:
            raise ConstructionError(
                f"Segment on '{segment.edge}' does not end at partition points"
            )
        steps = [Step(f"{segment.edge}#{k}", "+") for k in range(first, last)]
        if segment.direction == "-":
            steps = [s.reversed() for s in reversed(steps)]
        return steps


def point_key(point: GraphPoint) -> tuple[int, str, Fraction]:
    if point.vertex is not None:
        return 0, point.vertex, Fraction(0)
    return 1, point.edge or "", point.offset


@dataclass(frozen=True)
class Diagnostic:
    kind: str
    subject: str
    message: str

    def __str__(self) -> str:
        return f"[{self.kind}] {self.subject}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    diagnostics: tuple[Diagnostic, ...]

    @property
    def valid(self) -> bool:
        return not self.diagnostics

    @property
    def kinds(self) -> frozenset[str]:
        return frozenset(d.kind for d in self.diagnostics)


@dataclass(frozen=True)
class IncidenceMatrix:
    labels: tuple[str, ...]
    rows: tuple[frozenset[int], ...]

    @property
    def dimension(self) -> int:
        return len(self.labels)

    def __getitem__(self, index: tuple[int, int]) -> int:
        i, j = index
        return int(j in self.rows[i])

    def dense(self) -> npt.NDArray[np.int64]:
        matrix = np.zeros((self.dimension, self.dimension), dtype=np.int64)
        for i, row in enumerate(self.rows):
            for j in row:
                matrix[i, j] = 1
        return matrix

    def digraph(self) -> nx.DiGraph:
        graph = nx.DiGraph()
        graph.add_nodes_from(self.labels)
        for i, row in enumerate(self.rows):
            graph.add_edges_from((self.labels[i], self.labels[j]) for j in row)
        return graph

    def restricted(self, labels: Sequence[str]) -> IncidenceMatrix:
        position = {label: i for i, label in enumerate(labels)}
        index = {label: i for i, label in enumerate(self.labels)}
        rows = []
        for label in labels:
            row = self.rows[index[label]]
            rows.append(
                frozenset(
                    position[self.labels[j]]
                    for j in row
                    if self.labels[j] in position
                )
            )
        return IncidenceMatrix(tuple(labels), tuple(rows))

    def to_dot(self, name: str = "markov") -> str:
        lines = [f"digraph {name} {{"]
        lines.extend(f'  "{label}";' for label in self.labels)
        for i, row in enumerate(self.rows):
            lines.extend(
                f'  "{self.labels[i]}" -> "{self.labels[j]}";' for j in sorted(row)
            )
        lines.append("}")
        return "\n".join(lines) + "\n"


class PLMarkovMap:
    """
    A P-linear P-Markov self-map of a graph.

    Each basic interval is sent linearly, by arc length, along a path of
    basic intervals. The data is stored as given; :meth:`validate` checks
    the Markov, continuity and monotonicity conditions and every analysis
    entry point refuses invalid maps.
    """

    def __init__(
        self,
        partition: MarkovPartition,
        vertex_images: Mapping[str, str],
        interval_images: Mapping[str, Sequence[Step]],
    ) -> None:
        self.partition = partition
        self.vertex_images: Mapping[str, str] = MappingProxyType(dict(vertex_images))
        self.interval_images: Mapping[str, tuple[Step, ...]] = MappingProxyType(
            {iid: tuple(path) for iid, path in interval_images.items()}
        )

    @property
    def graph(self) -> TopoGraph:
        return self.partition.graph

    @property
    def interval_ids(self) -> tuple[str, ...]:
        return self.partition.interval_ids

    @cached_property
    def report(self) -> ValidationReport:
        return ValidationReport(tuple(self._diagnostics()))

    def validate(self) -> ValidationReport:
        return self.report

    def ensure_valid(self) -> PLMarkovMap:
        if not self.report.valid:
            summary = "; ".join(str(d) for d in self.report.diagnostics[:5])
            raise ValidationError(
                f"Invalid Markov map ({len(self.report.diagnostics)} problems):"
                f" {summary}",
                self.report.diagnostics,
            )
        return self

    def _diagnostics(self) -> Iterable[Diagnostic]:
        partition = self.partition
        points = partition.points

        for vertex in self.graph.vertices:
            if not partition.contains(GraphPoint.at(vertex)):
                yield Diagnostic("partition", vertex, "vertex is not a partition point")

        for pid in points:
            if pid not in self.vertex_images:
                yield Diagnostic("missing", pid, "partition point has no image")
        for pid, image in self.vertex_images.items():
            if pid not in points:
                yield Diagnostic("missing", pid, "image given for an unknown point")
            elif image not in points:
                yield Diagnostic(
                    "markov", pid, f"image '{image}' is not a partition point"
                )

        for iid, interval in partition.intervals.items():
            path = self.interval_images.get(iid)
            if path is None:
                yield Diagnostic("missing", iid, "basic interval has no image path")
                continue
            yield from self._path_diagnostics(interval, path)

        for iid in self.interval_images:
            if iid not in partition.intervals:
                yield Diagnostic("missing", iid, "image path for an unknown interval")

    def _path_diagnostics(
        self, interval: BasicInterval, path: Sequence[Step]
    ) -> Iterable[Diagnostic]:
        partition = self.partition
        if not path:
            yield Diagnostic("monotonicity", interval.id, "empty image path")
            return

        unknown = [s.interval for s in path if s.interval not in partition.intervals]
        if unknown:
            yield Diagnostic(
                "missing", interval.id, f"path uses unknown intervals {unknown}"
            )
            return

        seen_intervals = [s.interval for s in path]
        if len(set(seen_intervals)) != len(seen_intervals):
            yield Diagnostic(
                "monotonicity", interval.id, "image path visits an interval twice"
            )

        visited = [partition.step_ends(path[0])[0]]
        for previous, step in zip(path, path[1:]):
            end = partition.step_ends(previous)[1]
            start = partition.step_ends(step)[0]
            if end != start:
                yield Diagnostic(
                    "continuity",
                    interval.id,
                    f"path breaks between '{previous.interval}' and '{step.interval}'",
                )
            visited.append(start)
        visited.append(partition.step_ends(path[-1])[1])
        inner = visited[1:-1]
        if len(set(inner)) != len(inner) or set(inner) & {visited[0], visited[-1]}:
            yield Diagnostic(
                "monotonicity", interval.id, "image path passes a point twice"
            )

        for pid, end in ((interval.lo, visited[0]), (interval.hi, visited[-1])):
            image = self.vertex_images.get(pid)
            if image is not None and image != end:
                yield Diagnostic(
                    "continuity",
                    pid,
                    f"interval '{interval.id}' sends it to '{end}', not '{image}'",
                )

    def path_length(self, interval_id: str) -> Fraction:
        intervals = self.partition.intervals
        return sum(
            (intervals[s.interval].length for s in self.interval_images[interval_id]),
            Fraction(0),
        )

    def slope(self, interval_id: str) -> Fraction:
        length = self.partition.intervals[interval_id].length
        return self.path_length(interval_id) / length

    def image_of_pid(self, pid: str) -> GraphPoint:
        return self.partition.points[self.vertex_images[pid]]

    def evaluate(self, point: GraphPoint) -> GraphPoint:
        self.ensure_valid()
        pid = self.partition.pid_of(point)
        if pid is not None:
            return self.image_of_pid(pid)
        iid = self.partition.intervals_at(point)[0]
        return self.evaluate_local(iid, self.partition.local(iid, point))

    def evaluate_local(self, interval_id: str, t: Fraction) -> GraphPoint:
        intervals = self.partition.intervals
        distance = self.slope(interval_id) * t
        path = self.interval_images[interval_id]
        for step in path:
            target = intervals[step.interval]
            if distance <= target.length or step is path[-1]:
                offset = (
                    target.start + distance
                    if step.direction == "+"
                    else target.end - distance
                )
                return self.graph.point(target.edge, offset)
            distance -= target.length
        raise AssertionError("unreachable")

    def branch(self, source: str, target: str) -> tuple[Affine, Fraction, Fraction]:
        """
        The affine branch from ``source`` onto ``target`` in local coordinates.

        Returns the map together with the closed ``source`` domain on which
        the image lies in ``target``.
        """
        intervals = self.partition.intervals
        slope = self.slope(source)
        covered = Fraction(0)
        for step in self.interval_images[source]:
            length = intervals[step.interval].length
            if step.interval == target:
                if step.direction == "+":
                    affine = Affine(slope, -covered)
                else:
                    affine = Affine(-slope, length + covered)
                return affine, covered / slope, (covered + length) / slope
            covered += length
        raise ValidationError(f"'{source}' does not cover '{target}'")

    @cached_property
    def incidence(self) -> IncidenceMatrix:
        self.ensure_valid()
        labels = self.interval_ids
        index = {label: i for i, label in enumerate(labels)}
        rows = tuple(
            frozenset(index[s.interval] for s in self.interval_images[label])
            for label in labels
        )
        return IncidenceMatrix(labels, rows)

    def incidence_matrix(self) -> IncidenceMatrix:
        return self.incidence

    def markov_graph(self) -> nx.DiGraph:
        return self.incidence.digraph()

    def point_images(self) -> dict[GraphPoint, GraphPoint]:
        points = self.partition.points
        return {points[pid]: points[image] for pid, image in self.vertex_images.items()}

    def germ_image(self, pid: str, germ: Germ) -> Germ:
        """The side map: where the local side ``germ`` at ``pid`` is sent."""
        point = self.partition.points[pid]
        interval = self.partition.interval_along(point, germ)
        path = self.interval_images[interval.id]
        leaving_from_lo = germ.direction == "+"
        if leaving_from_lo:
            first = path[0]
            return Germ(self.partition.intervals[first.interval].edge, first.direction)
        last = path[-1].reversed()
        return Germ(self.partition.intervals[last.interval].edge, last.direction)

    @classmethod
    def from_point_images(
        cls,
        graph: TopoGraph,
        knots: Mapping[GraphPoint, GraphPoint],
        config: Config = DEFAULT_CONFIG,
    ) -> PLMarkovMap:
        """
        Interpolate knot images linearly along geodesics of a tree.

        The knot set is closed under forward iteration so that the result
        is Markov with respect to it.
        """
        if not graph.is_tree():
            raise ConstructionError("Knot interpolation needs a tree")
        missing = [v for v in graph.vertices if GraphPoint.at(v) not in knots]
        if missing:
            raise ConstructionError(f"Vertices without knot images: {missing}")
        return _KnotInterpolation(graph, knots).build(config)

    def refined(
        self, points: Iterable[GraphPoint], config: Config = DEFAULT_CONFIG
    ) -> PLMarkovMap:
        knots = self.point_images()
        for point in points:
            knots.setdefault(point, self.evaluate(point))
        return PLMarkovMap.from_point_images(self.graph, knots, config)

    def __repr__(self) -> str:
        return (
            f"<PLMarkovMap {len(self.partition.points)} points,"
            f" {len(self.partition.intervals)} intervals>"
        )


class _KnotInterpolation:
    def __init__(
        self, graph: TopoGraph, knots: Mapping[GraphPoint, GraphPoint]
    ) -> None:
        self.graph = graph
        self.knots = dict(knots)
        self._offsets: dict[str, list[Fraction]] = {}
        self._images: dict[str, list[GraphPoint]] = {}
        for edge in graph.edges.values():
            pairs = {Fraction(0): knots[GraphPoint.at(edge.tail)]}
            pairs[edge.length] = knots[GraphPoint.at(edge.head)]
            for point, image in knots.items():
                if point.edge == edge.id:
                    pairs[point.offset] = image
            ordered = sorted(pairs)
            self._offsets[edge.id] = ordered
            self._images[edge.id] = [pairs[o] for o in ordered]
        self._geodesics: dict[tuple[str, int], tuple[list[Segment], Fraction]] = {}

    def _piece(self, edge_id: str, k: int) -> tuple[list[Segment], Fraction]:
        key = (edge_id, k)
        if key not in self._geodesics:
            images = self._images[edge_id]
            segments = self.graph.geodesic(images[k], images[k + 1])
            if not segments:
                offsets = self._offsets[edge_id]
                raise ConstructionError(
                    f"Knot images collapse [{offsets[k]}, {offsets[k + 1]}]"
                    f" on '{edge_id}' to a point"
                )
            length = sum((s.length for s in segments), Fraction(0))
            self._geodesics[key] = (segments, length)
        return self._geodesics[key]

    def _locate(self, point: GraphPoint) -> tuple[str, int, Fraction]:
        assert point.edge is not None
        offsets = self._offsets[point.edge]
        k = bisect.bisect_right(offsets, point.offset) - 1
        return point.edge, k, point.offset

    def _position(self, edge_id: str, k: int, offset: Fraction) -> Fraction:
        """Arc length travelled along the ``k``-th piece's image at ``offset``."""
        offsets = self._offsets[edge_id]
        _, length = self._piece(edge_id, k)
        return (offset - offsets[k]) / (offsets[k + 1] - offsets[k]) * length

    def image(self, point: GraphPoint) -> GraphPoint:
        if point in self.knots:
            return self.knots[point]
        edge_id, k, offset = self._locate(point)
        segments, _ = self._piece(edge_id, k)
        return _walk(self.graph, segments, self._position(edge_id, k, offset))

    def build(self, config: Config) -> PLMarkovMap:
        points = set(self.knots)
        frontier = list(self.knots.values())
        images = dict(self.knots)
        while frontier:
            point = frontier.pop()
            if point in images:
                continue
            if len(images) > config.closure_cap:
                raise ResourceLimitError(
                    f"Forward closure exceeded {config.closure_cap} partition points"
                )
            image = self.image(point)
            images[point] = image
            points.add(point)
            frontier.append(image)
        points.update(images.values())
        logger.debug("Knot closure has %d partition points", len(points))

        partition = MarkovPartition.canonical(self.graph, points)
        vertex_images = {
            pid: canonical_pid(images[p]) for pid, p in partition.points.items()
        }
        interval_images = {
            iid: self._interval_path(partition, interval)
            for iid, interval in partition.intervals.items()
        }
        return PLMarkovMap(
            partition,
            vertex_images,
            interval_images,
        )

    def _interval_path(
        self, partition: MarkovPartition, interval: BasicInterval
    ) -> list[Step]:
        edge_id = interval.edge
        k = bisect.bisect_right(self._offsets[edge_id], interval.start) - 1
        segments, _ = self._piece(edge_id, k)
        begin = self._position(edge_id, k, interval.start)
        finish = self._position(edge_id, k, interval.end)
        steps: list[Step] = []
        for segment in _slice(segments, begin, finish):
            steps.extend(partition.pieces(segment))
        return steps


def _walk(
    graph: TopoGraph, segments: Sequence[Segment], distance: Fraction
) -> GraphPoint:
    for segment in segments:
        if distance <= segment.length or segment is segments[-1]:
            offset = (
                segment.start + distance
                if segment.direction == "+"
                else segment.start - distance
            )
            return graph.point(segment.edge, offset)
        distance -= segment.length
    raise AssertionError("unreachable")


def _slice(
    segments: Sequence[Segment], begin: Fraction, finish: Fraction
) -> list[Segment]:
    pieces = []
    travelled = Fraction(0)
    for segment in segments:
        low = max(begin, travelled)
        high = min(finish, travelled + segment.length)
        if low < high:
            sign = 1 if segment.direction == "+" else -1
            pieces.append(
                Segment(
                    segment.edge,
                    segment.start + sign * (low - travelled),
                    segment.start + sign * (high - travelled),
                )
            )
        travelled += segment.length
    return pieces
