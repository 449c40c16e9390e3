from __future__ import annotations

import json

from fractions import Fraction
from pathlib import Path
from typing import TYPE_CHECKING
from typing import Any

from graphdyn.exceptions import FormatError
from graphdyn.graphcore import Edge
from graphdyn.graphcore import Germ
from graphdyn.graphcore import GraphPoint
from graphdyn.graphcore import TopoGraph
from graphdyn.plmap import MarkovPartition
from graphdyn.plmap import PLMarkovMap
from graphdyn.plmap import Step
from graphdyn.plmap import point_key
from graphdyn.rationals import format_rational
from graphdyn.rationals import parse_rational
from graphdyn.specprop import ShadowingRequest
from graphdyn.structure import Side


if TYPE_CHECKING:
    from collections.abc import Iterable

    from graphdyn.constructions import ConstructionTrace
    from graphdyn.entropy import EntropyEnclosure
    from graphdyn.rationals import LogValue


DIRECTIONS = ("+", "-")


def loads(text: str, source: str = "<input>") -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(f"{source}: {e.msg}", f"{e.lineno}:{e.colno}") from None


def load_file(path: Path) -> Any:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise FormatError(f"Cannot read {path}: {e.strerror}") from None
    return loads(text, str(path))


def dumps(data: Any) -> str:
    return json.dumps(data, indent=2, ensure_ascii=False) + "\n"


def _field(data: Any, key: str, path: str, kind: type = object) -> Any:
    if not isinstance(data, dict):
        raise FormatError("Expected an object", path)
    if key not in data:
        raise FormatError(f"Missing field '{key}'", path)
    value = data[key]
    if not isinstance(value, kind):
        raise FormatError(f"Expected {kind.__name__}", f"{path}.{key}")
    return value


def _string(value: Any, path: str) -> str:
    if not isinstance(value, str):
        raise FormatError("Expected a string", path)
    return value


def _integer(value: Any, path: str) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise FormatError("Expected an integer", path)
    return value


def _rational(value: Any, path: str) -> Fraction:
    return parse_rational(_string(value, path), path)


def graph_to_data(g: TopoGraph) -> dict[str, Any]:
    return {
        "vertices": list(g.vertices),
        "edges": [
            {
                "id": e.id,
                "ends": [e.tail, e.head],
                "length": format_rational(e.length),
            }
            for e in g.edges.values()
        ],
    }


def graph_from_data(data: Any, path: str = "$") -> TopoGraph:
    vertices = [
        _string(v, f"{path}.vertices[{i}]")
        for i, v in enumerate(_field(data, "vertices", path, list))
    ]
    edges = []
    for i, item in enumerate(_field(data, "edges", path, list)):
        where = f"{path}.edges[{i}]"
        ends = _field(item, "ends", where, list)
        if len(ends) != 2:
            raise FormatError("An edge has exactly two ends", f"{where}.ends")
        tail, head = (_string(v, f"{where}.ends[{k}]") for k, v in enumerate(ends))
        for k, vertex in enumerate((tail, head)):
            if vertex not in vertices:
                raise FormatError(f"Unknown vertex '{vertex}'", f"{where}.ends[{k}]")
        edges.append(
            Edge(
                _string(_field(item, "id", where), f"{where}.id"),
                tail,
                head,
                _rational(_field(item, "length", where), f"{where}.length"),
            )
        )
    return TopoGraph(vertices, edges)


def map_to_data(m: PLMarkovMap) -> dict[str, Any]:
    interior = sorted(
        (p for p in m.partition.points.values() if p.vertex is None), key=point_key
    )
    partition = m.partition
    ordered = sorted(partition.points.items(), key=lambda item: point_key(item[1]))
    return {
        "graph": graph_to_data(m.graph),
        "partition": [
            {
                "id": partition.pid_of(p),
                "edge": p.edge,
                "offset": format_rational(p.offset),
            }
            for p in interior
        ],
        "vertex_images": {pid: m.vertex_images[pid] for pid, _ in ordered},
        "interval_images": {
            iid: [
                {"interval": s.interval, "dir": s.direction}
                for s in m.interval_images[iid]
            ]
            for iid in m.interval_ids
        },
    }


def _graph_reference(data: Any, base: Path | None, path: str) -> TopoGraph:
    reference = _field(data, "graph", path)
    if isinstance(reference, str):
        location = Path(reference) if base is None else base / reference
        return graph_from_data(load_file(location))
    return graph_from_data(reference, f"{path}.graph")


def map_from_data(data: Any, base: Path | None = None, path: str = "$") -> PLMarkovMap:
    graph = _graph_reference(data, base, path)

    points: dict[str, GraphPoint] = {v: GraphPoint.at(v) for v in graph.vertices}
    for i, item in enumerate(_field(data, "partition", path, list)):
        where = f"{path}.partition[{i}]"
        pid = _string(_field(item, "id", where), f"{where}.id")
        edge = _string(_field(item, "edge", where), f"{where}.edge")
        if edge not in graph.edges:
            raise FormatError(f"Unknown edge '{edge}'", f"{where}.edge")
        offset = _rational(_field(item, "offset", where), f"{where}.offset")
        if not 0 < offset < graph.edge(edge).length:
            raise FormatError("Offset must lie inside the edge", f"{where}.offset")
        if pid in points:
            raise FormatError(f"Duplicate partition id '{pid}'", f"{where}.id")
        points[pid] = graph.point(edge, offset)

    vertex_images: dict[str, str] = {}
    images = _field(data, "vertex_images", path, dict)
    for pid, image in images.items():
        where = f"{path}.vertex_images.{pid}"
        if pid not in points:
            raise FormatError(f"Unknown partition id '{pid}'", where)
        vertex_images[pid] = _string(image, where)

    partition = MarkovPartition(graph, points)
    interval_images: dict[str, list[Step]] = {}
    paths = _field(data, "interval_images", path, dict)
    for iid, steps in paths.items():
        where = f"{path}.interval_images.{iid}"
        if iid not in partition.intervals:
            raise FormatError(f"Unknown basic interval '{iid}'", where)
        if not isinstance(steps, list):
            raise FormatError("Expected a list of steps", where)
        interval_images[iid] = [
            _step(step, partition, f"{where}[{k}]") for k, step in enumerate(steps)
        ]
    return PLMarkovMap(partition, vertex_images, interval_images)


def _step(data: Any, partition: MarkovPartition, path: str) -> Step:
    interval = _string(_field(data, "interval", path), f"{path}.interval")
    if interval not in partition.intervals:
        raise FormatError(f"Unknown basic interval '{interval}'", f"{path}.interval")
    direction = _field(data, "dir", path)
    if direction not in DIRECTIONS:
        raise FormatError("Direction must be '+' or '-'", f"{path}.dir")
    return Step(interval, direction)


def side_to_data(side: Side) -> dict[str, str]:
    return {"point": side.point, "edge": side.germ.edge, "dir": side.germ.direction}


def pair_to_data(m: PLMarkovMap, nacc: Iterable[Side]) -> dict[str, Any]:
    return {
        "map": map_to_data(m),
        "nacc": [side_to_data(s) for s in sorted(nacc, key=str)],
    }


def pair_from_data(
    data: Any, base: Path | None = None
) -> tuple[PLMarkovMap, frozenset[Side]]:
    reference = _field(data, "map", "$")
    if isinstance(reference, str):
        location = Path(reference) if base is None else base / reference
        m = map_from_data(load_file(location), location.parent)
    else:
        m = map_from_data(reference, base, "$.map")
    sides = []
    for i, item in enumerate(_field(data, "nacc", "$", list)):
        where = f"$.nacc[{i}]"
        direction = _field(item, "dir", where)
        if direction not in DIRECTIONS:
            raise FormatError("Direction must be '+' or '-'", f"{where}.dir")
        edge = _string(_field(item, "edge", where), f"{where}.edge")
        point = _string(_field(item, "point", where), f"{where}.point")
        sides.append(Side(point, Germ(edge, direction)))
    return m, frozenset(sides)


def request_from_data(data: Any) -> ShadowingRequest:
    segments = []
    for i, segment in enumerate(_field(data, "segments", "$", list)):
        where = f"$.segments[{i}]"
        if not isinstance(segment, list):
            raise FormatError("Expected a list of interval ids", where)
        segments.append(
            tuple(_string(iid, f"{where}[{k}]") for k, iid in enumerate(segment))
        )
    return ShadowingRequest(
        tuple(segments),
        _integer(_field(data, "gap", "$"), "$.gap"),
        _integer(_field(data, "period", "$"), "$.period"),
    )


def log_value_to_data(value: LogValue) -> dict[str, Any]:
    normal = value.normalized()
    return {
        "radicand": format_rational(normal.radicand),
        "root": normal.root,
        "display": str(normal),
        "approximate": value.approximate(),
    }


def enclosure_to_data(enclosure: EntropyEnclosure) -> dict[str, Any]:
    return {
        "lower": log_value_to_data(enclosure.lower),
        "upper": log_value_to_data(enclosure.upper),
        "depth": enclosure.depth,
        "converged": enclosure.converged,
        "method": enclosure.method,
    }


def _plain(value: object) -> object:
    if isinstance(value, Fraction):
        return format_rational(value)
    if isinstance(value, list):
        return [_plain(v) for v in value]
    return value


def trace_to_data(trace: ConstructionTrace) -> dict[str, Any]:
    return {
        "construction": trace.construction,
        "parameters": {k: _plain(v) for k, v in trace.parameters.items()},
        "points": {k: point_to_text(p) for k, p in trace.points.items()},
        "chains": {
            k: [point_to_text(p) for p in chain] for k, chain in trace.chains.items()
        },
        "inequalities": list(trace.inequalities),
        "children": [trace_to_data(child) for child in trace.children],
    }


def point_to_text(point: GraphPoint) -> str:
    """The exact ``<edge>@<p/q>`` spelling, also for offsets too long for ids."""
    if point.vertex is not None:
        return point.vertex
    return f"{point.edge}@{format_rational(point.offset)}"


def point_from_text(graph: TopoGraph, text: str, position: str) -> GraphPoint:
    """Parse a vertex id or an ``<edge>@<p/q>`` partition point id."""
    if text in graph.vertices:
        return GraphPoint.at(text)
    edge, separator, offset = text.rpartition("@")
    if not separator or edge not in graph.edges:
        raise FormatError(f"'{text}' is neither a vertex nor '<edge>@<p/q>'", position)
    value = parse_rational(offset, position)
    if not 0 <= value <= graph.edge(edge).length:
        raise FormatError(f"Offset {offset} lies outside '{edge}'", position)
    return graph.point(edge, value)
