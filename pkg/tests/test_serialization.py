from __future__ import annotations

from fractions import Fraction
from typing import TYPE_CHECKING

import pytest

from graphdyn.constructions import b1_base
from graphdyn.entropy import entropy
from graphdyn.exceptions import FormatError
from graphdyn.graphcore import Germ
from graphdyn.rationals import LogValue
from graphdyn.serialization import dumps
from graphdyn.serialization import enclosure_to_data
from graphdyn.serialization import graph_from_data
from graphdyn.serialization import graph_to_data
from graphdyn.serialization import load_file
from graphdyn.serialization import loads
from graphdyn.serialization import log_value_to_data
from graphdyn.serialization import map_from_data
from graphdyn.serialization import map_to_data
from graphdyn.serialization import pair_from_data
from graphdyn.serialization import pair_to_data
from graphdyn.serialization import point_from_text
from graphdyn.serialization import request_from_data
from graphdyn.serialization import trace_to_data
from graphdyn.structure import Side
from tests.helpers import random_points


if TYPE_CHECKING:
    from pathlib import Path

    from graphdyn.graphcore import TopoGraph
    from graphdyn.plmap import PLMarkovMap


def test_tent3_is_written_canonically(
    tent3_map: PLMarkovMap, fixture_root: Path
) -> None:
    expected = load_file(fixture_root / "tent3.json")

    assert map_to_data(tent3_map) == expected
    assert loads(dumps(map_to_data(tent3_map))) == expected


def test_map_read_back_is_the_same_map(
    tent3_map: PLMarkovMap, fixture_root: Path
) -> None:
    m = map_from_data(load_file(fixture_root / "tent3.json"))

    assert m.validate().valid
    assert dict(m.vertex_images) == dict(tent3_map.vertex_images)
    for point in random_points(tent3_map, 20):
        assert m.evaluate(point) == tent3_map.evaluate(point)


def test_graph_can_be_referenced_by_file(fixture_root: Path, arc: TopoGraph) -> None:
    m = map_from_data(
        load_file(fixture_root / "tent3_graph_reference.json"), fixture_root
    )

    assert m.graph.is_isomorphic(arc)
    assert m.interval_ids == ("e#0", "e#1", "e#2")


def test_graph_data(theta: TopoGraph, fixture_root: Path) -> None:
    data = load_file(fixture_root / "theta.json")

    assert graph_from_data(data).is_isomorphic(theta)
    assert graph_to_data(graph_from_data(data)) == data


def test_discontinuous_maps_load_but_do_not_validate(fixture_root: Path) -> None:
    m = map_from_data(load_file(fixture_root / "discontinuous.json"))

    assert "continuity" in m.validate().kinds


@pytest.mark.parametrize(
    ("fixture", "position"),
    [
        ("noncanonical.json", "$.edges[0].length"),
        ("bad_offset.json", "$.partition[1].offset"),
    ],
)
def test_format_errors_name_the_field(
    fixture_root: Path, fixture: str, position: str
) -> None:
    data = load_file(fixture_root / fixture)

    with pytest.raises(FormatError) as e:
        if "graph" in data:
            map_from_data(data)
        else:
            graph_from_data(data)

    assert e.value.position == position


def test_malformed_json_reports_line_and_column(fixture_root: Path) -> None:
    with pytest.raises(FormatError) as e:
        load_file(fixture_root / "malformed.json")

    assert e.value.position is not None
    line, column = e.value.position.split(":")
    assert int(line) >= 1
    assert int(column) >= 1


def test_missing_files_are_format_errors(fixture_root: Path) -> None:
    with pytest.raises(FormatError, match="Cannot read"):
        load_file(fixture_root / "missing.json")


@pytest.mark.parametrize(
    ("data", "message"),
    [
        ([], "Expected an object"),
        ({"vertices": ["a"]}, "Missing field 'edges'"),
        ({"vertices": "a", "edges": []}, "Expected list"),
        (
            {"vertices": ["a"], "edges": [{"id": "e", "ends": ["a"], "length": "1/1"}]},
            "exactly two ends",
        ),
        (
            {
                "vertices": ["a"],
                "edges": [{"id": "e", "ends": ["a", "z"], "length": "1/1"}],
            },
            "Unknown vertex 'z'",
        ),
    ],
)
def test_graph_format_errors(data: object, message: str) -> None:
    with pytest.raises(FormatError, match=message):
        graph_from_data(data)


def test_request_data(fixture_root: Path) -> None:
    request = request_from_data(load_file(fixture_root / "request.json"))

    assert request.segments == (("e#0",), ("e#1",))
    assert (request.gap, request.period) == (1, 2)
    assert request.total_length == 2


def test_request_needs_integers() -> None:
    with pytest.raises(FormatError, match="integer") as e:
        request_from_data({"segments": [], "gap": True, "period": 2})

    assert e.value.position == "$.gap"


def test_pair_data_keeps_the_sides(tent3_map: PLMarkovMap) -> None:
    sides = {Side("a", Germ("e", "+")), Side("b", Germ("e", "-"))}

    data = pair_to_data(tent3_map, sides)
    m, nacc = pair_from_data(data)

    assert data["nacc"][0] == {"point": "a", "edge": "e", "dir": "+"}
    assert nacc == sides
    assert map_to_data(m) == map_to_data(tent3_map)


def test_pair_data_rejects_bad_directions(tent3_map: PLMarkovMap) -> None:
    data = pair_to_data(tent3_map, [])
    data["nacc"] = [{"point": "a", "edge": "e", "dir": "*"}]

    with pytest.raises(FormatError, match="Direction") as e:
        pair_from_data(data)

    assert e.value.position == "$.nacc[0].dir"


@pytest.mark.parametrize(
    ("text", "expected"),
    [
        ("a", "a"),
        ("e@1/5", "e@1/5"),
        ("e@1/1", "b"),
    ],
)
def test_points_from_text(arc: TopoGraph, text: str, expected: str) -> None:
    assert str(point_from_text(arc, text, "--point")) == expected


@pytest.mark.parametrize(
    ("text", "message"),
    [
        ("z", "neither a vertex"),
        ("f@1/2", "neither a vertex"),
        ("e@3/2", "outside"),
        ("e@2/4", "lowest terms"),
    ],
)
def test_bad_points_from_text(arc: TopoGraph, text: str, message: str) -> None:
    with pytest.raises(FormatError, match=message):
        point_from_text(arc, text, "--point")


def test_log_value_data() -> None:
    data = log_value_to_data(LogValue(Fraction(9), 4))

    assert data["radicand"] == "3/1"
    assert data["root"] == 2
    assert data["display"] == "log(3)/2"
    assert data["approximate"].startswith("0.5493")


def test_enclosure_data(b1_map: PLMarkovMap) -> None:
    data = enclosure_to_data(entropy(b1_map))

    assert data["lower"] == data["upper"]
    assert data["converged"] is True
    assert data["depth"] == 1


def test_trace_data() -> None:
    data = trace_to_data(b1_base().trace)

    assert data == {
        "construction": "b1",
        "parameters": {},
        "points": {"central_root": "e@1/2"},
        "chains": {},
        "inequalities": [],
        "children": [],
    }


@pytest.mark.parametrize("fixture", ["tent3.json", "discontinuous.json"])
def test_canonical_map_files_are_written_back_byte_for_byte(
    fixture_root: Path, fixture: str
) -> None:
    path = fixture_root / fixture

    m = map_from_data(load_file(path))

    assert dumps(map_to_data(m)) == path.read_text(encoding="utf-8")


def test_canonical_graph_files_are_written_back_byte_for_byte(
    fixture_root: Path,
) -> None:
    path = fixture_root / "theta.json"

    graph = graph_from_data(load_file(path))

    assert dumps(graph_to_data(graph)) == path.read_text(encoding="utf-8")
