from __future__ import annotations

import logging

from dataclasses import dataclass
from typing import TYPE_CHECKING

from graphdyn.config import DEFAULT_CONFIG
from graphdyn.dynamics import graph_period
from graphdyn.dynamics import is_transitive
from graphdyn.dynamics import periodic_points
from graphdyn.dynamics import solve_closed_walk
from graphdyn.exceptions import ShadowingError


if TYPE_CHECKING:
    from collections.abc import Sequence

    from graphdyn.config import Config
    from graphdyn.graphcore import GraphPoint
    from graphdyn.plmap import PLMarkovMap


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ShadowingRequest:
    """Itinerary segments to be shadowed, ``gap`` steps apart, with a period."""

    segments: tuple[tuple[str, ...], ...]
    gap: int
    period: int

    @property
    def total_length(self) -> int:
        return sum(len(s) for s in self.segments)


@dataclass(frozen=True)
class WitnessStep:
    time: int
    requested: str
    visited: tuple[str, ...]
    constrained: bool

    @property
    def hit(self) -> bool:
        return self.requested in self.visited


@dataclass(frozen=True)
class ShadowingWitness:
    point: GraphPoint
    period: int
    itinerary: tuple[str, ...]
    steps: tuple[WitnessStep, ...]

    @property
    def verified(self) -> bool:
        return all(step.hit for step in self.steps)


def primitivity_index(m: PLMarkovMap) -> int | None:
    """
    The least ``N`` with ``A^N > 0``, or ``None`` when ``A`` is not primitive.

    Rows of the boolean powers are kept as bit masks; Wielandt's bound
    ``(n - 1)^2 + 1`` caps the search.
    """
    if not is_transitive(m):
        return None
    graph = m.markov_graph()
    if graph_period(graph)[0] != 1:
        return None

    matrix = m.incidence_matrix()
    n = matrix.dimension
    successors = [sum(1 << j for j in row) for row in matrix.rows]
    full = (1 << n) - 1
    power = list(successors)
    for exponent in range(1, (n - 1) ** 2 + 2):
        if all(row == full for row in power):
            return exponent
        power = [_advance(row, successors) for row in power]
    raise AssertionError("A primitive matrix exceeded the Wielandt bound")


def _advance(row: int, successors: Sequence[int]) -> int:
    reached = 0
    j = 0
    while row:
        if row & 1:
            reached |= successors[j]
        row >>= 1
        j += 1
    return reached


def _reachable_within(
    m: PLMarkovMap, target: str, steps: int
) -> list[frozenset[str]]:
    """``layers[t]``: intervals with a walk of exactly ``t`` steps to ``target``."""
    graph = m.markov_graph()
    layers = [frozenset([target])]
    for _ in range(steps):
        previous = layers[-1]
        layers.append(
            frozenset(u for v in previous for u in graph.predecessors(v))
        )
    return layers


def connecting_walk(m: PLMarkovMap, source: str, target: str, steps: int) -> list[str]:
    """
    The lexicographically least walk of exactly ``steps`` steps.

    Intervals are ordered as in the partition. The result excludes both
    ends.
    """
    layers = _reachable_within(m, target, steps)
    if source not in layers[steps]:
        raise ShadowingError(
            f"No walk of length {steps} from '{source}' to '{target}'"
        )
    order = {iid: i for i, iid in enumerate(m.interval_ids)}
    graph = m.markov_graph()
    walk = []
    current = source
    for remaining in range(steps - 1, 0, -1):
        current = min(
            (v for v in graph.successors(current) if v in layers[remaining]),
            key=order.__getitem__,
        )
        walk.append(current)
    return walk


def _check_segments(m: PLMarkovMap, request: ShadowingRequest) -> None:
    graph = m.markov_graph()
    for k, segment in enumerate(request.segments):
        if not segment:
            raise ShadowingError(f"Segment {k} is empty")
        unknown = [iid for iid in segment if iid not in graph]
        if unknown:
            raise ShadowingError(f"Segment {k} names unknown intervals {unknown}")
        for first, second in zip(segment, segment[1:]):
            if not graph.has_edge(first, second):
                raise ShadowingError(
                    f"Segment {k} is not an itinerary: '{first}' does not cover"
                    f" '{second}'"
                )


def spec_witness(
    m: PLMarkovMap, request: ShadowingRequest, config: Config = DEFAULT_CONFIG
) -> ShadowingWitness:
    """
    A periodic point shadowing every segment of ``request``.

    Segments are joined by connecting walks of exactly ``gap`` steps and the
    last one is closed back to the first so that the orbit has exactly
    ``period`` steps; the closed walk is then solved by affine composition.
    """
    index = primitivity_index(m)
    if index is None:
        raise ShadowingError("The incidence matrix is not primitive")
    if request.gap < index:
        raise ShadowingError(
            f"Gap {request.gap} is below the primitivity index {index}"
        )
    if request.period < 1:
        raise ShadowingError("The period must be positive")

    if not request.segments:
        found = periodic_points(m, request.period, config)
        if not found:
            raise ShadowingError(f"No point of period {request.period}")
        first = found[0]
        rows = _verify(m, first.point, first.itinerary, [False] * request.period)
        return ShadowingWitness(first.point, request.period, first.itinerary, rows)

    _check_segments(m, request)
    segments = request.segments
    closing = request.period - sum(len(s) - 1 for s in segments)
    closing -= (len(segments) - 1) * request.gap
    if closing < request.gap:
        raise ShadowingError(
            f"Period {request.period} leaves {closing} closing steps, fewer than"
            f" the gap {request.gap}"
        )

    walk: list[str] = []
    constrained: list[bool] = []
    for k, segment in enumerate(segments):
        walk.extend(segment)
        constrained.extend([True] * len(segment))
        following = segments[(k + 1) % len(segments)]
        steps_between = request.gap if k < len(segments) - 1 else closing
        bridge = connecting_walk(m, segment[-1], following[0], steps_between)
        walk.extend(bridge)
        constrained.extend([False] * len(bridge))
    assert len(walk) == request.period

    solution = solve_closed_walk(m, walk)
    if solution is None:
        raise ShadowingError("The closed itinerary has a degenerate composition")

    rows = _verify(m, solution.point, walk, constrained)
    logger.debug("Witness %s of period %d", solution.point, request.period)
    return ShadowingWitness(solution.point, request.period, tuple(walk), rows)


def _verify(
    m: PLMarkovMap,
    point: GraphPoint,
    walk: Sequence[str],
    constrained: Sequence[bool],
) -> tuple[WitnessStep, ...]:
    rows = []
    for time, (iid, flag) in enumerate(zip(walk, constrained)):
        visited = tuple(m.partition.intervals_at(point))
        rows.append(WitnessStep(time, iid, visited, flag))
        point = m.evaluate(point)
    return tuple(rows)
