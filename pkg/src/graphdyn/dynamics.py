from __future__ import annotations

import logging
import math

from dataclasses import dataclass
from fractions import Fraction
from typing import TYPE_CHECKING

import networkx as nx

from graphdyn.config import DEFAULT_CONFIG
from graphdyn.exceptions import ResourceLimitError
from graphdyn.exceptions import ValidationError
from graphdyn.graphcore import GraphPoint
from graphdyn.graphcore import kappa
from graphdyn.plmap import Affine
from graphdyn.plmap import point_key
from graphdyn.rationals import LogValue


if TYPE_CHECKING:
    from collections.abc import Iterator
    from collections.abc import Sequence

    from graphdyn.config import Config
    from graphdyn.graphcore import Germ
    from graphdyn.graphcore import TopoGraph
    from graphdyn.plmap import PLMarkovMap


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TransitivityCertificate:
    transitive: bool
    components: tuple[tuple[str, ...], ...]
    cyclic_permutation: bool
    heuristic: bool

    def __bool__(self) -> bool:
        return self.transitive


@dataclass(frozen=True)
class PeriodDecomposition:
    k: int
    classes: tuple[tuple[str, ...], ...]


@dataclass(frozen=True)
class Classification:
    transitive: bool
    totally_transitive: bool
    exact: bool
    period: int | None
    heuristic: bool


@dataclass(frozen=True)
class PeriodicPoint:
    point: GraphPoint
    itinerary: tuple[str, ...]
    non_unique: bool = False


@dataclass(frozen=True)
class Horseshoe:
    arc: tuple[str, ...]
    pieces: tuple[tuple[str, ...], ...]
    loose: bool
    unused: tuple[str, ...]
    overshooting: tuple[int, ...]
    certified: bool = False


@dataclass(frozen=True)
class BoundReport:
    kappa: int
    corollary_bound: LogValue
    sharpened_bound: LogValue
    fixed_point_power_bound: int
    sharpened_source: str = "some iterate f^m with m below kappa has a 3-horseshoe"


def is_transitive(m: PLMarkovMap) -> TransitivityCertificate:
    """
    Strongly connected Markov graph that is not a single cycle.

    On graphs with circles the criterion is only known to be necessary in
    general, so the certificate is marked heuristic there.
    """
    graph = m.ensure_valid().markov_graph()
    components = tuple(
        tuple(sorted(c, key=m.interval_ids.index))
        for c in nx.strongly_connected_components(graph)
    )
    strongly_connected = len(components) == 1
    cyclic = strongly_connected and all(d == 1 for _, d in graph.out_degree())
    return TransitivityCertificate(
        transitive=strongly_connected and not cyclic,
        components=tuple(sorted(components)),
        cyclic_permutation=cyclic,
        heuristic=not m.graph.is_tree(),
    )


def graph_period(graph: nx.DiGraph) -> tuple[int, dict[str, int]]:
    """Period of a strongly connected digraph and the BFS levels it is read from."""
    root = next(iter(graph.nodes))
    levels = nx.single_source_shortest_path_length(graph, root)
    period = 0
    for u, v in graph.edges:
        period = math.gcd(period, abs(levels[u] + 1 - levels[v]))
    return period, dict(levels)


def period_decomposition(m: PLMarkovMap) -> PeriodDecomposition:
    certificate = is_transitive(m)
    if not certificate:
        raise ValidationError("Period decomposition needs a transitive map")

    k, levels = graph_period(m.markov_graph())
    classes = tuple(
        tuple(iid for iid in m.interval_ids if levels[iid] % k == r) for r in range(k)
    )
    return PeriodDecomposition(k, classes)


def classify(m: PLMarkovMap) -> Classification:
    """
    Transitive, totally transitive and exact flags.

    For piecewise monotone Markov maps total transitivity already forces
    exactness, so both flags coincide.
    """
    certificate = is_transitive(m)
    if not certificate:
        return Classification(False, False, False, None, certificate.heuristic)
    k = period_decomposition(m).k
    return Classification(True, k == 1, k == 1, k, certificate.heuristic)


def interval_of(m: PLMarkovMap, point: GraphPoint) -> tuple[str, ...]:
    return tuple(m.partition.intervals_at(point))


def itinerary(m: PLMarkovMap, point: GraphPoint, n: int) -> list[GraphPoint]:
    orbit = [point]
    for _ in range(n - 1):
        orbit.append(m.evaluate(orbit[-1]))
    return orbit


def _constrain(
    composite: Affine, low: Fraction, high: Fraction, lower: Fraction, upper: Fraction
) -> tuple[Fraction, Fraction]:
    first = (lower - composite.shift) / composite.slope
    second = (upper - composite.shift) / composite.slope
    return max(low, min(first, second)), min(high, max(first, second))


def solve_closed_walk(m: PLMarkovMap, walk: Sequence[str]) -> PeriodicPoint | None:
    """
    The point whose orbit follows the closed walk ``walk``, if any.

    Branches are composed as affine maps of the first interval's local
    coordinate. When the loop is an isometry fixing a whole segment, the
    midpoint is returned and flagged as non-unique.
    """
    intervals = m.partition.intervals
    composite = Affine(Fraction(1), Fraction(0))
    low, high = Fraction(0), intervals[walk[0]].length
    n = len(walk)
    for i in range(n):
        branch, lower, upper = m.branch(walk[i], walk[(i + 1) % n])
        low, high = _constrain(composite, low, high, lower, upper)
        if low > high:
            return None
        composite = composite.then(branch)

    non_unique = False
    if composite.slope == 1:
        if composite.shift != 0:
            return None
        t = (low + high) / 2
        non_unique = low < high
    else:
        t = composite.shift / (1 - composite.slope)
        if not low <= t <= high:
            return None

    point = m.partition.at_local(walk[0], t)
    orbit = point
    for i in range(n):
        if walk[i] not in m.partition.intervals_at(orbit):
            return None
        orbit = m.evaluate(orbit)
    if orbit != point:
        return None
    return PeriodicPoint(point, tuple(walk), non_unique)


def closed_walks(
    m: PLMarkovMap, n: int, config: Config = DEFAULT_CONFIG
) -> Iterator[tuple[str, ...]]:
    graph = m.markov_graph()
    count = 0
    for start in m.interval_ids:
        stack: list[tuple[str, ...]] = [(start,)]
        while stack:
            walk = stack.pop()
            count += 1
            if count > config.cycle_cap:
                raise ResourceLimitError(
                    f"Walk enumeration for period {n} exceeded {config.cycle_cap} steps"
                )
            if len(walk) == n:
                if graph.has_edge(walk[-1], start):
                    yield walk
                continue
            successors = sorted(graph.successors(walk[-1]), reverse=True)
            stack.extend((*walk, nxt) for nxt in successors)


def periodic_points(
    m: PLMarkovMap, n: int, config: Config = DEFAULT_CONFIG
) -> list[PeriodicPoint]:
    """All exact solutions of ``f^n(x) = x``, one per point."""
    if n < 1:
        raise ValidationError("The period n must be positive")
    m.ensure_valid()

    found: dict[GraphPoint, PeriodicPoint] = {}
    for walk in closed_walks(m, n, config):
        solution = solve_closed_walk(m, walk)
        if solution is not None and solution.point not in found:
            found[solution.point] = solution

    # Orbits through partition points can switch sides at every step and
    # follow no closed walk.
    for pid, point in m.partition.points.items():
        current = pid
        for _ in range(n):
            current = m.vertex_images[current]
        if current == pid and point not in found:
            orbit = itinerary(m, point, n)
            found[point] = PeriodicPoint(
                point, tuple(interval_of(m, p)[0] for p in orbit)
            )
    logger.debug("Found %d points of period dividing %d", len(found), n)
    return sorted(found.values(), key=lambda p: point_key(p.point))


def _runs(m: PLMarkovMap) -> Iterator[tuple[str, ...]]:
    by_edge: dict[str, list[str]] = {}
    for iid, interval in m.partition.intervals.items():
        by_edge.setdefault(interval.edge, []).append(iid)
    for edge in sorted(by_edge):
        ids = by_edge[edge]
        for size in range(len(ids), 0, -1):
            for first in range(len(ids) - size + 1):
                yield tuple(ids[first : first + size])


def _horseshoe_on(m: PLMarkovMap, arc: tuple[str, ...], s: int) -> Horseshoe | None:
    wanted = set(arc)
    pieces: list[tuple[str, ...]] = []
    images: list[set[str]] = []
    current: list[str] = []
    covered: set[str] = set()
    for iid in arc:
        current.append(iid)
        covered.update(step.interval for step in m.interval_images[iid])
        if wanted <= covered:
            pieces.append(tuple(current))
            images.append(covered)
            current, covered = [], set()
            if len(pieces) == s:
                break
    if len(pieces) < s:
        return None

    used = {iid for piece in pieces for iid in piece}
    unused = tuple(iid for iid in arc if iid not in used)
    overshooting = tuple(i for i, image in enumerate(images) if image - wanted)

    block = m.incidence.restricted(arc)
    incoming = [0] * block.dimension
    for row in block.rows:
        for j in row:
            incoming[j] += 1
    irreducible = nx.is_strongly_connected(block.digraph())
    certified = irreducible and max(incoming) > s
    loose = bool(unused or overshooting)
    return Horseshoe(arc, tuple(pieces), loose, unused, overshooting, certified)


def loose_horseshoe_search(
    m: PLMarkovMap, s: int, config: Config = DEFAULT_CONFIG
) -> Horseshoe | None:
    """
    Look for ``s`` disjoint runs of basic intervals inside one edge, each
    covering a common run ``J``.

    The horseshoe is loose when the pieces leave part of ``J`` unused or
    some piece maps beyond ``J``. Independently, ``certified`` marks arcs
    whose incidence block is irreducible with some interval of ``J``
    covered more than ``s`` times, which bounds the spectral radius above
    ``s`` at the matrix level. A loose candidate is preferred over a tight
    one.
    """
    if s < 2:
        raise ValidationError("A horseshoe needs at least two pieces")
    m.ensure_valid()

    tight: Horseshoe | None = None
    for count, arc in enumerate(_runs(m)):
        if count > config.enumeration_cap:
            raise ResourceLimitError("Horseshoe search exceeded the enumeration cap")
        found = _horseshoe_on(m, arc, s)
        if found is None:
            continue
        if found.loose:
            return found
        if tight is None:
            tight = found
    return tight


def bound_report(g: TopoGraph, config: Config = DEFAULT_CONFIG) -> BoundReport:
    value = kappa(g, config)
    return BoundReport(
        kappa=value,
        corollary_bound=LogValue(Fraction(3), value),
        sharpened_bound=LogValue(Fraction(3), value - 1),
        fixed_point_power_bound=value - 1,
    )


def endpoint_cycles(m: PLMarkovMap) -> list[tuple[str, ...]]:
    """Periodic orbits of ``m`` lying entirely in the endpoints of the graph."""
    graph = m.graph
    endpoints = {
        m.partition.pid_of(GraphPoint.at(v))
        for v in graph.vertices
        if graph.valence(v) == 1
    }
    cycles = []
    for start in sorted(e for e in endpoints if e is not None):
        orbit = [start]
        current = m.vertex_images[start]
        while (
            current != start
            and current in endpoints
            and len(orbit) <= len(endpoints)
        ):
            orbit.append(current)
            current = m.vertex_images[current]
        if current == start and start == min(orbit):
            cycles.append(tuple(orbit))
    return cycles


def fixed_germ_permutation(m: PLMarkovMap, pid: str) -> dict[Germ, Germ]:
    """The permutation of local sides at a fixed partition point."""
    m.ensure_valid()
    if m.vertex_images[pid] != pid:
        raise ValidationError(f"'{pid}' is not a fixed point")
    point = m.partition.points[pid]
    return {germ: m.germ_image(pid, germ) for germ in m.graph.germs(point)}


def germ_orbit(permutation: dict[Germ, Germ], start: Germ, n: int) -> list[Germ]:
    orbit = [start]
    for _ in range(n - 1):
        orbit.append(permutation[orbit[-1]])
    return orbit
