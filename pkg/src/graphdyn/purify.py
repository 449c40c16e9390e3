from __future__ import annotations

import logging
import math

from dataclasses import dataclass
from fractions import Fraction
from typing import TYPE_CHECKING

from graphdyn.config import DEFAULT_CONFIG
from graphdyn.constructions import Construction
from graphdyn.constructions import ConstructionTrace
from graphdyn.constructions import b1_base
from graphdyn.constructions import binary_exact
from graphdyn.constructions import certify
from graphdyn.constructions import choose_rates
from graphdyn.constructions import edge_add
from graphdyn.constructions import entry_interval
from graphdyn.constructions import split_points
from graphdyn.constructions import star_exact
from graphdyn.constructions import totalize
from graphdyn.dynamics import endpoint_cycles
from graphdyn.entropy import entropy
from graphdyn.exceptions import ConstructionError
from graphdyn.exceptions import ResourceLimitError
from graphdyn.graphcore import Catalog
from graphdyn.graphcore import Germ
from graphdyn.graphcore import GraphPoint
from graphdyn.plmap import PLMarkovMap
from graphdyn.plmap import point_key
from graphdyn.rationals import LogValue
from graphdyn.rationals import certainly_less
from graphdyn.structure import Side
from graphdyn.structure import identify


if TYPE_CHECKING:
    from collections.abc import Iterator

    from graphdyn.config import Config
    from graphdyn.entropy import EntropyEnclosure
    from graphdyn.graphcore import Quotient
    from graphdyn.graphcore import TopoGraph
    from graphdyn.plmap import BasicInterval


logger = logging.getLogger(__name__)

# Catalog graph and period of the glued endpoint cycle; the entropy target
# is log(3) over the period. The theta map only bounds the infimum from above.
QUOTIENT_EXAMPLES = {
    "sigma": ("sigma", 2),
    "theta_candidate": ("theta", 3),
    "figure8": ("figure8", 4),
    "dumbbell": ("dumbbell", 4),
}


def tail_edge(pid: str) -> str:
    return f"{pid}~tail"


def tail_end(pid: str) -> str:
    return f"{pid}~inf"


@dataclass(frozen=True)
class PeriodicOrbitSpec:
    """A periodic orbit ``o_0 -> o_1 -> ... -> o_0`` made of endpoints."""

    points: tuple[str, ...]

    @property
    def period(self) -> int:
        return len(self.points)

    def rotations(self) -> Iterator[PeriodicOrbitSpec]:
        for k in range(self.period):
            yield PeriodicOrbitSpec(self.points[k:] + self.points[:k])

    def check(self, m: PLMarkovMap) -> None:
        if not self.points:
            raise ConstructionError("The orbit is empty")
        if len(set(self.points)) != len(self.points):
            raise ConstructionError("The orbit repeats a point")
        for k, pid in enumerate(self.points):
            point = m.partition.points.get(pid)
            if point is None or point.vertex is None:
                raise ConstructionError(f"'{pid}' is not a vertex of the partition")
            if m.graph.valence(point.vertex) != 1:
                raise ConstructionError(f"'{pid}' is not an endpoint")
            following = self.points[(k + 1) % self.period]
            if m.vertex_images[pid] != following:
                raise ConstructionError(f"'{pid}' is not sent to '{following}'")


def _block_start(level: int) -> Fraction:
    return 1 - Fraction(1, 2**level)


def _block_step(level: int) -> Fraction:
    return Fraction(1, 7 * 2**level)


def _creeping_start(
    m: PLMarkovMap,
    orbit: PeriodicOrbitSpec,
    intervals: list[BasicInterval],
    window: int,
) -> GraphPoint:
    """``u_0`` in ``I_0`` reaching the far end of ``I_0`` after ``m L`` steps."""
    slopes = [m.slope(i.id) for i in intervals]
    expansion = math.prod(slopes, start=Fraction(1))
    if expansion <= 1:
        raise ConstructionError("The endpoint cycle does not expand")
    start = distance = intervals[0].length / expansion**window
    n = len(intervals)
    for step in range(1, n * window):
        distance *= slopes[(step - 1) % n]
        if not distance < intervals[step % n].length:
            raise ConstructionError("The creeping orbit leaves the endpoint intervals")
    o0 = orbit.points[0]
    germ = m.graph.ends_at(o0)[0]
    return m.graph.move(GraphPoint.at(o0), germ, start)


def _stage_knots(
    graph: TopoGraph,
    orbit: PeriodicOrbitSpec,
    stage: int,
    window: int,
    u0: GraphPoint,
) -> tuple[dict[GraphPoint, GraphPoint], dict[str, list[GraphPoint]]]:
    first, last = tail_edge(orbit.points[0]), tail_edge(orbit.points[-1])
    shrink = Fraction(1, 7 ** (window - 1))
    alpha = [graph.point(first, _block_start(k)) for k in range(stage + 1)]
    u = [u0] + [
        graph.point(first, _block_start(k) - _block_step(k) * shrink)
        for k in range(1, stage)
    ]
    w = [
        graph.point(first, _block_start(k) + _block_step(k + 1) * shrink)
        for k in range(stage + 1)
    ]

    knots: dict[GraphPoint, GraphPoint] = {}
    schedule: dict[str, list[GraphPoint]] = {name: [] for name in "abcde"}
    for k in range(1, stage + 1):
        a, c_odd, b, c_even, e_even, d, e_odd = (
            graph.point(last, _block_start(k) - i * _block_step(k)) for i in range(7)
        )
        knots[a] = alpha[k]
        knots[c_odd] = knots[c_even] = alpha[k - 1]
        knots[e_odd] = knots[e_even] = alpha[k]
        knots[b] = u[k - 1]
        knots[d] = w[k]
        schedule["a"].append(a)
        schedule["b"].append(b)
        schedule["c"].extend((c_odd, c_even))
        schedule["d"].append(d)
        schedule["e"].extend((e_odd, e_even))

    points = orbit.points
    for k, pid in enumerate(points):
        following = points[(k + 1) % len(points)]
        knots[GraphPoint.at(tail_end(pid))] = GraphPoint.at(tail_end(following))
    schedule.update(alpha=alpha, u=u, w=w)
    return knots, schedule


def _cycle_intervals(m: PLMarkovMap, orbit: PeriodicOrbitSpec) -> list[BasicInterval]:
    return [
        m.partition.intervals[m.partition.intervals_at(GraphPoint.at(pid))[0]]
        for pid in orbit.points
    ]


def _entry_point(
    m: PLMarkovMap, orbit: PeriodicOrbitSpec
) -> tuple[GraphPoint, BasicInterval] | None:
    """A preimage ``x`` of ``o_0`` other than ``o_{m-1}`` and its basic interval."""
    start, finish = GraphPoint.at(orbit.points[0]), GraphPoint.at(orbit.points[-1])
    preimages = sorted(
        (
            p
            for p, image in m.point_images().items()
            if image == start and p != finish
        ),
        key=point_key,
    )
    skip = [i.id for i in _cycle_intervals(m, orbit)]
    for x in preimages:
        entry = entry_interval(m, x, skip=skip)
        if entry is not None:
            return x, entry
    return None


def purify_stage(
    m: PLMarkovMap,
    orbit: PeriodicOrbitSpec,
    epsilon: Fraction,
    stage: int = 1,
    config: Config = DEFAULT_CONFIG,
    window: int | None = None,
) -> Construction:
    """
    Stage ``stage`` of the pure mixing extension along an endpoint cycle.

    Every ``o_k`` gets a tail of length one ending at ``o_k~inf``. Tails are
    shifted isometrically except the last one, which carries ``stage``
    blocks of seven pieces: outer pieces of slope seven shuttle between
    the marks ``alpha`` on the first tail and inner pairs run out to the
    creeping points ``u`` and ``w``. Beyond the last block the tail is still
    isometric, which keeps the new endpoints inaccessible.

    The creeping window starts at ``window`` when given, so that stages
    built with one window are restrictions of the same limit map.
    """
    if epsilon <= 0:
        raise ConstructionError("epsilon must be positive")
    if stage < 1:
        raise ConstructionError("Stages start at 1")
    m.ensure_valid()
    if not m.graph.is_tree():
        raise ConstructionError("Purification needs a tree map")
    orbit.check(m)

    # Any element of the cycle may play o_0; some have the predecessor as
    # their only preimage.
    found = next(
        (
            (rotated, hit)
            for rotated in orbit.rotations()
            if (hit := _entry_point(m, rotated)) is not None
        ),
        None,
    )
    if found is None:
        raise ConstructionError(
            f"No point of the cycle {', '.join(orbit.points)} has a preimage"
            " with a usable basic interval"
        )
    orbit, (x, entry) = found
    intervals = _cycle_intervals(m, orbit)
    start = GraphPoint.at(orbit.points[0])

    h = entropy(m, epsilon / 8, config)
    floor = LogValue(Fraction(3), orbit.period)
    lower, upper = max(h.lower, floor), max(h.upper, floor)
    rates = choose_rates(lower, upper, epsilon, config)

    graph = m.graph
    for pid in orbit.points:
        graph = graph.with_arc(pid, tail_edge(pid), tail_end(pid))
    y_prime, x_prime = split_points(m, entry, x)

    window = rates.threshold if window is None else max(window, rates.threshold)
    enclosure = None
    while window <= rates.threshold + config.chain_cap:
        u0 = _creeping_start(m, orbit, intervals, window)
        knots, schedule = _stage_knots(graph, orbit, stage, window, u0)
        knots.update(m.point_images())
        knots[y_prime] = schedule["w"][0]
        knots[x_prime] = start
        result = PLMarkovMap.from_point_images(graph, knots, config)

        certified, enclosure = certify(result, lower, epsilon, config)
        if certified:
            trace = ConstructionTrace(
                "purify",
                parameters={
                    "epsilon": epsilon,
                    "stage": stage,
                    "period": orbit.period,
                    "orbit": list(orbit.points),
                    "r": rates.r,
                    "s": rates.s,
                    "threshold": rates.threshold,
                    "window": window,
                },
                points={"x": x, "x_prime": x_prime, "y_prime": y_prime},
                chains=schedule,
                inequalities=rates.describe(),
            )
            return Construction(result, trace, enclosure)
        logger.debug("Window %d gives %s, doubling", window, enclosure)
        window *= 2

    raise ResourceLimitError(
        f"Purification not certified for windows up to {window // 2}", enclosure
    )


@dataclass(frozen=True)
class QuotientExample:
    name: str
    map: PLMarkovMap
    nacc: frozenset[Side]
    tree: Construction
    quotient: Quotient
    enclosure: EntropyEnclosure
    trace: ConstructionTrace

    @property
    def graph(self) -> TopoGraph:
        return self.map.graph

    @property
    def target(self) -> LogValue:
        return LogValue(Fraction(3), QUOTIENT_EXAMPLES[self.name][1])


def _example_tree(
    name: str, epsilon: Fraction, config: Config
) -> tuple[Construction, Fraction]:
    if name == "sigma":
        base = b1_base()
        third = epsilon / 3
        total = totalize(base.map, third, config)
        root = base.trace.points["central_root"]
        grown = edge_add(total.map, root, third, config)
        trace = ConstructionTrace(
            "sigma-tree", children=[base.trace, total.trace, grown.trace]
        )
        return Construction(grown.map, trace, grown.enclosure), third
    if name in ("theta_candidate", "figure8"):
        _, period = QUOTIENT_EXAMPLES[name]
        return star_exact(period, epsilon / 2, config), epsilon / 2
    return binary_exact(2, epsilon / 2, config), epsilon / 2


def quotient_example(
    name: str,
    epsilon: Fraction,
    stage: int = 1,
    config: Config = DEFAULT_CONFIG,
) -> QuotientExample:
    """
    A purely mixing map on a graph with a circle, built as a quotient.

    An exact tree map with an endpoint cycle of period ``n`` is purified
    and the new tail ends are glued: all of them for ``sigma`` and
    ``theta_candidate``, opposite pairs for ``figure8`` and ``dumbbell``.
    The glued tail ends are the inaccessible sides of the result.
    """
    if name not in QUOTIENT_EXAMPLES:
        raise ConstructionError(f"Unknown quotient example '{name}'")
    graph_name, period = QUOTIENT_EXAMPLES[name]
    tree, share = _example_tree(name, epsilon, config)

    cycles = [c for c in endpoint_cycles(tree.map) if len(c) == period]
    if not cycles:
        raise ConstructionError(f"No endpoint cycle of period {period}")
    cycle = cycles[0]
    purified = purify_stage(tree.map, PeriodicOrbitSpec(cycle), share, stage, config)

    ends = [tail_end(pid) for pid in cycle]
    if period == 4:
        classes = [[ends[0], ends[2]], [ends[1], ends[3]]]
    else:
        classes = [ends]
    quotient, glued = identify(purified.map, classes)
    glued.ensure_valid()
    nacc = frozenset(
        Side(quotient.projection[tail_end(pid)], Germ(tail_edge(pid), "-"))
        for pid in cycle
    )

    target = LogValue(Fraction(3), period)
    enclosure = entropy(glued, share / 8, config)
    if not certainly_less(enclosure.upper, target, epsilon):
        raise ConstructionError(
            f"Entropy of the '{name}' example is not below {target} + {epsilon}"
        )
    if not quotient.graph.is_homeomorphic(Catalog.by_name(graph_name)):
        raise ConstructionError(f"The quotient is not homeomorphic to '{graph_name}'")

    trace = ConstructionTrace(
        "quotient",
        parameters={"name": name, "epsilon": epsilon, "stage": stage},
        children=[tree.trace, purified.trace],
    )
    logger.debug("Built the '%s' example: %s", name, glued)
    return QuotientExample(name, glued, nacc, purified, quotient, enclosure, trace)
