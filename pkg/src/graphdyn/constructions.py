from __future__ import annotations

import logging

from dataclasses import dataclass
from dataclasses import field
from fractions import Fraction
from typing import TYPE_CHECKING

from graphdyn.config import DEFAULT_CONFIG
from graphdyn.dynamics import classify
from graphdyn.dynamics import fixed_germ_permutation
from graphdyn.dynamics import germ_orbit
from graphdyn.dynamics import is_transitive
from graphdyn.dynamics import periodic_points
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
from graphdyn.rationals import format_rational
from graphdyn.rationals import simplest_above
from graphdyn.rationals import simplest_between


if TYPE_CHECKING:
    from collections.abc import Iterator
    from collections.abc import Sequence

    from graphdyn.config import Config
    from graphdyn.entropy import EntropyEnclosure
    from graphdyn.plmap import BasicInterval


logger = logging.getLogger(__name__)


@dataclass
class ConstructionTrace:
    """Auxiliary choices made by a construction, kept for auditing."""

    construction: str
    parameters: dict[str, object] = field(default_factory=dict)
    points: dict[str, GraphPoint] = field(default_factory=dict)
    chains: dict[str, list[GraphPoint]] = field(default_factory=dict)
    inequalities: list[str] = field(default_factory=list)
    children: list[ConstructionTrace] = field(default_factory=list)

    def recorded_points(self) -> Iterator[GraphPoint]:
        yield from self.points.values()
        for chain in self.chains.values():
            yield from chain


@dataclass(frozen=True)
class Construction:
    map: PLMarkovMap
    trace: ConstructionTrace
    enclosure: EntropyEnclosure | None = None


@dataclass(frozen=True)
class Rates:
    """Rationals ``r < s`` with ``h < log r < log s < h + eps`` and a window."""

    r: Fraction
    s: Fraction
    threshold: int

    def describe(self) -> list[str]:
        r, s, n = format_rational(self.r), format_rational(self.s), self.threshold
        return [f"3*({r})^{n} < ({s})^{n}"]


def choose_rates(
    lower: LogValue, upper: LogValue, epsilon: Fraction, config: Config
) -> Rates:
    """
    Pick the simplest ``r`` above ``upper`` and ``s`` below ``lower + eps``.

    Only three quarters of ``eps`` are spent on ``s`` so that an entropy
    enclosure of width ``eps / 8`` can still certify the final bound.
    """
    slack = epsilon * 3 / 4
    r = simplest_above(upper, lower, slack)
    s = simplest_between(r, lower, slack)
    threshold = 1
    while not 3 * r**threshold < s**threshold:
        threshold += 1
        if threshold > config.closure_cap:
            raise ResourceLimitError("No window satisfies 3 r^L < s^L in range")
    logger.debug("Chose r=%s, s=%s, window %d", r, s, threshold)
    return Rates(r, s, threshold)


def _trace_point(trace: ConstructionTrace, name: str, point: GraphPoint) -> None:
    trace.points[name] = point


def tent3() -> Construction:
    graph = Catalog.arc()
    knots = {
        GraphPoint.at("a"): GraphPoint.at("a"),
        graph.point("e", Fraction(1, 3)): GraphPoint.at("b"),
        graph.point("e", Fraction(2, 3)): GraphPoint.at("a"),
        GraphPoint.at("b"): GraphPoint.at("b"),
    }
    m = PLMarkovMap.from_point_images(graph, knots)
    return Construction(m, ConstructionTrace("tent3"))


def b1_base() -> Construction:
    graph = Catalog.arc()

    def at(x: Fraction) -> GraphPoint:
        return graph.point("e", x)

    knots = {
        at(Fraction(0)): at(Fraction(1)),
        at(Fraction(1, 6)): at(Fraction(1, 2)),
        at(Fraction(1, 3)): at(Fraction(1)),
        at(Fraction(1, 2)): at(Fraction(1, 2)),
        at(Fraction(1)): at(Fraction(0)),
    }
    m = PLMarkovMap.from_point_images(graph, knots)
    trace = ConstructionTrace("b1")
    _trace_point(trace, "central_root", at(Fraction(1, 2)))
    return Construction(m, trace)


def as_vertex(
    m: PLMarkovMap, point: GraphPoint, config: Config = DEFAULT_CONFIG
) -> tuple[PLMarkovMap, str]:
    """Make a fixed point of ``m`` a vertex, refining and subdividing as needed."""
    if point.vertex is not None:
        return m, point.vertex
    if not m.partition.contains(point):
        m = m.refined([point], config)
    subdivision = m.graph.subdivide(point)
    relocate = subdivision.relocate
    knots = {relocate(p): relocate(q) for p, q in m.point_images().items()}
    moved = PLMarkovMap.from_point_images(subdivision.graph, knots, config)
    return moved, subdivision.vertex


def _require_fixed(m: PLMarkovMap, point: GraphPoint) -> None:
    if m.evaluate(point) != point:
        raise ConstructionError(f"{point} is not a fixed point")


def wedge_power(
    m: PLMarkovMap, x0: GraphPoint, k: int, config: Config = DEFAULT_CONFIG
) -> Construction:
    """
    ``k`` copies of the tree glued at the fixed point ``x0``.

    Copy ``i`` is moved isometrically onto copy ``i + 1`` and the last copy
    is mapped by ``m`` into copy ``0``, which divides the entropy by ``k``.
    """
    if k < 1:
        raise ConstructionError("The wedge power needs k >= 1")
    m.ensure_valid()
    _require_fixed(m, x0)
    trace = ConstructionTrace("wedge", parameters={"k": k})
    if k == 1:
        _trace_point(trace, "x0", x0)
        return Construction(m, trace)

    base, center = as_vertex(m, x0, config)
    graph = base.graph.wedge_copies(center, k)
    _trace_point(trace, "x0", GraphPoint.at(center))

    def copy(point: GraphPoint, i: int) -> GraphPoint:
        if point.vertex is not None:
            name = point.vertex if point.vertex == center else f"{point.vertex}/{i}"
            return GraphPoint.at(name)
        return graph.point(f"{point.edge}/{i}", point.offset)

    knots = {}
    for p, image in base.point_images().items():
        for i in range(k):
            if i < k - 1:
                knots[copy(p, i)] = copy(p, i + 1)
            else:
                knots[copy(p, i)] = copy(image, 0)
    return Construction(PLMarkovMap.from_point_images(graph, knots, config), trace)


def _germ_toward(m: PLMarkovMap, source: GraphPoint, target: GraphPoint) -> Germ:
    first = m.graph.geodesic(source, target)[0]
    return Germ(first.edge, first.direction)


def _image_cuts(m: PLMarkovMap, interval: BasicInterval, germ: Germ) -> list[Fraction]:
    """Distances from the germ's base point to partition points along the image."""
    intervals = m.partition.intervals
    path = m.interval_images[interval.id]
    lengths = [intervals[step.interval].length for step in path]
    total = sum(lengths, Fraction(0))
    cuts = []
    travelled = Fraction(0)
    for length in lengths[:-1]:
        travelled += length
        cuts.append(travelled)
    if germ.direction == "-":
        cuts = sorted(total - c for c in cuts)
    return cuts


def germ_chain(
    m: PLMarkovMap, point: GraphPoint, sequence: Sequence[Germ]
) -> list[GraphPoint] | None:
    """
    Points ``w_k`` near the fixed point ``point`` following the germs in
    ``sequence`` with ``f(w_k) = w_{k+1}`` and ``f(w_{L-1})`` in ``P``.

    The chain is solved backwards from the nearest partition point on the
    image of the last interval; ``None`` when some ``w_k`` would leave the
    interior of its interval.
    """
    intervals = [m.partition.interval_along(point, d) for d in sequence]
    cuts = _image_cuts(m, intervals[-1], sequence[-1])
    if not cuts:
        return None

    distance = cuts[0] / m.slope(intervals[-1].id)
    distances = [distance]
    for interval in reversed(intervals[:-1]):
        distance = distance / m.slope(interval.id)
        distances.append(distance)
    distances.reverse()
    if any(not 0 < d < i.length for d, i in zip(distances, intervals)):
        return None
    return [m.graph.move(point, d, t) for d, t in zip(sequence, distances)]


def split_points(
    m: PLMarkovMap, interval: BasicInterval, near: GraphPoint
) -> tuple[GraphPoint, GraphPoint]:
    """``y'`` and ``x'`` at one and two thirds of ``interval`` counted from ``near``."""
    third = interval.length / 3
    if m.partition.points[interval.lo] == near:
        return (
            m.graph.point(interval.edge, interval.start + third),
            m.graph.point(interval.edge, interval.start + 2 * third),
        )
    return (
        m.graph.point(interval.edge, interval.end - third),
        m.graph.point(interval.edge, interval.end - 2 * third),
    )


def entry_interval(
    m: PLMarkovMap,
    preimage: GraphPoint,
    avoid: GraphPoint | None = None,
    skip: Sequence[str] = (),
) -> BasicInterval | None:
    for iid in m.partition.intervals_at(preimage):
        interval = m.partition.intervals[iid]
        ends = {m.partition.points[interval.lo], m.partition.points[interval.hi]}
        if avoid in ends or iid in skip:
            continue
        return interval
    return None


def certify(
    m: PLMarkovMap, bound: LogValue, epsilon: Fraction, config: Config
) -> tuple[bool, EntropyEnclosure]:
    enclosure = entropy(m, epsilon / 8, config)
    return certainly_less(enclosure.upper, bound, epsilon), enclosure


def totalize(
    m: PLMarkovMap, epsilon: Fraction, config: Config = DEFAULT_CONFIG
) -> Construction:
    """
    Turn a transitive, not totally transitive tree map into an exact one
    with entropy below ``h(m) + epsilon``.

    The interval ``[x, y]`` next to a preimage ``q`` of the fixed point is
    cut at ``y'`` and ``x'``: ``[x, y']`` runs out to ``w_0``, ``[y', x']``
    comes back to ``p`` and ``[x', y]`` copies the old branch. The orbit of
    ``w_0`` creeps along the central intervals ``I_j`` before landing in
    ``P``, so only a thin set of new paths appears.
    """
    if epsilon <= 0:
        raise ConstructionError("epsilon must be positive")
    m.ensure_valid()
    if not m.graph.is_tree():
        raise ConstructionError("Totalization needs a tree map")
    classification = classify(m)
    if not classification.transitive:
        raise ConstructionError("Totalization needs a transitive map")
    if classification.totally_transitive:
        raise ConstructionError("The map is already totally transitive")

    fixed = periodic_points(m, 1, config)
    if len(fixed) != 1:
        raise ConstructionError(f"Expected a unique fixed point, found {len(fixed)}")
    p = fixed[0].point
    if not m.partition.contains(p):
        m = m.refined([p], config)
    p_pid = m.partition.pid_of(p)
    assert p_pid is not None

    preimages = sorted(
        (
            point
            for point, image in m.point_images().items()
            if image == p and point != p
        ),
        key=point_key,
    )
    if not preimages:
        raise ConstructionError("The fixed point has no other preimage in P")
    q = preimages[0]
    permutation = fixed_germ_permutation(m, p_pid)
    start = _germ_toward(m, p, q)
    central = m.partition.interval_along(p, start)
    entry = entry_interval(m, q, p, skip=[central.id])
    if entry is None:
        raise ConstructionError(f"No basic interval at {q} avoids the fixed point")

    h = entropy(m, epsilon / 8, config)
    rates = choose_rates(h.lower, h.upper, epsilon, config)

    chain = None
    window = rates.threshold
    while chain is None:
        if window > rates.threshold + config.chain_cap:
            raise ResourceLimitError(
                f"No creeping orbit found for windows up to {window - 1}"
            )
        chain = germ_chain(m, p, germ_orbit(permutation, start, window))
        if chain is None:
            window += 1

    y_prime, x_prime = split_points(m, entry, q)
    knots = m.point_images()
    knots[y_prime] = chain[0]
    knots[x_prime] = p
    result = PLMarkovMap.from_point_images(m.graph, knots, config)

    certified, enclosure = certify(result, h.lower, epsilon, config)
    if not classify(result).exact:
        raise ConstructionError("Totalized map is not exact")
    if not certified:
        raise ConstructionError(
            f"Entropy bound not certified: {enclosure.upper} vs {h.lower} + {epsilon}"
        )

    trace = ConstructionTrace(
        "totalize",
        parameters={
            "epsilon": epsilon,
            "r": rates.r,
            "s": rates.s,
            "threshold": rates.threshold,
            "window": window,
            "period": classification.period,
        },
        points={"p": p, "q": q, "x_prime": x_prime, "y_prime": y_prime},
        chains={"w": chain},
        inequalities=rates.describe(),
    )
    logger.debug("Totalized with window %d", window)
    return Construction(result, trace, enclosure)


def edge_add(
    m: PLMarkovMap, z: GraphPoint, epsilon: Fraction, config: Config = DEFAULT_CONFIG
) -> Construction:
    """
    Attach a new arc at the fixed point ``z`` keeping the map transitive.

    The new arc is cut into ``L`` pieces that step down towards ``z`` one
    piece per iterate. A small interval ``[x, y]`` whose end ``x`` maps to
    ``z`` is re-routed through an up and down pair of branches covering
    the whole arc, and the lowest piece is sent into a creeping orbit near
    ``z``. ``L`` doubles until the entropy bound is certified.
    """
    if epsilon <= 0:
        raise ConstructionError("epsilon must be positive")
    m.ensure_valid()
    if not m.graph.is_tree():
        raise ConstructionError("Edge adding needs a tree map")
    if not is_transitive(m):
        raise ConstructionError("Edge adding needs a transitive map")
    _require_fixed(m, z)

    base, center = as_vertex(m, z, config)
    z = GraphPoint.at(center)
    preimages = sorted(
        (p for p, image in base.point_images().items() if image == z and p != z),
        key=point_key,
    )
    candidates = ((x, entry_interval(base, x, z)) for x in preimages)
    x, entry = next(((x, e) for x, e in candidates if e is not None), (z, None))
    if entry is None:
        raise ConstructionError(f"No preimage of {z} has a usable basic interval")

    permutation = fixed_germ_permutation(base, center)
    h = entropy(base, epsilon / 8, config)

    arc, tip = f"{center}~arc", f"{center}~tip"
    graph = base.graph.with_arc(center, arc, tip)
    y_prime, x_prime = split_points(base, entry, x)

    window = 2
    enclosure = None
    while window <= config.chain_cap:
        chain = None
        for start in sorted(permutation, key=str):
            chain = germ_chain(base, z, germ_orbit(permutation, start, window))
            if chain is not None:
                break
        if chain is None:
            window += 1
            continue

        ladder = [graph.point(arc, Fraction(i, window)) for i in range(window + 1)]
        knots = base.point_images()
        knots[y_prime] = GraphPoint.at(tip)
        knots[x_prime] = z
        knots[GraphPoint.at(tip)] = GraphPoint.at(tip)
        knots[ladder[1]] = chain[0]
        for i in range(2, window):
            knots[ladder[i]] = ladder[i - 1]
        result = PLMarkovMap.from_point_images(graph, knots, config)

        certified, enclosure = certify(result, h.lower, epsilon, config)
        if certified and is_transitive(result):
            trace = ConstructionTrace(
                "edge-add",
                parameters={"epsilon": epsilon, "window": window},
                points={
                    "z": z,
                    "tip": GraphPoint.at(tip),
                    "x": x,
                    "x_prime": x_prime,
                    "y_prime": y_prime,
                },
                chains={"ladder": ladder[1:-1], "w": chain},
            )
            return Construction(result, trace, enclosure)
        logger.debug("Window %d gives %s, doubling", window, enclosure)
        window *= 2

    raise ResourceLimitError(
        f"Edge adding not certified for windows up to {config.chain_cap}", enclosure
    )


def star_exact(
    n: int, epsilon: Fraction, config: Config = DEFAULT_CONFIG
) -> Construction:
    """An exact map of the ``n``-star with entropy in ``[log 3/n, log 3/n + eps)``."""
    if n < 2:
        raise ConstructionError("Stars need n >= 2")
    base = tent3()
    wedge = wedge_power(base.map, GraphPoint.at("a"), n, config)
    result = totalize(wedge.map, epsilon, config)
    trace = ConstructionTrace(
        "star",
        parameters={"n": n, "epsilon": epsilon},
        points={"center": GraphPoint.at("a")},
        children=[wedge.trace, result.trace],
    )
    return Construction(result.map, trace, result.enclosure)


def binary_exact(
    n: int, epsilon: Fraction, config: Config = DEFAULT_CONFIG
) -> Construction:
    """
    An exact map of ``B_n`` with entropy in ``[log 3/2^n, log 3/2^n + eps)``.

    ``B_1`` is the arc with the totalized base map. Each further level adds
    an arc at the central root, wedges two copies at its tip, which halves
    the entropy, and totalizes again; every step gets a third of ``eps``.
    """
    if n < 1:
        raise ConstructionError("Binary trees start at n = 1")
    if n == 1:
        base = b1_base()
        result = totalize(base.map, epsilon, config)
        root = base.trace.points["central_root"]
        trace = ConstructionTrace(
            "binary",
            parameters={"n": 1, "epsilon": epsilon},
            points={"central_root": root},
            children=[result.trace],
        )
        return Construction(result.map, trace, result.enclosure)

    third = epsilon / 3
    previous = binary_exact(n - 1, third, config)
    root = previous.trace.points["central_root"]
    grown = edge_add(previous.map, root, third, config)
    tip = grown.trace.points["tip"]
    doubled = wedge_power(grown.map, tip, 2, config)
    result = totalize(doubled.map, third, config)
    trace = ConstructionTrace(
        "binary",
        parameters={"n": n, "epsilon": epsilon},
        points={"central_root": tip},
        children=[previous.trace, grown.trace, doubled.trace, result.trace],
    )
    return Construction(result.map, trace, result.enclosure)

