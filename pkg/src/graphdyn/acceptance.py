from __future__ import annotations

import logging
import math
import random
import time

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import TYPE_CHECKING
from typing import cast

import mpmath
import numpy as np

from graphdyn.config import DEFAULT_CONFIG
from graphdyn.constructions import b1_base
from graphdyn.constructions import binary_exact
from graphdyn.constructions import star_exact
from graphdyn.constructions import tent3
from graphdyn.constructions import totalize
from graphdyn.constructions import wedge_power
from graphdyn.dynamics import bound_report
from graphdyn.dynamics import classify
from graphdyn.dynamics import endpoint_cycles
from graphdyn.dynamics import is_transitive
from graphdyn.dynamics import loose_horseshoe_search
from graphdyn.entropy import entropy
from graphdyn.exceptions import GraphDynError
from graphdyn.exceptions import ResourceLimitError
from graphdyn.graphcore import Catalog
from graphdyn.graphcore import GraphPoint
from graphdyn.graphcore import kappa
from graphdyn.graphcore import kappa_by_subgraphs
from graphdyn.purify import PeriodicOrbitSpec
from graphdyn.purify import QuotientExample
from graphdyn.purify import purify_stage
from graphdyn.purify import quotient_example
from graphdyn.rationals import LogValue
from graphdyn.rationals import certainly_less
from graphdyn.rationals import width_at_most
from graphdyn.specprop import ShadowingRequest
from graphdyn.specprop import primitivity_index
from graphdyn.specprop import spec_witness
from graphdyn.structure import unfold


if TYPE_CHECKING:
    from collections.abc import Callable

    import numpy.typing as npt

    from graphdyn.config import Config
    from graphdyn.constructions import Construction
    from graphdyn.entropy import EntropyEnclosure
    from graphdyn.plmap import PLMarkovMap


logger = logging.getLogger(__name__)

EPSILON = Fraction(1, 10)
LOG3 = LogValue(Fraction(3))
WITNESS_REQUESTS = 100
PROPERTY_DIMENSION = 64
# Deepest purify stage checked per star; larger stars carry longer cycles.
PURIFY_STAGES = {2: 5, 3: 3, 4: 2, 5: 1}
ORACLE_DIGITS = 40
ORACLE_STEPS = 6
ORACLE_MARGIN = 1e-10
# Spectral radii above one of small integer matrices are far above this.
TRIVIAL_RADIUS = 1e-6


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


class _Instances:
    """Constructions shared between the checks, built on first use."""

    def __init__(self, config: Config) -> None:
        self.config = config
        self.deadline = time.monotonic() + config.acceptance_budget

    def tick(self, step: str) -> None:
        if time.monotonic() > self.deadline:
            raise ResourceLimitError(
                f"Acceptance budget of {self.config.acceptance_budget:g}s"
                f" exhausted before {step}"
            )

    @cached_property
    def tent3(self) -> PLMarkovMap:
        return tent3().map

    @cached_property
    def b1(self) -> PLMarkovMap:
        return b1_base().map

    @cached_property
    def totalized_b1(self) -> Construction:
        self.tick("totalize(b1)")
        return totalize(self.b1, EPSILON, self.config)

    @cached_property
    def stars(self) -> dict[int, Construction]:
        stars = {}
        for n in range(2, 6):
            self.tick(f"star({n})")
            stars[n] = star_exact(n, EPSILON, self.config)
        return stars

    @cached_property
    def binaries(self) -> dict[int, Construction]:
        binaries = {}
        for n in range(1, 4):
            self.tick(f"binary({n})")
            binaries[n] = binary_exact(n, EPSILON, self.config)
        return binaries

    @cached_property
    def examples(self) -> dict[str, QuotientExample]:
        examples = {}
        for name in ("sigma", "theta_candidate", "dumbbell"):
            self.tick(f"the {name} example")
            examples[name] = quotient_example(name, EPSILON, config=self.config)
        return examples

    def maps(self) -> list[tuple[str, PLMarkovMap]]:
        maps = [
            ("tent3", self.tent3),
            ("b1", self.b1),
            ("totalize(b1)", self.totalized_b1.map),
        ]
        maps.extend((f"star({n})", c.map) for n, c in self.stars.items())
        maps.extend((f"binary({n})", c.map) for n, c in self.binaries.items())
        maps.extend((name, e.map) for name, e in self.examples.items())
        return maps


def _below(enclosure: EntropyEnclosure, target: LogValue) -> bool:
    return certainly_less(enclosure.upper, target, EPSILON)


def check_entropy_exactness(instances: _Instances) -> str | None:
    exact = entropy(instances.tent3, config=instances.config)
    if not (exact.exact and exact.lower == LOG3):
        return f"tent3 gives [{exact.lower}, {exact.upper}]"
    half = LogValue(Fraction(3), 2)
    enclosure = entropy(instances.b1, Fraction(1, 10**9), instances.config)
    if not enclosure.lower <= half <= enclosure.upper:
        return f"b1 enclosure [{enclosure.lower}, {enclosure.upper}] misses {half}"
    if not width_at_most(enclosure.lower, enclosure.upper, Fraction(1, 10**9)):
        return "b1 enclosure is wider than 1/10^9"
    return None


def check_wedge_law(instances: _Instances) -> str | None:
    for k in range(2, 6):
        instances.tick(f"the wedge of {k} copies")
        wedge = wedge_power(instances.tent3, GraphPoint.at("a"), k, instances.config)
        scaled = entropy(wedge.map, Fraction(1, 10**9), instances.config).scaled(k)
        if not (
            float(scaled.lower) <= float(LOG3) + 1e-8
            and float(LOG3) <= float(scaled.upper) + 1e-8
        ):
            return f"{k} * h(wedge) = [{scaled.lower}, {scaled.upper}]"
    return None


def check_star_infima(instances: _Instances) -> str | None:
    for n, built in instances.stars.items():
        target = LOG3.divided(n)
        assert built.enclosure is not None
        if not classify(built.map).exact:
            return f"star({n}) is not exact"
        if built.enclosure.upper < target or not _below(built.enclosure, target):
            return f"star({n}) entropy {built.enclosure.upper} is off {target}"
        cycle = PeriodicOrbitSpec(
            next(c for c in endpoint_cycles(built.map) if len(c) == n)
        )
        ceiling = max(built.enclosure.upper, target)
        previous: Construction | None = None
        window: int | None = None
        for stage in range(1, PURIFY_STAGES[n] + 1):
            instances.tick(f"purify stage {stage} of star({n})")
            if previous is not None:
                window = cast("int", previous.trace.parameters["window"])
            purified = purify_stage(
                built.map, cycle, EPSILON, stage, instances.config, window=window
            )
            enclosure = purified.enclosure
            assert enclosure is not None
            if not certainly_less(enclosure.upper, ceiling, EPSILON):
                return (
                    f"star({n}) stage {stage} entropy {enclosure.upper}"
                    f" is not below {ceiling} + {EPSILON}"
                )
            if (
                previous is not None
                and previous.enclosure is not None
                and purified.trace.parameters["window"] == window
                and enclosure.upper < previous.enclosure.lower
            ):
                return f"star({n}) stage {stage} entropy drops below stage {stage - 1}"
            previous = purified
    return None


def check_binary_infima(instances: _Instances) -> str | None:
    for n, built in instances.binaries.items():
        target = LOG3.divided(2**n)
        assert built.enclosure is not None
        if built.enclosure.upper < target or not _below(built.enclosure, target):
            return f"binary({n}) entropy {built.enclosure.upper} is off {target}"
        graph = built.map.graph
        endpoints = [v for v in graph.vertices if graph.valence(v) == 1]
        cycles = endpoint_cycles(built.map)
        if len(endpoints) != 2**n or [len(c) for c in cycles] != [2**n]:
            return f"binary({n}) endpoints do not form one {2**n}-cycle"
    return None


def check_kappa_catalog(instances: _Instances) -> str | None:
    expected = {"arc": 3, "circle": 3, "sigma": 4, "theta": 5}
    graphs = {name: Catalog.by_name(name) for name in Catalog.NAMES}
    graphs.update({f"star({n})": Catalog.star(n) for n in range(2, 6)})
    expected.update({f"star({n})": n + 1 for n in range(2, 6)})
    for name, graph in graphs.items():
        formula = kappa(graph, instances.config)
        enumerated = kappa_by_subgraphs(graph, config=instances.config)
        if formula != enumerated:
            return f"{name}: formula {formula} != enumeration {enumerated}"
        if name in expected and formula != expected[name]:
            return f"{name}: kappa {formula}, expected {expected[name]}"
    return None


def check_bound_consistency(instances: _Instances) -> str | None:
    sigma = instances.examples["sigma"]
    bound = bound_report(sigma.graph, instances.config).corollary_bound
    if sigma.enclosure.lower < bound:
        return f"sigma example {sigma.enclosure.lower} is below {bound}"
    theta = instances.examples["theta_candidate"]
    if not _below(theta.enclosure, LOG3.divided(3)):
        return f"theta example {theta.enclosure.upper} is not near {LOG3.divided(3)}"
    sharpened = bound_report(theta.graph, instances.config).sharpened_bound
    if not sharpened < theta.enclosure.lower:
        return f"theta example {theta.enclosure.lower} is not above {sharpened}"
    return None


def check_classification(instances: _Instances) -> str | None:
    classification = classify(instances.b1)
    if not classification.transitive or classification.totally_transitive:
        return "b1 is not transitive without total transitivity"
    if classification.period != 2:
        return f"b1 decomposes with k={classification.period}"
    total = instances.totalized_b1
    assert total.enclosure is not None
    if primitivity_index(total.map) is None:
        return "totalize(b1) is not primitive"
    if not _below(total.enclosure, LogValue(Fraction(3), 2)):
        return f"totalize(b1) entropy {total.enclosure.upper} is too large"
    return None


def check_horseshoes(instances: _Instances) -> str | None:
    for name, m in instances.maps():
        instances.tick(f"horseshoes of {name}")
        enclosure = entropy(m, config=instances.config)
        for s in (2, 3):
            found = loose_horseshoe_search(m, s, instances.config)
            if found is not None and found.loose:
                if not LogValue(Fraction(s)) < enclosure.lower:
                    return f"{name}: loose {s}-horseshoe but h <= log({s})"
    tight = loose_horseshoe_search(instances.tent3, 3, instances.config)
    if tight is None or tight.loose:
        return "tent3 has no tight 3-horseshoe"
    return None


def check_structure(instances: _Instances) -> str | None:
    for name in ("sigma", "dumbbell"):
        example = instances.examples[name]
        instances.tick(f"unfolding the {name} example")
        unfolding = unfold(example.map, example.nacc, instances.config)
        tree = example.tree.map
        result = unfolding.report
        if not result.passed:
            return f"{name}: unfolding fails {result.failures[:3]}"
        if not result.detached_below_kappa:
            return f"{name}: {result.detached} detached endpoints, kappa {result.kappa}"
        rename = {
            vertex: tree.graph.edge(side.germ.edge).head
            for side, vertex in unfolding.vertices.items()
        }
        lifted = {
            rename.get(pid, pid): rename.get(image, image)
            for pid, image in unfolding.map.vertex_images.items()
        }
        if lifted != dict(tree.vertex_images) or dict(
            unfolding.map.interval_images
        ) != dict(tree.interval_images):
            return f"{name}: the unfolding is not the generating tree map"
    return None


def _random_request(
    m: PLMarkovMap, gap: int, rng: random.Random
) -> ShadowingRequest:
    graph = m.markov_graph()
    segments = []
    for _ in range(rng.randint(1, 3)):
        walk = [rng.choice(m.interval_ids)]
        for _ in range(rng.randint(0, 2)):
            walk.append(rng.choice(sorted(graph.successors(walk[-1]))))
        segments.append(tuple(walk))
    minimum = sum(len(s) - 1 for s in segments) + len(segments) * gap
    return ShadowingRequest(tuple(segments), gap, minimum + rng.randint(0, 2))


def check_witnesses(instances: _Instances) -> str | None:
    rng = random.Random(0)
    subjects = [
        ("tent3", instances.tent3),
        ("totalize(b1)", instances.totalized_b1.map),
    ]
    for name, m in subjects:
        index = primitivity_index(m)
        if index is None:
            return f"{name} is not primitive"
        instances.tick(f"witnesses for {name}")
        for _ in range(WITNESS_REQUESTS):
            request = _random_request(m, index, rng)
            witness = spec_witness(m, request, instances.config)
            point = witness.point
            for _ in range(witness.period):
                point = m.evaluate(point)
            if not witness.verified or point != witness.point:
                return f"{name}: witness {witness.point} fails {request}"
    return None


def _closure_oracle(m: PLMarkovMap) -> bool:
    dense = m.incidence_matrix().dense().astype(bool)
    n = dense.shape[0]
    reach = dense.copy()
    for _ in range(n):
        reach = reach | (reach.astype(np.int64) @ dense.astype(np.int64) > 0)
    cyclic = bool((dense.sum(axis=1) == 1).all())
    return bool(reach.all()) and not cyclic


def _refined_log_radius(dense: npt.NDArray[np.float64], estimate: float) -> mpmath.mpf:
    """Inverse iteration from the float eigenvalue at ``ORACLE_DIGITS`` digits."""
    n = dense.shape[0]
    with mpmath.workdps(ORACLE_DIGITS):
        matrix = mpmath.matrix(dense.tolist())
        shift = mpmath.mpf(estimate) * (1 + mpmath.mpf(10) ** (10 - ORACLE_DIGITS))
        lu, pivots = mpmath.mp.LU_decomp(matrix - shift * mpmath.eye(n))
        vector = mpmath.matrix([1] * n)
        for _ in range(ORACLE_STEPS):
            vector = mpmath.mp.U_solve(lu, mpmath.mp.L_solve(lu, vector, pivots))
            vector = vector / mpmath.norm(vector, 1)
        image = matrix * vector
        k = max(range(n), key=lambda i: abs(vector[i]))
        return mpmath.log(abs(image[k] / vector[k]))


def _eigen_oracle(m: PLMarkovMap, enclosure: EntropyEnclosure) -> float | mpmath.mpf:
    """
    ``log`` of the spectral radius of the incidence matrix.

    The float eigenvalue is returned when it sits well inside
    ``enclosure``; otherwise it is refined to ``ORACLE_DIGITS`` digits so
    that the containment test does not depend on float rounding.
    """
    dense = m.incidence_matrix().dense().astype(np.float64)
    radius = float(max(abs(np.linalg.eigvals(dense))))
    if radius < 1 + TRIVIAL_RADIUS:
        return 0.0
    value = math.log(radius)
    lower, upper = float(enclosure.lower), float(enclosure.upper)
    if lower + ORACLE_MARGIN < value < upper - ORACLE_MARGIN:
        return value
    return _refined_log_radius(dense, radius)


def check_properties(instances: _Instances) -> str | None:
    for name, m in instances.maps():
        instances.tick(f"properties of {name}")
        if m.validate() != m.validate():
            return f"{name}: validation is not idempotent"
        enclosure = entropy(m, config=instances.config)
        oracle = _eigen_oracle(m, enclosure)
        if not enclosure.contains(oracle):
            return f"{name}: eigenvalue oracle {oracle} outside the enclosure"
        if not m.graph.is_tree():
            continue
        if m.incidence_matrix().dimension > PROPERTY_DIMENSION:
            continue
        if bool(is_transitive(m)) != _closure_oracle(m):
            return f"{name}: transitivity disagrees with the closure oracle"
    return None


CHECKS: list[tuple[str, Callable[[_Instances], str | None]]] = [
    ("entropy-exactness", check_entropy_exactness),
    ("wedge-law", check_wedge_law),
    ("star-infima", check_star_infima),
    ("binary-infima", check_binary_infima),
    ("kappa-catalog", check_kappa_catalog),
    ("bound-consistency", check_bound_consistency),
    ("classification", check_classification),
    ("horseshoe-entropy", check_horseshoes),
    ("structure-round-trip", check_structure),
    ("specification-witnesses", check_witnesses),
    ("property-suites", check_properties),
]


def run_acceptance(config: Config = DEFAULT_CONFIG) -> list[CheckResult]:
    """
    Run every acceptance check in order; a raising check fails.

    Once ``config.acceptance_budget`` seconds have passed, the remaining
    construction steps raise and their checks fail without running.
    """
    instances = _Instances(config)
    results = []
    for name, check in CHECKS:
        logger.info("Running %s", name)
        started = time.monotonic()
        try:
            failure = check(instances)
        except GraphDynError as e:
            failure = f"{type(e).__name__}: {e}"
        logger.info("%s took %.1fs", name, time.monotonic() - started)
        results.append(CheckResult(name, failure is None, failure or "ok"))
    return results
