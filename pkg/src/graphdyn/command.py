from __future__ import annotations

import logging

from fractions import Fraction
from pathlib import Path
from typing import TYPE_CHECKING
from typing import Any

from cleo.commands.command import Command
from cleo.formatters.formatter import Formatter
from cleo.helpers import argument
from cleo.helpers import option

from graphdyn.acceptance import run_acceptance
from graphdyn.config import DEFAULT_CONFIG
from graphdyn.constructions import Construction
from graphdyn.constructions import b1_base
from graphdyn.constructions import binary_exact
from graphdyn.constructions import edge_add
from graphdyn.constructions import star_exact
from graphdyn.constructions import tent3
from graphdyn.constructions import totalize
from graphdyn.constructions import wedge_power
from graphdyn.dynamics import bound_report
from graphdyn.dynamics import classify
from graphdyn.dynamics import loose_horseshoe_search
from graphdyn.dynamics import period_decomposition
from graphdyn.dynamics import periodic_points
from graphdyn.entropy import entropy
from graphdyn.exceptions import ConstructionError
from graphdyn.exceptions import FormatError
from graphdyn.exceptions import GraphDynError
from graphdyn.exceptions import ResourceLimitError
from graphdyn.exceptions import ValidationError
from graphdyn.exporter import Exporter
from graphdyn.graphcore import disconnection_number
from graphdyn.graphcore import kappa
from graphdyn.io_handler import IOHandler
from graphdyn.io_handler import level_for
from graphdyn.purify import QUOTIENT_EXAMPLES
from graphdyn.purify import PeriodicOrbitSpec
from graphdyn.purify import purify_stage
from graphdyn.purify import quotient_example
from graphdyn.rationals import LogValue
from graphdyn.rationals import parse_rational
from graphdyn.report import RunReport
from graphdyn.serialization import enclosure_to_data
from graphdyn.serialization import graph_from_data
from graphdyn.serialization import load_file
from graphdyn.serialization import log_value_to_data
from graphdyn.serialization import map_from_data
from graphdyn.serialization import pair_from_data
from graphdyn.serialization import point_from_text
from graphdyn.serialization import request_from_data
from graphdyn.specprop import spec_witness
from graphdyn.structure import unfold


if TYPE_CHECKING:
    from graphdyn.config import Config
    from graphdyn.entropy import EntropyEnclosure
    from graphdyn.graphcore import TopoGraph
    from graphdyn.plmap import PLMarkovMap


COMMON_OPTIONS = [
    option("report", None, "Write a run report to the given file.", flag=False),
    option(
        "seed",
        None,
        "Accepted for harness compatibility; every algorithm is deterministic.",
        flag=False,
    ),
    option("tol", None, "Entropy tolerance as a 'p/q' rational.", flag=False),
    option("depth-cap", None, "Largest squaring depth for entropy.", flag=False),
]


class GraphDynCommand(Command):
    """
    Base class of all graphdyn commands.

    Subclasses implement :meth:`perform`; domain errors exit with 1 and
    exhausted resource caps with 2.
    """

    options = COMMON_OPTIONS  # noqa: RUF012

    def __init__(self, config: Config = DEFAULT_CONFIG) -> None:
        super().__init__()
        self._base_config = config

    def handle(self) -> int:
        handler = IOHandler(self.io)
        package_logger = logging.getLogger("graphdyn")
        package_logger.addHandler(handler)
        package_logger.setLevel(level_for(self.io))
        report = RunReport(self.name or "graphdyn")
        try:
            status = self.perform(self._config(), report)
        except ResourceLimitError as e:
            self.line_error(f"<error>{e}</error>")
            if e.enclosure is not None:
                self.line_error(f"Last enclosure: {describe_enclosure(e.enclosure)}")
            status = 2
            report.fail(status, e)
        except ValidationError as e:
            self.line_error(f"<error>{e}</error>")
            for diagnostic in e.diagnostics:
                self.line_error(f"  {diagnostic}")
            status = 1
            report.fail(status, e)
        except GraphDynError as e:
            self.line_error(f"<error>{e}</error>")
            status = 1
            report.fail(status, e)
        finally:
            package_logger.removeHandler(handler)

        report_file = self.option("report")
        if report_file:
            report.finish().write(Path(report_file))
        return status

    def perform(self, config: Config, report: RunReport) -> int:
        raise NotImplementedError

    def _config(self) -> Config:
        overrides: dict[str, Any] = {}
        if self.option("tol") is not None:
            overrides["tolerance"] = self.rational_option("tol")
        if self.option("depth-cap") is not None:
            overrides["depth_cap"] = self.integer_option("depth-cap")
        return self._base_config.with_overrides(**overrides)

    def rational_option(self, name: str, default: str | None = None) -> Fraction:
        value = self.option(name)
        return parse_rational(default if value is None else value, f"--{name}")

    def integer_option(self, name: str, default: int | None = None) -> int:
        value = self.option(name)
        if value is None:
            if default is None:
                raise FormatError(f"Option --{name} is required")
            return default
        try:
            return int(value)
        except ValueError:
            raise FormatError(f"'{value}' is not an integer", f"--{name}") from None

    def load(self, name: str, report: RunReport) -> tuple[Any, Path]:
        path = Path(name)
        data = load_file(path)
        report.add_input(path)
        return data, path.parent

    def load_graph(self, report: RunReport) -> TopoGraph:
        data, _ = self.load(self.argument("graph"), report)
        return graph_from_data(data)

    def load_map(self, name: str, report: RunReport) -> PLMarkovMap:
        data, base = self.load(name, report)
        return map_from_data(data, base)


def describe_enclosure(enclosure: EntropyEnclosure) -> str:
    return (
        f"[{enclosure.lower}, {enclosure.upper}], depth {enclosure.depth}"
        f" (display only: {enclosure.lower.approximate()}"
        f" .. {enclosure.upper.approximate()})"
    )


def converged(enclosure: EntropyEnclosure, report: RunReport) -> EntropyEnclosure:
    report.record("enclosure", enclosure_to_data(enclosure))
    if not enclosure.converged:
        raise ResourceLimitError("Entropy did not reach the tolerance", enclosure)
    return enclosure


GRAPH_ARGUMENT = argument("graph", "A graph JSON file.")
MAP_ARGUMENT = argument("map", "A map JSON file.")


class KappaCommand(GraphDynCommand):
    name = "kappa"
    description = "Prints the disconnecting number kappa of a graph."

    arguments = [GRAPH_ARGUMENT]  # noqa: RUF012

    def perform(self, config: Config, report: RunReport) -> int:
        value = kappa(self.load_graph(report), config)
        report.record("kappa", value)
        self.line(str(value))
        return 0


class DiscCommand(GraphDynCommand):
    name = "disc"
    description = "Prints the disconnection number Disc of a graph."

    arguments = [GRAPH_ARGUMENT]  # noqa: RUF012

    def perform(self, config: Config, report: RunReport) -> int:
        value = disconnection_number(self.load_graph(report), config)
        report.record("disc", value)
        self.line(str(value))
        return 0


class BoundsCommand(GraphDynCommand):
    name = "bounds"
    description = "Prints the entropy lower bounds of pure mixing maps on a graph."

    arguments = [GRAPH_ARGUMENT]  # noqa: RUF012

    def perform(self, config: Config, report: RunReport) -> int:
        bounds = bound_report(self.load_graph(report), config)
        report.record(
            "bounds",
            {
                "kappa": bounds.kappa,
                "corollary_bound": log_value_to_data(bounds.corollary_bound),
                "sharpened_bound": log_value_to_data(bounds.sharpened_bound),
                "fixed_point_power_bound": bounds.fixed_point_power_bound,
            },
        )
        self.line(f"kappa: {bounds.kappa}")
        self.line(f"h(f) >= {bounds.corollary_bound}")
        self.line(
            f"h(f) >= {bounds.sharpened_bound}"
            f" <comment>({bounds.sharpened_source})</comment>"
        )
        self.line(
            "f^m has infinitely many fixed points for m <="
            f" {bounds.fixed_point_power_bound}"
        )
        return 0


class EntropyCommand(GraphDynCommand):
    name = "entropy"
    description = "Prints a certified enclosure of the topological entropy of a map."

    arguments = [MAP_ARGUMENT]  # noqa: RUF012

    def perform(self, config: Config, report: RunReport) -> int:
        m = self.load_map(self.argument("map"), report)
        enclosure = converged(entropy(m, config.tolerance, config), report)
        self.line(describe_enclosure(enclosure))
        return 0


class CheckCommand(GraphDynCommand):
    name = "check"
    description = "Validates and classifies a map."

    arguments = [MAP_ARGUMENT]  # noqa: RUF012

    def perform(self, config: Config, report: RunReport) -> int:
        m = self.load_map(self.argument("map"), report)
        m.ensure_valid()
        classification = classify(m)
        report.record(
            "classification",
            {
                "transitive": classification.transitive,
                "totally_transitive": classification.totally_transitive,
                "exact": classification.exact,
                "period": classification.period,
                "heuristic": classification.heuristic,
            },
        )
        self.line("valid")
        self.line(f"transitive: {yes_no(classification.transitive)}")
        self.line(
            f"totally transitive: {yes_no(classification.totally_transitive)}"
        )
        self.line(f"exact: {yes_no(classification.exact)}")
        if classification.heuristic:
            self.line_error(
                "<warning>The graph has circles: transitivity is only"
                " certified as necessary.</warning>"
            )
        if classification.transitive:
            decomposition = period_decomposition(m)
            self.line(f"period: {decomposition.k}")
            for r, part in enumerate(decomposition.classes):
                self.line(f"  G_{r}: {' '.join(part)}")
        return 0


class PeriodicCommand(GraphDynCommand):
    name = "periodic"
    description = "Lists the points fixed by the n-th iterate of a map."

    arguments = [MAP_ARGUMENT]  # noqa: RUF012
    options = [  # noqa: RUF012
        *COMMON_OPTIONS,
        option("n", None, "The iterate.", flag=False),
    ]

    def perform(self, config: Config, report: RunReport) -> int:
        m = self.load_map(self.argument("map"), report)
        n = self.integer_option("n")
        found = periodic_points(m, n, config)
        report.record(
            "periodic",
            [
                {"point": str(p.point), "itinerary": list(p.itinerary)}
                for p in found
            ],
        )
        for p in found:
            note = " <comment>(degenerate walk)</comment>" if p.non_unique else ""
            self.line(f"{p.point}: {' '.join(p.itinerary)}{note}")
        self.line(f"{len(found)} point(s) with f^{n}(x) = x")
        return 0


class HorseshoeCommand(GraphDynCommand):
    name = "horseshoe"
    description = "Searches a map for a loose s-horseshoe."

    arguments = [MAP_ARGUMENT]  # noqa: RUF012
    options = [  # noqa: RUF012
        *COMMON_OPTIONS,
        option("s", None, "The number of pieces.", flag=False),
    ]

    def perform(self, config: Config, report: RunReport) -> int:
        m = self.load_map(self.argument("map"), report)
        s = self.integer_option("s")
        found = loose_horseshoe_search(m, s, config)
        if found is None:
            report.record("horseshoe", None)
            self.line(f"No {s}-horseshoe found")
            return 0
        report.record(
            "horseshoe",
            {
                "arc": list(found.arc),
                "pieces": [list(piece) for piece in found.pieces],
                "loose": found.loose,
                "certified": found.certified,
            },
        )
        kind = "loose" if found.loose else "tight"
        self.line(f"{kind} {s}-horseshoe over {' '.join(found.arc)}")
        for piece in found.pieces:
            self.line(f"  {' '.join(piece)}")
        if found.loose:
            self.line(f"h(f) > {LogValue(Fraction(s))}")
        return 0


def yes_no(value: bool) -> str:
    return "yes" if value else "no"


class ConstructCommand(GraphDynCommand):
    name = "construct"
    description = "Builds one of the entropy-minimizing example maps."

    # Short names for quotient examples.
    EXAMPLE_ALIASES = {"theta": "theta_candidate"}  # noqa: RUF012

    CONSTRUCTIONS = (
        "tent3",
        "b1",
        "star",
        "binary",
        *QUOTIENT_EXAMPLES,
        *EXAMPLE_ALIASES,
        "wedge",
        "edge-add",
        "totalize",
        "purify",
    )

    arguments = [  # noqa: RUF012
        argument("construction", f"One of {', '.join(CONSTRUCTIONS)}."),
    ]
    options = [  # noqa: RUF012
        *COMMON_OPTIONS,
        option("n", None, "Number of branches or levels.", flag=False),
        option("eps", None, "Entropy slack as a 'p/q' rational.", flag=False),
        option("output", "o", "The name of the output file.", flag=False),
        option("trace", None, "Write the construction trace to a file.", flag=False),
        option(
            "pair",
            None,
            "Write the map together with its inaccessible sides to a file.",
            flag=False,
        ),
        option("map", None, "The map a construction transforms.", flag=False),
        option("point", None, "A vertex or '<edge>@<p/q>' point.", flag=False),
        option("k", None, "Number of wedge copies.", flag=False),
        option(
            "orbit",
            None,
            "Comma separated endpoint cycle to purify.",
            flag=False,
        ),
        option("stage", None, "Purification stage.", flag=False),
    ]

    def perform(self, config: Config, report: RunReport) -> int:
        name = self.argument("construction")
        if name not in self.CONSTRUCTIONS:
            raise ConstructionError(
                f"Unknown construction '{name}'."
                f" Choose one of {', '.join(self.CONSTRUCTIONS)}"
            )
        name = self.EXAMPLE_ALIASES.get(name, name)

        nacc = None
        if name in QUOTIENT_EXAMPLES:
            example = quotient_example(
                name, self.epsilon(), self.integer_option("stage", 1), config
            )
            built = Construction(example.map, example.trace, example.enclosure)
            nacc = example.nacc
        else:
            built = self._build(name, config, report)

        enclosure = built.enclosure
        if enclosure is None:
            enclosure = entropy(built.map, config.tolerance, config)
        converged(enclosure, report)
        report.record("construction", name)

        cwd = Path.cwd()
        exporter = Exporter(built.map)
        exporter.export(Exporter.FORMAT_JSON, cwd, self.option("output") or self.io)
        if self.option("trace"):
            exporter.export_trace(built.trace, cwd, self.option("trace"))
        if self.option("pair"):
            if nacc is None:
                raise ConstructionError(f"'{name}' has no inaccessible sides")
            exporter.with_nacc(nacc).export(
                Exporter.FORMAT_JSON, cwd, self.option("pair")
            )
        if self.option("output"):
            self.line(f"{name}: h(f) in {describe_enclosure(enclosure)}")
        return 0

    def epsilon(self) -> Fraction:
        return self.rational_option("eps", "1/10")

    def _build(self, name: str, config: Config, report: RunReport) -> Construction:
        if name == "tent3":
            return tent3()
        if name == "b1":
            return b1_base()
        if name == "star":
            return star_exact(self.integer_option("n"), self.epsilon(), config)
        if name == "binary":
            return binary_exact(self.integer_option("n"), self.epsilon(), config)

        source = self.option("map")
        if source is None:
            raise FormatError(f"'{name}' needs an input map", "--map")
        m = self.load_map(source, report)
        if name == "totalize":
            return totalize(m, self.epsilon(), config)
        if name == "purify":
            return purify_stage(
                m,
                PeriodicOrbitSpec(self._orbit()),
                self.epsilon(),
                self.integer_option("stage", 1),
                config,
            )
        point = point_from_text(m.graph, self._point(), "--point")
        if name == "wedge":
            return wedge_power(m, point, self.integer_option("k"), config)
        return edge_add(m, point, self.epsilon(), config)

    def _point(self) -> str:
        value = self.option("point")
        if value is None:
            raise FormatError("Option --point is required")
        return str(value)

    def _orbit(self) -> tuple[str, ...]:
        value = self.option("orbit")
        if not value:
            raise FormatError("Option --orbit is required")
        return tuple(pid.strip() for pid in value.split(","))


class UnfoldCommand(GraphDynCommand):
    name = "unfold"
    description = "Detaches the inaccessible sides of a map into new endpoints."

    arguments = [  # noqa: RUF012
        argument("pair", "A map and inaccessible sides JSON file."),
    ]
    options = [  # noqa: RUF012
        *COMMON_OPTIONS,
        option("output", "o", "Write the lifted map to a file.", flag=False),
    ]

    def perform(self, config: Config, report: RunReport) -> int:
        data, base = self.load(self.argument("pair"), report)
        m, nacc = pair_from_data(data, base)
        unfolding = unfold(m, nacc, config)
        result = unfolding.report
        report.record(
            "unfold",
            {
                "detached": list(unfolding.detached),
                "kappa": result.kappa,
                "semiconjugacy": result.semiconjugacy,
                "checked": result.checked,
                "unique_preimages": result.unique_preimages,
            },
        )
        if self.option("output"):
            Exporter(unfolding.map).export(
                Exporter.FORMAT_JSON, Path.cwd(), self.option("output")
            )

        self.line(f"detached: {' '.join(unfolding.detached)}")
        self.line(
            f"{result.detached} detached endpoint(s), kappa {result.kappa}:"
            f" {'below' if result.detached_below_kappa else 'not below'}"
        )
        self.line(f"semiconjugacy checked on {result.checked} points")
        for failure in result.failures:
            self.line_error(f"  {failure}")
        if not result.passed:
            self.line_error("<error>The unfolding does not project back.</error>")
            return 1
        return 0


class WitnessCommand(GraphDynCommand):
    name = "witness"
    description = "Finds a periodic point shadowing the requested itineraries."

    arguments = [MAP_ARGUMENT]  # noqa: RUF012
    options = [  # noqa: RUF012
        *COMMON_OPTIONS,
        option("request", None, "A shadowing request JSON file.", flag=False),
    ]

    def perform(self, config: Config, report: RunReport) -> int:
        m = self.load_map(self.argument("map"), report)
        source = self.option("request")
        if source is None:
            raise FormatError("Option --request is required")
        data, _ = self.load(source, report)
        witness = spec_witness(m, request_from_data(data), config)
        report.record(
            "witness",
            {
                "point": str(witness.point),
                "period": witness.period,
                "itinerary": list(witness.itinerary),
                "verified": witness.verified,
            },
        )
        self.line(f"point: {witness.point}")
        self.line(f"period: {witness.period}")
        self.line(f"itinerary: {' '.join(witness.itinerary)}")
        if not witness.verified:
            self.line_error("<error>The orbit misses a requested interval.</error>")
            return 1
        return 0


class DotCommand(GraphDynCommand):
    name = "dot"
    description = "Writes the Markov graph of a map in DOT format."

    arguments = [MAP_ARGUMENT]  # noqa: RUF012
    options = [  # noqa: RUF012
        *COMMON_OPTIONS,
        option("output", "o", "The name of the output file.", flag=False),
    ]

    def perform(self, config: Config, report: RunReport) -> int:
        m = self.load_map(self.argument("map"), report)
        m.ensure_valid()
        output = self.option("output") or self.io
        Exporter(m).export(Exporter.FORMAT_DOT, Path.cwd(), output)
        return 0


class AcceptanceCommand(GraphDynCommand):
    name = "acceptance"
    description = "Runs the acceptance suite."

    options = [  # noqa: RUF012
        *COMMON_OPTIONS,
        option("budget", None, "Wall time budget in seconds.", flag=False),
    ]

    def perform(self, config: Config, report: RunReport) -> int:
        if self.option("budget") is not None:
            budget = self.integer_option("budget")
            config = config.with_overrides(acceptance_budget=float(budget))
        results = run_acceptance(config)
        report.record(
            "acceptance",
            {r.name: {"passed": r.passed, "detail": r.detail} for r in results},
        )
        for result in results:
            tag = "info" if result.passed else "error"
            status = "PASS" if result.passed else "FAIL"
            detail = Formatter.escape(result.detail)
            self.line(f"<{tag}>{status}</{tag}> {result.name}: {detail}")
        return 0 if all(r.passed for r in results) else 1


COMMANDS: list[type[GraphDynCommand]] = [
    KappaCommand,
    DiscCommand,
    EntropyCommand,
    CheckCommand,
    PeriodicCommand,
    HorseshoeCommand,
    ConstructCommand,
    UnfoldCommand,
    WitnessCommand,
    BoundsCommand,
    DotCommand,
    AcceptanceCommand,
]
