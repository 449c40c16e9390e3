from __future__ import annotations

from typing import TYPE_CHECKING

from cleo.io.io import IO

from graphdyn.serialization import dumps
from graphdyn.serialization import map_to_data
from graphdyn.serialization import pair_to_data
from graphdyn.serialization import trace_to_data


if TYPE_CHECKING:
    from collections.abc import Collection
    from pathlib import Path
    from typing import ClassVar

    from graphdyn.constructions import ConstructionTrace
    from graphdyn.plmap import PLMarkovMap
    from graphdyn.structure import Side


class Exporter:
    """
    Exporter class to write a map to its artifact formats.
    """

    FORMAT_JSON = "json"
    FORMAT_DOT = "dot"

    EXPORT_METHODS: ClassVar[dict[str, str]] = {
        FORMAT_JSON: "_export_json",
        FORMAT_DOT: "_export_dot",
    }

    def __init__(self, m: PLMarkovMap) -> None:
        self._map = m
        self._nacc: Collection[Side] | None = None
        self._name = "markov"

    @classmethod
    def is_format_supported(cls, fmt: str) -> bool:
        return fmt in cls.EXPORT_METHODS

    def with_nacc(self, nacc: Collection[Side] | None) -> Exporter:
        self._nacc = nacc

        return self

    def with_name(self, name: str) -> Exporter:
        self._name = name

        return self

    def export(self, fmt: str, cwd: Path, output: IO | str) -> None:
        if not self.is_format_supported(fmt):
            raise ValueError(f"Invalid export format: {fmt}")

        getattr(self, self.EXPORT_METHODS[fmt])(cwd, output)

    def export_trace(self, trace: ConstructionTrace, cwd: Path, output: str) -> None:
        self._write(cwd, output, dumps(trace_to_data(trace)))

    def _export_json(self, cwd: Path, output: IO | str) -> None:
        if self._nacc is None:
            data = map_to_data(self._map)
        else:
            data = pair_to_data(self._map, self._nacc)
        self._write(cwd, output, dumps(data))

    def _export_dot(self, cwd: Path, output: IO | str) -> None:
        self._write(cwd, output, self._map.incidence_matrix().to_dot(self._name))

    @staticmethod
    def _write(cwd: Path, output: IO | str, content: str) -> None:
        if isinstance(output, IO):
            output.write(content)
        else:
            with (cwd / output).open("w", encoding="utf-8") as f:
                f.write(content)
