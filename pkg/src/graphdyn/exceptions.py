from __future__ import annotations

from typing import TYPE_CHECKING


if TYPE_CHECKING:
    from collections.abc import Sequence

    from graphdyn.entropy import EntropyEnclosure


class GraphDynError(Exception):
    pass


class GraphError(GraphDynError):
    pass


class ValidationError(GraphDynError):
    def __init__(self, message: str, diagnostics: Sequence[object] = ()) -> None:
        super().__init__(message)
        self.diagnostics = list(diagnostics)


class FormatError(GraphDynError):
    """
    Raised for malformed input files.

    ``position`` is either a JSON path such as ``$.edges[2].length``
    or a ``line:column`` pair when the document itself does not parse.
    """

    def __init__(self, message: str, position: str | None = None) -> None:
        self.position = position
        if position is not None:
            message = f"{position}: {message}"
        super().__init__(message)


class ConstructionError(GraphDynError):
    pass


class ShadowingError(GraphDynError):
    pass


class ResourceLimitError(GraphDynError):
    def __init__(
        self, message: str, enclosure: EntropyEnclosure | None = None
    ) -> None:
        super().__init__(message)
        self.enclosure = enclosure
