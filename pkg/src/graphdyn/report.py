from __future__ import annotations

import hashlib
import time

from dataclasses import dataclass
from dataclasses import field
from typing import TYPE_CHECKING
from typing import Any

from graphdyn import __version__
from graphdyn.serialization import dumps


if TYPE_CHECKING:
    from pathlib import Path


def file_digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


@dataclass
class RunReport:
    """
    Reproducibility record of one command run.

    Only ``timing`` may differ between runs on identical inputs.
    """

    command: str
    inputs: dict[str, str] = field(default_factory=dict)
    results: dict[str, Any] = field(default_factory=dict)
    timing: dict[str, float] = field(default_factory=dict)
    status: int = 0
    error: str | None = None
    _started: float = field(default_factory=time.perf_counter, repr=False)

    def add_input(self, path: Path) -> None:
        self.inputs[str(path)] = file_digest(path)

    def record(self, key: str, value: Any) -> None:
        self.results[key] = value

    def fail(self, status: int, error: Exception) -> None:
        self.status = status
        self.error = str(error)

    def finish(self) -> RunReport:
        self.timing["seconds"] = round(time.perf_counter() - self._started, 6)

        return self

    def to_data(self) -> dict[str, Any]:
        return {
            "command": self.command,
            "inputs": dict(sorted(self.inputs.items())),
            "results": self.results,
            "timing": self.timing,
            "status": self.status,
            "error": self.error,
            "versions": {"graphdyn": __version__},
        }

    def write(self, path: Path) -> None:
        with path.open("w", encoding="utf-8") as f:
            f.write(dumps(self.to_data()))
