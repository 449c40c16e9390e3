from __future__ import annotations

from typing import TYPE_CHECKING
from typing import Protocol


if TYPE_CHECKING:
    from cleo.testers.command_tester import CommandTester

    from graphdyn.config import Config


class CommandTesterFactory(Protocol):
    def __call__(
        self, command: str, config: Config | None = None
    ) -> CommandTester: ...
