from __future__ import annotations

from typing import TYPE_CHECKING

from cleo.application import Application as BaseApplication

from graphdyn import __version__
from graphdyn.command import COMMANDS
from graphdyn.config import DEFAULT_CONFIG


if TYPE_CHECKING:
    from graphdyn.config import Config


class Application(BaseApplication):
    def __init__(self, config: Config = DEFAULT_CONFIG) -> None:
        super().__init__("graphdyn", __version__)

        for command in COMMANDS:
            self.add(command(config))


def main() -> int:
    exit_code: int = Application().run()
    return exit_code


if __name__ == "__main__":
    raise SystemExit(main())
