from __future__ import annotations

from typing import TYPE_CHECKING

import pytest

from cleo.testers.command_tester import CommandTester

from graphdyn.application import Application


if TYPE_CHECKING:
    from graphdyn.config import Config
    from tests.types import CommandTesterFactory


@pytest.fixture
def app() -> Application:
    return Application()


@pytest.fixture
def command_tester_factory(app: Application) -> CommandTesterFactory:
    def _tester(command: str, config: Config | None = None) -> CommandTester:
        application = app if config is None else Application(config)
        cmd = application.find(command)
        tester = CommandTester(cmd)

        # Setting the formatter from the application
        app_io = application.create_io()
        formatter = app_io.output.formatter
        tester.io.output.set_formatter(formatter)
        tester.io.error_output.set_formatter(formatter)

        return tester

    return _tester
