from __future__ import annotations

import logging

from typing import TYPE_CHECKING


if TYPE_CHECKING:
    from cleo.io.io import IO


class IOHandler(logging.Handler):
    """
    Forwards log records to the output of the running command.

    Warnings and errors go to the error output with their style tags.
    """

    def __init__(self, io: IO) -> None:
        self._io = io

        super().__init__()

    def emit(self, record: logging.LogRecord) -> None:
        try:
            msg = self.format(record)
            if record.levelno >= logging.ERROR:
                self._io.write_error_line(f"<error>{msg}</error>")
            elif record.levelno >= logging.WARNING:
                self._io.write_error_line(f"<warning>{msg}</warning>")
            else:
                self._io.write_line(msg)
        except Exception:
            self.handleError(record)


def level_for(io: IO) -> int:
    if io.is_debug() or io.is_very_verbose():
        return logging.DEBUG
    if io.is_verbose():
        return logging.INFO
    return logging.WARNING
