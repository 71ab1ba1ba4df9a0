# tests/test_logger.py

import logging

import pytest

from app.core.logger import SUCCESS_LEVEL_NUM, console, format_number

DOCUMENTED_HELPERS = (
    "info", "success", "warning", "error", "exception", "debug",
    "rule", "display_data_as_table", "display_rows", "display_error_panel", "get_progress_tracker", "set_level",
)


@pytest.mark.parametrize("name", DOCUMENTED_HELPERS)
def test_console_exposes_documented_helpers(name):
    assert callable(getattr(console, name))


def test_success_level_is_registered():
    assert logging.getLevelName(SUCCESS_LEVEL_NUM) == "SUCCESS"


def test_set_level_changes_the_logger():
    before = console._logger.level
    try:
        console.set_level("debug")
        assert console._logger.level == logging.DEBUG
        console.set_level("bogus")
        assert console._logger.level == logging.INFO
    finally:
        console._logger.setLevel(before)


def test_display_rows_formats_cells():
    with console._console.capture() as captured:
        console.display_rows([{"m": 0.05, "status": "ok"}, {"m": None}], ["m", "status"], "sweep")
    text = captured.get()
    assert "sweep" in text
    assert format_number(0.05) in text
    assert "None" in text
