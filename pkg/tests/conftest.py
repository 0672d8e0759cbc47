from __future__ import annotations

from pathlib import Path

import pytest

from contrapunctus.score import Piece

DATA = Path(__file__).parent / "data"

# MIDI rows of the reference solo (fundamental c, major) and lydian duet (fundamental f)
SOLO_MIDI = [55, 60, 48, 50, 48, 60, 59, 62, 55, 57, 53, 55, 48, 52, 47, 48]
DUET_MIDI_TOP = [65, 67, 65, 77, 76, 69, 71, 76, 72, 74, 76, 77]
DUET_MIDI_BOTTOM = [65, 60, 62, 62, 60, 65, 67, 67, 69, 67, 67, 65]
DUET_TREE = "(((X X) (X X)) ((X (X X X)) ((X X) (X X))))"


@pytest.fixture
def data_dir() -> Path:
    return DATA


@pytest.fixture
def problems_text() -> str:
    return (DATA / "problems.lp").read_text()


@pytest.fixture
def musing_text() -> str:
    return (DATA / "musing.lp").read_text()


@pytest.fixture
def reference_solo() -> Piece:
    return Piece.from_notes("solo", "major", [m - 23 for m in SOLO_MIDI])


@pytest.fixture
def reference_duet() -> Piece:
    return Piece.from_notes(
        "duet", "lydian", [m - 28 for m in DUET_MIDI_TOP], [m - 28 for m in DUET_MIDI_BOTTOM]
    )


# (number, title, passed, seconds) per acceptance criterion, printed after the run
ACCEPTANCE_RESULTS: list[tuple[int, str, bool, float]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, seconds in sorted(ACCEPTANCE_RESULTS):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"{status} criterion {number:2d}: {title} ({seconds:.2f} s)")
