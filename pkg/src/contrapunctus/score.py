"""
Piece data model, bundled style specifications and the fact-file format.

A grid is a tuple of parts, each a tuple of events indexed by time. An event
is an ``int`` note or ``None`` for a rest. Parts and times are 1-based in the
public API (as in fact files) and 0-based inside grids.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import NamedTuple

from .pitch import HIGHEST_NOTE, LOWEST_NOTE, Mode

Event = int | None
REST: Event = None

STYLE_NAMES = ("solo", "duet", "trio", "quartet")


class ErrorRecord(NamedTuple):
    part: int
    time: int
    reason: str

    def __str__(self) -> str:
        return f'error({self.part},{self.time},"{self.reason}")'


@dataclass(frozen=True)
class StyleSpec:
    name: str
    part_count: int
    melodic_parts: frozenset[int]
    lowest_part: int
    part_range: tuple[tuple[int, int], ...]
    # fixed first note per part, or None to allow any note whose class is in start_classes
    start_notes: tuple[int, ...] | None = None
    start_classes: frozenset[int] = frozenset({1, 8})
    final_classes_melodic: frozenset[int] = frozenset({1})
    final_classes_other: frozenset[int] = frozenset({1, 8})
    rests_allowed: bool = False
    extra_valid_intervals: frozenset[int] = frozenset()
    max_span: int = 24

    def __post_init__(self):
        if len(self.part_range) != self.part_count:
            raise ValueError("part_range needs one (lo, hi) pair per part")
        if self.start_notes is not None and len(self.start_notes) != self.part_count:
            raise ValueError("start_notes needs one note per part")

    @property
    def parts(self) -> range:
        return range(1, self.part_count + 1)

    def range_of(self, part: int) -> tuple[int, int]:
        return self.part_range[part - 1]

    def with_range(self, lo: int, hi: int, part: int | None = None) -> StyleSpec:
        """Copy with the range of ``part`` (or of every part) replaced."""
        ranges = tuple(
            (lo, hi) if part is None or p == part else r
            for p, r in zip(self.parts, self.part_range)
        )
        return replace(self, part_range=ranges)

    def with_start(self, *notes: int) -> StyleSpec:
        return replace(self, start_notes=tuple(notes))


def style_spec(name: str) -> StyleSpec:
    full = (LOWEST_NOTE, HIGHEST_NOTE)
    if name == "solo":
        return StyleSpec("solo", 1, frozenset({1}), 1, (full,))
    if name == "duet":
        return StyleSpec("duet", 2, frozenset({1}), 2, (full,) * 2)
    if name == "trio":
        return StyleSpec("trio", 3, frozenset({1}), 3, (full,) * 3, extra_valid_intervals=frozenset({5}))
    if name == "quartet":
        return StyleSpec(
            "quartet", 4, frozenset({1}), 4, (full,) * 4,
            start_notes=(44, 37, 32, 25),
            extra_valid_intervals=frozenset({5}),
        )
    raise ValueError(f"unknown style {name!r}")


@dataclass(frozen=True)
class Piece:
    style: StyleSpec
    mode: Mode
    grid: tuple[tuple[Event, ...], ...]

    def __post_init__(self):
        grid = tuple(tuple(part) for part in self.grid)
        object.__setattr__(self, "grid", grid)
        if len(grid) != self.style.part_count:
            raise ValueError(f"{self.style.name} needs {self.style.part_count} parts, got {len(grid)}")
        if not grid[0] or any(len(part) != len(grid[0]) for part in grid):
            raise ValueError("every part needs the same, non-zero number of events")
        for part in grid:
            for ev in part:
                if ev is not None and (not isinstance(ev, int) or isinstance(ev, bool)):
                    raise TypeError(f"event must be an int note or None, got {ev!r}")

    @property
    def length(self) -> int:
        return len(self.grid[0])

    def event(self, part: int, time: int) -> Event:
        return self.grid[part - 1][time - 1]

    def notes(self, part: int) -> tuple[Event, ...]:
        return self.grid[part - 1]

    @classmethod
    def from_notes(cls, style: StyleSpec | str, mode: Mode | str, *parts) -> Piece:
        if isinstance(style, str):
            style = style_spec(style)
        if isinstance(mode, str):
            mode = Mode.parse(mode)
        return cls(style, mode, tuple(tuple(p) for p in parts))


@dataclass(frozen=True)
class PartialPiece:
    style: StyleSpec
    mode: Mode
    length: int
    pins: dict[tuple[int, int], Event] = field(default_factory=dict)

    @property
    def is_complete(self) -> bool:
        return len(self.pins) == self.style.part_count * self.length

    def to_piece(self) -> Piece:
        if not self.is_complete:
            missing = [
                (p, t) for p in self.style.parts for t in range(1, self.length + 1)
                if (p, t) not in self.pins
            ]
            raise ValueError(f"piece is incomplete; first missing cell (part, time) = {missing[0]}")
        grid = tuple(
            tuple(self.pins[p, t] for t in range(1, self.length + 1)) for p in self.style.parts
        )
        return Piece(self.style, self.mode, grid)


class FactError(ValueError):
    """Raised for unreadable or inconsistent fact files; ``line`` is 1-based or None."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class PinConflict(FactError):
    pass


class NoteOutOfRange(FactError):
    pass


_INT = r"(-?\d+)"
_NAME = r"([a-z][A-Za-z0-9_]*)"
_FACTS = [
    ("note", re.compile(rf"chosenNote\({_INT},{_INT},{_INT}\)")),
    ("rest", re.compile(rf"rest\({_INT},{_INT}\)")),
    ("mode", re.compile(rf"(?:keyMode|mode)\({_NAME}\)")),
    ("style", re.compile(rf"style\({_NAME}\)")),
    ("parts", re.compile(rf"part\({_INT}(?:\.\.{_INT})?\)")),
]
_CONST = re.compile(r"#const\s+([A-Za-z_]\w*)\s*=\s*(-?\d+)\s*\.\s*")


def _statements(text: str):
    """Yield (line number, fact without whitespace) for every statement."""
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("%", 1)[0].strip()
        if not line:
            continue
        if line.startswith("#"):
            m = _CONST.fullmatch(line)
            if not m:
                raise FactError(f"malformed directive {line!r}", lineno)
            yield lineno, ("const", m.group(1), m.group(2))
            continue
        body = re.sub(r"\s+", "", line)
        if not body.endswith("."):
            raise FactError(f"fact must end with '.': {line!r}", lineno)
        for fact in body[:-1].split(")."):
            fact = fact if fact.endswith(")") else fact + ")"
            yield lineno, fact


def parse_facts(text: str) -> PartialPiece:
    mode = style = length = parts_decl = None
    cells: dict[tuple[int, int], tuple[Event, int]] = {}
    for lineno, fact in _statements(text):
        if isinstance(fact, tuple):
            _, name, value = fact
            if name != "t":
                raise FactError(f"unknown constant {name!r}", lineno)
            length = int(value)
            continue
        for kind, pattern in _FACTS:
            m = pattern.fullmatch(fact)
            if m:
                break
        else:
            raise FactError(f"unrecognised fact {fact!r}", lineno)
        if kind == "note":
            p, t, n = map(int, m.groups())
            _pin(cells, (p, t), n, lineno)
        elif kind == "rest":
            p, t = map(int, m.groups())
            _pin(cells, (p, t), REST, lineno)
        elif kind == "mode":
            try:
                mode = Mode.parse(m.group(1))
            except ValueError as e:
                raise FactError(str(e), lineno) from None
        elif kind == "style":
            if m.group(1) not in STYLE_NAMES:
                raise FactError(f"unknown style {m.group(1)!r}", lineno)
            style = style_spec(m.group(1))
        else:
            lo = int(m.group(1))
            hi = int(m.group(2)) if m.group(2) is not None else lo
            parts_decl = (lo, hi) if parts_decl is None else (min(lo, parts_decl[0]), max(hi, parts_decl[1]))

    missing = [name for name, v in (("t", length), ("style", style), ("mode", mode)) if v is None]
    if missing:
        raise FactError(f"missing declarations: {', '.join(missing)}")
    if length < 1:
        raise FactError(f"t must be positive, got {length}")
    if parts_decl is not None and parts_decl != (1, style.part_count):
        raise FactError(f"part declaration {parts_decl} disagrees with style {style.name}")

    pins = {}
    for (p, t), (ev, lineno) in cells.items():
        if not 1 <= p <= style.part_count or not 1 <= t <= length:
            raise FactError(f"cell ({p},{t}) outside {style.part_count} parts x {length} steps", lineno)
        if ev is not None:
            lo, hi = style.range_of(p)
            if not lo <= ev <= hi:
                raise NoteOutOfRange(f"note {ev} outside part {p} range {lo}..{hi}", lineno)
        pins[p, t] = ev
    return PartialPiece(style, mode, length, pins)


def _pin(cells, key, ev, lineno):
    if key in cells and cells[key][0] != ev:
        raise PinConflict(f"cell {key} given twice with different events", lineno)
    cells.setdefault(key, (ev, lineno))


def emit_facts(piece: Piece | PartialPiece) -> str:
    if isinstance(piece, Piece):
        length = piece.length
        pins = {(p, t): piece.event(p, t) for p in piece.style.parts for t in range(1, length + 1)}
    else:
        length, pins = piece.length, piece.pins
    lines = [f"mode({piece.mode.value})."]
    for (p, t), ev in sorted(pins.items()):
        lines.append(f"rest({p},{t})." if ev is None else f"chosenNote({p},{t},{ev}).")
    n = piece.style.part_count
    lines += [
        f"#const t={length}.",
        f"style({piece.style.name}).",
        "part(1)." if n == 1 else f"part(1..{n}).",
    ]
    return "\n".join(lines) + "\n"
