"""
Counterpoint rule registry.

Every rule is written as a *cell check*: given a grid filled in column-major
order up to cell (part, time), it yields the errors whose inputs are all
known at that cell. Diagnosing a finished piece is the union of the cell
checks over every cell; the solver runs the same checks after each
assignment, so composition and diagnosis cannot drift apart.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

from .pitch import Kind, Mode, chromatic_class, classify_motion, valid_harmonic_interval
from .score import ErrorRecord, Piece, StyleSpec

INCORRECT_PROGRESSION = "Incorrect progression"
NO_REPEATED_NOTES = "No repeated notes in melodic parts"
OCTAVE_LEAP = "Leap of an octave from a note other than the fundamental"
REPEATED_NOTES = "Repeated notes"
REPEATED_PATTERN = "Repeated pattern"
SPLIT_MELODY = "Split melody"
DISSONANT_CONTOUR = "Dissonant contour"
UNRESOLVED_IMPULSE = "Unresolved impulse"
DISSONANT_INTERVAL = "Dissonant interval between parts"
MAX_DISTANCE = "Over maximum distance between parts"
PARTS_CROSS = "Parts can not cross"
INCORRECT_START = "Incorrect starting note"
INCORRECT_FINAL = "Incorrect final note"
NO_REST = "No rest for the wicked"

REASONS = (
    INCORRECT_PROGRESSION, NO_REPEATED_NOTES, OCTAVE_LEAP, REPEATED_NOTES,
    REPEATED_PATTERN, SPLIT_MELODY, DISSONANT_CONTOUR, UNRESOLVED_IMPULSE,
    DISSONANT_INTERVAL, MAX_DISTANCE, PARTS_CROSS, INCORRECT_START,
    INCORRECT_FINAL, NO_REST,
)

MAX_PART_DISTANCE = 16


@dataclass(frozen=True)
class RuleConfig:
    repeat_window: int = 3
    enabled: frozenset[str] = field(default_factory=lambda: frozenset(REASONS))

    def __post_init__(self):
        if self.repeat_window < 2:
            raise ValueError("repeat_window must be at least 2")
        unknown = set(self.enabled) - set(REASONS)
        if unknown:
            raise ValueError(f"unknown reasons: {sorted(unknown)}")

    def without(self, *reasons: str) -> RuleConfig:
        return RuleConfig(self.repeat_window, self.enabled - set(reasons))


class Context:
    """Per-piece constants the cell checks need; built once per diagnosis or search."""

    def __init__(self, style: StyleSpec, mode: Mode, length: int, cfg: RuleConfig | None = None):
        self.style = style
        self.mode = mode
        self.length = length
        self.cfg = cfg or RuleConfig()
        self.melodic = [p in style.melodic_parts for p in range(style.part_count + 1)]


def _delta(notes: Sequence, i: int) -> int | None:
    """Signed move from index i to i+1 (0-based), None when a rest is involved."""
    a, b = notes[i], notes[i + 1]
    if a is None or b is None:
        return None
    return b - a


def progression_cell(ctx: Context, grid, part: int, time: int) -> Iterator[ErrorRecord]:
    notes = grid[part - 1]
    if notes[time - 1] is None and not ctx.style.rests_allowed:
        yield ErrorRecord(part, time, NO_REST)
    if time >= 2:
        motion = classify_motion(notes[time - 2], notes[time - 1], ctx.mode)
        if motion.kind is Kind.ILLEGAL:
            yield ErrorRecord(part, time - 1, INCORRECT_PROGRESSION)


def melody_cell(ctx: Context, grid, part: int, time: int) -> Iterator[ErrorRecord]:
    if not ctx.melodic[part]:
        return
    notes = grid[part - 1]
    mode = ctx.mode
    rw = ctx.cfg.repeat_window
    i = time - 1  # index of the newest note

    if i >= 1:
        prev, cur = notes[i - 1], notes[i]
        motion = classify_motion(prev, cur, mode)
        if motion.kind is Kind.REPEAT:
            yield ErrorRecord(part, time - 1, NO_REPEATED_NOTES)
        elif motion.kind is Kind.LEAP and abs(motion.size) == 12 and chromatic_class(prev) != 1:
            yield ErrorRecord(part, time - 1, OCTAVE_LEAP)

        # same note left by the same step/leap: the later departure is at index j = i - 1
        j = i - 1
        if motion.kind in (Kind.STEP, Kind.LEAP):
            for k in range(max(0, j - rw - 1), j - 1):
                # same start and same size means the same landing note, hence the same kind
                if notes[k] == prev and notes[k + 1] == cur:
                    yield ErrorRecord(part, k + 1, REPEATED_NOTES)

        yield from _impulse(notes, part, i - 1, mode)

    if i >= 4:
        # pattern pair starting at index j = i - 2 is now complete
        j = i - 2
        pair = (_delta(notes, j), _delta(notes, j + 1))
        if None not in pair:
            for k in range(max(0, j - rw - 1), j - 1):
                if (_delta(notes, k), _delta(notes, k + 1)) == pair:
                    yield ErrorRecord(part, k + 1, REPEATED_PATTERN)
                    yield ErrorRecord(part, j + 1, REPEATED_PATTERN)
            # zigzag a, b, a, b with a and b of opposite sign
            k = j - 2
            if k >= 0 and pair[0] * pair[1] < 0 and (_delta(notes, k), _delta(notes, k + 1)) == pair:
                yield ErrorRecord(part, k + 1, SPLIT_MELODY)

    if time == ctx.length:
        sounding = [n for n in notes if n is not None]
        if sounding:
            lo, hi = min(sounding), max(sounding)
            if not valid_harmonic_interval((hi - lo) % 12, 2):
                yield ErrorRecord(part, time, DISSONANT_CONTOUR)


def _impulse(notes, part: int, u: int, mode: Mode) -> Iterator[ErrorRecord]:
    """Check the impulse (if any) at index u, now that the move u -> u+1 is known."""
    if u < 1:
        return
    direction = 0
    before = classify_motion(notes[u - 1], notes[u], mode)
    if before.kind is Kind.LEAP:
        direction = before.direction
    elif u >= 3:
        steps = [classify_motion(notes[k], notes[k + 1], mode) for k in range(u - 3, u)]
        if all(m.kind is Kind.STEP for m in steps):
            dirs = {m.direction for m in steps}
            if len(dirs) == 1:
                direction = dirs.pop()
    if direction == 0:
        return
    after = _delta(notes, u)
    if after is None or after * direction >= 0:
        yield ErrorRecord(part, u + 1, UNRESOLVED_IMPULSE)


def harmony_cell(ctx: Context, grid, part: int, time: int) -> Iterator[ErrorRecord]:
    if part < 2:
        return
    upper, lower = grid[part - 2][time - 1], grid[part - 1][time - 1]
    if upper is None or lower is None:
        return
    above = part - 1
    if not valid_harmonic_interval((upper - lower) % 12, ctx.style.part_count, ctx.style.extra_valid_intervals):
        yield ErrorRecord(above, time, DISSONANT_INTERVAL)
    if upper > lower + MAX_PART_DISTANCE:
        yield ErrorRecord(above, time, MAX_DISTANCE)
    if upper < lower:
        yield ErrorRecord(above, time, PARTS_CROSS)


def style_cell(ctx: Context, grid, part: int, time: int) -> Iterator[ErrorRecord]:
    style = ctx.style
    notes = grid[part - 1]
    note = notes[time - 1]
    if time == 1:
        if style.start_notes is not None:
            ok = note == style.start_notes[part - 1]
        else:
            ok = note is not None and chromatic_class(note) in style.start_classes
        if not ok:
            yield ErrorRecord(part, 1, INCORRECT_START)
    if note is not None:
        lo, hi = style.range_of(part)
        if not lo <= note <= hi:
            yield ErrorRecord(part, time, INCORRECT_PROGRESSION)
        elif time > 1:
            earlier = [n for n in notes[: time - 1] if n is not None]
            if earlier and (note > max(earlier) or note < min(earlier)):
                if max(max(earlier), note) - min(min(earlier), note) > style.max_span:
                    yield ErrorRecord(part, time, INCORRECT_PROGRESSION)
    if time == ctx.length:
        allowed = style.final_classes_melodic if part in style.melodic_parts else style.final_classes_other
        if note is None or chromatic_class(note) not in allowed:
            yield ErrorRecord(part, time, INCORRECT_FINAL)


# checks that read only the cell's own part; harmony_cell also reads the part above
OWN_PART_CHECKERS = (progression_cell, melody_cell, style_cell)
CHECKERS = (progression_cell, melody_cell, harmony_cell, style_cell)


def cell_errors(ctx: Context, grid, part: int, time: int) -> Iterator[ErrorRecord]:
    """All enabled errors completed at (part, time)."""
    enabled = ctx.cfg.enabled
    for check in CHECKERS:
        for err in check(ctx, grid, part, time):
            if err.reason in enabled:
                yield err


def _scan(checker, piece: Piece, cfg: RuleConfig | None) -> list[ErrorRecord]:
    ctx = Context(piece.style, piece.mode, piece.length, cfg)
    found = set()
    for t in range(1, piece.length + 1):
        for p in piece.style.parts:
            found.update(checker(ctx, piece.grid, p, t))
    return sorted(found, key=_order)


def _order(err: ErrorRecord):
    return (err.time, err.part, err.reason)


def check_progression(piece: Piece) -> list[ErrorRecord]:
    return _scan(progression_cell, piece, None)


def check_melody(piece: Piece, cfg: RuleConfig | None = None) -> list[ErrorRecord]:
    return _scan(melody_cell, piece, cfg)


def check_harmony(piece: Piece) -> list[ErrorRecord]:
    return _scan(harmony_cell, piece, None)


def check_style(piece: Piece) -> list[ErrorRecord]:
    return _scan(style_cell, piece, None)


def diagnose(piece: Piece, cfg: RuleConfig | None = None) -> list[ErrorRecord]:
    """Every rule violation in ``piece``, deduplicated and sorted by (time, part, reason)."""
    cfg = cfg or RuleConfig()
    ctx = Context(piece.style, piece.mode, piece.length, cfg)
    found = set()
    for t in range(1, piece.length + 1):
        for p in piece.style.parts:
            found.update(cell_errors(ctx, piece.grid, p, t))
    return sorted(found, key=_order)


def format_errors(errors) -> str:
    return "".join(f"{e}\n" for e in errors)
