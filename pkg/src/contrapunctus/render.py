"""
Output formats: MIDI numbers, the human-readable score block, a timed
event list and LilyPond-style engraver source.
"""

from __future__ import annotations

from decimal import ROUND_HALF_EVEN, Decimal
from enum import Enum
from fractions import Fraction

from .pitch import check_note
from .rhythm import TimedPiece, tree_to_sexpr
from .score import Piece

# internal note 25 is C3 (MIDI 48) under fundamental c
BASE_OFFSET = 23

_NAMES = ("C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B")
_ENGRAVER_NAMES = ("c", "cis", "d", "dis", "e", "f", "fis", "g", "gis", "a", "ais", "b")


class Fundamental(Enum):
    C = "c"
    D = "d"
    E = "e"
    F = "f"
    G = "g"
    A = "a"
    B = "b"

    @property
    def offset(self) -> int:
        return {"c": 0, "d": 2, "e": 4, "f": 5, "g": 7, "a": 9, "b": 11}[self.value]

    @classmethod
    def parse(cls, name: str) -> Fundamental:
        try:
            return cls(name.lower())
        except ValueError:
            raise ValueError(f"unknown fundamental {name!r}") from None


def _fundamental(f) -> Fundamental:
    return f if isinstance(f, Fundamental) else Fundamental.parse(f)


def midi_pitch(n: int, f: Fundamental | str = Fundamental.C) -> int:
    return check_note(n) + BASE_OFFSET + _fundamental(f).offset


def note_name(midi: int) -> str:
    """Letter name; MIDI 36..71 is unmarked, each octave above adds ' and each below adds ,"""
    octave = midi // 12
    marks = "'" * max(0, octave - 5) + "," * max(0, 3 - octave)
    return _NAMES[midi % 12] + marks


def _split(tp: TimedPiece | Piece) -> tuple[Piece, TimedPiece | None]:
    if isinstance(tp, TimedPiece):
        return tp.piece, tp
    return tp, None


def _delta_token(a: int | None, b: int | None) -> str:
    if a is None or b is None:
        return "."
    if a == b:
        return '""'
    return f"{b - a:+d}"


def render_human(tp: TimedPiece | Piece, f: Fundamental | str = Fundamental.C) -> str:
    """Three rows per part (numbers, names, deltas), plus the tree when a rhythm is attached."""
    piece, timed = _split(tp)
    blocks = []
    for p in piece.style.parts:
        midis = [None if n is None else midi_pitch(n, f) for n in piece.notes(p)]
        numbers = "| " + "".join("-- " if m is None else f"{m:2d} " for m in midis)
        names = "| " + "".join(" " + ("r" if m is None else note_name(m)).ljust(2) for m in midis)
        tokens = [_delta_token(a, b) for a, b in zip(midis, midis[1:])]
        deltas = "| " + ("  " + " ".join(tokens) + " " if tokens else "")
        rows = [numbers, names, deltas]
        if timed is not None:
            rows.append("| " + tree_to_sexpr(timed.tree))
        blocks.append("\n".join(rows) + "\n")
    return "\n".join(blocks)


def _fixed(x: Fraction, seconds: Decimal) -> str:
    value = Decimal(x.numerator) * seconds / Decimal(x.denominator)
    return str(value.quantize(Decimal("0.000001"), rounding=ROUND_HALF_EVEN))


def render_events(
    tp: TimedPiece | Piece,
    f: Fundamental | str = Fundamental.C,
    whole_duration_seconds: Decimal | int | str = Decimal(16),
) -> str:
    """CSV lines ``part,onset,duration,midi`` sorted by (onset, part); rests emit nothing."""
    piece, timed = _split(tp)
    seconds = Decimal(whole_duration_seconds)
    if timed is not None:
        onsets, durations = timed.onsets, timed.durations
    else:
        step = Fraction(1, piece.length)
        onsets = tuple(k * step for k in range(piece.length))
        durations = (step,) * piece.length
    events = []
    for p in piece.style.parts:
        for t, n in enumerate(piece.notes(p)):
            if n is not None:
                events.append((onsets[t], p, durations[t], midi_pitch(n, f)))
    events.sort(key=lambda e: (e[0], e[1]))
    return "".join(
        f"{p},{_fixed(on, seconds)},{_fixed(dur, seconds)},{m}\n" for on, p, dur, m in events
    )


def engraver_pitch(midi: int) -> str:
    """Absolute pitch: c is MIDI 48, c' is MIDI 60, c, is MIDI 36."""
    octave = midi // 12
    return _ENGRAVER_NAMES[midi % 12] + "'" * max(0, octave - 4) + "," * max(0, 4 - octave)


def _engraver_duration(span: Fraction, measures: int) -> str:
    # a measure is one whole note, so a leaf lasts span * measures wholes
    whole = span * measures
    return "1" if whole == 1 else f"1*{whole.numerator}/{whole.denominator}"


def render_engraver(tp: TimedPiece | Piece, f: Fundamental | str = Fundamental.C) -> str:
    piece, timed = _split(tp)
    lines = ['\\version "2.24.0"', "\\score {", "  <<"]
    for p in piece.style.parts:
        tokens = []
        for t, n in enumerate(piece.notes(p)):
            name = "r" if n is None else engraver_pitch(midi_pitch(n, f))
            if timed is None:
                tokens.append(name + "4")
            else:
                tokens.append(name + _engraver_duration(timed.durations[t], timed.tree.measure_count))
        lines.append(f'    \\new Staff = "part{p}" {{ ' + " ".join(tokens) + " }")
    lines += ["  >>", "  \\layout { }", "}"]
    return "\n".join(lines) + "\n"
