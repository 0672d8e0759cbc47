"""
Pitch arithmetic on the internal semitone lattice.

Notes are integers 1..68. Chromatic classes are 1..12 with class 1 the
fundamental of the mode, so the classes are relative to the key and the
lattice itself carries no absolute pitch. Absolute pitch is only attached
when rendering (see ``render.midi_pitch``).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

LOWEST_NOTE = 1
HIGHEST_NOTE = 68

STEP_SIZES = frozenset({1, 2})
LEAP_SIZES = frozenset({3, 4, 5, 7, 8, 9, 12})

# unison/octave, minor & major third, fifth, minor & major sixth
CONSONANT_INTERVALS = frozenset({0, 3, 4, 7, 8, 9})
FOURTH = 5


class Mode(Enum):
    MAJOR = "major"
    MINOR = "minor"
    DORIAN = "dorian"
    LYDIAN = "lydian"
    PHRYGIAN = "phrygian"

    @property
    def scale(self) -> frozenset[int]:
        return _SCALES[self]

    @classmethod
    def parse(cls, name: str) -> Mode:
        try:
            return cls(name.lower())
        except ValueError:
            raise ValueError(f"unknown mode {name!r}") from None


_OFFSETS = {
    Mode.MAJOR: (0, 2, 4, 5, 7, 9, 11),
    # harmonic minor: raised seventh gives a leading tone
    Mode.MINOR: (0, 2, 3, 5, 7, 8, 11),
    Mode.DORIAN: (0, 2, 3, 5, 7, 9, 10),
    Mode.LYDIAN: (0, 2, 4, 6, 7, 9, 11),
    Mode.PHRYGIAN: (0, 1, 3, 5, 7, 8, 10),
}
_SCALES = {m: frozenset(o + 1 for o in offs) for m, offs in _OFFSETS.items()}


class Kind(Enum):
    REPEAT = "repeat"
    STEP = "step"
    LEAP = "leap"
    TO_REST = "to-rest"
    FROM_REST = "from-rest"
    ILLEGAL = "illegal"


@dataclass(frozen=True)
class Motion:
    kind: Kind
    size: int = 0

    @property
    def direction(self) -> int:
        """+1 up, -1 down, 0 for no vertical movement."""
        return (self.size > 0) - (self.size < 0)


def check_note(n: int) -> int:
    if not isinstance(n, int) or isinstance(n, bool) or not LOWEST_NOTE <= n <= HIGHEST_NOTE:
        raise ValueError(f"note {n!r} outside {LOWEST_NOTE}..{HIGHEST_NOTE}")
    return n


def chromatic_class(n: int) -> int:
    check_note(n)
    return (n - 1) % 12 + 1


def scale_set(mode: Mode) -> frozenset[int]:
    return mode.scale


def chromatic_interval(c1: int, c2: int) -> int:
    """Interval from class ``c2`` up to class ``c1``, folded into 0..11."""
    return (c1 - c2) % 12


def valid_harmonic_interval(d: int, part_count: int, extra: frozenset[int] = frozenset()) -> bool:
    if d in CONSONANT_INTERVALS or d in extra:
        return True
    return d == FOURTH and part_count >= 3


def classify_motion(n1: int | None, n2: int | None, mode: Mode) -> Motion:
    """Classify the transition n1 -> n2; ``None`` stands for a rest."""
    if n1 is None:
        return Motion(Kind.FROM_REST)
    if n2 is None:
        return Motion(Kind.TO_REST)
    size = n2 - n1
    if size == 0:
        return Motion(Kind.REPEAT)
    if chromatic_class(n2) not in mode.scale:
        return Motion(Kind.ILLEGAL, size)
    if abs(size) in STEP_SIZES:
        return Motion(Kind.STEP, size)
    if abs(size) in LEAP_SIZES:
        return Motion(Kind.LEAP, size)
    return Motion(Kind.ILLEGAL, size)
