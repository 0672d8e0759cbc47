"""
Farey sequences, partition trees and metrical structure.

A partition tree subdivides the span [0, 1) of a piece. Every internal node
splits its span evenly into 2 or 3 children and every leaf is the onset of
one time step. Nodes are layered by depth: splits above ``measure_depth``
cut the piece into measures, the next ``beat_depth`` levels cut measures
into beats, and anything deeper subdivides a beat into note durations.

Shapes are nested tuples: a leaf is ``()`` and an internal node is the tuple
of its children, so ``((), ())`` is a single 2-way split.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import reduce
from itertools import product
from typing import Iterator, Sequence

from .rules import ErrorRecord
from .score import Piece

PRIMES = (2, 3)
DEFAULT_CAPS = (2, 2, 2)
EXTREME_TOO_SHORT = "Extreme note too short"

Shape = tuple


# ---------------------------------------------------------------- Farey


def farey(n: int) -> list[Fraction]:
    """All reduced fractions in [0, 1] with denominator at most n, ascending."""
    if n < 1:
        raise ValueError("order must be at least 1")
    a, b, c, d = 0, 1, 1, n
    terms = [Fraction(a, b)]
    while c <= n:
        # next term after neighbours a/b < c/d
        k = (n + b) // d
        a, b, c, d = c, d, k * c - a, k * d - b
        terms.append(Fraction(a, b))
    return terms


def mediant(x: Fraction, y: Fraction) -> Fraction:
    if not x < y:
        raise ValueError("mediant needs x < y")
    return Fraction(x.numerator + y.numerator, x.denominator + y.denominator)


# ---------------------------------------------------------------- trees


class Strength(Enum):
    DOWNBEAT = "X"
    BEAT = "O"
    OFFBEAT = "o"


class TreeError(ValueError):
    """Malformed partition tree or tree string; ``position`` is a 0-based offset or None."""

    def __init__(self, message: str, position: int | None = None):
        self.position = position
        super().__init__(f"at position {position}: {message}" if position is not None else message)


def _leaves(shape: Shape) -> int:
    return 1 if not shape else sum(_leaves(c) for c in shape)


def _leaf_depths(shape: Shape, depth: int = 0) -> Iterator[int]:
    if not shape:
        yield depth
    else:
        for child in shape:
            yield from _leaf_depths(child, depth + 1)


def _uniform_prefix(shape: Shape) -> int:
    """Number of top levels whose nodes are all internal with one shared branching factor."""
    level, depth = [shape], 0
    while all(level) and len({len(node) for node in level}) == 1:
        level = [child for node in level for child in node]
        depth += 1
    return depth


@dataclass(frozen=True)
class PartitionTree:
    shape: Shape
    measure_depth: int = 0
    beat_depth: int = 0
    factors: tuple[int, ...] = PRIMES

    def __post_init__(self):
        self._validate(self.shape)
        if self.measure_depth < 0 or self.beat_depth < 0:
            raise TreeError("layer depths must be non-negative")
        top = self.measure_depth + self.beat_depth
        if min(_leaf_depths(self.shape)) < top:
            raise TreeError(f"a leaf sits above the beat layer (depth {top})")

    def _validate(self, node):
        if not isinstance(node, tuple):
            raise TreeError(f"tree nodes must be tuples, got {node!r}")
        if node and len(node) not in self.factors:
            raise TreeError(f"branching factor {len(node)} not in {sorted(self.factors)}")
        for child in node:
            self._validate(child)

    @property
    def leaf_count(self) -> int:
        return _leaves(self.shape)

    @property
    def depth(self) -> int:
        return max(_leaf_depths(self.shape))

    @property
    def duration_depth(self) -> int:
        return self.depth - self.measure_depth - self.beat_depth

    def layer_of(self, depth: int) -> str:
        """Layer of a split made by a node at ``depth``."""
        if depth < self.measure_depth:
            return "measure"
        if depth < self.measure_depth + self.beat_depth:
            return "beat"
        return "duration"

    @property
    def measure_count(self) -> int:
        return len(self._nodes_at(self.measure_depth))

    def _nodes_at(self, depth: int) -> list[Shape]:
        level = [self.shape]
        for _ in range(depth):
            level = [child for node in level for child in node]
        return level

    def _walk(self):
        """Yield (start, width, depth, measure_first, beat_first) per leaf, in order."""
        md, top = self.measure_depth, self.measure_depth + self.beat_depth

        def go(node, start, width, depth, m_first, b_first):
            # the 0-offset path from a measure (beat) node keeps the flag alive
            if depth == md:
                m_first = True
            if depth == top:
                b_first = True
            if not node:
                yield start, width, depth, m_first, b_first
                return
            step = width / len(node)
            for i, child in enumerate(node):
                first = i == 0
                yield from go(child, start + i * step, step, depth + 1, m_first and first, b_first and first)

        yield from go(self.shape, Fraction(0), Fraction(1), 0, False, False)

    def onsets(self) -> list[Fraction]:
        return [start for start, *_ in self._walk()]

    def durations(self) -> list[Fraction]:
        return [width for _, width, *_ in self._walk()]

    def strengths(self) -> list[Strength]:
        out = []
        for _, _, _, m_first, b_first in self._walk():
            if m_first:
                out.append(Strength.DOWNBEAT)
            elif b_first:
                out.append(Strength.BEAT)
            else:
                out.append(Strength.OFFBEAT)
        return out

    def duration_classes(self) -> list[int]:
        """DS per leaf: 1 for beat leaves and the shallowest duration level, then +1 per level."""
        top = self.measure_depth + self.beat_depth
        return [max(1, depth - top) for _, _, depth, _, _ in self._walk()]


def leaf_onsets(tree: PartitionTree) -> list[Fraction]:
    return tree.onsets()


def beat_info(tree: PartitionTree) -> tuple[list[Strength], list[int]]:
    return tree.strengths(), tree.duration_classes()


def uniform_tree(factors: Sequence[int], measure_depth: int = 0, beat_depth: int = 0) -> PartitionTree:
    """Complete tree splitting every node at level i by factors[i]."""
    shape: Shape = ()
    for f in reversed(factors):
        shape = (shape,) * f
    return PartitionTree(shape, measure_depth, beat_depth)


# ---------------------------------------------------------------- s-expressions


def tree_to_sexpr(tree: PartitionTree | Shape) -> str:
    shape = tree.shape if isinstance(tree, PartitionTree) else tree
    if not shape:
        return "X"
    return "(" + " ".join(tree_to_sexpr(c) for c in shape) + ")"


def _parse_shape(text: str) -> Shape:
    pos = 0

    def skip():
        nonlocal pos
        while pos < len(text) and text[pos] == " ":
            pos += 1

    def node() -> Shape:
        nonlocal pos
        skip()
        if pos >= len(text):
            raise TreeError("unexpected end of input", pos)
        if text[pos] == "X":
            pos += 1
            return ()
        if text[pos] != "(":
            raise TreeError(f"expected 'X' or '(', found {text[pos]!r}", pos)
        open_at = pos
        pos += 1
        children = []
        while True:
            skip()
            if pos >= len(text):
                raise TreeError("unclosed '('", open_at)
            if text[pos] == ")":
                pos += 1
                break
            children.append(node())
        if len(children) not in PRIMES:
            raise TreeError(f"branching factor {len(children)} not in {list(PRIMES)}", open_at)
        return tuple(children)

    shape = node()
    skip()
    if pos != len(text):
        raise TreeError(f"trailing input {text[pos:]!r}", pos)
    return shape


def sexpr_to_tree(
    text: str,
    measure_depth: int | None = None,
    beat_depth: int | None = None,
    caps: tuple[int, int, int] = DEFAULT_CAPS,
) -> PartitionTree:
    """
    Parse a tree string. Without explicit layer depths the layering is the
    canonical one used by ``enumerate_trees`` under ``caps``.
    """
    shape = _parse_shape(text.strip())
    if measure_depth is None or beat_depth is None:
        md, bd = _canonical_layers(min(_uniform_prefix(shape), caps[0] + caps[1]), caps)
        measure_depth = md if measure_depth is None else measure_depth
        beat_depth = bd if beat_depth is None else beat_depth
    return PartitionTree(shape, measure_depth, beat_depth)


def _canonical_layers(top: int, caps) -> tuple[int, int]:
    """Split ``top`` uniform levels into (measure, beat) depths, measures first."""
    md_max, bd_max = caps[0], caps[1]
    if top == 0:
        return 0, 0
    md = max(min(1, md_max), top - bd_max)
    return md, top - md


# ---------------------------------------------------------------- enumeration


def _patterns(max_depth: int, factors=PRIMES) -> list[tuple[int, ...]]:
    """Uniform subdivisions of one beat, shallowest first, then lexicographic."""
    out = []
    for depth in range(max_depth + 1):
        out.extend(product(sorted(factors), repeat=depth))
    return out


class _Blocks:
    """
    Trees for one leaf count, grouped in canonical order into blocks that
    share the measure and beat levels. Within a block the beats pick
    patterns lexicographically; counting and unranking use a small DP whose
    state records whether every beat so far splits first by the same factor.
    """

    def __init__(self, leaf_count: int, caps, factors):
        if leaf_count < 1:
            raise ValueError("leaf_count must be at least 1")
        if len(caps) != 3 or min(caps) < 0:
            raise ValueError("layer caps must be three non-negative integers")
        self.leaf_count = leaf_count
        self.caps = tuple(caps)
        self.factors = tuple(sorted(factors))
        self.patterns = _patterns(caps[2], self.factors)
        self.sizes = [math.prod(p) for p in self.patterns]
        self.firsts = [p[0] if p else None for p in self.patterns]
        self.max_top = caps[0] + caps[1]
        self._memo: dict = {}

    def blocks(self):
        for top in range(self.max_top + 1):
            for level_factors in product(self.factors, repeat=top):
                beats = math.prod(level_factors)
                if beats <= self.leaf_count:
                    yield top, level_factors, beats

    @staticmethod
    def _advance(state, first):
        # state: "start", a shared first factor, or "mixed"
        if first is None:
            return "mixed"
        if state == "start" or state == first:
            return first
        return "mixed"

    def ways(self, slots: int, total: int, state, strict: bool) -> int:
        """Completions of ``slots`` beats summing to ``total``; strict drops all-same-first ones."""
        key = (slots, total, state, strict)
        if key in self._memo:
            return self._memo[key]
        if slots == 0:
            n = int(total == 0 and (not strict or state == "mixed"))
        else:
            n = 0
            for size, first in zip(self.sizes, self.firsts):
                if size <= total:
                    n += self.ways(slots - 1, total - size, self._advance(state, first), strict)
        self._memo[key] = n
        return n

    def block_count(self, top: int, beats: int) -> int:
        return self.ways(beats, self.leaf_count, "start", top < self.max_top)

    def tree(self, top: int, level_factors, choice) -> PartitionTree:
        md, bd = _canonical_layers(top, self.caps)
        shape = _build(level_factors, [self.patterns[i] for i in choice])
        return PartitionTree(shape, md, bd, self.factors)

    def choices(self, beats: int, strict: bool) -> Iterator[tuple[int, ...]]:
        def go(slots, total, state):
            if slots == 0:
                if total == 0 and (not strict or state == "mixed"):
                    yield ()
                return
            for i, (size, first) in enumerate(zip(self.sizes, self.firsts)):
                nxt = self._advance(state, first)
                if size <= total and self.ways(slots - 1, total - size, nxt, strict):
                    for tail in go(slots - 1, total - size, nxt):
                        yield (i, *tail)

        return go(beats, self.leaf_count, "start")

    def unrank(self, beats: int, strict: bool, index: int) -> tuple[int, ...]:
        choice, total, state = [], self.leaf_count, "start"
        for slots in range(beats, 0, -1):
            for i, (size, first) in enumerate(zip(self.sizes, self.firsts)):
                if size > total:
                    continue
                nxt = self._advance(state, first)
                n = self.ways(slots - 1, total - size, nxt, strict)
                if index < n:
                    choice.append(i)
                    total, state = total - size, nxt
                    break
                index -= n
        return tuple(choice)


def enumerate_trees(
    leaf_count: int,
    caps: tuple[int, int, int] = DEFAULT_CAPS,
    factors: Sequence[int] = PRIMES,
) -> Iterator[PartitionTree]:
    """
    Every tree with ``leaf_count`` leaves in canonical order.

    The measure and beat layers are uniform per level; each beat is then
    subdivided uniformly by its own pattern of at most ``caps[2]`` levels.
    Trees are listed by number of measure+beat levels, then by the factors of
    those levels, then by the beat patterns (smaller branching first).
    Layering is canonical: when all beats share a first split and another
    beat level is allowed, that split belongs to the beat layer instead.
    """
    blocks = _Blocks(leaf_count, caps, factors)
    for top, level_factors, beats in blocks.blocks():
        for choice in blocks.choices(beats, top < blocks.max_top):
            yield blocks.tree(top, level_factors, choice)


def count_trees(
    leaf_count: int,
    caps: tuple[int, int, int] = DEFAULT_CAPS,
    factors: Sequence[int] = PRIMES,
) -> int:
    blocks = _Blocks(leaf_count, caps, factors)
    return sum(blocks.block_count(top, beats) for top, _, beats in blocks.blocks())


def nth_tree(
    leaf_count: int,
    index: int,
    caps: tuple[int, int, int] = DEFAULT_CAPS,
    factors: Sequence[int] = PRIMES,
) -> PartitionTree:
    """The tree at position ``index`` of ``enumerate_trees`` without walking the stream."""
    blocks = _Blocks(leaf_count, caps, factors)
    if index < 0:
        raise IndexError("tree index must be non-negative")
    for top, level_factors, beats in blocks.blocks():
        n = blocks.block_count(top, beats)
        if index < n:
            return blocks.tree(top, level_factors, blocks.unrank(beats, top < blocks.max_top, index))
        index -= n
    raise IndexError(f"only {count_trees(leaf_count, caps, factors)} trees with {leaf_count} leaves")


def _build(level_factors, patterns) -> Shape:
    beats = iter(uniform_tree(p).shape for p in patterns)

    def grow(level):
        if level == len(level_factors):
            return next(beats)
        return tuple(grow(level + 1) for _ in range(level_factors[level]))

    return grow(0)


# ---------------------------------------------------------------- metre tables


@dataclass(frozen=True)
class MeterSignature:
    beats: int
    subdivision: int
    measures: int = 1

    def __post_init__(self):
        if self.beats not in PRIMES or self.subdivision not in PRIMES:
            raise ValueError(f"divisions must be 2 or 3, got {self.beats}x{self.subdivision}")
        if self.measures < 1:
            raise ValueError("measures must be at least 1")

    @property
    def period(self) -> int:
        return self.beats * self.subdivision


def metrical_hierarchy(sig: MeterSignature) -> dict[str, list[Fraction]]:
    """Onsets of measures (I), beats (II) and subdivisions (III), each excluding the levels above."""
    m = sig.measures
    denominators = {"I": m, "II": m * sig.beats, "III": m * sig.period}
    levels, seen = {}, set()
    for name, den in denominators.items():
        fresh = sorted({Fraction(k, den) for k in range(den)} - seen)
        seen.update(fresh)
        levels[name] = fresh
    return levels


def _lcm(values) -> int:
    return reduce(math.lcm, values, 1)


def polyrhythm_table(sigs: Sequence[tuple[int, int] | MeterSignature]) -> tuple[int, list[str]]:
    """Hyper-meter and one X/O/o row per voice, inclusive of the closing downbeat."""
    if not sigs:
        raise ValueError("need at least one voice")
    voices = [s if isinstance(s, MeterSignature) else MeterSignature(*s) for s in sigs]
    hyper = _lcm(v.period for v in voices)
    rows = []
    for v in voices:
        pattern = uniform_tree((v.beats, v.subdivision), 0, 1).strengths()
        rows.append("".join(pattern[i % v.period].value for i in range(hyper + 1)))
    return hyper, rows


def voice_periods(sigs) -> list[int]:
    return [(s if isinstance(s, MeterSignature) else MeterSignature(*s)).period for s in sigs]


# ---------------------------------------------------------------- attachment


class RhythmMismatch(ValueError):
    """Tree leaf count differs from the piece length."""


class ExtremeNoteError(ValueError):
    def __init__(self, errors: list[ErrorRecord]):
        self.errors = errors
        super().__init__("; ".join(str(e) for e in errors))


@dataclass(frozen=True)
class TimedPiece:
    piece: Piece
    tree: PartitionTree
    onsets: tuple[Fraction, ...]
    durations: tuple[Fraction, ...]
    duration_classes: tuple[int, ...]
    strengths: tuple[Strength, ...]

    def onset(self, part: int, time: int) -> Fraction:
        return self.onsets[time - 1]

    def duration(self, part: int, time: int) -> Fraction:
        return self.durations[time - 1]


def extreme_note_errors(piece: Piece, tree: PartitionTree) -> list[ErrorRecord]:
    """Steps where a part's lowest or highest note falls on a leaf faster than DS 1."""
    ds = tree.duration_classes()
    errors = []
    for p in piece.style.parts:
        notes = piece.notes(p)
        sounding = [n for n in notes if n is not None]
        if not sounding:
            continue
        lo, hi = min(sounding), max(sounding)
        for t, n in enumerate(notes, 1):
            if n in (lo, hi) and ds[t - 1] > 1:
                errors.append(ErrorRecord(p, t, EXTREME_TOO_SHORT))
    return errors


def attach_rhythm(piece: Piece, tree: PartitionTree) -> TimedPiece:
    if tree.leaf_count != piece.length:
        raise RhythmMismatch(f"tree has {tree.leaf_count} leaves, piece has {piece.length} steps")
    errors = extreme_note_errors(piece, tree)
    if errors:
        raise ExtremeNoteError(errors)
    return TimedPiece(
        piece,
        tree,
        tuple(tree.onsets()),
        tuple(tree.durations()),
        tuple(tree.duration_classes()),
        tuple(tree.strengths()),
    )
