"""
Seeded backtracking search over the piece grid.

Cells are filled column by column (every part at time T before time T+1)
so harmony checks fire as soon as possible. After each assignment the rule
cell checks for that cell are run; any enabled error prunes the branch.
Each check only looks at cells that are already assigned, so pruning never
removes a value that some valid extension would keep. A one-step lookahead
also rejects a note when its part has no legal continuation at all.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

from .pitch import HIGHEST_NOTE, LEAP_SIZES, STEP_SIZES, Mode, chromatic_class
from .rules import INCORRECT_FINAL, INCORRECT_PROGRESSION, OWN_PART_CHECKERS, Context, RuleConfig, diagnose, harmony_cell
from .score import REST, PartialPiece, Piece, StyleSpec

MASK64 = (1 << 64) - 1
DEFAULT_SEED = 6298
DEFAULT_NODE_BUDGET = 10**7


class Unsatisfiable(Exception):
    """No piece satisfies the rules."""


class BudgetExhausted(Exception):
    """The node budget ran out before the search finished."""


def _splitmix64(state: int) -> tuple[int, int]:
    state = (state + 0x9E3779B97F4A7C15) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


def seeded_shuffle(domain, seed: int, stream_id: int = 0) -> list:
    """Deterministic Fisher-Yates permutation driven by SplitMix64."""
    items = list(domain)
    state = (seed ^ ((stream_id + 1) * 0xD1B54A32D192ED03)) & MASK64
    state, _ = _splitmix64(state)
    for i in range(len(items) - 1, 0, -1):
        state, r = _splitmix64(state)
        j = r % (i + 1)
        items[i], items[j] = items[j], items[i]
    return items


def seeded_index(n: int, seed: int, stream_id: int = 0) -> int:
    """Deterministic choice in range(n) from the same generator as ``seeded_shuffle``."""
    if n < 1:
        raise ValueError("need at least one choice")
    state = (seed ^ ((stream_id + 1) * 0xD1B54A32D192ED03)) & MASK64
    state, _ = _splitmix64(state)
    _, r = _splitmix64(state)
    return r % n


@dataclass(frozen=True)
class SolveConfig:
    style: StyleSpec
    mode: Mode
    length: int
    rule_config: RuleConfig = field(default_factory=RuleConfig)
    seed: int = DEFAULT_SEED
    node_budget: int | None = DEFAULT_NODE_BUDGET
    # optional partition tree; when set, extreme notes must sit on slow leaves
    rhythm: object | None = None

    def __post_init__(self):
        if self.length < 2:
            raise ValueError(f"length must be at least 2, got {self.length}")
        if self.node_budget is not None and self.node_budget <= 0:
            raise ValueError("node_budget must be positive")
        if not 0 <= self.seed <= MASK64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.rhythm is not None and self.rhythm.leaf_count != self.length:
            raise ValueError(f"tree has {self.rhythm.leaf_count} leaves, piece has {self.length} steps")


class _Search:
    """
    Depth-first search with conflict-directed backjumping.

    Every rejected value records which earlier cells caused the rejection
    (a bitmask over column-major cell indices). When a cell runs out of
    values, the search jumps straight back to the latest cell in the union
    of those conflicts instead of retrying unrelated cells in between. Only
    subtrees without solutions are skipped, so the solutions and their order
    are exactly those of plain chronological backtracking.
    """

    def __init__(self, cfg: SolveConfig, pins: dict | None = None):
        self.cfg = cfg
        self.ctx = Context(cfg.style, cfg.mode, cfg.length, cfg.rule_config)
        self.parts = cfg.style.part_count
        self.grid = [[REST] * cfg.length for _ in range(self.parts)]
        self.nodes = 0
        self.slow = None
        if cfg.rhythm is not None:
            self.slow = [ds == 1 for ds in cfg.rhythm.duration_classes()]
        self.domains = []
        for t in range(1, cfg.length + 1):
            column = []
            for p in range(1, self.parts + 1):
                if pins and (p, t) in pins:
                    values = [pins[p, t]]
                else:
                    lo, hi = cfg.style.range_of(p)
                    values = list(range(lo, hi + 1))
                    if cfg.style.rests_allowed:
                        values.append(REST)
                    stream = (t - 1) * self.parts + (p - 1)
                    values = seeded_shuffle(values, cfg.seed, stream)
                column.append(values)
            self.domains.append(column)

        enabled = cfg.rule_config.enabled
        self.enabled = enabled
        # with the progression rule on, an illegal move can never survive, so skip it early
        self.filter_moves = INCORRECT_PROGRESSION in enabled
        self.moves = STEP_SIZES | LEAP_SIZES
        self.window = cfg.rule_config.repeat_window + 3
        self.in_scale = [False] + [chromatic_class(n) in cfg.mode.scale for n in range(1, HIGHEST_NOTE + 1)]

    def _index(self, p: int, t: int) -> int:
        return (t - 1) * self.parts + (p - 1)

    def _history(self, p: int, t: int) -> int:
        """Mask of the cells of part p strictly before time t."""
        mask = 0
        for u in range(1, t):
            mask |= 1 << self._index(p, u)
        return mask

    def _legal(self, prev, value) -> bool:
        if not self.filter_moves or prev is None or value is None or value == prev:
            return True
        return abs(value - prev) in self.moves and self.in_scale[value]

    def _own_ok(self, p: int, t: int) -> bool:
        grid, ctx, enabled = self.grid, self.ctx, self.enabled
        for check in OWN_PART_CHECKERS:
            for err in check(ctx, grid, p, t):
                if err.reason in enabled:
                    return False
        if self.slow is not None:
            if t == self.cfg.length:
                return self._extremes_ok(p)
            return self._extremes_possible(p, t)
        return True

    def _harmony_ok(self, p: int, t: int) -> bool:
        for err in harmony_cell(self.ctx, self.grid, p, t):
            if err.reason in self.enabled:
                return False
        return True

    def _has_successor(self, p: int, t: int) -> bool:
        """Whether part p can take some value at t + 1 under its own-part rules."""
        row = self.grid[p - 1]
        cur = row[t - 1]
        found = False
        for value in self.domains[t][p - 1]:
            if not self._legal(cur, value):
                continue
            row[t] = value
            if self._own_ok(p, t + 1):
                found = True
                break
        row[t] = REST
        return found

    def _extremes_ok(self, part: int) -> bool:
        notes = self.grid[part - 1]
        sounding = [n for n in notes if n is not None]
        lo, hi = min(sounding), max(sounding)
        return all(self.slow[i] for i, n in enumerate(notes) if n == lo or n == hi)

    def _extremes_possible(self, p: int, t: int) -> bool:
        """
        Necessary condition for the extreme-note rule after time t.

        Each side (lowest, highest) not yet held by a slow note strictly beyond
        every fast note needs a later slow leaf that can take a new extreme:
        inside the part's range and span, a legal final note if it is the last
        leaf, and reachable from the current note with moves of at most an
        octave. The closest admissible values are tried, which is optimal
        for every one of these bounds.
        """
        notes, slow = self.grid[p - 1], self.slow
        fast = [n for n, s in zip(notes[:t], slow) if n is not None and not s]
        if not fast:
            return True
        held = [n for n, s in zip(notes[:t], slow) if n is not None and s]
        lo_all, hi_all = min(fast + held), max(fast + held)
        need_low = not held or min(held) >= min(fast)
        need_high = not held or max(held) <= max(fast)
        if not (need_low or need_high):
            return True
        length = self.cfg.length
        later = [u for u in range(t + 1, length + 1) if slow[u - 1]]
        if need_low + need_high > len(later):
            return False

        style = self.cfg.style
        r_lo, r_hi = style.range_of(p)
        r_lo, r_hi = max(r_lo, 1), min(r_hi, HIGHEST_NOTE)
        progression = INCORRECT_PROGRESSION in self.enabled
        span = style.max_span if progression else None
        jump = max(self.moves) if progression and not style.rests_allowed else None
        final = None
        if INCORRECT_FINAL in self.enabled:
            final = style.final_classes_melodic if p in style.melodic_parts else style.final_classes_other
        cur = notes[t - 1]

        def closest(u: int, low: bool):
            values = range(lo_all - 1, r_lo - 1, -1) if low else range(hi_all + 1, r_hi + 1)
            for v in values:
                if u == length and final is not None and chromatic_class(v) not in final:
                    continue
                return v
            return None

        def reach(a, b, steps):
            return jump is None or a is None or abs(a - b) <= jump * steps

        def fits(lo, hi):
            return span is None or hi - lo <= span

        if need_low != need_high:
            for u in later:
                v = closest(u, need_low)
                if v is None:
                    continue
                lo, hi = (v, hi_all) if need_low else (lo_all, v)
                if fits(lo, hi) and reach(cur, v, u - t):
                    return True
            return False

        for i, u in enumerate(later):
            for w in later[i + 1 :]:
                for first_low in (True, False):
                    a, b = closest(u, first_low), closest(w, not first_low)
                    if a is None or b is None:
                        continue
                    lo, hi = (a, b) if first_low else (b, a)
                    if fits(lo, hi) and reach(cur, a, u - t) and reach(a, b, w - u):
                        return True
        return False

    def solutions(self) -> Iterator[Piece]:
        budget = self.cfg.node_budget
        length, parts = self.cfg.length, self.parts
        cells = [(t, p) for t in range(1, length + 1) for p in range(1, parts + 1)]
        grid = self.grid
        history = {(p, t): self._history(p, t) for t, p in cells}
        everything = (1 << len(cells)) - 1
        dead: set[tuple] = set()
        found = 0

        def extend(k: int):
            nonlocal found
            if k == len(cells):
                found += 1
                yield Piece(self.cfg.style, self.cfg.mode, grid)
                # after a solution every earlier cell matters again
                return everything
            t, p = cells[k]
            row = grid[p - 1]
            prev = row[t - 2] if t >= 2 else None
            below = (1 << k) - 1
            state = None
            if p == 1 and t >= 2:
                # column boundary: a state already shown to be dead stays dead
                state = self._state(t)
                if state in dead:
                    return below
                before = found
            result = yield from column(k, t, p, row, prev, below)
            if state is not None and found == before:
                dead.add(state)
            return result

        def column(k, t, p, row, prev, below):
            own = history[p, t]
            harmony = 1 << (k - 1) if p >= 2 else 0
            conflict = 0
            for value in self.domains[t - 1][p - 1]:
                if not self._legal(prev, value):
                    conflict |= own
                    continue
                self.nodes += 1
                if budget is not None and self.nodes > budget:
                    raise BudgetExhausted(f"node budget {budget} exhausted")
                row[t - 1] = value
                if not self._own_ok(p, t):
                    conflict |= own
                    continue
                if not self._harmony_ok(p, t):
                    conflict |= harmony
                    continue
                if t < length and not self._has_successor(p, t):
                    conflict |= own
                    continue
                child = yield from extend(k + 1)
                if not child >> k & 1:
                    row[t - 1] = REST
                    return child & below
                conflict |= child & below
            row[t - 1] = REST
            return conflict

        yield from extend(0)

    def _state(self, t: int) -> tuple:
        """
        Everything the rules can still read once columns 1..t-1 are fixed:
        the recent notes of every part (the longest rule looks back
        repeat_window + 3 steps) and each part's extremes, split by leaf speed
        when a rhythm is attached.
        """
        start = max(0, t - 1 - self.window)
        key = [t]
        for row in self.grid:
            key.append(tuple(row[start : t - 1]))
            if self.slow is None:
                sounding = [n for n in row[: t - 1] if n is not None]
                key.append((min(sounding), max(sounding)) if sounding else None)
            else:
                for speed in (True, False):
                    group = [n for n, s in zip(row[: t - 1], self.slow) if n is not None and s is speed]
                    key.append((min(group), max(group)) if group else None)
        return tuple(key)


def _check(piece: Piece, cfg: SolveConfig) -> Piece:
    # every emitted piece passed the cell checks; re-diagnose as a guard
    errors = diagnose(piece, cfg.rule_config)
    if errors:
        raise AssertionError(f"search produced an invalid piece: {errors}")
    return piece


def compose(cfg: SolveConfig) -> Piece:
    search = _Search(cfg)
    for piece in search.solutions():
        return _check(piece, cfg)
    raise Unsatisfiable(f"no valid {cfg.style.name} of length {cfg.length} in {cfg.mode.value}")


def _validate_pins(partial: PartialPiece, cfg: SolveConfig):
    if (partial.style.part_count, partial.length) != (cfg.style.part_count, cfg.length):
        raise ValueError("partial piece does not match the solve configuration")
    for (p, t), ev in partial.pins.items():
        if not 1 <= p <= cfg.style.part_count or not 1 <= t <= cfg.length:
            raise ValueError(f"pinned cell ({p},{t}) is outside the grid")
        if ev is None:
            if not cfg.style.rests_allowed:
                raise ValueError(f"pinned rest at ({p},{t}) but the style forbids rests")
            continue
        lo, hi = cfg.style.range_of(p)
        if not lo <= ev <= hi:
            raise ValueError(f"pinned note {ev} at ({p},{t}) outside range {lo}..{hi}")


def config_for(partial: PartialPiece, **kwargs) -> SolveConfig:
    return SolveConfig(partial.style, partial.mode, partial.length, **kwargs)


def complete(partial: PartialPiece, cfg: SolveConfig | None = None) -> Piece:
    cfg = cfg or config_for(partial)
    _validate_pins(partial, cfg)
    for piece in _Search(cfg, partial.pins).solutions():
        return _check(piece, cfg)
    raise Unsatisfiable("no valid completion of the partial piece")


def enumerate_pieces(cfg: SolveConfig, limit: int | None = None, pins: dict | None = None) -> list[Piece]:
    """Up to ``limit`` valid pieces (all of them when None) in search order."""
    if limit is not None and limit < 1:
        raise ValueError("limit must be at least 1")
    if pins:
        _validate_pins(PartialPiece(cfg.style, cfg.mode, cfg.length, pins), cfg)
    found = []
    for piece in _Search(cfg, pins).solutions():
        found.append(piece)
        if limit is not None and len(found) >= limit:
            break
    return found
