"""
Command-line front end: compose, diagnose or complete a piece and render it.

Exit codes: 0 success, 2 no valid piece, 3 bad input, 4 node budget spent.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, replace
from decimal import Decimal, InvalidOperation
from pathlib import Path

from .pitch import Mode
from .render import Fundamental, render_engraver, render_events, render_human
from .rhythm import (
    DEFAULT_CAPS,
    ExtremeNoteError,
    PartitionTree,
    attach_rhythm,
    count_trees,
    nth_tree,
    tree_to_sexpr,
)
from .rules import RuleConfig, diagnose, format_errors
from .score import STYLE_NAMES, FactError, PartialPiece, emit_facts, parse_facts, style_spec
from .solver import (
    DEFAULT_NODE_BUDGET,
    DEFAULT_SEED,
    BudgetExhausted,
    SolveConfig,
    Unsatisfiable,
    _validate_pins,
    enumerate_pieces,
    seeded_index,
)

EXIT_OK = 0
EXIT_UNSAT = 2
EXIT_INPUT = 3
EXIT_BUDGET = 4

OUTPUTS = ("human", "facts", "events", "engraver", "tree")
TASKS = {"compose": "compose", "diagnose": "diagnose", "diagnosis": "diagnose", "complete": "complete"}
# stream reserved for the tree choice, far away from the per-cell streams
TREE_STREAM = 1 << 32
# node allowance of the first tree tried by solve_with_rhythm; it doubles per attempt
FIRST_SLICE = 20_000


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def _caps(text: str) -> tuple[int, int, int]:
    try:
        caps = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"caps must be three integers, got {text!r}") from None
    if len(caps) != 3 or min(caps) < 0:
        raise argparse.ArgumentTypeError(f"caps must be three non-negative integers, got {text!r}")
    return caps


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="contrapunctus", allow_abbrev=False, description=__doc__)
    p.add_argument("--task", required=True, choices=sorted(TASKS))
    p.add_argument("--mode", choices=[m.value for m in Mode])
    p.add_argument("--time", type=int)
    p.add_argument("--style", choices=STYLE_NAMES)
    p.add_argument("--rhythm", action="store_true", help="attach a seeded partition tree")
    p.add_argument("--piece", help="fact file for diagnose/complete")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--fundamental", choices=[f.value for f in Fundamental], default="c")
    p.add_argument("--output", choices=OUTPUTS, default="human")
    p.add_argument("--limit", type=int, default=1, help="number of pieces to print")
    p.add_argument("--rw", type=int, default=RuleConfig().repeat_window, help="repeat window")
    p.add_argument("--caps", type=_caps, default=DEFAULT_CAPS, help="layer caps MD,BD,DD")
    p.add_argument("--seconds", default=None, help="length of the whole piece for --output=events")
    p.add_argument("--budget", type=int, default=DEFAULT_NODE_BUDGET, help="search node budget")
    return p


@dataclass
class TaskSpec:
    task: str
    mode: Mode | None
    time: int | None
    style: str | None
    rhythm: bool
    piece_path: str | None
    seed: int
    fundamental: Fundamental
    output: str
    limit: int
    rw: int
    caps: tuple[int, int, int]
    seconds: Decimal | None
    budget: int


def parse_args(argv) -> TaskSpec:
    ns = _parser().parse_args(argv)
    task = TASKS[ns.task]
    if task in ("diagnose", "complete") and not ns.piece:
        raise InputError(f"--task={ns.task} needs --piece")
    if task == "compose":
        if ns.mode is None or ns.time is None:
            raise InputError("--task=compose needs --mode and --time")
        if ns.time < 2:
            raise InputError(f"--time must be at least 2, got {ns.time}")
    if task == "diagnose" and (ns.rhythm or ns.output != "human"):
        raise InputError("--task=diagnose prints errors only; --rhythm and --output do not apply")
    if ns.output == "tree" and not ns.rhythm:
        raise InputError("--output=tree needs --rhythm")
    if ns.limit < 1:
        raise InputError("--limit must be at least 1")
    if ns.rw < 2:
        raise InputError("--rw must be at least 2")
    if ns.budget < 1:
        raise InputError("--budget must be positive")
    if not 0 <= ns.seed < 1 << 64:
        raise InputError("--seed must be an unsigned 64-bit integer")
    seconds = None
    if ns.seconds is not None:
        try:
            seconds = Decimal(ns.seconds)
        except InvalidOperation:
            raise InputError(f"--seconds must be a number, got {ns.seconds!r}") from None
        if not seconds.is_finite() or seconds <= 0:
            raise InputError("--seconds must be positive")
    return TaskSpec(
        task=task,
        mode=Mode(ns.mode) if ns.mode else None,
        time=ns.time,
        style=ns.style,
        rhythm=ns.rhythm,
        piece_path=ns.piece,
        seed=ns.seed,
        fundamental=Fundamental(ns.fundamental),
        output=ns.output,
        limit=ns.limit,
        rw=ns.rw,
        caps=ns.caps,
        seconds=seconds,
        budget=ns.budget,
    )


def _read_piece(path: str) -> PartialPiece:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from None
    return parse_facts(text)


def _check_flags(spec: TaskSpec, partial: PartialPiece):
    """Flags given alongside a fact file must agree with it."""
    if spec.mode is not None and spec.mode is not partial.mode:
        raise InputError(f"--mode={spec.mode.value} disagrees with the piece ({partial.mode.value})")
    if spec.style is not None and spec.style != partial.style.name:
        raise InputError(f"--style={spec.style} disagrees with the piece ({partial.style.name})")
    if spec.time is not None and spec.time != partial.length:
        raise InputError(f"--time={spec.time} disagrees with the piece (t={partial.length})")


def choose_tree(leaf_count: int, seed: int, caps=DEFAULT_CAPS, attempt: int = 0) -> PartitionTree:
    """Seeded pick from the canonical tree stream; each attempt draws independently."""
    n = count_trees(leaf_count, caps)
    if n == 0:
        raise InputError(f"no partition tree has {leaf_count} leaves under caps {caps}")
    return nth_tree(leaf_count, seeded_index(n, seed, TREE_STREAM + attempt), caps)


def solve_with_rhythm(cfg: SolveConfig, caps=DEFAULT_CAPS, limit: int = 1, pins=None):
    """
    Draw seeded trees until one admits a piece. Attempt i may spend
    FIRST_SLICE * 2**i nodes and all attempts together stay within the
    configured budget, so the outcome depends only on the arguments.
    """
    total = cfg.node_budget or DEFAULT_NODE_BUDGET
    spent, attempt, exhausted = 0, 0, False
    while spent < total:
        tree = choose_tree(cfg.length, cfg.seed, caps, attempt)
        share = min(FIRST_SLICE << min(attempt, 40), total - spent)
        try:
            pieces = enumerate_pieces(replace(cfg, node_budget=share, rhythm=tree), limit, pins)
        except BudgetExhausted:
            exhausted = True
        else:
            if pieces:
                return tree, pieces
        spent += share
        attempt += 1
    if exhausted:
        raise BudgetExhausted(f"no drawn tree admitted a piece within {total} nodes")
    raise Unsatisfiable(f"none of the {attempt} drawn trees admits a valid piece")


def _render(piece, tree, spec: TaskSpec) -> str:
    target = attach_rhythm(piece, tree) if tree is not None else piece
    if spec.output == "human":
        return render_human(target, spec.fundamental)
    if spec.output == "facts":
        return emit_facts(piece)
    if spec.output == "events":
        seconds = spec.seconds if spec.seconds is not None else Decimal(piece.length)
        return render_events(target, spec.fundamental, seconds)
    if spec.output == "engraver":
        return render_engraver(target, spec.fundamental)
    return tree_to_sexpr(tree) + "\n"


def _execute(spec: TaskSpec, out) -> int:
    rules = RuleConfig(repeat_window=spec.rw)
    if spec.task == "diagnose":
        partial = _read_piece(spec.piece_path)
        _check_flags(spec, partial)
        if not partial.is_complete:
            raise InputError("--task=diagnose needs a complete piece")
        out.write(format_errors(diagnose(partial.to_piece(), rules)))
        return EXIT_OK

    if spec.task == "compose":
        style = style_spec(spec.style or "solo")
        mode, length, pins = spec.mode, spec.time, None
    else:
        partial = _read_piece(spec.piece_path)
        _check_flags(spec, partial)
        style, mode, length, pins = partial.style, partial.mode, partial.length, partial.pins
        if length < 2:
            raise InputError(f"t must be at least 2, got {length}")

    cfg = SolveConfig(style, mode, length, rules, spec.seed, spec.budget)
    if pins:
        try:
            _validate_pins(PartialPiece(style, mode, length, pins), cfg)
        except ValueError as e:
            raise InputError(str(e)) from None
    if spec.rhythm:
        tree, pieces = solve_with_rhythm(cfg, spec.caps, spec.limit, pins)
    else:
        tree, pieces = None, enumerate_pieces(cfg, spec.limit, pins)
    if not pieces:
        raise Unsatisfiable(f"no valid {style.name} of length {length} in {mode.value}")
    out.write("\n".join(_render(p, tree, spec) for p in pieces))
    return EXIT_OK


def run(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        spec = parse_args(sys.argv[1:] if argv is None else argv)
        return _execute(spec, out)
    except (InputError, FactError, ExtremeNoteError) as e:
        err.write(f"error: {e}\n")
        return EXIT_INPUT
    except Unsatisfiable as e:
        err.write(f"unsatisfiable: {e}\n")
        return EXIT_UNSAT
    except BudgetExhausted as e:
        err.write(f"budget exhausted: {e}\n")
        return EXIT_BUDGET


def main() -> None:
    sys.exit(run())
