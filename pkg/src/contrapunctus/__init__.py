"""First-species counterpoint composition, completion and diagnosis."""

from .pitch import Mode
from .rules import RuleConfig, diagnose
from .score import ErrorRecord, PartialPiece, Piece, StyleSpec, emit_facts, parse_facts, style_spec

__all__ = [
    "ErrorRecord", "Mode", "PartialPiece", "Piece", "RuleConfig", "StyleSpec",
    "diagnose", "emit_facts", "parse_facts", "style_spec",
]
