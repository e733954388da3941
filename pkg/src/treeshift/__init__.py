"""Tree-shifts over finite alphabets: finite-type engines, shadowing, stability and openness."""

from .sft import Membership, build_engine, block_count, is_perfect, viable_fixpoint
from .shifts import BUILTINS, ShiftSpec, builtin
from .trees import Alphabets, Block, TruncatedTree

__all__ = [
    "Alphabets",
    "Block",
    "BUILTINS",
    "Membership",
    "ShiftSpec",
    "TruncatedTree",
    "block_count",
    "build_engine",
    "builtin",
    "is_perfect",
    "viable_fixpoint",
]
