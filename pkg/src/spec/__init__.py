"""Textual format specification language"""

from src.spec.parser import SpecParser, load_spec, parse_spec, tokenize
from src.spec.printer import print_spec, spec_hash, spec_hash_hex

__all__ = [
    "SpecParser",
    "load_spec",
    "parse_spec",
    "print_spec",
    "spec_hash",
    "spec_hash_hex",
    "tokenize",
]
