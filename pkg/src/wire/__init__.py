"""Wire codec: runtime primitives and the interpretive serializer/parser"""

from src.wire.runtime import CodecError, Prng, derive_seed, slot_bytes
from src.wire.engine import RoundtripReport, WireParser, WireSerializer, parse, roundtrip_check, serialize

__all__ = [
    "CodecError",
    "Prng",
    "RoundtripReport",
    "WireParser",
    "WireSerializer",
    "derive_seed",
    "parse",
    "roundtrip_check",
    "serialize",
    "slot_bytes",
]
