"""Runtime support shared by the interpretive engine and generated codecs.

This module depends on the standard library only: the code generator copies it
verbatim into every emitted bundle so both sides draw identical random bytes and
compute identical arithmetic.
"""

from collections import ChainMap
from typing import Dict, List, Optional, Sequence, Tuple, Union
import hashlib

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
XORSHIFT_MULTIPLIER = 0x2545F4914F6CDD1D


class CodecError(Exception):
    """Raised by readers, fragments and arithmetic helpers"""

    def __init__(self, message: str, rule_id: str = "codec", node: Optional[str] = None):
        super().__init__(message)
        self.message = message
        self.rule_id = rule_id
        self.node = node

    def __str__(self) -> str:
        return f"{self.message} (node {self.node})" if self.node else self.message


def splitmix64(value: int) -> int:
    z = (value + GOLDEN_GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class Prng:
    """xorshift64* generator seeded through splitmix64"""

    def __init__(self, seed: int):
        self.state = splitmix64(seed & MASK64) or GOLDEN_GAMMA

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & MASK64
        x ^= x >> 27
        self.state = x
        return (x * XORSHIFT_MULTIPLIER) & MASK64

    def below(self, bound: int) -> int:
        """Uniform integer in [0, bound)"""
        if bound <= 0:
            raise ValueError("bound must be positive")
        limit = (1 << 64) - ((1 << 64) % bound)
        while True:
            value = self.next_u64()
            if value < limit:
                return value % bound

    def between(self, low: int, high: int) -> int:
        """Uniform integer in [low, high]"""
        return low + self.below(high - low + 1)

    def chance(self, probability: float) -> bool:
        return self.next_u64() < int(probability * (1 << 64))

    def choice(self, items: Sequence):
        return items[self.below(len(items))]

    def randbytes(self, count: int) -> bytes:
        out = bytearray()
        while len(out) < count:
            out += self.next_u64().to_bytes(8, "big")
        return bytes(out[:count])

    def fork(self, *labels: Union[str, int]) -> "Prng":
        return Prng(derive_seed(self.next_u64(), *labels))


def derive_seed(seed: int, *labels: Union[str, int]) -> int:
    """64-bit seed derived from a parent seed and labels"""
    key = "|".join(str(label) for label in labels).encode("utf-8")
    digest = hashlib.blake2b(key, digest_size=8, key=(seed & MASK64).to_bytes(8, "big")).digest()
    return int.from_bytes(digest, "big")


def slot_bytes(msg_seed: int, name: str, indices: Tuple[int, ...], count: int) -> bytes:
    """Per-message random bytes owned by one node instance.

    The stream depends only on the message seed, the node name and the element
    indices of its repeated ancestors, never on traversal order.
    """
    return Prng(derive_seed(msg_seed, name, *indices)).randbytes(count)


def to_int(value: bytes) -> int:
    return int.from_bytes(value, "big")


def from_int(value: int, width: int, node: Optional[str] = None) -> bytes:
    if value < 0 or value >= 1 << (8 * width):
        raise CodecError(f"value {value} does not fit in {width} byte(s)", "value-overflow", node)
    return value.to_bytes(width, "big")


def apply_op(op: str, left: bytes, right: bytes) -> bytes:
    """left (op) right modulo the width of left"""
    width = len(left)
    modulus = 1 << (8 * width)
    a, b = to_int(left), to_int(right)
    if op == "add":
        result = (a + b) % modulus
    elif op == "sub":
        result = (a - b) % modulus
    elif op == "xor":
        result = a ^ b
    else:
        raise CodecError(f"unknown operation {op}", "unknown-operation")
    return result.to_bytes(width, "big")


def const_encode(op: str, value: bytes, constant: bytes) -> bytes:
    return apply_op(op, value, constant)


def const_decode(op: str, value: bytes, constant: bytes) -> bytes:
    inverse = {"add": "sub", "sub": "add", "xor": "xor"}[op]
    return apply_op(inverse, value, constant)


def split_value(op: str, value: bytes, mask: bytes, first_width: int) -> Tuple[bytes, bytes]:
    """Two part values recombining into value; mask is the random share"""
    if op == "cat":
        return value[:first_width], value[first_width:]
    if op == "add":
        return mask, apply_op("sub", value, mask)
    if op == "sub":
        return apply_op("add", value, mask), mask
    if op == "xor":
        return mask, apply_op("xor", value, mask)
    raise CodecError(f"unknown operation {op}", "unknown-operation")


def combine_value(op: str, first: bytes, second: bytes) -> bytes:
    if op == "cat":
        return first + second
    return apply_op(op, first, second)


class Slot:
    """Fixed-width placeholder filled once the value it stands for is known"""

    __slots__ = ("width", "node", "value")

    def __init__(self, width: int, node: str):
        self.width = width
        self.node = node
        self.value: Optional[bytes] = None

    def __len__(self) -> int:
        return self.width

    def fill(self, value: bytes) -> None:
        if len(value) != self.width:
            raise CodecError(f"placeholder expects {self.width} byte(s), got {len(value)}", "slot-width", self.node)
        self.value = value

    def to_bytes(self) -> bytes:
        if self.value is None:
            raise CodecError("unresolved derived value", "unresolved-slot", self.node)
        return self.value


class Fragment:
    """Serialized region of one node; mirrored regions flatten right to left"""

    __slots__ = ("parts", "mirrored")

    def __init__(self, mirrored: bool = False):
        self.parts: List[Union[bytes, "Fragment", Slot]] = []
        self.mirrored = mirrored

    def append(self, part: Union[bytes, "Fragment", Slot]) -> None:
        self.parts.append(part)

    def __len__(self) -> int:
        return sum(len(part) for part in self.parts)

    def to_bytes(self) -> bytes:
        data = b"".join(part if isinstance(part, bytes) else part.to_bytes() for part in self.parts)
        return data[::-1] if self.mirrored else data


class Reader:
    """Cursor over one delimited region of a message; never reads past its end"""

    __slots__ = ("data", "pos", "end")

    def __init__(self, data: bytes, start: int = 0, end: Optional[int] = None):
        self.data = data
        self.pos = start
        self.end = len(data) if end is None else end

    @property
    def remaining(self) -> int:
        return self.end - self.pos

    def take(self, count: int, node: Optional[str] = None) -> bytes:
        if count < 0 or count > self.remaining:
            raise CodecError(
                f"truncated input: need {count} byte(s), {self.remaining} left", "truncated-input", node
            )
        value = self.data[self.pos:self.pos + count]
        self.pos += count
        return value

    def take_rest(self) -> bytes:
        return self.take(self.remaining)

    def sub(self, count: int, node: Optional[str] = None) -> "Reader":
        if count < 0 or count > self.remaining:
            raise CodecError(
                f"truncated input: need {count} byte(s), {self.remaining} left", "truncated-input", node
            )
        region = Reader(self.data, self.pos, self.pos + count)
        self.pos += count
        return region

    def mirrored(self, count: int, node: Optional[str] = None) -> "Reader":
        return Reader(self.take(count, node)[::-1])

    def find(self, delim: bytes) -> int:
        index = self.data.find(delim, self.pos, self.end)
        return -1 if index < 0 else index - self.pos

    def startswith(self, delim: bytes) -> bool:
        return self.data.startswith(delim, self.pos, self.end)

    def take_delimited(self, delim: bytes, node: Optional[str] = None) -> bytes:
        index = self.find(delim)
        if index < 0:
            raise CodecError(f"missing delimiter {delim.hex()}", "missing-delimiter", node)
        value = self.take(index, node)
        self.pos += len(delim)
        return value

    def skip(self, delim: bytes, node: Optional[str] = None) -> None:
        if not self.startswith(delim):
            raise CodecError(f"missing delimiter {delim.hex()}", "missing-delimiter", node)
        self.pos += len(delim)

    def expect_end(self, node: Optional[str] = None) -> None:
        if self.remaining:
            raise CodecError(f"{self.remaining} trailing byte(s) in region", "trailing-bytes", node)


class Scope:
    """Logical values visible at a point of a traversal, plus the measures
    (byte length, element count) of derivation targets in the same repeated element"""

    __slots__ = ("values", "measures")

    def __init__(self, values: Optional[ChainMap] = None):
        self.values = ChainMap() if values is None else values
        self.measures: Dict[str, Tuple[int, int]] = {}

    def child(self) -> "Scope":
        return Scope(self.values.new_child())

    def measure(self, name: str, kind: str) -> int:
        length, count = self.measures.get(name, (0, 0))
        return length if kind == "length_of" else count

    def lookup(self, name: str, node: Optional[str] = None) -> int:
        if name not in self.values:
            raise CodecError(f"value of {name} is not available", "unresolved-reference", node)
        return to_int(self.values[name])


def element(items: list, index: int, node: Optional[str] = None):
    if index < 0 or index >= len(items):
        raise CodecError(f"{node} has {len(items)} element(s), index {index}", "selector-index", node)
    return items[index]


def check_delimited(value: bytes, delim: bytes, node: Optional[str] = None) -> bytes:
    """value followed by delim, failing when delim would be found earlier"""
    framed = value + delim
    if framed.find(delim) != len(value):
        raise CodecError(f"value collides with delimiter {delim.hex()}", "delimiter-collision", node)
    return framed


def check_count(count: int, unit: int, reader: Reader, node: Optional[str] = None) -> int:
    """count, failing early when count elements of at least unit bytes cannot fit in reader"""
    if unit and count * unit > reader.remaining:
        raise CodecError(
            f"truncated input: {count} element(s) of {unit}+ byte(s), {reader.remaining} left",
            "truncated-input",
            node,
        )
    return count
