"""ABI parsing plus calldata and event codecs.

Consumes the standard compiler-emitted ABI JSON. Selectors and event topics
are the leading bytes of keccak-256 over the canonical signature string.
The codec covers the static value types, fixed/dynamic arrays and tuples in
head/tail encoding; exotic types (string, dynamic bytes, signed ints) are
rejected up front by :func:`parse_abi`.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .keccak import keccak256
from .words import WORD_BYTES, render_word, word_to_bytes


class MalformedAbi(ValueError):
    """Unparseable ABI JSON or a type string this build does not handle."""


class UnknownSelector(KeyError):
    pass


class UnknownEvent(KeyError):
    pass


class TruncatedCalldata(ValueError):
    pass


class MalformedEventData(ValueError):
    pass


class UnsupportedType(ValueError):
    pass


@dataclass(frozen=True)
class TypedValue:
    """ABI- or storage-decoded value with its declared solidity type.

    tag is one of address, uint, bool, fixed_bytes, array, struct. Payload:
    int for the scalar tags, bytes for fixed_bytes, a tuple of TypedValue for
    arrays, and a tuple of (name, TypedValue) pairs for structs.
    """

    tag: str
    value: object
    sol_type: str

    def as_int(self):
        """Scalar view as a nonnegative integer; None for aggregates."""
        if self.tag in ("address", "uint", "bool"):
            return int(self.value)
        if self.tag == "fixed_bytes":
            return int.from_bytes(self.value, "big")
        return None

    def member(self, name: str):
        if self.tag != "struct":
            raise UnsupportedType(f"not a struct: {self.sol_type}")
        for mname, mval in self.value:
            if mname == name:
                return mval
        raise KeyError(name)


def uint_value(v: int, bits: int = 256) -> TypedValue:
    return TypedValue("uint", v, f"uint{bits}")


def address_value(v: int) -> TypedValue:
    return TypedValue("address", v, "address")


def bool_value(v) -> TypedValue:
    return TypedValue("bool", 1 if v else 0, "bool")


_UINT_RE = re.compile(r"^uint(\d+)?$")
_BYTES_RE = re.compile(r"^bytes(\d+)$")
_ARRAY_RE = re.compile(r"^(.*)\[(\d*)\]$")


@dataclass(frozen=True)
class AbiType:
    """Resolved ABI type: kind in {address, uint, bool, fixed_bytes, array, tuple}."""

    kind: str
    bits: int = 0                     # uint width / fixed_bytes byte width
    elem: "AbiType | None" = None     # array element
    length: int | None = None         # fixed array length, None when dynamic
    components: tuple = ()            # tuple members: ((name, AbiType), ...)

    @property
    def is_dynamic(self) -> bool:
        if self.kind == "array":
            return self.length is None or self.elem.is_dynamic
        if self.kind == "tuple":
            return any(t.is_dynamic for _, t in self.components)
        return False

    def head_words(self) -> int:
        if self.is_dynamic:
            return 1
        if self.kind == "array":
            return self.length * self.elem.head_words()
        if self.kind == "tuple":
            return sum(t.head_words() for _, t in self.components)
        return 1

    def canonical(self) -> str:
        if self.kind == "uint":
            return f"uint{self.bits}"
        if self.kind == "fixed_bytes":
            return f"bytes{self.bits}"
        if self.kind == "array":
            suffix = "[]" if self.length is None else f"[{self.length}]"
            return self.elem.canonical() + suffix
        if self.kind == "tuple":
            return "(" + ",".join(t.canonical() for _, t in self.components) + ")"
        return self.kind


def parse_type(type_str: str, components: Sequence[dict] = ()) -> AbiType:
    m = _ARRAY_RE.match(type_str)
    if m:
        elem = parse_type(m.group(1), components)
        length = int(m.group(2)) if m.group(2) else None
        return AbiType("array", elem=elem, length=length)
    if type_str == "tuple":
        if not components:
            raise MalformedAbi("tuple type without components")
        comps = tuple((c.get("name", ""), parse_type(c["type"], c.get("components", ())))
                      for c in components)
        return AbiType("tuple", components=comps)
    if type_str == "address":
        return AbiType("address", bits=160)
    if type_str == "bool":
        return AbiType("bool", bits=8)
    m = _UINT_RE.match(type_str)
    if m:
        bits = int(m.group(1)) if m.group(1) else 256
        if bits % 8 or not 8 <= bits <= 256:
            raise MalformedAbi(f"bad uint width: {type_str}")
        return AbiType("uint", bits=bits)
    m = _BYTES_RE.match(type_str)
    if m:
        width = int(m.group(1))
        if not 1 <= width <= 32:
            raise MalformedAbi(f"bad bytes width: {type_str}")
        return AbiType("fixed_bytes", bits=width)
    raise MalformedAbi(f"unsupported type string: {type_str!r}")


@dataclass(frozen=True)
class FunctionEntry:
    name: str
    selector: bytes
    inputs: tuple  # ((name, AbiType), ...)
    signature: str


@dataclass(frozen=True)
class EventEntry:
    name: str
    topic0: int
    inputs: tuple  # ((name, AbiType, indexed), ...)
    signature: str


@dataclass(frozen=True)
class AbiIndex:
    functions: dict = field(default_factory=dict)  # selector bytes -> FunctionEntry
    events: dict = field(default_factory=dict)     # topic0 int -> EventEntry

    def function_by_name(self, name: str) -> FunctionEntry:
        for fn in self.functions.values():
            if fn.name == name:
                return fn
        raise KeyError(name)

    def event_by_name(self, name: str) -> EventEntry:
        for ev in self.events.values():
            if ev.name == name:
                return ev
        raise KeyError(name)


def signature(name: str, types: Iterable[AbiType]) -> str:
    return name + "(" + ",".join(t.canonical() for t in types) + ")"


def parse_abi(abi_json: str) -> AbiIndex:
    """Index functions by selector and events by topic0 from ABI JSON text."""
    try:
        entries = json.loads(abi_json)
    except json.JSONDecodeError as exc:
        raise MalformedAbi(f"bad ABI JSON: {exc}") from exc
    if not isinstance(entries, list):
        raise MalformedAbi("ABI must be a JSON array")
    functions = {}
    events = {}
    for entry in entries:
        kind = entry.get("type", "function")
        if kind == "function":
            name = entry["name"]
            inputs = tuple(
                (inp.get("name", ""), parse_type(inp["type"], inp.get("components", ())))
                for inp in entry.get("inputs", ())
            )
            sig = signature(name, (t for _, t in inputs))
            selector = keccak256(sig.encode("ascii"))[:4]
            if selector in functions:
                raise MalformedAbi(f"duplicate selector for {sig}")
            functions[selector] = FunctionEntry(name, selector, inputs, sig)
        elif kind == "event":
            name = entry["name"]
            inputs = tuple(
                (inp.get("name", ""), parse_type(inp["type"], inp.get("components", ())),
                 bool(inp.get("indexed", False)))
                for inp in entry.get("inputs", ())
            )
            sig = signature(name, (t for _, t, _ in inputs))
            topic0 = int.from_bytes(keccak256(sig.encode("ascii")), "big")
            if topic0 in events:
                raise MalformedAbi(f"duplicate topic for {sig}")
            events[topic0] = EventEntry(name, topic0, inputs, sig)
        # constructor/fallback/receive entries carry no selector; skip them
    return AbiIndex(functions, events)


# ---------------------------------------------------------------------------
# encoding


def _encode_head_tail(types: Sequence[AbiType], values: Sequence) -> bytes:
    heads = []
    tails = []
    head_len = sum(t.head_words() for t in types) * WORD_BYTES
    offset = head_len
    for t, v in zip(types, values):
        if t.is_dynamic:
            tail = _encode_value(t, v)
            heads.append(offset.to_bytes(WORD_BYTES, "big"))
            tails.append(tail)
            offset += len(tail)
        else:
            heads.append(_encode_value(t, v))
    return b"".join(heads) + b"".join(tails)


def _encode_value(t: AbiType, v) -> bytes:
    if t.kind == "uint":
        if not 0 <= v < (1 << t.bits):
            raise UnsupportedType(f"uint{t.bits} out of range: {v}")
        return word_to_bytes(v)
    if t.kind == "address":
        return word_to_bytes(v)
    if t.kind == "bool":
        return word_to_bytes(1 if v else 0)
    if t.kind == "fixed_bytes":
        if len(v) != t.bits:
            raise UnsupportedType(f"bytes{t.bits} needs {t.bits} bytes")
        return v + b"\x00" * (WORD_BYTES - len(v))
    if t.kind == "array":
        body = _encode_head_tail([t.elem] * len(v), v)
        if t.length is None:
            return len(v).to_bytes(WORD_BYTES, "big") + body
        if len(v) != t.length:
            raise UnsupportedType(f"fixed array needs {t.length} items")
        return body
    if t.kind == "tuple":
        return _encode_head_tail([ct for _, ct in t.components], v)
    raise UnsupportedType(t.kind)


def encode_arguments(types: Sequence[AbiType], values: Sequence) -> bytes:
    return _encode_head_tail(types, values)


def encode_calldata(fn: FunctionEntry, values: Sequence) -> bytes:
    return fn.selector + encode_arguments([t for _, t in fn.inputs], values)


def encode_event(ev: EventEntry, values: Sequence):
    """Build (topics, data) for an emitted event; values follow input order."""
    topics = [ev.topic0]
    data_types = []
    data_values = []
    for (name, t, indexed), v in zip(ev.inputs, values):
        if indexed:
            if t.is_dynamic:
                raise UnsupportedType("dynamic indexed parameters are not supported")
            topics.append(int.from_bytes(_encode_value(t, v), "big"))
        else:
            data_types.append(t)
            data_values.append(v)
    return topics, encode_arguments(data_types, data_values)


# ---------------------------------------------------------------------------
# decoding


def _decode_value(t: AbiType, data: bytes, pos: int) -> TypedValue:
    if pos + WORD_BYTES > len(data) and t.kind not in ("array", "tuple"):
        raise TruncatedCalldata("value extends past end of data")
    if t.kind == "uint":
        raw = int.from_bytes(data[pos:pos + WORD_BYTES], "big")
        return TypedValue("uint", raw & ((1 << t.bits) - 1), t.canonical())
    if t.kind == "address":
        raw = int.from_bytes(data[pos:pos + WORD_BYTES], "big")
        return TypedValue("address", raw & ((1 << 160) - 1), "address")
    if t.kind == "bool":
        raw = int.from_bytes(data[pos:pos + WORD_BYTES], "big")
        return TypedValue("bool", 1 if raw else 0, "bool")
    if t.kind == "fixed_bytes":
        return TypedValue("fixed_bytes", data[pos:pos + t.bits], t.canonical())
    if t.kind == "array":
        if t.length is None:
            if pos + WORD_BYTES > len(data):
                raise TruncatedCalldata("missing array length")
            n = int.from_bytes(data[pos:pos + WORD_BYTES], "big")
            if n > 2 ** 20:
                raise TruncatedCalldata(f"implausible array length {n}")
            items = _decode_sequence([t.elem] * n, data, pos + WORD_BYTES)
        else:
            items = _decode_sequence([t.elem] * t.length, data, pos)
        return TypedValue("array", tuple(items), t.canonical())
    if t.kind == "tuple":
        items = _decode_sequence([ct for _, ct in t.components], data, pos)
        members = tuple((name, val) for (name, _), val in zip(t.components, items))
        return TypedValue("struct", members, t.canonical())
    raise UnsupportedType(t.kind)


def _decode_sequence(types: Sequence[AbiType], data: bytes, base: int):
    out = []
    pos = base
    for t in types:
        if t.is_dynamic:
            if pos + WORD_BYTES > len(data):
                raise TruncatedCalldata("missing tail offset")
            offset = int.from_bytes(data[pos:pos + WORD_BYTES], "big")
            out.append(_decode_value(t, data, base + offset))
            pos += WORD_BYTES
        else:
            out.append(_decode_value(t, data, pos))
            pos += t.head_words() * WORD_BYTES
    return out


def decode_calldata(abi: AbiIndex, calldata: bytes):
    """Resolve the selector and decode parameters.

    Returns (function name, [(param name, TypedValue), ...]).
    """
    if len(calldata) < 4:
        raise TruncatedCalldata(f"calldata has {len(calldata)} bytes")
    fn = abi.functions.get(calldata[:4])
    if fn is None:
        raise UnknownSelector(calldata[:4].hex())
    values = _decode_sequence([t for _, t in fn.inputs], calldata, 4)
    return fn.name, [(name, val) for (name, _), val in zip(fn.inputs, values)]


def decode_event(abi: AbiIndex, topics: Sequence[int], data: bytes):
    """Decode an emitted event into (event name, [(param name, TypedValue), ...]).

    Indexed parameters come from topics[1:], the rest from the data section.
    """
    if not topics:
        raise MalformedEventData("event without topic0")
    ev = abi.events.get(topics[0])
    if ev is None:
        raise UnknownEvent(render_word(topics[0]))
    indexed = [(name, t) for name, t, ix in ev.inputs if ix]
    plain = [(name, t) for name, t, ix in ev.inputs if not ix]
    if len(topics) != 1 + len(indexed):
        raise MalformedEventData(
            f"{ev.name} expects {len(indexed)} indexed params, got {len(topics) - 1}")
    params = {}
    for (name, t), topic in zip(indexed, topics[1:]):
        params[name] = _decode_value(t, word_to_bytes(topic), 0)
    try:
        values = _decode_sequence([t for _, t in plain], data, 0)
    except TruncatedCalldata as exc:
        raise MalformedEventData(str(exc)) from exc
    for (name, _), val in zip(plain, values):
        params[name] = val
    return ev.name, [(name, params[name]) for name, _, _ in ev.inputs]
