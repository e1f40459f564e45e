"""Storage layout parsing and slot-to-state-variable resolution.

Consumes the compiler's ``storageLayout`` JSON (labels, slots, offsets and a
type table) and answers the reverse question the trace pipeline needs: given
a raw slot key touched by a transaction, which named variable lives there?

Value types match by slot number, dynamic arrays by distance from
keccak(baseSlot), and mappings by hashing candidate keys against the base
slot, recursively up to depth 3 for nested mappings. Slots that match
nothing stay anonymous rather than being dropped.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

from .abi import TypedValue, UnsupportedType
from .keccak import keccak256_int
from .words import WORD_BYTES, render_word, word_to_bytes

MAX_NESTED_MAPPING_DEPTH = 3
DEFAULT_MAX_ARRAY_INDEX = 1 << 16


class MalformedLayout(ValueError):
    pass


@dataclass(frozen=True)
class ValueType:
    name: str       # solidity name: uint256, address, bool, bytes8, ...
    width: int      # occupied bytes within the slot


@dataclass(frozen=True)
class StructMember:
    name: str
    slot_offset: int    # slots from the struct base
    byte_offset: int
    descriptor: object


@dataclass(frozen=True)
class StructType:
    name: str
    members: tuple      # of StructMember
    slots: int          # total slots occupied


@dataclass(frozen=True)
class MappingType:
    key_type: str
    value: object       # nested descriptor


@dataclass(frozen=True)
class DynamicArrayType:
    element: object
    element_slots: int  # slots per element (packed element arrays unsupported)


@dataclass(frozen=True)
class LayoutEntry:
    label: str
    slot: int
    offset: int
    descriptor: object


@dataclass(frozen=True)
class LayoutIndex:
    entries: tuple  # of LayoutEntry


# key-path steps: ("key", word) mapping key, ("index", i) array element,
# ("member", name) struct member, ("length",) dynamic array length slot
@dataclass(frozen=True)
class SlotLocation:
    label: str
    key_path: tuple
    descriptor: object
    offset: int


def _descriptor_slots(desc) -> int:
    if isinstance(desc, StructType):
        return desc.slots
    return 1


def _parse_type(type_id: str, types: dict):
    info = types.get(type_id)
    if info is None:
        raise MalformedLayout(f"type table misses {type_id!r}")
    encoding = info.get("encoding", "inplace")
    if encoding == "mapping":
        return MappingType(
            key_type=types.get(info["key"], {}).get("label", info["key"]),
            value=_parse_type(info["value"], types),
        )
    if encoding == "dynamic_array":
        elem = _parse_type(info["base"], types)
        if isinstance(elem, ValueType) and elem.width <= 16:
            raise MalformedLayout(
                f"packed element arrays are not supported ({info.get('label')})")
        return DynamicArrayType(element=elem, element_slots=_descriptor_slots(elem))
    if encoding == "inplace":
        members = info.get("members")
        if members is not None:
            parsed = tuple(
                StructMember(
                    name=m["label"],
                    slot_offset=int(m["slot"]),
                    byte_offset=int(m["offset"]),
                    descriptor=_parse_type(m["type"], types),
                )
                for m in members
            )
            slots = (int(info["numberOfBytes"]) + WORD_BYTES - 1) // WORD_BYTES
            return StructType(info.get("label", type_id), parsed, slots)
        width = int(info["numberOfBytes"])
        if width > WORD_BYTES:
            raise MalformedLayout(f"inplace type wider than a slot: {type_id}")
        return ValueType(info.get("label", type_id), width)
    raise MalformedLayout(f"unsupported encoding {encoding!r} for {type_id}")


def parse_storage_layout(layout_json: dict | str) -> LayoutIndex:
    """Build a LayoutIndex from compiler storageLayout JSON (text or dict)."""
    import json

    if isinstance(layout_json, str):
        try:
            layout_json = json.loads(layout_json)
        except json.JSONDecodeError as exc:
            raise MalformedLayout(f"bad layout JSON: {exc}") from exc
    try:
        storage = layout_json["storage"]
        types = layout_json.get("types") or {}
        entries = tuple(
            LayoutEntry(
                label=item["label"],
                slot=int(item["slot"]),
                offset=int(item["offset"]),
                descriptor=_parse_type(item["type"], types),
            )
            for item in storage
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, MalformedLayout):
            raise
        raise MalformedLayout(f"bad layout JSON: {exc}") from exc
    _check_overlaps(entries)
    return LayoutIndex(entries)


def _check_overlaps(entries: Sequence[LayoutEntry]):
    by_slot = {}
    for e in entries:
        if isinstance(e.descriptor, ValueType):
            span = (e.offset, e.offset + e.descriptor.width)
            for other in by_slot.get(e.slot, ()):
                if span[0] < other[1] and other[0] < span[1]:
                    raise MalformedLayout(
                        f"overlapping value entries in slot {e.slot}")
            by_slot.setdefault(e.slot, []).append(span)


@lru_cache(maxsize=65536)
def mapping_slot(key: int, base_slot: int) -> int:
    """Storage slot of mapping entry: keccak256(pad32(key) ++ pad32(baseSlot))."""
    return keccak256_int(word_to_bytes(key) + word_to_bytes(base_slot))


@lru_cache(maxsize=4096)
def array_data_slot(base_slot: int) -> int:
    """First data slot of a dynamic array rooted at ``base_slot``."""
    return keccak256_int(word_to_bytes(base_slot))


def slot_for_path(entry: LayoutEntry, key_path: Sequence) -> int:
    """Recompute the raw slot a key path addresses, for soundness checks."""
    slot = entry.slot
    desc = entry.descriptor
    for step in key_path:
        if step[0] == "key":
            if not isinstance(desc, MappingType):
                raise UnsupportedType(f"key step on {desc!r}")
            slot = mapping_slot(step[1], slot)
            desc = desc.value
        elif step[0] == "length":
            if not isinstance(desc, DynamicArrayType):
                raise UnsupportedType(f"length step on {desc!r}")
            return slot
        elif step[0] == "index":
            if not isinstance(desc, DynamicArrayType):
                raise UnsupportedType(f"index step on {desc!r}")
            slot = array_data_slot(slot) + step[1] * desc.element_slots
            desc = desc.element
        elif step[0] == "member":
            if not isinstance(desc, StructType):
                raise UnsupportedType(f"member step on {desc!r}")
            member = next(m for m in desc.members if m.name == step[1])
            slot += member.slot_offset
            desc = member.descriptor
        else:
            raise UnsupportedType(f"unknown step {step!r}")
    return slot


def _locate_in(desc, base_slot: int, slot_key: int, candidates, depth: int,
               max_array_index: int) -> Optional[tuple]:
    """Return (key_path, descriptor, offset) relative to ``base_slot``."""
    if isinstance(desc, ValueType):
        return ((), desc, None) if slot_key == base_slot else None
    if isinstance(desc, StructType):
        if base_slot <= slot_key < base_slot + desc.slots:
            islot = slot_key - base_slot
            in_slot = [m for m in desc.members if m.slot_offset == islot]
            if len(in_slot) == 1 and isinstance(in_slot[0].descriptor, ValueType):
                m = in_slot[0]
                return ((("member", m.name),), m.descriptor, m.byte_offset)
            # several packed members: hand back a one-slot struct slice
            slice_desc = StructType(desc.name, tuple(
                StructMember(m.name, 0, m.byte_offset, m.descriptor) for m in in_slot), 1)
            return ((), slice_desc, 0)
        return None
    if isinstance(desc, DynamicArrayType):
        if slot_key == base_slot:
            return ((("length",),), ValueType("uint256", 32), 0)
        data = array_data_slot(base_slot)
        distance = slot_key - data
        if 0 <= distance < max_array_index * desc.element_slots:
            index = distance // desc.element_slots
            inner_base = data + index * desc.element_slots
            inner = _locate_in(desc.element, inner_base, slot_key, candidates,
                               depth, max_array_index)
            if inner is not None:
                path, d, off = inner
                return ((("index", index),) + path, d, off)
        return None
    if isinstance(desc, MappingType):
        if depth >= MAX_NESTED_MAPPING_DEPTH:
            return None
        for key in candidates:
            entry_slot = mapping_slot(key, base_slot)
            inner = _locate_in(desc.value, entry_slot, slot_key, candidates,
                               depth + 1, max_array_index)
            if inner is not None:
                path, d, off = inner
                return ((("key", key),) + path, d, off)
        return None
    return None


def locate_state_variable(layout: LayoutIndex, slot_key: int, candidate_keys,
                          max_array_index: int = DEFAULT_MAX_ARRAY_INDEX
                          ) -> Optional[SlotLocation]:
    """Map a raw slot key to (label, key path, descriptor, offset), if any.

    candidate_keys supplies possible mapping keys; iteration is sorted so the
    first match is deterministic.
    """
    candidates = sorted(candidate_keys)
    for entry in layout.entries:
        found = _locate_in(entry.descriptor, entry.slot, slot_key, candidates,
                           0, max_array_index)
        if found is not None:
            path, desc, offset = found
            if offset is None:
                offset = entry.offset
            return SlotLocation(entry.label, path, desc, offset)
    return None


def decode_slot_value(descriptor, raw: int, offset: int = 0) -> TypedValue:
    """Decode the value occupying ``[offset, offset+width)`` of a raw slot word.

    Packing counts from the least significant byte, as the compiler lays
    slots out. Struct slices decode member by member.
    """
    if isinstance(descriptor, ValueType):
        width = descriptor.width
        field = (raw >> (8 * offset)) & ((1 << (8 * width)) - 1)
        name = descriptor.name
        if name == "address":
            return TypedValue("address", field & ((1 << 160) - 1), "address")
        if name == "bool":
            return TypedValue("bool", 1 if field else 0, "bool")
        if name.startswith("uint"):
            return TypedValue("uint", field, name)
        if name.startswith("bytes"):
            return TypedValue("fixed_bytes", field.to_bytes(width, "big"), name)
        raise UnsupportedType(f"cannot decode value type {name!r}")
    if isinstance(descriptor, StructType):
        members = tuple(
            (m.name, decode_slot_value(m.descriptor, raw, m.byte_offset))
            for m in descriptor.members
            if m.slot_offset == 0
        )
        return TypedValue("struct", members, descriptor.name)
    raise UnsupportedType(f"cannot decode {type(descriptor).__name__}")


def anonymous_label(slot_key: int) -> str:
    """Stable name for slots the layout cannot explain."""
    return f"slot[{render_word(slot_key)}]"
