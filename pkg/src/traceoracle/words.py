"""256-bit machine words and the canonical hex forms used in wire formats.

A word is a plain Python int in [0, 2**256). Canonical rendering is 32-byte
big-endian lowercase hex with the 0x prefix, 66 characters total. Addresses
are 160-bit words rendered as 20-byte hex.
"""

from __future__ import annotations

WORD_BITS = 256
WORD_BYTES = 32
WORD_MAX = (1 << WORD_BITS) - 1
ADDRESS_MAX = (1 << 160) - 1

# conventional marker for native-ether balance rows in token maps
ETH_MARKER = int.from_bytes(b"\xee" * 20, "big")


class WordError(ValueError):
    """Raised for malformed word or address text."""


def render_word(value: int) -> str:
    if not 0 <= value <= WORD_MAX:
        raise WordError(f"word out of range: {value!r}")
    return "0x" + format(value, "064x")


def parse_word(text: str) -> int:
    if not isinstance(text, str) or len(text) != 66 or not text.startswith("0x"):
        raise WordError(f"not a canonical word: {text!r}")
    try:
        return int(text, 16)
    except ValueError as exc:
        raise WordError(f"not a canonical word: {text!r}") from exc


def render_address(value: int) -> str:
    if not 0 <= value <= ADDRESS_MAX:
        raise WordError(f"address out of range: {value!r}")
    return "0x" + format(value, "040x")


def parse_address(text: str) -> int:
    if not isinstance(text, str) or len(text) != 42 or not text.startswith("0x"):
        raise WordError(f"not an address: {text!r}")
    try:
        return int(text, 16)
    except ValueError as exc:
        raise WordError(f"not an address: {text!r}") from exc


def word_to_bytes(value: int) -> bytes:
    return value.to_bytes(WORD_BYTES, "big")


def bytes_to_word(raw: bytes) -> int:
    if len(raw) != WORD_BYTES:
        raise WordError(f"expected 32 bytes, got {len(raw)}")
    return int.from_bytes(raw, "big")


def render_hex(value: int) -> str:
    """Minimal lowercase hex, used in property text for concrete keys."""
    return hex(value)


def render_bytes(raw: bytes) -> str:
    return "0x" + raw.hex()


def parse_bytes(text: str) -> bytes:
    if not isinstance(text, str) or not text.startswith("0x") or len(text) % 2:
        raise WordError(f"not hex bytes: {text!r}")
    return bytes.fromhex(text[2:])
