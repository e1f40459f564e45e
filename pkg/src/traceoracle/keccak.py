"""Keccak-256 (the pre-standardization SHA-3 variant used by the EVM).

Pure-Python sponge over keccak-f[1600] with the original 0x01 multi-rate
padding, not the NIST 0x06 domain separator hashlib's sha3_256 applies.
"""

_MASK = (1 << 64) - 1

_ROUND_CONSTANTS = (
    0x0000000000000001, 0x0000000000008082, 0x800000000000808A, 0x8000000080008000,
    0x000000000000808B, 0x0000000080000001, 0x8000000080008081, 0x8000000000008009,
    0x000000000000008A, 0x0000000000000088, 0x0000000080008009, 0x000000008000000A,
    0x000000008000808B, 0x800000000000008B, 0x8000000000008089, 0x8000000000008003,
    0x8000000000008002, 0x8000000000000080, 0x000000000000800A, 0x800000008000000A,
    0x8000000080008081, 0x8000000000008080, 0x0000000080000001, 0x8000000080008008,
)

# rho rotation offset for lane x + 5*y
_ROTATION = (
    0, 1, 62, 28, 27,
    36, 44, 6, 55, 20,
    3, 10, 43, 25, 39,
    41, 45, 15, 21, 8,
    18, 2, 61, 56, 14,
)

def _precompute_pi():
    # pi step: source lane index for each destination lane
    dest = [0] * 25
    for x in range(5):
        for y in range(5):
            dest[y + 5 * ((2 * x + 3 * y) % 5)] = x + 5 * y
    return tuple(dest)


_PI_SOURCE = _precompute_pi()

_RATE_BYTES = 136  # 1088-bit rate for 256-bit output


def _permute(lanes):
    rc = _ROUND_CONSTANTS
    rot = _ROTATION
    pi_src = _PI_SOURCE
    for rnd in range(24):
        # theta
        c = [lanes[x] ^ lanes[x + 5] ^ lanes[x + 10] ^ lanes[x + 15] ^ lanes[x + 20]
             for x in range(5)]
        for x in range(5):
            cl = c[(x + 1) % 5]
            d = c[(x - 1) % 5] ^ (((cl << 1) | (cl >> 63)) & _MASK)
            for y in range(0, 25, 5):
                lanes[x + y] ^= d
        # rho + pi
        moved = [0] * 25
        for i in range(25):
            src = pi_src[i]
            r = rot[src]
            v = lanes[src]
            moved[i] = ((v << r) | (v >> (64 - r))) & _MASK if r else v
        # chi
        for y in range(0, 25, 5):
            row = moved[y:y + 5]
            for x in range(5):
                lanes[x + y] = row[x] ^ ((~row[(x + 1) % 5]) & row[(x + 2) % 5])
        # iota
        lanes[0] ^= rc[rnd]


def keccak256(data: bytes) -> bytes:
    """Hash ``data`` and return the 32-byte digest."""
    lanes = [0] * 25
    # absorb full blocks
    offset = 0
    n = len(data)
    while n - offset >= _RATE_BYTES:
        block = data[offset:offset + _RATE_BYTES]
        for i in range(17):
            lanes[i] ^= int.from_bytes(block[8 * i:8 * i + 8], "little")
        _permute(lanes)
        offset += _RATE_BYTES
    # pad10*1 with keccak domain byte 0x01
    block = bytearray(data[offset:])
    block.append(0x01)
    block.extend(b"\x00" * (_RATE_BYTES - len(block)))
    block[-1] |= 0x80
    for i in range(17):
        lanes[i] ^= int.from_bytes(block[8 * i:8 * i + 8], "little")
    _permute(lanes)
    out = bytearray()
    for i in range(4):
        out.extend(lanes[i].to_bytes(8, "little"))
    return bytes(out)


def keccak256_int(data: bytes) -> int:
    """Digest interpreted as a big-endian 256-bit unsigned integer."""
    return int.from_bytes(keccak256(data), "big")
