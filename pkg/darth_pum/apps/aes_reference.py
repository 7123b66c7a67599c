"""Host-side AES encryption used as the oracle for the in-memory mapping."""

from typing import List, Sequence

ROUNDS = {16: 10, 24: 12, 32: 14}
RCON = (0x01, 0x02, 0x04, 0x08, 0x10, 0x20, 0x40, 0x80, 0x1B, 0x36)


def xtime(b: int) -> int:
    b <<= 1
    return (b ^ 0x1B) & 0xFF if b & 0x100 else b


def gf_mul(a: int, b: int) -> int:
    out = 0
    while b:
        if b & 1:
            out ^= a
        a = xtime(a)
        b >>= 1
    return out


def _build_sbox() -> List[int]:
    inverse = [0] * 256
    for a in range(1, 256):
        for b in range(1, 256):
            if gf_mul(a, b) == 1:
                inverse[a] = b
                break
    sbox = []
    for x in range(256):
        b = inverse[x]
        s = b
        for shift in range(1, 5):
            s ^= ((b << shift) | (b >> (8 - shift))) & 0xFF
        sbox.append(s ^ 0x63)
    return sbox


SBOX = _build_sbox()


def expand_key(key: bytes) -> List[bytes]:
    """Round keys (``rounds + 1`` of 16 bytes) for a 16, 24 or 32-byte key."""
    if len(key) not in ROUNDS:
        raise ValueError(f"AES key must be 16, 24 or 32 bytes, got {len(key)}")
    nk = len(key) // 4
    rounds = ROUNDS[len(key)]
    words = [list(key[4 * i:4 * i + 4]) for i in range(nk)]
    for i in range(nk, 4 * (rounds + 1)):
        temp = list(words[i - 1])
        if i % nk == 0:
            temp = temp[1:] + temp[:1]
            temp = [SBOX[b] for b in temp]
            temp[0] ^= RCON[i // nk - 1]
        elif nk > 6 and i % nk == 4:
            temp = [SBOX[b] for b in temp]
        words.append([a ^ b for a, b in zip(words[i - nk], temp)])
    return [bytes(sum(words[4 * r:4 * r + 4], [])) for r in range(rounds + 1)]


def mix_column(column: Sequence[int]) -> List[int]:
    a0, a1, a2, a3 = column
    return [
        gf_mul(a0, 2) ^ gf_mul(a1, 3) ^ a2 ^ a3,
        a0 ^ gf_mul(a1, 2) ^ gf_mul(a2, 3) ^ a3,
        a0 ^ a1 ^ gf_mul(a2, 2) ^ gf_mul(a3, 3),
        gf_mul(a0, 3) ^ a1 ^ a2 ^ gf_mul(a3, 2),
    ]


def encrypt_block(key: bytes, block: bytes) -> bytes:
    if len(block) != 16:
        raise ValueError(f"AES block must be 16 bytes, got {len(block)}")
    round_keys = expand_key(key)
    state = [b ^ k for b, k in zip(block, round_keys[0])]
    rounds = len(round_keys) - 1
    for r in range(1, rounds + 1):
        state = [SBOX[b] for b in state]
        # byte i sits at row i % 4, column i // 4
        state = [state[(i + 4 * (i % 4)) % 16] for i in range(16)]
        if r != rounds:
            state = sum((mix_column(state[4 * c:4 * c + 4]) for c in range(4)), [])
        state = [b ^ k for b, k in zip(state, round_keys[r])]
    return bytes(state)
