"""Improved FEA-M: session secrets, key distribution and the block cipher.

Block ``i`` (1-based) is encrypted as::

    C_i = K (P_i + K V K^i) K^(n+i) + K V K^i

and decrypted as::

    P_i = K^-1 (C_i + K V K^i) K^-(n+i) + K V K^i

Session secrets ``(K, V)`` travel to the receiver wrapped under a master key
``K0`` as ``K* = K0 K^-1 K0`` and ``V* = K0 V K0``.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field

from .gf2linalg import (
    BoolMatrix,
    Exhausted,
    NotInvertible,
    inverse,
    mul,
    power,
    random_invertible,
    random_matrix,
    read_matrices,
)
from .prng import DetPrng


class WeakKeyWarning(UserWarning):
    """The session key has a tiny order; ``K = I`` makes the cipher the identity map."""


class StreamFormatError(ValueError):
    """Ciphertext stream is malformed."""


class BadLength(StreamFormatError):
    pass


class BadPadding(StreamFormatError):
    pass


@dataclass(frozen=True)
class MasterKey:
    k0: BoolMatrix
    k0_inv: BoolMatrix = field(repr=False)

    @classmethod
    def from_matrix(cls, k0: BoolMatrix) -> MasterKey:
        """Wrap ``k0``; raises :class:`NotInvertible` if it is singular."""
        return cls(k0, inverse(k0))

    @property
    def n(self) -> int:
        return self.k0.n


@dataclass(frozen=True)
class SessionSecrets:
    k: BoolMatrix
    k_inv: BoolMatrix = field(repr=False)
    v: BoolMatrix

    @classmethod
    def from_kv(cls, k: BoolMatrix, v: BoolMatrix) -> SessionSecrets:
        if k.n != v.n:
            raise ValueError(f"K is {k.n}x{k.n} but V is {v.n}x{v.n}")
        return cls(k, inverse(k), v)

    @property
    def n(self) -> int:
        return self.k.n

    def to_bytes(self) -> bytes:
        """Session file body: the K record followed by the V record."""
        return self.k.to_bytes() + self.v.to_bytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> SessionSecrets:
        mats = read_matrices(data)
        if len(mats) != 2:
            raise ValueError(f"session file must hold 2 matrices (K, V), found {len(mats)}")
        return cls.from_kv(*mats)


@dataclass(frozen=True)
class DistributionMessage:
    k_star: BoolMatrix
    v_star: BoolMatrix


def keygen_session(
    prng: DetPrng,
    n: int,
    *,
    strict: bool = False,
    min_order: int = 1 << 16,
    max_tries: int = 256,
    max_screen: int = 64,
) -> SessionSecrets:
    """Draw ``K`` (invertible) then ``V`` from ``prng``.

    The draw order is fixed, so a given seed always yields the same pair.
    With ``strict`` set, candidate keys whose order is at most ``min_order``
    are discarded and redrawn before ``V`` is drawn.
    """
    if strict:
        from .keyspace import screen_key

        for _ in range(max_screen):
            k = random_invertible(prng, n, max_tries)
            if screen_key(k, min_order).accepted:
                break
        else:
            raise Exhausted(f"no key of order > {min_order} in {max_screen} candidates")
    else:
        k = random_invertible(prng, n, max_tries)
    v = random_matrix(prng, n)
    return SessionSecrets(k, inverse(k), v)


def _check_n(a: BoolMatrix, b: BoolMatrix) -> None:
    if a.n != b.n:
        raise ValueError(f"dimension mismatch: {a.n} vs {b.n}")


def distribute(master: MasterKey, s: SessionSecrets) -> DistributionMessage:
    _check_n(master.k0, s.k)
    k0 = master.k0
    return DistributionMessage(mul(mul(k0, s.k_inv), k0), mul(mul(k0, s.v), k0))


def recover(master: MasterKey, msg: DistributionMessage) -> SessionSecrets:
    """Receiver side: unwrap ``K^-1`` and ``V``, then invert to get ``K``.

    Raises:
        NotInvertible: if the unwrapped ``K^-1`` is singular (corrupted message).
    """
    _check_n(master.k0, msg.k_star)
    _check_n(master.k0, msg.v_star)
    ki = master.k0_inv
    k_inv = mul(mul(ki, msg.k_star), ki)
    v = mul(mul(ki, msg.v_star), ki)
    try:
        k = inverse(k_inv)
    except NotInvertible:
        raise NotInvertible("transported K^-1 is singular; message corrupted") from None
    return SessionSecrets(k, k_inv, v)


class Direction(enum.Enum):
    ENCRYPT = "e"
    DECRYPT = "d"


class CipherState:
    """Per-session block counter with cached powers.

    Holds ``e = K^(n+i)``, ``e_inv = K^-(n+i)`` and ``m = K V K^i`` for the
    next block index ``i``. Blocks must be fed strictly in order.
    """

    def __init__(self, secrets: SessionSecrets, direction: Direction = Direction.ENCRYPT):
        n = secrets.n
        self.k = secrets.k
        self.k_inv = secrets.k_inv
        self.direction = Direction(direction)
        self.n = n
        self.i = 1
        self.e = power(secrets.k, n + 1)
        self.e_inv = power(secrets.k_inv, n + 1)
        self.m = mul(mul(secrets.k, secrets.v), secrets.k)

    def _advance(self) -> None:
        self.e = mul(self.e, self.k)
        self.e_inv = mul(self.k_inv, self.e_inv)
        self.m = mul(self.m, self.k)
        self.i += 1

    def _check_block(self, x: BoolMatrix, want: Direction) -> None:
        if self.direction is not want:
            raise ValueError(f"state was opened for {self.direction.name.lower()}ion")
        if x.n != self.n:
            raise ValueError(f"block is {x.n}x{x.n}, session uses n={self.n}")


def encrypt_block(st: CipherState, p: BoolMatrix) -> BoolMatrix:
    st._check_block(p, Direction.ENCRYPT)
    c = mul(mul(st.k, p + st.m), st.e) + st.m
    st._advance()
    return c


def decrypt_block(st: CipherState, c: BoolMatrix) -> BoolMatrix:
    st._check_block(c, Direction.DECRYPT)
    p = mul(mul(st.k_inv, c + st.m), st.e_inv) + st.m
    st._advance()
    return p


# -- byte streams ------------------------------------------------------------


def block_bytes(n: int) -> int:
    """Serialized size of one cipher block: ``n`` rows of ``ceil(n/8)`` bytes."""
    return n * ((n + 7) // 8)


def _payload_blocks(data: bytes, n: int) -> list[int]:
    """Split the padded bit string of ``data`` into ``n*n``-bit integers.

    Bit ``t`` of byte ``b`` is stream bit ``8b + t``; stream bit ``i*n + j`` of
    a block is matrix entry ``(i, j)``. Eight blocks always span exactly
    ``n*n`` bytes, so the work is done in byte-aligned groups of eight.
    """
    bits = n * n
    total = 8 * len(data) + 1
    nblocks = -(-total // bits)
    padded = bytearray(data)
    padded.append(0x01)
    padded.extend(bytes(-(-nblocks * bits // 8) - len(padded)))
    mask = (1 << bits) - 1
    group = bits  # bytes per 8 blocks
    out = []
    for g in range(0, len(padded), group):
        x = int.from_bytes(padded[g:g + group], "little")
        for _ in range(8):
            if len(out) == nblocks:
                break
            out.append(x & mask)
            x >>= bits
    return out


def _blocks_to_payload(blocks: list[int], n: int) -> bytes:
    bits = n * n
    out = bytearray()
    for g in range(0, len(blocks), 8):
        chunk = blocks[g:g + 8]
        x = 0
        for k, b in enumerate(chunk):
            x |= b << (k * bits)
        out += x.to_bytes(-(-len(chunk) * bits // 8), "little")
    return bytes(out)


def _block_to_matrix(x: int, n: int) -> BoolMatrix:
    mask = (1 << n) - 1
    return BoolMatrix._trusted(n, tuple((x >> (i * n)) & mask for i in range(n)))


def _matrix_to_block(m: BoolMatrix) -> int:
    n = m.n
    x = 0
    for i, r in enumerate(m.rows):
        x |= r << (i * n)
    return x


def _warn_if_weak(s: SessionSecrets) -> None:
    if s.k.is_identity():
        warnings.warn("session key K = I: the cipher vanishes (C_i == P_i)", WeakKeyWarning, stacklevel=3)


def encrypt_stream(s: SessionSecrets, data: bytes) -> bytes:
    """Pad, split into blocks and encrypt from block index 1.

    Output is a 4-byte little-endian ``n`` header followed by the cipher
    blocks, each in matrix-row layout (:func:`block_bytes` bytes). There is
    no integrity protection.
    """
    _warn_if_weak(s)
    n = s.n
    st = CipherState(s, Direction.ENCRYPT)
    out = bytearray(n.to_bytes(4, "little"))
    rb = (n + 7) // 8
    for x in _payload_blocks(bytes(data), n):
        c = encrypt_block(st, _block_to_matrix(x, n))
        out += b"".join(r.to_bytes(rb, "little") for r in c.rows)
    return bytes(out)


def decrypt_stream(s: SessionSecrets, data: bytes) -> bytes:
    """Inverse of :func:`encrypt_stream`.

    Raises:
        BadLength: wrong header, empty body or a body that is not a whole
            number of blocks.
        BadPadding: padding bits set in a cipher row, or the recovered
            plaintext does not end in a valid pad.
    """
    n = s.n
    data = bytes(data)
    if len(data) < 4:
        raise BadLength("missing stream header")
    hdr = int.from_bytes(data[:4], "little")
    if hdr != n:
        raise BadLength(f"stream header says n={hdr}, key has n={n}")
    body = data[4:]
    bsz = block_bytes(n)
    if not body or len(body) % bsz:
        raise BadLength(f"body of {len(body)} bytes is not a positive multiple of {bsz}")
    rb = (n + 7) // 8
    st = CipherState(s, Direction.DECRYPT)
    blocks = []
    for off in range(0, len(body), bsz):
        rows = []
        for i in range(n):
            r = int.from_bytes(body[off + i * rb: off + (i + 1) * rb], "little")
            if r >> n:
                raise BadPadding("padding bits set in cipher block row")
            rows.append(r)
        p = decrypt_block(st, BoolMatrix._trusted(n, tuple(rows)))
        blocks.append(_matrix_to_block(p))
    payload = _blocks_to_payload(blocks, n)
    end = len(payload)
    while end and payload[end - 1] == 0:
        end -= 1
    if not end:
        raise BadPadding("no pad marker found")
    last = payload[end - 1]
    pad_pos = 8 * (end - 1) + last.bit_length() - 1
    if pad_pos % 8 or pad_pos < (len(blocks) - 1) * n * n:
        raise BadPadding("pad marker misplaced")
    return payload[: pad_pos // 8]
