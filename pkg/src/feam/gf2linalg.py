"""Bit-packed dense linear algebra over GF(2).

A :class:`BoolMatrix` stores each row as a Python ``int`` whose bit ``j`` is
element ``(i, j)``. Row XOR is then a single big-int XOR, which is what
elimination and multiplication spend their time on. Large linear systems are
handed to a compiled Four-Russians kernel over packed ``uint64`` words.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from . import _kernels
from .prng import DetPrng

MAX_DIM = 4096
MAGIC = b"GF2M"
FORMAT_VERSION = 1


class NotInvertible(ArithmeticError):
    """The matrix has rank below its dimension."""


class Exhausted(RuntimeError):
    """Rejection sampling gave up before finding an invertible matrix."""


class MatrixFormatError(ValueError):
    """Bytes do not hold a well-formed matrix record."""


def _check_dim(n: int) -> None:
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
        raise TypeError(f"dimension must be an int, got {type(n).__name__}")
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got {n}")
    if n > MAX_DIM:
        raise ValueError(f"dimension {n} exceeds the cap of {MAX_DIM}")


class BoolMatrix:
    """Immutable square matrix over GF(2).

    ``+`` is element-wise XOR, ``@`` the GF(2) product, ``**`` a power and
    ``.T`` the transpose.
    """

    __slots__ = ("n", "rows", "_hash")

    def __init__(self, n: int, rows: Iterable[int]):
        _check_dim(n)
        rows = tuple(int(r) for r in rows)
        if len(rows) != n:
            raise ValueError(f"expected {n} rows, got {len(rows)}")
        limit = 1 << n
        for r in rows:
            if r < 0 or r >= limit:
                raise ValueError(f"row {r:#x} has bits outside {n} columns")
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "_hash", None)

    @classmethod
    def _trusted(cls, n: int, rows: tuple[int, ...]) -> BoolMatrix:
        # internal constructor for rows produced by our own operations
        assert len(rows) == n and all(r >> n == 0 for r in rows), "padding bits set"
        obj = cls.__new__(cls)
        object.__setattr__(obj, "n", n)
        object.__setattr__(obj, "rows", rows)
        object.__setattr__(obj, "_hash", None)
        return obj

    def __setattr__(self, name, value):
        raise AttributeError("BoolMatrix is immutable")

    @classmethod
    def identity(cls, n: int) -> BoolMatrix:
        _check_dim(n)
        return cls._trusted(n, tuple(1 << i for i in range(n)))

    @classmethod
    def zeros(cls, n: int) -> BoolMatrix:
        _check_dim(n)
        return cls._trusted(n, (0,) * n)

    @classmethod
    def from_array(cls, a) -> BoolMatrix:
        """Build from a nested sequence or 2-D array of 0/1 values."""
        arr = np.asarray(a)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"expected a square 2-D array, got shape {arr.shape}")
        if arr.size and not np.isin(arr, (0, 1)).all():
            raise ValueError("entries must be 0 or 1")
        n = arr.shape[0]
        rows = []
        for i in range(n):
            r = 0
            for j in np.flatnonzero(arr[i]):
                r |= 1 << int(j)
            rows.append(r)
        return cls(n, rows)

    def to_array(self) -> np.ndarray:
        out = np.zeros((self.n, self.n), dtype=np.uint8)
        for i, r in enumerate(self.rows):
            j = 0
            while r:
                if r & 1:
                    out[i, j] = 1
                r >>= 1
                j += 1
        return out

    def __getitem__(self, ij: tuple[int, int]) -> int:
        i, j = ij
        if not (0 <= i < self.n and 0 <= j < self.n):
            raise IndexError(ij)
        return (self.rows[i] >> j) & 1

    def __eq__(self, other) -> bool:
        if not isinstance(other, BoolMatrix):
            return NotImplemented
        return self.n == other.n and self.rows == other.rows

    def __hash__(self) -> int:
        h = self._hash
        if h is None:
            h = hash((self.n, self.rows))
            object.__setattr__(self, "_hash", h)
        return h

    def __repr__(self) -> str:
        if self.n <= 8:
            body = ", ".join(str(list(map(int, row))) for row in self.to_array())
            return f"BoolMatrix.from_array([{body}])"
        return f"<BoolMatrix n={self.n} weight={self.weight()}>"

    def __add__(self, other: BoolMatrix) -> BoolMatrix:
        return add(self, other)

    __sub__ = __add__

    def __matmul__(self, other: BoolMatrix) -> BoolMatrix:
        return mul(self, other)

    def __pow__(self, e: int) -> BoolMatrix:
        return power(self, e)

    @property
    def T(self) -> BoolMatrix:
        return transpose(self)

    def weight(self) -> int:
        """Number of set entries."""
        return sum(r.bit_count() for r in self.rows)

    def is_identity(self) -> bool:
        return all(r == 1 << i for i, r in enumerate(self.rows))

    # -- serialization -------------------------------------------------------

    def to_bytes(self) -> bytes:
        """Binary record: ``GF2M``, version byte, u32le n, rows LSB-first."""
        rb = (self.n + 7) // 8
        body = b"".join(r.to_bytes(rb, "little") for r in self.rows)
        return MAGIC + bytes([FORMAT_VERSION]) + self.n.to_bytes(4, "little") + body

    def to_hex(self) -> str:
        return self.to_bytes().hex()

    @classmethod
    def from_bytes(cls, data: bytes) -> BoolMatrix:
        m, rest = read_matrix(data)
        if rest:
            raise MatrixFormatError(f"{len(rest)} trailing bytes after matrix record")
        return m

    @classmethod
    def from_hex(cls, text: str) -> BoolMatrix:
        try:
            data = bytes.fromhex(text.strip())
        except ValueError as exc:
            raise MatrixFormatError(str(exc)) from None
        return cls.from_bytes(data)


def record_size(n: int) -> int:
    return 9 + n * ((n + 7) // 8)


def read_matrix(data: bytes) -> tuple[BoolMatrix, bytes]:
    """Parse one matrix record from the front of ``data``; return it and the remainder."""
    data = bytes(data)
    if len(data) < 9:
        raise MatrixFormatError("truncated matrix header")
    if data[:4] != MAGIC:
        raise MatrixFormatError(f"bad magic {data[:4]!r}")
    if data[4] != FORMAT_VERSION:
        raise MatrixFormatError(f"unsupported version {data[4]}")
    n = int.from_bytes(data[5:9], "little")
    if not 1 <= n <= MAX_DIM:
        raise MatrixFormatError(f"dimension {n} out of range")
    size = record_size(n)
    if len(data) < size:
        raise MatrixFormatError(f"truncated matrix body: need {size} bytes, have {len(data)}")
    rb = (n + 7) // 8
    rows = []
    for i in range(n):
        off = 9 + i * rb
        r = int.from_bytes(data[off:off + rb], "little")
        if r >> n:
            raise MatrixFormatError(f"padding bits set in row {i}")
        rows.append(r)
    return BoolMatrix._trusted(n, tuple(rows)), data[size:]


def read_matrices(data: bytes) -> list[BoolMatrix]:
    out = []
    while data:
        m, data = read_matrix(data)
        out.append(m)
    return out


# -- arithmetic --------------------------------------------------------------


def _same_dim(a: BoolMatrix, b: BoolMatrix) -> int:
    if a.n != b.n:
        raise ValueError(f"dimension mismatch: {a.n} vs {b.n}")
    return a.n


def add(a: BoolMatrix, b: BoolMatrix) -> BoolMatrix:
    n = _same_dim(a, b)
    return BoolMatrix._trusted(n, tuple(x ^ y for x, y in zip(a.rows, b.rows)))


# from this size up, products go through a float32 BLAS matmul (exact for n < 2**24)
_BLAS_MIN_DIM = 24


def _unpack(m: BoolMatrix) -> np.ndarray:
    n = m.n
    rb = (n + 7) // 8
    buf = b"".join(r.to_bytes(rb, "little") for r in m.rows)
    bits = np.unpackbits(np.frombuffer(buf, np.uint8).reshape(n, rb), axis=1, count=n, bitorder="little")
    return bits.astype(np.float32)


def _pack(bits: np.ndarray) -> tuple[int, ...]:
    packed = np.packbits(bits.astype(np.uint8), axis=1, bitorder="little")
    return tuple(int.from_bytes(row.tobytes(), "little") for row in packed)


def mul(a: BoolMatrix, b: BoolMatrix) -> BoolMatrix:
    """GF(2) product: row i of the result is the XOR of rows k of ``b`` for set bits k of ``a[i]``."""
    n = _same_dim(a, b)
    if n >= _BLAS_MIN_DIM:
        prod = (_unpack(a) @ _unpack(b)).astype(np.int64) & 1
        return BoolMatrix._trusted(n, _pack(prod))
    brows = b.rows
    out = []
    for r in a.rows:
        acc = 0
        while r:
            low = r & -r
            acc ^= brows[low.bit_length() - 1]
            r ^= low
        out.append(acc)
    return BoolMatrix._trusted(n, tuple(out))


def power(a: BoolMatrix, e: int) -> BoolMatrix:
    """``a**e`` by square-and-multiply; ``e`` must be non-negative."""
    if e < 0:
        raise ValueError("exponent must be non-negative; invert first")
    result = BoolMatrix.identity(a.n)
    base = a
    while e:
        if e & 1:
            result = mul(result, base)
        e >>= 1
        if e:
            base = mul(base, base)
    return result


def transpose(a: BoolMatrix) -> BoolMatrix:
    n = a.n
    out = [0] * n
    for i, r in enumerate(a.rows):
        bit = 1 << i
        while r:
            low = r & -r
            out[low.bit_length() - 1] |= bit
            r ^= low
    return BoolMatrix._trusted(n, tuple(out))


def _eliminate(rows: list[int], ncols: int) -> tuple[list[int], list[int]]:
    """Gauss-Jordan on int rows in place; returns (rows, pivot columns).

    The pivot for each column is the first remaining row with that bit set.
    """
    rows = list(rows)
    m = len(rows)
    pivots = []
    r = 0
    for c in range(ncols):
        bit = 1 << c
        p = next((i for i in range(r, m) if rows[i] & bit), None)
        if p is None:
            continue
        rows[r], rows[p] = rows[p], rows[r]
        pr = rows[r]
        for i in range(m):
            if i != r and rows[i] & bit:
                rows[i] ^= pr
        pivots.append(c)
        r += 1
        if r == m:
            break
    return rows, pivots


def rank(a: BoolMatrix) -> int:
    return len(_eliminate(list(a.rows), a.n)[1])


def inverse(a: BoolMatrix) -> BoolMatrix:
    """Two-sided inverse of ``a``.

    Raises:
        NotInvertible: if ``rank(a) < a.n``.
    """
    n = a.n
    aug = [r | (1 << (n + i)) for i, r in enumerate(a.rows)]
    rows, pivots = _eliminate(aug, n)
    if len(pivots) < n:
        raise NotInvertible(f"matrix has rank {len(pivots)} < {n}")
    return BoolMatrix._trusted(n, tuple(r >> n for r in rows))


def is_invertible(a: BoolMatrix) -> bool:
    return rank(a) == a.n


def kron(a: BoolMatrix, b: BoolMatrix) -> BoolMatrix:
    """Kronecker product; entry ``(p*nb + r, q*nb + s)`` is ``a[p,q] & b[r,s]``.

    Each output row is ``spread(a[p]) * b[r]`` as an integer product: the set
    bits of ``a[p]`` are moved to multiples of ``nb``, so the shifted copies
    of ``b[r]`` never overlap and no carries occur.
    """
    na, nb = a.n, b.n
    _check_dim(na * nb)
    out = []
    for ra in a.rows:
        spread = 0
        q = 0
        while ra:
            if ra & 1:
                spread |= 1 << (q * nb)
            ra >>= 1
            q += 1
        out.extend(spread * rb for rb in b.rows)
    return BoolMatrix._trusted(na * nb, tuple(out))


def vec_col(x: BoolMatrix) -> int:
    """Column-major flattening: bit ``j*n + i`` holds ``x[i, j]``."""
    n = x.n
    out = 0
    for i, r in enumerate(x.rows):
        j = 0
        while r:
            if r & 1:
                out |= 1 << (j * n + i)
            r >>= 1
            j += 1
    return out


def unvec_col(v: int, n: int) -> BoolMatrix:
    rows = [0] * n
    k = 0
    while v:
        if v & 1:
            j, i = divmod(k, n)
            rows[i] |= 1 << j
        v >>= 1
        k += 1
    if k > n * n:
        raise ValueError(f"vector has bits beyond index {n * n - 1}")
    return BoolMatrix._trusted(n, tuple(rows))


def matvec(a: BoolMatrix, v: int) -> int:
    """``a @ v`` for a bit-vector ``v`` (bit ``k`` = component ``k``)."""
    out = 0
    for i, r in enumerate(a.rows):
        if (r & v).bit_count() & 1:
            out |= 1 << i
    return out


# -- linear systems ----------------------------------------------------------


@dataclass(frozen=True)
class LinearSystem:
    """``coeff @ x == rhs`` with ``m`` equations in ``n_unknowns`` unknowns.

    ``coeff`` holds one int per equation (bit ``k`` = coefficient of ``x_k``);
    bit ``e`` of ``rhs`` is the right-hand side of equation ``e``.
    """

    coeff: tuple[int, ...]
    rhs: int
    n_unknowns: int

    def __post_init__(self):
        if len(self.coeff) < 1 or self.n_unknowns < 1:
            raise ValueError("a linear system needs at least one equation and one unknown")
        if self.rhs < 0 or self.rhs >> len(self.coeff):
            raise ValueError("rhs has more bits than there are equations")
        if any(c < 0 or c >> self.n_unknowns for c in self.coeff):
            raise ValueError("coefficient row wider than n_unknowns")

    @property
    def n_equations(self) -> int:
        return len(self.coeff)

    @classmethod
    def from_matrix(cls, a: BoolMatrix, rhs: int) -> LinearSystem:
        return cls(a.rows, rhs, a.n)

    def stack(self, other: LinearSystem) -> LinearSystem:
        if other.n_unknowns != self.n_unknowns:
            raise ValueError("cannot stack systems with different unknown counts")
        return LinearSystem(
            self.coeff + other.coeff,
            self.rhs | (other.rhs << len(self.coeff)),
            self.n_unknowns,
        )


class SolveStatus(enum.Enum):
    UNIQUE = "unique"
    UNDERDETERMINED = "underdetermined"
    INCONSISTENT = "inconsistent"


class Solution(NamedTuple):
    status: SolveStatus
    x: int | None  # a solution when consistent (free variables set to 0)
    rank: int
    nullspace: tuple[int, ...] = ()  # basis of the homogeneous solutions, if requested


# below this many unknowns the pure-Python eliminator beats kernel dispatch
_KERNEL_THRESHOLD = 96


def solve(system: LinearSystem, *, nullspace: bool = False) -> Solution:
    """Gauss-Jordan elimination of the augmented system over GF(2).

    With ``nullspace=True`` a consistent result also carries one basis
    vector per free unknown, so every solution is ``x`` plus a combination
    of them.
    """
    u = system.n_unknowns
    aug = [c | (((system.rhs >> e) & 1) << u) for e, c in enumerate(system.coeff)]
    if u < _KERNEL_THRESHOLD:
        rows, pivots = _eliminate(aug, u)
    else:
        packed = _kernels.pack_rows(aug, u + 1)
        pivots = [int(c) for c in _kernels.gauss_jordan(packed, u)]
        rows = _kernels.unpack_rows(packed)
    rk = len(pivots)
    ubit = 1 << u
    if any(rows[i] & ubit for i in range(rk, len(rows))):
        return Solution(SolveStatus.INCONSISTENT, None, rk)
    x = 0
    for i, c in enumerate(pivots):
        if rows[i] & ubit:
            x |= 1 << c
    status = SolveStatus.UNIQUE if rk == u else SolveStatus.UNDERDETERMINED
    basis: tuple[int, ...] = ()
    if nullspace and rk < u:
        pivot_set = set(pivots)
        vecs = []
        for f in range(u):
            if f in pivot_set:
                continue
            v = 1 << f
            for i, c in enumerate(pivots):
                if (rows[i] >> f) & 1:
                    v |= 1 << c
            vecs.append(v)
        basis = tuple(vecs)
    return Solution(status, x, rk, basis)


def transpose_bits(vecs: Sequence[int], length: int) -> list[int]:
    """Transpose a list of ``d`` bit-vectors of ``length`` bits into ``length`` vectors of ``d`` bits."""
    d = len(vecs)
    if d == 0:
        return [0] * length
    nbytes = (length + 7) // 8
    buf = b"".join(v.to_bytes(nbytes, "little") for v in vecs)
    bits = np.unpackbits(np.frombuffer(buf, np.uint8).reshape(d, nbytes), axis=1, count=length, bitorder="little")
    return list(_pack(bits.T))


# -- random sampling ---------------------------------------------------------


def random_matrix(prng: DetPrng, n: int) -> BoolMatrix:
    """Draw each row as ``prng.bits(n)``, row 0 first."""
    _check_dim(n)
    return BoolMatrix._trusted(n, tuple(prng.bits(n) for _ in range(n)))


def random_invertible(prng: DetPrng, n: int, max_tries: int = 256) -> BoolMatrix:
    """Rejection-sample :func:`random_matrix` until it is invertible.

    Raises:
        Exhausted: after ``max_tries`` singular draws.
    """
    return random_invertible_counted(prng, n, max_tries)[0]


def random_invertible_counted(prng: DetPrng, n: int, max_tries: int = 256) -> tuple[BoolMatrix, int]:
    """Like :func:`random_invertible` but also return the number of draws used."""
    if max_tries < 1:
        raise ValueError("max_tries must be >= 1")
    for tries in range(1, max_tries + 1):
        m = random_matrix(prng, n)
        if is_invertible(m):
            return m, tries
    raise Exhausted(f"no invertible {n}x{n} matrix in {max_tries} draws")


def identity(n: int) -> BoolMatrix:
    return BoolMatrix.identity(n)


def zeros(n: int) -> BoolMatrix:
    return BoolMatrix.zeros(n)


def product(mats: Sequence[BoolMatrix]) -> BoolMatrix:
    """Left-to-right product of a non-empty sequence."""
    it = iter(mats)
    acc = next(it)
    for m in it:
        acc = mul(acc, m)
    return acc
