"""Differential chosen-plaintext and chosen-ciphertext key recovery.

Two sessions that share ``(K, V)`` encrypt blocks at the same index with the
same ``K V K^i`` mask, so the mask cancels in the XOR of the ciphertexts::

    dC_i = K dP_i K^(n+i)

Feeding the same invertible difference ``dP`` at indices ``i`` and ``i+1``
gives ``dC_(i+1) = dC_i K``, hence ``K = dC_i^-1 dC_(i+1)``. With ``K``
known, every observed block is a linear equation in ``V``::

    V K^(n+i) + K^-1 V = K^-2 (C_i + K P_i K^(n+i)) K^-i

Summing two such equations cancels the ``K^-1 V`` term and solves directly
for ``V`` when ``I + K^(j-i)`` is invertible; otherwise the equations are
lifted to an ``n^2``-unknown system and solved jointly.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

from .cipher import Direction
from .gf2linalg import (
    BoolMatrix,
    LinearSystem,
    NotInvertible,
    SolveStatus,
    add,
    inverse,
    is_invertible,
    kron,
    mul,
    power,
    random_invertible,
    random_matrix,
    solve,
    transpose,
    transpose_bits,
    unvec_col,
    vec_col,
)
from .oracle import Oracle, query_decrypt, query_encrypt
from .prng import DetPrng


class SingularSystem(ArithmeticError):
    """``I + K^(j-i)`` is singular, so the summed equation cannot be solved directly."""


class Underdetermined(ArithmeticError):
    """The stacked equations leave ``V`` ambiguous."""


class InconsistentRecords(ArithmeticError):
    """No ``V`` satisfies all records; they do not come from one ``(K, V)``."""


class VerificationFailed(Exception):
    """Recovered secrets do not reproduce the observed oracle outputs."""

    def __init__(self, msg: str, transcript: AttackTranscript | None = None):
        super().__init__(msg)
        self.transcript = transcript


class Record(NamedTuple):
    """One plaintext/ciphertext block pair at 1-based index ``i``."""

    i: int
    p: BoolMatrix
    c: BoolMatrix


@dataclass(frozen=True)
class ChosenPlaintextPlan:
    """Two pairs of chosen blocks with the same difference at ``i`` and ``i+1``.

    The same plan shape drives the chosen-ciphertext attack, in which case
    the blocks are ciphertexts.
    """

    i: int
    p1_i: BoolMatrix
    p1_next: BoolMatrix
    p2_i: BoolMatrix
    p2_next: BoolMatrix
    delta: BoolMatrix

    @property
    def n(self) -> int:
        return self.delta.n

    @property
    def chosen_bits(self) -> int:
        return 4 * self.n * self.n


def make_plan(prng: DetPrng, n: int, i: int = 1) -> ChosenPlaintextPlan:
    """Draw an invertible difference, then the two session-1 blocks."""
    if i < 1:
        raise ValueError("block indices start at 1")
    delta = random_invertible(prng, n)
    p1_i = random_matrix(prng, n)
    p1_next = random_matrix(prng, n)
    return ChosenPlaintextPlan(i, p1_i, p1_next, p1_i + delta, p1_next + delta, delta)


def recover_session_key(dc_i: BoolMatrix, dc_next: BoolMatrix) -> BoolMatrix:
    """``K = dC_i^-1 dC_(i+1)``; raises :class:`NotInvertible` if ``dC_i`` is singular."""
    if dc_i.n != dc_next.n:
        raise ValueError("differentials differ in dimension")
    return mul(inverse(dc_i), dc_next)


def recover_session_key_cca(dp_i: BoolMatrix, dp_next: BoolMatrix) -> BoolMatrix:
    """Chosen-ciphertext variant: ``K^-1 = dP_i^-1 dP_(i+1)``, inverted to ``K``."""
    if dp_i.n != dp_next.n:
        raise ValueError("differentials differ in dimension")
    return inverse(mul(inverse(dp_i), dp_next))


def _record_rhs(k: BoolMatrix, k_inv: BoolMatrix, rec: Record) -> BoolMatrix:
    """Right-hand side ``K^-2 (C_i + K P_i K^(n+i)) K^-i`` of one record."""
    n = k.n
    masked = rec.c + mul(mul(k, rec.p), power(k, n + rec.i))
    return mul(mul(power(k_inv, 2), masked), power(k_inv, rec.i))


def recover_v_direct(k: BoolMatrix, rec_i: Record, rec_j: Record) -> BoolMatrix:
    """Solve the sum of two records' equations for ``V``.

    ``V = S (I + K^(j-i))^-1 K^-(n+i)`` where ``S`` is the summed right-hand
    side. Both records must come from one session with ``j > i``.

    Raises:
        SingularSystem: ``I + K^(j-i)`` is singular (always so for ``K = I``).
    """
    if rec_j.i <= rec_i.i:
        raise ValueError("records must have increasing indices")
    n = k.n
    k_inv = inverse(k)
    s = _record_rhs(k, k_inv, rec_i) + _record_rhs(k, k_inv, rec_j)
    try:
        g_inv = inverse(BoolMatrix.identity(n) + power(k, rec_j.i - rec_i.i))
    except NotInvertible:
        raise SingularSystem(f"I + K^{rec_j.i - rec_i.i} is singular") from None
    return mul(mul(s, g_inv), power(k_inv, n + rec_i.i))


def sylvester_system(k: BoolMatrix, rec: Record, k_inv: BoolMatrix | None = None) -> LinearSystem:
    """Lift one record to ``n^2`` equations on ``vec_col(V)``.

    The coefficient matrix is ``kron((K^(n+i))^T, I) + kron(I, K^-1)``.
    """
    n = k.n
    k_inv = inverse(k) if k_inv is None else k_inv
    eye = BoolMatrix.identity(n)
    coeff = add(kron(transpose(power(k, n + rec.i)), eye), kron(eye, k_inv))
    return LinearSystem.from_matrix(coeff, vec_col(_record_rhs(k, k_inv, rec)))


class SylvesterAccumulator:
    """Solve the stacked per-record equations for ``V`` one record at a time.

    After the first record the solution set is kept as a particular solution
    plus a null-space basis; each later record only has to pin down the
    coefficients of that basis. The result is the same as eliminating the
    full stacked system, without redoing the ``n^2``-unknown elimination.
    """

    def __init__(self, k: BoolMatrix):
        self.k = k
        self.k_inv = inverse(k)
        self.n = k.n
        self.records: list[Record] = []
        self.particular: BoolMatrix | None = None
        self.basis: list[BoolMatrix] = []

    @property
    def unique(self) -> bool:
        return self.particular is not None and not self.basis

    def _apply(self, rec: Record, v: BoolMatrix) -> BoolMatrix:
        # homogeneous part of the record equation: V K^(n+i) + K^-1 V
        return mul(v, power(self.k, self.n + rec.i)) + mul(self.k_inv, v)

    def add(self, rec: Record) -> None:
        """Fold in one record.

        Raises:
            InconsistentRecords: the records admit no common ``V``.
        """
        n = self.n
        if self.particular is None:
            sol = solve(sylvester_system(self.k, rec, self.k_inv), nullspace=True)
            if sol.status is SolveStatus.INCONSISTENT:
                raise InconsistentRecords(f"record at index {rec.i} has no solution")
            self.particular = unvec_col(sol.x, n)
            self.basis = [unvec_col(b, n) for b in sol.nullspace]
            self.records.append(rec)
            return
        self.records.append(rec)
        if not self.basis:
            if self._apply(rec, self.particular) != _record_rhs(self.k, self.k_inv, rec):
                raise InconsistentRecords(f"record at index {rec.i} contradicts earlier ones")
            return
        residual = vec_col(_record_rhs(self.k, self.k_inv, rec) + self._apply(rec, self.particular))
        images = [vec_col(self._apply(rec, b)) for b in self.basis]
        d = len(images)
        # equation e: sum_k c_k * bit_e(images[k]) == bit_e(residual)
        rows = transpose_bits(images, n * n)
        sol = solve(LinearSystem(tuple(rows), residual, d), nullspace=True)
        if sol.status is SolveStatus.INCONSISTENT:
            raise InconsistentRecords(f"record at index {rec.i} contradicts earlier ones")

        def combine(bits: int) -> BoolMatrix:
            acc = BoolMatrix.zeros(n)
            for kk in range(d):
                if (bits >> kk) & 1:
                    acc = acc + self.basis[kk]
            return acc

        self.particular = self.particular + combine(sol.x)
        self.basis = [combine(z) for z in sol.nullspace]

    def solution(self) -> BoolMatrix:
        if not self.unique:
            raise Underdetermined(f"{len(self.basis)} free directions remain after {len(self.records)} records")
        return self.particular


def recover_v_sylvester(k: BoolMatrix, records: Sequence[Record]) -> BoolMatrix:
    """Solve all records' equations jointly for ``V``.

    Raises:
        Underdetermined: ``V`` is not unique given these records.
        InconsistentRecords: no ``V`` fits every record.
    """
    if not records:
        raise ValueError("need at least one record")
    acc = SylvesterAccumulator(k)
    for rec in records:
        acc.add(rec)
    return acc.solution()


def encrypt_at(k: BoolMatrix, v: BoolMatrix, i: int, p: BoolMatrix) -> BoolMatrix:
    """Encrypt one block at index ``i`` from scratch, without a running state."""
    n = k.n
    m = mul(mul(k, v), power(k, i))
    return mul(mul(k, p + m), power(k, n + i)) + m


# -- campaign driver ---------------------------------------------------------


class VPath(enum.Enum):
    DIRECT = "Direct"
    FALLBACK = "Fallback"
    FAILED = "Failed"


@dataclass
class AttackTranscript:
    mode: str
    n: int
    index: int
    recovered_k: BoolMatrix | None = None
    recovered_v: BoolMatrix | None = None
    chosen_bits: int = 0
    v_path: VPath = VPath.FAILED
    sessions_used: int = 0
    extra_records: int = 0
    verified: bool = False
    records: list[tuple[Record, Record]] = field(default_factory=list, repr=False)

    def to_text(self) -> str:
        """``key=value`` lines; matrices in the hex record form."""
        def hx(m):
            return "none" if m is None else m.to_hex()

        lines = [
            f"mode={self.mode}",
            f"n={self.n}",
            f"index={self.index}",
            f"recovered_k={hx(self.recovered_k)}",
            f"recovered_v={'unresolved' if self.recovered_v is None else self.recovered_v.to_hex()}",
            f"chosen_bits={self.chosen_bits}",
            f"v_path={self.v_path.value}",
            f"sessions_used={self.sessions_used}",
            f"extra_records={self.extra_records}",
            f"verified={str(self.verified).lower()}",
        ]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> AttackTranscript:
        kv = dict(line.split("=", 1) for line in text.splitlines() if "=" in line)

        def mat(s):
            return None if s in ("none", "unresolved") else BoolMatrix.from_hex(s)

        return cls(
            mode=kv["mode"],
            n=int(kv["n"]),
            index=int(kv["index"]),
            recovered_k=mat(kv["recovered_k"]),
            recovered_v=mat(kv["recovered_v"]),
            chosen_bits=int(kv["chosen_bits"]),
            v_path=VPath(kv["v_path"]),
            sessions_used=int(kv["sessions_used"]),
            extra_records=int(kv["extra_records"]),
            verified=kv["verified"] == "true",
        )


def _attacker_prng(seed: int | None, attacker_seed: int | None) -> DetPrng:
    if attacker_seed is not None:
        return DetPrng(attacker_seed)
    # keep the attacker's draws unrelated to the oracle's secrets
    return DetPrng(~(seed or 0) & ((1 << 64) - 1))


def _as_record(i: int, chosen: BoolMatrix, observed: BoolMatrix, cca: bool) -> Record:
    return Record(i, observed, chosen) if cca else Record(i, chosen, observed)


def _run(
    oracle: Oracle,
    n: int,
    seed: int | None,
    *,
    cca: bool,
    index: int,
    max_extra_records: int,
    attacker_seed: int | None,
) -> AttackTranscript:
    if oracle.cfg.n != n:
        raise ValueError(f"oracle uses n={oracle.cfg.n}, attack asked for n={n}")
    direction = Direction.DECRYPT if cca else Direction.ENCRYPT
    query: Callable = query_decrypt if cca else query_encrypt
    rng = _attacker_prng(seed, attacker_seed)
    tr = AttackTranscript(mode="cca" if cca else "cpa", n=n, index=index)

    s1 = oracle.open_session(seed, direction)
    s2 = oracle.open_session(seed, direction)
    tr.sessions_used = 2
    block_bits = n * n

    def submit_pair(x1: BoolMatrix, x2: BoolMatrix) -> tuple[Record, Record]:
        i = s1.state.i
        y1 = query(s1, x1)
        y2 = query(s2, x2)
        tr.chosen_bits += 2 * block_bits
        pair = (_as_record(i, x1, y1, cca), _as_record(i, x2, y2, cca))
        tr.records.append(pair)
        return pair

    # walk both sessions up to the target index with identical filler
    while s1.state.i < index:
        filler = random_matrix(rng, n)
        submit_pair(filler, filler)

    plan = make_plan(rng, n, index)
    a1, a2 = submit_pair(plan.p1_i, plan.p2_i)
    b1, b2 = submit_pair(plan.p1_next, plan.p2_next)

    try:
        if cca:
            k = recover_session_key_cca(a1.p + a2.p, b1.p + b2.p)
        else:
            k = recover_session_key(a1.c + a2.c, b1.c + b2.c)
    except NotInvertible:
        raise VerificationFailed("output differential is singular: sessions do not share (K, V)", tr) from None
    tr.recovered_k = k
    if not is_invertible(k):
        raise VerificationFailed("recovered K is singular: sessions do not share (K, V)", tr)

    try:
        tr.recovered_v = recover_v_direct(k, a1, b1)
        tr.v_path = VPath.DIRECT
    except SingularSystem:
        acc = SylvesterAccumulator(k)
        try:
            acc.add(a1)
            acc.add(b1)
            while not acc.unique and tr.extra_records < max_extra_records:
                x = random_matrix(rng, n)
                r1, _ = submit_pair(x, x)
                tr.extra_records += 1
                acc.add(r1)
        except InconsistentRecords as exc:
            raise VerificationFailed(f"records admit no V: {exc}", tr) from None
        if acc.unique:
            tr.recovered_v = acc.solution()
            tr.v_path = VPath.FALLBACK
        else:
            tr.v_path = VPath.FAILED

    _verify(tr, k)
    return tr


def _verify(tr: AttackTranscript, k: BoolMatrix) -> None:
    n = tr.n
    if tr.recovered_v is not None:
        for pair in tr.records:
            for rec in pair:
                if encrypt_at(k, tr.recovered_v, rec.i, rec.p) != rec.c:
                    raise VerificationFailed(f"re-encryption mismatch at index {rec.i}", tr)
    else:
        # V unknown: check K against every differential instead
        for r1, r2 in tr.records:
            dp, dc = r1.p + r2.p, r1.c + r2.c
            if mul(mul(k, dp), power(k, n + r1.i)) != dc:
                raise VerificationFailed(f"differential mismatch at index {r1.i}", tr)
    tr.verified = True


def run_cpa(
    oracle: Oracle,
    n: int,
    seed: int | None,
    *,
    index: int = 1,
    max_extra_records: int = 4,
    attacker_seed: int | None = None,
) -> AttackTranscript:
    """Differential chosen-plaintext attack on two sessions opened with ``seed``.

    ``seed`` is the tampered generator seed; pass ``None`` for oracles that
    reuse secrets on their own (resumable mode). When the direct ``V`` solve
    is singular, up to ``max_extra_records`` further block pairs are
    submitted for the joint solve.

    Raises:
        VerificationFailed: the recovered secrets do not explain the
            observed ciphertexts, i.e. the sessions did not share ``(K, V)``.
    """
    return _run(oracle, n, seed, cca=False, index=index,
                max_extra_records=max_extra_records, attacker_seed=attacker_seed)


def run_cca(
    oracle: Oracle,
    n: int,
    seed: int | None,
    *,
    index: int = 1,
    max_extra_records: int = 4,
    attacker_seed: int | None = None,
) -> AttackTranscript:
    """Chosen-ciphertext counterpart of :func:`run_cpa` against a decryption oracle."""
    return _run(oracle, n, seed, cca=True, index=index,
                max_extra_records=max_extra_records, attacker_seed=attacker_seed)
