"""Session-key strength: group order of GL(n,2), element orders, weak-key screening.

The cipher's per-block state ``(K^(n+i), K V K^i)`` repeats with period
``o(K)``, the multiplicative order of ``K``. A key of tiny order (``K = I``
has order 1) gives a cipher with a tiny period, so keys are screened
against a minimum order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from .gf2linalg import BoolMatrix, NotInvertible, inverse, is_invertible, mul, power

# exact divisor descent below this size; bounded search above
EXACT_ORDER_MAX_N = 16
# below this threshold screening just walks K, K^2, ...
_DIRECT_SCREEN_MAX = 64


class OrderBoundExceeded(Exception):
    """The order of the key is larger than the search bound."""

    def __init__(self, bound: int):
        super().__init__(f"order exceeds {bound}")
        self.bound = bound


def group_order(n: int) -> int:
    """``|GL(n,2)| = prod_{i<n} (2^n - 2^i)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return math.prod((1 << n) - (1 << i) for i in range(n))


def _factor_small(m: int) -> dict[int, int]:
    out: dict[int, int] = {}
    d = 2
    while d * d <= m:
        while m % d == 0:
            out[d] = out.get(d, 0) + 1
            m //= d
        d += 1 if d == 2 else 2
    if m > 1:
        out[m] = out.get(m, 0) + 1
    return out


@lru_cache(maxsize=None)
def group_order_factors(n: int) -> dict[int, int]:
    """Prime factorization of ``group_order(n)``.

    Uses ``2^n - 2^i = 2^i (2^(n-i) - 1)``, so only Mersenne-type numbers
    up to ``2^n - 1`` need trial division, which is only cheap for
    ``n <= 16``; larger sizes raise ``ValueError``.
    """
    if n > EXACT_ORDER_MAX_N:
        raise ValueError(f"factorization is only supported for n <= {EXACT_ORDER_MAX_N}")
    fac: dict[int, int] = {2: n * (n - 1) // 2} if n > 1 else {}
    for k in range(1, n + 1):
        for p, e in _factor_small((1 << k) - 1).items():
            fac[p] = fac.get(p, 0) + e
    return fac


def _order_by_descent(k: BoolMatrix) -> int:
    """Strip each prime of the group order with one exponentiation per prime."""
    order = group_order(k.n)
    for p, e in group_order_factors(k.n).items():
        order //= p**e
        g = power(k, order)
        while not g.is_identity():
            g = power(g, p)
            order *= p
    return order


def _order_at_most(k: BoolMatrix, limit: int) -> int | None:
    cur = k
    for e in range(1, limit + 1):
        if cur.is_identity():
            return e
        cur = mul(cur, k)
    return None


def _order_by_search(k: BoolMatrix, bound: int) -> int:
    """Smallest ``e <= bound`` with ``K^e = I`` by baby-step giant-step."""
    step = math.isqrt(bound - 1) + 1 if bound > 1 else 1
    baby: dict[BoolMatrix, int] = {}
    # K^-j for j in [0, step); an order below step shows up directly
    cur = BoolMatrix.identity(k.n)
    k_inv = inverse(k)
    for j in range(step):
        if j and cur.is_identity():
            return j
        baby.setdefault(cur, j)
        cur = mul(cur, k_inv)
    giant = power(k, step)
    cur = giant
    t = 1
    while t * step <= bound:
        j = baby.get(cur)
        if j is not None and t * step + j <= bound:
            return t * step + j
        cur = mul(cur, giant)
        t += 1
    raise OrderBoundExceeded(bound)


def element_order(k: BoolMatrix, bound: int = 1 << 20) -> int:
    """Multiplicative order of ``k`` in GL(n,2).

    For ``n <= 16`` the order is found exactly by descending through the
    divisors of the group order, whatever ``bound`` is. Larger keys are
    searched up to ``bound``.

    Raises:
        NotInvertible: ``k`` is singular.
        OrderBoundExceeded: ``n > 16`` and the order exceeds ``bound``.
    """
    if bound < 1:
        raise ValueError("bound must be >= 1")
    if not is_invertible(k):
        raise NotInvertible("a singular matrix has no multiplicative order")
    if k.n <= EXACT_ORDER_MAX_N:
        o = _order_by_descent(k)
    else:
        o = _order_by_search(k, bound)
    assert group_order(k.n) % o == 0, "order must divide |GL(n,2)|"
    return o


@dataclass(frozen=True)
class ScreenResult:
    accepted: bool
    order: int | None  # None when the search bound was exceeded
    bound_exceeded: bool = False


def screen_key(k: BoolMatrix, min_order: int = 1 << 16) -> ScreenResult:
    """Reject keys whose order is at most ``min_order``.

    For large ``n`` the order search is bounded by ``min_order``; running
    past it proves the order is larger, which counts as acceptance.
    """
    if min_order <= _DIRECT_SCREEN_MAX:
        if not is_invertible(k):
            raise NotInvertible("a singular matrix has no multiplicative order")
        o = _order_at_most(k, max(min_order, 0))
        if o is not None:
            return ScreenResult(False, o)
        if k.n > EXACT_ORDER_MAX_N:
            return ScreenResult(True, None, True)
    try:
        o = element_order(k, bound=max(min_order, 1))
    except OrderBoundExceeded:
        return ScreenResult(True, None, True)
    return ScreenResult(o > min_order, o)


@dataclass(frozen=True)
class KeyAnalysis:
    n: int
    order: int | None
    group_order: int
    weak: bool
    bound_exceeded: bool

    def to_text(self) -> str:
        lines = [
            f"n={self.n}",
            f"order={'>' + str(self.order) if self.bound_exceeded else self.order}",
            f"group_order={self.group_order}",
            f"verdict={'Reject' if self.weak else 'Accept'}",
        ]
        return "\n".join(lines) + "\n"


def analyze_key(k: BoolMatrix, min_order: int = 1 << 16, bound: int | None = None) -> KeyAnalysis:
    bound = max(min_order, 1) if bound is None else bound
    try:
        o: int | None = element_order(k, bound)
        exceeded = False
    except OrderBoundExceeded:
        o, exceeded = bound, True
    weak = not exceeded and o is not None and o <= min_order
    return KeyAnalysis(k.n, o, group_order(k.n), weak, exceeded)
