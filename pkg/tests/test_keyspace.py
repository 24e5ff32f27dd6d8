import pytest

import naive
from feam.cipher import CipherState, SessionSecrets, encrypt_block
from feam.gf2linalg import BoolMatrix, NotInvertible, inverse, mul, power, random_invertible, random_matrix
from feam.keyspace import (
    OrderBoundExceeded,
    analyze_key,
    element_order,
    group_order,
    group_order_factors,
    screen_key,
)
from feam.prng import DetPrng


def permutation_matrix(perm):
    """Row i has its single one in column perm[i]."""
    return BoolMatrix(len(perm), [1 << p for p in perm])


def cycles(*lengths):
    perm, base = [], 0
    for ln in lengths:
        perm += [base + (j + 1) % ln for j in range(ln)]
        base += ln
    return permutation_matrix(perm)


def naive_order(k, limit):
    cur = k
    for e in range(1, limit + 1):
        if cur.is_identity():
            return e
        cur = mul(cur, k)
    return None


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_group_order_matches_enumeration(n):
    count = sum(naive.rank(m) == n for m in naive.all_matrices(n))
    assert group_order(n) == count


def test_group_order_known_values():
    assert [group_order(n) for n in (1, 2, 3, 4)] == [1, 6, 168, 20160]
    with pytest.raises(ValueError):
        group_order(0)


@pytest.mark.parametrize("n", [1, 2, 5, 8, 13, 16])
def test_factorization_multiplies_back(n):
    prod = 1
    for p, e in group_order_factors(n).items():
        assert all(p % d for d in range(2, int(p**0.5) + 1))
        prod *= p**e
    assert prod == group_order(n)


def test_factorization_limited_to_small_n():
    with pytest.raises(ValueError):
        group_order_factors(17)


def test_identity_and_swap():
    assert element_order(BoolMatrix.identity(7)) == 1
    assert element_order(permutation_matrix([1, 0])) == 2


def test_singular_has_no_order():
    with pytest.raises(NotInvertible):
        element_order(BoolMatrix.zeros(3))
    with pytest.raises(ValueError):
        element_order(BoolMatrix.identity(3), bound=0)


def test_minimality_witness(prng):
    for n in (2, 3, 5, 8, 12, 16):
        for _ in range(5):
            k = random_invertible(prng, n)
            o = element_order(k)
            assert group_order(n) % o == 0
            assert power(k, o).is_identity()
            for p in group_order_factors(n):
                if o % p == 0:
                    assert not power(k, o // p).is_identity()


def test_descent_matches_naive_iteration(prng):
    for _ in range(50):
        k = random_invertible(prng, 6)
        assert element_order(k) == naive_order(k, 63)


@pytest.mark.parametrize("lengths,order", [((3, 17), 51), ((5, 7, 8), 280), ((20,), 20), ((11, 13), 143)])
def test_bounded_search_for_large_n(lengths, order):
    k = cycles(*lengths)
    assert k.n > 16
    assert element_order(k, bound=1000) == order
    assert naive_order(k, 1000) == order
    with pytest.raises(OrderBoundExceeded):
        element_order(k, bound=order - 1)
    assert element_order(k, bound=order) == order


def test_bounded_search_conjugated(prng):
    # conjugation keeps the order but hides the permutation structure
    base = cycles(9, 16)
    g = random_invertible(prng, 25)
    k = g @ base @ inverse(g)
    assert element_order(k, bound=200) == 144


def test_order_is_keystream_period(prng):
    for n in (3, 4, 5):
        s = SessionSecrets.from_kv(random_invertible(prng, n), random_matrix(prng, n))
        o = element_order(s.k)
        st_ = CipherState(s)
        states = []
        for _ in range(2 * o + 3):
            states.append((st_.e, st_.m))
            encrypt_block(st_, BoolMatrix.zeros(n))
        for i in range(o + 3):
            assert states[i] == states[i + o]


def test_screen_rejects_identity():
    r = screen_key(BoolMatrix.identity(8), 1)
    assert not r.accepted and r.order == 1


def test_screen_postcondition(prng):
    for _ in range(200):
        k = random_invertible(prng, 5)
        r = screen_key(k, 6)
        witnessed = any(power(k, e).is_identity() for e in range(1, 7))
        assert r.accepted is not witnessed


def test_screen_large_key_sets_bound_flag():
    r = screen_key(cycles(31, 3), 50)
    assert r.accepted and r.bound_exceeded and r.order is None
    r = screen_key(cycles(31, 3), 100)
    assert not r.accepted and r.order == 93


def test_screen_rejection_rate_n8(prng):
    trials = 2000
    rejected = sum(not screen_key(random_invertible(prng, 8), 4).accepted for _ in range(trials))
    print(f"rejection rate n=8 min_order=4: {rejected / trials:.4f}")
    assert rejected / trials < 0.05


def test_analyze_key_report():
    a = analyze_key(BoolMatrix.identity(4))
    assert a.weak and a.order == 1
    text = a.to_text()
    assert "order=1" in text and "verdict=Reject" in text and "group_order=20160" in text
    b = analyze_key(cycles(31, 3), min_order=10, bound=50)
    assert b.bound_exceeded and not b.weak
    assert "order=>50" in b.to_text()
