import itertools

import pytest

from conftest import make_oracle
from feam.cipher import CipherState, Direction, MasterKey, decrypt_block, encrypt_block, keygen_session
from feam.gf2linalg import BoolMatrix, random_invertible, random_matrix
from feam.oracle import (
    Oracle,
    OracleConfig,
    OracleMode,
    TamperRejected,
    open_session,
    query_decrypt,
    query_encrypt,
)
from feam.prng import DetPrng


def test_config_checks_master_size():
    master = MasterKey.from_matrix(BoolMatrix.identity(4))
    with pytest.raises(ValueError):
        OracleConfig(5, OracleMode.INSECURE, master)
    assert OracleConfig(4, "secure", master).mode is OracleMode.SECURE


def test_insecure_same_seed_same_secrets():
    o = make_oracle(8)
    a = open_session(o, 1234)
    b = open_session(o, 1234)
    c = open_session(o, 1235)
    assert a.secrets == b.secrets
    assert a.secrets != c.secrets
    assert a.session_id != b.session_id


def test_insecure_secrets_survive_distribution():
    # the session the oracle runs under is what the receiver recovers
    o = make_oracle(8)
    h = open_session(o, 77)
    assert h.secrets == keygen_session(DetPrng(77), 8)


def test_insecure_clock_seeds_when_untampered():
    ticks = itertools.count(500)
    o = make_oracle(6, clock=lambda: next(ticks))
    a, b = open_session(o), open_session(o)
    assert a.secrets == keygen_session(DetPrng(500), 6)
    assert b.secrets == keygen_session(DetPrng(501), 6)


def test_secure_mode_is_fresh_and_rejects_seeds():
    o = make_oracle(8, OracleMode.SECURE)
    with pytest.raises(TamperRejected):
        open_session(o, 1)
    seen = set()
    for _ in range(100):
        a, b = open_session(o), open_session(o)
        assert a.secrets != b.secrets
        seen.add(a.secrets)
        seen.add(b.secrets)
    assert len(seen) == 200


def test_resumable_reuses_previous_secrets():
    o = make_oracle(8, OracleMode.RESUMABLE)
    a = open_session(o, 5)
    b = open_session(o, 6)
    c = open_session(o)
    assert a.secrets == b.secrets == c.secrets == o.last_secrets
    fresh = make_oracle(8, OracleMode.RESUMABLE)
    assert open_session(fresh, 6).secrets != a.secrets


def test_queries_follow_the_cipher_and_log_indices():
    o = make_oracle(4)
    h = open_session(o, 9)
    ref = CipherState(h.secrets)
    rng = DetPrng(1)
    for _ in range(3):
        p = random_matrix(rng, 4)
        assert query_encrypt(h, p) == encrypt_block(ref, p)
    assert [i for i, _, _ in h.transcript] == [1, 2, 3]
    lines = h.log_lines()
    assert lines[0].startswith(f"session={h.session_id} i=1 dir=e in=")
    assert "out=" in lines[0]


def test_decryption_oracle():
    o = make_oracle(5)
    h = open_session(o, 3, Direction.DECRYPT)
    ref = CipherState(h.secrets, Direction.DECRYPT)
    c = random_matrix(DetPrng(2), 5)
    assert query_decrypt(h, c) == decrypt_block(ref, c)
    assert h.log_lines()[0].split()[2] == "dir=d"
    with pytest.raises(ValueError):
        query_encrypt(h, c)


def test_direct_construction():
    master = MasterKey.from_matrix(random_invertible(DetPrng(0), 3))
    o = Oracle(OracleConfig(3, OracleMode.INSECURE, master), clock=lambda: 1)
    assert o.last_secrets is None
    o.open_session()
    assert o.last_secrets is not None
