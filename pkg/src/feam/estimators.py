"""scikit-learn style front ends.

:class:`FEAMCipher` is a transformer: ``fit`` draws session secrets,
``transform`` encrypts and ``inverse_transform`` decrypts.
:class:`DifferentialKeyRecovery` is fitted against an oracle and exposes the
recovered secrets as fitted attributes. Both support ``get_params`` /
``set_params`` and ``clone``.
"""

from __future__ import annotations

import random

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_blocks, check_dimension, check_seed
from .attacks import AttackTranscript, VPath, run_cca, run_cpa
from .cipher import (
    CipherState,
    Direction,
    SessionSecrets,
    decrypt_block,
    decrypt_stream,
    encrypt_block,
    encrypt_stream,
    keygen_session,
)
from .oracle import Oracle
from .prng import DetPrng


class FEAMCipher(TransformerMixin, BaseEstimator):
    """Improved FEA-M encryptor.

    Parameters
    ----------
    n : int
        Block and key dimension.
    seed : int or None
        Seed for the session-secret generator. ``None`` draws one from OS
        entropy; a fixed seed makes ``fit`` reproducible.
    strict : bool
        Redraw session keys whose order is at most ``min_order``.
    min_order : int
        Threshold for ``strict``.

    Attributes
    ----------
    secrets_ : SessionSecrets
    seed_ : int
        Seed actually used.
    """

    def __init__(self, n=64, seed=None, strict=False, min_order=1 << 16):
        self.n = n
        self.seed = seed
        self.strict = strict
        self.min_order = min_order

    def fit(self, X=None, y=None):
        n = check_dimension(self.n)
        seed = check_seed(self.seed)
        if seed is None:
            seed = random.SystemRandom().getrandbits(64)
        self.seed_ = seed
        self.secrets_ = keygen_session(DetPrng(seed), n, strict=self.strict, min_order=self.min_order)
        return self

    @classmethod
    def from_secrets(cls, secrets: SessionSecrets) -> FEAMCipher:
        """A fitted cipher wrapping existing secrets."""
        est = cls(n=secrets.n)
        est.secrets_ = secrets
        est.seed_ = None
        return est

    def transform(self, X):
        """Encrypt ``X``.

        ``bytes`` go through the padded stream format; a sequence of blocks
        (matrices or ``(k, n, n)`` 0/1 arrays) is encrypted at indices
        ``1..k`` and returned as a list of matrices.
        """
        check_is_fitted(self, "secrets_")
        if isinstance(X, (bytes, bytearray, memoryview)):
            return encrypt_stream(self.secrets_, bytes(X))
        st = CipherState(self.secrets_, Direction.ENCRYPT)
        return [encrypt_block(st, b) for b in check_blocks(X, self.secrets_.n)]

    def inverse_transform(self, X):
        check_is_fitted(self, "secrets_")
        if isinstance(X, (bytes, bytearray, memoryview)):
            return decrypt_stream(self.secrets_, bytes(X))
        st = CipherState(self.secrets_, Direction.DECRYPT)
        return [decrypt_block(st, b) for b in check_blocks(X, self.secrets_.n)]


class DifferentialKeyRecovery(BaseEstimator):
    """Recover ``(K, V)`` from an oracle whose secret generation can be tampered with.

    Parameters
    ----------
    attack : {"cpa", "cca"}
    index : int
        Block index at which the chosen difference is injected.
    max_extra_records : int
        Extra block pairs allowed for the joint ``V`` solve.
    attacker_seed : int or None
        Seed for the attacker's own chosen blocks.

    Attributes
    ----------
    transcript_ : AttackTranscript
    key_ : BoolMatrix
    initial_matrix_ : BoolMatrix or None
        ``None`` when ``V`` could not be pinned down.
    """

    def __init__(self, attack="cpa", index=1, max_extra_records=4, attacker_seed=None):
        self.attack = attack
        self.index = index
        self.max_extra_records = max_extra_records
        self.attacker_seed = attacker_seed

    def fit(self, oracle: Oracle, tamper_seed=None):
        """Run the attack. Raises :class:`~feam.attacks.VerificationFailed` on failure."""
        if self.attack not in ("cpa", "cca"):
            raise ValueError(f"attack must be 'cpa' or 'cca', got {self.attack!r}")
        if self.index < 1:
            raise ValueError("index must be >= 1")
        if self.max_extra_records < 0:
            raise ValueError("max_extra_records must be >= 0")
        runner = run_cpa if self.attack == "cpa" else run_cca
        tr: AttackTranscript = runner(
            oracle,
            oracle.cfg.n,
            check_seed(tamper_seed, "tamper_seed"),
            index=self.index,
            max_extra_records=self.max_extra_records,
            attacker_seed=check_seed(self.attacker_seed, "attacker_seed"),
        )
        self.transcript_ = tr
        self.key_ = tr.recovered_k
        self.initial_matrix_ = tr.recovered_v
        return self

    @property
    def v_path_(self) -> VPath:
        check_is_fitted(self, "transcript_")
        return self.transcript_.v_path

    def recovered_cipher(self) -> FEAMCipher:
        """A fitted :class:`FEAMCipher` holding the recovered secrets."""
        check_is_fitted(self, "transcript_")
        if self.initial_matrix_ is None:
            raise ValueError("V was not recovered; cannot build a cipher")
        return FEAMCipher.from_secrets(SessionSecrets.from_kv(self.key_, self.initial_matrix_))
