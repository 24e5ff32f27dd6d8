"""Encryption/decryption oracles for the attack harness.

An :class:`Oracle` plays the sender (or receiver) machine. How it obtains
session secrets is set by :class:`OracleMode`:

``INSECURE``
    Secrets come from a SplitMix64 generator seeded by the clock. Whoever
    can set the clock picks the seed, modelled here by passing
    ``tamper_seed`` to :meth:`Oracle.open_session`.
``SECURE``
    Secrets come from OS entropy; supplying a seed raises
    :class:`TamperRejected`.
``RESUMABLE``
    The working stage restarts without a new key distribution: every
    session after the first reuses the previous secrets.
"""

from __future__ import annotations

import enum
import itertools
import random
import time
from dataclasses import dataclass, field

from .cipher import (
    CipherState,
    Direction,
    MasterKey,
    SessionSecrets,
    decrypt_block,
    distribute,
    encrypt_block,
    keygen_session,
    recover,
)
from .gf2linalg import BoolMatrix
from .prng import MASK64, DetPrng


class OracleMode(enum.Enum):
    INSECURE = "insecure"
    SECURE = "secure"
    RESUMABLE = "resumable"


class TamperRejected(RuntimeError):
    """A seed was supplied to an oracle that does not accept one."""


@dataclass(frozen=True)
class OracleConfig:
    n: int
    mode: OracleMode
    master: MasterKey

    def __post_init__(self):
        if self.master.n != self.n:
            raise ValueError(f"master key is {self.master.n}x{self.master.n}, config says n={self.n}")
        object.__setattr__(self, "mode", OracleMode(self.mode))


@dataclass
class SessionHandle:
    session_id: int
    state: CipherState = field(repr=False)
    transcript: list[tuple[int, BoolMatrix, BoolMatrix]] = field(default_factory=list, repr=False)
    # kept so harness code can check recoveries; not visible to an attacker in reality
    secrets: SessionSecrets = field(default=None, repr=False)

    @property
    def direction(self) -> Direction:
        return self.state.direction

    def log_lines(self) -> list[str]:
        d = self.state.direction.value
        return [
            f"session={self.session_id} i={i} dir={d} in={x.to_hex()} out={y.to_hex()}"
            for i, x, y in self.transcript
        ]


class Oracle:
    """Simulated cipher machine that opens sessions on request."""

    def __init__(self, cfg: OracleConfig, *, clock=time.time_ns):
        self.cfg = cfg
        self._clock = clock
        self._ids = itertools.count(1)
        self._last: SessionSecrets | None = None
        self._entropy = random.SystemRandom()

    def _fresh_secrets(self, seed: int) -> SessionSecrets:
        sender = keygen_session(DetPrng(seed & MASK64), self.cfg.n)
        # the receiver only ever sees (K*, V*)
        return recover(self.cfg.master, distribute(self.cfg.master, sender))

    def open_session(self, tamper_seed: int | None = None, direction: Direction | str = Direction.ENCRYPT) -> SessionHandle:
        mode = self.cfg.mode
        if mode is OracleMode.SECURE:
            if tamper_seed is not None:
                raise TamperRejected("secure oracle draws secrets from OS entropy")
            secrets = self._fresh_secrets(self._entropy.getrandbits(64))
        elif mode is OracleMode.INSECURE:
            seed = self._clock() if tamper_seed is None else tamper_seed
            secrets = self._fresh_secrets(seed)
        else:
            if self._last is None:
                seed = self._clock() if tamper_seed is None else tamper_seed
                secrets = self._fresh_secrets(seed)
            else:
                secrets = self._last
        self._last = secrets
        return SessionHandle(next(self._ids), CipherState(secrets, Direction(direction)), secrets=secrets)

    @property
    def last_secrets(self) -> SessionSecrets | None:
        """Secrets of the most recent session (harness-side ground truth)."""
        return self._last


def open_session(oracle: Oracle, tamper_seed: int | None = None, direction=Direction.ENCRYPT) -> SessionHandle:
    return oracle.open_session(tamper_seed, direction)


def query_encrypt(h: SessionHandle, p: BoolMatrix) -> BoolMatrix:
    i = h.state.i
    c = encrypt_block(h.state, p)
    h.transcript.append((i, p, c))
    return c


def query_decrypt(h: SessionHandle, c: BoolMatrix) -> BoolMatrix:
    i = h.state.i
    p = decrypt_block(h.state, c)
    h.transcript.append((i, c, p))
    return p
