"""Improved FEA-M over GF(2) and its implementation-dependent differential attacks."""

__version__ = "0.1.0"

from .attacks import (
    AttackTranscript,
    ChosenPlaintextPlan,
    InconsistentRecords,
    Record,
    SingularSystem,
    Underdetermined,
    VerificationFailed,
    VPath,
    make_plan,
    recover_session_key,
    recover_session_key_cca,
    recover_v_direct,
    recover_v_sylvester,
    run_cca,
    run_cpa,
)
from .cipher import (
    BadLength,
    BadPadding,
    CipherState,
    Direction,
    DistributionMessage,
    MasterKey,
    SessionSecrets,
    WeakKeyWarning,
    decrypt_block,
    decrypt_stream,
    distribute,
    encrypt_block,
    encrypt_stream,
    keygen_session,
    recover,
)
from .estimators import DifferentialKeyRecovery, FEAMCipher
from .gf2linalg import BoolMatrix, Exhausted, LinearSystem, NotInvertible, SolveStatus
from .keyspace import OrderBoundExceeded, element_order, group_order, screen_key
from .oracle import Oracle, OracleConfig, OracleMode, TamperRejected
from .prng import DetPrng

