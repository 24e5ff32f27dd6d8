"""Command-line interface.

Exit codes: 0 success, 1 runtime or domain failure, 2 usage error.
Summaries are ``key=value`` lines on stdout; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import logging
import random
import sys
import time
import warnings
from collections import Counter
from pathlib import Path

from . import __version__
from .attacks import VerificationFailed, VPath, run_cca, run_cpa
from .cipher import (
    BadLength,
    BadPadding,
    CipherState,
    Direction,
    MasterKey,
    SessionSecrets,
    WeakKeyWarning,
    decrypt_stream,
    encrypt_block,
    encrypt_stream,
    keygen_session,
)
from .gf2linalg import (
    MAX_DIM,
    Exhausted,
    MatrixFormatError,
    NotInvertible,
    random_invertible,
    random_matrix,
    read_matrices,
)
from .keyspace import analyze_key
from .oracle import Oracle, OracleConfig, OracleMode
from .prng import MASK64, DetPrng

log = logging.getLogger("feam")


def _dimension(text: str) -> int:
    try:
        n = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 1 <= n <= MAX_DIM:
        raise argparse.ArgumentTypeError(f"dimension must be in [1, {MAX_DIM}]")
    return n


def _u64(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v <= MASK64:
        raise argparse.ArgumentTypeError("must fit in 64 unsigned bits")
    return v


def _positive(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _fail(exc: BaseException) -> int:
    print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
    return 1


def _read_session(path: str) -> SessionSecrets:
    return SessionSecrets.from_bytes(Path(path).read_bytes())


# -- keygen / encrypt / decrypt ----------------------------------------------


def cmd_keygen(args) -> int:
    seed = args.seed if args.seed is not None else random.SystemRandom().getrandbits(64)
    prng = DetPrng(seed)
    try:
        if args.master:
            data = random_invertible(prng, args.n).to_bytes()
        else:
            s = keygen_session(prng, args.n, strict=args.strict, min_order=args.min_order)
            data = s.to_bytes()
    except Exhausted as exc:
        return _fail(exc)
    Path(args.out).write_bytes(data)
    print(f"wrote={args.out}")
    print(f"n={args.n}")
    print(f"kind={'master' if args.master else 'session'}")
    return 0


def _cipher_io(args, fn) -> int:
    try:
        s = _read_session(args.key)
        data = Path(args.input).read_bytes()
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", WeakKeyWarning)
            out = fn(s, data)
        for w in caught:
            print(f"warning: {type(w.message).__name__}: {w.message}", file=sys.stderr)
    except (BadLength, BadPadding, MatrixFormatError, NotInvertible, ValueError, OSError) as exc:
        return _fail(exc)
    Path(args.output).write_bytes(out)
    return 0


def cmd_encrypt(args) -> int:
    return _cipher_io(args, encrypt_stream)


def cmd_decrypt(args) -> int:
    return _cipher_io(args, decrypt_stream)


# -- attack campaigns --------------------------------------------------------


def cmd_attack(args) -> int:
    cca = args.command == "attack-cca"
    mode = OracleMode(args.oracle)
    master = MasterKey.from_matrix(random_invertible(DetPrng(args.master_seed), args.n))
    cfg = OracleConfig(args.n, mode, master)
    runner = run_cca if cca else run_cpa
    shared = Oracle(cfg)

    paths: Counter = Counter()
    k_ok = v_ok = verified = ver_failed = violations = 0
    bits_total = 0
    bits_direct: list[int] = []
    transcripts = []
    t0 = time.perf_counter()
    for t in range(args.trials):
        seed = (args.seed + t) & MASK64
        if mode is OracleMode.RESUMABLE:
            # the simulated clock seeds the first session; the attacker tampers nothing
            oracle = Oracle(cfg, clock=lambda s=seed: s)
            tamper = None
        elif mode is OracleMode.SECURE:
            oracle, tamper = shared, None
        else:
            oracle, tamper = shared, seed
        try:
            tr = runner(oracle, args.n, tamper, max_extra_records=args.max_extra_records,
                        attacker_seed=seed ^ 0xA5A5A5A5A5A5A5A5)
        except VerificationFailed as exc:
            ver_failed += 1
            if mode is not OracleMode.SECURE:
                violations += 1
                log.error("trial %d: %s", t, exc)
            if exc.transcript is not None:
                transcripts.append(exc.transcript.to_text() + "verdict=VerificationFailed\n")
            continue
        planted = oracle.last_secrets
        verified += tr.verified
        paths[tr.v_path] += 1
        bits_total += tr.chosen_bits
        if tr.v_path is VPath.DIRECT:
            bits_direct.append(tr.chosen_bits)
        good_k = tr.recovered_k == planted.k
        good_v = tr.recovered_v is not None and tr.recovered_v == planted.v
        k_ok += good_k
        v_ok += good_v
        if mode is not OracleMode.SECURE and (not good_k or (tr.recovered_v is not None and not good_v)):
            violations += 1
            log.error("trial %d: recovered secrets differ from planted ones", t)
        transcripts.append(tr.to_text() + f"verdict={'Verified' if tr.verified else 'Unverified'}\n")
    elapsed = time.perf_counter() - t0

    completed = args.trials - ver_failed
    summary = [
        f"attack={'cca' if cca else 'cpa'}",
        f"oracle={mode.value}",
        f"n={args.n}",
        f"trials={args.trials}",
        f"verified={verified}",
        f"verification_failed={ver_failed}",
        f"k_recovered={k_ok}",
        f"v_recovered={v_ok}",
        f"success_rate={k_ok / args.trials:.6f}",
        f"v_success_rate={v_ok / args.trials:.6f}",
        f"mean_chosen_bits={bits_total / completed if completed else 0:.1f}",
        f"mean_chosen_bits_direct={(sum(bits_direct) / len(bits_direct)) if bits_direct else 0:.1f}",
        f"v_path_direct={paths[VPath.DIRECT]}",
        f"v_path_fallback={paths[VPath.FALLBACK]}",
        f"v_path_failed={paths[VPath.FAILED]}",
        f"invariant_violations={violations}",
        f"elapsed_s={elapsed:.3f}",
    ]
    text = "\n".join(summary) + "\n"
    sys.stdout.write(text)
    if args.report:
        body = "".join(f"--- trial\n{tr}" for tr in transcripts)
        Path(args.report).write_text(body + "--- summary\n" + text)
    return 1 if violations else 0


# -- key analysis / bench ----------------------------------------------------


def cmd_analyze_key(args) -> int:
    try:
        mats = read_matrices(Path(args.key).read_bytes())
        if not mats:
            raise MatrixFormatError("empty key file")
        report = analyze_key(mats[0], args.min_order, args.bound)
    except (MatrixFormatError, NotInvertible, OSError) as exc:
        return _fail(exc)
    sys.stdout.write(report.to_text())
    return 0


def cmd_bench(args) -> int:
    for n in args.sizes:
        prng = DetPrng(n)
        s = keygen_session(prng, n)
        blocks = [random_matrix(prng, n) for _ in range(args.blocks)]
        st = CipherState(s, Direction.ENCRYPT)
        t0 = time.perf_counter()
        for b in blocks:
            encrypt_block(st, b)
        dt = time.perf_counter() - t0
        print(f"n={n} blocks={args.blocks} seconds={dt:.4f} blocks_per_s={args.blocks / dt:.1f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="feam", description="Improved FEA-M cipher and its differential attacks.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("keygen", help="write a session (K, V) or master key file")
    p.add_argument("--n", type=_dimension, default=64)
    p.add_argument("--seed", type=_u64)
    p.add_argument("--strict", action="store_true", help="reject keys of small order")
    p.add_argument("--min-order", type=_positive, default=1 << 16)
    p.add_argument("--master", action="store_true", help="write a single invertible master key")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_keygen)

    for name, fn in (("encrypt", cmd_encrypt), ("decrypt", cmd_decrypt)):
        p = sub.add_parser(name, help=f"{name} a file with a session key file")
        p.add_argument("--key", required=True)
        p.add_argument("--in", dest="input", required=True)
        p.add_argument("--out", dest="output", required=True)
        p.set_defaults(func=fn)

    for name in ("attack-cpa", "attack-cca"):
        p = sub.add_parser(name, help="run a seeded key-recovery campaign")
        p.add_argument("--n", type=_dimension, default=8)
        p.add_argument("--oracle", choices=[m.value for m in OracleMode], default="insecure")
        p.add_argument("--trials", type=_positive, default=100)
        p.add_argument("--seed", type=_u64, default=0, help="tamper seed of trial 0; trial t uses seed+t")
        p.add_argument("--master-seed", type=_u64, default=0)
        p.add_argument("--max-extra-records", type=int, default=4)
        p.add_argument("--report", help="write per-trial transcripts and the summary here")
        p.set_defaults(func=cmd_attack)

    p = sub.add_parser("analyze-key", help="order, group order and weak-key verdict")
    p.add_argument("--key", required=True)
    p.add_argument("--min-order", type=_positive, default=1 << 16)
    p.add_argument("--bound", type=_positive, help="order search bound for n > 16 (default: min-order)")
    p.set_defaults(func=cmd_analyze_key)

    p = sub.add_parser("bench", help="encryption throughput (informational)")
    p.add_argument("--sizes", type=_dimension, nargs="+", default=[16, 64, 128])
    p.add_argument("--blocks", type=_positive, default=200)
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
