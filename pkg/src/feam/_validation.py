"""Input checks shared by the estimator classes and the CLI."""

from __future__ import annotations

import numbers

import numpy as np

from .gf2linalg import MAX_DIM, BoolMatrix
from .prng import MASK64


def check_dimension(n, name: str = "n") -> int:
    if isinstance(n, bool) or not isinstance(n, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {type(n).__name__}")
    n = int(n)
    if not 1 <= n <= MAX_DIM:
        raise ValueError(f"{name} must be in [1, {MAX_DIM}], got {n}")
    return n


def check_seed(seed, name: str = "seed") -> int | None:
    if seed is None:
        return None
    if isinstance(seed, bool) or not isinstance(seed, numbers.Integral):
        raise TypeError(f"{name} must be an integer or None, got {type(seed).__name__}")
    if not 0 <= int(seed) <= MASK64:
        raise ValueError(f"{name} must fit in 64 unsigned bits")
    return int(seed)


def check_matrix(x, n: int | None = None) -> BoolMatrix:
    """Coerce a BoolMatrix or square 0/1 array-like, optionally checking its size."""
    if not isinstance(x, BoolMatrix):
        x = BoolMatrix.from_array(np.asarray(x))
    if n is not None and x.n != n:
        raise ValueError(f"expected a {n}x{n} matrix, got {x.n}x{x.n}")
    return x


def check_blocks(X, n: int) -> list[BoolMatrix]:
    """Accept a sequence of matrices or a ``(k, n, n)`` 0/1 array."""
    if isinstance(X, BoolMatrix):
        X = [X]
    arr = X if not isinstance(X, np.ndarray) else list(X)
    return [check_matrix(x, n) for x in arr]
