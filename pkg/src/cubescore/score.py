"""Hypercube hit scores.

The exact score of a square matrix ``M`` is the fraction of sign vectors
``x`` in ``{-1,+1}^n`` whose image ``M @ x`` again has every coordinate
within a tolerance of ``+-1``.  The thresholded variant replaces strict
membership with a cutoff on ``prod_i |(Mx)_i|``, and both come in exhaustive
and Monte Carlo flavors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernel
from .core import (
    CapacityError,
    DEFAULT_TOLERANCES,
    ENUMERATION_CAP,
    PreconditionError,
    SignVector,
    as_matrix,
)


@dataclass(frozen=True)
class ScoreReport:
    """Outcome of a hit-score computation.

    ``stderr`` is zero for exhaustive runs and the binomial standard error
    ``sqrt(p(1-p)/samples)`` for Monte Carlo runs.
    """

    hit_count: int
    total: int
    score: float
    stderr: float
    method: str
    tolerance: float

    def to_dict(self) -> dict:
        return {
            "hit_count": self.hit_count,
            "total": self.total,
            "score": self.score,
            "stderr": self.stderr,
            "method": self.method,
            "tolerance": self.tolerance,
        }


@dataclass(frozen=True)
class ThresholdScoreReport:
    """Like :class:`ScoreReport` but for the product-threshold hit rule."""

    hit_count: int
    total: int
    score: float
    stderr: float
    method: str
    tolerance: float
    threshold: float

    def to_dict(self) -> dict:
        return {
            "hit_count": self.hit_count,
            "total": self.total,
            "score": self.score,
            "stderr": self.stderr,
            "method": self.method,
            "tolerance": self.tolerance,
            "threshold": self.threshold,
        }


def _membership_hits(y: np.ndarray, tol: float) -> np.ndarray:
    return np.abs(np.abs(y) - 1.0).max(axis=0) <= tol


def _check_square(m) -> np.ndarray:
    return as_matrix(m, square=True)


def _check_tol(tol: float) -> float:
    if not (0.0 < tol < 1.0):
        raise PreconditionError(f"tolerance must lie strictly between 0 and 1, got {tol!r}")
    return float(tol)


def exact_score(m, tol: float = DEFAULT_TOLERANCES.membership_tol) -> ScoreReport:
    """Exhaustive hit score over all ``2**n`` sign vectors.

    A vector counts as a hit when ``max_i ||(Mx)_i| - 1| <= tol``.  Capped at
    ``n <= 30``.
    """
    arr = _check_square(m)
    tol = _check_tol(tol)
    n = arr.shape[0]
    hits = 0
    for y, _, _ in _kernel.iter_sign_blocks(arr):
        hits += int(np.count_nonzero(_membership_hits(y, tol)))
    total = 1 << n
    return ScoreReport(hits, total, hits / total, 0.0, "exact", tol)


def exact_hit_indices(m, tol: float = DEFAULT_TOLERANCES.membership_tol) -> np.ndarray:
    """Sorted bitmask indices of every hit vector (bit i set means x_i = -1)."""
    arr = _check_square(m)
    tol = _check_tol(tol)
    n = arr.shape[0]
    b = min(n, _kernel.LOW_BITS)
    found = []
    for y, gray, _ in _kernel.iter_sign_blocks(arr):
        mask = _membership_hits(y, tol)
        if mask.any():
            found.append((gray << b) | np.nonzero(mask)[0])
    if not found:
        return np.empty(0, dtype=np.int64)
    return np.sort(np.concatenate(found).astype(np.int64))


def _mc_rows(n: int) -> int:
    # keep per-block sample arrays around 32 MB however wide the matrix is
    return max(1, min(_kernel.MC_BLOCK, (1 << 22) // max(n, 1)))


def mc_score(
    m,
    samples: int,
    seed: int,
    tol: float = DEFAULT_TOLERANCES.membership_tol,
    threads: int = 1,
) -> ScoreReport:
    """Monte Carlo hit score from uniform sign-vector samples.

    Uses one Philox substream per fixed-size sample block, so a rerun with
    the same seed and sample count reproduces the estimate bit for bit
    regardless of ``threads``.
    """
    arr = _check_square(m)
    tol = _check_tol(tol)
    samples = _kernel.check_samples(samples)
    seed = _kernel.check_seed(seed)
    n = arr.shape[0]
    block = _mc_rows(n)
    mt = arr.T.copy()

    def one_block(i: int) -> int:
        rows = min(block, samples - i * block)
        x = _kernel.sample_signs(_kernel.block_rng(seed, i), rows, n)
        y = x @ mt
        return int(np.count_nonzero(np.abs(np.abs(y) - 1.0).max(axis=1) <= tol))

    counts = _kernel.map_blocks(one_block, _kernel.num_blocks(samples, block), threads)
    hits = int(sum(counts))
    p = hits / samples
    stderr = math.sqrt(p * (1.0 - p) / samples)
    return ScoreReport(hits, samples, p, stderr, "monte_carlo", tol)


def threshold_score(
    m,
    theta: float,
    mode: str = "exact",
    samples: int | None = None,
    seed: int | None = None,
    threads: int = 1,
) -> ThresholdScoreReport:
    """Probability that ``prod_i |(Mx)_i| >= theta`` over sign vectors.

    ``mode`` is ``"exact"`` (exhaustive, ``n <= 30``) or ``"mc"``.
    """
    arr = _check_square(m)
    if not (0.0 < theta <= 1.0):
        raise PreconditionError(f"theta must lie in (0, 1], got {theta!r}")
    n = arr.shape[0]
    if mode == "exact":
        hits = 0
        for y, _, _ in _kernel.iter_sign_blocks(arr):
            hits += int(np.count_nonzero(np.prod(np.abs(y), axis=0) >= theta))
        total = 1 << n
        return ThresholdScoreReport(hits, total, hits / total, 0.0, "exact", 0.0, float(theta))
    if mode != "mc":
        raise PreconditionError(f"mode must be 'exact' or 'mc', got {mode!r}")
    if samples is None or seed is None:
        raise PreconditionError("mc mode requires both samples and seed")
    samples = _kernel.check_samples(samples)
    seed = _kernel.check_seed(seed)
    block = _mc_rows(n)
    mt = arr.T.copy()

    def one_block(i: int) -> int:
        rows = min(block, samples - i * block)
        x = _kernel.sample_signs(_kernel.block_rng(seed, i), rows, n)
        y = x @ mt
        return int(np.count_nonzero(np.prod(np.abs(y), axis=1) >= theta))

    counts = _kernel.map_blocks(one_block, _kernel.num_blocks(samples, block), threads)
    hits = int(sum(counts))
    p = hits / samples
    stderr = math.sqrt(p * (1.0 - p) / samples)
    return ThresholdScoreReport(hits, samples, p, stderr, "monte_carlo", 0.0, float(theta))


def product_statistic(m, x) -> float:
    """The single-vector statistic ``prod_i |(Mx)_i|``."""
    arr = _check_square(m)
    if isinstance(x, SignVector):
        vec = x.components()
    else:
        vec = np.asarray(x, dtype=float)
        if vec.ndim != 1:
            raise PreconditionError("x must be a 1-D sign vector")
        if not np.all(np.abs(vec) == 1.0):
            raise PreconditionError("every component of x must be exactly +1 or -1")
    if vec.size != arr.shape[1]:
        raise PreconditionError(f"x has length {vec.size}, expected {arr.shape[1]}")
    return float(np.prod(np.abs(arr @ vec)))


def naive_exact_score(m, tol: float = DEFAULT_TOLERANCES.membership_tol) -> ScoreReport:
    """Reference implementation: one dense matvec per sign vector.

    Kept deliberately independent of the blocked kernel so the two can be
    cross-checked hit for hit; capped at ``n <= 20`` for runtime reasons.
    """
    arr = _check_square(m)
    tol = _check_tol(tol)
    n = arr.shape[0]
    if n > 20:
        raise CapacityError(f"naive score walk is capped at n=20, got {n}")
    hits = 0
    for bits in range(1 << n):
        x = 1.0 - 2.0 * ((bits >> np.arange(n)) & 1)
        if np.abs(np.abs(arr @ x) - 1.0).max() <= tol:
            hits += 1
    total = 1 << n
    return ScoreReport(hits, total, hits / total, 0.0, "exact", tol)


def naive_hit_indices(m, tol: float = DEFAULT_TOLERANCES.membership_tol) -> np.ndarray:
    """Reference hit set matching :func:`naive_exact_score`."""
    arr = _check_square(m)
    tol = _check_tol(tol)
    n = arr.shape[0]
    if n > 20:
        raise CapacityError(f"naive score walk is capped at n=20, got {n}")
    out = []
    for bits in range(1 << n):
        x = 1.0 - 2.0 * ((bits >> np.arange(n)) & 1)
        if np.abs(np.abs(arr @ x) - 1.0).max() <= tol:
            out.append(bits)
    return np.asarray(out, dtype=np.int64)
