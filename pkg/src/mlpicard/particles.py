"""Interacting-particle Euler reference solution.

N particles start at xi and evolve by the Euler scheme

    X_i <- X_i + (dt/N) * sum_j mu(X_i, X_j) + dW_i,

with the empirical mean taken over all N particles including self.  The
pairwise drift sum is O(N**2) per step by design (oracle clarity over speed)
and is reduced in a fixed order so runs are bit-reproducible.  Particle noise
keys live on a reserved root branch disjoint from the estimator's keys, so
oracle and estimator stay independent under one master seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ResourceLimitError
from .hier_rng import IndexKey, child, normals
from .models import Problem

__all__ = ["EnsembleStats", "ensemble_stats", "simulate_particles"]

_PARTICLE_BRANCH = 1  # root path coordinate reserved for particle noise
_DEFAULT_CEILING = 4 * 10**9  # limit on N*N*M pairwise work
_BLOCK = 128  # row block for the pairwise drift sum


def _interaction_mean(problem: Problem, state: np.ndarray) -> np.ndarray:
    n, d = state.shape
    out = np.empty_like(state)
    for lo in range(0, n, _BLOCK):
        hi = min(lo + _BLOCK, n)
        # broadcastable views: the drift sees every (i, j) pair, numpy just
        # avoids re-evaluating elementwise terms along degenerate axes
        pairs = problem.drift.evaluate(state[lo:hi, None, :], state[None, :, :])
        out[lo:hi] = np.broadcast_to(pairs, (hi - lo, n, d)).sum(axis=1)
    return out / n


def simulate_particles(
    problem: Problem,
    N: int,
    M: int,
    master_seed: int,
    *,
    ceiling: Optional[int] = _DEFAULT_CEILING,
    key_indices: Optional[Sequence[int]] = None,
) -> np.ndarray:
    """N samples of X(T) from the M-step interacting Euler scheme.

    ``key_indices`` relabels which noise key drives which particle slot
    (default: particle i uses key index i); with a permutation the outputs
    are the correspondingly permuted ones, up to reduction-order roundoff in
    the interaction sum.
    """
    if N < 2:
        raise ValueError(f"need at least 2 particles, got {N}")
    if M < 1:
        raise ValueError(f"need at least 1 time step, got {M}")
    if ceiling is not None and N * N * M > ceiling:
        raise ResourceLimitError(
            f"pairwise work N*N*M = {N * N * M} exceeds the ceiling {ceiling}"
        )
    if key_indices is None:
        key_indices = range(N)
    else:
        key_indices = list(key_indices)
        if len(key_indices) != N:
            raise ValueError(f"need {N} key indices, got {len(key_indices)}")
    d = problem.dim
    dt = problem.horizon / M
    root = IndexKey(master_seed, (_PARTICLE_BRANCH,))
    increments = np.empty((N, M, d))
    for i, key_index in enumerate(key_indices):
        increments[i] = normals(child(root, (key_index,)), "dw", M * d, dt).reshape(M, d)
    state = np.tile(problem.initial, (N, 1))
    for step in range(M):
        state = state + dt * _interaction_mean(problem, state) + increments[:, step, :]
    return state


@dataclass(frozen=True)
class EnsembleStats:
    mean: np.ndarray
    variance: np.ndarray  # per coordinate, unbiased
    second_moment_root: float
    mean_se: np.ndarray
    second_moment_root_se: float
    count: int


def ensemble_stats(samples: np.ndarray) -> EnsembleStats:
    """Unbiased mean/variance and the second-moment root with delta-method SE."""
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    n = samples.shape[0]
    if n < 2:
        raise ValueError(f"need at least 2 samples, got {n}")
    mean = samples.mean(axis=0)
    variance = samples.var(axis=0, ddof=1)
    mean_se = np.sqrt(variance / n)
    sq_norm = np.einsum("ij,ij->i", samples, samples)
    mean_sq = float(sq_norm.mean())
    se_sq = float(np.sqrt(sq_norm.var(ddof=1) / n))
    root = float(np.sqrt(mean_sq))
    root_se = se_sq / (2.0 * root) if root > 0.0 else 0.0
    return EnsembleStats(mean, variance, root, mean_se, root_se, n)
