"""Truncated SVD projection for sparse-ish feature matrices."""

from __future__ import annotations

import numpy as np

DEFAULT_MASS = 0.90
DEFAULT_MAX_RANK = 50


def choose_rank(singular_values, mass: float = DEFAULT_MASS, max_rank: int = DEFAULT_MAX_RANK) -> int:
    """Smallest rank whose squared singular values reach ``mass`` of the total."""
    s2 = np.asarray(singular_values, dtype=float) ** 2
    total = s2.sum()
    if total <= 0:
        return 1
    k = int(np.searchsorted(np.cumsum(s2) / total, mass - 1e-12) + 1)
    return max(1, min(k, max_rank, len(s2)))


def reduce_svd(matrix, rank: int | None = None, mass: float = DEFAULT_MASS,
               max_rank: int = DEFAULT_MAX_RANK) -> np.ndarray:
    """Rows projected onto the top ``rank`` right singular vectors (U_k * S_k).

    With ``rank=None`` the rank is picked by :func:`choose_rank`.
    """
    x = np.asarray(matrix, dtype=float)
    if x.ndim != 2:
        raise ValueError("matrix must be two-dimensional")
    if rank is not None and rank <= 0:
        raise ValueError("rank must be positive")
    if rank is not None and rank > min(x.shape):
        raise ValueError(f"rank {rank} exceeds min(rows, cols) = {min(x.shape)}")
    if x.size == 0:
        return np.zeros((x.shape[0], rank or 0))
    u, s, vt = np.linalg.svd(x, full_matrices=False)
    k = rank if rank is not None else choose_rank(s, mass, max_rank)
    # fix the sign of each direction so results do not depend on LAPACK details
    signs = np.sign(vt[:k][np.arange(k), np.argmax(np.abs(vt[:k]), axis=1)])
    signs[signs == 0] = 1.0
    return x @ (vt[:k].T * signs)
