"""Strong (robust) typicality tests.

A tuple of sequences is eps-typical for a PMF p when every letter's
empirical frequency nu satisfies |nu - p| < eps * p; letters with p = 0 must
not occur at all.
"""
from __future__ import annotations

import numpy as np


def cell_index(seqs, sizes) -> np.ndarray:
    """Flat cell index of aligned sequences (each of shape (..., n))."""
    return np.ravel_multi_index(tuple(np.asarray(s) for s in seqs), tuple(sizes))


def typical_mask(cells: np.ndarray, p_flat: np.ndarray, eps: float) -> np.ndarray:
    """Typicality of each row of a (rows, n) matrix of flat cell indices."""
    cells = np.atleast_2d(cells)
    rows, n = cells.shape
    c = p_flat.size
    offs = (np.arange(rows, dtype=np.int64) * c)[:, None]
    counts = np.bincount((cells + offs).ravel(), minlength=rows * c).reshape(rows, c)
    nu = counts / n
    zero = p_flat <= 0
    ok_zero = ~np.any(counts[:, zero] > 0, axis=1)
    pos = ~zero
    ok_pos = np.all(np.abs(nu[:, pos] - p_flat[pos]) < eps * p_flat[pos], axis=1)
    return ok_zero & ok_pos


def is_typical(seqs, p: np.ndarray, eps: float) -> bool:
    """Typicality of one tuple of sequences for a joint PMF tensor ``p``."""
    p = np.asarray(p, dtype=float)
    cells = cell_index(seqs, p.shape)
    return bool(typical_mask(np.asarray(cells)[None, :], p.reshape(-1), eps)[0])
