"""Monte-Carlo check of indirect covering: how many distinct bins do 2^{nR}
conditionally i.i.d. sequences hit?"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from ..errors import BudgetExceededError, DomainError, NormalizationError
from .codebook import BinMap, _cdf, _sample
from .prf import rng_for, subseed

CHUNK_ROWS = 1 << 16
QUANTILES = (0.05, 0.25, 0.5, 0.75, 0.95)


@dataclass
class CoveringReport:
    n: int
    R: float
    R_B: float
    delta: float
    seed: int
    trials: int
    sequences: int
    bins: int
    threshold: float
    counts: list
    quantiles: dict
    mean_count: Optional[float]
    pass_fraction: Optional[float]

    def to_dict(self):
        return asdict(self)


def _check_inputs(p_z_v, p_v):
    p_z_v = np.asarray(p_z_v, dtype=float)
    p_v = np.asarray(p_v, dtype=float)
    if p_z_v.ndim != 2 or p_v.ndim != 1 or p_z_v.shape[0] != p_v.size:
        raise DomainError("kernel must have shape (|V|, |Z|) matching the source")
    if np.any(p_z_v < 0) or np.any(p_v < 0):
        raise DomainError("probabilities must be nonnegative")
    if abs(p_v.sum() - 1) > 1e-9 or np.any(np.abs(p_z_v.sum(axis=1) - 1) > 1e-9):
        raise NormalizationError("source and kernel rows must sum to 1")
    return p_z_v, p_v


def covering_experiment(p_z_v, p_v, n: int, R: float, R_B: float, delta: float, trials: int,
                        seed: int = 0, threads: int = 1) -> CoveringReport:
    """For each trial draw v^n ~ p_V, then ceil(2^{nR}) sequences z^n ~ prod p_{Z|V}(.|v_i),
    bin them with a fresh bin map and count the distinct bins."""
    p_z_v, p_v = _check_inputs(p_z_v, p_v)
    if n < 1 or trials < 0:
        raise DomainError("n must be positive and trials nonnegative")
    if not (R > 0 and R_B > 0):
        raise DomainError("R and R_B must be positive")
    nz = p_z_v.shape[1]
    limit = 24 * math.log2(max(nz, 2))
    if n > limit:
        raise BudgetExceededError(
            f"n={n} exceeds the covering budget n <= 24*log2|Z| = {limit:g}", required=n, limit=limit)
    K = max(1, math.ceil(2.0 ** (n * R) - 1e-9))
    threshold = 2.0 ** (n * (R - delta))

    def one(t):
        rng = rng_for(seed, "covering", t)
        v = rng.choice(p_v.size, size=n, p=p_v)
        cdf = _cdf(p_z_v[v])                                         # (n, |Z|-1)
        bins = BinMap(n, R_B, subseed(seed, "covering-bin", t), nz)
        hit = set()
        for start in range(0, K, CHUNK_ROWS):
            rows = min(CHUNK_ROWS, K - start)
            z = _sample(rng.random((rows, n)), cdf)
            hit.update(np.unique(bins(z)).tolist())
        return len(hit)

    if threads > 1 and trials > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            counts = list(ex.map(one, range(trials)))
    else:
        counts = [one(t) for t in range(trials)]
    n_bins = max(1, math.ceil(2.0 ** (n * R_B) - 1e-9))
    arr = np.asarray(counts, dtype=float)
    quant = {str(q): float(np.quantile(arr, q)) for q in QUANTILES} if trials else {}
    return CoveringReport(
        n=n, R=float(R), R_B=float(R_B), delta=float(delta), seed=int(seed), trials=trials,
        sequences=K, bins=n_bins, threshold=threshold, counts=counts, quantiles=quant,
        mean_count=float(arr.mean()) if trials else None,
        pass_fraction=float(np.mean(arr >= threshold)) if trials else None)
