"""Sliding-window decoder and end-to-end Monte-Carlo of the bin-forward scheme.

Blocks are 0-based: block 0 and block B-1 carry the fixed message (0, 0),
blocks 1..B-2 carry uniform messages and are the ones decoded and scored.
The relay starts from bin index 0.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..channels import SdRcDecision, SdRcSpec
from ..errors import DomainError
from .codebook import (BlockCodebook, SchemeLaws, SchemeRates, _inverse_cdf, cover,
                       encode_block, relay_step, relay_update)
from .prf import rng_for, subseed
from .typical import cell_index, typical_mask

CAUSES = ("E1_covering", "E2_bin_confusion", "E3_true_not_typical", "E4_wrong_typical", "propagation")


@dataclass
class BlockDecision:
    block: int
    m1: int
    m2: int
    unique: bool
    l_prev: int                 # bin index the decoder conditioned on
    l_new: int                  # decoder's estimate of this block's bin index
    candidates: list = field(default_factory=list)


def _candidates(cb: BlockCodebook, cb_next: BlockCodebook, l_prev: int, s_cur, s_next,
                y_cur, y_next, eps: float):
    """Message pairs passing both typicality tests, and the imitated bin of every m'."""
    laws = cb.laws
    K1, Kt = cb.k["K1"], cb.k["Kt"]
    u, xr = cb.u(l_prev), cb.xr(l_prev)
    z_tab = cb.z_table(xr, u, s_cur)
    k, l_vec, _, _ = cover(cb, cb_next, z_tab, s_next, eps)
    z_c = z_tab[np.arange(K1) * Kt + k]                                    # (K1, n)
    shape = z_c.shape

    def bc(a):
        return np.broadcast_to(a, shape)

    # next-block test depends on m' only through l
    cells2 = cell_index((bc(s_next), cb_next.u_table[l_vec], cb_next.xr_table[l_vec], bc(y_next)),
                        laws.p_test2.shape)
    t2 = typical_mask(cells2, laws.p_test2.reshape(-1), eps)
    # current-block test without x is a necessary condition
    cells1 = cell_index((bc(s_cur), bc(u), bc(xr), z_c, bc(y_cur)), laws.p_test1_noy.shape)
    pre = typical_mask(cells1, laws.p_test1_noy.reshape(-1), eps)
    pairs = []
    for m1 in np.flatnonzero(t2 & pre):
        xt = cb.x_table(z_c[m1], xr, u, s_cur)
        sh = xt.shape
        cells = cell_index((np.broadcast_to(s_cur, sh), np.broadcast_to(u, sh), np.broadcast_to(xr, sh),
                            np.broadcast_to(z_c[m1], sh), xt, np.broadcast_to(y_cur, sh)),
                           laws.p_test1.shape)
        ok = typical_mask(cells, laws.p_test1.reshape(-1), eps)
        pairs += [(int(m1), int(m2)) for m2 in np.flatnonzero(ok)]
    return pairs, l_vec


def sliding_window_decode(cbs: Sequence[BlockCodebook], y_blocks, s_blocks, eps: float) -> list:
    """Decode blocks 1..B-2; returns one BlockDecision per decoded block.

    A block is decoded correctly only when exactly one pair passes both tests.
    Otherwise the smallest passing pair (or (0, 0)) is carried forward, so a
    wrong bin estimate propagates to the next block as it would in practice.
    """
    B = len(cbs)
    if B < 3:
        raise DomainError("at least 3 blocks are needed")
    cb0 = cbs[0]
    z_tab = cb0.z_table(cb0.xr(0), cb0.u(0), s_blocks[0])
    _, l_vec, _, _ = cover(cb0, cbs[1], z_tab, s_blocks[1], eps)
    l_prev = int(l_vec[0])
    out = []
    for b in range(1, B - 1):
        pairs, l_vec = _candidates(cbs[b], cbs[b + 1], l_prev, s_blocks[b], s_blocks[b + 1],
                                   y_blocks[b], y_blocks[b + 1], eps)
        m1, m2 = pairs[0] if pairs else (0, 0)
        out.append(BlockDecision(b, m1, m2, len(pairs) == 1, l_prev, int(l_vec[m1]), pairs))
        l_prev = int(l_vec[m1])
    return out


@dataclass
class SimReport:
    """Error counts of a scheme simulation.

    ``causes`` tags each wrong block with every cause that applies, so one block
    can count under several causes. A wrong block decoded from the right
    previous bin always has E3 or E4; otherwise it is tagged as propagation.
    """
    n: int
    B: int
    rates: dict
    eps: float
    seed: int
    trials: int
    blocks_per_trial: int
    per_block_errors: list
    block_errors: int
    block_error_rate: Optional[float]
    trial_errors: int
    trial_error_rate: Optional[float]
    covering_failures: int
    bin_collisions: int
    causes: dict
    relay_disagreements: int
    undefined: bool

    def to_dict(self):
        return asdict(self)


@dataclass
class _Trial:
    errors: list
    covering_failures: int
    causes: dict
    relay_disagreements: int


def _channel_output(spec: SdRcSpec, x, xr, z, s, rng) -> np.ndarray:
    probs = spec.kernel[x, xr, z, s]                                        # (n, |Y|)
    return _inverse_cdf(rng.random(x.shape[0]), probs)


def _run_trial(spec: SdRcSpec, laws: SchemeLaws, n: int, B: int, rates: SchemeRates, eps: float,
               seed: int, t: int) -> _Trial:
    tseed = subseed(seed, "trial", t)
    env = rng_for(tseed, "env")
    sizes = rates.sizes(n)
    s_blocks = env.choice(spec.p_s.size, size=(B, n), p=spec.p_s)
    m1 = np.zeros(B, dtype=np.int64)
    m2 = np.zeros(B, dtype=np.int64)
    m1[1:B - 1] = env.integers(0, sizes["K1"], B - 2)
    m2[1:B - 1] = env.integers(0, sizes["K2"], B - 2)
    cbs = [BlockCodebook(laws, n, rates, b, tseed) for b in range(B)]

    y_blocks, l_true, covered = [], [], []
    l_enc = l_rel = 0
    disagree = 0
    for b in range(B):
        last = b == B - 1
        enc = encode_block(cbs[b], int(m1[b]), int(m2[b]), l_enc, s_blocks[b],
                           None if last else s_blocks[b + 1], eps, None if last else cbs[b + 1])
        xr = relay_step(cbs[b], l_rel)
        z_obs = spec.z_table[enc.x, xr, s_blocks[b]]
        l_rel = relay_update(cbs[b], z_obs)
        if l_rel != enc.l_new or not np.array_equal(z_obs, enc.z):
            disagree += 1
        y_blocks.append(_channel_output(spec, enc.x, xr, z_obs, s_blocks[b], env))
        l_true.append(enc.l_new)
        covered.append(enc.covered)
        l_enc = enc.l_new

    decisions = sliding_window_decode(cbs, y_blocks, s_blocks, eps)
    causes = dict.fromkeys(CAUSES, 0)
    errors = []
    cov_fail = 0
    for dec in decisions:
        b = dec.block
        truth = (int(m1[b]), int(m2[b]))
        wrong = not dec.unique or (dec.m1, dec.m2) != truth
        errors.append(int(wrong))
        if not covered[b]:
            cov_fail += 1
            if wrong:
                causes["E1_covering"] += 1
        if not wrong:
            continue
        if dec.l_prev != l_true[b - 1]:
            causes["propagation"] += 1
            continue
        # conditioning was right: the candidate list is the one of the true bin
        if truth not in dec.candidates:
            causes["E3_true_not_typical"] += 1
        if any(p != truth for p in dec.candidates):
            causes["E4_wrong_typical"] += 1
        cb = cbs[b]
        z_tab = cb.z_table(cb.xr(dec.l_prev), cb.u(dec.l_prev), s_blocks[b])
        _, l_vec, _, _ = cover(cb, cbs[b + 1], z_tab, s_blocks[b + 1], eps)
        if np.count_nonzero(l_vec == l_true[b]) > 1:
            causes["E2_bin_confusion"] += 1
    return _Trial(errors, cov_fail, causes, disagree)


def simulate_sdrc(spec: SdRcSpec, d: SdRcDecision, n: int, B: int, rates: SchemeRates, eps: float = 0.2,
                  trials: int = 100, seed: int = 0, threads: int = 1) -> SimReport:
    if n < 1:
        raise DomainError("blocklength must be positive")
    if B < 3:
        raise DomainError("at least 3 blocks are needed")
    if trials < 0:
        raise DomainError("trials must be nonnegative")
    if not eps >= 0:
        raise DomainError("eps must be nonnegative")
    laws = SchemeLaws(spec, d)
    BlockCodebook(laws, n, rates, 0, seed)          # budget guard before any trial runs

    def one(t):
        return _run_trial(spec, laws, n, B, rates, eps, seed, t)

    if threads > 1 and trials > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(one, range(trials)))
    else:
        results = [one(t) for t in range(trials)]

    per_block = [0] * (B - 2)
    causes = dict.fromkeys(CAUSES, 0)
    cov = dis = terr = 0
    for r in results:
        per_block = [a + e for a, e in zip(per_block, r.errors)]
        for k in CAUSES:
            causes[k] += r.causes[k]
        cov += r.covering_failures
        dis += r.relay_disagreements
        terr += int(any(r.errors))
    errs = sum(per_block)
    total = trials * (B - 2)
    return SimReport(
        n=n, B=B, rates=rates.to_dict(), eps=float(eps), seed=int(seed), trials=trials,
        blocks_per_trial=B - 2, per_block_errors=per_block, block_errors=errs,
        block_error_rate=errs / total if total else None,
        trial_errors=terr, trial_error_rate=terr / trials if trials else None,
        covering_failures=cov, bin_collisions=causes["E2_bin_confusion"], causes=causes,
        relay_disagreements=dis, undefined=trials == 0)
