"""Block codebooks, encoder and relay of the cooperative-bin-forward relay scheme.

Indices are 0-based here (message 1 of the scheme is index 0).

Codewords are never stored in full: every table is produced on demand from a
generator seeded by (seed, block, role, conditioning sequence), so any
codeword is a deterministic function of those inputs. Row k of a table is
codeword k.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np

from ..channels import SdRcDecision, SdRcSpec
from ..errors import BudgetExceededError, DomainError
from .prf import hash_rows, rng_for, subseed, uniform_index
from .typical import cell_index, typical_mask

MAX_TABLE_CELLS = 1 << 23
MAX_CANDIDATE_PAIRS = 1 << 20


@dataclass(frozen=True)
class SchemeRates:
    """Rp: cooperative message part, Rpp: private part, Rtilde: covering, Rb: bins."""

    rp: float
    rpp: float
    rtilde: float
    rb: float

    def __post_init__(self):
        for name in ("rp", "rpp", "rtilde", "rb"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise DomainError(f"rate {name} must be a finite nonnegative number, got {v!r}")

    def sizes(self, n: int) -> dict:
        def count(r):
            return max(1, math.ceil(2.0 ** (n * r) - 1e-9))
        return {"K1": count(self.rp), "Kt": count(self.rtilde), "K2": count(self.rpp), "L": count(self.rb)}

    def to_dict(self):
        return {"Rp": self.rp, "Rpp": self.rpp, "Rtilde": self.rtilde, "Rb": self.rb}

    @classmethod
    def from_dict(cls, d):
        return cls(float(d["Rp"]), float(d["Rpp"]), float(d["Rtilde"]), float(d["Rb"]))


class SchemeLaws:
    """Conditional laws used to draw codewords, and the typicality targets."""

    def __init__(self, spec: SdRcSpec, d: SdRcDecision):
        sz = spec.sizes
        d = d.as_noncausal(sz["S"])
        self.spec = spec
        self.sizes = dict(sz, U=d.p_u_s.shape[1])
        ns, nu, nxr, nx, nz, ny = (self.sizes[k] for k in ("S", "U", "X_r", "X", "Z", "Y"))
        p_s = spec.p_s
        self.p_su = p_s[:, None] * d.p_u_s                     # [s, u]
        self.p_u = self.p_su.sum(axis=0)
        self.p_xr_u = d.p_xr_u                                 # [u, xr]
        px = d.p_x_xrus                                        # [xr, u, s, x]
        zt = spec.z_table                                      # [x, xr, s]
        ind = np.zeros((nx, nxr, ns, nz))
        for x in range(nx):
            for xr in range(nxr):
                for s in range(ns):
                    ind[x, xr, s, zt[x, xr, s]] = 1.0
        pz = np.einsum("ausx,xasz->ausz", px, ind)            # [xr, u, s, z]
        joint_x = np.einsum("ausx,xasz->zausx", px, ind)      # p(x, z | xr, u, s)
        with np.errstate(invalid="ignore", divide="ignore"):
            cond = joint_x / np.moveaxis(pz, -1, 0)[..., None]
        self.p_z = pz
        self.p_x = np.where(np.isfinite(cond), cond, 1.0 / nx)  # [z, xr, u, s, x]
        # full joint over (s, u, xr, z, x, y)
        k = spec.kernel                                        # [x, xr, z, s, y]
        full = np.einsum("su,ua,ausx,xasz,xazsy->suazxy", self.p_su, self.p_xr_u, px, ind, k)
        self.p_test1 = full
        self.p_test1_noy = full.sum(axis=4)                    # (s, u, xr, z, y)
        self.p_test2 = full.sum(axis=(3, 4))                   # (s, u, xr, y)


def _cdf(probs: np.ndarray) -> np.ndarray:
    """Inner CDF boundaries (last axis drops the final 1).

    Dividing by the total makes trailing zero-probability letters unreachable.
    """
    c = np.cumsum(probs, axis=-1)
    return (c / c[..., -1:])[..., :-1]


def _sample(w: np.ndarray, cdf: np.ndarray) -> np.ndarray:
    """Inverse-CDF sampling: w (..., n) uniforms, cdf (..., n, A-1) broadcastable."""
    return (w[..., None] >= cdf).sum(axis=-1)


def _inverse_cdf(w: np.ndarray, probs: np.ndarray) -> np.ndarray:
    """Sample letters from per-position PMFs: w (..., n) uniforms, probs (..., n, A)."""
    return _sample(w, _cdf(probs))


class BinMap:
    """bin(z^n) in [0, ceil(2^{n R_B})): a keyed hash of the sequence."""

    def __init__(self, n: int, rb: float, key: int, alphabet: int):
        self.n = n
        self.size = max(1, math.ceil(2.0 ** (n * rb) - 1e-9))
        self.key = key
        self.alphabet = alphabet

    def __call__(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z)
        single = z.ndim == 1
        out = uniform_index(hash_rows(np.atleast_2d(z), self.key, self.alphabet), self.size)
        return int(out[0]) if single else out


class BlockCodebook:
    """Lazily generated codebook of one block."""

    def __init__(self, laws: SchemeLaws, n: int, rates: SchemeRates, block: int, seed: int):
        self.laws = laws
        self.n = n
        self.rates = rates
        self.block = block
        self.seed = seed
        self.k = rates.sizes(n)
        L, K1, Kt, K2 = self.k["L"], self.k["K1"], self.k["Kt"], self.k["K2"]
        need = max(L * n, K1 * Kt * n)
        if need > MAX_TABLE_CELLS:
            raise BudgetExceededError(
                f"codebook needs {need} cells per table, limit is {MAX_TABLE_CELLS}",
                required=need, limit=MAX_TABLE_CELLS)
        if K1 * K2 > MAX_CANDIDATE_PAIRS:
            raise BudgetExceededError(
                f"decoder would search {K1 * K2} message pairs, limit is {MAX_CANDIDATE_PAIRS}",
                required=K1 * K2, limit=MAX_CANDIDATE_PAIRS)
        self.bins = BinMap(n, rates.rb, subseed(seed, block, "bin"), laws.sizes["Z"])
        self._z_cache: dict = {}

    @cached_property
    def u_table(self) -> np.ndarray:
        """u^n(l) for every bin index l: shape (L, n)."""
        w = rng_for(self.seed, self.block, "u").random((self.k["L"], self.n))
        return _sample(w, _cdf(self.laws.p_u))

    @cached_property
    def xr_table(self) -> np.ndarray:
        """x_r^n(u^n(l)) for every l: shape (L, n)."""
        w = rng_for(self.seed, self.block, "xr").random((self.k["L"], self.n))
        return _sample(w, _cdf(self.laws.p_xr_u)[self.u_table])

    def u(self, l: int) -> np.ndarray:
        return self.u_table[l]

    def xr(self, l: int) -> np.ndarray:
        return self.xr_table[l]

    def z_table(self, xr: np.ndarray, u: np.ndarray, s: np.ndarray) -> np.ndarray:
        """z^n(m', k | x_r^n, u^n, s^n), row m' * Kt + k."""
        key = (xr.tobytes(), u.tobytes(), s.tobytes())
        tab = self._z_cache.get(key)
        if tab is None:
            rows = self.k["K1"] * self.k["Kt"]
            probs = self.laws.p_z[xr, u, s]                              # (n, |Z|)
            w = rng_for(self.seed, self.block, "z", *key).random((rows, self.n))
            tab = _inverse_cdf(w, probs)
            self._z_cache = {key: tab}
        return tab

    def z(self, m1: int, k: int, xr, u, s) -> np.ndarray:
        return self.z_table(xr, u, s)[m1 * self.k["Kt"] + k]

    def x_table(self, z: np.ndarray, xr: np.ndarray, u: np.ndarray, s: np.ndarray) -> np.ndarray:
        """x^n(m'' | z^n, x_r^n, u^n, s^n) for every m'': shape (K2, n)."""
        probs = self.laws.p_x[z, xr, u, s]                                # (n, |X|)
        K2 = self.k["K2"]
        if np.all(probs.max(axis=-1) >= 1.0 - 1e-15):
            return np.broadcast_to(np.argmax(probs, axis=-1), (K2, self.n))
        w = rng_for(self.seed, self.block, "x", z.tobytes(), xr.tobytes(), u.tobytes(), s.tobytes()).random((K2, self.n))
        return _inverse_cdf(w, probs)

    def fallback_k(self, m1: int) -> int:
        """Uniform choice of k after a covering failure (reproducible by the decoder)."""
        return int(subseed(self.seed, self.block, "fallback", m1) % self.k["Kt"])


@dataclass
class EncodeResult:
    k: int
    l_new: int
    x: np.ndarray
    z: np.ndarray
    covered: bool


def cover(cb: BlockCodebook, cb_next: Optional[BlockCodebook], z_tab: np.ndarray,
          s_next: Optional[np.ndarray], eps: float):
    """For every m' of a z-table, the first k whose bin points at a u-codeword of
    the next block that is typical with the next states.

    Returns (k per m', bin per m', covered flags, bins of all rows).
    """
    K1, Kt = cb.k["K1"], cb.k["Kt"]
    bins = cb.bins(z_tab)
    if cb_next is None or s_next is None:
        k = np.zeros(K1, dtype=np.int64)
        return k, bins.reshape(K1, Kt)[:, 0], np.ones(K1, bool), bins
    u_next = cb_next.u_table[bins]                                        # (K1*Kt, n)
    laws = cb.laws
    cells = cell_index((np.broadcast_to(s_next, u_next.shape), u_next), laws.p_su.shape)
    ok = typical_mask(cells, laws.p_su.reshape(-1), eps).reshape(K1, Kt)
    covered = ok.any(axis=1)
    k = np.argmax(ok, axis=1)
    for m in np.flatnonzero(~covered):
        k[m] = cb.fallback_k(int(m))
    l = bins.reshape(K1, Kt)[np.arange(K1), k]
    return k, l, covered, bins


def encode_block(cb: BlockCodebook, m1: int, m2: int, l_prev: int, s_cur: np.ndarray,
                 s_next: Optional[np.ndarray], eps: float,
                 cb_next: Optional[BlockCodebook] = None) -> EncodeResult:
    """Encoder of one block.

    ``cb_next`` supplies the next block's u-codewords for the covering search;
    without it (last block) k = 0 is sent.
    """
    u = cb.u(l_prev)
    xr = cb.xr(l_prev)
    z_tab = cb.z_table(xr, u, s_cur)
    Kt = cb.k["Kt"]
    rows = z_tab[m1 * Kt:(m1 + 1) * Kt]
    if cb_next is None or s_next is None:
        k, covered = 0, True
    else:
        u_next = cb_next.u_table[cb.bins(rows)]
        cells = cell_index((np.broadcast_to(s_next, u_next.shape), u_next), cb.laws.p_su.shape)
        ok = typical_mask(cells, cb.laws.p_su.reshape(-1), eps)
        covered = bool(ok.any())
        k = int(np.argmax(ok)) if covered else cb.fallback_k(m1)
    z = rows[k]
    x = cb.x_table(z, xr, u, s_cur)[m2]
    return EncodeResult(k, cb.bins(z), np.array(x), z, covered)


def relay_step(cb: BlockCodebook, l_prev: int) -> np.ndarray:
    return cb.xr(l_prev)


def relay_update(cb: BlockCodebook, z_observed: np.ndarray) -> int:
    return cb.bins(z_observed)


def build_block_codebook(spec: SdRcSpec, d: SdRcDecision, n: int, rates: SchemeRates,
                         block: int, seed: int, laws: Optional[SchemeLaws] = None) -> BlockCodebook:
    return BlockCodebook(laws or SchemeLaws(spec, d), n, rates, block, seed)
