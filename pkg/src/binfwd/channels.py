"""Channel and decision definitions, and assembly of the joints each bound needs.

Axis names used throughout:

* SD-RC: ``S, U, X, X_r, Z, Y``
* MAC with cribbing: ``S1, S2, U, X1, X2, Z, Y``
* point-to-point with a state encoder: ``S, U, X1, X2, Y``

Deterministic links are plain integer lookup tables; they become indicator
kernels only when a joint is assembled.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import AlphabetMismatchError, DomainError, NormalizationError, SchemaError
from .prob import Alphabet, CondPmf, JointPmf, compose

NONCAUSAL, CAUSAL, NOSTATE = "noncausal", "causal", "nostate"
STRICTLY_CAUSAL = "strictly_causal"


def _arr(x, shape, what):
    a = np.asarray(x, dtype=float)
    if a.shape != tuple(shape):
        raise DomainError(f"{what}: expected shape {tuple(shape)}, got {a.shape}")
    return a


def _table(x, shape, limit, what):
    a = np.asarray(x)
    if a.shape != tuple(shape):
        raise DomainError(f"{what}: expected shape {tuple(shape)}, got {a.shape}")
    if not np.issubdtype(a.dtype, np.integer):
        if not np.all(np.equal(np.mod(a, 1), 0)):
            raise DomainError(f"{what}: lookup table must hold integers")
        a = a.astype(int)
    if a.size and (a.min() < 0 or a.max() >= limit):
        bad = np.argwhere((a < 0) | (a >= limit))[0]
        raise DomainError(f"{what}: entry at index {tuple(int(i) for i in bad)} outside [0, {limit})")
    a = a.astype(int)
    a.setflags(write=False)
    return a


def _rows_ok(kernel, what):
    k = np.asarray(kernel)
    if k.min() < -1e-12:
        bad = np.argwhere(k < -1e-12)[0]
        raise NormalizationError(f"{what}: negative entry at index {tuple(int(i) for i in bad)}")
    sums = k.sum(axis=-1)
    bad = np.argwhere(np.abs(sums - 1.0) > 1e-9)
    if bad.size:
        idx = tuple(int(i) for i in bad[0])
        raise NormalizationError(f"{what}: row {idx} sums to {sums[idx]!r}")


# ---------------------------------------------------------------------------
# SD-RC

@dataclass(frozen=True)
class SdRcSpec:
    """State-dependent semi-deterministic relay channel.

    ``z_table[x, x_r, s]`` is the relay observation; ``kernel[x, x_r, z, s, y]``
    is p(y | x, x_r, z, s).
    """

    p_s: np.ndarray
    z_table: np.ndarray
    kernel: np.ndarray

    def __post_init__(self):
        p_s = np.asarray(self.p_s, dtype=float)
        if p_s.ndim != 1:
            raise DomainError("p_s must be one-dimensional")
        _rows_ok(p_s, "state law")
        kernel = np.asarray(self.kernel, dtype=float)
        if kernel.ndim != 5:
            raise DomainError("SD-RC kernel must have axes (X, X_r, Z, S, Y)")
        nx, nxr, nz, ns, ny = kernel.shape
        if ns != p_s.size:
            raise AlphabetMismatchError(f"kernel has |S|={ns} but p_s has {p_s.size} entries")
        z = _table(self.z_table, (nx, nxr, ns), nz, "z_table")
        _rows_ok(kernel, "output kernel")
        object.__setattr__(self, "p_s", p_s)
        object.__setattr__(self, "z_table", z)
        object.__setattr__(self, "kernel", kernel)

    @property
    def sizes(self) -> dict:
        nx, nxr, nz, ns, ny = self.kernel.shape
        return {"S": ns, "X": nx, "X_r": nxr, "Z": nz, "Y": ny}

    def alphabet(self, name: str) -> Alphabet:
        return Alphabet(name, self.sizes[name])

    @property
    def u_cap(self) -> int:
        s = self.sizes
        return min(s["S"] * s["X"] * s["X_r"], s["S"] * s["Y"] + 1)

    def fixed_factors(self) -> tuple[CondPmf, CondPmf, CondPmf]:
        S, X, Xr, Z, Y = (self.alphabet(n) for n in ("S", "X", "X_r", "Z", "Y"))
        return (
            CondPmf.unconditional(S, self.p_s),
            CondPmf.deterministic(Z, (X, Xr, S), self.z_table),
            CondPmf((Y,), (X, Xr, Z, S), self.kernel),
        )


@dataclass(frozen=True)
class SdRcDecision:
    """Optimization variables of the SD-RC capacity expressions.

    noncausal: ``p_u_s[s, u]``, ``p_xr_u[u, x_r]``, ``p_x_xrus[x_r, u, s, x]``
    causal:    ``p_xr[x_r]``, ``p_x_xrs[x_r, s, x]``
    nostate:   ``p_xr_x[x_r, x]`` (a joint)
    """

    mode: str
    p_u_s: Optional[np.ndarray] = None
    p_xr_u: Optional[np.ndarray] = None
    p_x_xrus: Optional[np.ndarray] = None
    p_xr: Optional[np.ndarray] = None
    p_x_xrs: Optional[np.ndarray] = None
    p_xr_x: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.mode not in (NONCAUSAL, CAUSAL, NOSTATE):
            raise DomainError(f"unknown SD-RC decision mode {self.mode!r}")
        need = {
            NONCAUSAL: ("p_u_s", "p_xr_u", "p_x_xrus"),
            CAUSAL: ("p_xr", "p_x_xrs"),
            NOSTATE: ("p_xr_x",),
        }[self.mode]
        for name in need:
            v = getattr(self, name)
            if v is None:
                raise DomainError(f"{self.mode} decision needs {name}")
            v = np.asarray(v, dtype=float)
            if name == "p_xr_x":
                _rows_ok(v.reshape(-1), name)
            else:
                _rows_ok(v, name)
            object.__setattr__(self, name, v)

    @classmethod
    def noncausal(cls, p_u_s, p_xr_u, p_x_xrus):
        return cls(NONCAUSAL, p_u_s=p_u_s, p_xr_u=p_xr_u, p_x_xrus=p_x_xrus)

    @classmethod
    def causal(cls, p_xr, p_x_xrs):
        return cls(CAUSAL, p_xr=p_xr, p_x_xrs=p_x_xrs)

    @classmethod
    def nostate(cls, p_xr_x):
        return cls(NOSTATE, p_xr_x=p_xr_x)

    @property
    def u_size(self) -> int:
        return self.p_u_s.shape[1] if self.mode == NONCAUSAL else 1

    def as_noncausal(self, n_states: int) -> SdRcDecision:
        """The same kernels written with an explicit (singleton) U."""
        if self.mode == NONCAUSAL:
            return self
        if self.mode == CAUSAL:
            p_xr, p_x_xrs = self.p_xr, self.p_x_xrs
        else:
            p_xr = self.p_xr_x.sum(axis=1)
            safe = np.where(p_xr[:, None] > 0, p_xr[:, None], 1.0)
            cond = np.where(p_xr[:, None] > 0, self.p_xr_x / safe, 1.0 / self.p_xr_x.shape[1])
            p_x_xrs = np.repeat(cond[:, None, :], n_states, axis=1)
        return SdRcDecision.noncausal(
            np.ones((n_states, 1)), p_xr[None, :], p_x_xrs[:, None, :, :]
        )

    def to_dict(self) -> dict:
        out = {"mode": self.mode}
        for k in ("p_u_s", "p_xr_u", "p_x_xrus", "p_xr", "p_x_xrs", "p_xr_x"):
            v = getattr(self, k)
            if v is not None:
                out[k] = v.tolist()
        return out

    @classmethod
    def from_dict(cls, d: dict) -> SdRcDecision:
        kw = {k: v for k, v in d.items() if k != "mode" and v is not None}
        return cls(d["mode"], **kw)


def _check_u(u_size: int, cap: int, what: str):
    if u_size > cap:
        raise DomainError(f"|U|={u_size} exceeds the cardinality cap {cap} for {what}")


def assemble_sdrc(spec: SdRcSpec, d: SdRcDecision) -> JointPmf:
    """Joint over (S, U, X_r, X, Z, Y); causal/nostate modes use a singleton U."""
    sz = spec.sizes
    nd = d.as_noncausal(sz["S"])
    nu = nd.p_u_s.shape[1]
    expect = {
        "p_u_s": (sz["S"], nu),
        "p_xr_u": (nu, sz["X_r"]),
        "p_x_xrus": (sz["X_r"], nu, sz["S"], sz["X"]),
    }
    for name, shape in expect.items():
        got = getattr(nd, name).shape
        if got != shape:
            raise AlphabetMismatchError(f"{name} has shape {got}, channel requires {shape}")
    _check_u(nu, spec.u_cap, "the SD-RC")
    S, X, Xr = spec.alphabet("S"), spec.alphabet("X"), spec.alphabet("X_r")
    U = Alphabet("U", nu)
    p_s, z_link, out = spec.fixed_factors()
    return compose([
        p_s,
        CondPmf((U,), (S,), nd.p_u_s),
        CondPmf((Xr,), (U,), nd.p_xr_u),
        CondPmf((X,), (Xr, U, S), nd.p_x_xrus),
        z_link,
        out,
    ])


# ---------------------------------------------------------------------------
# MAC with partial cribbing

@dataclass(frozen=True)
class MacSpec:
    """State-dependent MAC with partial cribbing.

    ``p_s1s2[s1, s2]``, ``z_table[x1, s1]``, ``kernel[x1, x2, s1, s2, y]``.
    A one-state MAC uses a singleton S2.
    """

    p_s1s2: np.ndarray
    z_table: np.ndarray
    kernel: np.ndarray
    z_size: Optional[int] = None

    def __post_init__(self):
        p = np.asarray(self.p_s1s2, dtype=float)
        if p.ndim != 2:
            raise DomainError("p_s1s2 must be a 2-D joint over (S1, S2)")
        _rows_ok(p.reshape(-1), "state law")
        kernel = np.asarray(self.kernel, dtype=float)
        if kernel.ndim != 5:
            raise DomainError("MAC kernel must have axes (X1, X2, S1, S2, Y)")
        nx1, nx2, ns1, ns2, ny = kernel.shape
        if (ns1, ns2) != p.shape:
            raise AlphabetMismatchError(f"kernel state axes {(ns1, ns2)} != p_s1s2 shape {p.shape}")
        zt = np.asarray(self.z_table)
        nz = self.z_size if self.z_size is not None else (int(zt.max()) + 1 if zt.size else 1)
        z = _table(zt, (nx1, ns1), nz, "z_table")
        _rows_ok(kernel, "output kernel")
        object.__setattr__(self, "p_s1s2", p)
        object.__setattr__(self, "z_table", z)
        object.__setattr__(self, "kernel", kernel)
        object.__setattr__(self, "z_size", int(nz))

    @property
    def sizes(self) -> dict:
        nx1, nx2, ns1, ns2, ny = self.kernel.shape
        nz = self.z_size
        return {"S1": ns1, "S2": ns2, "X1": nx1, "X2": nx2, "Z": nz, "Y": ny}

    def alphabet(self, name: str) -> Alphabet:
        return Alphabet(name, self.sizes[name])

    @property
    def u_cap(self) -> int:
        s = self.sizes
        return min(s["S2"] * s["S1"] * s["X1"] * s["X2"] + 2, s["S1"] * s["S2"] * s["Y"] + 3)

    def fixed_factors(self) -> tuple[CondPmf, CondPmf, CondPmf]:
        S1, S2, X1, X2, Z, Y = (self.alphabet(n) for n in ("S1", "S2", "X1", "X2", "Z", "Y"))
        return (
            CondPmf((S1, S2), (), self.p_s1s2),
            CondPmf.deterministic(Z, (X1, S1), self.z_table),
            CondPmf((Y,), (X1, X2, S1, S2), self.kernel),
        )


@dataclass(frozen=True)
class MacDecision:
    """``p_ux1_s1[s1, u, x1]``; ``p_x2[u, s2, x2]`` (strictly causal) or
    ``p_x2[z, u, s2, x2]`` (causal cribbing)."""

    cribbing: str
    p_ux1_s1: np.ndarray
    p_x2: np.ndarray

    def __post_init__(self):
        if self.cribbing not in (STRICTLY_CAUSAL, CAUSAL):
            raise DomainError(f"unknown cribbing mode {self.cribbing!r}")
        a = np.asarray(self.p_ux1_s1, dtype=float)
        b = np.asarray(self.p_x2, dtype=float)
        if a.ndim != 3:
            raise DomainError("p_ux1_s1 must have axes (S1, U, X1)")
        want = 3 if self.cribbing == STRICTLY_CAUSAL else 4
        if b.ndim != want:
            raise DomainError(
                f"{self.cribbing} p_x2 must have {want} axes "
                + ("(U, S2, X2)" if want == 3 else "(Z, U, S2, X2)")
            )
        _rows_ok(a.reshape(a.shape[0], -1), "p_ux1_s1")
        _rows_ok(b, "p_x2")
        object.__setattr__(self, "p_ux1_s1", a)
        object.__setattr__(self, "p_x2", b)

    @property
    def u_size(self) -> int:
        return self.p_ux1_s1.shape[1]

    def to_dict(self) -> dict:
        return {"cribbing": self.cribbing, "p_ux1_s1": self.p_ux1_s1.tolist(), "p_x2": self.p_x2.tolist()}


def assemble_mac(spec: MacSpec, d: MacDecision) -> JointPmf:
    """Joint over (S1, S2, U, X1, X2, Z, Y)."""
    sz = spec.sizes
    nu = d.u_size
    if d.p_ux1_s1.shape != (sz["S1"], nu, sz["X1"]):
        raise AlphabetMismatchError(
            f"p_ux1_s1 has shape {d.p_ux1_s1.shape}, channel requires {(sz['S1'], nu, sz['X1'])}"
        )
    if d.cribbing == STRICTLY_CAUSAL:
        shape = (nu, sz["S2"], sz["X2"])
    else:
        shape = (sz["Z"], nu, sz["S2"], sz["X2"])
    if d.p_x2.shape != shape:
        raise AlphabetMismatchError(f"p_x2 has shape {d.p_x2.shape}, {d.cribbing} mode requires {shape}")
    _check_u(nu, spec.u_cap, "the MAC")
    S1, S2, X1, X2, Z = (spec.alphabet(n) for n in ("S1", "S2", "X1", "X2", "Z"))
    U = Alphabet("U", nu)
    p_s, z_link, out = spec.fixed_factors()
    if d.cribbing == STRICTLY_CAUSAL:
        f2 = CondPmf((X2,), (U, S2), d.p_x2)
        chain = [p_s, CondPmf((U, X1), (S1,), d.p_ux1_s1), f2, z_link, out]
    else:
        f2 = CondPmf((X2,), (Z, U, S2), d.p_x2)
        chain = [p_s, CondPmf((U, X1), (S1,), d.p_ux1_s1), z_link, f2, out]
    return compose(chain)


# ---------------------------------------------------------------------------
# Point-to-point with a state encoder

@dataclass(frozen=True)
class PtpSeSpec:
    """``p_s[s]``, ``kernel[x2, s, y]``; the state encoder emits letters of X1."""

    p_s: np.ndarray
    kernel: np.ndarray
    x1_size: int

    def __post_init__(self):
        p_s = np.asarray(self.p_s, dtype=float)
        _rows_ok(p_s, "state law")
        kernel = np.asarray(self.kernel, dtype=float)
        if kernel.ndim != 3:
            raise DomainError("PTP kernel must have axes (X2, S, Y)")
        if kernel.shape[1] != p_s.size:
            raise AlphabetMismatchError(f"kernel has |S|={kernel.shape[1]}, p_s has {p_s.size}")
        _rows_ok(kernel, "output kernel")
        if int(self.x1_size) < 1:
            raise DomainError("state-encoder alphabet must have at least one letter")
        object.__setattr__(self, "p_s", p_s)
        object.__setattr__(self, "kernel", kernel)
        object.__setattr__(self, "x1_size", int(self.x1_size))

    @property
    def sizes(self) -> dict:
        nx2, ns, ny = self.kernel.shape
        return {"S": ns, "X1": self.x1_size, "X2": nx2, "Y": ny}

    @property
    def rate_budget(self) -> float:
        return float(np.log2(self.x1_size))

    @property
    def u_cap(self) -> int:
        s = self.sizes
        return s["S"] * s["X2"] + 1


def example_channel(alpha: float, p: float) -> PtpSeSpec:
    """Three-state example: Z-channel, S-channel, noiseless; p_S = (p/2, p/2, 1-p).

    The Z-channel flips input 1 to 0 with probability alpha; the S-channel
    flips input 0 to 1 with probability alpha.
    """
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"alpha must lie in [0, 1], got {alpha!r}")
    if not 0.0 < p < 1.0:
        raise DomainError(f"p must lie in (0, 1), got {p!r}")
    k = np.zeros((2, 3, 2))
    k[0, 0] = [1.0, 0.0]
    k[1, 0] = [alpha, 1.0 - alpha]
    k[0, 1] = [1.0 - alpha, alpha]
    k[1, 1] = [0.0, 1.0]
    k[0, 2] = [1.0, 0.0]
    k[1, 2] = [0.0, 1.0]
    return PtpSeSpec(np.array([p / 2, p / 2, 1.0 - p]), k, 2)


def ptp_se_as_mac(spec: PtpSeSpec) -> MacSpec:
    """Embed as a one-state MAC: z(x1, s) = x1 and an output that ignores x1."""
    sz = spec.sizes
    z = np.repeat(np.arange(sz["X1"])[:, None], sz["S"], axis=1)
    kernel = np.broadcast_to(
        spec.kernel[None, :, :, None, :], (sz["X1"], sz["X2"], sz["S"], 1, sz["Y"])
    ).copy()
    return MacSpec(spec.p_s[:, None], z, kernel, sz["X1"])


def assemble_ptp_se(spec: PtpSeSpec, p_u_s, p_x2_u) -> JointPmf:
    """Joint over (S, U, X2, Y) for the non-causal state-encoder expression."""
    sz = spec.sizes
    p_u_s = np.asarray(p_u_s, dtype=float)
    p_x2_u = np.asarray(p_x2_u, dtype=float)
    nu = p_u_s.shape[1] if p_u_s.ndim == 2 else -1
    if p_u_s.shape != (sz["S"], nu) or p_x2_u.shape != (nu, sz["X2"]):
        raise AlphabetMismatchError(
            f"decision shapes {p_u_s.shape}, {p_x2_u.shape} do not fit |S|={sz['S']}, |X2|={sz['X2']}"
        )
    _check_u(nu, spec.u_cap, "the state-encoder channel")
    S, X2, Y = Alphabet("S", sz["S"]), Alphabet("X2", sz["X2"]), Alphabet("Y", sz["Y"])
    U = Alphabet("U", nu)
    return compose([
        CondPmf.unconditional(S, spec.p_s),
        CondPmf((U,), (S,), p_u_s),
        CondPmf((X2,), (U,), p_x2_u),
        CondPmf((Y,), (X2, S), spec.kernel),
    ])


# ---------------------------------------------------------------------------
# Channel-spec files

MODELS = ("sdrc", "mac", "ptp_se")

_LAYOUT = {
    "sdrc": {"alphabets": ("S", "X", "X_r", "Z", "Y"), "z": ("X", "X_r", "S"), "kernel": ("X", "X_r", "Z", "S", "Y")},
    "mac": {"alphabets": ("S1", "S2", "X1", "X2", "Z", "Y"), "z": ("X1", "S1"), "kernel": ("X1", "X2", "S1", "S2", "Y")},
    "ptp_se": {"alphabets": ("S", "X1", "X2", "Y"), "z": None, "kernel": ("X2", "S", "Y")},
}


def _nested(value, shape, field_name, integer=False):
    try:
        a = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{field_name}: not a rectangular numeric array ({exc})") from None
    if a.shape != tuple(shape):
        raise SchemaError(f"{field_name}: expected shape {tuple(shape)}, got {a.shape}")
    if integer:
        frac = np.argwhere(np.mod(a, 1) != 0)
        if frac.size:
            raise SchemaError(f"{field_name}: non-integer entry at index {tuple(int(i) for i in frac[0])}")
        return a.astype(int)
    return a


def parse_channel(doc: dict):
    """Validate a channel document and build the corresponding spec."""
    if not isinstance(doc, dict):
        raise SchemaError("channel document must be a JSON object")
    model = doc.get("model")
    if model not in MODELS:
        raise SchemaError(f"field 'model' must be one of {MODELS}, got {model!r}")
    layout = _LAYOUT[model]
    alph = doc.get("alphabets")
    if not isinstance(alph, dict):
        raise SchemaError("field 'alphabets' must map names to sizes")
    sizes = {}
    for name in layout["alphabets"]:
        if name == "S2" and name not in alph:
            sizes[name] = 1
            continue
        v = alph.get(name)
        if not isinstance(v, int) or isinstance(v, bool) or v < 1:
            raise SchemaError(f"alphabets.{name}: expected a positive integer, got {v!r}")
        sizes[name] = v
    extra = set(alph) - set(layout["alphabets"])
    if extra:
        raise SchemaError(f"alphabets: unexpected names {sorted(extra)} for model {model!r}")

    n_state = sizes["S"] if "S" in sizes else sizes["S1"] * sizes["S2"]
    p_state = _nested(doc.get("p_state"), (n_state,), "p_state")
    if np.any(p_state < 0):
        raise SchemaError(f"p_state: negative entry at index {int(np.argmax(p_state < 0))}")
    if abs(p_state.sum() - 1.0) > 1e-9:
        raise SchemaError(f"p_state: entries sum to {p_state.sum()!r}, not 1")

    kshape = tuple(sizes[a] for a in layout["kernel"])
    kernel = _nested(doc.get("kernel"), kshape, "kernel")
    if np.any(kernel < 0):
        raise SchemaError(f"kernel: negative entry at index {tuple(int(i) for i in np.argwhere(kernel < 0)[0])}")
    rows = kernel.sum(axis=-1)
    bad = np.argwhere(np.abs(rows - 1.0) > 1e-9)
    if bad.size:
        raise SchemaError(f"kernel: row {tuple(int(i) for i in bad[0])} sums to {rows[tuple(bad[0])]!r}")

    if layout["z"] is not None:
        zshape = tuple(sizes[a] for a in layout["z"])
        z = _nested(doc.get("z_table"), zshape, "z_table", integer=True)
        bad = np.argwhere((z < 0) | (z >= sizes["Z"]))
        if bad.size:
            raise SchemaError(
                f"z_table: entry at index {tuple(int(i) for i in bad[0])} is not a letter of Z (size {sizes['Z']})"
            )

    if model == "sdrc":
        return SdRcSpec(p_state, z, kernel)
    if model == "mac":
        return MacSpec(p_state.reshape(sizes["S1"], sizes["S2"]), z, kernel, sizes["Z"])
    return PtpSeSpec(p_state, kernel, sizes["X1"])


def load_channel(path) -> object:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return parse_channel(doc)


def channel_to_dict(spec) -> dict:
    if isinstance(spec, SdRcSpec):
        s = spec.sizes
        return {
            "model": "sdrc",
            "alphabets": {k: s[k] for k in ("S", "X", "X_r", "Z", "Y")},
            "p_state": spec.p_s.tolist(),
            "z_table": spec.z_table.tolist(),
            "kernel": spec.kernel.tolist(),
        }
    if isinstance(spec, MacSpec):
        s = spec.sizes
        return {
            "model": "mac",
            "alphabets": {k: s[k] for k in ("S1", "S2", "X1", "X2", "Z", "Y")},
            "p_state": spec.p_s1s2.reshape(-1).tolist(),
            "z_table": spec.z_table.tolist(),
            "kernel": spec.kernel.tolist(),
        }
    if isinstance(spec, PtpSeSpec):
        s = spec.sizes
        return {
            "model": "ptp_se",
            "alphabets": {k: s[k] for k in ("S", "X1", "X2", "Y")},
            "p_state": spec.p_s.tolist(),
            "kernel": spec.kernel.tolist(),
        }
    raise TypeError(f"not a channel spec: {type(spec).__name__}")
