"""Capacity expressions and rate-region bounds for fixed decisions.

Each ``*_objective`` builder returns a :class:`FactoredObjective` whose
branches are the same expressions the point evaluators compute, so the
optimizer and the evaluators cannot drift apart.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, asdict

import numpy as np
from scipy.optimize import minimize_scalar

from .channels import (
    CAUSAL,
    NONCAUSAL,
    NOSTATE,
    STRICTLY_CAUSAL,
    MacDecision,
    MacSpec,
    PtpSeSpec,
    SdRcDecision,
    SdRcSpec,
    assemble_mac,
    assemble_ptp_se,
    assemble_sdrc,
)
from .errors import AlphabetMismatchError, DomainError
from .objective import FactoredObjective, FreeFactor, H, I, InfoExpr
from .prob import Alphabet, CondPmf, JointPmf, binary_entropy, compose

SLACK_TOL = 1e-9


@dataclass(frozen=True)
class SdRcValue:
    rate_bound_1: float
    rate_bound_2: float
    value: float
    slack: float
    feasible: bool

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class MacRateBounds:
    b_r1: float
    b_r2: float
    b_sum_a: float
    b_sum_b: float
    slack: float
    feasible: bool

    def as_tuple(self):
        return (self.b_r1, self.b_r2, self.b_sum_a, self.b_sum_b)

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class RatePoint:
    r1: float
    r2: float

    def __post_init__(self):
        if self.r1 < -SLACK_TOL or self.r2 < -SLACK_TOL:
            raise DomainError(f"rate point ({self.r1}, {self.r2}) has a negative coordinate")


# ---------------------------------------------------------------------------
# expressions

SDRC_BOUND_1 = I(("X", "X_r"), "Y", "S")
SDRC_SLACK = H("Z", ("X_r", "S", "U")) - I("U", "S")
SDRC_BOUND_2 = I("X", "Y", ("X_r", "Z", "S", "U")) + SDRC_SLACK

MAC_SLACK = H("Z", ("S1", "U")) - I("U", "S1", "S2")
MAC_R1 = I("X1", "Y", ("X2", "Z", "S1", "S2", "U")) + MAC_SLACK
MAC_R2 = I("X2", "Y", ("X1", "S1", "S2", "U"))
MAC_SUM_A = I(("X1", "X2"), "Y", ("Z", "S1", "S2", "U")) + MAC_SLACK
MAC_SUM_B = I(("X1", "X2"), "Y", ("S1", "S2"))
MAC_BOUNDS = (MAC_R1, MAC_R2, MAC_SUM_A, MAC_SUM_B)


def _sdrc_from_joint(joint: JointPmf, causal: bool = False) -> SdRcValue:
    b1 = SDRC_BOUND_1.evaluate(joint)
    b2 = SDRC_BOUND_2.evaluate(joint)
    slack = float("inf") if causal else SDRC_SLACK.evaluate(joint)
    return SdRcValue(b1, b2, min(b1, b2), slack, slack >= -SLACK_TOL)


def sdrc_value(spec: SdRcSpec, d: SdRcDecision) -> SdRcValue:
    """Both rate bounds of the non-causal capacity expression for a fixed decision."""
    return _sdrc_from_joint(assemble_sdrc(spec, d))


def sdrc_causal_value(spec: SdRcSpec, d: SdRcDecision) -> SdRcValue:
    """Causal expression: no auxiliary, hence no binning constraint."""
    if d.mode == NONCAUSAL:
        if d.u_size != 1:
            raise DomainError("the causal expression takes p_{X_r} p_{X|X_r,S}; got a non-singleton U")
    return _sdrc_from_joint(assemble_sdrc(spec, d), causal=True)


def sdrc_nostate_value(spec: SdRcSpec, d: SdRcDecision) -> SdRcValue:
    """State-free expression: min{I(X,X_r;Y), I(X;Y|X_r,Z)+H(Z|X_r)}."""
    if spec.sizes["S"] != 1:
        raise DomainError("the state-free expression needs a singleton state alphabet")
    joint = assemble_sdrc(spec, d)
    b1 = I(("X", "X_r"), "Y").evaluate(joint)
    b2 = (I("X", "Y", ("X_r", "Z")) + H("Z", "X_r")).evaluate(joint)
    return SdRcValue(b1, b2, min(b1, b2), float("inf"), True)


def mac_bounds_from_joint(joint: JointPmf) -> MacRateBounds:
    vals = [e.evaluate(joint) for e in MAC_BOUNDS]
    slack = MAC_SLACK.evaluate(joint)
    return MacRateBounds(*vals, slack, slack >= -SLACK_TOL)


def mac_bounds(spec: MacSpec, d: MacDecision) -> MacRateBounds:
    """The four bounds and the binning slack; the same formulas serve both cribbing modes."""
    return mac_bounds_from_joint(assemble_mac(spec, d))


def case_a_bounds(joint: JointPmf) -> tuple[float, float, float, float]:
    """Region when the cribbed signal is constant (U independent of the states)."""
    s = ("S1", "S2")
    return (
        I("X1", "Y", s + ("U", "X2")).evaluate(joint),
        I("X2", "Y", s + ("U", "X1")).evaluate(joint),
        I(("X1", "X2"), "Y", s + ("U",)).evaluate(joint),
        I(("X1", "X2"), "Y", s).evaluate(joint),
    )


def inner_lp(bounds, w1: float, w2: float) -> tuple[float, float, float]:
    """max w1 r1 + w2 r2 over {r >= 0, r1 <= a, r2 <= b, r1 + r2 <= min(c1, c2)}."""
    a, b, c1, c2 = (max(float(v), 0.0) for v in bounds)
    c = min(c1, c2)
    if w1 >= w2:
        r1 = min(a, c)
        r2 = min(b, c - r1)
    else:
        r2 = min(b, c)
        r1 = min(a, c - r2)
    return w1 * r1 + w2 * r2, r1, r2


# ---------------------------------------------------------------------------
# Case B: conferencing link

def conferencing_region_bounds(spec: MacSpec, p_u_s, p_x1c, p_x2, x1p_size: int) -> dict:
    """Bounds of the conferencing reduction with a uniform private letter.

    The encoder-1 alphabet is X1 = X1c x X1p with letter index
    ``x1c * x1p_size + x1p``; the cribbed signal is x1p and the output ignores
    it. ``p_u_s[s, u]``, ``p_x1c[u, s, x1c]``, ``p_x2[u, x2]`` (one state).
    """
    sz = spec.sizes
    nx1 = sz["X1"]
    if x1p_size < 1 or nx1 % x1p_size:
        raise AlphabetMismatchError(f"|X1|={nx1} is not a multiple of |X1p|={x1p_size}")
    nx1c = nx1 // x1p_size
    if sz["S2"] != 1:
        raise AlphabetMismatchError("the conferencing reduction is stated for a single state")
    grid = np.arange(nx1).reshape(nx1c, x1p_size)
    x1p = np.broadcast_to(np.arange(x1p_size)[None, :], (nx1c, x1p_size)).reshape(-1)
    want_z = np.repeat(x1p[:, None], sz["S1"], axis=1)
    if not np.array_equal(spec.z_table, want_z):
        raise AlphabetMismatchError("z(x1, s) must equal the private component x1p")
    k = spec.kernel.reshape(nx1c, x1p_size, *spec.kernel.shape[1:])
    if not np.allclose(k, k[:, :1]):
        raise AlphabetMismatchError("the output kernel must not depend on the private component")
    del grid

    p_u_s = np.asarray(p_u_s, float)
    p_x1c = np.asarray(p_x1c, float)
    p_x2 = np.asarray(p_x2, float)
    nu = p_u_s.shape[1]
    # p(u, x1 | s) = p(u|s) p(x1c|u,s) / |X1p|
    pux1 = np.einsum("su,usc->suc", p_u_s, p_x1c)
    pux1 = np.repeat(pux1[:, :, :, None], x1p_size, axis=3).reshape(sz["S1"], nu, nx1) / x1p_size
    d = MacDecision(STRICTLY_CAUSAL, pux1, np.repeat(p_x2[:, None, :], 1, axis=1))
    joint = assemble_mac(spec, d)

    # relabel X1 -> (X1c, X1p) to evaluate the reduced bounds
    probs = joint.probs
    ax = joint.names.index("X1")
    shape = list(probs.shape)
    shape[ax:ax + 1] = [nx1c, x1p_size]
    new = probs.reshape(shape)
    alph = []
    for a in joint.axes:
        if a.name == "X1":
            alph += [Alphabet("X1c", nx1c), Alphabet("X1p", x1p_size)]
        else:
            alph.append(a)
    j2 = JointPmf(alph, new)
    s = ("S1", "S2")
    r12 = float(np.log2(x1p_size))
    ius = I("U", "S1", "S2").evaluate(j2)
    return {
        "b_r1": I("X1c", "Y", ("X2", "U") + s).evaluate(j2) + r12 - ius,
        "b_r2": I("X2", "Y", ("X1c", "U") + s).evaluate(j2),
        "b_sum": min(I(("X1c", "X2"), "Y", s).evaluate(j2),
                     I(("X1c", "X2"), "Y", ("U",) + s).evaluate(j2) + r12 - ius),
        "r12": r12,
        "h_x1p": H("X1p", ("U",) + s).evaluate(j2),
        "slack": r12 - ius,
        "joint": joint,
    }


# ---------------------------------------------------------------------------
# point-to-point with a state encoder

def ptp_se_noncausal(spec: PtpSeSpec, p_u_s, p_x2_u) -> dict:
    """I(X2;Y|U,S) and the budget slack log2|X1| - I(U;S)."""
    joint = assemble_ptp_se(spec, p_u_s, p_x2_u)
    return {
        "value": I("X2", "Y", ("U", "S")).evaluate(joint),
        "constraint_slack": spec.rate_budget - I("U", "S").evaluate(joint),
    }


def ptp_se_causal(spec: PtpSeSpec, f, p_x2_x1) -> float:
    """I(X2;Y|S,X1) with X1 = f(S) and X2 drawn from p(x2|x1)."""
    sz = spec.sizes
    f = np.asarray(f)
    if f.shape != (sz["S"],):
        raise DomainError(f"state map must have {sz['S']} entries")
    S, X1, X2, Y = (Alphabet(n, sz[n]) for n in ("S", "X1", "X2", "Y"))
    joint = compose([
        CondPmf.unconditional(S, spec.p_s),
        CondPmf.deterministic(X1, (S,), f),
        CondPmf((X2,), (X1,), p_x2_x1),
        CondPmf((Y,), (X2, S), spec.kernel),
    ])
    return I("X2", "Y", ("S", "X1")).evaluate(joint)


def ptp_se_causal_bruteforce(spec: PtpSeSpec, levels: int = 1000):
    """Exhaustive search over all maps S -> X1 and a grid on each row of p(x2|x1).

    Only binary X2 is supported, so each row is a single probability.
    Returns (value, map, p_x2_x1).
    """
    sz = spec.sizes
    if sz["X2"] != 2:
        raise DomainError("brute force is implemented for binary X2")
    grid = np.linspace(0.0, 1.0, levels + 1)
    best = (-np.inf, None, None)
    for f in itertools.product(range(sz["X1"]), repeat=sz["S"]):
        f = np.array(f)
        # rows for distinct x1 letters decouple: I(X2;Y|S,X1) = sum_x1 p(x1) I(X2;Y|S,X1=x1)
        total = 0.0
        rows = np.full((sz["X1"], 2), 0.5)
        for x1 in range(sz["X1"]):
            mask = f == x1
            mass = spec.p_s[mask].sum()
            if mass <= 0:
                continue
            ps = spec.p_s[mask] / mass
            k = spec.kernel[:, mask, :]  # (x2, s', y)
            q = np.stack([1 - grid, grid], axis=1)  # (g, x2)
            py_s = np.einsum("gx,xsy->gsy", q, k)
            hy_s = _h(py_s, axis=2)
            hy_xs = np.einsum("gx,xs->gs", q, _h(k, axis=2))
            vals = ((hy_s - hy_xs) * ps[None, :]).sum(axis=1)
            j = int(np.argmax(vals))
            rows[x1] = q[j]
            total += mass * vals[j]
        if total > best[0]:
            best = (total, f, rows)
    return best


def _h(p, axis):
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(p > 0, p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
    return -t.sum(axis=axis)


# ---------------------------------------------------------------------------
# closed forms for the three-state example

def z_channel_capacity(alpha: float) -> float:
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"alpha must lie in [0, 1], got {alpha!r}")
    if alpha == 1.0:
        return 0.0
    t = binary_entropy(alpha) / (1.0 - alpha)
    w = 2.0 ** t
    return binary_entropy(w / (1.0 + w)) - t / (1.0 + w)


def _causal_term(beta, alpha, p, cz):
    hb = binary_entropy
    return (p / 2 * cz
            + p / 2 * (hb(beta + (1 - beta) * alpha) - (1 - beta) * hb(alpha))
            + (1 - p) * hb(beta))


def closed_form_example(alpha: float, p: float) -> dict:
    """Non-causal, causal and no-CSI capacities of the three-state example."""
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"alpha must lie in [0, 1], got {alpha!r}")
    if not 0.0 < p < 1.0:
        raise DomainError(f"p must lie in (0, 1), got {p!r}")
    cz = z_channel_capacity(alpha)
    c_nc = p * cz + (1.0 - p)

    grid = np.linspace(0.0, 1.0, 1001)
    vals = np.array([_causal_term(b, alpha, p, cz) for b in grid])
    j = int(np.argmax(vals))
    lo, hi = grid[max(j - 1, 0)], grid[min(j + 1, grid.size - 1)]
    res = minimize_scalar(lambda b: -_causal_term(b, alpha, p, cz), bounds=(lo, hi),
                          method="bounded", options={"xatol": 1e-7})
    c_c = max(vals[j], -res.fun)
    beta = float(res.x) if -res.fun >= vals[j] else float(grid[j])

    c_nocsi = p * (binary_entropy((1 + alpha) / 2) - 0.5 * binary_entropy(alpha)) + (1 - p)
    return {"c_nc": float(c_nc), "c_c": float(c_c), "c_nocsi": float(c_nocsi), "beta": beta}


# ---------------------------------------------------------------------------
# objective builders

def _alph(spec, *names):
    return tuple(Alphabet(n, spec.sizes[n]) for n in names)


def sdrc_objective(spec: SdRcSpec, u_size: int = 2, mode: str = NONCAUSAL) -> FactoredObjective:
    p_s, z_link, out = spec.fixed_factors()
    S, X, Xr = _alph(spec, "S", "X", "X_r")
    if mode == NONCAUSAL:
        if u_size > spec.u_cap:
            raise DomainError(f"|U|={u_size} exceeds the cap {spec.u_cap}")
        U = Alphabet("U", u_size)
        chain = [p_s, FreeFactor("p_u_s", (U,), (S,)), FreeFactor("p_xr_u", (Xr,), (U,)),
                 FreeFactor("p_x_xrus", (X,), (Xr, U, S)), z_link, out]

        def decode(pr):
            return SdRcDecision.noncausal(pr["p_u_s"], pr["p_xr_u"], pr["p_x_xrus"])

        return FactoredObjective(chain, [SDRC_BOUND_1, SDRC_BOUND_2], SDRC_SLACK,
                                 constraint="sdrc_slack", u_size=u_size, preferred=1, decode=decode)
    if mode == CAUSAL:
        chain = [p_s, FreeFactor("p_xr", (Xr,)), FreeFactor("p_x_xrs", (X,), (Xr, S)), z_link, out]
        b2 = I("X", "Y", ("X_r", "Z", "S")) + H("Z", ("X_r", "S"))

        def decode(pr):
            return SdRcDecision.causal(pr["p_xr"], pr["p_x_xrs"])

        return FactoredObjective(chain, [SDRC_BOUND_1, b2], None, preferred=1, decode=decode)
    if mode == NOSTATE:
        if spec.sizes["S"] != 1:
            raise DomainError("the state-free problem needs a singleton state alphabet")
        chain = [p_s, FreeFactor("p_xr", (Xr,)), FreeFactor("p_x_xr", (X,), (Xr,)), z_link, out]
        b1 = I(("X", "X_r"), "Y")
        b2 = I("X", "Y", ("X_r", "Z")) + H("Z", "X_r")

        def decode(pr):
            return SdRcDecision.nostate(pr["p_xr"][:, None] * pr["p_x_xr"])

        return FactoredObjective(chain, [b1, b2], None, preferred=1, decode=decode)
    raise DomainError(f"unknown mode {mode!r}")


def mac_objective(spec: MacSpec, u_size: int = 2, cribbing: str = STRICTLY_CAUSAL,
                  weights=None) -> FactoredObjective:
    """MAC problem; without weights the objective is the R1 bound, with weights
    (w1, w2) it is the inner-LP value of the weighted sum."""
    if u_size > spec.u_cap:
        raise DomainError(f"|U|={u_size} exceeds the cap {spec.u_cap}")
    p_s, z_link, out = spec.fixed_factors()
    S1, S2, X1, X2, Z = _alph(spec, "S1", "S2", "X1", "X2", "Z")
    U = Alphabet("U", u_size)
    f1 = FreeFactor("p_ux1_s1", (U, X1), (S1,))
    if cribbing == STRICTLY_CAUSAL:
        chain = [p_s, f1, FreeFactor("p_x2", (X2,), (U, S2)), z_link, out]
    elif cribbing == CAUSAL:
        chain = [p_s, f1, z_link, FreeFactor("p_x2", (X2,), (Z, U, S2)), out]
    else:
        raise DomainError(f"unknown cribbing mode {cribbing!r}")

    def decode(pr):
        return MacDecision(cribbing, pr["p_ux1_s1"], pr["p_x2"])

    w1, w2 = (1.0, 0.0) if weights is None else (float(weights[0]), float(weights[1]))
    branches = weighted_branches(w1, w2)
    return FactoredObjective(chain, branches, MAC_SLACK, constraint="mac_slack",
                             u_size=u_size, preferred=0, decode=decode)


def weighted_branches(w1: float, w2: float) -> list[InfoExpr]:
    """Branches whose minimum is the inner-LP value for weights (w1, w2)."""
    if w1 < 0 or w2 < 0 or (w1 == 0 and w2 == 0):
        raise DomainError("weights must be nonnegative and not both zero")
    a, b, c1, c2 = MAC_BOUNDS
    if w1 < w2:
        a, b = b, a
        w1, w2 = w2, w1
    out = [w1 * a + w2 * b]
    for c in (c1, c2):
        out.append((w1 - w2) * a + w2 * c)
        out.append(w1 * c)
    return out


def ptp_se_objective(spec: PtpSeSpec, u_size: int = 3) -> FactoredObjective:
    if u_size > spec.u_cap:
        raise DomainError(f"|U|={u_size} exceeds the cap {spec.u_cap}")
    sz = spec.sizes
    S, X2, Y = Alphabet("S", sz["S"]), Alphabet("X2", sz["X2"]), Alphabet("Y", sz["Y"])
    U = Alphabet("U", u_size)
    chain = [CondPmf.unconditional(S, spec.p_s), FreeFactor("p_u_s", (U,), (S,)),
             FreeFactor("p_x2_u", (X2,), (U,)), CondPmf((Y,), (X2, S), spec.kernel)]
    slack = InfoExpr.constant(spec.rate_budget) - I("U", "S")

    def decode(pr):
        return {"p_u_s": np.array(pr["p_u_s"]), "p_x2_u": np.array(pr["p_x2_u"])}

    return FactoredObjective(chain, [I("X2", "Y", ("U", "S"))], slack,
                             constraint="ptp_budget", u_size=u_size, preferred=0, decode=decode)
