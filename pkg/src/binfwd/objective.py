"""Information expressions over factored joints, with analytic gradients.

An :class:`InfoExpr` is a linear combination of joint entropies plus a
constant, so every bound in the package (conditional entropies, conditional
mutual informations, their sums) is one. A :class:`FactoredObjective` ties a
chain of fixed channel factors and free decision factors to a list of such
expressions: the objective value is the minimum over ``branches`` and the
optional ``slack`` must be nonnegative.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .errors import DomainError
from .prob import Alphabet, CondPmf, JointPmf, _names

LN2 = np.log(2.0)
PROB_FLOOR = 1e-12


class InfoExpr:
    """sum_k c_k H(A_k) + const, with H in bits."""

    __slots__ = ("terms", "const")

    def __init__(self, terms: Optional[Mapping[frozenset, float]] = None, const: float = 0.0):
        clean = {}
        for k, v in (terms or {}).items():
            if k and v != 0.0:
                clean[frozenset(k)] = clean.get(frozenset(k), 0.0) + float(v)
        self.terms = {k: v for k, v in clean.items() if v != 0.0}
        self.const = float(const)

    @classmethod
    def entropy(cls, targets, given=()) -> InfoExpr:
        t, g = frozenset(_names(targets)), frozenset(_names(given))
        if t & g:
            raise DomainError(f"targets {sorted(t)} and given {sorted(g)} overlap")
        return cls({t | g: 1.0}) - cls({g: 1.0})

    @classmethod
    def mi(cls, a, b, given=()) -> InfoExpr:
        a, b, g = (frozenset(_names(x)) for x in (a, b, given))
        if a & b or a & g or b & g:
            raise DomainError("mutual-information axis sets must be pairwise disjoint")
        return cls({a | g: 1.0, b | g: 1.0, a | b | g: -1.0, g: -1.0})

    @classmethod
    def constant(cls, c: float) -> InfoExpr:
        return cls({}, c)

    def __add__(self, other):
        other = other if isinstance(other, InfoExpr) else InfoExpr.constant(other)
        terms = dict(self.terms)
        for k, v in other.terms.items():
            terms[k] = terms.get(k, 0.0) + v
        return InfoExpr(terms, self.const + other.const)

    __radd__ = __add__

    def __neg__(self):
        return InfoExpr({k: -v for k, v in self.terms.items()}, -self.const)

    def __sub__(self, other):
        return self + (-(other if isinstance(other, InfoExpr) else InfoExpr.constant(other)))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, c: float):
        c = float(c)
        return InfoExpr({k: c * v for k, v in self.terms.items()}, c * self.const)

    __rmul__ = __mul__

    @property
    def axes(self) -> frozenset:
        out = frozenset()
        for k in self.terms:
            out |= k
        return out

    def evaluate(self, joint: JointPmf) -> float:
        return float(evaluate_batch([self], joint.probs[None], joint.names)[0, 0])

    def __repr__(self):
        parts = [f"{v:+g}H({','.join(sorted(k))})" for k, v in sorted(self.terms.items(), key=lambda kv: sorted(kv[0]))]
        if self.const:
            parts.append(f"{self.const:+g}")
        return "InfoExpr(" + " ".join(parts or ["0"]) + ")"


H = InfoExpr.entropy
I = InfoExpr.mi


def _plogp(p: np.ndarray, axes: tuple) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(p > 0.0, p * np.log2(np.where(p > 0.0, p, 1.0)), 0.0)
    return -t.sum(axis=axes) if axes else -t


def evaluate_batch(exprs: Sequence[InfoExpr], probs: np.ndarray, names: Sequence[str]) -> np.ndarray:
    """Evaluate expressions on a batch of joints.

    ``probs`` has a leading batch axis followed by the axes ``names``.
    Returns an array of shape (batch, len(exprs)).
    """
    names = tuple(names)
    index = {n: i + 1 for i, n in enumerate(names)}
    cache: dict = {}

    def h(subset: frozenset) -> np.ndarray:
        if subset not in cache:
            for n in subset:
                if n not in index:
                    raise DomainError(f"expression refers to axis {n!r} absent from the joint {names}")
            drop = tuple(index[n] for n in names if n not in subset)
            marg = probs.sum(axis=drop) if drop else probs
            cache[subset] = _plogp(marg, tuple(range(1, marg.ndim)))
        return cache[subset]

    out = np.empty((probs.shape[0], len(exprs)))
    for j, e in enumerate(exprs):
        acc = np.full(probs.shape[0], e.const)
        for k, c in e.terms.items():
            acc = acc + c * h(k)
        out[:, j] = acc
    return out


def joint_gradient(expr: InfoExpr, probs: np.ndarray, names: Sequence[str]) -> np.ndarray:
    """d expr / d p(x) for every cell of an (unbatched) joint tensor."""
    names = tuple(names)
    g = np.zeros_like(probs)
    for k, c in expr.terms.items():
        drop = tuple(i for i, n in enumerate(names) if n not in k)
        marg = probs.sum(axis=drop, keepdims=True) if drop else probs
        g = g + c * (-np.log2(np.maximum(marg, PROB_FLOOR)) - 1.0 / LN2)
    return g


@dataclass(frozen=True)
class FreeFactor:
    """A decision kernel p(target | given); parameter layout is given..., target...."""

    name: str
    target: tuple
    given: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "target", tuple(self.target))
        object.__setattr__(self, "given", tuple(self.given))

    @property
    def axes(self) -> tuple:
        return self.given + self.target

    @property
    def shape(self) -> tuple:
        return tuple(a.size for a in self.axes)

    @property
    def rows(self) -> int:
        return int(np.prod([a.size for a in self.given], dtype=int))

    @property
    def width(self) -> int:
        return int(np.prod([a.size for a in self.target], dtype=int))

    @property
    def n_free(self) -> int:
        return self.rows * (self.width - 1)


CONSTRAINT_KINDS = ("sdrc_slack", "mac_slack", "ptp_budget", "none")


@dataclass(frozen=True)
class DecisionSpace:
    """Free factors of a max-min problem, its constraint kind and the |U| choice."""

    factors: tuple
    constraint: str = "none"
    u_size: int = 1

    def __post_init__(self):
        if self.constraint not in CONSTRAINT_KINDS:
            raise DomainError(f"unknown constraint kind {self.constraint!r}")
        object.__setattr__(self, "factors", tuple(self.factors))

    @property
    def n_free(self) -> int:
        return sum(f.n_free for f in self.factors)


Factor = Union[CondPmf, FreeFactor]


class FactoredObjective:
    """min over ``branches`` of info expressions of a factored joint.

    ``chain`` lists fixed :class:`CondPmf` factors and :class:`FreeFactor`
    placeholders in chain-rule order. ``preferred`` is the branch chosen on
    ties (the binning branch in the relay and MAC problems).
    """

    def __init__(self, chain: Sequence[Factor], branches: Sequence[InfoExpr],
                 slack: Optional[InfoExpr] = None, *, constraint: str = "none",
                 u_size: int = 1, preferred: Optional[int] = None,
                 decode=None):
        self.chain = tuple(chain)
        self.branches = tuple(branches)
        self.slack = slack
        self.preferred = preferred
        self.decode = decode
        produced: dict[str, Alphabet] = {}
        for f in self.chain:
            for a in f.given:
                if a.name not in produced:
                    raise DomainError(f"factor {f!r} conditions on {a.name!r} before it is produced")
            for a in f.target:
                if a.name in produced:
                    raise DomainError(f"axis {a.name!r} produced twice")
                produced[a.name] = a
        self.alphabets = tuple(sorted(produced.values(), key=lambda a: a.name))
        self.names = tuple(a.name for a in self.alphabets)
        self._label = {n: i for i, n in enumerate(self.names)}
        self.free = tuple(f for f in self.chain if isinstance(f, FreeFactor))
        self.space = DecisionSpace(self.free, constraint, u_size)
        self._exprs = list(self.branches) + ([slack] if slack is not None else [])

    # -- joint construction --------------------------------------------------

    def _labels(self, f) -> list:
        return [self._label[a.name] for a in f.axes]

    def joint_probs(self, params: Mapping[str, np.ndarray]) -> np.ndarray:
        args: list = []
        for f in self.chain:
            k = params[f.name] if isinstance(f, FreeFactor) else f.kernel
            args += [k, self._labels(f)]
        return np.einsum(*args, list(range(len(self.names))))

    def joint_probs_batch(self, params: Mapping[str, np.ndarray]) -> np.ndarray:
        """Joints for params whose free factors carry a leading batch axis."""
        b = len(self.names)
        args: list = []
        for f in self.chain:
            if isinstance(f, FreeFactor):
                args += [params[f.name], [b] + self._labels(f)]
            else:
                args += [f.kernel, self._labels(f)]
        return np.einsum(*args, [b] + list(range(b)), optimize=True)

    def joint(self, params) -> JointPmf:
        return JointPmf(self.alphabets, self.joint_probs(params))

    # -- evaluation ------------------------------------------------------------

    def evaluate(self, params) -> tuple[np.ndarray, float]:
        """(branch values, slack); slack is +inf when unconstrained."""
        vals = evaluate_batch(self._exprs, self.joint_probs(params)[None], self.names)[0]
        if self.slack is None:
            return vals, float("inf")
        return vals[:-1], float(vals[-1])

    def evaluate_batch(self, params) -> tuple[np.ndarray, np.ndarray]:
        vals = evaluate_batch(self._exprs, self.joint_probs_batch(params), self.names)
        if self.slack is None:
            return vals, np.full(vals.shape[0], np.inf)
        return vals[:, :-1], vals[:, -1]

    def value(self, params) -> float:
        return float(np.min(self.evaluate(params)[0]))

    def gradient(self, expr: InfoExpr, params, probs: Optional[np.ndarray] = None) -> dict:
        """Gradient of ``expr`` with respect to every free factor's parameters."""
        if probs is None:
            probs = self.joint_probs(params)
        g = joint_gradient(expr, probs, self.names)
        out = {}
        all_labels = list(range(len(self.names)))
        for i, f in enumerate(self.chain):
            if not isinstance(f, FreeFactor):
                continue
            args: list = [g, all_labels]
            for j, h in enumerate(self.chain):
                if j == i:
                    continue
                k = params[h.name] if isinstance(h, FreeFactor) else h.kernel
                args += [k, self._labels(h)]
            out[f.name] = np.einsum(*args, self._labels(f))
        return out

    # -- parameter helpers ----------------------------------------------------

    def random_params(self, rng: np.random.Generator) -> dict:
        out = {}
        for f in self.free:
            out[f.name] = rng.dirichlet(np.ones(f.width), size=f.rows).reshape(f.shape)
        return out

    def to_decision(self, params):
        return self.decode(params) if self.decode is not None else {k: np.array(v) for k, v in params.items()}
