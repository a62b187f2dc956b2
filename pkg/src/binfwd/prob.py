"""Finite-alphabet probability engine.

Joint distributions are dense tensors whose axes carry names. Axes are kept
sorted by name so two structurally equal joints have identical layouts.
All information measures are in bits.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from .errors import (
    AxisNotFoundError,
    DomainError,
    FactorError,
    NormalizationError,
    ZeroProbabilityError,
)

NORM_TOL = 1e-12
IDENTITY_TOL = 1e-9
MI_CLAMP_TOL = 1e-10

AxisSet = Union[str, Iterable[str]]


@dataclass(frozen=True, order=True)
class Alphabet:
    name: str
    size: int

    def __post_init__(self):
        if not isinstance(self.size, (int, np.integer)) or self.size < 1:
            raise DomainError(f"alphabet {self.name!r} must have size >= 1, got {self.size!r}")


def _names(axes: AxisSet) -> tuple[str, ...]:
    if isinstance(axes, str):
        return (axes,) if axes else ()
    return tuple(axes)


def _check_mass(probs: np.ndarray, what: str, tol: float = NORM_TOL) -> None:
    if probs.size and probs.min() < -tol:
        idx = np.unravel_index(int(np.argmin(probs)), probs.shape)
        raise NormalizationError(f"{what}: negative entry {probs[idx]!r} at index {idx}")
    total = float(probs.sum())
    if abs(total - 1.0) > tol * max(1, probs.size):
        raise NormalizationError(f"{what}: total mass {total!r} is not 1")


class JointPmf:
    """Dense joint PMF over named finite alphabets (immutable)."""

    __slots__ = ("_axes", "_probs", "_index")

    def __init__(self, axes: Sequence[Alphabet], probs, *, validate: bool = True):
        axes = tuple(axes)
        probs = np.asarray(probs, dtype=float)
        if probs.shape != tuple(a.size for a in axes):
            raise DomainError(
                f"probability tensor shape {probs.shape} does not match alphabets "
                f"{[(a.name, a.size) for a in axes]}"
            )
        names = [a.name for a in axes]
        if len(set(names)) != len(names):
            raise DomainError(f"duplicate axis names in {names}")
        order = sorted(range(len(axes)), key=lambda i: names[i])
        axes = tuple(axes[i] for i in order)
        probs = np.transpose(probs, order) if order != list(range(len(order))) else probs
        if validate:
            _check_mass(probs, "joint pmf")
        probs = np.clip(probs, 0.0, None)
        probs = np.ascontiguousarray(probs)
        probs.setflags(write=False)
        self._axes = axes
        self._probs = probs
        self._index = {a.name: i for i, a in enumerate(axes)}

    @property
    def axes(self) -> tuple[Alphabet, ...]:
        return self._axes

    @property
    def probs(self) -> np.ndarray:
        return self._probs

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self._axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return self._probs.shape

    def axis(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise AxisNotFoundError(name, self.names) from None

    def alphabet(self, name: str) -> Alphabet:
        return self._axes[self.axis(name)]

    def _resolve(self, axes: AxisSet) -> tuple[str, ...]:
        names = _names(axes)
        for n in names:
            self.axis(n)
        return names

    def marginal_probs(self, keep: AxisSet) -> np.ndarray:
        """Marginal tensor over `keep`, axes in canonical (sorted) order."""
        keep = set(self._resolve(keep))
        drop = tuple(i for i, a in enumerate(self._axes) if a.name not in keep)
        return self._probs.sum(axis=drop) if drop else self._probs

    def marginalize(self, keep: AxisSet) -> JointPmf:
        names = self._resolve(keep)
        if not names:
            raise DomainError("marginalize needs a nonempty set of axes to keep")
        kept = [a for a in self._axes if a.name in set(names)]
        return JointPmf(kept, self.marginal_probs(names), validate=False)

    def condition(self, on: Mapping[str, int]) -> JointPmf:
        """Condition on an assignment of letters; the assigned axes are removed."""
        index: list = [slice(None)] * len(self._axes)
        for name, letter in on.items():
            i = self.axis(name)
            if not 0 <= letter < self._axes[i].size:
                raise DomainError(f"letter {letter} out of range for axis {name!r}")
            index[i] = letter
        sub = self._probs[tuple(index)]
        mass = float(sub.sum())
        if mass <= 0.0:
            raise ZeroProbabilityError(f"conditioning event {dict(on)} has probability zero")
        rest = [a for a in self._axes if a.name not in on]
        if not rest:
            raise DomainError("conditioning on every axis leaves nothing")
        return JointPmf(rest, sub / mass, validate=False)

    def __eq__(self, other):
        if not isinstance(other, JointPmf):
            return NotImplemented
        return self._axes == other._axes and np.array_equal(self._probs, other._probs)

    def __hash__(self):
        return hash((self._axes, self._probs.tobytes()))

    def allclose(self, other: JointPmf, atol: float = IDENTITY_TOL) -> bool:
        return self._axes == other._axes and np.allclose(self._probs, other._probs, atol=atol, rtol=0)

    def __repr__(self):
        dims = ", ".join(f"{a.name}:{a.size}" for a in self._axes)
        return f"JointPmf({dims})"


class CondPmf:
    """Conditional PMF p(target | given).

    The kernel tensor is laid out as ``given axes..., target axes...`` in the
    order supplied, so each conditional slice occupies the trailing axes.
    A factor with no `given` axes is an ordinary distribution.
    """

    __slots__ = ("target", "given", "kernel")

    def __init__(self, target: Sequence[Alphabet], given: Sequence[Alphabet], kernel,
                 *, tol: float = NORM_TOL):
        target = (target,) if isinstance(target, Alphabet) else tuple(target)
        given = (given,) if isinstance(given, Alphabet) else tuple(given)
        if not target:
            raise DomainError("conditional pmf needs at least one target axis")
        names = [a.name for a in given + target]
        if len(set(names)) != len(names):
            raise DomainError(f"duplicate axis names in {names}")
        kernel = np.asarray(kernel, dtype=float)
        shape = tuple(a.size for a in given + target)
        if kernel.shape != shape:
            raise DomainError(f"kernel shape {kernel.shape} != expected {shape} for {names}")
        if kernel.size and kernel.min() < -tol:
            idx = np.unravel_index(int(np.argmin(kernel)), kernel.shape)
            raise NormalizationError(f"kernel has negative entry {kernel[idx]!r} at index {idx}")
        rows = kernel.reshape(int(np.prod(shape[: len(given)], dtype=int)), -1).sum(axis=1)
        bad = np.flatnonzero(np.abs(rows - 1.0) > tol * max(1, kernel.size))
        if bad.size:
            row = np.unravel_index(int(bad[0]), shape[: len(given)]) if given else ()
            raise NormalizationError(
                f"conditional slice {dict(zip([a.name for a in given], map(int, row)))} "
                f"sums to {rows[bad[0]]!r}"
            )
        kernel = np.clip(kernel, 0.0, None)
        kernel.setflags(write=False)
        self.target = target
        self.given = given
        self.kernel = kernel

    @classmethod
    def unconditional(cls, alphabet: Alphabet, probs) -> CondPmf:
        return cls((alphabet,), (), probs)

    @classmethod
    def deterministic(cls, target: Alphabet, given: Sequence[Alphabet], table) -> CondPmf:
        """Indicator kernel 1{target = table[given]}."""
        given = tuple(given)
        table = np.asarray(table, dtype=int)
        if table.shape != tuple(a.size for a in given):
            raise DomainError(f"lookup table shape {table.shape} does not match {[a.name for a in given]}")
        if table.size and (table.min() < 0 or table.max() >= target.size):
            raise DomainError(f"lookup table values must lie in [0, {target.size})")
        kernel = np.zeros(table.shape + (target.size,))
        np.put_along_axis(kernel, table[..., None], 1.0, axis=-1)
        return cls((target,), given, kernel)

    @property
    def axes(self) -> tuple[Alphabet, ...]:
        return self.given + self.target

    @property
    def is_deterministic(self) -> bool:
        return bool(np.all((self.kernel == 0.0) | (self.kernel == 1.0)))

    def __repr__(self):
        t = ",".join(a.name for a in self.target)
        g = ",".join(a.name for a in self.given)
        return f"CondPmf({t}|{g})" if g else f"CondPmf({t})"


def _as_factor(f) -> CondPmf:
    if isinstance(f, CondPmf):
        return f
    if isinstance(f, JointPmf):
        return CondPmf(f.axes, (), f.probs)
    raise TypeError(f"cannot use {type(f).__name__} as a factor")


def compose(factors: Sequence[Union[CondPmf, JointPmf]]) -> JointPmf:
    """Chain-rule product of factors, each conditioned only on earlier targets."""
    if not factors:
        raise FactorError("compose needs at least one factor")
    produced: dict[str, Alphabet] = {}
    operands: list = []
    for k, f in enumerate(map(_as_factor, factors)):
        for a in f.given:
            if a.name not in produced:
                raise FactorError(f"factor {k} ({f!r}) conditions on {a.name!r}, not produced earlier")
            if produced[a.name] != a:
                raise FactorError(f"factor {k} uses {a} but {produced[a.name]} was produced")
        for a in f.target:
            if a.name in produced:
                raise FactorError(f"axis {a.name!r} produced twice (factor {k})")
            produced[a.name] = a
        operands.append(f)
    axes = sorted(produced.values(), key=lambda a: a.name)
    label = {a.name: i for i, a in enumerate(axes)}
    args: list = []
    for f in operands:
        args += [f.kernel, [label[a.name] for a in f.axes]]
    probs = np.einsum(*args, list(range(len(axes))), optimize=True)
    return JointPmf(axes, probs)


def marginalize(joint: JointPmf, keep: AxisSet) -> JointPmf:
    return joint.marginalize(keep)


def condition(joint: JointPmf, on: Mapping[str, int]) -> JointPmf:
    return joint.condition(on)


def _plogp_sum(p: np.ndarray) -> float:
    p = p[p > 0.0]
    return float(-(p * np.log2(p)).sum())


def joint_entropy(joint: JointPmf, axes: AxisSet) -> float:
    names = joint._resolve(axes)
    if not names:
        return 0.0
    return _plogp_sum(joint.marginal_probs(names))


def entropy(joint: JointPmf, targets: AxisSet, given: AxisSet = ()) -> float:
    """H(targets | given) in bits."""
    t = joint._resolve(targets)
    g = joint._resolve(given)
    if set(t) & set(g):
        raise DomainError(f"targets {t} and given {g} overlap")
    h = joint_entropy(joint, t + g) - joint_entropy(joint, g)
    return max(h, 0.0)


def mutual_information(joint: JointPmf, a: AxisSet, b: AxisSet, given: AxisSet = ()) -> float:
    """I(a; b | given) in bits."""
    a, b, g = joint._resolve(a), joint._resolve(b), joint._resolve(given)
    if set(a) & set(b) or set(a) & set(g) or set(b) & set(g):
        raise DomainError(f"axis sets {a}, {b}, {g} must be pairwise disjoint")
    v = (joint_entropy(joint, a + g) + joint_entropy(joint, b + g)
         - joint_entropy(joint, a + b + g) - joint_entropy(joint, g))
    if v < 0.0 and v > -MI_CLAMP_TOL:
        return 0.0
    return v


def binary_entropy(a: float) -> float:
    if not 0.0 <= a <= 1.0:
        raise DomainError(f"binary entropy argument must lie in [0, 1], got {a!r}")
    if a == 0.0 or a == 1.0:
        return 0.0
    return float(-a * np.log2(a) - (1.0 - a) * np.log2(1.0 - a))
