"""Fourier-Motzkin elimination over exact rationals.

Rate variables are eliminated; information atoms stay as symbolic
parameters. Redundancy removal asks whether an inequality is implied by the
others together with background facts (atoms are nonnegative, declared
nonnegative variables are nonnegative, user ``assume`` lines); implication is
decided by exact infeasibility of the system plus the negated inequality.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .linexpr import Ineq, LinExpr, is_atom


@dataclass
class IneqSystem:
    ineqs: list = field(default_factory=list)
    lets: list = field(default_factory=list)        # (name, LinExpr)
    rewrites: list = field(default_factory=list)    # (lhs LinExpr, rhs LinExpr)
    nonneg: list = field(default_factory=list)      # variable names
    assumes: list = field(default_factory=list)     # Ineq over atoms
    variables: list = field(default_factory=list)   # declared rate variables, in order
    keep: list = field(default_factory=list)        # default projection target

    def rate_variables(self) -> list:
        seen = list(self.variables)
        for q in self.ineqs:
            for s in sorted(q.expr.symbols()):
                if not is_atom(s) and s not in seen:
                    seen.append(s)
        for name, e in self.lets:
            for s in [name] + sorted(e.symbols()):
                if not is_atom(s) and s not in seen:
                    seen.append(s)
        return seen

    def atoms(self) -> set:
        out = set()
        for q in list(self.ineqs) + list(self.assumes):
            out |= {s for s in q.expr.symbols() if is_atom(s)}
        return out

    def copy(self) -> IneqSystem:
        return IneqSystem(list(self.ineqs), list(self.lets), list(self.rewrites),
                          list(self.nonneg), list(self.assumes), list(self.variables), list(self.keep))


# ---------------------------------------------------------------------------
# core FM

def _tidy(ineqs: Iterable[Ineq]) -> list:
    """Drop trivial rows, keep the tightest of parallel rows, stable order."""
    best: dict = {}
    order: list = []
    for q in ineqs:
        if q.is_trivial():
            continue
        n = q.normalized()
        d = n.direction_key()
        cur = best.get(d)
        if cur is None:
            best[d] = n
            order.append(d)
        else:
            # same direction: smaller constant is tighter; strict beats non-strict on ties
            if n.expr.const < cur.expr.const or (n.expr.const == cur.expr.const and n.strict and not cur.strict):
                best[d] = n
    return [best[d] for d in order]


def eliminate(ineqs: Sequence[Ineq], var: str) -> list:
    """One Fourier-Motzkin step on ``var``."""
    pos, neg, rest = [], [], []
    for q in ineqs:
        c = q.expr.coeff(var)
        (pos if c > 0 else neg if c < 0 else rest).append(q)
    out = list(rest)
    for p in pos:
        cp = p.expr.coeff(var)
        for n in neg:
            cn = -n.expr.coeff(var)
            e = p.expr.scale(cn) + n.expr.scale(cp)
            e = LinExpr({k: v for k, v in e.coeffs.items() if k != var}, e.const)
            out.append(Ineq(e, p.strict or n.strict))
    return _tidy(out)


def _pick(ineqs: Sequence[Ineq], candidates: Iterable[str]) -> Optional[str]:
    best = None
    for v in sorted(candidates):
        pos = sum(1 for q in ineqs if q.expr.coeff(v) > 0)
        neg = sum(1 for q in ineqs if q.expr.coeff(v) < 0)
        cost = pos * neg - pos - neg
        if best is None or cost < best[0]:
            best = (cost, v)
    return None if best is None else best[1]


def eliminate_all(ineqs: Sequence[Ineq], variables: Iterable[str]) -> list:
    todo = set(variables)
    cur = _tidy(ineqs)
    while todo:
        present = {v for v in todo if any(q.expr.coeff(v) != 0 for q in cur)}
        todo = present
        if not todo:
            break
        v = _pick(cur, todo)
        cur = eliminate(cur, v)
        todo.discard(v)
    return cur


def feasible(ineqs: Sequence[Ineq]) -> bool:
    symbols = set()
    for q in ineqs:
        symbols |= q.expr.symbols()
    rest = eliminate_all(ineqs, symbols)
    return not any(q.is_contradiction() for q in rest)


def implies(base: Sequence[Ineq], target: Ineq) -> bool:
    """Exact: every point satisfying ``base`` satisfies ``target``."""
    if target.is_trivial():
        return True
    return not feasible(list(base) + [target.negation()])


def equivalent(a: Sequence[Ineq], b: Sequence[Ineq], facts: Sequence[Ineq] = ()) -> bool:
    """Mutual implication under shared background facts."""
    A = list(a) + list(facts)
    B = list(b) + list(facts)
    return all(implies(A, q) for q in b) and all(implies(B, q) for q in a)


# ---------------------------------------------------------------------------
# projection pipeline

def _nonneg_row(name: str) -> Ineq:
    return Ineq(LinExpr.symbol(name))


def atom_facts(atoms: Iterable[str]) -> list:
    return [Ineq(LinExpr.symbol(a)) for a in sorted(atoms)]


def apply_rewrite(ineqs: Sequence[Ineq], lhs: LinExpr, rhs: LinExpr) -> list:
    """Replace the leading atom of ``lhs`` so that ``lhs`` becomes ``rhs``."""
    lead = next((k for k in lhs.coeffs if is_atom(k)), None)
    if lead is None:
        raise ValueError("rewrite left-hand side must contain an information atom")
    c = lhs.coeffs[lead]
    rest = LinExpr({k: v for k, v in lhs.coeffs.items() if k != lead}, lhs.const)
    value = (rhs - rest).scale(1 / c)
    return [q.substitute(lead, value) for q in ineqs]


def _substitute_lets(ineqs: list, lets: list, keep: set) -> tuple[list, list]:
    """Use each definition to remove one non-kept variable exactly."""
    eqs = [LinExpr.symbol(name) - e for name, e in lets]
    extra = []
    while eqs:
        eq = eqs.pop(0)
        cands = sorted(s for s in eq.symbols() if not is_atom(s) and s not in keep)
        if not cands:
            if eq.coeffs:
                extra += [Ineq(eq), Ineq(-eq)]
            continue
        v = cands[-1]
        c = eq.coeffs[v]
        value = LinExpr({k: -x / c for k, x in eq.coeffs.items() if k != v}, -eq.const / c)
        ineqs = [q.substitute(v, value) for q in ineqs]
        eqs = [e.substitute(v, value) for e in eqs]
    return ineqs, extra


def background(system: IneqSystem, keep: Iterable[str], ineqs: Sequence[Ineq] = ()) -> list:
    atoms = set(system.atoms())
    for q in ineqs:
        atoms |= {s for s in q.expr.symbols() if is_atom(s)}
    facts = atom_facts(atoms)
    facts += [_nonneg_row(v) for v in system.nonneg if v in set(keep)]
    facts += list(system.assumes)
    return facts


def remove_redundant(ineqs: Sequence[Ineq], facts: Sequence[Ineq]) -> list:
    kept = [q for q in _tidy(ineqs) if not implies(facts, q)]
    i = 0
    while i < len(kept):
        others = kept[:i] + kept[i + 1:]
        if implies(list(facts) + others, kept[i]):
            kept = others
        else:
            i += 1
    return kept


def project(system: IneqSystem, keep: Iterable[str]) -> IneqSystem:
    """Projection onto ``keep`` with rewrites applied and redundancy removed."""
    keep = list(keep)
    kset = set(keep)
    declared = set(system.rate_variables())
    unknown = kset - declared
    if unknown:
        raise ValueError(f"cannot keep undeclared variables {sorted(unknown)}")
    rows = list(system.ineqs) + [_nonneg_row(v) for v in system.nonneg]
    rows, extra = _substitute_lets(rows, system.lets, kset)
    rows += extra
    drop = {s for q in rows for s in q.expr.symbols() if not is_atom(s) and s not in kset}
    rows = eliminate_all(rows, drop)
    assumes = list(system.assumes)
    for lhs, rhs in system.rewrites:
        rows = apply_rewrite(rows, lhs, rhs)
        assumes = apply_rewrite(assumes, lhs, rhs)
    out = IneqSystem([], [], [], [v for v in system.nonneg if v in kset], _tidy(assumes),
                     [v for v in system.rate_variables() if v in kset])
    facts = background(out, keep, rows)
    out.ineqs = sorted(remove_redundant(rows, facts), key=_sort_key)
    return out


def _sort_key(q: Ineq):
    n = q.normalized().expr
    rates = sorted(k for k in n.coeffs if not is_atom(k))
    return (len(rates) == 0, len(rates), rates, sorted(map(str, n.coeffs.items())))
