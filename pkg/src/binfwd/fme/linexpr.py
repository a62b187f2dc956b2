"""Exact linear expressions over rate variables and information atoms."""
from __future__ import annotations

import re
from fractions import Fraction
from typing import Iterable, Mapping, Optional

ATOM_RE = re.compile(r"^([HI])\((.*)\)$")


def _slot(text: str) -> tuple[str, ...]:
    names = [t.strip() for t in text.split(",") if t.strip()]
    if len(set(names)) != len(names):
        raise ValueError(f"repeated variable in {text!r}")
    return tuple(sorted(names))


def canonical_atom(text: str) -> str:
    """Canonical spelling of ``H(A|B)`` / ``I(A;B|C)``.

    Variable lists are sorted within each slot and the two slots of a mutual
    information are put in lexicographic order, so ``I(Y;X|S,U)`` and
    ``I(X;Y|U,S)`` name the same atom.
    """
    m = ATOM_RE.match(text.replace(" ", ""))
    if not m:
        raise ValueError(f"not an information atom: {text!r}")
    kind, body = m.groups()
    main, _, given = body.partition("|")
    g = _slot(given)
    if kind == "H":
        if ";" in main:
            raise ValueError(f"entropy atom with ';': {text!r}")
        t = _slot(main)
        if not t:
            raise ValueError(f"empty entropy atom: {text!r}")
        if set(t) & set(g):
            raise ValueError(f"overlapping slots in {text!r}")
        return f"H({','.join(t)}|{','.join(g)})" if g else f"H({','.join(t)})"
    parts = main.split(";")
    if len(parts) != 2:
        raise ValueError(f"mutual information needs exactly one ';': {text!r}")
    a, b = sorted((_slot(parts[0]), _slot(parts[1])), key=lambda s: ",".join(s))
    if not a or not b:
        raise ValueError(f"empty slot in {text!r}")
    if set(a) & set(b) or (set(a) | set(b)) & set(g):
        raise ValueError(f"overlapping slots in {text!r}")
    core = f"{','.join(a)};{','.join(b)}"
    return f"I({core}|{','.join(g)})" if g else f"I({core})"


def is_atom(symbol: str) -> bool:
    return symbol.startswith(("H(", "I("))


class LinExpr:
    """sum c_k * symbol_k + const with Fraction coefficients (immutable)."""

    __slots__ = ("coeffs", "const")

    def __init__(self, coeffs: Optional[Mapping[str, Fraction]] = None, const=0):
        self.coeffs = {k: Fraction(v) for k, v in (coeffs or {}).items() if Fraction(v) != 0}
        self.const = Fraction(const)

    @classmethod
    def symbol(cls, name: str) -> LinExpr:
        return cls({name: Fraction(1)})

    def __add__(self, other: LinExpr) -> LinExpr:
        c = dict(self.coeffs)
        for k, v in other.coeffs.items():
            c[k] = c.get(k, Fraction(0)) + v
        return LinExpr(c, self.const + other.const)

    def __neg__(self) -> LinExpr:
        return LinExpr({k: -v for k, v in self.coeffs.items()}, -self.const)

    def __sub__(self, other: LinExpr) -> LinExpr:
        return self + (-other)

    def scale(self, f) -> LinExpr:
        f = Fraction(f)
        return LinExpr({k: f * v for k, v in self.coeffs.items()}, f * self.const)

    def coeff(self, name: str) -> Fraction:
        return self.coeffs.get(name, Fraction(0))

    def substitute(self, name: str, expr: LinExpr) -> LinExpr:
        c = self.coeff(name)
        if c == 0:
            return self
        rest = LinExpr({k: v for k, v in self.coeffs.items() if k != name}, self.const)
        return rest + expr.scale(c)

    def symbols(self) -> set:
        return set(self.coeffs)

    def evaluate(self, values: Mapping[str, Fraction]) -> Fraction:
        return self.const + sum((v * Fraction(values[k]) for k, v in self.coeffs.items()), Fraction(0))

    def __eq__(self, other):
        return isinstance(other, LinExpr) and self.coeffs == other.coeffs and self.const == other.const

    def __hash__(self):
        return hash((frozenset(self.coeffs.items()), self.const))

    def __repr__(self):
        return f"LinExpr({format_expr(self)})"


def _order(symbols: Iterable[str]) -> list:
    # rate variables first, then atoms; alphabetical within each group
    return sorted(symbols, key=lambda s: (is_atom(s), s))


def _coef_text(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def format_expr(e: LinExpr) -> str:
    parts = []
    for k in _order(e.coeffs):
        c = e.coeffs[k]
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        body = k if mag == 1 else f"{_coef_text(mag)}*{k}"
        parts.append((sign, body))
    if e.const != 0 or not parts:
        parts.append(("-" if e.const < 0 else "+", _coef_text(abs(e.const))))
    text = ""
    for i, (sign, body) in enumerate(parts):
        if i == 0:
            text = ("-" if sign == "-" else "") + body
        else:
            text += f" {sign} {body}"
    return text


class Ineq:
    """expr >= 0, or expr > 0 when ``strict``."""

    __slots__ = ("expr", "strict")

    def __init__(self, expr: LinExpr, strict: bool = False):
        self.expr = expr
        self.strict = bool(strict)

    def normalized(self) -> Ineq:
        """Scale so the leading symbol's coefficient has magnitude one."""
        e = self.expr
        if not e.coeffs:
            if e.const == 0:
                return Ineq(LinExpr({}, 0), self.strict)
            return Ineq(LinExpr({}, 1 if e.const > 0 else -1), self.strict)
        lead = _order(e.coeffs)[0]
        return Ineq(e.scale(1 / abs(e.coeffs[lead])), self.strict)

    def direction_key(self):
        n = self.normalized().expr
        return tuple(sorted(n.coeffs.items()))

    def key(self):
        n = self.normalized()
        return (tuple(sorted(n.expr.coeffs.items())), n.expr.const, n.strict)

    def is_trivial(self) -> bool:
        """True if it has no symbols and holds."""
        e = self.expr
        return not e.coeffs and (e.const > 0 or (e.const == 0 and not self.strict))

    def is_contradiction(self) -> bool:
        e = self.expr
        return not e.coeffs and (e.const < 0 or (e.const == 0 and self.strict))

    def negation(self) -> Ineq:
        return Ineq(-self.expr, not self.strict)

    def substitute(self, name: str, expr: LinExpr) -> Ineq:
        return Ineq(self.expr.substitute(name, expr), self.strict)

    def holds(self, values) -> bool:
        v = self.expr.evaluate(values)
        return v > 0 if self.strict else v >= 0

    def __eq__(self, other):
        return isinstance(other, Ineq) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"Ineq({format_ineq(self)})"


def format_ineq(q: Ineq) -> str:
    """Readable form: rate variables on the left, atoms and constants on the right."""
    e = q.normalized().expr
    left = LinExpr({k: -v for k, v in e.coeffs.items() if not is_atom(k)})
    right = LinExpr({k: v for k, v in e.coeffs.items() if is_atom(k)}, e.const)
    op = "<" if q.strict else "<="
    if not left.coeffs:
        # pure atom inequality: move negative terms to the left
        neg = LinExpr({k: -v for k, v in right.coeffs.items() if v < 0}, -right.const if right.const < 0 else 0)
        pos = LinExpr({k: v for k, v in right.coeffs.items() if v > 0}, right.const if right.const > 0 else 0)
        return f"{format_expr(neg)} {op} {format_expr(pos)}"
    # prefer positive coefficients on the rate side
    if all(v < 0 for v in left.coeffs.values()):
        op = ">" if q.strict else ">="
        return f"{format_expr(-left)} {op} {format_expr(-right)}"
    return f"{format_expr(left)} {op} {format_expr(right)}"
