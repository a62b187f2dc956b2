"""Text format for inequality systems.

One statement per line; ``#`` starts a comment::

    Rp + Rt <= RB
    Rt >= I(U;S)
    let R = Rp + Rpp
    rewrite I(U;S1) - I(U;S2) -> I(U;S1|S2)
    nonneg Rp Rpp Rt RB
    assume I(X2;Y|U,S,X1) <= I(X1,X2;Y|U,S,Z)
    vars R Rp Rpp
    keep R

Strict ``<`` and ``>`` are read as their closed counterparts.
"""
from __future__ import annotations

import re
from fractions import Fraction
from pathlib import Path

from .linexpr import Ineq, LinExpr, canonical_atom, format_expr, format_ineq
from .system import IneqSystem

IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_']*")
NUMBER = re.compile(r"\d+(?:\.\d+)?(?:/\d+)?")


class FmeParseError(ValueError):
    def __init__(self, msg, line=None, col=None):
        self.line, self.col = line, col
        where = f"line {line}" + (f", column {col}" if col is not None else "") if line else ""
        super().__init__(f"{where}: {msg}" if where else msg)


def _skip(text, i):
    while i < len(text) and text[i].isspace():
        i += 1
    return i


def _atom_end(text, i, err):
    depth = 0
    for j in range(i + 1, len(text)):
        if text[j] == "(":
            depth += 1
        elif text[j] == ")":
            depth -= 1
            if depth == 0:
                return j + 1
    err("unbalanced parenthesis in atom", i)


def parse_expr(text: str, *, line=None, offset: int = 0) -> LinExpr:
    """Parse ``[sign] term (sign term)*`` where a term is ``[coef [*]] symbol`` or a number."""

    def err(msg, pos):
        raise FmeParseError(msg, line, offset + pos + 1)

    coeffs: dict = {}
    const = Fraction(0)
    i = _skip(text, 0)
    if i == len(text):
        err("empty expression", 0)
    first = True
    while i < len(text):
        sign = 1
        if not first:
            if text[i] not in "+-":
                err(f"expected '+' or '-' before {text[i:i + 10]!r}", i)
        while i < len(text) and text[i] in "+-":
            sign = -sign if text[i] == "-" else sign
            i = _skip(text, i + 1)
        if i == len(text):
            err("expression ends with an operator", i)
        first = False
        coef, sym = Fraction(1), None
        m = NUMBER.match(text, i)
        if m:
            coef = Fraction(m.group())
            i = _skip(text, m.end())
            if i < len(text) and text[i] == "*":
                i = _skip(text, i + 1)
            elif i < len(text) and (text[i].isalpha() or text[i] == "_"):
                pass
            else:
                const += sign * coef
                continue
        if text.startswith(("H(", "I("), i):
            j = _atom_end(text, i, err)
            try:
                sym = canonical_atom(text[i:j])
            except ValueError as exc:
                err(str(exc), i)
            i = j
        else:
            m = IDENT.match(text, i)
            if not m:
                err(f"unexpected character {text[i]!r}", i)
            sym = m.group().replace("'", "p")
            i = m.end()
        coeffs[sym] = coeffs.get(sym, Fraction(0)) + sign * coef
        i = _skip(text, i)
    return LinExpr(coeffs, const)


def _split_relation(text: str, line):
    for op in ("<=", ">=", "=<", "=>", "<", ">"):
        pos = text.find(op)
        if pos >= 0:
            norm = {"=<": "<=", "=>": ">=", "<": "<=", ">": ">="}.get(op, op)
            return text[:pos], norm, text[pos + len(op):], pos + len(op)
    raise FmeParseError("missing relation '<=' or '>='", line, 1)


def parse_ineq(text: str, line=None, offset: int = 0) -> Ineq:
    a, op, b, rhs_at = _split_relation(text, line)
    lhs = parse_expr(a, line=line, offset=offset)
    rhs = parse_expr(b, line=line, offset=offset + rhs_at)
    return Ineq(rhs - lhs) if op == "<=" else Ineq(lhs - rhs)


def parse_system(text: str) -> IneqSystem:
    sys_ = IneqSystem()
    for ln, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0]
        stripped = body.strip()
        if not stripped:
            continue
        lead = len(body) - len(body.lstrip())
        word = stripped.split(None, 1)[0]
        rest = stripped[len(word):].strip()
        roff = lead + len(word) + (len(stripped) - len(word) - len(stripped[len(word):].lstrip()))
        if word == "let":
            if "=" not in rest:
                raise FmeParseError("'let' needs NAME = expression", ln, lead + 1)
            name, expr = rest.split("=", 1)
            name = name.strip().replace("'", "p")
            if not IDENT.fullmatch(name):
                raise FmeParseError(f"invalid variable name {name!r}", ln, lead + 5)
            sys_.lets.append((name, parse_expr(expr, line=ln, offset=roff + rest.index("=") + 1)))
        elif word == "rewrite":
            if "->" not in rest:
                raise FmeParseError("'rewrite' needs LHS -> RHS", ln, lead + 1)
            a, b = rest.split("->", 1)
            sys_.rewrites.append((parse_expr(a, line=ln, offset=roff),
                                  parse_expr(b, line=ln, offset=roff + rest.index("->") + 2)))
        elif word == "nonneg":
            for v in rest.split():
                v = v.replace("'", "p")
                if not IDENT.fullmatch(v):
                    raise FmeParseError(f"invalid variable name {v!r}", ln, lead + 1)
                sys_.nonneg.append(v)
        elif word in ("vars", "keep"):
            target = sys_.variables if word == "vars" else sys_.keep
            for v in rest.split():
                v = v.replace("'", "p")
                if not IDENT.fullmatch(v):
                    raise FmeParseError(f"invalid variable name {v!r}", ln, lead + 1)
                target.append(v)
        elif word == "assume":
            sys_.assumes.append(parse_ineq(rest, ln, roff))
        else:
            sys_.ineqs.append(parse_ineq(stripped, ln, lead))
    return sys_


def load_system(path) -> IneqSystem:
    return parse_system(Path(path).read_text())


def format_system(s: IneqSystem, header: str = "") -> str:
    lines = []
    if header:
        lines += [f"# {h}" for h in header.splitlines()]
    if s.variables:
        lines.append("vars " + " ".join(s.variables))
    if s.keep:
        lines.append("keep " + " ".join(s.keep))
    for q in s.ineqs:
        lines.append(format_ineq(q))
    for name, e in s.lets:
        lines.append(f"let {name} = {format_expr(e)}")
    for lhs, rhs in s.rewrites:
        lines.append(f"rewrite {format_expr(lhs)} -> {format_expr(rhs)}")
    if s.nonneg:
        lines.append("nonneg " + " ".join(s.nonneg))
    for q in s.assumes:
        lines.append("assume " + format_ineq(q))
    return "\n".join(lines) + "\n"
