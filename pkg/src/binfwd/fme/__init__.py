"""Exact Fourier-Motzkin projection of rate systems with symbolic information terms."""
from importlib import resources

from .linexpr import Ineq, LinExpr, canonical_atom, format_expr, format_ineq, is_atom
from .system import (
    IneqSystem,
    atom_facts,
    background,
    eliminate,
    eliminate_all,
    equivalent,
    feasible,
    implies,
    project,
    remove_redundant,
)
from .text import FmeParseError, format_system, load_system, parse_expr, parse_ineq, parse_system

PRESETS = ("eq17", "eq21", "eq41")


def preset_text(name: str) -> str:
    name = name[:-4] if name.endswith(".sys") else name
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; choose from {PRESETS}")
    return resources.files(__package__).joinpath("presets", f"{name}.sys").read_text()


def load_preset(name: str) -> IneqSystem:
    return parse_system(preset_text(name))
