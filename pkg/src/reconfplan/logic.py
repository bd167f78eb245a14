"""Propositional formulas over current and next-step (primed) variables.

Formulas print as ``a' <-> (e & !c)`` and parse back from that text.  The
evaluator works on Python bools and on numpy boolean arrays alike, which is
what the game builder relies on for vectorised transition enumeration.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np


class Formula:
    __slots__ = ()

    def __and__(self, other):
        return And((self, other))

    def __or__(self, other):
        return Or((self, other))

    def __invert__(self):
        return Not(self)

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True)
class Const(Formula):
    value: bool


@dataclass(frozen=True)
class Var(Formula):
    name: str
    primed: bool = False


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula


@dataclass(frozen=True)
class And(Formula):
    args: tuple


@dataclass(frozen=True)
class Or(Formula):
    args: tuple


@dataclass(frozen=True)
class Implies(Formula):
    lhs: Formula
    rhs: Formula


@dataclass(frozen=True)
class Iff(Formula):
    lhs: Formula
    rhs: Formula


TRUE = Const(True)
FALSE = Const(False)


def conj(fs) -> Formula:
    fs = tuple(fs)
    if not fs:
        return TRUE
    return fs[0] if len(fs) == 1 else And(fs)


def disj(fs) -> Formula:
    fs = tuple(fs)
    if not fs:
        return FALSE
    return fs[0] if len(fs) == 1 else Or(fs)


def variables(f: Formula) -> set[tuple[str, bool]]:
    if isinstance(f, Var):
        return {(f.name, f.primed)}
    if isinstance(f, Const):
        return set()
    if isinstance(f, Not):
        return variables(f.arg)
    if isinstance(f, (And, Or)):
        return set().union(*(variables(a) for a in f.args))
    return variables(f.lhs) | variables(f.rhs)


def prime(f: Formula) -> Formula:
    """Shift every unprimed variable to the next step."""
    return _map_vars(f, lambda v: Var(v.name, True))


def unprime(f: Formula) -> Formula:
    return _map_vars(f, lambda v: Var(v.name, False))


def _map_vars(f, fn):
    if isinstance(f, Var):
        return fn(f)
    if isinstance(f, Const):
        return f
    if isinstance(f, Not):
        return Not(_map_vars(f.arg, fn))
    if isinstance(f, And):
        return And(tuple(_map_vars(a, fn) for a in f.args))
    if isinstance(f, Or):
        return Or(tuple(_map_vars(a, fn) for a in f.args))
    return type(f)(_map_vars(f.lhs, fn), _map_vars(f.rhs, fn))


def evaluate(f: Formula, env: dict):
    """Evaluate `f`; `env` maps (name, primed) to a bool or a bool array."""
    if isinstance(f, Var):
        return env[(f.name, f.primed)]
    if isinstance(f, Const):
        return f.value
    if isinstance(f, Not):
        return np.logical_not(evaluate(f.arg, env))
    if isinstance(f, And):
        out = True
        for a in f.args:
            out = np.logical_and(out, evaluate(a, env))
        return out
    if isinstance(f, Or):
        out = False
        for a in f.args:
            out = np.logical_or(out, evaluate(a, env))
        return out
    if isinstance(f, Implies):
        return np.logical_or(np.logical_not(evaluate(f.lhs, env)), evaluate(f.rhs, env))
    if isinstance(f, Iff):
        return np.equal(np.asarray(evaluate(f.lhs, env), bool), np.asarray(evaluate(f.rhs, env), bool))
    raise TypeError(f)


# -- printing ----------------------------------------------------------------

_PREC = {Iff: 1, Implies: 2, Or: 3, And: 4, Not: 5, Var: 6, Const: 6}


def to_text(f: Formula) -> str:
    return _txt(f, 0)


def _txt(f, ctx):
    p = _PREC[type(f)]
    if isinstance(f, Const):
        s = "TRUE" if f.value else "FALSE"
    elif isinstance(f, Var):
        s = f.name + ("'" if f.primed else "")
    elif isinstance(f, Not):
        s = "!" + _txt(f.arg, p)
    elif isinstance(f, And):
        s = " & ".join(_txt(a, p + 1) for a in f.args)
    elif isinstance(f, Or):
        s = " | ".join(_txt(a, p + 1) for a in f.args)
    elif isinstance(f, Implies):
        s = f"{_txt(f.lhs, p + 1)} -> {_txt(f.rhs, p + 1)}"
    else:
        s = f"{_txt(f.lhs, p + 1)} <-> {_txt(f.rhs, p + 1)}"
    return f"({s})" if p < ctx else s


# -- parsing -----------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(<->|->|[!&|()])|([A-Za-z_][A-Za-z0-9_]*)('?))")


class FormulaSyntaxError(ValueError):
    pass


def parse_formula(text: str) -> Formula:
    toks = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise FormulaSyntaxError(f"unexpected character at {pos} in {text!r}")
        if m.group(1):
            toks.append(m.group(1))
        else:
            toks.append((m.group(2), bool(m.group(3))))
        pos = m.end()
    p = _FParser(toks, text)
    f = p.iff()
    if p.i != len(toks):
        raise FormulaSyntaxError(f"trailing input in {text!r}")
    return f


class _FParser:
    def __init__(self, toks, text):
        self.toks, self.i, self.text = toks, 0, text

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self, tok):
        if self.peek() == tok:
            self.i += 1
            return True
        return False

    def iff(self):
        lhs = self.implies()
        if self.take("<->"):
            return Iff(lhs, self.iff())
        return lhs

    def implies(self):
        lhs = self.disj()
        if self.take("->"):
            return Implies(lhs, self.implies())
        return lhs

    def disj(self):
        args = [self.conj()]
        while self.take("|"):
            args.append(self.conj())
        return args[0] if len(args) == 1 else Or(tuple(args))

    def conj(self):
        args = [self.unary()]
        while self.take("&"):
            args.append(self.unary())
        return args[0] if len(args) == 1 else And(tuple(args))

    def unary(self):
        if self.take("!"):
            return Not(self.unary())
        if self.take("("):
            f = self.iff()
            if not self.take(")"):
                raise FormulaSyntaxError(f"missing ')' in {self.text!r}")
            return f
        tok = self.peek()
        if not isinstance(tok, tuple):
            raise FormulaSyntaxError(f"expected a variable, got {tok!r} in {self.text!r}")
        self.i += 1
        name, primed = tok
        if name in ("TRUE", "FALSE") and not primed:
            return Const(name == "TRUE")
        return Var(name, primed)
