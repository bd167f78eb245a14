"""Structured-English task specifications: lexer, parser and lowering to GR(1).

A spec file has a declarations block followed by ``spec:`` and one sentence
per line::

    environment: mug, trash
    regions: ground, dock
    adjacent: ground-dock
    actions: spin
    require spin: Action={Spin}
    spec:
    if you are sensing mug then do spin

Grammar of the sentence block (EBNF)::

    sentence    = visit | conditional | iff | setreset | often ;
    visit       = "visit" NAME ;
    conditional = "if" cond "then" consequent ;
    iff         = "do" NAME "if" "and" "only" "if" cond ;
    setreset    = NAME "is" "set" "on" cond "and" "reset" "on" cond ;
    often       = "infinitely" "often" consequent ;
    consequent  = "do" NAME | cond ;
    cond        = conj { "or" conj } ;
    conj        = unary { "and" unary } ;
    unary       = "not" unary | "(" cond ")" | clause | NAME | "true" | "false" ;
    clause      = "you" ( "are" | "were" ) [ "not" ] ( "sensing" | "activating" | "in" ) group
                | "you" "activated" group
                | "the" "robot" "senses" NAME ;
    group       = NAME | "(" gcond ")" ;
    gcond       = gconj { "or" gconj } ;
    gconj       = gunary { "and" gunary } ;
    gunary      = "not" gunary | "(" gcond ")" | NAME ;

Temporal reading (fixed, see README): "you are X" is the next-step value,
"you were X" the current value, "you activated y" means y held at some
earlier step, bare names are current values.  A consequent that is not
``do NAME`` is an environment assumption.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from .core import CoreError, Property, parse_property
from .logic import (
    FALSE, TRUE, And, Const, Formula, Iff, Implies, Not, Or, Var, conj, disj,
    to_text, unprime, variables,
)

KEYWORDS = frozenset("""
    if then do and or not you are were sensing activating activated in is set on
    reset infinitely often visit the robot senses true false only
""".split())


class SpecError(ValueError):
    def __init__(self, message, line=None, col=None, expected=None):
        self.line, self.col = line, col
        self.expected = sorted(expected) if expected else None
        where = f"line {line}, col {col}: " if line is not None else ""
        tail = f" (expected one of: {', '.join(self.expected)})" if self.expected else ""
        super().__init__(f"{where}{message}{tail}")


class SpecSyntaxError(SpecError):
    pass


class UndeclaredNameError(SpecError):
    pass


# -- AST ---------------------------------------------------------------------

@dataclass(frozen=True)
class Atom:
    """A sensed/activated/region fact in a given tense."""

    kind: str  # sensing were_sensing activating were_activating activated in were_in name
    name: str


@dataclass(frozen=True)
class BoolConst:
    value: bool


@dataclass(frozen=True)
class NotE:
    arg: object


@dataclass(frozen=True)
class AndE:
    args: tuple


@dataclass(frozen=True)
class OrE:
    args: tuple


@dataclass(frozen=True)
class Do:
    action: str


@dataclass(frozen=True)
class Visit:
    target: str
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Conditional:
    cond: object
    consequent: object
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class IffS:
    action: str
    cond: object
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class SetReset:
    memory: str
    set_cond: object
    reset_cond: object
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class InfinitelyOften:
    consequent: object
    line: int = field(default=0, compare=False)


@dataclass
class SpecSource:
    environment: list = field(default_factory=list)
    regions: list = field(default_factory=list)
    adjacency: list = field(default_factory=list)  # pairs
    actions: list = field(default_factory=list)
    memory: list = field(default_factory=list)
    requirements: dict = field(default_factory=dict)  # action -> tuple[Property]

    def kind_of(self, name):
        for kind, names in (("env", self.environment), ("region", self.regions),
                            ("action", self.actions), ("memory", self.memory)):
            if name in names:
                return kind
        return None

    def declaration_text(self) -> str:
        lines = []
        if self.environment:
            lines.append("environment: " + ", ".join(self.environment))
        if self.regions:
            lines.append("regions: " + ", ".join(self.regions))
        if self.adjacency:
            lines.append("adjacent: " + ", ".join(f"{a}-{b}" for a, b in self.adjacency))
        if self.actions:
            lines.append("actions: " + ", ".join(self.actions))
        if self.memory:
            lines.append("memory: " + ", ".join(self.memory))
        for act, props in self.requirements.items():
            lines.append(f"require {act}: " + "; ".join(str(p) for p in props))
        return "\n".join(lines)


@dataclass
class SpecAST:
    source: SpecSource
    sentences: tuple

    def __eq__(self, other):
        return isinstance(other, SpecAST) and self.sentences == other.sentences


# -- lexer -------------------------------------------------------------------

_TOK = re.compile(r"\s*(?:([()])|([A-Za-z_][A-Za-z0-9_]*)|(\S))")


@dataclass(frozen=True)
class Token:
    text: str
    line: int
    col: int


def tokenize(text: str, line: int) -> list[Token]:
    out, pos = [], 0
    while pos < len(text):
        m = _TOK.match(text, pos)
        if not m or m.end() == pos:
            break
        if m.group(3):
            raise SpecSyntaxError(f"unexpected character {m.group(3)!r}", line, m.start(3) + 1)
        tok = m.group(1) or m.group(2)
        out.append(Token(tok, line, m.start(1) + 1 if m.group(1) else m.start(2) + 1))
        pos = m.end()
    return out


# -- parser ------------------------------------------------------------------

class _Parser:
    def __init__(self, toks, line):
        self.toks, self.i, self.line = toks, 0, line

    def peek(self, k=0):
        j = self.i + k
        return self.toks[j].text if j < len(self.toks) else None

    def error(self, expected, msg=None):
        if self.i < len(self.toks):
            t = self.toks[self.i]
            raise SpecSyntaxError(msg or f"unexpected {t.text!r}", t.line, t.col, expected)
        col = (self.toks[-1].col + len(self.toks[-1].text)) if self.toks else 1
        raise SpecSyntaxError(msg or "unexpected end of sentence", self.line, col, expected)

    def expect(self, *words):
        for w in words:
            if self.peek() != w:
                self.error({w})
            self.i += 1

    def name(self):
        t = self.peek()
        if t is None or t in KEYWORDS or t in "()":
            self.error({"NAME"})
        self.i += 1
        return t

    def sentence(self):
        t = self.peek()
        if t == "visit":
            self.i += 1
            node = Visit(self.name(), self.line)
        elif t == "if":
            self.i += 1
            c = self.cond()
            self.expect("then")
            node = Conditional(c, self.consequent(), self.line)
        elif t == "do":
            self.i += 1
            a = self.name()
            self.expect("if", "and", "only", "if")
            node = IffS(a, self.cond(), self.line)
        elif t == "infinitely":
            self.i += 1
            self.expect("often")
            node = InfinitelyOften(self.consequent(), self.line)
        elif t is not None and t not in KEYWORDS and t not in "()" and self.peek(1) == "is":
            m = self.name()
            self.expect("is", "set", "on")
            s = self.cond(stop_at_reset=True)
            self.expect("and", "reset", "on")
            node = SetReset(m, s, self.cond(), self.line)
        else:
            self.error({"visit", "if", "do", "infinitely", "NAME is set on"})
        if self.peek() is not None:
            self.error({"end of sentence"})
        return node

    def consequent(self):
        if self.peek() == "do":
            self.i += 1
            return Do(self.name())
        return self.cond()

    def cond(self, stop_at_reset=False):
        args = [self.conj(stop_at_reset)]
        while self.peek() == "or":
            self.i += 1
            args.append(self.conj(stop_at_reset))
        return args[0] if len(args) == 1 else OrE(tuple(args))

    def conj(self, stop_at_reset):
        args = [self.unary()]
        while self.peek() == "and" and not (stop_at_reset and self.peek(1) == "reset"):
            self.i += 1
            args.append(self.unary())
        return args[0] if len(args) == 1 else AndE(tuple(args))

    def unary(self):
        t = self.peek()
        if t == "not":
            self.i += 1
            return NotE(self.unary())
        if t == "(":
            self.i += 1
            c = self.cond()
            self.expect(")")
            return c
        if t == "you":
            return self.clause()
        if t == "the":
            self.expect("the", "robot", "senses")
            return Atom("sensing", self.name())
        if t in ("true", "false"):
            self.i += 1
            return BoolConst(t == "true")
        if t is not None and t not in KEYWORDS and t not in "()":
            self.i += 1
            return Atom("name", t)
        self.error({"not", "(", "you", "the robot senses", "NAME", "true", "false"})

    def clause(self):
        self.expect("you")
        t = self.peek()
        if t == "activated":
            self.i += 1
            return self.group("activated")
        if t not in ("are", "were"):
            self.error({"are", "were", "activated"})
        self.i += 1
        neg = False
        if self.peek() == "not":
            self.i += 1
            neg = True
        verb = self.peek()
        if verb not in ("sensing", "activating", "in"):
            self.error({"sensing", "activating", "in"})
        self.i += 1
        kind = verb if t == "are" else f"were_{verb}"
        g = self.group(kind)
        return NotE(g) if neg else g

    def group(self, kind):
        if self.peek() == "(":
            self.i += 1
            g = self.gcond(kind)
            self.expect(")")
            return g
        return Atom(kind, self.name())

    def gcond(self, kind):
        args = [self.gconj(kind)]
        while self.peek() == "or":
            self.i += 1
            args.append(self.gconj(kind))
        return args[0] if len(args) == 1 else OrE(tuple(args))

    def gconj(self, kind):
        args = [self.gunary(kind)]
        while self.peek() == "and":
            self.i += 1
            args.append(self.gunary(kind))
        return args[0] if len(args) == 1 else AndE(tuple(args))

    def gunary(self, kind):
        if self.peek() == "not":
            self.i += 1
            return NotE(self.gunary(kind))
        if self.peek() == "(":
            self.i += 1
            g = self.gcond(kind)
            self.expect(")")
            return g
        return Atom(kind, self.name())


def parse_sentence(text: str, line: int = 1):
    toks = tokenize(text, line)
    if not toks:
        raise SpecSyntaxError("empty sentence", line, 1)
    return _Parser(toks, line).sentence()


def _names(decl_value, line):
    out = [n.strip() for n in decl_value.split(",") if n.strip()]
    for n in out:
        if not n.isidentifier() or n in KEYWORDS:
            raise SpecSyntaxError(f"bad name {n!r}", line, 1)
    return out


def parse(text: str, decls: SpecSource | None = None) -> SpecAST:
    """Parse a spec file, or bare sentences when `decls` is supplied."""
    source = decls if decls is not None else SpecSource()
    in_body = decls is not None
    sentences = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if not in_body:
            if line == "spec:":
                in_body = True
                continue
            _declaration(source, line, lineno)
            continue
        sentences.append(parse_sentence(line, lineno))
    ast = SpecAST(source, tuple(sentences))
    check(ast)
    return ast


def _declaration(src: SpecSource, line: str, lineno: int):
    if ":" not in line:
        raise SpecSyntaxError("expected 'key: value' declaration or 'spec:'", lineno, 1,
                              {"environment:", "regions:", "adjacent:", "actions:",
                               "memory:", "require NAME:", "spec:"})
    key, value = (s.strip() for s in line.split(":", 1))
    if key == "environment":
        src.environment += _names(value, lineno)
    elif key == "regions":
        src.regions += _names(value, lineno)
    elif key == "actions":
        src.actions += _names(value, lineno)
    elif key == "memory":
        src.memory += _names(value, lineno)
    elif key == "adjacent":
        for pair in value.split(","):
            a, _, b = pair.strip().partition("-")
            if not a or not b:
                raise SpecSyntaxError(f"bad adjacency {pair.strip()!r}; use a-b", lineno, 1)
            src.adjacency.append((a.strip(), b.strip()))
    elif key.startswith("require "):
        act = key[len("require "):].strip()
        try:
            props = tuple(parse_property(p) for p in value.split(";") if p.strip())
        except CoreError as exc:
            raise SpecSyntaxError(str(exc), lineno, 1) from None
        src.requirements[act] = src.requirements.get(act, ()) + props
    else:
        raise SpecSyntaxError(f"unknown declaration {key!r}", lineno, 1)


# -- validation --------------------------------------------------------------

_KIND_CLASS = {
    "sensing": "env", "were_sensing": "env",
    "activating": "sys", "were_activating": "sys", "activated": "sys",
    "in": "region", "were_in": "region",
}


def check(ast: SpecAST):
    src = ast.source
    # set/reset targets are implicitly memory variables
    for s in ast.sentences:
        if isinstance(s, SetReset) and src.kind_of(s.memory) is None:
            src.memory.append(s.memory)
    seen = {}
    for kind, names in (("env", src.environment), ("region", src.regions),
                        ("action", src.actions), ("memory", src.memory)):
        for n in names:
            if n in seen and not (kind == "memory" and seen[n] == "memory"):
                raise SpecError(f"name {n} declared as both {seen[n]} and {kind}")
            seen[n] = kind
    src.memory[:] = list(dict.fromkeys(src.memory))
    for a, b in src.adjacency:
        for r in (a, b):
            if r not in src.regions:
                raise UndeclaredNameError(f"adjacency mentions undeclared region {r}")
    for act, props in src.requirements.items():
        if src.kind_of(act) != "action":
            raise UndeclaredNameError(f"requirements given for {act}, which is not an action")
        names = [p.name for p in props]
        if len(names) != len(set(names)):
            raise SpecError(f"requirements for {act} repeat a property name")
    for s in ast.sentences:
        _check_sentence(src, s)


def _need(src, name, cls, line):
    k = src.kind_of(name)
    if k is None:
        raise UndeclaredNameError(f"undeclared name {name}", line, 1)
    ok = {"env": k == "env", "region": k == "region", "sys": k in ("action", "memory"),
          "action": k == "action", "memory": k == "memory",
          "any": True, "target": k in ("region", "action", "memory")}[cls]
    if not ok:
        raise SpecError(f"{name} is a {k} name, not usable as {cls}", line, 1)


def _check_expr(src, e, line):
    if isinstance(e, Atom):
        _need(src, e.name, _KIND_CLASS.get(e.kind, "any"), line)
    elif isinstance(e, NotE):
        _check_expr(src, e.arg, line)
    elif isinstance(e, (AndE, OrE)):
        for a in e.args:
            _check_expr(src, a, line)


def _atoms(e):
    if isinstance(e, Atom):
        yield e
    elif isinstance(e, NotE):
        yield from _atoms(e.arg)
    elif isinstance(e, (AndE, OrE)):
        for a in e.args:
            yield from _atoms(a)


def _check_sentence(src, s):
    line = s.line
    if isinstance(s, Visit):
        _need(src, s.target, "target", line)
    elif isinstance(s, IffS):
        _need(src, s.action, "action", line)
        _check_expr(src, s.cond, line)
    elif isinstance(s, SetReset):
        _need(src, s.memory, "memory", line)
        _check_expr(src, s.set_cond, line)
        _check_expr(src, s.reset_cond, line)
    elif isinstance(s, (Conditional, InfinitelyOften)):
        if isinstance(s, Conditional):
            _check_expr(src, s.cond, line)
        c = s.consequent
        if isinstance(c, Do):
            _need(src, c.action, "action", line)
        else:
            _check_expr(src, c, line)
            if isinstance(s, Conditional):
                for a in list(_atoms(c)):
                    if _KIND_CLASS.get(a.kind) not in ("env", "region"):
                        raise SpecError("an assumption's consequent may only mention sensed "
                                        f"facts and regions, not {a.name}", line, 1)
                for a in _atoms(s.cond):
                    if a.kind == "activating":
                        raise SpecError("an assumption may not depend on the robot's next action "
                                        f"({a.name}); use 'you were activating'", line, 1)


# -- pretty printing -----------------------------------------------------------

_CLAUSE = {
    "sensing": ("you are", "sensing"), "were_sensing": ("you were", "sensing"),
    "activating": ("you are", "activating"), "were_activating": ("you were", "activating"),
    "in": ("you are", "in"), "were_in": ("you were", "in"),
}


def expr_text(e, ctx=0) -> str:
    if isinstance(e, Atom):
        if e.kind == "name":
            return e.name
        if e.kind == "activated":
            return f"you activated {e.name}"
        subj, verb = _CLAUSE[e.kind]
        return f"{subj} {verb} {e.name}"
    if isinstance(e, BoolConst):
        return "true" if e.value else "false"
    if isinstance(e, NotE):
        a = e.arg
        if isinstance(a, Atom) and a.kind in _CLAUSE:
            subj, verb = _CLAUSE[a.kind]
            return f"{subj} not {verb} {a.name}"
        return "not " + expr_text(a, 3)
    if isinstance(e, AndE):
        s = " and ".join(expr_text(a, 2) for a in e.args)
        return f"({s})" if ctx >= 2 else s
    if isinstance(e, OrE):
        s = " or ".join(expr_text(a, 1) for a in e.args)
        return f"({s})" if ctx >= 1 else s
    raise TypeError(e)


def sentence_text(s) -> str:
    def cons(c):
        return f"do {c.action}" if isinstance(c, Do) else expr_text(c)
    if isinstance(s, Visit):
        return f"visit {s.target}"
    if isinstance(s, Conditional):
        return f"if {expr_text(s.cond)} then {cons(s.consequent)}"
    if isinstance(s, IffS):
        return f"do {s.action} if and only if {expr_text(s.cond)}"
    if isinstance(s, SetReset):
        return f"{s.memory} is set on {expr_text(s.set_cond, 2)} and reset on {expr_text(s.reset_cond)}"
    if isinstance(s, InfinitelyOften):
        return f"infinitely often {cons(s.consequent)}"
    raise TypeError(s)


def pretty(ast: SpecAST) -> str:
    body = "\n".join(sentence_text(s) for s in ast.sentences)
    return f"{ast.source.declaration_text()}\nspec:\n{body}\n"


# -- lowering ----------------------------------------------------------------

@dataclass
class GR1Spec:
    env_vars: tuple
    sys_vars: tuple
    env_init: tuple = ()
    sys_init: tuple = ()
    env_safety: tuple = ()
    sys_safety: tuple = ()
    env_liveness: tuple = (TRUE,)
    sys_liveness: tuple = (TRUE,)
    actions: tuple = ()
    memory: tuple = ()
    regions: tuple = ()

    def formulas(self):
        return {
            "env_init": self.env_init, "sys_init": self.sys_init,
            "env_safety": self.env_safety, "sys_safety": self.sys_safety,
            "env_liveness": self.env_liveness, "sys_liveness": self.sys_liveness,
        }

    def validate(self):
        env, sys_ = set(self.env_vars), set(self.sys_vars)
        if env & sys_:
            raise SpecError(f"variables on both sides: {sorted(env & sys_)}")
        known = env | sys_
        for group, fs in self.formulas().items():
            for f in fs:
                for name, primed in variables(f):
                    if name not in known:
                        raise SpecError(f"{group}: unknown variable {name} in {to_text(f)}")
                    if primed and group not in ("env_safety", "sys_safety"):
                        raise SpecError(f"{group}: primed variable {name}' not allowed")
                    if primed and group == "env_safety" and name in sys_:
                        raise SpecError(f"env_safety reads next-step robot variable {name}'")
                    if group in ("env_init",) and name in sys_:
                        raise SpecError(f"env_init mentions robot variable {name}")
        if not self.env_liveness or not self.sys_liveness:
            raise SpecError("each side needs at least one liveness goal")

    def to_text(self) -> str:
        lines = [f"env_vars: {' '.join(self.env_vars)}", f"sys_vars: {' '.join(self.sys_vars)}"]
        for group, fs in self.formulas().items():
            lines.append(f"{group}:")
            lines += [f"  {to_text(f)}" for f in fs]
        return "\n".join(lines) + "\n"


def past_name(name: str) -> str:
    return f"_past_{name}"


class _Lowerer:
    def __init__(self, src: SpecSource):
        self.src = src
        self.past: list[str] = []

    def atom(self, a: Atom, live: bool) -> Formula:
        if a.kind == "activated":
            if a.name not in self.past:
                self.past.append(a.name)
            return Var(past_name(a.name))
        primed = a.kind in ("sensing", "activating", "in") and not live
        return Var(a.name, primed)

    def expr(self, e, live=False) -> Formula:
        if isinstance(e, Atom):
            return self.atom(e, live)
        if isinstance(e, BoolConst):
            return TRUE if e.value else FALSE
        if isinstance(e, NotE):
            return Not(self.expr(e.arg, live))
        if isinstance(e, AndE):
            return And(tuple(self.expr(a, live) for a in e.args))
        if isinstance(e, OrE):
            return Or(tuple(self.expr(a, live) for a in e.args))
        raise TypeError(e)


def lower(ast: SpecAST, decls: SpecSource | None = None) -> GR1Spec:
    """Translate a checked AST into a GR(1) specification."""
    src = decls or ast.source
    lw = _Lowerer(src)
    env_safety, sys_safety, env_live, sys_live = [], [], [], []
    for s in ast.sentences:
        if isinstance(s, Visit):
            sys_live.append(Var(s.target))
        elif isinstance(s, IffS):
            sys_safety.append(Iff(Var(s.action, True), lw.expr(s.cond)))
        elif isinstance(s, SetReset):
            setf = lw.expr(s.set_cond)
            reset = lw.expr(s.reset_cond)
            keep = Var(s.memory) if reset == FALSE else And((Var(s.memory), Not(reset)))
            sys_safety.append(Iff(Var(s.memory, True), Or((setf, keep))))
        elif isinstance(s, Conditional):
            if isinstance(s.consequent, Do):
                sys_safety.append(Implies(lw.expr(s.cond), Var(s.consequent.action, True)))
            else:
                env_safety.append(Implies(lw.expr(s.cond), lw.expr(s.consequent)))
        elif isinstance(s, InfinitelyOften):
            if isinstance(s.consequent, Do):
                sys_live.append(Var(s.consequent.action))
            else:
                env_live.append(unprime(lw.expr(s.consequent, live=True)))
    for name in lw.past:
        p = past_name(name)
        sys_safety.append(Iff(Var(p, True), Or((Var(p), Var(name)))))
    regions = list(src.regions)
    env_init = []
    if regions:
        env_init.append(exactly_one([Var(r) for r in regions]))
        env_safety.insert(0, exactly_one([Var(r, True) for r in regions]))
        adj = {r: set() for r in regions}
        for a, b in src.adjacency:
            adj[a].add(b)
            adj[b].add(a)
        if src.adjacency:
            for k, r in enumerate(regions):
                nxt = [Var(r, True)] + [Var(n, True) for n in regions if n in adj[r]]
                env_safety.insert(1 + k, Implies(Var(r), disj(nxt)))
    sys_vars = tuple(src.actions) + tuple(src.memory) + tuple(past_name(n) for n in lw.past)
    spec = GR1Spec(
        env_vars=tuple(src.environment) + tuple(regions),
        sys_vars=sys_vars,
        env_init=tuple(env_init),
        sys_init=tuple(Not(Var(v)) for v in sys_vars),
        env_safety=tuple(env_safety),
        sys_safety=tuple(sys_safety),
        env_liveness=tuple(env_live) or (TRUE,),
        sys_liveness=tuple(sys_live) or (TRUE,),
        actions=tuple(src.actions),
        memory=tuple(src.memory) + tuple(past_name(n) for n in lw.past),
        regions=tuple(regions),
    )
    spec.validate()
    return spec


def exactly_one(vs) -> Formula:
    vs = list(vs)
    terms = []
    for i, v in enumerate(vs):
        terms.append(And((v,) + tuple(Not(w) for j, w in enumerate(vs) if j != i)))
    return disj(terms)


def load_spec_file(path) -> SpecAST:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())
