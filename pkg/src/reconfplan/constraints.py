"""Mapping-induced constraints: unmatched actions never fire, disjointly
implemented actions never fire together."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from itertools import combinations

from .logic import And, Not, Var


@dataclass(frozen=True)
class MappingConstraints:
    never_true: frozenset = frozenset()
    mutex_pairs: frozenset = frozenset()  # frozensets of two names
    provenance: dict = field(default_factory=dict, compare=False, hash=False)

    def sorted_pairs(self):
        return sorted(tuple(sorted(p)) for p in self.mutex_pairs)

    def explain(self) -> list[str]:
        lines = []
        for v in sorted(self.never_true):
            lines.append(f"never {v}: {self.provenance[v]}")
        for a, b in self.sorted_pairs():
            lines.append(f"mutex {a} {b}: {self.provenance[(a, b)]}")
        return lines


def generate(bindings) -> MappingConstraints:
    """Derive constraints from one binding per robot action variable."""
    by_var = {}
    for b in bindings:
        if b.variable in by_var:
            raise ValueError(f"two bindings for variable {b.variable}")
        by_var[b.variable] = frozenset(b.matched)
    never, pairs, prov = set(), set(), {}
    for v, m in by_var.items():
        if not m:
            never.add(v)
            prov[v] = "no library entry satisfies its requirements"
    live = sorted(v for v in by_var if v not in never)
    for a, b in combinations(live, 2):
        if not by_var[a] & by_var[b]:
            pairs.add(frozenset((a, b)))
            prov[(a, b)] = (f"{a} -> {{{', '.join(sorted(by_var[a]))}}} and "
                            f"{b} -> {{{', '.join(sorted(by_var[b]))}}} share no entry")
    return MappingConstraints(frozenset(never), frozenset(pairs), prov)


def merge(spec, constraints: MappingConstraints):
    """Return `spec` strengthened by the constraints; existing formulas stay as they are."""
    sys_init = list(spec.sys_init)
    sys_safety = list(spec.sys_safety)
    for v in sorted(constraints.never_true):
        _require_sys(spec, v)
        sys_init.append(Not(Var(v)))
        sys_safety.append(Not(Var(v, True)))
    for a, b in constraints.sorted_pairs():
        _require_sys(spec, a)
        _require_sys(spec, b)
        sys_safety.append(Not(And((Var(a, True), Var(b, True)))))
    return replace(spec, sys_init=tuple(sys_init), sys_safety=tuple(sys_safety))


def _require_sys(spec, v):
    if v not in spec.sys_vars:
        raise ValueError(f"constraint mentions {v}, which is not a robot variable of the spec")
    if v in getattr(spec, "memory", ()):
        raise ValueError(f"memory variable {v} cannot carry mapping constraints")
