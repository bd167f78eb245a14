"""Explicit-state GR(1) game solving and strategy extraction.

States are packed (x, y) valuations: bit k of x is ``env_vars[k]``, bit k of y
is ``sys_vars[k]``.  Only states reachable from the initial condition are
built.  A round is: the environment picks x' admissible under rho_e, then the
system answers with y' admissible under rho_s.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from .logic import Formula, conj, evaluate, parse_formula, to_text

VAR_BUDGET = 24


class SynthesisError(RuntimeError):
    pass


class BudgetExceeded(SynthesisError):
    pass


def _bits(n_vars: int) -> np.ndarray:
    """Row k holds bit k of every packed value in range(2**n_vars)."""
    vals = np.arange(1 << n_vars, dtype=np.int64)
    return ((vals[None, :] >> np.arange(n_vars)[:, None]) & 1).astype(bool)


def bitstring(value: int, n: int) -> str:
    return "".join("1" if value >> k & 1 else "0" for k in range(n))


def unbitstring(s: str) -> int:
    return sum(1 << k for k, c in enumerate(s) if c == "1")


@dataclass
class GameStructure:
    env_vars: tuple
    sys_vars: tuple
    env_init: Formula
    sys_init: Formula
    env_safety: Formula
    sys_safety: Formula
    env_justice: tuple
    sys_justice: tuple
    # explicit reachable graph
    states: np.ndarray = None          # (n, 2) packed x, y
    index: dict = None                 # (x, y) -> state id
    env_ptr: np.ndarray = None         # state -> slice of env moves
    move_env: np.ndarray = None        # env move -> packed x'
    move_ptr: np.ndarray = None        # env move -> slice of succ
    succ: np.ndarray = None            # successor state ids
    initial: np.ndarray = None         # state ids satisfying both inits
    init_env: tuple = ()               # packed x values satisfying env_init
    je: np.ndarray = None              # (|J_e|, n) bool
    js: np.ndarray = None              # (|J_s|, n) bool

    @property
    def n_states(self):
        return len(self.states)

    def valuation(self, sid: int) -> dict:
        x, y = self.states[sid]
        v = {n: bool(x >> k & 1) for k, n in enumerate(self.env_vars)}
        v.update({n: bool(y >> k & 1) for k, n in enumerate(self.sys_vars)})
        return v

    # controllable predecessor: for every env move some sys answer lands in `target`
    def cpre(self, target: np.ndarray) -> np.ndarray:
        hit = np.concatenate(([0], np.cumsum(target[self.succ], dtype=np.int64)))
        move_ok = hit[self.move_ptr[1:]] > hit[self.move_ptr[:-1]]
        bad = np.concatenate(([0], np.cumsum(~move_ok, dtype=np.int64)))
        return bad[self.env_ptr[1:]] == bad[self.env_ptr[:-1]]


def build_game(spec, max_states: int = 2_000_000) -> GameStructure:
    env_vars, sys_vars = tuple(spec.env_vars), tuple(spec.sys_vars)
    total = len(env_vars) + len(sys_vars)
    if total > VAR_BUDGET:
        raise BudgetExceeded(f"{total} variables ({len(env_vars)} env + {len(sys_vars)} sys) "
                             f"exceed the explicit-state budget of {VAR_BUDGET}")
    g = GameStructure(
        env_vars, sys_vars,
        conj(spec.env_init), conj(spec.sys_init),
        conj(spec.env_safety), conj(spec.sys_safety),
        tuple(spec.env_liveness), tuple(spec.sys_liveness),
    )
    if not g.env_justice or not g.sys_justice:
        raise SynthesisError("each side needs at least one justice goal")
    nx_, ny = len(env_vars), len(sys_vars)
    xb, yb = _bits(nx_), _bits(ny)
    all_x = np.arange(1 << nx_, dtype=np.int64)
    all_y = np.arange(1 << ny, dtype=np.int64)

    def scalar_env(x, y):
        d = {(n, False): bool(x >> k & 1) for k, n in enumerate(env_vars)}
        d.update({(n, False): bool(y >> k & 1) for k, n in enumerate(sys_vars)})
        return d

    def full(val, shape):
        return np.broadcast_to(np.asarray(val, bool), shape)

    # initial states
    d = {(n, False): xb[k] for k, n in enumerate(env_vars)}
    init_x = all_x[full(evaluate(g.env_init, d), all_x.shape)]
    g.init_env = tuple(int(v) for v in init_x)
    index, states = {}, []
    initial = []
    for x in init_x:
        d = {(n, False): bool(x >> k & 1) for k, n in enumerate(env_vars)}
        d.update({(n, False): yb[k] for k, n in enumerate(sys_vars)})
        ok = full(evaluate(g.sys_init, d), all_y.shape)
        for y in all_y[ok]:
            key = (int(x), int(y))
            index[key] = len(states)
            states.append(key)
            initial.append(index[key])

    env_ptr, move_env, move_ptr, succ = [0], [], [0], []
    # BFS in id order so ids are assigned deterministically
    sid = 0
    while sid < len(states):
        x, y = states[sid]
        base = scalar_env(x, y)
        d = dict(base)
        d.update({(n, True): xb[k] for k, n in enumerate(env_vars)})
        xs = all_x[full(evaluate(g.env_safety, d), all_x.shape)]
        if len(xs):
            d = dict(base)
            d.update({(n, True): ((xs >> k) & 1).astype(bool)[:, None] for k, n in enumerate(env_vars)})
            d.update({(n, True): yb[k][None, :] for k, n in enumerate(sys_vars)})
            ok = full(evaluate(g.sys_safety, d), (len(xs), len(all_y)))
            for row, xp in enumerate(xs):
                for yp in all_y[ok[row]]:
                    key = (int(xp), int(yp))
                    t = index.get(key)
                    if t is None:
                        t = index[key] = len(states)
                        states.append(key)
                        if len(states) > max_states:
                            raise BudgetExceeded(f"more than {max_states} reachable states")
                    succ.append(t)
                move_env.append(int(xp))
                move_ptr.append(len(succ))
        env_ptr.append(len(move_env))
        sid += 1
    g.states = np.array(states, dtype=np.int64).reshape(-1, 2)
    g.index = index
    g.env_ptr = np.array(env_ptr, dtype=np.int64)
    g.move_env = np.array(move_env, dtype=np.int64)
    g.move_ptr = np.array(move_ptr, dtype=np.int64)
    g.succ = np.array(succ, dtype=np.int64)
    g.initial = np.array(initial, dtype=np.int64)
    g.je = _justice(g, g.env_justice)
    g.js = _justice(g, g.sys_justice)
    return g


def _justice(g: GameStructure, goals) -> np.ndarray:
    n = g.n_states
    out = np.zeros((len(goals), n), bool)
    if n == 0:
        return out
    d = {(name, False): ((g.states[:, 0] >> k) & 1).astype(bool) for k, name in enumerate(g.env_vars)}
    d.update({(name, False): ((g.states[:, 1] >> k) & 1).astype(bool) for k, name in enumerate(g.sys_vars)})
    for i, f in enumerate(goals):
        out[i] = np.broadcast_to(np.asarray(evaluate(f, d), bool), (n,))
    return out


# -- solving -----------------------------------------------------------------

@dataclass
class Solution:
    realizable: bool
    winning: np.ndarray
    losing_env: tuple = ()  # packed initial x values with no winning answer

    def losing_env_valuations(self, game):
        return [bitstring(x, len(game.env_vars)) for x in self.losing_env]


def _mu_y(g, Z, j, record=False):
    """Least fixpoint for sys goal j given Z; optionally returns rank/label layers."""
    n = g.n_states
    cz = g.cpre(Z)
    Y = np.zeros(n, bool)
    rank = np.full(n, -1, np.int64)
    label = np.full(n, -1, np.int64)
    r = 0
    while True:
        start = (g.js[j] & cz) | g.cpre(Y)
        newY = np.zeros(n, bool)
        xs = []
        for i in range(len(g.je)):
            X = Z.copy()
            while True:
                nxt = start | (~g.je[i] & g.cpre(X))
                nxt &= Z
                if np.array_equal(nxt, X):
                    break
                X = nxt
            xs.append(X)
            newY |= X
        if record:
            fresh = newY & ~Y
            rank[fresh] = r
            for i in range(len(xs) - 1, -1, -1):
                label[fresh & xs[i]] = i
        if np.array_equal(newY, Y):
            return Y, rank, label
        Y = newY
        r += 1


def solve(g: GameStructure) -> Solution:
    Z = np.ones(g.n_states, bool)
    while True:
        prev = Z.copy()
        for j in range(len(g.js)):
            Z, _, _ = _mu_y(g, Z, j)
        if np.array_equal(Z, prev):
            break
    losing = []
    by_x = {}
    for sid in g.initial:
        x = int(g.states[sid, 0])
        by_x[x] = by_x.get(x, False) or bool(Z[sid])
    for x in g.init_env:
        if not by_x.get(x, False):
            losing.append(x)
    return Solution(not losing, Z, tuple(losing))


# -- extraction --------------------------------------------------------------

@dataclass
class AutomatonState:
    id: int
    env: str
    sys: str
    goal: int
    next: dict = field(default_factory=dict)  # env bitstring -> state id


@dataclass
class ControllerAutomaton:
    env_vars: tuple
    sys_vars: tuple
    states: list
    initial: dict                  # env bitstring -> state id
    formulas: dict = field(default_factory=dict)   # group -> list of text
    actions: tuple = ()
    bindings: dict = field(default_factory=dict)   # action -> matched entry ids

    def env_valuation(self, bits: str) -> dict:
        return {n: c == "1" for n, c in zip(self.env_vars, bits)}

    def sys_valuation(self, sid: int) -> dict:
        return {n: c == "1" for n, c in zip(self.sys_vars, self.states[sid].sys)}

    def env_bits(self, valuation: dict) -> str:
        return "".join("1" if valuation.get(n, False) else "0" for n in self.env_vars)

    def to_dict(self) -> dict:
        return {
            "format": "reconfplan-automaton",
            "version": 1,
            "env_vars": list(self.env_vars),
            "sys_vars": list(self.sys_vars),
            "actions": list(self.actions),
            "formulas": {k: list(v) for k, v in self.formulas.items()},
            "bindings": {k: list(v) for k, v in sorted(self.bindings.items())},
            "initial": dict(sorted(self.initial.items())),
            "states": [
                {"id": s.id, "env": s.env, "sys": s.sys, "goal": s.goal,
                 "next": dict(sorted(s.next.items()))}
                for s in self.states
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d) -> "ControllerAutomaton":
        if d.get("format") != "reconfplan-automaton":
            raise ValueError("not an automaton file")
        states = [AutomatonState(s["id"], s["env"], s["sys"], s["goal"],
                                 {k: int(v) for k, v in s["next"].items()}) for s in d["states"]]
        return cls(tuple(d["env_vars"]), tuple(d["sys_vars"]), states,
                   {k: int(v) for k, v in d["initial"].items()},
                   {k: list(v) for k, v in d.get("formulas", {}).items()},
                   tuple(d.get("actions", ())),
                   {k: list(v) for k, v in d.get("bindings", {}).items()})

    @classmethod
    def from_json(cls, text: str) -> "ControllerAutomaton":
        return cls.from_dict(json.loads(text))

    def spec_formulas(self) -> dict:
        return {k: [parse_formula(t) for t in v] for k, v in self.formulas.items()}


def extract(g: GameStructure, sol: Solution, spec=None) -> ControllerAutomaton:
    if not sol.realizable:
        raise SynthesisError("cannot extract a strategy from an unrealizable game")
    Z = sol.winning
    n_goals = len(g.js)
    keys = []
    for j in range(n_goals):
        _, rank, label = _mu_y(g, Z, j, record=True)
        keys.append((rank, label))
    ny = len(g.sys_vars)

    def best(cands, j):
        rank, label = keys[j]
        cands = [c for c in cands if Z[c]]
        return min(cands, key=lambda c: (rank[c], label[c], int(g.states[c, 1])))

    nodes, node_id, queue = [], {}, deque()

    def node(sid, j):
        key = (int(sid), j)
        if key not in node_id:
            node_id[key] = len(nodes)
            x, y = g.states[sid]
            nodes.append(AutomatonState(len(nodes), bitstring(int(x), len(g.env_vars)),
                                        bitstring(int(y), ny), j))
            queue.append(key)
        return node_id[key]

    initial = {}
    by_x = {}
    for sid in g.initial:
        by_x.setdefault(int(g.states[sid, 0]), []).append(int(sid))
    for x in sorted(by_x):
        initial[bitstring(x, len(g.env_vars))] = node(best(by_x[x], 0), 0)
    while queue:
        sid, j = queue.popleft()
        me = nodes[node_id[(sid, j)]]
        jn = (j + 1) % n_goals if g.js[j][sid] else j
        for m in range(g.env_ptr[sid], g.env_ptr[sid + 1]):
            cands = g.succ[g.move_ptr[m]:g.move_ptr[m + 1]].tolist()
            t = best(cands, jn)
            me.next[bitstring(int(g.move_env[m]), len(g.env_vars))] = node(t, jn)
    aut = ControllerAutomaton(g.env_vars, g.sys_vars, nodes, initial)
    if spec is not None:
        aut.formulas = {k: [to_text(f) for f in v] for k, v in spec.formulas().items()}
        aut.actions = tuple(getattr(spec, "actions", ()))
    return aut


def synthesize(spec):
    """Build, solve and (when realizable) extract; returns (solution, automaton|None, game)."""
    g = build_game(spec)
    sol = solve(g)
    aut = extract(g, sol, spec) if sol.realizable else None
    return sol, aut, g


# -- checking ----------------------------------------------------------------

@dataclass
class CheckReport:
    ok: bool
    problems: list


def check_automaton(aut: ControllerAutomaton, spec, depth: int | None = None) -> CheckReport:
    """Re-verify every transition against the spec and search for starved goals.

    Starvation is exact: some sys goal k is starved iff a cycle avoiding J_s^k
    can visit every env justice goal, i.e. a nontrivial strongly connected
    component of the automaton restricted to states outside J_s^k meets every
    J_e^i.  A round-robin fair walk of the requested depth is run as well.
    """
    problems = []
    fs = spec.formulas()
    rho_e, rho_s = conj(fs["env_safety"]), conj(fs["sys_safety"])
    th_e, th_s = conj(fs["env_init"]), conj(fs["sys_init"])

    def val(sid):
        s = aut.states[sid]
        v = {(n, False): c == "1" for n, c in zip(aut.env_vars, s.env)}
        v.update({(n, False): c == "1" for n, c in zip(aut.sys_vars, s.sys)})
        return v

    def primed(v):
        return {(n, True): b for (n, _), b in v.items()}

    n_env = len(aut.env_vars)
    for bits, sid in aut.initial.items():
        v = val(sid)
        if aut.states[sid].env != bits:
            problems.append(f"initial state {sid} env label differs from {bits}")
        if not (bool(evaluate(th_e, v)) and bool(evaluate(th_s, v))):
            problems.append(f"initial state {sid} violates the initial condition")
    for x in range(1 << n_env):
        bits = bitstring(x, n_env)
        v = {(n, False): c == "1" for n, c in zip(aut.env_vars, bits)}
        v.update({(n, False): False for n in aut.sys_vars})
        envonly = {k: b for k, b in v.items() if k[0] in aut.env_vars}
        try:
            holds = bool(evaluate(th_e, envonly))
        except KeyError:
            holds = True
        if holds and bits not in aut.initial:
            problems.append(f"no initial state for env valuation {bits}")
    for s in aut.states:
        cur = val(s.id)
        for x in range(1 << n_env):
            bits = bitstring(x, n_env)
            envp = {(n, True): c == "1" for n, c in zip(aut.env_vars, bits)}
            admissible = bool(evaluate(rho_e, {**cur, **envp}))
            if bits in s.next:
                if not admissible:
                    problems.append(f"state {s.id} has a transition on inadmissible env {bits}")
                    continue
                t = s.next[bits]
                nxt = primed(val(t))
                if aut.states[t].env != bits:
                    problems.append(f"state {s.id} -> {t} env label mismatch")
                if not bool(evaluate(rho_s, {**cur, **nxt})):
                    problems.append(f"transition {s.id} -{bits}-> {t} violates sys safety")
            elif admissible:
                problems.append(f"state {s.id} lacks a successor for admissible env {bits}")
    je = [np.array([bool(evaluate(f, val(s.id))) for s in aut.states], bool) for f in fs["env_liveness"]]
    js = [np.array([bool(evaluate(f, val(s.id))) for s in aut.states], bool) for f in fs["sys_liveness"]]
    G = nx.DiGraph()
    G.add_nodes_from(range(len(aut.states)))
    for s in aut.states:
        for t in s.next.values():
            G.add_edge(s.id, t)
    for k, goal in enumerate(js):
        sub = G.subgraph([i for i in G.nodes if not goal[i]])
        for comp in nx.strongly_connected_components(sub):
            c = sorted(comp)
            if len(c) == 1 and not sub.has_edge(c[0], c[0]):
                continue
            if all(e[c].any() for e in je):
                problems.append(f"sys goal {k} can be starved in states {c[:8]}")
                break
    if aut.states and depth is None:
        depth = 2 * len(aut.states) * max(1, len(js))
    if depth and aut.initial:
        problems += _fair_walk(aut, js, je, depth)
    return CheckReport(not problems, problems)


def _fair_walk(aut, js, je, depth):
    """Walk choosing env moves round-robin; report goals missing from the tail."""
    sid = aut.initial[sorted(aut.initial)[0]]
    seen_goal = [[] for _ in js]
    seen_env = [[] for _ in je]
    counter = 0
    for step in range(depth):
        for k, g in enumerate(js):
            if g[sid]:
                seen_goal[k].append(step)
        for i, e in enumerate(je):
            if e[sid]:
                seen_env[i].append(step)
        moves = sorted(aut.states[sid].next)
        if not moves:
            return []
        sid = aut.states[sid].next[moves[counter % len(moves)]]
        counter += 1
    half = depth // 2
    env_fair = all(any(t >= half for t in s) for s in seen_env)
    if not env_fair:
        return []
    return [f"sys goal {k} not visited in the second half of a {depth}-step fair walk"
            for k, s in enumerate(seen_goal) if not any(t >= half for t in s)]
