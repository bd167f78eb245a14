"""Run a controller automaton against a scripted, kinematic world.

One executor step reads the environment valuation, takes the automaton
transition, starts and stops library behaviors for robot variables that
changed, advances active behaviors by ``dt`` and appends a trace row.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import yaml

from .logic import conj, evaluate, to_text

WHEEL_RADIUS = 0.5
TRACK_WIDTH = 1.0
WHEEL_LIMIT = math.pi / 2
DT = 0.25


class ExecutionError(RuntimeError):
    pass


class EnvironmentAssumptionViolation(ExecutionError):
    def __init__(self, step, formula, valuation):
        self.step, self.formula, self.valuation = step, formula, valuation
        super().__init__(f"step {step}: environment valuation {valuation} violates assumption {formula}")


# -- kinematics --------------------------------------------------------------

def wrap_angle(a: float) -> float:
    return (a + math.pi) % (2 * math.pi) - math.pi


def diff_drive_integrate(pose, v_left: float, v_right: float, dt: float,
                         r: float = WHEEL_RADIUS, track: float = TRACK_WIDTH) -> np.ndarray:
    """Exact unicycle update for constant wheel speeds over `dt` seconds."""
    x, y, th = (float(c) for c in pose)
    v = r * (v_left + v_right) / 2.0
    w = r * (v_right - v_left) / track
    if abs(w) < 1e-12:
        return np.array([x + v * math.cos(th) * dt, y + v * math.sin(th) * dt, th])
    th2 = th + w * dt
    return np.array([
        x + v / w * (math.sin(th2) - math.sin(th)),
        y - v / w * (math.cos(th2) - math.cos(th)),
        wrap_angle(th2),
    ])


def wheels_from_twist(v: float, w: float, r: float = WHEEL_RADIUS, track: float = TRACK_WIDTH,
                      limit: float = WHEEL_LIMIT) -> tuple[float, float]:
    """Invert the unicycle map; scale both wheels down together if one saturates."""
    vl = (v - w * track / 2.0) / r
    vr = (v + w * track / 2.0) / r
    peak = max(abs(vl), abs(vr))
    if peak > limit:
        vl, vr = vl * limit / peak, vr * limit / peak
    return vl, vr


@dataclass(frozen=True)
class FieldGains:
    attract: float = 1.0
    repulse: float = 0.5
    influence: float = 1.5
    turn: float = 2.0
    stop_radius: float = 0.05


def potential_field_controller(world: dict, gains: FieldGains = FieldGains()) -> tuple[float, float]:
    """Wheel speeds (v_left, v_right) descending an attractive/repulsive potential.

    `world` holds ``pose`` (x, y, theta), ``goal`` (x, y) and optional
    ``obstacles`` as (x, y, radius) triples.
    """
    x, y, th = world["pose"]
    goal = world.get("goal")
    if goal is None:
        return 0.0, 0.0
    p = np.array([x, y], float)
    force = gains.attract * (np.asarray(goal, float) - p)
    if np.hypot(*force) <= gains.attract * gains.stop_radius:
        return 0.0, 0.0
    for ox, oy, rad in world.get("obstacles", ()):
        away = p - (ox, oy)
        d = max(float(np.hypot(*away)) - rad, 1e-6)
        if d < gains.influence:
            mag = gains.repulse * (1.0 / d - 1.0 / gains.influence) / d ** 2
            force += mag * away / max(np.hypot(*away), 1e-9)
    speed = float(np.hypot(*force))
    err = wrap_angle(math.atan2(force[1], force[0]) - th)
    v_max = WHEEL_RADIUS * WHEEL_LIMIT
    w_max = 2 * WHEEL_RADIUS * WHEEL_LIMIT / TRACK_WIDTH
    v = min(speed, v_max) * math.cos(err) if abs(err) < math.pi / 2 else 0.0
    w = float(np.clip(gains.turn * err, -w_max, w_max))
    return wheels_from_twist(v, w)


def heading_controller(world: dict, cruise: float = 0.5, gain: float = 1.5) -> tuple[float, float]:
    """Constant cruise speed with proportional heading correction toward the goal."""
    x, y, th = world["pose"]
    goal = world.get("goal")
    if goal is None or math.hypot(goal[0] - x, goal[1] - y) < FieldGains.stop_radius:
        return 0.0, 0.0
    err = wrap_angle(math.atan2(goal[1] - y, goal[0] - x) - th)
    v = cruise * max(math.cos(err), 0.0)
    return wheels_from_twist(v, gain * err)


@dataclass(frozen=True)
class ControllerFn:
    name: str
    fn: Callable
    outputs: tuple


CONTROLLERS = {
    "potential_field": ControllerFn("potential_field", potential_field_controller, ("v_left", "v_right")),
    "heading_p": ControllerFn("heading_p", heading_controller, ("v_left", "v_right")),
}


# -- scenario & world --------------------------------------------------------

@dataclass
class Region:
    name: str
    polygon: np.ndarray

    def contains(self, pt) -> bool:
        poly = self.polygon
        sign = 0
        for k in range(len(poly)):
            a, b = poly[k], poly[(k + 1) % len(poly)]
            cross = (b[0] - a[0]) * (pt[1] - a[1]) - (b[1] - a[1]) * (pt[0] - a[0])
            if abs(cross) < 1e-12:
                continue
            s = 1 if cross > 0 else -1
            if sign and s != sign:
                return False
            sign = s
        return True

    @property
    def centroid(self) -> np.ndarray:
        return self.polygon.mean(axis=0)


@dataclass
class Scenario:
    name: str = "scenario"
    initial_config: str | None = None
    module_count: int = 1
    dt: float = DT
    reconfig_cost: int = 1
    max_steps: int = 200
    pose: tuple = (0.0, 0.0, 0.0)
    bounds: tuple | None = None
    regions: list = field(default_factory=list)
    objects: list = field(default_factory=list)
    obstacles: list = field(default_factory=list)
    sensors: dict = field(default_factory=dict)
    facts: dict = field(default_factory=dict)
    events: list = field(default_factory=list)      # (step, {name: bool})
    effects: dict = field(default_factory=dict)     # variable -> list of effect dicts
    eap_goals: dict = field(default_factory=dict)   # variable -> list of goals
    goal_tolerance: float = 0.1
    stall_steps: int = 40
    stop_when: dict = field(default_factory=dict)

    def region(self, name) -> Region:
        for r in self.regions:
            if r.name == name:
                return r
        raise ExecutionError(f"unknown region {name}")


def load_scenario(source) -> Scenario:
    """Load a scenario from YAML text, a stream, or a dict."""
    doc = source if isinstance(source, dict) else yaml.safe_load(source)
    if not isinstance(doc, dict):
        raise ExecutionError("scenario must be a mapping")
    known = set(Scenario.__dataclass_fields__)
    extra = set(doc) - known
    if extra:
        raise ExecutionError(f"unknown scenario keys: {sorted(extra)}")
    sc = Scenario(**{k: v for k, v in doc.items() if k not in ("regions", "events", "pose", "bounds")})
    sc.pose = tuple(float(v) for v in doc.get("pose", (0, 0, 0)))
    if doc.get("bounds") is not None:
        (x0, y0), (x1, y1) = doc["bounds"]
        sc.bounds = (float(x0), float(y0), float(x1), float(y1))
    sc.regions = [Region(name, np.asarray(spec["polygon"], float))
                  for name, spec in (doc.get("regions") or {}).items()]
    sc.events = sorted(((int(e["step"]), dict(e["set"])) for e in doc.get("events") or ()),
                       key=lambda e: e[0])
    sc.effects = {k: list(v) for k, v in (doc.get("effects") or {}).items()}
    sc.eap_goals = {k: list(v) for k, v in (doc.get("eap_goals") or {}).items()}
    sc.facts = dict(doc.get("facts") or {})
    sc.sensors = dict(doc.get("sensors") or {})
    return sc


def load_scenario_file(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return load_scenario(fh)


@dataclass
class WorldState:
    step: int
    time: float
    pose: np.ndarray
    config: str | None
    module_count: int
    facts: dict
    objects: dict          # id -> {"kind", "region", "properties"}
    region: str | None
    goal_index: dict = field(default_factory=dict)


def initial_world(sc: Scenario) -> WorldState:
    objs = {}
    for o in sc.objects:
        objs[o["id"]] = {"kind": o.get("kind", o["id"]), "region": o.get("region"),
                         "properties": dict(o.get("properties") or {})}
    w = WorldState(0, 0.0, np.array(sc.pose, float), sc.initial_config, int(sc.module_count),
                   dict(sc.facts), objs, None)
    w.region = _locate(sc, w.pose, None)
    return w


def _locate(sc, pose, previous):
    for r in sc.regions:
        if r.contains(pose[:2]):
            return r.name
    return previous


def sense(sc: Scenario, world: WorldState, env_vars) -> dict:
    region_names = {r.name for r in sc.regions}
    out = {}
    for v in env_vars:
        if v in region_names:
            out[v] = world.region == v
        elif v in sc.sensors:
            rule = sc.sensors[v]
            kind = rule.get("object_in_region")
            out[v] = any(o["kind"] == kind and o["region"] == world.region
                         for o in world.objects.values())
        else:
            out[v] = bool(world.facts.get(v, False))
    return out


def apply_effect(sc: Scenario, world: WorldState, effect: dict) -> str:
    if len(effect) != 1:
        raise ExecutionError(f"effect must have exactly one key: {effect}")
    (kind, arg), = effect.items()
    if kind == "set_fact":
        world.facts[arg] = True
    elif kind == "clear_fact":
        world.facts[arg] = False
    elif kind == "move_to":
        target = sc.region(arg).centroid if isinstance(arg, str) else np.asarray(arg, float)
        world.pose = np.array([target[0], target[1], world.pose[2]])
        world.region = _locate(sc, world.pose, world.region)
    elif kind == "remove_object":
        for oid in sorted(world.objects):
            o = world.objects[oid]
            if o["kind"] == arg and o["region"] == world.region:
                del world.objects[oid]
    else:
        raise ExecutionError(f"unknown effect {kind}")
    return f"{kind} {arg}"


# -- entry selection & reconfiguration ---------------------------------------

def select_entry(binding, current_config, library, config_rank=None) -> str:
    """Pick the entry implementing a variable, preferring the current configuration.

    With no configuration yet (robot unassembled), `config_rank` (configuration
    id -> number of variables it can implement) picks the most broadly useful
    configuration.
    """
    matched = sorted(getattr(binding, "matched", binding))
    if not matched:
        raise ExecutionError(f"variable {getattr(binding, 'variable', '?')} has no implementing entry")
    same = [e for e in matched if library.entry(e).configuration.id == current_config]
    if same:
        return same[0]
    if current_config is None and config_rank:
        return min(matched, key=lambda e: (-config_rank.get(library.entry(e).configuration.id, 0), e))
    return matched[0]


def reconfigure(world: WorldState, to_config, library, cost_steps: int = 1, dt: float = DT):
    """Switch configuration in place; returns the event dict or None for a no-op."""
    if to_config == world.config:
        return None
    need = library.configurations[to_config].module_count
    if need > world.module_count:
        raise ExecutionError(f"cannot form {to_config}: needs {need} modules, only "
                             f"{world.module_count} available")
    event = {"type": "reconfigure", "from": world.config, "to": to_config}
    world.config = to_config
    world.time += cost_steps * dt
    return event


# -- trace -------------------------------------------------------------------

@dataclass
class ExecutionTrace:
    rows: list = field(default_factory=list)
    outcome: str = "running"

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.rows)

    @classmethod
    def from_jsonl(cls, text: str) -> "ExecutionTrace":
        return cls([json.loads(line) for line in text.splitlines() if line.strip()])

    def events(self, kind=None):
        for r in self.rows:
            for e in r["events"]:
                if kind is None or e["type"] == kind:
                    yield r["step"], e

    def reconfigurations(self):
        return [e for _, e in self.events("reconfigure")]

    def activations(self):
        """(step, variable, entry) in the order behaviors were started."""
        return [(s, e["var"], e["entry"]) for s, e in self.events("start")]


def _round(x):
    return round(float(x), 9) + 0.0


@dataclass
class _Active:
    var: str
    entry: str
    elapsed: float = 0.0
    done: bool = False


class Executor:
    def __init__(self, automaton, library, scenario: Scenario, env_source=None):
        self.aut, self.lib, self.sc = automaton, library, scenario
        self.env_source = env_source
        self.world = initial_world(scenario)
        self.trace = ExecutionTrace()
        self.active: dict[str, _Active] = {}
        self.state = None
        self.best_dist, self.stalled = {}, {}
        fs = automaton.spec_formulas()
        self.env_safety = fs.get("env_safety", [])
        rank = {}
        for var, ids in sorted(automaton.bindings.items()):
            for cfg in sorted({library.entry(e).configuration.id for e in ids}):
                rank[cfg] = rank.get(cfg, 0) + 1
        self.config_rank = rank
        for var, ids in automaton.bindings.items():
            for e in ids:
                beh = library.entry(e).behavior
                ctrl = getattr(beh, "controller", None)
                if ctrl is not None:
                    if ctrl not in CONTROLLERS:
                        raise ExecutionError(f"entry {e}: unknown controller {ctrl}")
                    if len(CONTROLLERS[ctrl].outputs) != len(beh.parameters):
                        raise ExecutionError(f"entry {e}: controller {ctrl} yields "
                                             f"{len(CONTROLLERS[ctrl].outputs)} values for "
                                             f"{len(beh.parameters)} parameters")

    # environment
    def read_env(self) -> dict:
        for step, values in self.sc.events:
            if step == self.world.step:
                self.world.facts.update({k: bool(v) for k, v in values.items()})
        if self.env_source is not None:
            got = self.env_source(self.world.step, self.world)
            if got is None:
                return None
            return {v: bool(got.get(v, False)) for v in self.aut.env_vars}
        return sense(self.sc, self.world, self.aut.env_vars)

    def _violated(self, cur_state, env):
        st = self.aut.states[cur_state]
        val = {(n, False): c == "1" for n, c in zip(self.aut.env_vars, st.env)}
        val.update({(n, False): c == "1" for n, c in zip(self.aut.sys_vars, st.sys)})
        val.update({(n, True): env[n] for n in self.aut.env_vars})
        for f in self.env_safety:
            if not bool(evaluate(f, val)):
                return to_text(f)
        return to_text(conj(self.env_safety)) if self.env_safety else "TRUE"

    def run(self) -> ExecutionTrace:
        try:
            while self.world.step <= self.sc.max_steps:
                if not self.step():
                    break
            else:
                self.trace.outcome = "max-steps"
        except ExecutionError:
            self.trace.outcome = "aborted"
            raise
        return self.trace

    def step(self) -> bool:
        """Advance one cycle; returns False once a stop condition is met."""
        w = self.world
        env = self.read_env()
        if env is None:
            self.trace.outcome = "input-closed"
            return False
        bits = self.aut.env_bits(env)
        if self.state is None:
            if bits not in self.aut.initial:
                raise EnvironmentAssumptionViolation(w.step, "initial condition", bits)
            nxt = self.aut.initial[bits]
            prev_sys = {n: False for n in self.aut.sys_vars}
        else:
            cur = self.aut.states[self.state]
            if bits not in cur.next:
                raise EnvironmentAssumptionViolation(w.step, self._violated(self.state, env), bits)
            nxt = cur.next[bits]
            prev_sys = self.aut.sys_valuation(self.state)
        self.state = nxt
        sys_now = self.aut.sys_valuation(nxt)
        events, params = [], {}
        for var in self.aut.sys_vars:
            if prev_sys[var] and not sys_now[var] and var in self.active:
                del self.active[var]
                events.append({"type": "stop", "var": var})
        for var in self.aut.sys_vars:
            if sys_now[var] and not prev_sys[var] and var in self.aut.bindings:
                entry = select_entry(self.aut.bindings[var], w.config, self.lib, self.config_rank)
                cfg = self.lib.entry(entry).configuration.id
                if w.config is None:
                    need = self.lib.configurations[cfg].module_count
                    if need > w.module_count:
                        raise ExecutionError(f"cannot assemble {cfg}: {need} modules needed")
                    w.config = cfg
                    events.append({"type": "assemble", "to": cfg})
                elif cfg != w.config:
                    for other in sorted(self.active):
                        if self.lib.entry(self.active[other].entry).configuration.id != cfg:
                            del self.active[other]
                            events.append({"type": "stop", "var": other, "reason": "reconfigure"})
                    events.append(reconfigure(w, cfg, self.lib, self.sc.reconfig_cost, self.sc.dt))
                self.active[var] = _Active(var, entry)
                events.append({"type": "start", "var": var, "entry": entry})
        for var in sorted(self.active, key=self.aut.sys_vars.index):
            events += self._advance(self.active[var], params)
        row = {
            "step": w.step,
            "time": _round(w.time),
            "state": nxt,
            "env": env,
            "sys": sys_now,
            "active": {v: a.entry for v, a in sorted(self.active.items())},
            "events": events,
            "params": params,
            "pose": [_round(c) for c in w.pose],
            "region": w.region,
            "config": w.config,
        }
        self.trace.rows.append(row)
        w.step += 1
        w.time += self.sc.dt
        stop = self.sc.stop_when
        if "env" in stop and env.get(stop["env"]):
            self.trace.outcome = "completed"
            return False
        if "completed" in stop and any(e["type"] == "complete" and e["var"] == stop["completed"]
                                       for e in events):
            self.trace.outcome = "completed"
            return False
        return True

    def _advance(self, act: _Active, params: dict) -> list:
        w, sc = self.world, self.sc
        beh = self.lib.entry(act.entry).behavior
        ctrl = getattr(beh, "controller", None)
        events = []
        if ctrl is not None:
            goal = self._goal(act.var)
            view = {"pose": tuple(w.pose), "goal": goal,
                    "obstacles": [tuple(o) for o in sc.obstacles]}
            values = CONTROLLERS[ctrl].fn(view)
            params[act.var] = {p: _round(v) for p, v in zip(beh.parameters, values)}
            vals = dict(zip(beh.parameters, values))
            vl = vals.get("V_left", values[0])
            vr = vals.get("V_right", values[-1])
            w.pose = diff_drive_integrate(w.pose, vl, vr, sc.dt)
            if sc.bounds is not None:
                x0, y0, x1, y1 = sc.bounds
                clipped = np.array([min(max(w.pose[0], x0), x1), min(max(w.pose[1], y0), y1), w.pose[2]])
                if not np.array_equal(clipped, w.pose):
                    events.append({"type": "bounds", "var": act.var})
                w.pose = clipped
            w.region = _locate(sc, w.pose, w.region)
            if goal is not None:
                d = math.hypot(goal[0] - w.pose[0], goal[1] - w.pose[1])
                if d < sc.goal_tolerance:
                    w.goal_index[act.var] = w.goal_index.get(act.var, 0) + 1
                    events.append({"type": "goal-reached", "var": act.var})
                    self.best_dist.pop(act.var, None)
                else:
                    best = self.best_dist.get(act.var, (math.inf, 0))
                    if d < best[0] - 1e-6:
                        self.best_dist[act.var] = (d, 0)
                    else:
                        self.best_dist[act.var] = (best[0], best[1] + 1)
                        if best[1] + 1 == sc.stall_steps:
                            events.append({"type": "stall", "var": act.var})
            return events
        act.elapsed += sc.dt
        if not act.done and act.elapsed >= beh.duration - 1e-9:
            act.done = True
            events.append({"type": "complete", "var": act.var, "entry": act.entry})
            for eff in tuple(self.lib.entry(act.entry).effects) + tuple(sc.effects.get(act.var, ())):
                events.append({"type": "effect", "var": act.var, "effect": apply_effect(sc, w, eff)})
        return events

    def _goal(self, var):
        goals = self.sc.eap_goals.get(var, ())
        k = self.world.goal_index.get(var, 0)
        if k >= len(goals):
            return None
        g = goals[k]
        if isinstance(g, str):
            c = self.sc.region(g).centroid
            return (float(c[0]), float(c[1]))
        return (float(g[0]), float(g[1]))


def execute(automaton, library, scenario, env_source=None) -> ExecutionTrace:
    return Executor(automaton, library, scenario, env_source).run()


def verify_trace(trace: ExecutionTrace, automaton) -> list[str]:
    """Independently re-check every recorded step against the safety formulas."""
    fs = automaton.spec_formulas()
    rho_e = conj(fs.get("env_safety", []))
    rho_s = conj(fs.get("sys_safety", []))
    th_e, th_s = conj(fs.get("env_init", [])), conj(fs.get("sys_init", []))
    problems = []
    prev = None
    for r in trace.rows:
        cur = {(n, False): bool(r["env"][n]) for n in automaton.env_vars}
        cur.update({(n, False): bool(r["sys"][n]) for n in automaton.sys_vars})
        if prev is None:
            if not (bool(evaluate(th_e, cur)) and bool(evaluate(th_s, cur))):
                problems.append(f"step {r['step']}: initial condition violated")
        else:
            both = {**prev, **{(n, True): b for (n, _), b in cur.items()}}
            if not bool(evaluate(rho_e, both)):
                problems.append(f"step {r['step']}: environment safety violated")
            if not bool(evaluate(rho_s, both)):
                problems.append(f"step {r['step']}: system safety violated")
            if str(r["state"]) not in {str(v) for v in automaton.states[prev_state].next.values()}:
                problems.append(f"step {r['step']}: state {r['state']} is not a successor of {prev_state}")
        prev, prev_state = cur, r["state"]
    return problems


def parse_env_line(line: str, env_vars) -> dict:
    """Interactive input: either a bitstring in variable order or `name=0|1` pairs."""
    line = line.strip()
    if line and set(line) <= {"0", "1"} and len(line) == len(env_vars):
        return {n: c == "1" for n, c in zip(env_vars, line)}
    out = {n: False for n in env_vars}
    for tok in line.replace(",", " ").split():
        name, _, val = tok.partition("=")
        if name not in out:
            raise ExecutionError(f"unknown environment variable {name}")
        out[name] = val.strip().lower() in ("1", "true", "yes", "on", "")
    return out
