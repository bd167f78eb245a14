"""Domain types shared across the planner: modules, configurations,
behaviors, properties and library entries.

All types are frozen dataclasses; build them once and share freely.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping, Union

import networkx as nx

JOINT_NAMES = ("left", "right", "pan", "tilt")
ATTACHMENT_NAMES = ("left", "right", "top", "bottom")
CUBE_FACES = ("f0", "f1", "f2", "f3", "f4", "f5")

WHEEL_MAX_SPEED = math.pi / 2  # 90 deg/s
PAN_MAX_SPEED = math.pi / 6  # 30 deg/s
TILT_RANGE = (-math.pi / 2, math.pi / 2)
TILT_MAX_SPEED = math.pi / 2

DEFAULT_CUBE_MASS = 0.25


class CoreError(ValueError):
    pass


class PropertyTypeError(CoreError):
    """Raised when an interval-valued property is compared to a symbol set."""


class Polarity(enum.Enum):
    LITERAL = "literal"
    COVERS = "covers"


class Mode(enum.Enum):
    POSITION = "position"
    VELOCITY = "velocity"


@dataclass(frozen=True)
class JointSpec:
    name: str
    modes: frozenset = frozenset({Mode.POSITION, Mode.VELOCITY})
    position_range: tuple[float, float] | None = None
    max_speed: float = WHEEL_MAX_SPEED


def smores_joints() -> tuple[JointSpec, ...]:
    return (
        JointSpec("left", max_speed=WHEEL_MAX_SPEED),
        JointSpec("right", max_speed=WHEEL_MAX_SPEED),
        JointSpec("pan", max_speed=PAN_MAX_SPEED),
        JointSpec("tilt", position_range=TILT_RANGE, max_speed=TILT_MAX_SPEED),
    )


@dataclass(frozen=True)
class ModuleSpec:
    id: str
    joints: tuple[JointSpec, ...] = field(default_factory=smores_joints)
    attachments: tuple[str, ...] = ATTACHMENT_NAMES

    def __post_init__(self):
        if len(self.joints) != 4 or len(self.attachments) != 4:
            raise CoreError(f"module {self.id}: needs exactly 4 joints and 4 attachment points")

    def joint(self, name: str) -> JointSpec:
        for j in self.joints:
            if j.name == name:
                return j
        raise KeyError(name)


@dataclass(frozen=True)
class Cube:
    """Passive structural cube: no joints, six magnetic faces."""

    id: str
    mass: float = DEFAULT_CUBE_MASS
    attachments: tuple[str, ...] = CUBE_FACES


@dataclass(frozen=True)
class Connection:
    a: str
    a_face: str
    b: str
    b_face: str
    kind: str = "magnetic"  # or "plated"

    def __str__(self):
        return f"{self.a}.{self.a_face}-{self.b}.{self.b_face} ({self.kind})"


@dataclass(frozen=True)
class Configuration:
    id: str
    modules: tuple[ModuleSpec, ...]
    edges: tuple[Connection, ...] = ()
    cubes: tuple[Cube, ...] = ()

    @property
    def module_count(self) -> int:
        return len(self.modules)

    def module(self, mid: str) -> ModuleSpec:
        for m in self.modules:
            if m.id == mid:
                return m
        raise KeyError(mid)

    def joint_keys(self) -> frozenset[tuple[str, str]]:
        return frozenset((m.id, j.name) for m in self.modules for j in m.joints)

    def nodes(self) -> dict:
        out = {m.id: m for m in self.modules}
        out.update({c.id: c for c in self.cubes})
        return out


@dataclass(frozen=True)
class Violation:
    kind: str
    subject: str
    message: str

    def __str__(self):
        return f"{self.kind}: {self.message}"


def validate_configuration(config: Configuration) -> list[Violation]:
    """Check connectivity and the one-connection-per-attachment rule."""
    out: list[Violation] = []
    nodes = config.nodes()
    if not config.modules:
        out.append(Violation("empty", config.id, f"configuration {config.id} has no modules"))
    if len(nodes) != len(config.modules) + len(config.cubes):
        out.append(Violation("duplicate-id", config.id, f"configuration {config.id} repeats a node id"))
    used: dict[tuple[str, str], Connection] = {}
    g = nx.Graph()
    g.add_nodes_from(nodes)
    for e in config.edges:
        ok = True
        if e.a == e.b:
            out.append(Violation("self-connection", str(e), f"edge {e} connects {e.a} to itself"))
            ok = False
        if e.kind not in ("magnetic", "plated"):
            out.append(Violation("connector-kind", str(e), f"edge {e} has unknown connector kind {e.kind!r}"))
        for node, face in ((e.a, e.a_face), (e.b, e.b_face)):
            if node not in nodes:
                out.append(Violation("unknown-node", node, f"edge {e} references unknown node {node}"))
                ok = False
                continue
            if face not in nodes[node].attachments:
                out.append(Violation("unknown-attachment", f"{node}.{face}",
                                     f"edge {e} uses attachment {node}.{face} which does not exist"))
                ok = False
                continue
            prev = used.get((node, face))
            if prev is not None:
                out.append(Violation("attachment-reuse", f"{node}.{face}",
                                     f"attachment {node}.{face} used by both {prev} and {e}"))
                ok = False
            else:
                used[(node, face)] = e
        if ok:
            g.add_edge(e.a, e.b)
    if len(nodes) > 1 and not nx.is_connected(g):
        parts = sorted(sorted(c) for c in nx.connected_components(g))
        out.append(Violation("disconnected", config.id,
                             f"configuration {config.id} splits into components {parts}"))
    return out


@dataclass(frozen=True)
class JointCommand:
    mode: Mode
    value: Union[float, str]  # str names an EAP parameter
    duration: float

    def __post_init__(self):
        if not self.duration > 0:
            raise CoreError(f"joint command duration must be > 0, got {self.duration}")

    @property
    def parametric(self) -> bool:
        return isinstance(self.value, str)

    def check(self, joint: JointSpec) -> str | None:
        if self.mode not in joint.modes:
            return f"mode {self.mode.value} not allowed on joint {joint.name}"
        if self.parametric:
            return None
        if self.mode is Mode.POSITION and joint.position_range is not None:
            lo, hi = joint.position_range
            if not lo - 1e-12 <= self.value <= hi + 1e-12:
                return f"position {self.value} outside [{lo:.4f}, {hi:.4f}] on joint {joint.name}"
        if self.mode is Mode.VELOCITY and abs(self.value) > joint.max_speed + 1e-12:
            return f"velocity {self.value} exceeds {joint.max_speed:.4f} rad/s on joint {joint.name}"
        return None


@dataclass(frozen=True)
class BehaviorState:
    commands: Mapping[tuple[str, str], JointCommand]
    duration: float = 0.0

    def __post_init__(self):
        if not self.commands:
            raise CoreError("behavior state has no joint commands")
        longest = max(c.duration for c in self.commands.values())
        if self.duration == 0.0:
            object.__setattr__(self, "duration", longest)
        elif not math.isclose(self.duration, longest):
            raise CoreError(f"state duration {self.duration} != longest command {longest}")

    def parameters(self) -> set[str]:
        return {c.value for c in self.commands.values() if c.parametric}


@dataclass(frozen=True)
class Behavior:
    id: str
    configuration: str
    states: tuple[BehaviorState, ...]

    @property
    def duration(self) -> float:
        return sum(s.duration for s in self.states)

    def check(self, config: Configuration) -> list[str]:
        """Return problems with this behavior against its configuration."""
        problems = []
        if not self.states:
            problems.append(f"behavior {self.id} has no states")
        if self.configuration != config.id:
            problems.append(f"behavior {self.id} targets {self.configuration}, not {config.id}")
        keys = config.joint_keys()
        for i, st in enumerate(self.states):
            got = set(st.commands)
            for k in sorted(got - keys):
                problems.append(f"behavior {self.id} state {i}: unknown joint {k[0]}.{k[1]}")
            for k in sorted(keys - got):
                problems.append(f"behavior {self.id} state {i}: no command for joint {k[0]}.{k[1]}")
            for k in sorted(got & keys):
                msg = st.commands[k].check(config.module(k[0]).joint(k[1]))
                if msg:
                    problems.append(f"behavior {self.id} state {i}: {k[0]}.{msg}")
            if any(c.parametric for c in st.commands.values()) and not isinstance(self, EAPBehavior):
                problems.append(f"behavior {self.id} state {i}: parametric command in a plain behavior")
        return problems


@dataclass(frozen=True)
class EAPBehavior(Behavior):
    parameters: tuple[str, ...] = ()
    controller: str = ""

    def check(self, config: Configuration) -> list[str]:
        problems = super().check(config)
        used = set().union(*(s.parameters() for s in self.states)) if self.states else set()
        for p in sorted(used - set(self.parameters)):
            problems.append(f"behavior {self.id}: parameter {p} is not declared")
        for p in sorted(set(self.parameters) - used):
            problems.append(f"behavior {self.id}: parameter {p} is never used")
        if len(set(self.parameters)) != len(self.parameters):
            problems.append(f"behavior {self.id}: duplicate parameter names")
        if not self.controller:
            problems.append(f"behavior {self.id}: no controller function")
        return problems


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise CoreError(f"empty interval [{self.lo}, {self.hi}]")

    def __str__(self):
        if self.lo == self.hi:
            return _num(self.lo)
        return f"[{_num(self.lo)},{_num(self.hi)}]"


def _num(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


@dataclass(frozen=True)
class Property:
    name: str
    values: Union[Interval, frozenset]

    def __post_init__(self):
        if isinstance(self.values, (set, list, tuple)):
            object.__setattr__(self, "values", frozenset(self.values))
        if isinstance(self.values, frozenset) and not self.values:
            raise CoreError(f"property {self.name}: empty symbol set")
        if not isinstance(self.values, (Interval, frozenset)):
            raise CoreError(f"property {self.name}: bad value set {self.values!r}")

    @property
    def is_interval(self) -> bool:
        return isinstance(self.values, Interval)

    def __str__(self):
        if self.is_interval:
            return f"{self.name}={self.values}"
        return f"{self.name}={{{','.join(sorted(self.values))}}}"


def _subset(a, b) -> bool:
    if isinstance(a, Interval):
        return b.lo <= a.lo and a.hi <= b.hi
    return a <= b


def property_satisfies(candidate: Property, requirement: Property,
                       polarity: Polarity = Polarity.LITERAL) -> bool:
    """Does `candidate` satisfy `requirement`?

    LITERAL asks candidate.values <= requirement.values; COVERS asks the
    reverse, which is what capability-type properties need (an entry that
    reaches [1, 6] can press a button at height 4).
    """
    if candidate.name != requirement.name:
        return False
    if candidate.is_interval != requirement.is_interval:
        raise PropertyTypeError(
            f"cannot compare {candidate} with {requirement}: interval vs symbol set")
    if polarity is Polarity.LITERAL:
        return _subset(candidate.values, requirement.values)
    return _subset(requirement.values, candidate.values)


@dataclass(frozen=True)
class LibraryEntry:
    id: str
    configuration: Configuration
    behavior: Behavior
    env_properties: tuple[Property, ...] = ()
    robot_properties: tuple[Property, ...] = ()
    effects: tuple = ()

    def __post_init__(self):
        if self.behavior.configuration != self.configuration.id:
            raise CoreError(f"entry {self.id}: behavior belongs to {self.behavior.configuration}")
        names = [p.name for p in self.properties]
        if len(names) != len(set(names)):
            raise CoreError(f"entry {self.id}: duplicate property names {sorted(names)}")

    @property
    def properties(self) -> tuple[Property, ...]:
        return self.env_properties + self.robot_properties

    def property(self, name: str) -> Property | None:
        for p in self.properties:
            if p.name == name:
                return p
        return None


def entry_satisfies(entry: LibraryEntry, requirement: Property,
                    polarity: Polarity = Polarity.LITERAL) -> bool:
    return any(property_satisfies(p, requirement, polarity)
               for p in entry.properties if p.name == requirement.name)


def parse_property(text: str) -> Property:
    """Parse ``NAME=SPEC`` where SPEC is ``[lo,hi]``, a number, ``{A,B}`` or a word."""
    if "=" not in text:
        raise CoreError(f"property {text!r}: expected NAME=VALUE")
    name, spec = (s.strip() for s in text.split("=", 1))
    if not name.isidentifier():
        raise CoreError(f"property {text!r}: bad name {name!r}")
    return Property(name, parse_values(spec, name))


def parse_values(spec: str, name: str = "?"):
    spec = spec.strip()
    if spec.startswith("["):
        if not spec.endswith("]"):
            raise CoreError(f"property {name}: unterminated interval {spec!r}")
        parts = [p.strip() for p in spec[1:-1].split(",")]
        try:
            nums = [float(p) for p in parts if p]
        except ValueError:
            # [Climb] style: brackets around symbols denote a set
            syms = frozenset(p for p in parts if p)
            if not syms:
                raise CoreError(f"property {name}: empty value set") from None
            return syms
        if len(nums) == 1:
            return Interval(nums[0], nums[0])
        if len(nums) != 2:
            raise CoreError(f"property {name}: interval needs 1 or 2 bounds, got {spec!r}")
        return Interval(*nums)
    if spec.startswith("{"):
        if not spec.endswith("}"):
            raise CoreError(f"property {name}: unterminated set {spec!r}")
        syms = frozenset(p.strip() for p in spec[1:-1].split(",") if p.strip())
        if not syms:
            raise CoreError(f"property {name}: empty value set")
        return syms
    try:
        x = float(spec)
    except ValueError:
        if not spec:
            raise CoreError(f"property {name}: empty value set") from None
        return frozenset({spec})
    return Interval(x, x)
