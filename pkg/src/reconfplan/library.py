"""Design library: loading, validation and property-based search."""
from __future__ import annotations

import io
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable

import yaml

from .core import (
    Behavior, BehaviorState, Configuration, Connection, CoreError, Cube, EAPBehavior,
    Interval, JointCommand, LibraryEntry, Mode, ModuleSpec, Polarity, Property,
    PropertyTypeError, entry_satisfies, parse_values, validate_configuration,
)

SCHEMA_VERSION = 1


class LibraryError(Exception):
    pass


class LibraryParseError(LibraryError):
    def __init__(self, path: str, message: str, line: int | None = None):
        self.path, self.line = path, line
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{path}: {message}")


class LibrarySemanticError(LibraryError):
    def __init__(self, violations: list[str]):
        self.violations = violations
        super().__init__(f"{len(violations)} problem(s):\n  " + "\n  ".join(violations))


@dataclass(frozen=True)
class DesignLibrary:
    entries: tuple[LibraryEntry, ...]
    polarity: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION
    configurations: dict = field(default_factory=dict)

    def __post_init__(self):
        ids = [e.id for e in self.entries]
        if len(ids) != len(set(ids)):
            raise LibrarySemanticError([f"duplicate entry id {i}" for i in sorted(ids) if ids.count(i) > 1])
        object.__setattr__(self, "entries", tuple(sorted(self.entries, key=lambda e: e.id)))

    def __len__(self):
        return len(self.entries)

    def entry(self, entry_id: str) -> LibraryEntry:
        for e in self.entries:
            if e.id == entry_id:
                return e
        raise KeyError(entry_id)

    def polarity_of(self, name: str) -> Polarity:
        return self.polarity.get(name, Polarity.LITERAL)

    def with_polarity(self, overrides: dict) -> "DesignLibrary":
        table = dict(self.polarity)
        table.update(overrides)
        return DesignLibrary(self.entries, table, self.schema_version, self.configurations)

    def satisfies(self, entry: LibraryEntry, requirement: Property) -> bool:
        return entry_satisfies(entry, requirement, self.polarity_of(requirement.name))


@dataclass(frozen=True)
class VariableBinding:
    variable: str
    requirements: tuple[Property, ...]
    matched: tuple[str, ...]


def match_variable(lib: DesignLibrary, variable: str,
                   requirements: Iterable[Property]) -> VariableBinding:
    reqs = tuple(requirements)
    names = [r.name for r in reqs]
    if len(names) != len(set(names)):
        raise ValueError(f"{variable}: requirement names must be unique, got {names}")
    matched = tuple(e.id for e in lib.entries if all(lib.satisfies(e, r) for r in reqs))
    return VariableBinding(variable, reqs, tuple(sorted(matched)))


def query(lib: DesignLibrary, requirement: Property) -> list[str]:
    return sorted(e.id for e in lib.entries if lib.satisfies(e, requirement))


# -- loading ---------------------------------------------------------------

def seed_library_path() -> Path:
    return Path(str(resources.files("reconfplan") / "data" / "seed_library.yaml"))


def load_seed_library() -> DesignLibrary:
    return load_library_file(seed_library_path())


def load_library_file(path) -> DesignLibrary:
    path = Path(path)
    with open(path, "rb") as fh:
        return load_library(fh, base_dir=path.parent)


def load_library(source, base_dir=None) -> DesignLibrary:
    """Parse and validate a library document from a byte or text stream."""
    if isinstance(source, (bytes, str)):
        source = io.BytesIO(source.encode() if isinstance(source, str) else source)
    try:
        doc = yaml.safe_load(source)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise LibraryParseError("<document>", str(getattr(exc, "problem", exc)),
                                mark.line + 1 if mark else None) from None
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise LibraryParseError("<document>", "top level must be a mapping")
    loader = _Loader(base_dir)
    return loader.build(doc)


class _Loader:
    def __init__(self, base_dir):
        self.base_dir = Path(base_dir) if base_dir else None
        self.problems: list[str] = []

    def fail(self, path, msg):
        raise LibraryParseError(path, msg)

    def build(self, doc: dict) -> DesignLibrary:
        version = doc.get("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            self.fail("schema_version", f"unsupported version {version!r}")
        polarity = {}
        for name, pol in (doc.get("polarity") or {}).items():
            try:
                polarity[str(name)] = Polarity(str(pol).lower())
            except ValueError:
                self.fail(f"polarity.{name}", f"expected literal or covers, got {pol!r}")
        configs = {}
        for i, cdoc in enumerate(doc.get("configurations") or []):
            cfg = self.configuration(cdoc, f"configurations[{i}]")
            if cfg.id in configs:
                self.problems.append(f"configurations[{i}]: duplicate configuration id {cfg.id}")
            configs[cfg.id] = cfg
            for v in validate_configuration(cfg):
                self.problems.append(f"configurations[{i}] ({cfg.id}): {v}")
        entries = []
        for i, edoc in enumerate(doc.get("entries") or []):
            e = self.entry(edoc, f"entries[{i}]", configs)
            if e is not None:
                entries.append(e)
        ids = [e.id for e in entries]
        for d in sorted({x for x in ids if ids.count(x) > 1}):
            self.problems.append(f"duplicate entry id {d}")
        used = {p.name for e in entries for p in e.properties}
        for name in sorted(set(polarity) - used):
            self.problems.append(f"polarity.{name}: no entry uses this property")
        if self.problems:
            raise LibrarySemanticError(self.problems)
        return DesignLibrary(tuple(entries), polarity, version, configs)

    def configuration(self, cdoc, path) -> Configuration:
        if not isinstance(cdoc, dict) or "id" not in cdoc:
            self.fail(path, "configuration needs an id")
        mods = cdoc.get("modules") or []
        if isinstance(mods, int):
            mods = [f"m{k}" for k in range(mods)]
        modules = tuple(ModuleSpec(str(m)) for m in mods)
        cubes = []
        for j, c in enumerate(cdoc.get("cubes") or []):
            if isinstance(c, dict):
                cubes.append(Cube(str(c["id"]), float(c.get("mass", Cube.mass))))
            else:
                cubes.append(Cube(str(c)))
        edges = []
        for j, e in enumerate(cdoc.get("edges") or []):
            epath = f"{path}.edges[{j}]"
            if not isinstance(e, list) or len(e) not in (2, 3):
                self.fail(epath, "edge must be [node.face, node.face] or [node.face, node.face, kind]")
            ends = []
            for end in e[:2]:
                if not isinstance(end, str) or "." not in end:
                    self.fail(epath, f"bad attachment reference {end!r}")
                ends.append(end.split(".", 1))
            kind = e[2] if len(e) == 3 else "magnetic"
            edges.append(Connection(ends[0][0], ends[0][1], ends[1][0], ends[1][1], kind))
        return Configuration(str(cdoc["id"]), modules, tuple(edges), tuple(cubes))

    def entry(self, edoc, path, configs) -> LibraryEntry | None:
        if not isinstance(edoc, dict):
            self.fail(path, "entry must be a mapping")
        for key in ("id", "configuration", "behavior"):
            if key not in edoc:
                self.fail(path, f"missing field {key!r}")
        cid = str(edoc["configuration"])
        if cid not in configs:
            self.problems.append(f"{path}.configuration: unknown configuration {cid}")
            return None
        config = configs[cid]
        bdoc = edoc["behavior"]
        bpath = f"{path}.behavior"
        if isinstance(bdoc, str):
            bdoc = self.external(bdoc, bpath)
        behavior = self.behavior(bdoc, bpath, config)
        if behavior is None:
            return None
        for msg in behavior.check(config):
            self.problems.append(f"{bpath}: {msg}")
        env = self.properties(edoc.get("env") or {}, f"{path}.env")
        rob = self.properties(edoc.get("robot") or {}, f"{path}.robot")
        effects = tuple(edoc.get("effects") or ())
        try:
            return LibraryEntry(str(edoc["id"]), config, behavior, env, rob, effects)
        except CoreError as exc:
            self.problems.append(f"{path}: {exc}")
            return None

    def external(self, rel, path):
        if self.base_dir is None:
            self.fail(path, f"behavior file {rel!r} referenced but library has no base directory")
        fp = self.base_dir / rel
        if not fp.is_file():
            self.fail(path, f"behavior file {fp} not found")
        with open(fp, "rb") as fh:
            try:
                return yaml.safe_load(fh)
            except yaml.YAMLError as exc:
                mark = getattr(exc, "problem_mark", None)
                raise LibraryParseError(f"{path} ({rel})", str(exc), mark.line + 1 if mark else None) from None

    def behavior(self, bdoc, path, config):
        if not isinstance(bdoc, dict) or "states" not in bdoc:
            self.fail(path, "behavior needs a states list")
        states = []
        for i, sdoc in enumerate(bdoc["states"] or []):
            spath = f"{path}.states[{i}]"
            cmds = {}
            for key, raw in (sdoc.get("commands") or {}).items():
                if "." not in str(key):
                    self.fail(f"{spath}.commands", f"bad joint reference {key!r}")
                mid, joint = str(key).split(".", 1)
                cmds[(mid, joint)] = self.command(raw, f"{spath}.commands.{key}")
            fill = sdoc.get("fill")
            if fill is not None:
                cmd = self.command(fill, f"{spath}.fill")
                for k in config.joint_keys():
                    cmds.setdefault(k, cmd)
            try:
                states.append(BehaviorState(cmds))
            except CoreError as exc:
                self.problems.append(f"{spath}: {exc}")
                return None
        bid = str(bdoc.get("id", "behavior"))
        if "parameters" in bdoc or "controller" in bdoc:
            return EAPBehavior(bid, config.id, tuple(states),
                               tuple(str(p) for p in bdoc.get("parameters") or ()),
                               str(bdoc.get("controller", "")))
        return Behavior(bid, config.id, tuple(states))

    def command(self, raw, path) -> JointCommand:
        if not isinstance(raw, list) or len(raw) != 3:
            self.fail(path, "command must be [mode, value, duration]")
        mode, value, dur = raw
        try:
            mode = Mode(str(mode).lower())
        except ValueError:
            self.fail(path, f"unknown command mode {mode!r}")
        if isinstance(value, str):
            if not value.startswith("$"):
                self.fail(path, f"parameter references start with '$', got {value!r}")
            value = value[1:]
        else:
            value = float(value)
        try:
            return JointCommand(mode, value, float(dur))
        except CoreError as exc:
            self.fail(path, str(exc))

    def properties(self, pdoc, path) -> tuple[Property, ...]:
        if not isinstance(pdoc, dict):
            self.fail(path, "properties must be a mapping NAME: VALUE")
        out = []
        for name, raw in pdoc.items():
            try:
                out.append(Property(str(name), yaml_values(raw, str(name))))
            except CoreError as exc:
                self.fail(f"{path}.{name}", str(exc))
        return tuple(out)


def yaml_values(raw, name):
    """Interpret a YAML property value: number, [lo, hi], [symbols], or text."""
    if isinstance(raw, bool):
        raise CoreError(f"property {name}: boolean is not a value set")
    if isinstance(raw, (int, float)):
        return Interval(float(raw), float(raw))
    if isinstance(raw, str):
        return parse_values(raw, name)
    if isinstance(raw, list):
        if not raw:
            raise CoreError(f"property {name}: empty value set")
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in raw):
            if len(raw) == 1:
                return Interval(float(raw[0]), float(raw[0]))
            if len(raw) == 2:
                return Interval(float(raw[0]), float(raw[1]))
            raise CoreError(f"property {name}: numeric list must have 1 or 2 items")
        if all(isinstance(v, str) for v in raw):
            return frozenset(raw)
    raise CoreError(f"property {name}: cannot interpret {raw!r}")


def default_library_path() -> Path:
    env = os.environ.get("RECONFPLAN_LIBRARY")
    return Path(env) if env else seed_library_path()


__all__ = [
    "DesignLibrary", "VariableBinding", "LibraryError", "LibraryParseError",
    "LibrarySemanticError", "PropertyTypeError", "load_library", "load_library_file",
    "load_seed_library", "match_variable", "query", "seed_library_path",
]
