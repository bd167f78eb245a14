"""Parse, match, constrain, synthesize and execute in one call."""
from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from . import __version__
from .constraints import MappingConstraints, generate, merge
from .executor import ExecutionTrace, execute, load_scenario_file
from .library import DesignLibrary, match_variable
from .speclang import GR1Spec, SpecAST, load_spec_file, lower
from .synth import ControllerAutomaton, Solution, synthesize


class PhaseError(RuntimeError):
    def __init__(self, phase: str, exc: Exception):
        self.phase, self.cause = phase, exc
        super().__init__(f"[{phase}] {exc}")


def data_file(name: str) -> Path:
    """Path of a file shipped under the package's data directory."""
    return Path(str(resources.files("reconfplan") / "data" / name))


@dataclass
class Compiled:
    ast: SpecAST
    bindings: list
    constraints: MappingConstraints
    spec: GR1Spec

    def binding_map(self) -> dict:
        return {b.variable: list(b.matched) for b in self.bindings}

    def match_report(self) -> dict:
        return {
            "bindings": {b.variable: {"requirements": [str(p) for p in b.requirements],
                                      "matched": list(b.matched)} for b in self.bindings},
            "never_true": sorted(self.constraints.never_true),
            "mutex": [list(p) for p in self.constraints.sorted_pairs()],
            "provenance": self.constraints.explain(),
        }


def compile_spec(ast: SpecAST, library: DesignLibrary) -> Compiled:
    reqs = ast.source.requirements
    bindings = [match_variable(library, v, reqs.get(v, ())) for v in ast.source.actions]
    constraints = generate(bindings)
    return Compiled(ast, bindings, constraints, merge(lower(ast), constraints))


def synthesize_compiled(c: Compiled) -> tuple[Solution, ControllerAutomaton | None]:
    sol, aut, _ = synthesize(c.spec)
    if aut is not None:
        aut.bindings = c.binding_map()
    return sol, aut


@dataclass
class PipelineResult:
    compiled: Compiled
    solution: Solution
    automaton: ControllerAutomaton | None
    trace: ExecutionTrace | None
    timings: dict = field(default_factory=dict)

    @property
    def realizable(self) -> bool:
        return self.solution.realizable


def run_pipeline(spec_path, library: DesignLibrary, scenario_path=None) -> PipelineResult:
    timings = {}

    def phase(name, fn):
        t0 = time.perf_counter()
        try:
            return fn()
        except PhaseError:
            raise
        except Exception as exc:  # tag and re-raise for the caller
            raise PhaseError(name, exc) from exc
        finally:
            timings[name] = round(time.perf_counter() - t0, 6)

    ast = phase("parse", lambda: load_spec_file(spec_path))
    compiled = phase("match", lambda: compile_spec(ast, library))
    sol, aut = phase("synth", lambda: synthesize_compiled(compiled))
    trace = None
    if aut is not None and scenario_path is not None:
        sc = phase("scenario", lambda: load_scenario_file(scenario_path))
        trace = phase("exec", lambda: execute(aut, library, sc))
    return PipelineResult(compiled, sol, aut, trace, timings)


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_artifacts(result: PipelineResult, out_dir, inputs: dict, polarity=None) -> dict:
    """Write automaton, trace, match report and manifest; returns their paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {}
    if result.automaton is not None:
        paths["automaton"] = out / "automaton.json"
        paths["automaton"].write_text(result.automaton.to_json())
    if result.trace is not None:
        paths["trace"] = out / "trace.jsonl"
        paths["trace"].write_text(result.trace.to_jsonl())
    paths["match_report"] = out / "match_report.json"
    paths["match_report"].write_text(json.dumps(result.compiled.match_report(), indent=1,
                                                sort_keys=True) + "\n")
    manifest = {
        "tool": "reconfplan",
        "version": __version__,
        "inputs": {k: {"path": str(v), "sha256": sha256(v)} for k, v in sorted(inputs.items()) if v},
        "polarity_override": polarity or {},
        "realizable": result.realizable,
        "outcome": result.trace.outcome if result.trace else None,
        "timings": result.timings,
    }
    paths["manifest"] = out / "manifest.json"
    paths["manifest"].write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return paths
