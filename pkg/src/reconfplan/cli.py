"""Command-line entry point: ``reconfplan <command> ...``.

Exit codes: 0 success, 2 unrealizable specification, 1 any error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .core import CoreError, Polarity, parse_property
from .executor import (
    ExecutionError, Executor, load_scenario_file, parse_env_line, verify_trace,
)
from .feasibility import FeasibilityError, edge_loads, load_pose
from .library import LibraryError, default_library_path, load_library_file, query
from .logic import to_text
from .pipeline import (
    PhaseError, compile_spec, run_pipeline, synthesize_compiled, write_artifacts,
)
from .speclang import SpecError, load_spec_file, lower, pretty
from .synth import ControllerAutomaton, SynthesisError, bitstring

EXIT_OK, EXIT_ERROR, EXIT_UNREALIZABLE = 0, 1, 2


class _Out:
    def __init__(self, fmt):
        self.machine = fmt == "machine"

    def emit(self, human: str, machine: dict):
        if self.machine:
            print(json.dumps(machine, sort_keys=True))
        else:
            print(human)


def _library(args):
    path = args.library or default_library_path()
    lib = load_library_file(path)
    if getattr(args, "polarity", None):
        lib = lib.with_polarity(_polarity_overrides(args.polarity))
    return lib


def _polarity_overrides(items) -> dict:
    out = {}
    for item in items or ():
        name, _, pol = item.partition("=")
        try:
            out[name] = Polarity(pol.strip().lower())
        except ValueError:
            raise CoreError(f"bad polarity {item!r}; use NAME=literal or NAME=covers") from None
    return out


# -- commands ------------------------------------------------------------------

def cmd_lib_validate(args, out):
    lib = load_library_file(args.file)
    out.emit(f"ok: {len(lib)} entries, {len(lib.configurations)} configurations",
             {"ok": True, "entries": [e.id for e in lib.entries]})
    return EXIT_OK


def cmd_lib_query(args, out):
    lib = load_library_file(args.file)
    if args.polarity:
        lib = lib.with_polarity(_polarity_overrides(args.polarity))
    ids = None
    for spec in args.prop:
        hits = set(query(lib, parse_property(spec)))
        ids = hits if ids is None else ids & hits
    ids = sorted(ids or ())
    out.emit("\n".join(ids) if ids else "(no matching entries)", {"matched": ids})
    return EXIT_OK


def cmd_spec_parse(args, out):
    ast = load_spec_file(args.file)
    if args.dump_ltl:
        spec = lower(ast)
        out.emit(spec.to_text().rstrip("\n"),
                 {"env_vars": list(spec.env_vars), "sys_vars": list(spec.sys_vars),
                  **{k: [to_text(f) for f in v] for k, v in spec.formulas().items()}})
    elif args.dump_ast:
        out.emit("\n".join(repr(s) for s in ast.sentences), {"ast": [repr(s) for s in ast.sentences]})
    else:
        out.emit(pretty(ast).rstrip("\n"), {"ok": True, "sentences": len(ast.sentences)})
    return EXIT_OK


def cmd_synth(args, out):
    lib = _library(args)
    compiled = compile_spec(load_spec_file(args.spec), lib)
    if args.explain:
        for b in compiled.bindings:
            print(f"{b.variable}: {', '.join(b.matched) or '(none)'}", file=sys.stderr)
        for line in compiled.constraints.explain():
            print(line, file=sys.stderr)
    sol, aut = synthesize_compiled(compiled)
    if not sol.realizable:
        losing = [bitstring(x, len(compiled.spec.env_vars)) for x in sol.losing_env]
        out.emit("unrealizable; losing initial environment valuations: " + ", ".join(losing),
                 {"realizable": False, "losing_env": losing})
        return EXIT_UNREALIZABLE
    Path(args.output).write_text(aut.to_json())
    out.emit(f"realizable: {len(aut.states)} states written to {args.output}",
             {"realizable": True, "states": len(aut.states), "output": args.output})
    return EXIT_OK


def cmd_exec(args, out):
    lib = _library(args)
    aut = ControllerAutomaton.from_json(Path(args.automaton).read_text())
    sc = load_scenario_file(args.scenario)
    source = None
    if args.interactive:
        def source(step, world):
            line = sys.stdin.readline()
            if not line:
                return None
            return parse_env_line(line, aut.env_vars)
    ex = Executor(aut, lib, sc, env_source=source)
    trace = ex.run()
    if args.trace:
        Path(args.trace).write_text(trace.to_jsonl())
    problems = verify_trace(trace, aut)
    if args.interactive or not args.trace:
        for r in trace.rows:
            on = [k for k, v in r["sys"].items() if v]
            if not out.machine:
                print(f"{r['step']:4d} state {r['state']:3d} sys [{', '.join(on)}]")
    out.emit(f"{trace.outcome} after {len(trace.rows)} steps, "
             f"{len(trace.reconfigurations())} reconfigurations",
             {"outcome": trace.outcome, "steps": len(trace.rows),
              "reconfigurations": trace.reconfigurations(), "problems": problems})
    return EXIT_OK if not problems else EXIT_ERROR


def cmd_check_config(args, out):
    lib = _library(args)
    if args.config_id not in lib.configurations:
        raise CoreError(f"no configuration {args.config_id} in the library")
    with open(args.pose, encoding="utf-8") as fh:
        pose = load_pose(fh, lib.configurations[args.config_id])
    loads = edge_loads(pose)
    bad = [ld for ld in loads if ld.overloaded]
    lines = [f"{ld.edge.parent}-{ld.edge.child} ({ld.edge.kind}): moment {ld.moment:.3f} / "
             f"capacity {ld.capacity:.3f}{'  OVERLOAD' if ld.overloaded else ''}" for ld in loads]
    lines.append("feasible" if not bad else f"{len(bad)} overloaded connector(s)")
    out.emit("\n".join(lines), {
        "feasible": not bad,
        "edges": [{"parent": ld.edge.parent, "child": ld.edge.child, "kind": ld.edge.kind,
                   "moment": round(ld.moment, 9), "capacity": ld.capacity,
                   "overloaded": ld.overloaded} for ld in loads]})
    return EXIT_OK if not bad else EXIT_ERROR


def cmd_pipeline(args, out):
    lib = _library(args)
    result = run_pipeline(args.spec, lib, args.scenario)
    overrides = {k: v.value for k, v in _polarity_overrides(args.polarity).items()}
    paths = write_artifacts(result, args.out_dir,
                            {"spec": args.spec, "library": args.library or default_library_path(),
                             "scenario": args.scenario}, overrides)
    if args.explain:
        for line in result.compiled.constraints.explain():
            print(line, file=sys.stderr)
    if not result.realizable:
        out.emit("unrealizable", {"realizable": False,
                                  "artifacts": {k: str(v) for k, v in paths.items()}})
        return EXIT_UNREALIZABLE
    t = result.trace
    out.emit(f"realizable; {t.outcome} after {len(t.rows)} steps, "
             f"{len(t.reconfigurations())} reconfigurations; artifacts in {args.out_dir}",
             {"realizable": True, "outcome": t.outcome, "steps": len(t.rows),
              "reconfigurations": len(t.reconfigurations()),
              "artifacts": {k: str(v) for k, v in paths.items()}})
    return EXIT_OK


# -- argument parsing ----------------------------------------------------------

class _ArgParser(argparse.ArgumentParser):
    # usage mistakes are errors (1); exit code 2 means "unrealizable"
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _ArgParser(prog="reconfplan", description=__doc__.splitlines()[0])
    p.add_argument("--format", choices=("human", "machine"), default="human")
    sub = p.add_subparsers(dest="command", required=True)

    lib = sub.add_parser("lib", help="design library tools")
    lsub = lib.add_subparsers(dest="lib_command", required=True)
    v = lsub.add_parser("validate")
    v.add_argument("file")
    v.set_defaults(func=cmd_lib_validate)
    q = lsub.add_parser("query")
    q.add_argument("file")
    q.add_argument("--prop", action="append", required=True, metavar="NAME=SPEC")
    q.add_argument("--polarity", action="append", metavar="NAME=literal|covers")
    q.set_defaults(func=cmd_lib_query)

    sp = sub.add_parser("spec", help="specification tools")
    ssub = sp.add_subparsers(dest="spec_command", required=True)
    pp = ssub.add_parser("parse")
    pp.add_argument("file")
    g = pp.add_mutually_exclusive_group()
    g.add_argument("--dump-ast", action="store_true")
    g.add_argument("--dump-ltl", action="store_true")
    pp.set_defaults(func=cmd_spec_parse)

    sy = sub.add_parser("synth", help="synthesize a controller automaton")
    sy.add_argument("spec")
    sy.add_argument("library", nargs="?")
    sy.add_argument("-o", "--output", default="automaton.json")
    sy.add_argument("--explain", action="store_true")
    sy.add_argument("--polarity", action="append", metavar="NAME=literal|covers")
    sy.set_defaults(func=cmd_synth)

    ex = sub.add_parser("exec", help="execute an automaton against a scenario")
    ex.add_argument("automaton")
    ex.add_argument("library")
    ex.add_argument("scenario")
    ex.add_argument("--trace")
    ex.add_argument("--interactive", action="store_true")
    ex.set_defaults(func=cmd_exec)

    cc = sub.add_parser("check-config", help="connector load check for a posed configuration")
    cc.add_argument("library")
    cc.add_argument("config_id")
    cc.add_argument("--pose", required=True)
    cc.set_defaults(func=cmd_check_config)

    pl = sub.add_parser("pipeline", help="parse, match, synthesize and execute")
    pl.add_argument("spec")
    pl.add_argument("library")
    pl.add_argument("scenario")
    pl.add_argument("-o", "--out-dir", default="out")
    pl.add_argument("--explain", action="store_true")
    pl.add_argument("--polarity", action="append", metavar="NAME=literal|covers")
    pl.set_defaults(func=cmd_pipeline)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = _Out(args.format)
    try:
        return args.func(args, out)
    except PhaseError as exc:
        print(f"error: {exc}", file=sys.stderr)
    except (LibraryError, SpecError, SynthesisError, ExecutionError, FeasibilityError,
            CoreError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
