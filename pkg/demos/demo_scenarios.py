"""Button, box and ledge: the same task under two sets of requirements.

In the first setting a rolling loop can do everything, so the robot never
changes shape. In the second the button is higher, the box heavier and a
ledge replaces the ramp, so three different configurations are needed.

    python3 demos/demo_scenarios.py
"""
from reconfplan.library import load_seed_library
from reconfplan.pipeline import data_file, run_pipeline


def show(name, lib):
    print(f"=== {name} ===")
    r = run_pipeline(data_file(f"specs/{name}.spec"), lib, data_file(f"scenarios/{name}.yaml"))
    for var, ids in sorted(r.automaton.bindings.items()):
        print(f"  {var:11s} may use {', '.join(ids)}")
    for line in r.compiled.constraints.explain():
        print(f"  constraint: {line}")
    print(f"  automaton: {len(r.automaton.states)} states")
    for step, var, entry in r.trace.activations():
        print(f"  step {step:3d}: {var} via {entry} ({lib.entry(entry).configuration.id})")
    hops = r.trace.reconfigurations()
    print(f"  {r.trace.outcome}; {len(hops)} reconfigurations",
          *(f"{h['from']} -> {h['to']}" for h in hops))
    print()


if __name__ == "__main__":
    library = load_seed_library()
    show("scenario1", library)
    show("scenario2", library)
