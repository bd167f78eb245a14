"""Two-phase tabletop mission.

The first phase watches for a waste bin and picks it up. The second phase has
a snake climb onto a table, split into a driving module to clean up a mug and
some trash, then reassemble and climb back down.

    python3 demos/demo_tabletop.py
"""
from reconfplan.library import load_seed_library
from reconfplan.pipeline import data_file, run_pipeline


def narrate(name, lib):
    r = run_pipeline(data_file(f"specs/{name}.spec"), lib, data_file(f"scenarios/{name}.yaml"))
    print(f"=== {name}: {len(r.automaton.states)} automaton states, "
          f"{len(r.compiled.constraints.mutex_pairs)} mutex pairs ===")
    region = None
    for row in r.trace.rows:
        here = row.get("region")
        if here != region:
            print(f"  step {row['step']:3d}  now in {here}")
            region = here
        for ev in row["events"]:
            if ev["type"] == "start":
                print(f"  step {row['step']:3d}  start {ev['var']} ({ev['entry']})")
            elif ev["type"] == "reconfigure":
                print(f"  step {row['step']:3d}  reconfigure {ev['from']} -> {ev['to']}")
            elif ev["type"] == "effect":
                print(f"  step {row['step']:3d}  effect of {ev['var']}")
    print(f"  outcome: {r.trace.outcome} after {len(r.trace.rows)} steps\n")


if __name__ == "__main__":
    library = load_seed_library()
    narrate("tabletop_wastebin", library)
    narrate("tabletop_clean", library)
