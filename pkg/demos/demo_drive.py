"""A single module drives to a point ten units away, around an obstacle.

The potential-field controller recomputes wheel speeds every 0.25 s step;
the printout samples the pose and the wheel commands along the way.

    python3 demos/demo_drive.py
"""
import math

from reconfplan.executor import execute, load_scenario
from reconfplan.library import load_seed_library
from reconfplan.logic import Not, Var
from reconfplan.speclang import GR1Spec
from reconfplan.synth import synthesize

GOAL = (6.0, 8.0)

if __name__ == "__main__":
    spec = GR1Spec(env_vars=(), sys_vars=("drive",), sys_init=(Not(Var("drive")),),
                   sys_safety=(Var("drive", True),), actions=("drive",))
    _, aut, _ = synthesize(spec)
    aut.bindings = {"drive": ["module1-differentialDrive"]}
    sc = load_scenario({"initial_config": "module1", "max_steps": 80, "pose": [0, 0, 0.4],
                        "obstacles": [[3.0, 4.2, 0.4]], "eap_goals": {"drive": [list(GOAL)]}})
    trace = execute(aut, load_seed_library(), sc)
    for row in trace.rows[::8]:
        x, y, th = row["pose"]
        wheels = row["params"].get("drive", {})
        print(f"t={row['time']:6.2f}  x={x:6.3f} y={y:6.3f} heading={th:+.3f}  {wheels}")
    hit = next((s for s, _ in trace.events("goal-reached")), None)
    if hit is None:
        print("goal not reached")
    else:
        x, y, _ = trace.rows[hit]["pose"]
        print(f"goal reached at step {hit}, miss distance {math.hypot(x - GOAL[0], y - GOAL[1]):.4f}")
