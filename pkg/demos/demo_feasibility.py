"""Connector loads on a chain hanging off a wall.

Each module weighs one unit; the joint next to the wall carries the moment of
everything beyond it. Magnetic faces give out at the fourth module, plated
ones hold. Pointing the chain straight up removes the lever entirely.

    python3 demos/demo_feasibility.py
"""
from reconfplan.core import Configuration, Connection, ModuleSpec
from reconfplan.feasibility import CAPACITY, build_pose_tree, edge_loads, load_pose
from reconfplan.library import load_seed_library
from reconfplan.pipeline import data_file


def chain(n, kind, upright=False):
    ids = ["wall"] + [f"m{k}" for k in range(n)]
    cfg = Configuration(f"chain{n}", tuple(ModuleSpec(i) for i in ids),
                        tuple(Connection(a, "top", b, "bottom", kind) for a, b in zip(ids, ids[1:])))
    pos = {i: ((0, 0, k) if upright else (k, 0, 1)) for k, i in enumerate(ids)}
    return build_pose_tree(cfg, pos, ["wall"])


def report(title, tree):
    loads = edge_loads(tree)
    worst = max(loads, key=lambda ld: ld.moment)
    verdict = "overloaded" if any(ld.overloaded for ld in loads) else "holds"
    print(f"{title:28s} worst joint {worst.edge.parent}-{worst.edge.child}: "
          f"{worst.moment:.3f} of {worst.capacity:.3f}  -> {verdict}")


if __name__ == "__main__":
    print("capacities:", ", ".join(f"{k} {v:.3f}" for k, v in CAPACITY.items()))
    for n in (2, 3, 4, 5):
        report(f"{n} magnetic, horizontal", chain(n, "magnetic"))
    report("4 plated, horizontal", chain(4, "plated"))
    report("12 magnetic, vertical", chain(12, "magnetic", upright=True))

    snake = load_seed_library().configurations["snake"]
    for pose in ("snake_horizontal", "snake_ledge", "snake_vertical"):
        with open(data_file(f"poses/{pose}.yaml")) as fh:
            report(pose, load_pose(fh, snake))
