"""Static bending-load check for a posed configuration.

Loads use the equivalent-cantilever convention: a straight horizontal chain of
n unit-mass modules hanging off one connector loads it with n**2 / 2
(module-mass x module-length).  A connector rated for "k modules in
cantilever" therefore has capacity k**2 / 2.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
import yaml

from .core import Configuration

CANTILEVER_MODULES = {"magnetic": 3.1, "plated": 4.0}
CAPACITY = {kind: n * n / 2.0 for kind, n in CANTILEVER_MODULES.items()}
MODULE_MASS = 1.0
EPS = 1e-9


class FeasibilityError(ValueError):
    pass


@dataclass(frozen=True)
class TreeEdge:
    parent: str
    child: str
    kind: str


@dataclass
class PoseTree:
    config: Configuration
    positions: dict          # node id -> (x, y, z), z up, module lengths
    grounded: frozenset
    edges: tuple             # TreeEdge, parent closer to ground
    masses: dict

    def subtree(self, node: str) -> list[str]:
        kids = {}
        for e in self.edges:
            kids.setdefault(e.parent, []).append(e.child)
        out, stack = [], [node]
        while stack:
            n = stack.pop()
            out.append(n)
            stack.extend(kids.get(n, ()))
        return out


def build_pose_tree(config: Configuration, positions: dict, grounded) -> PoseTree:
    """Spanning tree grown breadth-first from the grounded nodes."""
    nodes = config.nodes()
    grounded = frozenset(grounded)
    if not grounded:
        raise FeasibilityError("at least one node must be grounded")
    for n in grounded:
        if n not in nodes:
            raise FeasibilityError(f"grounded node {n} is not part of {config.id}")
    missing = sorted(set(nodes) - set(positions))
    if missing:
        raise FeasibilityError(f"no position given for {', '.join(missing)}")
    adj = {n: [] for n in nodes}
    for c in config.edges:
        adj[c.a].append((c.b, c.kind))
        adj[c.b].append((c.a, c.kind))
    seen = set(grounded)
    queue = deque(sorted(grounded))
    edges = []
    while queue:
        n = queue.popleft()
        for m, kind in sorted(adj[n]):
            if m not in seen:
                seen.add(m)
                edges.append(TreeEdge(n, m, kind))
                queue.append(m)
    if seen != set(nodes):
        raise FeasibilityError(f"nodes not connected to ground: {sorted(set(nodes) - seen)}")
    masses = {m.id: MODULE_MASS for m in config.modules}
    masses.update({c.id: c.mass for c in config.cubes})
    pos = {k: np.asarray(v, float) for k, v in positions.items() if k in nodes}
    return PoseTree(config, pos, grounded, tuple(edges), masses)


@dataclass(frozen=True)
class EdgeLoad:
    edge: TreeEdge
    moment: float
    capacity: float

    @property
    def overloaded(self) -> bool:
        return self.moment > self.capacity + EPS


def edge_loads(pose: PoseTree) -> list[EdgeLoad]:
    out = []
    for e in pose.edges:
        pivot = (pose.positions[e.parent] + pose.positions[e.child]) / 2.0
        moment = 0.0
        for n in pose.subtree(e.child):
            lever = pose.positions[n][:2] - pivot[:2]
            moment += pose.masses[n] * float(np.hypot(*lever))
        if e.kind not in CAPACITY:
            raise FeasibilityError(f"unknown connector kind {e.kind}")
        out.append(EdgeLoad(e, moment, CAPACITY[e.kind]))
    return out


def check_loads(pose: PoseTree) -> list[EdgeLoad]:
    """Edges whose bending moment exceeds the connector capacity."""
    return [ld for ld in edge_loads(pose) if ld.overloaded]


def load_pose(source, config: Configuration) -> PoseTree:
    """Pose file: ``grounded: [ids]`` and ``positions: {id: [x, y, z]}``."""
    doc = yaml.safe_load(source)
    if not isinstance(doc, dict) or "positions" not in doc:
        raise FeasibilityError("pose file needs 'positions' and 'grounded'")
    return build_pose_tree(config, doc["positions"], doc.get("grounded") or ())
