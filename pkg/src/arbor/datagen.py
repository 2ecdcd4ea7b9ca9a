"""Seeded generators for synthetic trees and forests.

Shapes:

* ``wide``   -- filled level by level; every internal node draws its fanout
  uniformly from [fanout_min, fanout_max].
* ``deep``   -- a spine: each spine node draws a fanout, its last child
  continues the spine and the others stay leaves.
* ``forest`` -- ``n_trees`` wide trees with random sizes summing to n_nodes.
* ``random`` -- random attachment: each new node picks a uniformly random
  parent among nodes with fewer than fanout_max children (needs
  fanout_min == 1).

Fanouts of internal nodes stay within [fanout_min, fanout_max]; only when the
node count makes that impossible does one node fall short. Edges point
child -> parent.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .errors import InfeasibleConfig
from .graph import KEY_PROPERTY, PropertyGraph
from .treespec import CHILD_TO_PARENT, TreeSpec

SHAPES = ("wide", "deep", "forest", "random")
NODE_LABEL = "Node"
EDGE_LABEL = "CHILD_OF"


@dataclass(frozen=True)
class GenConfig:
    shape: str
    n_nodes: int
    fanout_min: int
    fanout_max: int
    n_trees: int = 1
    seed: int = 0

    def validate(self) -> None:
        if self.shape not in SHAPES:
            raise InfeasibleConfig(f"shape must be one of {SHAPES}, got {self.shape!r}")
        if self.n_nodes < 1:
            raise InfeasibleConfig("n_nodes must be at least 1")
        if not 1 <= self.fanout_min <= self.fanout_max:
            raise InfeasibleConfig(
                f"need 1 <= fanout_min <= fanout_max, got {self.fanout_min}/{self.fanout_max}"
            )
        if not 1 <= self.n_trees <= self.n_nodes:
            raise InfeasibleConfig(f"need 1 <= n_trees <= n_nodes, got {self.n_trees}/{self.n_nodes}")
        if self.shape != "forest" and self.n_trees != 1:
            raise InfeasibleConfig(f"shape {self.shape!r} builds a single tree; use shape 'forest'")
        if self.shape == "random" and self.fanout_min != 1:
            raise InfeasibleConfig("random attachment cannot guarantee fanout_min > 1")


def presets() -> dict[str, GenConfig]:
    """The five synthetic graphs: three wide trees, a deep tree, a tiny forest."""
    return {
        "WT1": GenConfig("wide", 100, 4, 6, seed=1),
        "WT2": GenConfig("wide", 1_000, 7, 9, seed=2),
        "WT3": GenConfig("wide", 10_000, 9, 11, seed=3),
        "DT": GenConfig("deep", 10_000, 1, 3, seed=4),
        "TF": GenConfig("forest", 40, 1, 2, n_trees=11, seed=5),
    }


def tree_spec(name: str = "synthetic") -> TreeSpec:
    return TreeSpec(
        edge_labels=frozenset({EDGE_LABEL}),
        node_labels=frozenset({NODE_LABEL}),
        orientation=CHILD_TO_PARENT,
        name=name,
    )


class _Builder:
    def __init__(self) -> None:
        self.g = PropertyGraph()

    def node(self) -> int:
        nid = self.g.node_count()
        return self.g.add_node([NODE_LABEL], {KEY_PROPERTY: nid})

    def child(self, parent: int) -> int:
        c = self.node()
        self.g.add_edge(c, parent, EDGE_LABEL)
        return c


def _fanouts(rng: random.Random, children: int, lo: int, hi: int) -> list[int]:
    """Per-parent child counts summing to ``children``, each drawn from [lo, hi].

    A short remainder is spread over earlier parents that still have room,
    or topped up from parents above ``lo``, so every count stays in range
    whenever that is arithmetically possible.
    """
    out, left = [], children
    while left > 0:
        f = min(rng.randint(lo, hi), left)
        out.append(f)
        left -= f
    if out and out[-1] < lo and len(out) > 1:
        short = out.pop()
        room = [i for i in range(len(out)) if out[i] < hi]
        if sum(hi - out[i] for i in room) >= short:
            while short:
                i = rng.choice(room)
                out[i] += 1
                short -= 1
                if out[i] == hi:
                    room.remove(i)
        else:
            out.append(short)
            need = lo - short
            spare = [i for i in range(len(out) - 1) if out[i] > lo]
            if sum(out[i] - lo for i in spare) >= need:
                while need:
                    i = rng.choice(spare)
                    out[i] -= 1
                    out[-1] += 1
                    need -= 1
                    if out[i] == lo:
                        spare.remove(i)
    return out


def _wide(b: _Builder, rng: random.Random, n: int, lo: int, hi: int) -> None:
    queue = [b.node()]
    for head, f in enumerate(_fanouts(rng, n - 1, lo, hi)):
        parent = queue[head]
        queue.extend(b.child(parent) for _ in range(f))


def _deep(b: _Builder, rng: random.Random, n: int, lo: int, hi: int) -> None:
    spine = b.node()
    for f in _fanouts(rng, n - 1, lo, hi):
        spine = [b.child(spine) for _ in range(f)][-1]


def _random(b: _Builder, rng: random.Random, n: int, hi: int) -> None:
    open_nodes = [b.node()]
    fanout = {open_nodes[0]: 0}
    for _ in range(n - 1):
        i = rng.randrange(len(open_nodes))
        p = open_nodes[i]
        c = b.child(p)
        fanout[p] += 1
        fanout[c] = 0
        if fanout[p] >= hi:
            open_nodes[i] = open_nodes[-1]
            open_nodes.pop()
        open_nodes.append(c)


def generate(config: GenConfig, name: str = "synthetic") -> tuple[PropertyGraph, TreeSpec]:
    """Build the graph for ``config``; deterministic for a fixed seed."""
    config.validate()
    rng = random.Random(config.seed)
    b = _Builder()
    n, lo, hi = config.n_nodes, config.fanout_min, config.fanout_max
    if config.shape == "wide":
        _wide(b, rng, n, lo, hi)
    elif config.shape == "deep":
        _deep(b, rng, n, lo, hi)
    elif config.shape == "random":
        _random(b, rng, n, hi)
    else:
        cuts = sorted(rng.sample(range(1, n), config.n_trees - 1))
        sizes = [e - s for s, e in zip([0] + cuts, cuts + [n])]
        for size in sizes:
            _wide(b, rng, size, lo, hi)
    return b.g, tree_spec(name)


def generate_preset(name: str) -> tuple[PropertyGraph, TreeSpec]:
    try:
        config = presets()[name]
    except KeyError:
        raise InfeasibleConfig(f"unknown preset {name!r}; choose from {sorted(presets())}") from None
    return generate(config, name)


def random_tree(n_nodes: int, seed: int, fanout_max: int = 6) -> tuple[PropertyGraph, TreeSpec]:
    """Random-attachment tree for property tests."""
    return generate(GenConfig("random", n_nodes, 1, fanout_max, seed=seed), f"random{seed}")
