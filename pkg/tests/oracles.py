"""Independent reference implementations used as test oracles.

None of these touch arbor's forest overlay or index; they work on raw edge
lists so a bug in the package cannot be mirrored here.
"""

from __future__ import annotations

import sys
from collections import deque

CHILD_TO_PARENT = "child_to_parent"

# encode_recursive walks deep trees (DT has a ~5000-node spine)
sys.setrecursionlimit(max(sys.getrecursionlimit(), 50_000))


def parent_map(g, edge_label, orientation=CHILD_TO_PARENT):
    """child -> parent from the raw edges carrying ``edge_label``."""
    parents = {}
    for e in g.edges():
        if e.label != edge_label:
            continue
        child, parent = (e.src, e.dst) if orientation == CHILD_TO_PARENT else (e.dst, e.src)
        assert child not in parents, f"{child} has two parents"
        parents[child] = parent
    return parents


def children_map(parents):
    kids = {}
    for c, p in parents.items():
        kids.setdefault(p, []).append(c)
    return kids


def descendants_bfs(parents, start):
    kids = children_map(parents)
    out, queue = set(), deque([start])
    while queue:
        for c in kids.get(queue.popleft(), ()):
            out.add(c)
            queue.append(c)
    return out


def leaves_bfs(parents, start):
    kids = children_map(parents)
    return {n for n in descendants_bfs(parents, start) if not kids.get(n)}


def is_ancestor_chain(parents, a, b):
    """Walk b's parent chain looking for a."""
    x = parents.get(b)
    while x is not None:
        if x == a:
            return True
        x = parents.get(x)
    return False


def depth_of(parents, n):
    d = 0
    while n in parents:
        n = parents[n]
        d += 1
    return d


def distance_bfs(g, start, edge_label, direction):
    """Hop distance from ``start`` following ``edge_label`` edges out or in."""
    dist, queue = {start: 0}, deque([start])
    while queue:
        n = queue.popleft()
        for w in _incident(g, n, edge_label, direction):
            if w not in dist:
                dist[w] = dist[n] + 1
                queue.append(w)
    return dist


def _incident(g, n, edge_label, direction):
    if direction == "out":
        return [g.edge(eid).dst for eid in g.out_edges(n, edge_label)]
    return [g.edge(eid).src for eid in g.in_edges(n, edge_label)]


def k_hop_bfs(g, start, edge_label, direction, lo, hi):
    """Nodes at directed distance in [lo, hi] (hi None = unbounded).

    In a forest a directed path between two nodes is unique, so BFS distance
    equals every path length.
    """
    return {n for n, d in distance_bfs(g, start, edge_label, direction).items() if d >= lo and (hi is None or d <= hi)}


def is_forest_union_find(nodes, pairs):
    """Undirected acyclicity plus at-most-one parent, via union-find.

    ``pairs`` are (parent, child) tuples.
    """
    root = {n: n for n in nodes}

    def find(x):
        while root[x] != x:
            root[x] = root[root[x]]
            x = root[x]
        return x

    seen_child = set()
    for p, c in pairs:
        if c in seen_child:
            return False
        seen_child.add(c)
        rp, rc = find(p), find(c)
        if rp == rc:
            return False
        root[rp] = rc
    return True


def encode_recursive(roots, children):
    """PrePost/level/Dewey by plain recursion: {node: (root, pre, post, lvl, dewey)}."""
    out = {}

    def visit(n, root, counter, lvl, dewey):
        pre = counter
        counter += 1
        for rank, c in enumerate(children.get(n, ()), 1):
            counter = visit(c, root, counter, lvl + 1, dewey + (rank,))
        out[n] = (root, pre, counter, lvl, dewey)
        return counter + 1

    for r in roots:
        visit(r, r, 1, 0, (1,))
    return out
