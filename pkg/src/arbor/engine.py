"""Tree queries under baseline and structural-index plans.

Plan families:

``baseline_traversal``
    BFS over the graph's adjacency lists (native graph store style).
``baseline_join``
    Iterated frontier expansion where every hop scans the whole tree edge
    table and joins it with the frontier, with no adjacency access
    (relational structural-join style).
``index_prepost`` / ``index_dewey``
    Range scans over the structural index.

All plans return identical results; only their cost differs.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

from .detect import Forest, Violation, tree_edges, verify_forest
from .errors import NoIndex, NotAForest, NotInScope, QueryTimeout
from .graph import NodeId, PropertyGraph
from .index import MaintenanceReport, StructuralIndex, build_index
from .treespec import CHILD_TO_PARENT, TreeSpec

PLANS = ("baseline_traversal", "baseline_join", "index_prepost", "index_dewey")
BASELINES = ("baseline_traversal", "baseline_join")
QUERIES = ("desc", "leaf", "ad", "children")


@dataclass
class QueryResult:
    plan: str
    nodes: list[NodeId] | None = None
    value: bool | None = None
    elapsed: float = 0.0  # seconds, excluding start-node resolution
    hops: int = 0  # levels expanded (traversal) or edge-table passes (join)
    columns: tuple[str, ...] = ()
    rows: list[tuple] | None = None

    def node_set(self) -> set:
        return set(self.nodes or ())

    @property
    def count(self) -> int:
        if self.value is not None:
            return int(self.value)
        return len(self.nodes or ())


@dataclass
class Registration:
    spec: TreeSpec
    forest: Forest
    index: StructuralIndex | None
    edge_table: list[tuple[NodeId, NodeId]] = field(default_factory=list)  # (parent, child)
    scope: set[NodeId] = field(default_factory=set)
    covers_labels: bool = True  # every graph edge with a spec label is a tree edge


def _codec(plan: str) -> str:
    return "prepost" if plan == "index_prepost" else "dewey"


def _check_deadline(deadline: float | None) -> None:
    if deadline is not None and time.perf_counter() > deadline:
        raise QueryTimeout("query exceeded its deadline")


class TreeEngine:
    """Graph plus registered tree specs, each with a forest overlay and index."""

    def __init__(self, graph: PropertyGraph):
        self.graph = graph
        self.registry: dict[str, Registration] = {}

    def register(self, spec: TreeSpec, with_index: bool = True) -> Registration:
        result = verify_forest(self.graph, spec)
        if isinstance(result, Violation):
            raise NotAForest(result)
        edges = tree_edges(self.graph, spec, result.nodes())
        labelled = sum(1 for e in self.graph.edges() if e.label in spec.edge_labels)
        reg = Registration(
            spec,
            result,
            build_index(result) if with_index else None,
            [(p, c) for _, p, c in edges],
            set(result.nodes()),
            labelled == len(edges),
        )
        self.registry[spec.name] = reg
        return reg

    def get(self, spec: TreeSpec | str) -> Registration:
        name = spec if isinstance(spec, str) else spec.name
        try:
            return self.registry[name]
        except KeyError:
            raise NoIndex(f"no tree spec {name!r} registered") from None

    # -- plumbing -----------------------------------------------------------

    def _children_fn(self, reg: Registration) -> Callable[[NodeId], list[NodeId]]:
        g, scope = self.graph, reg.scope
        direction = "in" if reg.spec.orientation == CHILD_TO_PARENT else "out"
        labels = sorted(reg.spec.edge_labels)

        def kids(n: NodeId) -> list[NodeId]:
            out = []
            for label in labels:
                out.extend(c for c in g.neighbors(n, label, direction) if c in scope)
            return out

        return kids

    def _parent_fn(self, reg: Registration) -> Callable[[NodeId], NodeId | None]:
        g, scope = self.graph, reg.scope
        direction = "out" if reg.spec.orientation == CHILD_TO_PARENT else "in"
        labels = sorted(reg.spec.edge_labels)

        def parent(n: NodeId) -> NodeId | None:
            for label in labels:
                for p in g.neighbors(n, label, direction):
                    if p in scope:
                        return p
            return None

        return parent

    def _prepare(self, spec, plan: str, *nodes: NodeId) -> Registration:
        if plan not in PLANS:
            raise ValueError(f"plan must be one of {PLANS}, got {plan!r}")
        reg = self.get(spec)
        for n in nodes:
            if n not in reg.scope:
                raise NotInScope(f"node {n} is not in tree spec {reg.spec.name!r}")
        if plan not in BASELINES and reg.index is None:
            raise NoIndex(f"tree spec {reg.spec.name!r} has no structural index")
        return reg

    # -- queries ------------------------------------------------------------

    def q_desc(self, start: NodeId, spec, plan: str, deadline: float | None = None) -> QueryResult:
        """All strict descendants of ``start``."""
        reg = self._prepare(spec, plan, start)
        t0 = time.perf_counter_ns()
        hops = 0
        if plan == "baseline_traversal":
            kids = self._children_fn(reg)
            nodes, frontier, seen = [], [start], {start}
            while frontier:
                _check_deadline(deadline)
                nxt = []
                for n in frontier:
                    for c in kids(n):
                        if c not in seen:
                            seen.add(c)
                            nxt.append(c)
                nodes.extend(nxt)
                frontier = nxt
                hops += 1
        elif plan == "baseline_join":
            table = reg.edge_table
            nodes, frontier, seen = [], {start}, {start}
            while frontier:
                _check_deadline(deadline)
                hops += 1
                nxt = [c for p, c in table if p in frontier and c not in seen]
                seen.update(nxt)
                nodes.extend(nxt)
                frontier = set(nxt)
        else:
            nodes = reg.index.descendants(start, _codec(plan))
        return QueryResult(plan, nodes=nodes, elapsed=(time.perf_counter_ns() - t0) / 1e9, hops=hops)

    def q_leaf(self, start: NodeId, spec, plan: str, deadline: float | None = None) -> QueryResult:
        """Strict descendants of ``start`` that have no children."""
        reg = self._prepare(spec, plan, start)
        t0 = time.perf_counter_ns()
        hops = 0
        if plan == "baseline_traversal":
            kids = self._children_fn(reg)
            leaves, frontier, seen = [], [start], {start}
            while frontier:
                _check_deadline(deadline)
                nxt = []
                for n in frontier:
                    cs = [c for c in kids(n) if c not in seen]
                    if not cs and n != start:
                        leaves.append(n)
                    seen.update(cs)
                    nxt.extend(cs)
                frontier = nxt
                hops += 1
        elif plan == "baseline_join":
            table = reg.edge_table
            leaves, frontier, seen = [], {start}, {start}
            while frontier:
                _check_deadline(deadline)
                hops += 1
                hits = [(p, c) for p, c in table if p in frontier and c not in seen]
                has_child = {p for p, _ in hits}
                leaves.extend(n for n in frontier if n not in has_child and n != start)
                nxt = [c for _, c in hits]
                seen.update(nxt)
                frontier = set(nxt)
        else:
            leaves = reg.index.leaves_under(start, _codec(plan))
        return QueryResult(plan, nodes=leaves, elapsed=(time.perf_counter_ns() - t0) / 1e9, hops=hops)

    def q_anc_desc(self, a: NodeId, b: NodeId, spec, plan: str, deadline: float | None = None) -> QueryResult:
        """Whether one of ``a``/``b`` is a strict ancestor of the other."""
        reg = self._prepare(spec, plan, a, b)
        t0 = time.perf_counter_ns()
        hops = 0
        if a == b:
            value = False
        elif plan == "baseline_traversal":
            parent = self._parent_fn(reg)
            value = False
            for lo, hi in ((a, b), (b, a)):
                x = parent(lo)
                while x is not None:
                    hops += 1
                    if x == hi:
                        value = True
                        break
                    if hops % 1024 == 0:
                        _check_deadline(deadline)
                    x = parent(x)
                if value:
                    break
        elif plan == "baseline_join":
            # climb both chains in lock step, one edge-table scan per level
            table = reg.edge_table
            up_a, up_b, value = a, b, False
            while up_a is not None or up_b is not None:
                _check_deadline(deadline)
                hops += 1
                frontier = {x for x in (up_a, up_b) if x is not None}
                parent_of = {c: p for p, c in table if c in frontier}
                up_a = parent_of.get(up_a) if up_a is not None else None
                up_b = parent_of.get(up_b) if up_b is not None else None
                if up_a == b or up_b == a:
                    value = True
                    break
        else:
            codec = _codec(plan)
            value = reg.index.is_ancestor(a, b, codec) or reg.index.is_ancestor(b, a, codec)
        return QueryResult(plan, value=value, elapsed=(time.perf_counter_ns() - t0) / 1e9, hops=hops)

    def q_children(self, start: NodeId, spec, plan: str, deadline: float | None = None) -> QueryResult:
        reg = self._prepare(spec, plan, start)
        t0 = time.perf_counter_ns()
        hops = 1
        if plan == "baseline_traversal":
            nodes = self._children_fn(reg)(start)
        elif plan == "baseline_join":
            _check_deadline(deadline)
            nodes = [c for p, c in reg.edge_table if p == start]
        else:
            hops = 0
            nodes = reg.index.children(start, _codec(plan))
        return QueryResult(plan, nodes=nodes, elapsed=(time.perf_counter_ns() - t0) / 1e9, hops=hops)

    def run(self, query: str, spec, plan: str, start: NodeId, other: NodeId | None = None,
            deadline: float | None = None) -> QueryResult:
        if query == "desc":
            return self.q_desc(start, spec, plan, deadline)
        if query == "leaf":
            return self.q_leaf(start, spec, plan, deadline)
        if query == "children":
            return self.q_children(start, spec, plan, deadline)
        if query == "ad":
            if other is None:
                raise ValueError("the ad query needs two nodes")
            return self.q_anc_desc(start, other, spec, plan, deadline)
        raise ValueError(f"query must be one of {QUERIES}, got {query!r}")

    # -- maintenance keeping graph, edge table and index in step -------------

    def insert_node(self, spec, parent: NodeId, node: NodeId, before: NodeId | None = None) -> MaintenanceReport:
        """Attach ``node`` under ``parent`` and add the matching tree edge to the graph."""
        reg = self.get(spec)
        if reg.index is None:
            raise NoIndex(f"tree spec {reg.spec.name!r} has no structural index")
        report = reg.index.insert_node(parent, node, before)
        if reg.spec.orientation == CHILD_TO_PARENT:
            self.graph.add_edge(node, parent, reg.spec.primary_label)
        else:
            self.graph.add_edge(parent, node, reg.spec.primary_label)
        reg.edge_table.append((parent, node))
        reg.scope.update(reg.forest.subtree(node))
        return report

    def delete_subtree(self, spec, a: NodeId, mode: str = "remove") -> MaintenanceReport:
        """Delete (``remove``) or detach the subtree at ``a`` in index, table and graph."""
        reg = self.get(spec)
        if reg.index is None:
            raise NoIndex(f"tree spec {reg.spec.name!r} has no structural index")
        parent = reg.forest.parent.get(a)
        sub = reg.forest.subtree(a)
        report = reg.index.delete_subtree(a, mode)
        if mode == "remove":
            gone = set(sub)
            for n in sub:
                self.graph.remove_node(n)
            reg.scope.difference_update(gone)
            reg.edge_table = [(p, c) for p, c in reg.edge_table if c not in gone]
        elif parent is not None:
            src, dst = (a, parent) if reg.spec.orientation == CHILD_TO_PARENT else (parent, a)
            for eid in self.graph.out_edges(src):
                e = self.graph.edge(eid)
                if e.dst == dst and e.label in reg.spec.edge_labels:
                    self.graph.remove_edge(eid)
            reg.edge_table = [(p, c) for p, c in reg.edge_table if not (p == parent and c == a)]
        return report
