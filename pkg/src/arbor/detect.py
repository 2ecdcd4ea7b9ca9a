"""Finding tree-shaped substructures in a property graph.

Three steps: infer a cardinality-annotated schema from the instance, read
tree candidates off that schema, and verify a candidate against the instance
to obtain a :class:`Forest` overlay (or a :class:`Violation`).
"""

from __future__ import annotations

import statistics
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Union

import networkx as nx

from .errors import SiblingOrderError
from .graph import NodeId, PropertyGraph, same_tag
from .treespec import CHILD_TO_PARENT, ORIENTATIONS, PARENT_TO_CHILD, TreeSpec

NodeType = frozenset  # the set of labels shared by all nodes of the type


def type_name(t: NodeType) -> str:
    return ":".join(sorted(t)) if t else "(unlabeled)"


# -- schema -----------------------------------------------------------------


@dataclass(frozen=True)
class EdgeType:
    label: str
    src_type: NodeType
    dst_type: NodeType
    out_card: tuple[int, int]  # edges of this type per src-type node
    in_card: tuple[int, int]  # edges of this type per dst-type node

    @property
    def self_typed(self) -> bool:
        return self.src_type == self.dst_type

    def __str__(self) -> str:
        return (
            f"({type_name(self.src_type)})-[:{self.label}]->({type_name(self.dst_type)})"
            f" out={_card(self.out_card)} in={_card(self.in_card)}"
        )


def _card(c: tuple[int, int]) -> str:
    lo, hi = c
    return f"[{lo}..{'*' if hi > 1 else hi}]"


@dataclass
class SchemaGraph:
    node_types: dict[NodeType, int] = field(default_factory=dict)
    edge_types: list[EdgeType] = field(default_factory=list)

    def type_of(self, labels: frozenset[str]) -> NodeType:
        return frozenset(labels)

    def to_table(self) -> str:
        rows = [("node type", "count", "", "")]
        for t, n in sorted(self.node_types.items(), key=lambda kv: type_name(kv[0])):
            rows.append((type_name(t), str(n), "", ""))
        rows.append(("", "", "", ""))
        rows.append(("edge type", "count-src", "out", "in"))
        for et in self.edge_types:
            rows.append(
                (
                    f"({type_name(et.src_type)})-[:{et.label}]->({type_name(et.dst_type)})",
                    "",
                    f"{et.out_card[0]}..{et.out_card[1]}",
                    f"{et.in_card[0]}..{et.in_card[1]}",
                )
            )
        widths = [max(len(r[i]) for r in rows) for i in range(4)]
        return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows) + "\n"


def infer_schema(g: PropertyGraph) -> SchemaGraph:
    """Partition nodes by label set and edges by (label, src type, dst type).

    Cardinalities are the observed min/max per-node edge counts, taken over
    every node of the respective type (nodes without such edges count as 0).
    """
    members: dict[NodeType, list[NodeId]] = defaultdict(list)
    for node in g.nodes():
        members[frozenset(node.labels)].append(node.id)

    out_counts: dict[tuple, dict[NodeId, int]] = defaultdict(lambda: defaultdict(int))
    in_counts: dict[tuple, dict[NodeId, int]] = defaultdict(lambda: defaultdict(int))
    order: list[tuple] = []
    for edge in g.edges():
        key = (edge.label, g.node(edge.src).labels, g.node(edge.dst).labels)
        if key not in out_counts:
            order.append(key)
        out_counts[key][edge.src] += 1
        in_counts[key][edge.dst] += 1

    def card(counts: dict[NodeId, int], population: list[NodeId]) -> tuple[int, int]:
        values = [counts.get(n, 0) for n in population]
        return min(values), max(values)

    schema = SchemaGraph({t: len(ns) for t, ns in members.items()})
    for key in order:
        label, st, dt = key
        schema.edge_types.append(
            EdgeType(label, st, dt, card(out_counts[key], members[st]), card(in_counts[key], members[dt]))
        )
    return schema


# -- candidates -------------------------------------------------------------


@dataclass(frozen=True)
class TreeCandidate:
    spec: TreeSpec
    schema_sufficient: bool
    needs_instance_check: bool
    edge_types: tuple[EdgeType, ...] = ()


@dataclass(frozen=True)
class SequenceHint:
    label: str
    node_type: NodeType


def _child_side(et: EdgeType, orientation: str) -> tuple[NodeType, tuple[int, int], NodeType]:
    if orientation == CHILD_TO_PARENT:
        return et.src_type, et.out_card, et.dst_type
    return et.dst_type, et.in_card, et.src_type


def _by_label(schema: SchemaGraph) -> dict[str, list[EdgeType]]:
    grouped: dict[str, list[EdgeType]] = defaultdict(list)
    for et in schema.edge_types:
        grouped[et.label].append(et)
    return grouped


def _is_sequence(ets: list[EdgeType]) -> bool:
    return all(et.self_typed and et.out_card[1] <= 1 and et.in_card[1] <= 1 for et in ets)


def sequence_hints(schema: SchemaGraph) -> list[SequenceHint]:
    """Self-typed labels with at most one edge per node on either side: chains, not trees."""
    hints = []
    for label, ets in sorted(_by_label(schema).items()):
        if _is_sequence(ets):
            hints.extend(SequenceHint(label, et.src_type) for et in ets)
    return hints


def find_tree_candidates(schema: SchemaGraph) -> list[TreeCandidate]:
    """Propose tree specs from schema cardinalities.

    A label is eligible under an orientation when every one of its edge types
    gives each child at most one edge. Two labels conflict when they give
    parents to the same node type; candidates are the maximal conflict-free
    label sets. A candidate is ``schema_sufficient`` when the schema alone
    rules out cycles and second parents; otherwise the instance must be
    checked with :func:`verify_forest`.
    """
    grouped = _by_label(schema)
    out: list[TreeCandidate] = []
    for orientation in ORIENTATIONS:
        eligible = {}
        for label, ets in grouped.items():
            if _is_sequence(ets):
                continue
            if all(_child_side(et, orientation)[1][1] <= 1 for et in ets):
                eligible[label] = ets
        if not eligible:
            continue
        conflicts = nx.Graph()
        conflicts.add_nodes_from(eligible)
        labels = sorted(eligible)
        for i, a in enumerate(labels):
            ca = {_child_side(et, orientation)[0] for et in eligible[a]}
            for b in labels[i + 1 :]:
                if ca & {_child_side(et, orientation)[0] for et in eligible[b]}:
                    conflicts.add_edge(a, b)
        groups = [sorted(c) for c in nx.find_cliques(nx.complement(conflicts))]
        for group in sorted(groups):
            ets = [et for label in group for et in eligible[label]]
            out.append(_candidate(schema, group, ets, orientation))
    return out


def _candidate(schema: SchemaGraph, labels: list[str], ets: list[EdgeType], orientation: str) -> TreeCandidate:
    types: set[NodeType] = set()
    parent_edges: dict[NodeType, list[EdgeType]] = defaultdict(list)
    for et in ets:
        types.update((et.src_type, et.dst_type))
        parent_edges[_child_side(et, orientation)[0]].append(et)

    node_labels = None if any(not t for t in types) else frozenset().union(*types)

    needs_parent = {
        t for t, pes in parent_edges.items() if len(pes) == 1 and _child_side(pes[0], orientation)[1][0] >= 1
    }
    required = set()
    if node_labels is not None:
        for label in node_labels:
            holders = [t for t in schema.node_types if label in t]
            if holders and all(t in needs_parent for t in holders):
                required.add(label)

    type_graph = nx.MultiGraph()
    type_graph.add_nodes_from(types)
    for et in ets:
        type_graph.add_edge(et.src_type, et.dst_type)
    sufficient = (
        not any(et.self_typed for et in ets)
        and all(len(pes) == 1 for pes in parent_edges.values())
        and nx.is_forest(type_graph)
    )
    short = "up" if orientation == CHILD_TO_PARENT else "down"
    spec = TreeSpec(
        edge_labels=frozenset(labels),
        node_labels=node_labels,
        orientation=orientation,
        parent_required=frozenset(required),
        name=f"{'+'.join(labels)}:{short}",
    )
    return TreeCandidate(spec, sufficient, not sufficient, tuple(ets))


# -- verification -----------------------------------------------------------


class Violation:
    kind = "violation"


@dataclass(frozen=True)
class Cycle(Violation):
    """Closed walk ``witness[0] .. witness[-1] == witness[0]`` over tree edges."""

    witness: tuple[NodeId, ...]
    kind = "cycle"

    def __str__(self) -> str:
        return "cycle: " + " - ".join(map(str, self.witness))


@dataclass(frozen=True)
class MultiParent(Violation):
    node: NodeId
    parents: tuple[NodeId, ...]
    kind = "multi_parent"

    def __str__(self) -> str:
        return f"node {self.node} has {len(self.parents)} parents: {', '.join(map(str, self.parents))}"


@dataclass(frozen=True)
class MissingParent(Violation):
    node: NodeId
    kind = "missing_parent"

    def __str__(self) -> str:
        return f"node {self.node} requires a parent but has none"


@dataclass
class Forest:
    """Parent/children overlay of one tree spec over a graph.

    Trees are identified by their root node id (``tree_id[n]`` is the root
    of ``n``'s tree).
    """

    spec: TreeSpec
    parent: dict[NodeId, NodeId] = field(default_factory=dict)
    children: dict[NodeId, list[NodeId]] = field(default_factory=dict)
    roots: list[NodeId] = field(default_factory=list)
    tree_id: dict[NodeId, NodeId] = field(default_factory=dict)
    graph: PropertyGraph | None = field(default=None, repr=False, compare=False)

    def __contains__(self, n: object) -> bool:
        return n in self.tree_id

    def __len__(self) -> int:
        return len(self.tree_id)

    def nodes(self) -> list[NodeId]:
        return list(self.tree_id)

    def subtree(self, n: NodeId) -> list[NodeId]:
        """``n`` and its descendants in pre-order."""
        out, stack = [], [n]
        while stack:
            x = stack.pop()
            out.append(x)
            stack.extend(reversed(self.children.get(x, ())))
        return out

    def is_leaf(self, n: NodeId) -> bool:
        return not self.children.get(n)

    def copy(self) -> "Forest":
        return Forest(
            self.spec,
            dict(self.parent),
            {k: list(v) for k, v in self.children.items()},
            list(self.roots),
            dict(self.tree_id),
            self.graph,
        )


VerifyResult = Union[Forest, Violation]


def scope_nodes(g: PropertyGraph, spec: TreeSpec) -> list[NodeId]:
    if spec.node_labels is not None:
        return [n.id for n in g.nodes() if spec.in_scope(n.labels)]
    seen: dict[NodeId, None] = {}
    for e in g.edges():
        if e.label in spec.edge_labels:
            seen.setdefault(e.src)
            seen.setdefault(e.dst)
    return sorted(seen)


def tree_edges(g: PropertyGraph, spec: TreeSpec, scope: Iterable[NodeId] | None = None):
    """Spec-labeled edges with both endpoints in scope, as (edge id, parent, child)."""
    inside = set(scope_nodes(g, spec) if scope is None else scope)
    out = []
    for e in g.edges():
        if e.label in spec.edge_labels and e.src in inside and e.dst in inside:
            p, c = spec.parent_and_child(e.src, e.dst)
            out.append((e.id, p, c))
    return out


def _find_cycle(scope: list[NodeId], edges) -> tuple[NodeId, ...] | None:
    adj: dict[NodeId, list[tuple[int, NodeId]]] = {n: [] for n in scope}
    for eid, p, c in edges:
        adj[p].append((eid, c))
        if p != c:
            adj[c].append((eid, p))
    visited: set[NodeId] = set()
    for s in scope:
        if s in visited:
            continue
        visited.add(s)
        stack = [(s, None, iter(adj[s]))]
        pos = {s: 0}
        while stack:
            node, via, it = stack[-1]
            for eid, w in it:
                if eid == via:
                    continue
                if w in pos:
                    return tuple(f[0] for f in stack[pos[w] :]) + (w,)
                if w in visited:
                    continue
                visited.add(w)
                pos[w] = len(stack)
                stack.append((w, eid, iter(adj[w])))
                break
            else:
                stack.pop()
                del pos[node]
    return None


def _order_children(g: PropertyGraph, spec: TreeSpec, parent: NodeId, kids: list[NodeId]) -> list[NodeId]:
    if spec.sibling_order == "insertion" or len(kids) < 2:
        return kids
    if spec.sibling_order == "property":
        name = spec.order_key
        values = [g.node(k).properties.get(name) for k in kids]
        present = [v for v in values if v is not None]
        if present and not all(same_tag(present[0], v) for v in present):
            raise SiblingOrderError(f"children of {parent} have mixed types for property {name!r}")
        keyed = sorted(range(len(kids)), key=lambda i: (values[i] is None, values[i] if values[i] is not None else 0, i))
        return [kids[i] for i in keyed]
    label = spec.order_key
    sibs = set(kids)
    nxt: dict[NodeId, NodeId] = {}
    has_prev: set[NodeId] = set()
    for k in kids:
        succ = [w for w in g.neighbors(k, label, "out") if w in sibs]
        if len(succ) > 1:
            raise SiblingOrderError(f"sibling {k} under {parent} has {len(succ)} successors via {label}")
        if succ:
            nxt[k] = succ[0]
            has_prev.add(succ[0])
    heads = [k for k in kids if k not in has_prev]
    if len(heads) != 1:
        raise SiblingOrderError(f"children of {parent} form {len(heads)} {label} chains, expected 1")
    order = [heads[0]]
    while order[-1] in nxt and len(order) <= len(kids):
        order.append(nxt[order[-1]])
    if len(order) != len(kids) or len(set(order)) != len(kids):
        raise SiblingOrderError(f"{label} chain under {parent} does not cover all children")
    return order


def verify_forest(g: PropertyGraph, spec: TreeSpec) -> VerifyResult:
    """Check that ``spec`` describes a forest in ``g`` and extract it.

    Returns a :class:`Forest` on success. Otherwise returns the first
    violation found, checked in this order: an undirected cycle over tree
    edges, a node with two or more parents, a node whose label requires a
    parent but has none. Broken sibling-order chains raise
    :class:`SiblingOrderError`.
    """
    scope = scope_nodes(g, spec)
    edges = tree_edges(g, spec, scope)

    witness = _find_cycle(scope, edges)
    if witness is not None:
        return Cycle(witness)

    parents: dict[NodeId, list[NodeId]] = defaultdict(list)
    kids: dict[NodeId, list[NodeId]] = defaultdict(list)
    for _, p, c in edges:
        parents[c].append(p)
        kids[p].append(c)
    for _, p, c in edges:
        if len(parents[c]) > 1:
            return MultiParent(c, tuple(parents[c]))

    for n in scope:
        if n not in parents and spec.parent_required and spec.requires_parent(g.node(n).labels):
            return MissingParent(n)

    forest = Forest(spec, graph=g)
    forest.parent = {c: ps[0] for c, ps in parents.items()}
    for n in scope:
        forest.children[n] = _order_children(g, spec, n, kids.get(n, []))
    forest.roots = [n for n in scope if n not in forest.parent]
    for r in forest.roots:
        for n in forest.subtree(r):
            forest.tree_id[n] = r
    return forest


def detect(g: PropertyGraph) -> list[tuple[TreeCandidate, VerifyResult]]:
    """Infer the schema, then verify every tree candidate against ``g``."""
    schema = infer_schema(g)
    return [(c, verify_forest(g, c.spec)) for c in find_tree_candidates(schema)]


# -- statistics -------------------------------------------------------------


@dataclass(frozen=True)
class ForestStats:
    n_trees: int
    n_nodes: int
    size: tuple[int, int, float]
    depth: tuple[int, int, float]
    fanout: tuple[int, int, float] | None  # None when no tree has an internal node


def _mmm(values: list[int]) -> tuple[int, int, float]:
    return min(values), max(values), statistics.median(values)


def forest_stats(f: Forest) -> ForestStats:
    """Per-tree size and depth, per-internal-node fanout (leaves excluded)."""
    sizes, depths, fanouts = [], [], []
    for r in f.roots:
        size, height = 0, 0
        stack = [(r, 0)]
        while stack:
            n, d = stack.pop()
            size += 1
            height = max(height, d)
            kids = f.children.get(n, ())
            if kids:
                fanouts.append(len(kids))
            stack.extend((k, d + 1) for k in kids)
        sizes.append(size)
        depths.append(height)
    if not sizes:
        return ForestStats(0, 0, (0, 0, 0), (0, 0, 0), None)
    return ForestStats(len(f.roots), sum(sizes), _mmm(sizes), _mmm(depths), _mmm(fanouts) if fanouts else None)


def _fmt_mmm(t) -> str:
    if t is None:
        return "-"
    lo, hi, med = t
    med = int(med) if float(med).is_integer() else med
    return f"{lo}/{hi}/{med}"


def stats_table(rows: list[tuple[str, ForestStats]], total_nodes: int) -> str:
    """Render stats in the layout #Nodes, Share, #Trees, size/depth/fanout min/max/median."""
    header = ("label(s)", "#nodes", "share", "#trees", "tree size", "depth", "fanout")
    lines = [header]
    for name, s in rows:
        share = 100.0 * s.n_nodes / total_nodes if total_nodes else 0.0
        lines.append(
            (name, str(s.n_nodes), f"{share:.2f}%", str(s.n_trees), _fmt_mmm(s.size), _fmt_mmm(s.depth), _fmt_mmm(s.fanout))
        )
    widths = [max(len(r[i]) for r in lines) for i in range(len(header))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in lines) + "\n"
