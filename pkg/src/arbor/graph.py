"""In-memory labeled property graph with CSV import/export.

Edges are always stored directed. Adjacency is kept per node and per edge
label, in edge insertion order, for both directions.
"""

from __future__ import annotations

import csv
import io
import os
import re
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator, Mapping, Union

from .errors import ParseError, UnknownNode

PropertyValue = Union[int, float, str, bool]
NodeId = int
EdgeId = int

KEY_PROPERTY = "node_id"
DIRECTIONS = ("out", "in", "both")

_TYPE_TAGS = {"int": int, "float": float, "str": str, "bool": bool}
_INT_RE = re.compile(r"-?\d+\Z")


def type_tag(value: PropertyValue) -> str:
    # bool is a subclass of int, test it first
    if isinstance(value, bool):
        return "bool"
    if isinstance(value, int):
        return "int"
    if isinstance(value, float):
        return "float"
    if isinstance(value, str):
        return "str"
    raise TypeError(f"unsupported property value {value!r} ({type(value).__name__})")


def same_tag(a: PropertyValue, b: PropertyValue) -> bool:
    return type_tag(a) == type_tag(b)


def _check_properties(properties: Mapping[str, PropertyValue] | None) -> dict:
    props = dict(properties or {})
    for name, value in props.items():
        if not isinstance(name, str) or not name:
            raise TypeError(f"property names must be non-empty strings, got {name!r}")
        type_tag(value)
    return props


@dataclass
class Node:
    id: NodeId
    labels: frozenset[str]
    properties: dict[str, PropertyValue] = field(default_factory=dict)


@dataclass
class Edge:
    id: EdgeId
    src: NodeId
    dst: NodeId
    label: str
    properties: dict[str, PropertyValue] = field(default_factory=dict)


class PropertyGraph:
    """Labeled property graph.

    Mutations (``add_*``/``remove_*``) need exclusive access; reads are safe
    to run concurrently between mutations.
    """

    def __init__(self) -> None:
        self._nodes: dict[NodeId, Node] = {}
        self._edges: dict[EdgeId, Edge] = {}
        self._out: dict[NodeId, dict[str, list[EdgeId]]] = {}
        self._in: dict[NodeId, dict[str, list[EdgeId]]] = {}
        self._by_key: dict[PropertyValue, NodeId] = {}
        self._next_node = 0
        self._next_edge = 0

    # -- mutation -----------------------------------------------------------

    def add_node(
        self,
        labels: Iterable[str] = (),
        properties: Mapping[str, PropertyValue] | None = None,
    ) -> NodeId:
        props = _check_properties(properties)
        nid = self._next_node
        self._next_node += 1
        self._nodes[nid] = Node(nid, frozenset(labels), props)
        self._out[nid] = {}
        self._in[nid] = {}
        if KEY_PROPERTY in props:
            self._by_key.setdefault(props[KEY_PROPERTY], nid)
        return nid

    def add_edge(
        self,
        src: NodeId,
        dst: NodeId,
        label: str,
        properties: Mapping[str, PropertyValue] | None = None,
    ) -> EdgeId:
        if src not in self._nodes:
            raise UnknownNode(src)
        if dst not in self._nodes:
            raise UnknownNode(dst)
        props = _check_properties(properties)
        eid = self._next_edge
        self._next_edge += 1
        self._edges[eid] = Edge(eid, src, dst, label, props)
        self._out[src].setdefault(label, []).append(eid)
        self._in[dst].setdefault(label, []).append(eid)
        return eid

    def remove_edge(self, eid: EdgeId) -> None:
        edge = self._edges.pop(eid)
        out = self._out[edge.src][edge.label]
        out.remove(eid)
        if not out:
            del self._out[edge.src][edge.label]
        inc = self._in[edge.dst][edge.label]
        inc.remove(eid)
        if not inc:
            del self._in[edge.dst][edge.label]

    def remove_node(self, nid: NodeId) -> None:
        if nid not in self._nodes:
            raise UnknownNode(nid)
        incident = {e for ids in self._out[nid].values() for e in ids}
        incident.update(e for ids in self._in[nid].values() for e in ids)
        for eid in sorted(incident):
            self.remove_edge(eid)
        node = self._nodes.pop(nid)
        del self._out[nid], self._in[nid]
        key = node.properties.get(KEY_PROPERTY)
        if key is not None and self._by_key.get(key) == nid:
            del self._by_key[key]

    # -- read access --------------------------------------------------------

    def __contains__(self, nid: object) -> bool:
        return nid in self._nodes

    def has_node(self, nid: NodeId) -> bool:
        return nid in self._nodes

    def node(self, nid: NodeId) -> Node:
        try:
            return self._nodes[nid]
        except KeyError:
            raise UnknownNode(nid) from None

    get_node = node

    def edge(self, eid: EdgeId) -> Edge:
        return self._edges[eid]

    def nodes(self) -> Iterator[Node]:
        return iter(self._nodes.values())

    def edges(self) -> Iterator[Edge]:
        return iter(self._edges.values())

    def node_ids(self) -> list[NodeId]:
        return list(self._nodes)

    def node_count(self) -> int:
        return len(self._nodes)

    def edge_count(self) -> int:
        return len(self._edges)

    def edge_labels(self) -> set[str]:
        return {e.label for e in self._edges.values()}

    def labels(self, nid: NodeId) -> frozenset[str]:
        return self.node(nid).labels

    def key(self, nid: NodeId) -> PropertyValue:
        """External key of a node: its ``node_id`` property, else the internal id."""
        value = self.node(nid).properties.get(KEY_PROPERTY)
        if isinstance(value, (int, str)) and not isinstance(value, bool):
            return value
        return nid

    def lookup(self, key: PropertyValue) -> NodeId:
        """Resolve an external key to the internal node id."""
        try:
            return self._by_key[key]
        except KeyError:
            raise UnknownNode(key) from None

    def find(self, name: str, value: PropertyValue) -> list[NodeId]:
        """All nodes whose property ``name`` equals ``value`` (same type tag)."""
        if name == KEY_PROPERTY:
            nid = self._by_key.get(value)
            if nid is not None and same_tag(self._nodes[nid].properties[name], value):
                return [nid]
            return []
        out = []
        for node in self._nodes.values():
            v = node.properties.get(name)
            if v is not None and same_tag(v, value) and v == value:
                out.append(node.id)
        return out

    def _edge_ids(self, adj: dict[str, list[EdgeId]], label: str | None) -> list[EdgeId]:
        if label is not None:
            return adj.get(label, [])
        if len(adj) == 1:
            return next(iter(adj.values()))
        return sorted(e for ids in adj.values() for e in ids)

    def out_edges(self, nid: NodeId, label: str | None = None) -> list[EdgeId]:
        if nid not in self._out:
            raise UnknownNode(nid)
        return list(self._edge_ids(self._out[nid], label))

    def in_edges(self, nid: NodeId, label: str | None = None) -> list[EdgeId]:
        if nid not in self._in:
            raise UnknownNode(nid)
        return list(self._edge_ids(self._in[nid], label))

    def neighbors(self, nid: NodeId, label: str | None = None, direction: str = "out") -> list[NodeId]:
        """Nodes one ``label`` edge away from ``nid``, ordered by edge insertion.

        ``label=None`` matches every edge label.
        """
        if direction not in DIRECTIONS:
            raise ValueError(f"direction must be one of {DIRECTIONS}, got {direction!r}")
        if nid not in self._nodes:
            raise UnknownNode(nid)
        edges = self._edges
        if direction == "out":
            return [edges[e].dst for e in self._edge_ids(self._out[nid], label)]
        if direction == "in":
            return [edges[e].src for e in self._edge_ids(self._in[nid], label)]
        both = sorted(
            list(self._edge_ids(self._out[nid], label)) + list(self._edge_ids(self._in[nid], label))
        )
        return [edges[e].dst if edges[e].src == nid else edges[e].src for e in both]

    def audit(self) -> list[str]:
        """Check adjacency/edge-table consistency. Returns a list of problems."""
        problems = []
        seen_out: dict[EdgeId, int] = {}
        seen_in: dict[EdgeId, int] = {}
        for nid, adj in self._out.items():
            for label, ids in adj.items():
                for e in ids:
                    seen_out[e] = seen_out.get(e, 0) + 1
                    edge = self._edges.get(e)
                    if edge is None or edge.src != nid or edge.label != label:
                        problems.append(f"out-list of {nid}/{label} holds stray edge {e}")
        for nid, adj in self._in.items():
            for label, ids in adj.items():
                for e in ids:
                    seen_in[e] = seen_in.get(e, 0) + 1
                    edge = self._edges.get(e)
                    if edge is None or edge.dst != nid or edge.label != label:
                        problems.append(f"in-list of {nid}/{label} holds stray edge {e}")
        for e in self._edges:
            if seen_out.get(e) != 1:
                problems.append(f"edge {e} appears {seen_out.get(e, 0)} times in out-lists")
            if seen_in.get(e) != 1:
                problems.append(f"edge {e} appears {seen_in.get(e, 0)} times in in-lists")
        if set(self._out) != set(self._nodes) or set(self._in) != set(self._nodes):
            problems.append("adjacency keys differ from node set")
        return problems

    def copy(self) -> "PropertyGraph":
        g = PropertyGraph()
        for node in self._nodes.values():
            g._nodes[node.id] = Node(node.id, node.labels, dict(node.properties))
            g._out[node.id] = {k: list(v) for k, v in self._out[node.id].items()}
            g._in[node.id] = {k: list(v) for k, v in self._in[node.id].items()}
        for edge in self._edges.values():
            g._edges[edge.id] = Edge(edge.id, edge.src, edge.dst, edge.label, dict(edge.properties))
        g._by_key = dict(self._by_key)
        g._next_node = self._next_node
        g._next_edge = self._next_edge
        return g


# -- CSV --------------------------------------------------------------------


def _parse_value(text: str, tag: str, line: int) -> PropertyValue:
    try:
        if tag == "bool":
            low = text.strip().lower()
            if low in ("true", "1"):
                return True
            if low in ("false", "0"):
                return False
            raise ValueError(text)
        return _TYPE_TAGS[tag](text)
    except ValueError:
        raise ParseError(f"cannot parse {text!r} as {tag}", line) from None


def _format_value(value: PropertyValue) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_key(text: str) -> int | str:
    return int(text) if _INT_RE.match(text) else text


def _prop_columns(header: list[str], fixed: int, line: int) -> list[tuple[str, str]]:
    cols = []
    for col in header[fixed:]:
        parts = col.split(":")
        if len(parts) != 3 or parts[0] != "prop" or not parts[1] or parts[2] not in _TYPE_TAGS:
            raise ParseError(f"bad property column {col!r}; expected prop:NAME:TYPE", line)
        cols.append((parts[1], parts[2]))
    return cols


def _open_text(source, mode: str):
    if isinstance(source, (str, os.PathLike)):
        return open(source, mode, newline="", encoding="utf-8"), True
    return source, False


def load_edge_list(nodes_source, edges_source) -> PropertyGraph:
    """Build a graph from a nodes CSV and an edges CSV (paths or text streams).

    Nodes get dense ids in row order; the ``node_id`` column is kept as the
    ``node_id`` property so keys survive a round trip. Empty property cells
    mean "absent".
    """
    g = PropertyGraph()
    keys: dict[int | str, NodeId] = {}

    fh, close = _open_text(nodes_source, "r")
    try:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ParseError("nodes file is empty; expected a header", 1)
        if header[:2] != ["node_id", "labels"]:
            raise ParseError("nodes header must start with node_id,labels", 1)
        cols = _prop_columns(header, 2, 1)
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", line)
            key = _parse_key(row[0])
            if key in keys:
                raise ParseError(f"duplicate node_id {row[0]!r}", line)
            labels = [lab for lab in row[1].split(";") if lab]
            props: dict[str, PropertyValue] = {KEY_PROPERTY: key}
            for (name, tag), cell in zip(cols, row[2:]):
                if cell != "":
                    props[name] = _parse_value(cell, tag, line)
            keys[key] = g.add_node(labels, props)
    finally:
        if close:
            fh.close()

    fh, close = _open_text(edges_source, "r")
    try:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return g
        if header[:3] != ["src", "dst", "label"]:
            raise ParseError("edges header must start with src,dst,label", 1)
        cols = _prop_columns(header, 3, 1)
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", line)
            ends = []
            for cell in row[:2]:
                key = _parse_key(cell)
                if key not in keys:
                    raise UnknownNode(key, row=line)
                ends.append(keys[key])
            props = {}
            for (name, tag), cell in zip(cols, row[3:]):
                if cell != "":
                    props[name] = _parse_value(cell, tag, line)
            g.add_edge(ends[0], ends[1], row[2], props)
    finally:
        if close:
            fh.close()
    return g


def _columns_for(items: Iterable[Mapping[str, PropertyValue]], skip: str | None) -> list[tuple[str, str]]:
    cols = set()
    for props in items:
        for name, value in props.items():
            if name != skip:
                cols.add((name, type_tag(value)))
    return sorted(cols)


def save_edge_list(g: PropertyGraph, nodes_target, edges_target) -> None:
    """Write ``g`` in the two-file CSV format read by :func:`load_edge_list`."""
    nodes = sorted(g.nodes(), key=lambda n: n.id)

    def key_is_column(node: Node) -> bool:
        return g.key(node.id) == node.properties.get(KEY_PROPERTY)

    ncols = _columns_for(
        ({k: v for k, v in n.properties.items() if not (k == KEY_PROPERTY and key_is_column(n))} for n in nodes),
        None,
    )
    fh, close = _open_text(nodes_target, "w")
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node_id", "labels"] + [f"prop:{n}:{t}" for n, t in ncols])
        for node in nodes:
            row = [str(g.key(node.id)), ";".join(sorted(node.labels))]
            for name, tag in ncols:
                value = node.properties.get(name)
                if name == KEY_PROPERTY and key_is_column(node):
                    value = None
                row.append("" if value is None or type_tag(value) != tag else _format_value(value))
            w.writerow(row)
    finally:
        if close:
            fh.close()

    edges = sorted(g.edges(), key=lambda e: e.id)
    ecols = _columns_for((e.properties for e in edges), None)
    fh, close = _open_text(edges_target, "w")
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["src", "dst", "label"] + [f"prop:{n}:{t}" for n, t in ecols])
        for edge in edges:
            row = [str(g.key(edge.src)), str(g.key(edge.dst)), edge.label]
            for name, tag in ecols:
                value = edge.properties.get(name)
                row.append("" if value is None or type_tag(value) != tag else _format_value(value))
            w.writerow(row)
    finally:
        if close:
            fh.close()


def dumps(g: PropertyGraph) -> tuple[str, str]:
    """Return the (nodes, edges) CSV texts of ``g``."""
    nodes, edges = io.StringIO(), io.StringIO()
    save_edge_list(g, nodes, edges)
    return nodes.getvalue(), edges.getvalue()


def load_dir(path) -> PropertyGraph:
    return load_edge_list(os.path.join(path, "nodes.csv"), os.path.join(path, "edges.csv"))


def save_dir(g: PropertyGraph, path) -> None:
    os.makedirs(path, exist_ok=True)
    save_edge_list(g, os.path.join(path, "nodes.csv"), os.path.join(path, "edges.csv"))
