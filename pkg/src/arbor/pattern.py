"""A tiny Cypher subset, and its rewriting onto structural-index predicates.

Grammar (keywords are case-insensitive, whitespace is free)::

    query := "MATCH" node edge node ["WHERE" pred ("AND" pred)*] "RETURN" var ("," var)*
    node  := "(" var [":" label] ")"
    edge  := ("-" | "<-") "[" [":" label] ["*" [int [".." int]]] "]" ("-" | "->")
    pred  := var "." name "=" literal

A pattern whose edge label is a registered tree spec and whose length is
variable is rewritten from path expansion into interval (PrePost) or prefix
(Dewey) predicates, plus level predicates for bounded lengths. Anything else
falls back to the baseline plan; rewriting never fails.
"""

from __future__ import annotations

import re
import time
from dataclasses import dataclass

from .engine import QueryResult, Registration, TreeEngine
from .errors import NoIndex, QuerySyntaxError
from .graph import NodeId, PropertyGraph, PropertyValue, same_tag
from .treespec import PARENT_TO_CHILD

# -- AST --------------------------------------------------------------------


@dataclass(frozen=True)
class NodePattern:
    var: str
    label: str | None = None


@dataclass(frozen=True)
class EdgePattern:
    label: str | None = None
    direction: str = "out"  # out: left->right, in: left<-right, both: undirected
    min_hops: int = 1
    max_hops: int | None = 1  # None means unbounded
    variable: bool = False


@dataclass(frozen=True)
class Predicate:
    var: str
    prop: str
    value: PropertyValue


@dataclass(frozen=True)
class PatternQuery:
    left: NodePattern
    edge: EdgePattern
    right: NodePattern
    where: tuple[Predicate, ...] = ()
    returns: tuple[str, ...] = ()

    def to_text(self) -> str:
        parts = ["MATCH " + _node_text(self.left) + _edge_text(self.edge) + _node_text(self.right)]
        if self.where:
            parts.append("WHERE " + " AND ".join(_pred_text(p) for p in self.where))
        parts.append("RETURN " + ", ".join(self.returns))
        return " ".join(parts)

    __str__ = to_text


def _literal_text(v: PropertyValue) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return "'" + v.replace("\\", "\\\\").replace("'", "\\'") + "'"
    return repr(v)


def _node_text(n: NodePattern) -> str:
    return f"({n.var}:{n.label})" if n.label else f"({n.var})"


def _edge_text(e: EdgePattern) -> str:
    inner = f":{e.label}" if e.label else ""
    if e.variable:
        inner += "*"
        if e.max_hops is not None:
            inner += str(e.min_hops) if e.min_hops == e.max_hops else f"{e.min_hops}..{e.max_hops}"
    lhs = "<-" if e.direction == "in" else "-"
    rhs = "->" if e.direction == "out" else "-"
    return f"{lhs}[{inner}]{rhs}"


def _pred_text(p: Predicate) -> str:
    return f"{p.var}.{p.prop} = {_literal_text(p.value)}"


# -- parser -----------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<arrow_r>->)
  | (?P<arrow_l><-)
  | (?P<dotdot>\.\.)
  | (?P<number>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<string>'(?:[^'\\]|\\.)*'|"(?:[^"\\]|\\.)*")
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[-()\[\]:*.,=])
    """,
    re.VERBOSE,
)
_KEYWORDS = {"MATCH", "WHERE", "AND", "RETURN"}


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    toks, pos = [], 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise QuerySyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            value = m.group()
            if kind == "punct":
                kind = value
            elif kind == "ident" and value.upper() in _KEYWORDS:
                kind, value = value.upper(), value.upper()
            toks.append(_Tok(kind, value, pos))
        pos = m.end()
    toks.append(_Tok("eof", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def fail(self, expected: str):
        t = self.tok
        found = "end of input" if t.kind == "eof" else repr(t.text)
        raise QuerySyntaxError(f"unexpected {found}", t.pos, expected)

    def take(self, kind: str, expected: str | None = None) -> _Tok:
        if self.tok.kind != kind:
            self.fail(expected or repr(kind))
        t = self.tok
        self.i += 1
        return t

    def accept(self, kind: str) -> _Tok | None:
        if self.tok.kind == kind:
            return self.take(kind)
        return None

    def ident(self, what: str) -> str:
        return self.take("ident", what).text

    def int_(self) -> int:
        t = self.take("number", "integer")
        if "." in t.text:
            raise QuerySyntaxError("hop counts must be integers", t.pos, "integer")
        return int(t.text)

    def node(self) -> NodePattern:
        self.take("(", "'('")
        var = self.ident("variable")
        label = self.ident("label") if self.accept(":") else None
        self.take(")", "')'")
        return NodePattern(var, label)

    def edge(self) -> EdgePattern:
        start = self.tok
        if self.accept("arrow_l"):
            left_in = True
        elif self.accept("-"):
            left_in = False
        else:
            self.fail("'-' or '<-'")
        self.take("[", "'['")
        label = self.ident("edge label") if self.accept(":") else None
        variable, lo, hi = False, 1, 1
        if self.accept("*"):
            variable, lo, hi = True, 1, None
            if self.tok.kind == "number":
                lo = self.int_()
                hi = lo
                if self.accept("dotdot"):
                    hi = self.int_()
                    if hi < lo:
                        raise QuerySyntaxError("upper hop bound below lower bound", self.toks[self.i - 1].pos)
        self.take("]", "']'")
        if self.accept("arrow_r"):
            if left_in:
                raise QuerySyntaxError("edge cannot point both ways", start.pos, "'-'")
            direction = "out"
        elif self.accept("-"):
            direction = "in" if left_in else "both"
        else:
            self.fail("'-' or '->'")
        return EdgePattern(label, direction, lo, hi, variable)

    def literal(self) -> PropertyValue:
        t = self.tok
        if t.kind == "-" and self.toks[self.i + 1].kind == "number":
            self.i += 1
            return -self._number(self.take("number"))
        if t.kind == "number":
            return self._number(self.take("number"))
        if t.kind == "string":
            self.i += 1
            return re.sub(r"\\(.)", r"\1", t.text[1:-1])
        if t.kind == "ident" and t.text.lower() in ("true", "false"):
            self.i += 1
            return t.text.lower() == "true"
        self.fail("literal")

    @staticmethod
    def _number(t: _Tok):
        return int(t.text) if t.text.isdigit() else float(t.text)

    def query(self) -> PatternQuery:
        self.take("MATCH", "MATCH")
        left = self.node()
        edge = self.edge()
        right = self.node()
        if left.var == right.var:
            raise QuerySyntaxError(f"variable {left.var!r} bound twice", self.toks[self.i - 1].pos)
        known = {left.var, right.var}
        where = []
        if self.accept("WHERE"):
            while True:
                t = self.tok
                var = self.ident("variable")
                if var not in known:
                    raise QuerySyntaxError(f"unknown variable {var!r}", t.pos)
                self.take(".", "'.'")
                prop = self.ident("property name")
                self.take("=", "'='")
                where.append(Predicate(var, prop, self.literal()))
                if not self.accept("AND"):
                    break
        self.take("RETURN", "RETURN")
        returns = []
        while True:
            t = self.tok
            var = self.ident("variable")
            if var not in known:
                raise QuerySyntaxError(f"unknown variable {var!r}", t.pos)
            returns.append(var)
            if not self.accept(","):
                break
        self.take("eof", "end of query")
        return PatternQuery(left, edge, right, tuple(where), tuple(returns))


def parse(text: str) -> PatternQuery:
    return _Parser(text).query()


# -- rewriting --------------------------------------------------------------


@dataclass(frozen=True)
class RewrittenPlan:
    origin: PatternQuery
    plan: str
    predicates: tuple[str, ...] = ()
    note: str = ""
    spec_name: str | None = None
    ancestor_var: str | None = None
    descendant_var: str | None = None

    @property
    def uses_index(self) -> bool:
        return self.plan in ("index_prepost", "index_dewey")

    def to_cypher(self) -> str:
        """The query with the path expression replaced by index predicates."""
        q = self.origin
        if not self.uses_index:
            return q.to_text()
        preds = [_pred_text(p) for p in q.where] + list(self.predicates)
        return (
            f"MATCH {_node_text(q.left)},{_node_text(q.right)} "
            f"WHERE {' AND '.join(preds)} RETURN {', '.join(q.returns)}"
        )


def _fallback(q: PatternQuery, note: str) -> RewrittenPlan:
    return RewrittenPlan(q, "baseline_traversal", (), note)


def _matching_spec(q: PatternQuery, engine: TreeEngine) -> tuple[Registration | None, str]:
    edge_labels = engine.graph.edge_labels()
    regs = [r for r in engine.registry.values() if r.index is not None]
    if not regs:
        return None, "no index registered"
    if q.edge.label is None:
        if len(edge_labels) != 1:
            return None, "unlabeled edge pattern spans several edge labels"
        wanted = frozenset(edge_labels)
    else:
        wanted = frozenset({q.edge.label})
    hits = [r for r in regs if r.spec.edge_labels == wanted]
    if not hits:
        return None, f"no tree spec over edge label(s) {', '.join(sorted(wanted))}"
    covering = [r for r in hits if r.covers_labels]
    if not covering:
        return None, "some edges with this label lie outside the registered forest"
    return sorted(covering, key=lambda r: r.spec.name)[0], ""


def rewrite(q: PatternQuery, catalog: TreeEngine, codec: str = "prepost") -> RewrittenPlan:
    """Turn a variable-length tree path into index predicates, or fall back."""
    if codec not in ("prepost", "dewey"):
        raise ValueError(f"codec must be 'prepost' or 'dewey', got {codec!r}")
    e = q.edge
    if not e.variable:
        return _fallback(q, "single-hop pattern; a fixed join is already cheap")
    if e.direction == "both":
        return _fallback(q, "undirected pattern is not an ancestor/descendant relation")
    reg, why = _matching_spec(q, catalog)
    if reg is None:
        return _fallback(q, why)

    descending = (e.direction == "out") == (reg.spec.orientation == PARENT_TO_CHILD)
    anc, desc = (q.left.var, q.right.var) if descending else (q.right.var, q.left.var)
    lt = "<=" if e.min_hops == 0 else "<"
    if codec == "prepost":
        preds = [f"{anc}.pre {lt} {desc}.pre", f"{desc}.pre < {anc}.post"]
    else:
        prefix = f"{desc}.dewey STARTS WITH {anc}.dewey + '.'"
        preds = [f"({desc}.dewey = {anc}.dewey OR {prefix})" if e.min_hops == 0 else prefix]
    if e.max_hops is not None and e.min_hops == e.max_hops:
        preds.append(f"{anc}.lvl + {e.min_hops} = {desc}.lvl")
    else:
        if e.min_hops > 1:
            preds.append(f"{anc}.lvl + {e.min_hops} <= {desc}.lvl")
        if e.max_hops is not None:
            preds.append(f"{desc}.lvl <= {anc}.lvl + {e.max_hops}")
    plan = "index_prepost" if codec == "prepost" else "index_dewey"
    return RewrittenPlan(q, plan, tuple(preds), f"rewritten over tree spec {reg.spec.name!r}", reg.spec.name, anc, desc)


# -- execution --------------------------------------------------------------


def _candidates(g: PropertyGraph, q: PatternQuery, node: NodePattern) -> list[NodeId] | None:
    """Nodes the WHERE clause pins ``node`` to, or None when it is unconstrained."""
    preds = [p for p in q.where if p.var == node.var]
    if not preds:
        return None
    first, rest = preds[0], preds[1:]
    out = []
    for n in g.find(first.prop, first.value):
        props = g.node(n).properties
        if all(p.prop in props and same_tag(props[p.prop], p.value) and props[p.prop] == p.value for p in rest):
            out.append(n)
    return out


def _label_ok(g: PropertyGraph, node: NodePattern, n: NodeId) -> bool:
    return node.label is None or node.label in g.node(n).labels


def _trail_ends(g: PropertyGraph, start: NodeId, label, direction: str, lo: int, hi: int | None) -> set[NodeId]:
    """End nodes of trails (no repeated edge) from ``start`` with length in [lo, hi]."""

    def incident(n):
        if direction in ("out", "both"):
            for eid in g.out_edges(n, label):
                yield eid, g.edge(eid).dst
        if direction in ("in", "both"):
            for eid in g.in_edges(n, label):
                yield eid, g.edge(eid).src

    ends = {start} if lo == 0 else set()
    if hi == 0:
        return ends
    used: set[int] = set()
    stack = [(None, incident(start))]
    while stack:
        via, it = stack[-1]
        for eid, w in it:
            if eid in used:
                continue
            depth = len(stack)
            if depth >= lo:
                ends.add(w)
            if hi is None or depth < hi:
                used.add(eid)
                stack.append((eid, incident(w)))
            break
        else:
            stack.pop()
            if via is not None:
                used.discard(via)
    return ends


_FLIP = {"out": "in", "in": "out", "both": "both"}


def match_baseline(g: PropertyGraph, q: PatternQuery) -> set[tuple[NodeId, NodeId]]:
    """Reference semantics: (left, right) pairs joined by a matching trail."""
    e = q.edge
    left_c, right_c = _candidates(g, q, q.left), _candidates(g, q, q.right)
    pairs = set()
    if left_c is None and right_c is not None:
        for r in right_c:
            if _label_ok(g, q.right, r):
                for l in _trail_ends(g, r, e.label, _FLIP[e.direction], e.min_hops, e.max_hops):
                    pairs.add((l, r))
        left_c = None
    else:
        starts = left_c if left_c is not None else [n.id for n in g.nodes()]
        for l in starts:
            if _label_ok(g, q.left, l):
                for r in _trail_ends(g, l, e.label, e.direction, e.min_hops, e.max_hops):
                    pairs.add((l, r))
    keep_r = None if right_c is None else set(right_c)
    keep_l = None if left_c is None else set(left_c)
    return {
        (l, r)
        for l, r in pairs
        if _label_ok(g, q.left, l)
        and _label_ok(g, q.right, r)
        and (keep_l is None or l in keep_l)
        and (keep_r is None or r in keep_r)
    }


def _match_index(engine: TreeEngine, plan: RewrittenPlan, anchors) -> set[tuple[NodeId, NodeId]]:
    q = plan.origin
    reg = engine.get(plan.spec_name)
    index = reg.index
    codec = "prepost" if plan.plan == "index_prepost" else "dewey"
    lo, hi = q.edge.min_hops, q.edge.max_hops
    anc_c, desc_c = anchors[plan.ancestor_var], anchors[plan.descendant_var]
    pairs = set()  # (ancestor, descendant)
    if anc_c is not None or desc_c is None:
        keep = None if desc_c is None else set(desc_c)
        starts = anc_c
        if starts is None:
            starts = list(index.forest.nodes())
            if lo == 0:
                starts += [n.id for n in engine.graph.nodes() if n.id not in index]
        for a in starts:
            if a not in index:
                if lo == 0 and (keep is None or a in keep):
                    pairs.add((a, a))
                continue
            for d in index.descendants(a, codec, lo, hi):
                if keep is None or d in keep:
                    pairs.add((a, d))
    else:
        for d in desc_c:
            if d not in index:
                if lo == 0:
                    pairs.add((d, d))
                continue
            for a in index.ancestors(d, codec, lo, hi):
                pairs.add((a, d))
    left_is_anc = plan.ancestor_var == q.left.var
    out = set()
    g = engine.graph
    for a, d in pairs:
        l, r = (a, d) if left_is_anc else (d, a)
        if _label_ok(g, q.left, l) and _label_ok(g, q.right, r):
            out.add((l, r))
    return out


def execute(plan: RewrittenPlan, engine: TreeEngine) -> QueryResult:
    """Run ``plan``; anchor lookup happens before the timer starts."""
    q = plan.origin
    g = engine.graph
    if plan.uses_index:
        reg = engine.get(plan.spec_name)
        if reg.index is None:
            raise NoIndex(f"tree spec {plan.spec_name!r} has no structural index")
        anchors = {q.left.var: _candidates(g, q, q.left), q.right.var: _candidates(g, q, q.right)}
        t0 = time.perf_counter_ns()
        pairs = _match_index(engine, plan, anchors)
    else:
        t0 = time.perf_counter_ns()
        pairs = match_baseline(g, q)
    cols = {q.left.var: 0, q.right.var: 1}
    rows = sorted({tuple(p[cols[v]] for v in q.returns) for p in pairs})
    elapsed = (time.perf_counter_ns() - t0) / 1e9
    nodes = [r[0] for r in rows] if len(q.returns) == 1 else None
    return QueryResult(plan.plan, nodes=nodes, elapsed=elapsed, columns=q.returns, rows=rows)


def run_query(text: str, engine: TreeEngine, codec: str = "prepost", use_index: bool = True) -> tuple[RewrittenPlan, QueryResult]:
    q = parse(text)
    plan = rewrite(q, engine, codec) if use_index else _fallback(q, "index use disabled")
    return plan, execute(plan, engine)
