"""PrePost and Dewey structural encodings over a forest overlay.

Every node gets ``pre``/``post`` numbers from one DFS counter per tree
(incremented on entry and on exit, starting at 1), a Dewey vector of child
ranks from the root (the root is ``(1,)``), and its level. Per tree, nodes are
also kept in an access path sorted by ``pre``, which is the same order as the
lexicographic order of the Dewey vectors; range queries run as binary
searches over that path.

Maintenance is incremental: inserts shift PrePost values by two per inserted
node and relabel Dewey vectors of following sibling subtrees only; deletes do
the reverse. The result always equals a fresh :func:`build_index` of the
mutated forest.
"""

from __future__ import annotations

import bisect
import csv
import re
from dataclasses import dataclass
from typing import IO, NamedTuple

import numpy as np

from .detect import Forest
from .errors import (
    MalformedDewey,
    NotInScope,
    NotIndexed,
    ParentRequired,
    UnknownNode,
    WouldCreateCycle,
    WouldCreateMultiParent,
)
from .graph import NodeId

CODECS = ("prepost", "dewey")

_DEWEY_RE = re.compile(r"[1-9][0-9]*(\.[1-9][0-9]*)*\Z")


def dewey_to_string(d) -> str:
    return ".".join(map(str, d))


def string_to_dewey(s: str) -> tuple[int, ...]:
    if not isinstance(s, str) or not _DEWEY_RE.match(s):
        raise MalformedDewey(f"malformed Dewey label {s!r}")
    return tuple(int(p) for p in s.split("."))


class IndexEntry(NamedTuple):
    tree: NodeId
    pre: int
    post: int
    lvl: int
    dewey: tuple[int, ...]


@dataclass
class MaintenanceReport:
    op: str
    node: NodeId
    dewey_relabeled: int = 0
    prepost_relabeled: int = 0
    added: int = 0
    removed: int = 0


class _Path:
    """Access path of one tree: nodes sorted by pre, with parallel columns."""

    __slots__ = ("nodes", "pres", "posts", "lvls", "deweys", "dmap", "_node_list")

    def __init__(self, nodes, pres, posts, lvls, deweys):
        self.nodes = nodes
        self.pres = pres
        self.posts = posts
        self.lvls = lvls
        self.deweys = deweys
        self.dmap = dict(zip(deweys, nodes.tolist()))
        self._node_list = None

    def node_list(self) -> list[NodeId]:
        if self._node_list is None:
            self._node_list = self.nodes.tolist()
        return self._node_list

    def prepost_range(self, pre: int, post: int) -> tuple[int, int]:
        lo = int(np.searchsorted(self.pres, pre, side="right"))
        hi = int(np.searchsorted(self.pres, post, side="left"))
        return lo, hi

    def dewey_range(self, d: tuple[int, ...]) -> tuple[int, int]:
        lo = bisect.bisect_right(self.deweys, d)
        hi = bisect.bisect_left(self.deweys, d[:-1] + (d[-1] + 1,), lo)
        return lo, hi


def _check_codec(codec: str) -> None:
    if codec not in CODECS:
        raise ValueError(f"codec must be one of {CODECS}, got {codec!r}")


class StructuralIndex:
    """PrePost + Dewey + level encodings of a :class:`Forest`.

    The index owns ``forest`` once built: maintenance operations mutate it.
    """

    def __init__(self, forest: Forest):
        self.forest = forest
        self._tree: dict[NodeId, NodeId] = {}
        self._pre: dict[NodeId, int] = {}
        self._post: dict[NodeId, int] = {}
        self._lvl: dict[NodeId, int] = {}
        self._dewey: dict[NodeId, tuple[int, ...]] = {}
        self._paths: dict[NodeId, _Path] = {}

    # -- construction -------------------------------------------------------

    def _encode_tree(self, root: NodeId) -> None:
        children = self.forest.children
        pre, post, lvl, dewey, tree = self._pre, self._post, self._lvl, self._dewey, self._tree
        pre[root], lvl[root], dewey[root], tree[root] = 1, 0, (1,), root
        counter = 2
        stack = [(root, iter(enumerate(children.get(root, ()), 1)))]
        while stack:
            n, it = stack[-1]
            step = next(it, None)
            if step is None:
                post[n] = counter
                counter += 1
                stack.pop()
                continue
            rank, c = step
            pre[c] = counter
            counter += 1
            lvl[c] = lvl[n] + 1
            dewey[c] = dewey[n] + (rank,)
            tree[c] = root
            stack.append((c, iter(enumerate(children.get(c, ()), 1))))

    def _rebuild_path(self, root: NodeId) -> None:
        members = np.fromiter(self.forest.subtree(root), dtype=np.int64)
        pres = np.fromiter((self._pre[n] for n in members.tolist()), dtype=np.int64, count=len(members))
        order = np.argsort(pres, kind="stable")
        nodes = members[order]
        node_list = nodes.tolist()
        self._paths[root] = _Path(
            nodes,
            pres[order],
            np.fromiter((self._post[n] for n in node_list), dtype=np.int64, count=len(node_list)),
            np.fromiter((self._lvl[n] for n in node_list), dtype=np.int64, count=len(node_list)),
            [self._dewey[n] for n in node_list],
        )

    # -- lookups ------------------------------------------------------------

    def __contains__(self, n: object) -> bool:
        return n in self._pre

    def __len__(self) -> int:
        return len(self._pre)

    def _need(self, *nodes: NodeId) -> None:
        for n in nodes:
            if n not in self._pre:
                raise NotIndexed(f"node {n} is not in this index")

    def entry(self, n: NodeId) -> IndexEntry:
        self._need(n)
        return IndexEntry(self._tree[n], self._pre[n], self._post[n], self._lvl[n], self._dewey[n])

    def tree_of(self, n: NodeId) -> NodeId:
        self._need(n)
        return self._tree[n]

    def roots(self) -> list[NodeId]:
        return list(self.forest.roots)

    def path_nodes(self, root: NodeId) -> list[NodeId]:
        """Nodes of the tree rooted at ``root`` in pre order (the access path)."""
        return list(self._paths[root].node_list())

    def node_at(self, dewey, tree: NodeId) -> NodeId:
        """Node with the given Dewey label (vector or dotted string) in ``tree``."""
        vec = string_to_dewey(dewey) if isinstance(dewey, str) else tuple(dewey)
        try:
            return self._paths[tree].dmap[vec]
        except KeyError:
            raise NotIndexed(f"no node {dewey_to_string(vec)} in tree {tree}") from None

    def snapshot(self) -> dict[NodeId, IndexEntry]:
        return {n: self.entry(n) for n in self._pre}

    def encoding_sizes(self) -> dict[str, int]:
        """Number of stored integers per codec (level included in both)."""
        n = len(self._pre)
        return {"prepost": 3 * n, "dewey": sum(len(d) for d in self._dewey.values()) + n}

    # -- ancestry -----------------------------------------------------------

    def is_ancestor_prepost(self, a: NodeId, b: NodeId) -> bool:
        self._need(a, b)
        if self._tree[a] != self._tree[b]:
            return False
        return self._pre[a] < self._pre[b] < self._post[a]

    def is_ancestor_dewey(self, a: NodeId, b: NodeId) -> bool:
        self._need(a, b)
        if self._tree[a] != self._tree[b]:
            return False
        da, db = self._dewey[a], self._dewey[b]
        return len(da) < len(db) and db[: len(da)] == da

    def is_ancestor(self, a: NodeId, b: NodeId, codec: str = "prepost") -> bool:
        _check_codec(codec)
        if codec == "prepost":
            return self.is_ancestor_prepost(a, b)
        return self.is_ancestor_dewey(a, b)

    def is_k_hop_ancestor(self, a: NodeId, b: NodeId, k: int, codec: str = "prepost") -> bool:
        if k < 1:
            raise ValueError("k must be a positive integer")
        return self.is_ancestor(a, b, codec) and self._lvl[a] + k == self._lvl[b]

    # -- range queries ------------------------------------------------------

    def _range(self, a: NodeId, codec: str) -> tuple[_Path, int, int]:
        _check_codec(codec)
        self._need(a)
        path = self._paths[self._tree[a]]
        if codec == "prepost":
            lo, hi = path.prepost_range(self._pre[a], self._post[a])
        else:
            lo, hi = path.dewey_range(self._dewey[a])
        return path, lo, hi

    def descendants(
        self, a: NodeId, codec: str = "prepost", min_depth: int = 1, max_depth: int | None = None
    ) -> list[NodeId]:
        """Descendants of ``a`` whose distance to ``a`` lies in [min_depth, max_depth].

        The default returns all strict descendants in pre order.
        """
        path, lo, hi = self._range(a, codec)
        if min_depth <= 0:
            lo -= 1  # a itself sits directly before its descendants
            min_depth = 0
        if min_depth <= 1 and max_depth is None:
            return path.nodes[lo:hi].tolist()
        lvls = path.lvls[lo:hi]
        base = self._lvl[a]
        mask = lvls >= base + min_depth
        if max_depth is not None:
            mask &= lvls <= base + max_depth
        return path.nodes[lo:hi][mask].tolist()

    def leaves_under(self, a: NodeId, codec: str = "prepost") -> list[NodeId]:
        path, lo, hi = self._range(a, codec)
        if codec == "prepost":
            mask = path.posts[lo:hi] == path.pres[lo:hi] + 1
            return path.nodes[lo:hi][mask].tolist()
        # in pre order, a node has a child iff the next label is one component longer
        deweys, nodes = path.deweys, path.node_list()
        return [
            nodes[i]
            for i in range(lo, hi)
            if i + 1 == len(deweys) or len(deweys[i + 1]) <= len(deweys[i])
        ]

    def children(self, a: NodeId, codec: str = "prepost") -> list[NodeId]:
        """Children of ``a`` in sibling order."""
        _check_codec(codec)
        self._need(a)
        path = self._paths[self._tree[a]]
        out = []
        if codec == "prepost":
            nodes, post = path.node_list(), self._post[a]
            i = int(np.searchsorted(path.pres, self._pre[a])) + 1
            while i < len(nodes) and int(path.pres[i]) < post:
                out.append(nodes[i])
                # next sibling starts right after this child's post value
                i = int(np.searchsorted(path.pres, int(path.posts[i]) + 1))
            return out
        d, dmap, rank = self._dewey[a], path.dmap, 1
        while d + (rank,) in dmap:
            out.append(dmap[d + (rank,)])
            rank += 1
        return out

    def ancestors(
        self, b: NodeId, codec: str = "prepost", min_depth: int = 1, max_depth: int | None = None
    ) -> list[NodeId]:
        """Ancestors of ``b`` at distance in [min_depth, max_depth], root first."""
        _check_codec(codec)
        self._need(b)
        path = self._paths[self._tree[b]]
        base = self._lvl[b]
        lo_lvl = -1 if max_depth is None else base - max_depth
        hi_lvl = base - max(min_depth, 0)
        if codec == "prepost":
            i = int(np.searchsorted(path.pres, self._pre[b]))
            mask = path.posts[:i] > self._post[b]
            mask &= (path.lvls[:i] >= lo_lvl) & (path.lvls[:i] <= hi_lvl)
            out = path.nodes[:i][mask].tolist()
        else:
            d = self._dewey[b]
            out = [path.dmap[d[:j]] for j in range(1, len(d)) if lo_lvl <= j - 1 <= hi_lvl]
        if min_depth <= 0:
            out.append(b)
        return out

    # -- maintenance --------------------------------------------------------

    def _shift(self, members, at: int, delta: int, skip=frozenset()) -> int:
        """Add ``delta`` to every pre/post value >= ``at``; returns nodes touched."""
        pre, post = self._pre, self._post
        touched = 0
        for x in members:
            if x in skip:
                continue
            hit = False
            if pre[x] >= at:
                pre[x] += delta
                hit = True
            if post[x] >= at:
                post[x] += delta
                hit = True
            touched += hit
        return touched

    def _rerank(self, siblings: list[NodeId], depth: int, delta: int) -> int:
        """Shift the Dewey component at ``depth`` by ``delta`` across whole subtrees."""
        dewey, touched = self._dewey, 0
        for s in siblings:
            for x in self.forest.subtree(s):
                d = dewey[x]
                dewey[x] = d[:depth] + (d[depth] + delta,) + d[depth + 1 :]
                touched += 1
        return touched

    def insert_node(self, parent: NodeId, node: NodeId, before: NodeId | None = None) -> MaintenanceReport:
        """Attach ``node`` under ``parent``, as last child or right before ``before``.

        ``node`` is either new to the forest or the root of another tree, in
        which case that whole tree is moved under ``parent``.
        """
        self._need(parent)
        f = self.forest
        g = f.graph
        root = self._tree[parent]
        if node in self._pre:
            if node in f.parent:
                raise WouldCreateMultiParent(f"node {node} already has parent {f.parent[node]}")
            if self._tree[node] == root:
                raise WouldCreateCycle(f"node {node} is the root of {parent}'s tree")
            moved = self._paths[node].node_list()
        else:
            if g is not None:
                if node not in g:
                    raise UnknownNode(node)
                if not f.spec.in_scope(g.node(node).labels):
                    raise NotInScope(f"node {node} is outside the scope of tree spec {f.spec.name!r}")
            moved = [node]
        siblings = f.children.setdefault(parent, [])
        if before is None:
            rank, at = len(siblings) + 1, self._post[parent]
        else:
            if before not in siblings:
                raise ValueError(f"{before} is not a child of {parent}")
            rank, at = siblings.index(before) + 1, self._pre[before]
        k = len(moved)
        report = MaintenanceReport("insert", node, added=k)

        report.prepost_relabeled = self._shift(self._paths[root].node_list(), at, 2 * k)
        plen = len(self._dewey[parent])
        report.dewey_relabeled = self._rerank(siblings[rank - 1 :], plen, 1)

        base_lvl, base_dewey = self._lvl[parent] + 1, self._dewey[parent] + (rank,)
        if node in self._pre:
            for x in moved:
                self._pre[x] += at - 1
                self._post[x] += at - 1
                self._lvl[x] += base_lvl
                self._dewey[x] = base_dewey + self._dewey[x][1:]
                self._tree[x] = root
            report.prepost_relabeled += k
            report.dewey_relabeled += k
            f.roots.remove(node)
            del self._paths[node]
        else:
            self._pre[node], self._post[node] = at, at + 1
            self._lvl[node], self._dewey[node], self._tree[node] = base_lvl, base_dewey, root
            f.children.setdefault(node, [])
        f.parent[node] = parent
        siblings.insert(rank - 1, node)
        for x in moved:
            f.tree_id[x] = root
        self._rebuild_path(root)
        return report

    def delete_subtree(self, a: NodeId, mode: str = "remove") -> MaintenanceReport:
        """Remove the subtree at ``a`` (``remove``) or make it a new tree (``detach``)."""
        if mode not in ("remove", "detach"):
            raise ValueError("mode must be 'remove' or 'detach'")
        self._need(a)
        f = self.forest
        root = self._tree[a]
        sub = f.subtree(a)
        k = len(sub)
        report = MaintenanceReport(mode, a)
        if mode == "detach":
            if a == root:
                return report
            g = f.graph
            if g is not None and f.spec.requires_parent(g.node(a).labels):
                raise ParentRequired(f"node {a} must keep a parent under tree spec {f.spec.name!r}")

        if a == root:
            for x in sub:
                self._drop(x)
            f.roots.remove(a)
            del self._paths[a]
            report.removed = k
            return report

        parent = f.parent[a]
        siblings = f.children[parent]
        rank = siblings.index(a) + 1
        a_pre, a_post, a_lvl, a_len = self._pre[a], self._post[a], self._lvl[a], len(self._dewey[a])
        members = self._paths[root].node_list()

        if mode == "remove":
            for x in sub:
                self._drop(x)
            report.removed = k
        else:
            for x in sub:
                self._pre[x] -= a_pre - 1
                self._post[x] -= a_pre - 1
                self._lvl[x] -= a_lvl
                self._dewey[x] = (1,) + self._dewey[x][a_len:]
                self._tree[x] = a
                f.tree_id[x] = a
            report.prepost_relabeled = report.dewey_relabeled = k

        report.prepost_relabeled += self._shift(members, a_post + 1, -2 * k, skip=set(sub))
        del siblings[rank - 1]
        report.dewey_relabeled += self._rerank(siblings[rank - 1 :], a_len - 1, -1)
        f.parent.pop(a, None)
        if mode == "detach":
            f.roots.append(a)
            self._rebuild_path(a)
        self._rebuild_path(root)
        return report

    def _drop(self, x: NodeId) -> None:
        f = self.forest
        for table in (self._pre, self._post, self._lvl, self._dewey, self._tree):
            del table[x]
        f.tree_id.pop(x, None)
        f.children.pop(x, None)
        if x in f.parent:
            del f.parent[x]

    # -- export -------------------------------------------------------------

    def export_csv(self, out: IO[str]) -> None:
        """Write ``node_id,pre,post,lvl,dewey`` rows, trees in root order, nodes in pre order."""
        g = self.forest.graph
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["node_id", "pre", "post", "lvl", "dewey"])
        for r in self.forest.roots:
            for n in self._paths[r].node_list():
                key = g.key(n) if g is not None else n
                w.writerow([key, self._pre[n], self._post[n], self._lvl[n], dewey_to_string(self._dewey[n])])


def build_index(forest: Forest) -> StructuralIndex:
    """Encode every tree of ``forest`` (each tree numbered from pre=1)."""
    idx = StructuralIndex(forest)
    for r in forest.roots:
        idx._encode_tree(r)
        idx._rebuild_path(r)
    return idx
