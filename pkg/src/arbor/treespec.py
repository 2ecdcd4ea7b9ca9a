"""Declarative description of a tree-shaped substructure.

A spec is stored as a small INI-style document::

    [tree]
    name = tagclass
    edge_labels = isSubclassOf
    node_labels = TagClass
    orientation = child_to_parent
    sibling_order = insertion
    parent_required =

``sibling_order`` is ``insertion``, ``property:NAME`` or ``next_edge:LABEL``.
An empty ``node_labels`` means every node touched by a tree edge is in scope.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field
from typing import Iterable

from .errors import ParseError

CHILD_TO_PARENT = "child_to_parent"
PARENT_TO_CHILD = "parent_to_child"
ORIENTATIONS = (CHILD_TO_PARENT, PARENT_TO_CHILD)
SIBLING_ORDERS = ("insertion", "property", "next_edge")


def _labels(value: Iterable[str] | str | None) -> frozenset[str]:
    if value is None:
        return frozenset()
    if isinstance(value, str):
        value = value.split(",")
    return frozenset(v.strip() for v in value if v.strip())


@dataclass(frozen=True)
class TreeSpec:
    edge_labels: frozenset[str]
    node_labels: frozenset[str] | None = None
    orientation: str = CHILD_TO_PARENT
    sibling_order: str = "insertion"
    order_key: str | None = None
    parent_required: frozenset[str] = field(default_factory=frozenset)
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "edge_labels", _labels(self.edge_labels))
        if self.node_labels is not None:
            object.__setattr__(self, "node_labels", _labels(self.node_labels) or None)
        object.__setattr__(self, "parent_required", _labels(self.parent_required))
        if not self.edge_labels:
            raise ValueError("a tree spec needs at least one edge label")
        if self.orientation not in ORIENTATIONS:
            raise ValueError(f"orientation must be one of {ORIENTATIONS}, got {self.orientation!r}")
        if self.sibling_order not in SIBLING_ORDERS:
            raise ValueError(f"sibling_order must be one of {SIBLING_ORDERS}, got {self.sibling_order!r}")
        if self.sibling_order != "insertion" and not self.order_key:
            raise ValueError(f"sibling_order {self.sibling_order!r} needs an order_key")
        if self.sibling_order == "next_edge" and self.order_key in self.edge_labels:
            raise ValueError("the sibling-order edge label must differ from the tree edge labels")
        if not self.name:
            object.__setattr__(self, "name", "+".join(sorted(self.edge_labels)))

    def in_scope(self, labels: frozenset[str]) -> bool:
        return self.node_labels is None or not self.node_labels.isdisjoint(labels)

    def requires_parent(self, labels: frozenset[str]) -> bool:
        return not self.parent_required.isdisjoint(labels)

    def parent_and_child(self, src: int, dst: int) -> tuple[int, int]:
        """Map an edge's endpoints to (parent, child) under this orientation."""
        if self.orientation == CHILD_TO_PARENT:
            return dst, src
        return src, dst

    @property
    def primary_label(self) -> str:
        return min(self.edge_labels)

    def to_config(self) -> str:
        cp = configparser.ConfigParser()
        order = self.sibling_order if self.sibling_order == "insertion" else f"{self.sibling_order}:{self.order_key}"
        cp["tree"] = {
            "name": self.name,
            "edge_labels": ",".join(sorted(self.edge_labels)),
            "node_labels": ",".join(sorted(self.node_labels or ())),
            "orientation": self.orientation,
            "sibling_order": order,
            "parent_required": ",".join(sorted(self.parent_required)),
        }
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_config(cls, text: str) -> "TreeSpec":
        cp = configparser.ConfigParser()
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ParseError(f"bad tree spec document: {exc}") from None
        if "tree" not in cp:
            raise ParseError("tree spec document needs a [tree] section")
        sec = cp["tree"]
        order = sec.get("sibling_order", "insertion").strip()
        kind, _, key = order.partition(":")
        try:
            return cls(
                edge_labels=_labels(sec.get("edge_labels")),
                node_labels=_labels(sec.get("node_labels")) or None,
                orientation=sec.get("orientation", CHILD_TO_PARENT).strip(),
                sibling_order=kind.strip(),
                order_key=key.strip() or None,
                parent_required=_labels(sec.get("parent_required")),
                name=sec.get("name", "").strip(),
            )
        except ValueError as exc:
            raise ParseError(str(exc)) from None


def load_spec(path) -> TreeSpec:
    with open(path, encoding="utf-8") as fh:
        return TreeSpec.from_config(fh.read())


def save_spec(spec: TreeSpec, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(spec.to_config())
