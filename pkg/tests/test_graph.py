import io
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arbor import PropertyGraph, load_edge_list, random_tree
from arbor.errors import ParseError, UnknownNode
from arbor.graph import dumps, load_dir, save_dir

from conftest import AGENT, PLACE, TAGCLASS_DIR, THING


def test_add_node_roundtrip():
    g = PropertyGraph()
    n = g.add_node({"TagClass"}, {"name": "Thing"})
    node = g.get_node(n)
    assert node.labels == frozenset({"TagClass"})
    assert node.properties == {"name": "Thing"}


def test_add_node_empty_labels():
    g = PropertyGraph()
    n = g.add_node(set(), {})
    assert g.node(n).labels == frozenset()
    assert g.node(n).properties == {}


def test_thousand_nodes_distinct_ids():
    g = PropertyGraph()
    ids = [g.add_node() for _ in range(1000)]
    assert len(set(ids)) == 1000
    assert g.node_count() == 1000


def test_add_edge_adjacency():
    g = PropertyGraph()
    a, b = g.add_node(), g.add_node()
    g.add_edge(a, b, "REPLY_OF")
    assert g.neighbors(a, "REPLY_OF", "out") == [b]
    assert g.neighbors(b, "REPLY_OF", "in") == [a]
    assert g.neighbors(a, "OTHER", "out") == []


def test_add_edge_unknown_endpoint():
    g = PropertyGraph()
    a = g.add_node()
    with pytest.raises(UnknownNode):
        g.add_edge(a, 99, "X")
    with pytest.raises(UnknownNode):
        g.add_edge(99, a, "X")
    assert g.edge_count() == 0


def test_self_loop_is_accepted():
    g = PropertyGraph()
    a = g.add_node()
    g.add_edge(a, a, "X")
    assert g.neighbors(a, "X", "out") == [a]
    assert g.neighbors(a, "X", "in") == [a]
    assert g.audit() == []


def test_property_tags_are_checked():
    g = PropertyGraph()
    with pytest.raises(TypeError):
        g.add_node(properties={"bad": [1, 2]})


def test_load_tagclass_fixture():
    g = load_dir(TAGCLASS_DIR)
    assert g.node_count() == 5
    assert g.edge_count() == 4
    assert g.node(g.lookup(THING)).properties["name"] == "Thing"


def test_load_nodes_without_edges():
    nodes = io.StringIO("node_id,labels\n1,A\n2,B;C\n")
    g = load_edge_list(nodes, io.StringIO(""))
    assert g.node_count() == 2 and g.edge_count() == 0
    assert g.node(g.lookup(2)).labels == {"B", "C"}


def test_load_unknown_edge_endpoint_reports_row():
    nodes = io.StringIO("node_id,labels\n1,A\n2,A\n")
    edges = io.StringIO("src,dst,label\n1,2,X\n2,7,X\n")
    with pytest.raises(UnknownNode) as info:
        load_edge_list(nodes, edges)
    assert info.value.node == 7
    assert info.value.row == 3


@pytest.mark.parametrize(
    "nodes, line",
    [
        ("id,labels\n1,A\n", 1),
        ("node_id,labels,prop:x:int\n1,A,3\n2,A,three\n", 3),
        ("node_id,labels\n1,A\n1,B\n", 3),
        ("node_id,labels,prop:x\n1,A,3\n", 1),
        ("node_id,labels\n1,A,extra\n", 2),
    ],
)
def test_load_parse_errors_carry_line(nodes, line):
    with pytest.raises(ParseError) as info:
        load_edge_list(io.StringIO(nodes), io.StringIO(""))
    assert info.value.line == line


def test_neighbors_tagclass():
    g = load_dir(TAGCLASS_DIR)
    kids = g.neighbors(g.lookup(THING), "isSubclassOf", "in")
    assert [g.key(k) for k in kids] == [PLACE, AGENT]
    assert g.neighbors(g.lookup(PLACE), "isSubclassOf", "in") == []
    both = g.neighbors(g.lookup(AGENT), "isSubclassOf", "both")
    assert sorted(g.key(n) for n in both) == [1, 212, 302]


def test_neighbors_unknown_node():
    with pytest.raises(UnknownNode):
        PropertyGraph().neighbors(3)


def test_out_neighbors_cover_edge_multiset():
    g, _ = random_tree(300, seed=5)
    from_adjacency = Counter((n, m) for n in g.node_ids() for m in g.neighbors(n, None, "out"))
    assert from_adjacency == Counter((e.src, e.dst) for e in g.edges())


def test_counts_after_removal():
    g = PropertyGraph()
    a, b, c = g.add_node(), g.add_node(), g.add_node()
    e1 = g.add_edge(a, b, "X")
    g.add_edge(b, c, "X")
    g.remove_edge(e1)
    assert g.edge_count() == 1
    g.remove_node(b)
    assert g.node_count() == 2 and g.edge_count() == 0
    assert g.audit() == []
    assert b not in g


labels = st.frozensets(st.sampled_from(["A", "B", "C"]), max_size=2)
values = st.one_of(
    st.integers(-1000, 1000),
    st.floats(allow_nan=False, allow_infinity=False, width=32),
    st.text(alphabet="abc ,;\"'xyz", min_size=1, max_size=6),
    st.booleans(),
)


@st.composite
def graphs(draw):
    g = PropertyGraph()
    n = draw(st.integers(0, 12))
    for i in range(n):
        props = draw(st.dictionaries(st.sampled_from(["p", "q", "r"]), values, max_size=2))
        g.add_node(draw(labels), {"node_id": i, **props})
    if n:
        for _ in range(draw(st.integers(0, 20))):
            s, d = draw(st.integers(0, n - 1)), draw(st.integers(0, n - 1))
            props = draw(st.dictionaries(st.sampled_from(["w"]), values, max_size=1))
            g.add_edge(s, d, draw(st.sampled_from(["X", "Y"])), props)
    return g


@settings(max_examples=60, deadline=None)
@given(graphs())
def test_csv_roundtrip_is_identity(g):
    assert g.audit() == []
    nodes_text, edges_text = dumps(g)
    h = load_edge_list(io.StringIO(nodes_text), io.StringIO(edges_text))
    assert [(n.id, n.labels, n.properties) for n in g.nodes()] == [(n.id, n.labels, n.properties) for n in h.nodes()]
    assert [(e.src, e.dst, e.label, e.properties) for e in g.edges()] == [
        (e.src, e.dst, e.label, e.properties) for e in h.edges()
    ]
    assert dumps(h) == (nodes_text, edges_text)


def test_save_dir_roundtrip(tmp_path):
    g = load_dir(TAGCLASS_DIR)
    save_dir(g, tmp_path)
    assert dumps(load_dir(tmp_path)) == dumps(g)
