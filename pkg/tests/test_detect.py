import statistics

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arbor import (
    Cycle,
    Forest,
    MissingParent,
    MultiParent,
    PropertyGraph,
    TreeSpec,
    find_tree_candidates,
    forest_stats,
    generate_preset,
    infer_schema,
    verify_forest,
)
from arbor.detect import detect, sequence_hints, stats_table
from arbor.errors import ParseError, SiblingOrderError
from arbor.treespec import PARENT_TO_CHILD

from conftest import AGENT, ORGANISATION, PERSON, PLACE, THING
from oracles import is_forest_union_find

# -- TreeSpec -------------------------------------------------------------------


def test_spec_config_roundtrip():
    spec = TreeSpec({"CONTAINS"}, {"Account", "Statement"}, PARENT_TO_CHILD, "next_edge", "PRECEDES",
                    {"Statement"}, "ts")
    assert TreeSpec.from_config(spec.to_config()) == spec


def test_spec_defaults_and_validation():
    spec = TreeSpec({"A", "B"})
    assert spec.name == "A+B" and spec.node_labels is None
    with pytest.raises(ValueError):
        TreeSpec(set())
    with pytest.raises(ValueError):
        TreeSpec({"A"}, sibling_order="next_edge", order_key="A")
    with pytest.raises(ValueError):
        TreeSpec({"A"}, orientation="sideways")


def test_spec_config_errors():
    with pytest.raises(ParseError):
        TreeSpec.from_config("[other]\nx = 1\n")
    with pytest.raises(ParseError):
        TreeSpec.from_config("[tree]\nedge_labels =\n")


# -- schema inference -----------------------------------------------------------


def _place_graph():
    """Continent <- Country <- City, one label, edges child -> parent."""
    g = PropertyGraph()
    europe = g.add_node(["Place"], {"name": "Europe"})
    for c in range(2):
        country = g.add_node(["Place"])
        g.add_edge(country, europe, "IS_PART_OF")
        for _ in range(3):
            g.add_edge(g.add_node(["Place"]), country, "IS_PART_OF")
    return g


def _time_series(link_transactions=False):
    g = PropertyGraph()
    acc = g.add_node(["Account"])
    prev = None
    for _ in range(3):
        st_ = g.add_node(["Statement"])
        g.add_edge(acc, st_, "CONTAINS")
        if prev is not None:
            g.add_edge(prev, st_, "PRECEDES")
        prev = st_
        txs = [g.add_node(["Transaction"]) for _ in range(2)]
        for t in txs:
            g.add_edge(st_, t, "CONTAINS")
        if link_transactions:
            g.add_edge(txs[0], txs[1], "PRECEDES")
    return g


def test_schema_place_like():
    schema = infer_schema(_place_graph())
    (et,) = schema.edge_types
    assert et.self_typed
    assert et.out_card == (0, 1)
    assert et.in_card[0] == 0 and et.in_card[1] >= 2


def test_schema_time_series_child_side_exact_one():
    schema = infer_schema(_time_series())
    contains = [et for et in schema.edge_types if et.label == "CONTAINS"]
    assert len(contains) == 2
    assert all(et.in_card == (1, 1) for et in contains)


def test_schema_empty_graph():
    schema = infer_schema(PropertyGraph())
    assert schema.node_types == {} and schema.edge_types == []


def test_schema_cardinalities_are_tight():
    g = _time_series()
    schema = infer_schema(g)
    for et in schema.edge_types:
        outs = [sum(1 for e in g.out_edges(n.id, et.label) if g.node(g.edge(e).dst).labels == et.dst_type)
                for n in g.nodes() if n.labels == et.src_type]
        assert (min(outs), max(outs)) == et.out_card
    assert "CONTAINS" in schema.to_table()


def test_candidates_place_needs_instance_check():
    cands = find_tree_candidates(infer_schema(_place_graph()))
    assert len(cands) == 1
    assert cands[0].needs_instance_check and not cands[0].schema_sufficient
    assert isinstance(verify_forest(_place_graph(), cands[0].spec), Forest)


def test_candidates_time_series():
    g = _time_series()
    schema = infer_schema(g)
    cands = find_tree_candidates(schema)
    labels = [c.spec.edge_labels for c in cands]
    assert frozenset({"CONTAINS"}) in labels
    assert frozenset({"PRECEDES"}) not in labels
    contains = next(c for c in cands if c.spec.edge_labels == {"CONTAINS"})
    assert contains.schema_sufficient
    assert contains.spec.parent_required == {"Statement", "Transaction"}
    assert isinstance(verify_forest(g, contains.spec), Forest)
    assert [h.label for h in sequence_hints(schema)] == ["PRECEDES"]


def test_candidates_skip_two_parent_labels():
    g = PropertyGraph()
    a, b, c = (g.add_node(["N"]) for _ in range(3))
    g.add_edge(c, a, "DAG")
    g.add_edge(c, b, "DAG")
    # under child_to_parent c has two parents; under parent_to_child a/b are fine
    cands = find_tree_candidates(infer_schema(g))
    assert all(c.spec.orientation == PARENT_TO_CHILD for c in cands)


def test_schema_sufficient_candidates_verify():
    for name in ("WT1", "TF"):
        g, _ = generate_preset(name)
        for cand, result in detect(g):
            if cand.schema_sufficient:
                assert isinstance(result, Forest)


# -- verification ---------------------------------------------------------------


def test_verify_tagclass(tagclass):
    g, spec, ids = tagclass
    f = verify_forest(g, spec)
    assert isinstance(f, Forest)
    assert f.roots == [ids[THING]]
    assert f.children[ids[THING]] == [ids[PLACE], ids[AGENT]]


def test_verify_injected_cycle(tagclass):
    g, spec, ids = tagclass
    g.add_edge(ids[PERSON], ids[PLACE], "isSubclassOf")
    v = verify_forest(g, spec)
    assert isinstance(v, Cycle)
    w = v.witness
    assert w[0] == w[-1]
    assert set(w) == {ids[k] for k in (PERSON, PLACE, THING, AGENT)}


def test_verify_directed_cycle_through_root(tagclass):
    g, spec, ids = tagclass
    g.add_edge(ids[THING], ids[PERSON], "isSubclassOf")
    v = verify_forest(g, spec)
    assert isinstance(v, Cycle)
    assert set(v.witness) == {ids[THING], ids[AGENT], ids[PERSON]}


def test_verify_self_loop(tagclass):
    g, spec, ids = tagclass
    g.add_edge(ids[PLACE], ids[PLACE], "isSubclassOf")
    v = verify_forest(g, spec)
    assert isinstance(v, Cycle) and v.witness == (ids[PLACE], ids[PLACE])


def test_verify_second_parent(tagclass):
    g, spec, ids = tagclass
    x = g.add_node(["TagClass"], {"node_id": 999})
    g.add_edge(ids[PERSON], x, "isSubclassOf")
    v = verify_forest(g, spec)
    assert isinstance(v, MultiParent)
    assert v.node == ids[PERSON] and set(v.parents) == {ids[AGENT], x}


def test_verify_missing_parent():
    g = _time_series()
    spec = TreeSpec({"CONTAINS"}, {"Account", "Statement", "Transaction"}, PARENT_TO_CHILD,
                    parent_required={"Statement"})
    assert isinstance(verify_forest(g, spec), Forest)
    orphan = g.add_node(["Statement"])
    v = verify_forest(g, spec)
    assert isinstance(v, MissingParent) and v.node == orphan
    relaxed = TreeSpec({"CONTAINS"}, {"Account", "Statement", "Transaction"}, PARENT_TO_CHILD)
    assert isinstance(verify_forest(g, relaxed), Forest)


def test_sibling_order_by_property():
    g = PropertyGraph()
    root = g.add_node(["N"])
    kids = [g.add_node(["N"], {"rank": r}) for r in (3, 1, 2)]
    for k in kids:
        g.add_edge(k, root, "E")
    f = verify_forest(g, TreeSpec({"E"}, sibling_order="property", order_key="rank"))
    assert f.children[root] == [kids[1], kids[2], kids[0]]


def test_sibling_order_by_next_edge():
    g = _time_series(link_transactions=True)
    spec = TreeSpec({"CONTAINS"}, orientation=PARENT_TO_CHILD, sibling_order="next_edge", order_key="PRECEDES")
    f = verify_forest(g, spec)
    acc = f.roots[0]
    stmts = f.children[acc]
    for a, b in zip(stmts, stmts[1:]):
        assert b in g.neighbors(a, "PRECEDES", "out")


def test_sibling_order_broken_chain():
    g = _time_series(link_transactions=True)
    stmts = [n.id for n in g.nodes() if "Statement" in n.labels]
    g.add_edge(stmts[2], stmts[0], "PRECEDES")  # closes the chain into a ring
    spec = TreeSpec({"CONTAINS"}, orientation=PARENT_TO_CHILD, sibling_order="next_edge", order_key="PRECEDES")
    with pytest.raises(SiblingOrderError):
        verify_forest(g, spec)


@st.composite
def edge_lists(draw):
    n = draw(st.integers(1, 12))
    edges = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=16))
    return n, edges


@settings(max_examples=300, deadline=None)
@given(edge_lists())
def test_verify_matches_union_find(data):
    n, edges = data
    g = PropertyGraph()
    for _ in range(n):
        g.add_node(["N"])
    for s, d in edges:
        g.add_edge(s, d, "E")
    spec = TreeSpec({"E"}, {"N"})
    result = verify_forest(g, spec)
    assert isinstance(result, Forest) == is_forest_union_find(range(n), [(d, s) for s, d in edges])
    if isinstance(result, Cycle):
        links = {frozenset(e) for e in edges}
        w = result.witness
        assert w[0] == w[-1]
        assert all(frozenset((u, v)) in links for u, v in zip(w, w[1:]))


# -- statistics -----------------------------------------------------------------


def test_stats_single_node():
    g = PropertyGraph()
    g.add_node(["N"])
    s = forest_stats(verify_forest(g, TreeSpec({"E"}, {"N"})))
    assert s.n_trees == 1
    assert s.size == (1, 1, 1) and s.depth == (0, 0, 0)
    assert s.fanout is None


def test_stats_tagclass(tagclass):
    g, spec, _ = tagclass
    s = forest_stats(verify_forest(g, spec))
    assert s.n_trees == 1 and s.size[:2] == (5, 5) and s.depth[:2] == (2, 2)
    assert s.fanout == (2, 2, 2)
    assert "tagclass" in stats_table([(spec.name, s)], g.node_count())


def test_stats_wt1():
    g, spec = generate_preset("WT1")
    f = verify_forest(g, spec)
    s = forest_stats(f)
    assert s.size[:2] == (100, 100)
    assert 4 <= s.fanout[0] and s.fanout[1] <= 6


def test_stats_medians_match_sort():
    g, spec = generate_preset("TF")
    f = verify_forest(g, spec)
    s = forest_stats(f)
    sizes = sorted(len(f.subtree(r)) for r in f.roots)
    n = len(sizes)
    naive = sizes[n // 2] if n % 2 else (sizes[n // 2 - 1] + sizes[n // 2]) / 2
    assert s.size == (sizes[0], sizes[-1], naive)
    assert s.n_trees == 11 and s.n_nodes == 40
    fan = [len(f.children[n]) for n in f.nodes() if f.children.get(n)]
    assert s.fanout[2] == statistics.median(sorted(fan))
