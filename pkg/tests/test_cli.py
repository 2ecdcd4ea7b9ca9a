import shutil
import subprocess
import sys

import pytest

from arbor.cli import main
from arbor.graph import load_dir
from arbor.treespec import load_spec

from conftest import DATA, TAGCLASS_DIR


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_gen_preset(tmp_path, capsys):
    code, out, _ = run(capsys, "gen", "--preset", "WT1", "--out", tmp_path / "wt1")
    assert code == 0 and "100 nodes" in out
    assert sorted(p.name for p in (tmp_path / "wt1").iterdir()) == ["edges.csv", "nodes.csv", "tree.cfg"]
    assert load_dir(tmp_path / "wt1").edge_count() == 99
    assert load_spec(tmp_path / "wt1" / "tree.cfg").name == "WT1"


def test_gen_custom_and_errors(tmp_path, capsys):
    code, _, _ = run(capsys, "gen", "--shape", "forest", "--nodes", 20, "--trees", 4, "--out", tmp_path / "f")
    assert code == 0
    code, out, _ = run(capsys, "verify", "--graph", tmp_path / "f")
    assert code == 0 and out.startswith("ok: 4 tree(s), 20 node(s)")
    assert run(capsys, "gen", "--out", tmp_path / "x")[0] == 1
    assert run(capsys, "gen", "--preset", "WT9", "--out", tmp_path / "x")[0] == 1
    code, _, err = run(capsys, "gen", "--shape", "random", "--nodes", 5, "--fanout-min", 2, "--out", tmp_path / "x")
    assert code == 1 and "fanout_min" in err


def test_index_matches_golden(tmp_path, capsys):
    golden = (DATA / "tagclass_index.csv").read_text()
    code, out, _ = run(capsys, "index", "--graph", TAGCLASS_DIR)
    assert code == 0 and out == golden
    target = tmp_path / "idx.csv"
    assert run(capsys, "index", "--graph", TAGCLASS_DIR, "--codec", "dewey", "--out", target)[0] == 0
    assert target.read_text() == golden


def test_query_upward_edges(capsys):
    code, out, _ = run(capsys, "query", "--graph", TAGCLASS_DIR, "MATCH (n)<-[*]-(m) WHERE n.node_id = 240 RETURN m")
    assert code == 0 and sorted(out.split()) == ["212", "302"]


@pytest.fixture
def downward(tmp_path):
    """The TagClass fixture with edges flipped to parent -> child."""
    d = tmp_path / "down"
    d.mkdir()
    shutil.copy(TAGCLASS_DIR / "nodes.csv", d / "nodes.csv")
    lines = (TAGCLASS_DIR / "edges.csv").read_text().splitlines()
    header, rows = lines[0], lines[1:]
    flipped = [",".join([r.split(",")[1], r.split(",")[0], *r.split(",")[2:]]) for r in rows]
    (d / "edges.csv").write_text("\n".join([header, *flipped]) + "\n")
    (d / "tree.cfg").write_text(
        (TAGCLASS_DIR / "tree.cfg").read_text().replace("child_to_parent", "parent_to_child")
    )
    return d


def test_query_downward_edges(downward, capsys):
    text = "MATCH (n)-[*]->(m) WHERE n.node_id = 1 RETURN m"
    code, out, err = run(capsys, "query", "--graph", downward, "--explain", text)
    assert code == 0 and sorted(out.split()) == ["212", "240", "302", "304"]
    assert "index_prepost" in err and "n.pre < m.pre AND m.pre < n.post" in err
    code, out2, err = run(capsys, "query", "--graph", downward, "--no-index", "--explain", text)
    assert sorted(out2.split()) == sorted(out.split()) and "baseline_traversal" in err


def test_query_syntax_error(capsys):
    code, _, err = run(capsys, "query", "--graph", TAGCLASS_DIR, "MATCH (n)-[*]->(m")
    assert code == 1 and "position 17" in err


def test_verify_reports_violation(tmp_path, capsys):
    d = tmp_path / "bad"
    shutil.copytree(TAGCLASS_DIR, d)
    with open(d / "edges.csv", "a") as fh:
        fh.write("1,212,isSubclassOf\n")
    code, out, _ = run(capsys, "verify", "--graph", d)
    assert code == 1 and out.startswith("violation:") and "cycle" in out
    assert run(capsys, "index", "--graph", d)[0] == 1


def test_stats_and_schema(capsys):
    code, out, _ = run(capsys, "stats", "--graph", TAGCLASS_DIR)
    assert code == 0 and "tagclass" in out
    code, out, _ = run(capsys, "schema", "--graph", TAGCLASS_DIR)
    assert code == 0 and "isSubclassOf" in out and "candidate" in out


def test_usage_errors(tmp_path, capsys):
    assert run(capsys, "frobnicate")[0] == 1
    assert run(capsys, "verify")[0] == 1
    assert run(capsys, "verify", "--graph", tmp_path / "missing")[0] == 1
    assert run(capsys, "verify", "--graph", TAGCLASS_DIR, "--spec", tmp_path / "nope.cfg")[0] == 1
    assert run(capsys, "--help")[0] == 0


def test_bench_command(tmp_path, capsys):
    cfg = tmp_path / "bench.cfg"
    cfg.write_text("[bench]\ngraphs = WT1\nqueries = desc\nplans = index_prepost, index_dewey\n"
                   "repetitions = 3\nmaintenance = append_last\n")
    out = tmp_path / "report.csv"
    code, stdout, _ = run(capsys, "bench", cfg, "--out", out)
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("graph,query,plan,median_ms") and len(lines) == 4
    assert "append_last" in stdout
    code, stdout, _ = run(capsys, "bench", cfg, "--format", "table")
    assert code == 0 and "speedup" in stdout.splitlines()[0]
    bad = tmp_path / "bad.cfg"
    bad.write_text("[bench]\n")
    assert run(capsys, "bench", bad)[0] == 1


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "arbor", "verify", "--graph", str(TAGCLASS_DIR)],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("ok: 1 tree(s), 5 node(s)")
