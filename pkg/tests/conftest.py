from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from arbor import TreeEngine, load_dir, load_spec  # noqa: E402

DATA = Path(__file__).parent / "data"
TAGCLASS_DIR = DATA / "tagclass"

# node_id keys of the five TagClass nodes
THING, PLACE, AGENT, ORGANISATION, PERSON = 1, 304, 240, 302, 212


@pytest.fixture
def tagclass():
    """(graph, spec, key -> internal id) for the 5-node TagClass hierarchy."""
    g = load_dir(TAGCLASS_DIR)
    spec = load_spec(TAGCLASS_DIR / "tree.cfg")
    ids = {g.key(n): n for n in g.node_ids()}
    return g, spec, ids


@pytest.fixture
def tagclass_engine(tagclass):
    g, spec, ids = tagclass
    engine = TreeEngine(g)
    engine.register(spec)
    return engine, spec, ids


# -- acceptance summary -------------------------------------------------------

_criteria: dict[str, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(num, title): acceptance criterion a test belongs to")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    num, title = marker.args
    entry = _criteria.setdefault(num, {"title": title, "ok": True, "ran": False, "secs": 0.0, "tests": 0})
    if rep.when == "call":
        entry["ran"] = True
        entry["tests"] += 1
        entry["secs"] += rep.duration
    if rep.failed or rep.skipped:
        entry["ok"] = False


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for num in sorted(_criteria):
        e = _criteria[num]
        status = "PASS" if e["ok"] and e["ran"] else "FAIL"
        tr.write_line(f"AC{num} {status}  {e['title']}  ({e['tests']} test(s), {e['secs']:.1f}s)")
