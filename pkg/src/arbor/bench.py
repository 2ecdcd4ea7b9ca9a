"""Benchmark harness: median-of-N timings, speedups and CSV/table reports.

Each case is executed ``repetitions`` times in series and summarised by its
median. The timer starts after the start node is resolved and stops when the
result is materialised; graph loading and index building never count.

Speedup of a case is ``baseline_median / case_median`` for the same graph,
query and start. Both medians are taken from the rounded millisecond values
written to the report, so the column can be recomputed from the CSV itself.
When the baseline timed out its median is the timeout, and the speedup is a
lower bound (flag ``≥``). A median that rounds to zero is clamped to the
report resolution, which also makes the speedup a lower bound. When the
measured plan timed out while its baseline did not, the speedup is an upper
bound (flag ``≤``).
"""

from __future__ import annotations

import configparser
import csv
import io
import random
import statistics
import time
from dataclasses import dataclass, field
from pathlib import Path

from .datagen import generate_preset, presets
from .engine import PLANS, QUERIES, TreeEngine
from .errors import ArborError, InfeasibleConfig, ParseError, QueryTimeout
from .graph import NodeId, PropertyGraph, load_dir
from .treespec import TreeSpec, load_spec

REPORT_COLUMNS = (
    "graph", "query", "plan", "median_ms", "min_ms", "max_ms",
    "result_count", "speedup", "lower_bound_flag",
)
MAINTENANCE_COLUMNS = (
    "graph", "op", "node", "elapsed_ms", "dewey_relabeled", "prepost_relabeled", "added", "removed",
)
MAINTENANCE_OPS = ("insert_first", "append_last", "delete_first", "detach_first")
MS_DIGITS = 3  # report resolution: one microsecond
RESOLUTION_MS = 10.0 ** -MS_DIGITS
DEFAULT_TIMEOUT = 60.0


@dataclass(frozen=True)
class BenchCase:
    graph: str
    query: str
    plan: str
    start: str = "root"  # root | random | random:SEED | key:VALUE
    repetitions: int = 5
    timeout: float = DEFAULT_TIMEOUT
    baseline: str = "baseline_join"
    seed: int = 0

    def __post_init__(self):
        if self.query not in QUERIES:
            raise InfeasibleConfig(f"query must be one of {QUERIES}, got {self.query!r}")
        for p in (self.plan, self.baseline):
            if p not in PLANS:
                raise InfeasibleConfig(f"plan must be one of {PLANS}, got {p!r}")
        if self.repetitions < 1 or self.repetitions % 2 == 0:
            raise InfeasibleConfig("repetitions must be a positive odd number")
        if self.timeout <= 0:
            raise InfeasibleConfig("timeout must be positive")
        kind = self.start.split(":", 1)[0]
        if kind not in ("root", "random", "key") or (kind == "key" and ":" not in self.start):
            raise InfeasibleConfig(f"bad start rule {self.start!r}")


@dataclass
class CaseResult:
    case: BenchCase
    median_ms: float = 0.0
    min_ms: float = 0.0
    max_ms: float = 0.0
    timed_out: bool = False
    result_count: int | None = None
    speedup: float | None = None
    flag: str = ""
    runs_ms: list[float] = field(default_factory=list)
    error: str | None = None

    def row(self) -> dict[str, str]:
        c = self.case
        return {
            "graph": c.graph,
            "query": c.query,
            "plan": c.plan,
            "median_ms": f"{self.median_ms:.{MS_DIGITS}f}",
            "min_ms": f"{self.min_ms:.{MS_DIGITS}f}",
            "max_ms": f"{self.max_ms:.{MS_DIGITS}f}",
            "result_count": "" if self.result_count is None else str(self.result_count),
            "speedup": "" if self.speedup is None else f"{self.speedup:.6g}",
            "lower_bound_flag": self.flag,
        }


@dataclass
class MaintenanceRow:
    graph: str
    op: str
    node: str
    elapsed_ms: float
    dewey_relabeled: int
    prepost_relabeled: int
    added: int
    removed: int


@dataclass
class BenchReport:
    results: list[CaseResult] = field(default_factory=list)
    maintenance: list[MaintenanceRow] = field(default_factory=list)


@dataclass
class Workload:
    """A loaded graph with its tree spec registered and indexed."""

    name: str
    engine: TreeEngine
    spec: TreeSpec

    @classmethod
    def build(cls, name: str, graph: PropertyGraph, spec: TreeSpec) -> "Workload":
        engine = TreeEngine(graph)
        engine.register(spec)
        return cls(name, engine, spec)


def load_workload(name: str) -> Workload:
    """A preset name (WT1 ... TF) or a directory holding nodes.csv, edges.csv, tree.cfg."""
    if name in presets():
        g, spec = generate_preset(name)
        return Workload.build(name, g, spec)
    path = Path(name)
    if not path.is_dir():
        raise InfeasibleConfig(f"{name!r} is neither a preset nor a graph directory")
    return Workload.build(path.name, load_dir(path), load_spec(path / "tree.cfg"))


# -- start nodes ---------------------------------------------------------------


def resolve_start(w: Workload, case: BenchCase) -> tuple[NodeId, NodeId | None]:
    """Start node (and partner for ``ad``) for a case; runs outside the timer.

    The ``ad`` partner is the last node in pre order of the start's tree,
    a deepest-rightmost descendant when the start is a root.
    """
    reg = w.engine.get(w.spec)
    kind, _, arg = case.start.partition(":")
    if kind == "root":
        start = reg.forest.roots[0]
    elif kind == "key":
        value: object = arg
        try:
            value = int(arg)
        except ValueError:
            pass
        start = w.engine.graph.lookup(value)
    else:
        rng = random.Random(int(arg) if arg else case.seed)
        start = rng.choice(sorted(reg.scope))
    other = None
    if case.query == "ad":
        if kind == "random":
            other = rng.choice(sorted(reg.scope))
        else:
            other = reg.index.path_nodes(reg.index.tree_of(start))[-1]
    return start, other


# -- running -------------------------------------------------------------------


def _round_ms(x: float) -> float:
    return round(x, MS_DIGITS)


def run_case(w: Workload, case: BenchCase) -> CaseResult:
    res = CaseResult(case)
    try:
        start, other = resolve_start(w, case)
    except ArborError as e:
        res.error = str(e)
        return res
    for _ in range(case.repetitions):
        deadline = time.perf_counter() + case.timeout
        try:
            r = w.engine.run(case.query, w.spec, case.plan, start, other, deadline)
        except QueryTimeout:
            res.timed_out = True
            break
        res.runs_ms.append(r.elapsed * 1000.0)
        res.result_count = r.count
    if res.timed_out:
        res.median_ms = res.min_ms = res.max_ms = _round_ms(case.timeout * 1000.0)
    else:
        res.median_ms = _round_ms(statistics.median(res.runs_ms))
        res.min_ms = _round_ms(min(res.runs_ms))
        res.max_ms = _round_ms(max(res.runs_ms))
    return res


def _assign_speedups(results: list[CaseResult]) -> None:
    by_key = {}
    for r in results:
        c = r.case
        if c.plan == c.baseline:
            by_key[(c.graph, c.query, c.start, c.baseline)] = r
    for r in results:
        c = r.case
        base = by_key.get((c.graph, c.query, c.start, c.baseline))
        if base is None or base.error or r.error:
            continue
        if r is base:
            r.speedup, r.flag = 1.0, "≥" if r.timed_out else ""
            continue
        if base.timed_out and r.timed_out:
            continue  # no information either way
        denom = r.median_ms
        lower = base.timed_out
        if denom <= 0.0:
            denom, lower = RESOLUTION_MS, True
        r.speedup = base.median_ms / denom
        r.flag = "≥" if lower else ("≤" if r.timed_out else "")


def run_suite(cases: list[BenchCase], workloads: dict[str, Workload]) -> BenchReport:
    """Run every case serially, then attach speedups against each case's baseline."""
    report = BenchReport()
    for case in cases:
        w = workloads.get(case.graph)
        if w is None:
            report.results.append(CaseResult(case, error=f"graph {case.graph!r} not loaded"))
            continue
        report.results.append(run_case(w, case))
    _assign_speedups(report.results)
    return report


def run_maintenance(w: Workload, ops=MAINTENANCE_OPS) -> list[MaintenanceRow]:
    """Time single update operations on a private copy of ``w``'s graph.

    ``insert_first`` adds a node before the root's first child (worst case for
    Dewey), ``append_last`` adds a last child under the pre-order-maximal node
    (no relabels), ``delete_first``/``detach_first`` act on the root's first
    child subtree.
    """
    rows = []
    for op in ops:
        if op not in MAINTENANCE_OPS:
            raise InfeasibleConfig(f"maintenance op must be one of {MAINTENANCE_OPS}, got {op!r}")
        mine = Workload.build(w.name, w.engine.graph.copy(), w.spec)
        eng, reg = mine.engine, mine.engine.get(mine.spec)
        g = eng.graph
        root = reg.forest.roots[0]
        first = (reg.forest.children.get(root) or [None])[0]
        if op in ("insert_first", "append_last"):
            node = g.add_node(g.node(root).labels)
            if op == "insert_first":
                parent, before = root, first
            else:
                parent, before = reg.index.path_nodes(root)[-1], None
            t0 = time.perf_counter_ns()
            rep = eng.insert_node(mine.spec, parent, node, before)
        else:
            if first is None:
                continue
            node = first
            key = g.key(node)
            t0 = time.perf_counter_ns()
            rep = eng.delete_subtree(mine.spec, node, "remove" if op == "delete_first" else "detach")
        elapsed = (time.perf_counter_ns() - t0) / 1e6
        label = str(g.key(node)) if node in g else str(key)
        rows.append(MaintenanceRow(w.name, op, label, _round_ms(elapsed), rep.dewey_relabeled,
                                   rep.prepost_relabeled, rep.added, rep.removed))
    return rows


# -- reports -------------------------------------------------------------------


def emit_report(report: BenchReport, fmt: str = "csv") -> str:
    rows = [r.row() for r in report.results]
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=REPORT_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        return buf.getvalue()
    if fmt != "table":
        raise ValueError("format must be 'csv' or 'table'")
    cells = [list(REPORT_COLUMNS)] + [[r[c] for c in REPORT_COLUMNS] for r in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(REPORT_COLUMNS))]
    lines = ["  ".join(v.ljust(wd) for v, wd in zip(row, widths)).rstrip() for row in cells]
    lines.insert(1, "  ".join("-" * wd for wd in widths))
    errors = [f"! {r.case.graph}/{r.case.query}/{r.case.plan}: {r.error}" for r in report.results if r.error]
    return "\n".join(lines + errors) + "\n"


def emit_maintenance(rows: list[MaintenanceRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(MAINTENANCE_COLUMNS)
    for r in rows:
        w.writerow([r.graph, r.op, r.node, f"{r.elapsed_ms:.{MS_DIGITS}f}", r.dewey_relabeled,
                    r.prepost_relabeled, r.added, r.removed])
    return buf.getvalue()


def parse_report(text: str) -> list[dict]:
    """Read a report CSV back, with numbers parsed and blanks as None."""
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        rec: dict = dict(row)
        for k in ("median_ms", "min_ms", "max_ms", "speedup"):
            rec[k] = float(row[k]) if row[k] else None
        rec["result_count"] = int(row["result_count"]) if row["result_count"] else None
        out.append(rec)
    return out


# -- config --------------------------------------------------------------------


@dataclass
class BenchConfig:
    graphs: list[str]
    queries: list[str] = field(default_factory=lambda: ["desc", "leaf", "ad"])
    plans: list[str] = field(default_factory=lambda: list(PLANS))
    repetitions: int = 5
    timeout: float = DEFAULT_TIMEOUT
    seed: int = 0
    start: str = "root"
    baseline: str = "baseline_join"
    maintenance: list[str] = field(default_factory=list)

    def cases(self) -> list[BenchCase]:
        plans = list(self.plans)
        if self.baseline not in plans:
            plans.insert(0, self.baseline)
        return [
            BenchCase(g, q, p, self.start, self.repetitions, self.timeout, self.baseline, self.seed)
            for g in self.graphs
            for q in self.queries
            for p in plans
        ]


def _list(value: str) -> list[str]:
    return [v.strip() for v in value.replace("\n", ",").split(",") if v.strip()]


def parse_config(text: str) -> BenchConfig:
    """Parse a ``[bench]`` section of key = value lines."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ParseError(str(e)) from None
    if not cp.has_section("bench"):
        raise ParseError("missing [bench] section")
    s = cp["bench"]
    unknown = set(s) - {"graphs", "queries", "plans", "repetitions", "timeout", "seed", "start", "baseline", "maintenance"}
    if unknown:
        raise ParseError(f"unknown key(s) {', '.join(sorted(unknown))}")
    if "graphs" not in s:
        raise ParseError("missing 'graphs' key")
    try:
        cfg = BenchConfig(
            graphs=_list(s["graphs"]),
            queries=_list(s.get("queries", "desc, leaf, ad")),
            plans=_list(s.get("plans", ", ".join(PLANS))),
            repetitions=s.getint("repetitions", 5),
            timeout=s.getfloat("timeout", DEFAULT_TIMEOUT),
            seed=s.getint("seed", 0),
            start=s.get("start", "root").strip(),
            baseline=s.get("baseline", "baseline_join").strip(),
            maintenance=_list(s.get("maintenance", "")),
        )
    except ValueError as e:
        raise ParseError(str(e)) from None
    for op in cfg.maintenance:
        if op not in MAINTENANCE_OPS:
            raise ParseError(f"unknown maintenance op {op!r}")
    cfg.cases()  # validates query/plan names and numeric bounds
    return cfg


def run_config(cfg: BenchConfig, timeout: float | None = None) -> BenchReport:
    if timeout is not None:
        cfg.timeout = timeout
    workloads = {name: load_workload(name) for name in cfg.graphs}
    report = run_suite(cfg.cases(), workloads)
    if cfg.maintenance:
        for name in cfg.graphs:
            report.maintenance.extend(run_maintenance(workloads[name], cfg.maintenance))
    return report
