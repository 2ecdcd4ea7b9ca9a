"""Command-line front end: ``arbor gen|stats|schema|index|verify|query|bench``.

Exit codes: 0 on success, 1 on user error (bad flags, bad input files,
invalid queries, rejected data), 2 on internal error.
"""

from __future__ import annotations

import argparse
import sys
import traceback
from pathlib import Path

from . import bench as bench_mod
from .datagen import SHAPES, GenConfig, generate, presets
from .detect import Forest, detect, forest_stats, infer_schema, sequence_hints, stats_table, type_name, verify_forest
from .engine import TreeEngine
from .errors import ArborError
from .graph import load_dir, save_dir
from .index import build_index
from .pattern import execute, parse, rewrite
from .treespec import load_spec, save_spec

SPEC_FILE = "tree.cfg"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _load(args):
    graph_dir = Path(args.graph)
    if not graph_dir.is_dir():
        raise UsageError(f"graph directory {graph_dir} not found")
    g = load_dir(graph_dir)
    spec_path = Path(args.spec) if getattr(args, "spec", None) else graph_dir / SPEC_FILE
    spec = load_spec(spec_path) if spec_path.exists() else None
    if spec is None and getattr(args, "spec", None):
        raise UsageError(f"spec file {spec_path} not found")
    return g, spec


def _need_spec(spec):
    if spec is None:
        raise UsageError(f"no tree spec: pass --spec or put {SPEC_FILE} next to the graph")
    return spec


def cmd_gen(args) -> int:
    if args.preset:
        if args.preset not in presets():
            raise UsageError(f"unknown preset {args.preset!r}; choose from {', '.join(presets())}")
        config = presets()[args.preset]
        name = args.preset
    else:
        if args.shape is None or args.nodes is None:
            raise UsageError("gen needs --preset or --shape and --nodes")
        config = GenConfig(args.shape, args.nodes, args.fanout_min, args.fanout_max, args.trees, args.seed)
        name = args.name
    g, spec = generate(config, name)
    out = Path(args.out)
    save_dir(g, out)
    save_spec(spec, out / SPEC_FILE)
    print(f"wrote {g.node_count()} nodes, {g.edge_count()} edges to {out}")
    return 0


def _verified(g, spec) -> Forest:
    result = verify_forest(g, spec)
    if not isinstance(result, Forest):
        raise ArborError(f"not a forest: {result}")
    return result


def cmd_stats(args) -> int:
    g, spec = _load(args)
    f = _verified(g, _need_spec(spec))
    print(stats_table([(spec.name, forest_stats(f))], g.node_count()), end="")
    return 0


def cmd_schema(args) -> int:
    g, _ = _load(args)
    schema = infer_schema(g)
    print(schema.to_table(), end="")
    for hint in sequence_hints(schema):
        print(f"sequence hint: {hint.label} on {type_name(hint.node_type)}")
    for cand, result in detect(g):
        status = "forest" if isinstance(result, Forest) else f"rejected ({result})"
        flag = "schema_sufficient" if cand.schema_sufficient else "needs_instance_check"
        print(f"candidate {cand.spec.name}: {flag}, {status}")
    return 0


def cmd_index(args) -> int:
    g, spec = _load(args)
    f = _verified(g, _need_spec(spec))
    idx = build_index(f)
    if args.out == "-":
        idx.export_csv(sys.stdout)
    else:
        with open(args.out, "w", newline="") as fh:
            idx.export_csv(fh)
    return 0


def cmd_verify(args) -> int:
    g, spec = _load(args)
    result = verify_forest(g, _need_spec(spec))
    if isinstance(result, Forest):
        print(f"ok: {len(result.roots)} tree(s), {len(result)} node(s)")
        return 0
    print(f"violation: {result}")
    return 1


def cmd_query(args) -> int:
    g, spec = _load(args)
    engine = TreeEngine(g)
    if spec is not None and not args.no_index:
        engine.register(spec)
    plan = rewrite(parse(args.text), engine, args.codec)
    if args.explain:
        print(f"# plan: {plan.plan} ({plan.note})", file=sys.stderr)
        if plan.uses_index:
            print(f"# {plan.to_cypher()}", file=sys.stderr)
    result = execute(plan, engine)
    for row in result.rows:
        print(",".join(str(g.key(n)) for n in row))
    return 0


def cmd_bench(args) -> int:
    cfg = bench_mod.parse_config(Path(args.config).read_text())
    report = bench_mod.run_config(cfg, args.timeout)
    text = bench_mod.emit_report(report, args.format)
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(text, end="")
    if report.maintenance:
        mtext = bench_mod.emit_maintenance(report.maintenance)
        if args.maintenance_out:
            Path(args.maintenance_out).write_text(mtext)
        else:
            print(mtext, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="arbor", description="Tree substructures in property graphs: detect, index, query, bench.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def graph_args(sp, spec=True):
        sp.add_argument("--graph", required=True, help="directory with nodes.csv and edges.csv")
        if spec:
            sp.add_argument("--spec", help=f"tree spec file (default: GRAPH/{SPEC_FILE})")

    sp = sub.add_parser("gen", help="generate a synthetic tree or forest")
    sp.add_argument("--preset", help=", ".join(presets()))
    sp.add_argument("--shape", choices=SHAPES)
    sp.add_argument("--nodes", type=int)
    sp.add_argument("--fanout-min", type=int, default=1)
    sp.add_argument("--fanout-max", type=int, default=3)
    sp.add_argument("--trees", type=int, default=1)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--name", default="synthetic")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("stats", help="size/depth/fanout statistics of a forest")
    graph_args(sp)
    sp.set_defaults(func=cmd_stats)

    sp = sub.add_parser("schema", help="infer the schema and list tree candidates")
    graph_args(sp, spec=False)
    sp.set_defaults(func=cmd_schema)

    sp = sub.add_parser("index", help="build the structural index and export it as CSV")
    graph_args(sp)
    sp.add_argument("--codec", choices=("prepost", "dewey"), default="prepost",
                    help="accepted for symmetry; the export always carries both encodings")
    sp.add_argument("--out", default="-")
    sp.set_defaults(func=cmd_index)

    sp = sub.add_parser("verify", help="check that a tree spec describes a forest")
    graph_args(sp)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("query", help="run one pattern query")
    graph_args(sp)
    sp.add_argument("text")
    sp.add_argument("--codec", choices=("prepost", "dewey"), default="prepost")
    sp.add_argument("--no-index", action="store_true", help="force the baseline plan")
    sp.add_argument("--explain", action="store_true", help="print the chosen plan to stderr")
    sp.set_defaults(func=cmd_query)

    sp = sub.add_parser("bench", help="run a benchmark suite from a config file")
    sp.add_argument("config")
    sp.add_argument("--format", choices=("csv", "table"), default="csv")
    sp.add_argument("--timeout", type=float, help="per-query timeout in seconds (overrides the config)")
    sp.add_argument("--out")
    sp.add_argument("--maintenance-out")
    sp.set_defaults(func=cmd_bench)
    return p


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as e:
        print(e, file=sys.stderr)
        return 1
    except (ArborError, OSError) as e:
        print(f"arbor: error: {e}", file=sys.stderr)
        return 1
    except SystemExit as e:  # --help
        return int(e.code or 0)
    except Exception:
        traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(main())
