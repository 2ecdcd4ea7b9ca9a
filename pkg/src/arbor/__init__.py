"""Tree-shaped substructures in property graphs.

Detect forests inside a property graph, label them with PrePost and Dewey
structural encodings, and answer ancestor/descendant/leaf queries either by
range scans over those labels or by traversal/join baselines.
"""

from .bench import BenchCase, BenchReport, emit_report, run_suite
from .datagen import GenConfig, generate, generate_preset, presets, random_tree
from .detect import (
    Cycle,
    Forest,
    MissingParent,
    MultiParent,
    SchemaGraph,
    TreeCandidate,
    Violation,
    detect,
    find_tree_candidates,
    forest_stats,
    infer_schema,
    verify_forest,
)
from .engine import PLANS, QUERIES, QueryResult, TreeEngine
from .errors import *  # noqa: F401,F403
from .graph import PropertyGraph, load_dir, load_edge_list, save_dir, save_edge_list
from .index import IndexEntry, MaintenanceReport, StructuralIndex, build_index
from .pattern import PatternQuery, RewrittenPlan, execute, parse, rewrite, run_query
from .treespec import TreeSpec, load_spec, save_spec

__version__ = "0.1.0"
