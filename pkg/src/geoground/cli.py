"""Command-line front door.

Subcommands wire the library into reproducible batch workflows:

    generate    sample, deduce, and verify problem instances (JSONL out)
    close       deduction closure + derivation graph of a DSL file
    extract     minimal premises for a goal in a DSL file
    verify      re-verify instances from a JSONL file
    export-dot  DOT rendering of an instance trace or a full closure
    ground      run the recursive grounding pipeline on a scene
    index       build a declaration index from a corpus directory
    search      ranked query against a saved index
    report      CSV + figures for a JSONL instance file

All randomness flows from --seed, split per sub-task by hashing.  Exit
codes: 0 success, 1 verification failure, 2 exhaustion or budget error,
3 usage/config error, 4 I/O error.  Logs go to stderr, data to stdout or
files, never interleaved.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from geoground import construct, deduce, index as index_mod, instance as instance_mod
from geoground.construct import Limits, parse_program
from geoground.deduce import closure, graph_to_dot, load_default_rules, parse_rules
from geoground.geom import Tolerance, parse_fact
from geoground.ground import (
    DepthBudgetExceeded,
    EngineConfig,
    NodeBudgetExceeded,
    default_oracles,
    ground_to_dot,
    load_bundled_scene,
    bundled_scene_names,
    parse_scene,
    run_pipeline,
)
from geoground.ground.engine import report_to_json
from geoground.instance import (
    GenerationExhausted,
    Rejected,
    Verified,
    derive_seed,
    generate,
    instance_from_json,
    instance_to_json,
    verify_numeric,
)

log = logging.getLogger("geoground")

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_EXHAUSTED = 2
EXIT_USAGE = 3
EXIT_IO = 4

_REASON_NAMES = {
    "degenerate_step": "DegenerateStep",
    "fact_violated": "FactViolated",
    "resamples_exhausted": "ResamplesExhausted",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # usage errors exit 3, not argparse's 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _read_config_file(path: str) -> Dict[str, str]:
    values: Dict[str, str] = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CliError(f"cannot read config file: {exc}", EXIT_IO) from exc
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(f"{path}:{line_no}: expected 'key = value'", EXIT_USAGE)
        key, value = (s.strip() for s in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


def build_parser() -> _Parser:
    parser = _Parser(prog="geoground", description=__doc__.split("\n\n")[0])
    parser.add_argument("--config", help="key = value config file; flags override it")
    sub = parser.add_subparsers(dest="command", required=True)
    parser.subcommands = {}

    gen = sub.add_parser("generate", help="emit verified instances as JSONL")
    gen.add_argument("--seed", type=int, required=True)
    gen.add_argument("--count", type=int, required=True)
    gen.add_argument("--out", required=True)
    gen.add_argument("--max-steps", type=int, default=construct.DEFAULT_LIMITS.max_steps)
    gen.add_argument("--max-objects", type=int, default=construct.DEFAULT_LIMITS.max_objects)
    gen.add_argument("--max-resamples", type=int, default=construct.DEFAULT_LIMITS.max_resamples)
    gen.add_argument("--space-dim", type=int, choices=(2, 3), default=2)
    gen.add_argument("--retry-budget", type=int, default=instance_mod.DEFAULT_RETRY_BUDGET)
    gen.add_argument("--jobs", type=int, default=1)
    gen.add_argument("--report-dir", help="also render CSV + figures into this directory")

    close_p = sub.add_parser("close", help="closure facts + derivation graph of a DSL file")
    close_p.add_argument("--dsl", required=True)
    close_p.add_argument("--rules", help="rule file overriding the bundled set")
    close_p.add_argument("--out", help="write JSON here instead of text to stdout")

    ext = sub.add_parser("extract", help="premises + trace for a goal")
    ext.add_argument("--dsl", required=True)
    ext.add_argument("--goal", help="fact text, e.g. 'cong(o,a,o,c)'; defaults to the DSL '?' clause")
    ext.add_argument("--rules")
    ext.add_argument("--out")

    ver = sub.add_parser("verify", help="re-verify instances from a JSONL file")
    ver.add_argument("--instance", required=True)
    ver.add_argument("--fresh-seed", type=int, default=0, help="re-verification seed offset")

    dot = sub.add_parser("export-dot", help="DOT graph for an instance trace or DSL closure")
    dot.add_argument("--in", dest="infile", help="JSONL instance file (first line)")
    dot.add_argument("--dsl", help="render the full closure graph of a DSL file")
    dot.add_argument("--rules")
    dot.add_argument("--out")

    grd = sub.add_parser("ground", help="run the grounding pipeline on a scene")
    grd.add_argument("--scene", required=True, help="scene file path or bundled scene name")
    grd.add_argument("--max-nodes", type=int, default=100)
    grd.add_argument("--max-depth", type=int, default=6)
    grd.add_argument("--k", type=int, default=10)
    grd.add_argument("--passes", type=int, default=1, help="composition attempts per node")
    grd.add_argument("--corpus", help="declaration corpus directory (default: bundled)")
    grd.add_argument("--grounding-rules", help="decomposition rule file (default: bundled)")
    grd.add_argument("--out", help="write the report JSON here instead of stdout")
    grd.add_argument("--dot", help="write the grounding graph as DOT")
    grd.add_argument("--report-dir", help="render CSV + figures into this directory")

    idx = sub.add_parser("index", help="build a declaration index")
    idx.add_argument("--corpus", required=True)
    idx.add_argument("--out", required=True)

    srch = sub.add_parser("search", help="query a saved index")
    srch.add_argument("--index", required=True)
    srch.add_argument("--query", required=True)
    srch.add_argument("--k", type=int, default=index_mod.DEFAULT_K)

    rep = sub.add_parser("report", help="CSV + figures for a JSONL instance file")
    rep.add_argument("--instances", required=True)
    rep.add_argument("--out", required=True)
    rep.add_argument("--max-drawings", type=int, default=8)

    parser.subcommands = {
        "generate": gen, "close": close_p, "extract": ext, "verify": ver,
        "export-dot": dot, "ground": grd, "index": idx, "search": srch, "report": rep,
    }
    return parser


# provenance covers the semantic parameters; pure I/O destinations and
# parallelism never influence the produced data
_NON_SEMANTIC = {"command", "config", "out", "report_dir", "dot", "jobs", "instances"}


def _resolved_config(args: argparse.Namespace) -> Dict[str, object]:
    return {
        k: v
        for k, v in sorted(vars(args).items())
        if k not in _NON_SEMANTIC and v is not None
    }


def _generate_one(payload) -> str:
    seed, index, limits_tuple, space_dim, retry_budget, run_config = payload
    limits = Limits(*limits_tuple)
    inst = generate(
        derive_seed(seed, "instance", index),
        limits=limits,
        space_dim=space_dim,
        retry_budget=retry_budget,
    )
    inst.meta["run"] = {"seed": seed, "index": index, "config": run_config}
    return instance_to_json(inst)


def cmd_generate(args: argparse.Namespace) -> int:
    limits = Limits(args.max_steps, args.max_objects, args.max_resamples)
    run_config = _resolved_config(args)
    payloads = [
        (args.seed, i, (limits.max_steps, limits.max_objects, limits.max_resamples),
         args.space_dim, args.retry_budget, run_config)
        for i in range(args.count)
    ]
    if args.jobs > 1 and args.count > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            lines = list(pool.map(_generate_one, payloads))
    else:
        lines = [_generate_one(p) for p in payloads]
    out = Path(args.out)
    out.write_text("".join(line + "\n" for line in lines))
    log.info("wrote %d instances to %s", len(lines), out)
    if args.report_dir:
        from geoground import viz

        written = viz.render_instance_report(out, Path(args.report_dir))
        log.info("report: %s", ", ".join(str(p) for p in written))
    return EXIT_OK


def _load_rules(path: Optional[str], space_dim: int = 2):
    if path is None:
        return load_default_rules(space_dim)
    return parse_rules(Path(path).read_text())


def _closure_of(dsl_path: str, rules_path: Optional[str]):
    program = parse_program(Path(dsl_path).read_text())
    asserted = construct.asserted_facts(program)
    rules = _load_rules(rules_path)
    closed, graph = closure(asserted, rules)
    return program, asserted, closed, graph


def cmd_close(args: argparse.Namespace) -> int:
    program, asserted, closed, graph = _closure_of(args.dsl, args.rules)
    asserted_set = set(asserted)
    if args.out:
        doc = {
            "config": _resolved_config(args),
            "asserted": [str(f) for f in sorted(asserted_set)],
            "derived": [str(f) for f in sorted(closed - asserted_set)],
            "edges": instance_mod.trace_to_json(graph)["edges"],
        }
        Path(args.out).write_text(json.dumps(doc, indent=2) + "\n")
        log.info("closure written to %s", args.out)
        return EXIT_OK
    for fact in sorted(asserted_set):
        print(f"asserted {fact}")
    for fact in sorted(closed - asserted_set):
        print(f"derived  {fact}")
    for app in graph.edges():
        print(f"  {' & '.join(map(str, app.premises))} --{app.rule}--> {app.conclusion}")
    return EXIT_OK


def cmd_extract(args: argparse.Namespace) -> int:
    program, asserted, closed, graph = _closure_of(args.dsl, args.rules)
    if args.goal:
        goal = parse_fact(args.goal)
    elif program.goal is not None:
        goal = program.goal
    else:
        raise CliError("no --goal given and the DSL file has no '?' clause", EXIT_USAGE)
    try:
        premises, trace = instance_mod.extract_premises(graph, goal)
    except instance_mod.GoalNotInGraph:
        raise CliError(f"goal {goal} is not in the deduction closure", EXIT_USAGE) from None
    if args.out:
        doc = {
            "config": _resolved_config(args),
            "goal": str(goal),
            "premises": [str(f) for f in sorted(premises)],
            "trace": instance_mod.trace_to_json(trace),
        }
        Path(args.out).write_text(json.dumps(doc, indent=2) + "\n")
        return EXIT_OK
    for fact in sorted(premises):
        print(f"premise {fact}")
    for app in trace.edges():
        print(f"  {' & '.join(map(str, app.premises))} --{app.rule}--> {app.conclusion}")
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    lines = [l for l in Path(args.instance).read_text().splitlines() if l.strip()]
    failures = 0
    for line_no, line in enumerate(lines, start=1):
        inst = instance_from_json(line)
        tol = Tolerance(
            inst.meta.get("tolerance", {}).get("eq_tol", 1e-9),
            inst.meta.get("tolerance", {}).get("degen_tol", 1e-7),
        )
        seed = derive_seed(inst.seed, "reverify", args.fresh_seed)
        verdict = verify_numeric(
            inst.program,
            inst.premises,
            inst.goal,
            seed,
            tol,
            inst.program.limits.max_resamples,
            inst.meta.get("space_dim", 2),
        )
        if isinstance(verdict, Verified):
            print(f"line {line_no} seed {inst.seed}: Verified (resamples {verdict.resamples})")
        else:
            failures += 1
            name = _REASON_NAMES.get(verdict.reason, verdict.reason)
            print(f"line {line_no} seed {inst.seed}: Rejected({name}: {verdict.detail})")
    if failures:
        log.error("%d of %d instances failed re-verification", failures, len(lines))
        return EXIT_VERIFY
    return EXIT_OK


def cmd_export_dot(args: argparse.Namespace) -> int:
    if bool(args.infile) == bool(args.dsl):
        raise CliError("give exactly one of --in or --dsl", EXIT_USAGE)
    if args.infile:
        first = next(
            (l for l in Path(args.infile).read_text().splitlines() if l.strip()), None
        )
        if first is None:
            raise CliError(f"{args.infile} holds no instances", EXIT_USAGE)
        inst = instance_from_json(first)
        dot = graph_to_dot(inst.trace, highlight={inst.goal})
    else:
        _, _, _, graph = _closure_of(args.dsl, args.rules)
        dot = graph_to_dot(graph)
    if args.out:
        Path(args.out).write_text(dot + "\n")
    else:
        print(dot)
    return EXIT_OK


def _load_scene(ref: str):
    path = Path(ref)
    if path.exists():
        return parse_scene(path.read_text())
    if ref in bundled_scene_names():
        return load_bundled_scene(ref)
    raise CliError(
        f"scene {ref!r} is neither a file nor a bundled scene "
        f"(bundled: {', '.join(bundled_scene_names())})",
        EXIT_USAGE,
    )


def cmd_ground(args: argparse.Namespace) -> int:
    scene = _load_scene(args.scene)
    config = EngineConfig(
        max_nodes=args.max_nodes,
        max_depth=args.max_depth,
        retrieval_k=args.k,
        samples_per_node=args.passes,
    )
    search_index = None
    if args.corpus:
        decls = index_mod.ingest(sorted(Path(args.corpus).glob("*.txt")))
        search_index = index_mod.build_index(decls)
    decomposition = None
    if args.grounding_rules:
        from geoground.ground.oracles import DecompositionRules

        decomposition = DecompositionRules.parse(Path(args.grounding_rules).read_text())
    oracles = default_oracles(scene, search_index, decomposition)
    try:
        result = run_pipeline(scene, config, oracles)
    except (NodeBudgetExceeded, DepthBudgetExceeded) as exc:
        log.error("budget error: %s", exc)
        if args.dot:
            partial_nodes = exc.report.get("nodes", [])
            Path(args.dot).write_text(_report_nodes_to_dot(partial_nodes) + "\n")
            log.info("partial graph written to %s", args.dot)
        if args.out:
            Path(args.out).write_text(report_to_json(exc.report) + "\n")
        else:
            print(report_to_json(exc.report))
        return EXIT_EXHAUSTED
    report = dict(result.report)
    report["run_config"] = _resolved_config(args)
    text = report_to_json(report)
    if args.out:
        Path(args.out).write_text(text + "\n")
        log.info("report written to %s", args.out)
    else:
        print(text)
    if args.dot:
        Path(args.dot).write_text(ground_to_dot(result.nodes) + "\n")
    if args.report_dir:
        from geoground import viz

        written = viz.render_ground_report(report, Path(args.report_dir))
        log.info("report: %s", ", ".join(str(p) for p in written))
    return EXIT_OK


def _report_nodes_to_dot(node_rows: List[dict]) -> str:
    lines = ["digraph grounding {"]
    for node in node_rows:
        label = str(node["concept"]).replace('"', "'")
        lines.append(f'  n{node["index"]} [label="{node["index"]}: {label}"];')
    for node in node_rows:
        if node["parent"] is not None:
            lines.append(f'  n{node["parent"]} -> n{node["index"]};')
    lines.append("}")
    return "\n".join(lines)


def cmd_index(args: argparse.Namespace) -> int:
    files = sorted(Path(args.corpus).glob("*.txt"))
    if not files:
        raise CliError(f"no .txt corpus files under {args.corpus}", EXIT_USAGE)
    declarations = index_mod.ingest(files)
    built = index_mod.build_index(declarations)
    built.meta["run_config"] = _resolved_config(args)
    index_mod.save_index(built, args.out)
    log.info(
        "indexed %d declarations from %d files (content hash %s)",
        len(declarations),
        len(files),
        built.content_hash()[:12],
    )
    return EXIT_OK


def cmd_search(args: argparse.Namespace) -> int:
    idx = index_mod.load_index(args.index)
    results = index_mod.search(idx, args.query, args.k)
    print(f"# query={args.query!r} k={args.k} index={args.index}")
    print("rank\tscore\tname\tkind\tid")
    for rank, (decl, score) in enumerate(results, start=1):
        print(f"{rank}\t{score:.6f}\t{decl.name}\t{decl.kind}\t{decl.id}")
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    from geoground import viz

    written = viz.render_instance_report(
        Path(args.instances), Path(args.out), args.max_drawings
    )
    for path in written:
        log.info("wrote %s", path)
    return EXIT_OK


_COMMANDS = {
    "generate": cmd_generate,
    "close": cmd_close,
    "extract": cmd_extract,
    "verify": cmd_verify,
    "export-dot": cmd_export_dot,
    "ground": cmd_ground,
    "index": cmd_index,
    "search": cmd_search,
    "report": cmd_report,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    args, _ = parser.parse_known_args(argv)
    if args.config:
        try:
            file_values = _read_config_file(args.config)
        except CliError as exc:
            log.error("%s", exc)
            return exc.code
        subparser = parser.subcommands.get(args.command)
        if subparser is not None:
            subparser.set_defaults(**_coerce_config(file_values))
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except CliError as exc:
        log.error("%s", exc)
        return exc.code
    except (GenerationExhausted, construct.SamplingExhausted) as exc:
        log.error("GenerationExhausted: %s", exc)
        return EXIT_EXHAUSTED
    except (construct.DslSyntaxError, construct.UnknownOperator, construct.UnboundId,
            construct.OperatorArityMismatch, construct.LimitExceeded, ValueError) as exc:
        log.error("config error: %s", exc)
        return EXIT_USAGE
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO


def _coerce_config(values: Dict[str, str]) -> Dict[str, object]:
    coerced: Dict[str, object] = {}
    for key, value in values.items():
        if value.lstrip("-").isdigit():
            coerced[key] = int(value)
        else:
            try:
                coerced[key] = float(value)
            except ValueError:
                coerced[key] = value
    return coerced


if __name__ == "__main__":
    sys.exit(main())
