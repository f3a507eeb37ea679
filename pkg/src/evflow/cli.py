"""Command-line driver: analyze EVL files, diff the plain and the
event-aware results, dump graphs and run the oracle suite."""

from __future__ import annotations

import argparse
import importlib.resources
import json
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from .event_lattice import HState
from .eventmodel import EventModel, EventModelError
from .ifds import exploded_dot
from .lang import EvlError, check_trace_ordering, explore_schedules, parse, parse_files
from .lang.ast import Scopes
from .randgen import GenParams, gen_source
from .supergraph import supergraph_dot
from .transform import analyze_event_aware
from .uninit import report_uses

REPORT_VERSION = 1

EXIT_CLEAN = 0
EXIT_DIAGNOSTICS = 1
EXIT_ERROR = 2


@dataclass
class RunConfig:
    inputs: list[str]
    mode: str = "diff"                 # ifds | ide | diff
    format: str = "text"               # text | json
    event_model: str | None = None
    dump_supergraph: str | None = None
    dump_exploded: str | None = None
    seed: int = 0
    schedules: int = 6
    random_count: int = 100
    color: bool = True


@dataclass
class Report:
    files: list[str]
    mode: str
    diagnostics: list[dict] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    stats: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "version": REPORT_VERSION,
            "files": self.files,
            "mode": self.mode,
            "diagnostics": self.diagnostics,
            "warnings": self.warnings,
            "stats": self.stats,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def render_text(self, color: bool) -> str:
        red = "\x1b[31m" if color else ""
        dim = "\x1b[2m" if color else ""
        reset = "\x1b[0m" if color else ""
        lines = []
        for w in self.warnings:
            lines.append(f"{dim}warning: {w}{reset}")
        for d in self.diagnostics:
            head = (f"{d['file']}:{d['line']}: variable '{d['var']}' "
                    f"may be uninitialized")
            if d["status"] == "filtered":
                blocked = ", ".join(
                    f"handler '{h}' invoked before its event is emitted"
                    for h, s in sorted(d["handler_states"].items())
                    if s == "X")
                lines.append(f"{dim}{head} [filtered: infeasible-path "
                             f"artifact; would require {blocked}]{reset}")
            else:
                lines.append(f"{red}{head}{reset}")
        reported = sum(1 for d in self.diagnostics if d["status"] == "reported")
        filtered = len(self.diagnostics) - reported
        summary = f"{reported} reported"
        if self.mode == "diff":
            summary += f", {filtered} filtered as infeasible-path artifacts"
        lines.append(summary)
        s = self.stats
        lines.append(
            f"{dim}nodes={s.get('nodes')} edges={s.get('edges')} "
            f"facts={s.get('facts')} handlers={s.get('handlers')} "
            f"wall_ms={s.get('wall_ms')}{reset}")
        return "\n".join(lines) + "\n"


def _load_model(path: str | None) -> EventModel:
    if path is None:
        return EventModel.default()
    return EventModel.from_json_file(path)


def _hsm_json(hsm: dict[str, HState]) -> dict[str, str]:
    return {h: s.name for h, s in sorted(hsm.items())}


def run(cfg: RunConfig) -> tuple[int, Report]:
    """Analyze the configured inputs; exit status 0 means no surviving
    diagnostics, 1 means diagnostics, 2 means a usage or input error."""
    started = time.perf_counter()
    try:
        model = _load_model(cfg.event_model)
        if len(cfg.inputs) == 1 and not os.path.exists(cfg.inputs[0]):
            raise EvlError(f"no such file: {cfg.inputs[0]}")
        program = parse_files(cfg.inputs, model=model)
        analysis = analyze_event_aware(program, model)
    except (EvlError, EventModelError, OSError) as e:
        report = Report(files=list(cfg.inputs), mode=cfg.mode)
        report.warnings.append(str(e))
        return EXIT_ERROR, report

    if cfg.dump_supergraph:
        Path(cfg.dump_supergraph).write_text(
            supergraph_dot(analysis.build.graph, analysis.build.annotations),
            encoding="utf-8")
    if cfg.dump_exploded:
        Path(cfg.dump_exploded).write_text(exploded_dot(analysis.xsg),
                                           encoding="utf-8")

    ifds_diags = report_uses(analysis.problem, analysis.ifds.facts)
    filtered_facts = analysis.filtered.facts
    diagnostics: list[dict] = []
    for d in ifds_diags:
        fact = analysis.domain.index_of(d.qualified)
        survives = fact in filtered_facts.get(d.node, frozenset())
        if cfg.mode == "ifds":
            status = "reported"
        elif survives:
            status = "reported"
        else:
            status = "filtered"
        if cfg.mode == "ide" and status == "filtered":
            continue
        entry = {"file": d.file, "line": d.line, "var": d.var,
                 "status": status}
        if status == "filtered":
            hsm = analysis.filtered.provenance[(d.node, fact)]
            entry["handler_states"] = _hsm_json(hsm)
        diagnostics.append(entry)

    stats = {
        "nodes": len(analysis.build.graph.nodes),
        "edges": len(analysis.build.graph.edges),
        "facts": len(analysis.domain),
        "handlers": len(analysis.handlers),
        "ifds_worklist_steps": analysis.ifds.stats["worklist_steps"],
        "ide_phase1_steps": analysis.ide.stats["phase1_steps"],
        "ide_phase2_steps": analysis.ide.stats["phase2_steps"],
        "wall_ms": round((time.perf_counter() - started) * 1000, 3),
    }
    report = Report(files=list(cfg.inputs), mode=cfg.mode,
                    diagnostics=diagnostics,
                    warnings=[str(w) for w in analysis.warnings],
                    stats=stats)
    reported = any(d["status"] == "reported" for d in diagnostics)
    return (EXIT_DIAGNOSTICS if reported else EXIT_CLEAN), report


# --- oracle suite -----------------------------------------------------------

def packaged_corpus_dir() -> Path:
    return Path(importlib.resources.files("evflow")) / "corpus"


def iter_corpus(directory: Path):
    for evl in sorted(directory.glob("*.evl")):
        model_path = evl.parent / f"{evl.stem}.model.json"
        model = EventModel.from_json_file(model_path) \
            if model_path.exists() else EventModel.default()
        yield evl.name, evl.read_text(encoding="utf-8"), model


def check_program(source: str, model: EventModel, schedules: int,
                  filename: str = "<generated>") -> list[str]:
    """Precision, soundness and representation-size checks for one
    program; returns human-readable violations."""
    violations: list[str] = []
    program = parse(source, filename=filename, model=model)
    analysis = analyze_event_aware(program, model, check_descent=True)

    for node in set(analysis.ifds.facts) | set(analysis.filtered.facts):
        extra = analysis.filtered.facts_at(node) - analysis.ifds.facts_at(node)
        if extra:
            names = analysis.domain.names_of(extra)
            violations.append(
                f"precision: facts {sorted(names)} at {node} survive "
                f"filtering but are not in the plain result")

    n_handlers = len(analysis.handlers)
    for hmf in analysis.labeled.labels.values():
        if len(hmf) > n_handlers:
            violations.append("representation: label touches more handlers "
                              "than the program has")
    if analysis.ide.stats["max_label_entries"] > max(1, n_handlers):
        violations.append("representation: composed transformer outgrew "
                          "the handler set")

    from .supergraph import node_for_sid
    for trace in explore_schedules(program, model, max_decisions=schedules):
        if check_trace_ordering(program, trace, model):
            violations.append("interpreter: trace breaks the "
                              "registration/emission ordering invariant")
        for read in trace.uninit_reads():
            node = node_for_sid(analysis.build.graph, program, read.sid)
            fact = analysis.domain.index_of(read.var)
            if fact not in analysis.filtered.facts_at(node):
                violations.append(
                    f"soundness: run-time uninitialized read of "
                    f"'{Scopes.display(read.var)}' at {node} missing from "
                    f"the filtered result")
    return violations


def run_oracle_suite(cfg: RunConfig, out=None) -> int:
    out = out if out is not None else sys.stdout
    corpus = Path(cfg.inputs[0]) if cfg.inputs else packaged_corpus_dir()
    if not corpus.is_dir():
        print(f"error: corpus directory {corpus} not found", file=out)
        return EXIT_ERROR
    failures = 0
    checked = 0
    for name, source, model in iter_corpus(corpus):
        violations = check_program(source, model, cfg.schedules, name)
        checked += 1
        status = "ok" if not violations else "FAIL"
        print(f"corpus {name}: {status}", file=out)
        if violations:
            failures += 1
            for v in violations:
                print(f"  {v}", file=out)
            print("  counterexample:\n" +
                  "\n".join("    " + l for l in source.splitlines()), file=out)
    params = GenParams(allow_while=True)
    for i in range(cfg.random_count):
        source = gen_source(f"{cfg.seed}:{i}", params)
        violations = check_program(source, EventModel.default(), cfg.schedules)
        checked += 1
        if violations:
            failures += 1
            print(f"random {cfg.seed}:{i}: FAIL", file=out)
            for v in violations:
                print(f"  {v}", file=out)
            print("  counterexample:\n" +
                  "\n".join("    " + l for l in source.splitlines()), file=out)
    print(f"random programs: {cfg.random_count} checked "
          f"(seed {cfg.seed}, schedule bound {cfg.schedules})", file=out)
    print(f"oracle suite: {checked - failures}/{checked} passed", file=out)
    return EXIT_CLEAN if failures == 0 else EXIT_DIAGNOSTICS


# --- argument parsing -------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evflow",
        description="Event-aware possibly-uninitialized-variables analysis "
                    "for EVL programs.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_analysis(name: str, help_text: str):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("inputs", nargs="+", metavar="file.evl")
        p.add_argument("--event-model", metavar="path.json")
        p.add_argument("--format", choices=("text", "json"), default="text")
        p.add_argument("--dump-supergraph", metavar="path.dot")
        p.add_argument("--dump-exploded", metavar="path.dot")
        return p

    add_analysis("ifds", "plain analysis, infeasible orderings admitted")
    add_analysis("ide", "event-aware analysis, infeasible orderings filtered")
    add_analysis("diff", "both analyses, filtered facts called out")

    oracle = sub.add_parser("oracle", help="run the self-check suite over "
                                           "the corpus and random programs")
    oracle.add_argument("inputs", nargs="*", metavar="corpus_dir")
    oracle.add_argument("--seed", type=int, default=0)
    oracle.add_argument("--schedules", type=int, default=6,
                        help="max dispatch decisions explored per program")
    oracle.add_argument("--count", type=int, default=100,
                        help="number of random programs")
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] not in ("ifds", "ide", "diff", "oracle") \
            and not argv[0].startswith("-"):
        argv.insert(0, "diff")
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as e:
        return EXIT_ERROR if e.code not in (0, None) else 0
    color = sys.stdout.isatty() and not os.environ.get("EVFLOW_NO_COLOR")
    if args.command == "oracle":
        cfg = RunConfig(inputs=list(args.inputs), seed=args.seed,
                        schedules=args.schedules, random_count=args.count)
        return run_oracle_suite(cfg)
    cfg = RunConfig(
        inputs=list(args.inputs),
        mode=args.command,
        format=args.format,
        event_model=args.event_model,
        dump_supergraph=args.dump_supergraph,
        dump_exploded=args.dump_exploded,
        color=color,
    )
    status, report = run(cfg)
    if cfg.format == "json":
        sys.stdout.write(report.to_json())
    else:
        sys.stdout.write(report.render_text(color))
    return status


if __name__ == "__main__":
    sys.exit(main())
