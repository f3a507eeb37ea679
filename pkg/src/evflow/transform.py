"""Assign event micro-function labels to an exploded supergraph and
project solved environments back to plain fact sets.

The labeling never touches graph structure: registration, emission,
callback-style registration and dispatch edges get the matching
per-handler chain function; every other edge keeps the identity.  The
projection drops any fact whose handler-state map sends some handler to
the infeasible state, remembering the offending map for reporting.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .event_lattice import (
    HState,
    HandlerMicroFn,
    MF_EMIT,
    MF_EMIT_REGISTER,
    MF_INVOKE,
    MF_REGISTER,
    mf_compose,
)
from .eventmodel import EventModel
from .ide import (
    IdeResult,
    LabeledExplodedSupergraph,
    MissingAnnotationError,
    solve_ide,
)
from .ifds import ExplodedSupergraph, IfdsResult, ZERO, explode, solve_ifds
from .lang.ast import Program
from .supergraph import BuildResult, EventAnnotation, build_supergraph
from .uninit import UninitProblem

_OP_TO_MF = {
    "register": MF_REGISTER,
    "emit": MF_EMIT,
    "invoke": MF_INVOKE,
    "emit_register": MF_EMIT_REGISTER,
}


def transform(xsg: ExplodedSupergraph, annotations: EventAnnotation,
              handlers: tuple[str, ...]) -> LabeledExplodedSupergraph:
    """Label every exploded edge with the event micro-function of its
    underlying supergraph edge; identity where nothing happens."""
    labels: dict[int, HandlerMicroFn] = {}
    for edge in xsg.graph.edges:
        if not annotations.covers(edge.eid):
            raise MissingAnnotationError(edge.eid)
        entries: dict[str, int] = {}
        for op in annotations.ops(edge.eid):
            mf = _OP_TO_MF[op.kind]
            if op.handler in entries:
                mf = mf_compose(mf, entries[op.handler])
            entries[op.handler] = mf
        labels[edge.eid] = HandlerMicroFn(entries)
    return LabeledExplodedSupergraph(xsg, labels, handlers)


@dataclass
class FilteredResult:
    """Fact sets surviving the feasibility filter, plus the offending
    handler-state map for every fact the filter removed."""

    facts: dict[str, frozenset[int]]
    provenance: dict[tuple[str, int], dict[str, HState]]
    handlers: tuple[str, ...]

    def facts_at(self, node: str) -> frozenset[int]:
        return self.facts.get(node, frozenset())

    def excluded_at(self, node: str) -> dict[int, dict[str, HState]]:
        return {d: m for (n, d), m in self.provenance.items() if n == node}


def untransform(result: IdeResult) -> FilteredResult:
    """Keep a fact at a node only if its map sends no handler to X."""
    facts: dict[str, frozenset[int]] = {}
    provenance: dict[tuple[str, int], dict[str, HState]] = {}
    for node, env in result.envs.items():
        kept = set()
        for d, hsm in env.items():
            if d == ZERO:
                continue
            if any(state == HState.X for state in hsm.values()):
                provenance[(node, d)] = hsm
            else:
                kept.add(d)
        if kept:
            facts[node] = frozenset(kept)
    return FilteredResult(facts, provenance, result.handlers)


@dataclass
class EventAwareAnalysis:
    """Both solutions of one problem instance, for diffing."""

    program: Program
    build: BuildResult
    problem: UninitProblem
    xsg: ExplodedSupergraph
    labeled: LabeledExplodedSupergraph
    ifds: IfdsResult
    ide: IdeResult
    filtered: FilteredResult
    warnings: list = field(default_factory=list)

    @property
    def domain(self):
        return self.problem.domain

    @property
    def handlers(self) -> tuple[str, ...]:
        return self.build.handlers


def analyze_event_aware(program: Program, model: EventModel | None = None,
                        problem: UninitProblem | None = None,
                        check_descent: bool = False) -> EventAwareAnalysis:
    """Run the plain and the event-aware analysis over one program."""
    model = model or EventModel.default()
    build = build_supergraph(program, model)
    if problem is None:
        problem = UninitProblem(program, build.graph, model=model)
    xsg = explode(build.graph, problem.domain, problem.flow_for)
    ifds_result = solve_ifds(xsg)
    labeled = transform(xsg, build.annotations, build.handlers)
    ide_result = solve_ide(labeled, check_descent=check_descent)
    filtered = untransform(ide_result)
    return EventAwareAnalysis(program, build, problem, xsg, labeled,
                              ifds_result, ide_result, filtered,
                              list(build.warnings))
