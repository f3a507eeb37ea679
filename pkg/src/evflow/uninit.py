"""Possibly-uninitialized variables as per-edge representation relations.

The fact domain is every declared variable, alpha-renamed so locals of
different functions never collide.  Declarations act like JS var
hoisting: a function's locals become possibly-uninitialized on the edge
leaving its start node, and a declaration with an initializer behaves
like an assignment.  Reads inside conditions, prints and call arguments
do not transform facts; they are reporting sites.
"""

from __future__ import annotations

from dataclasses import dataclass

from .ifds import FactDomain, RepRelation, ZERO, canon_rel
from .lang.ast import (
    Assign,
    Call,
    If,
    Print,
    Program,
    RegisterAsync,
    Scopes,
    VarDecl,
    While,
    expr_vars,
    resolve_scopes,
)
from .supergraph import EdgeKind, NodeKind, Supergraph


class UninitProblem:
    """Flow-function factory for one program over one supergraph."""

    def __init__(self, program: Program, graph: Supergraph,
                 model=None, scopes: Scopes | None = None):
        self.program = program
        self.graph = graph
        self.model = model
        self.scopes = scopes or resolve_scopes(program)
        self.domain = FactDomain(self.scopes.all_facts())
        self._globals = frozenset(
            self.domain.index_of(n) for n in self.scopes.globals)
        self._cache: dict[int, RepRelation] = {}

    # -- helpers --

    def _idx(self, func: str, name: str) -> int:
        return self.domain.index_of(self.scopes.qualify(func, name))

    def _identity_pairs(self) -> set[tuple[int, int]]:
        return {(ZERO, ZERO), *((d, d) for d in self.domain.indices())}

    def _assign_rel(self, func: str, target: str, value_expr) -> RepRelation:
        target_i = self._idx(func, target)
        sources = {self._idx(func, v) for v in expr_vars(value_expr)}
        pairs = {(ZERO, ZERO)}
        for d in self.domain.indices():
            if d != target_i:
                pairs.add((d, d))
            if d in sources:
                pairs.add((d, target_i))
        return canon_rel(pairs)

    def _gen_rel(self, gens: frozenset[int]) -> RepRelation:
        pairs = {(ZERO, ZERO)}
        pairs.update((ZERO, d) for d in gens)
        pairs.update((d, d) for d in self.domain.indices() if d not in gens)
        return canon_rel(pairs)

    def _globals_only(self) -> RepRelation:
        return frozenset({(ZERO, ZERO), *((d, d) for d in self._globals)})

    def _locals_of(self, func: str) -> frozenset[int]:
        sc = self.scopes
        names = sc.params_by_func.get(func, ()) + sc.locals_by_func.get(func, ())
        return frozenset(self.domain.index_of(n) for n in names)

    # -- the per-edge flow function --

    def flow_for(self, edge) -> RepRelation:
        rel = self._cache.get(edge.eid)
        if rel is None:
            rel = self._compute(edge)
            self._cache[edge.eid] = rel
        return rel

    def _compute(self, edge) -> RepRelation:
        g = self.graph
        kind = edge.kind
        if kind is EdgeKind.CALL:
            return self._call_rel(edge)
        if kind in (EdgeKind.RETURN, EdgeKind.TO_EVENT_LOOP,
                    EdgeKind.DISPATCH):
            return self._globals_only()
        if kind is EdgeKind.CALL_TO_RETURN:
            caller_locals = self._locals_of(g.proc_of(edge.src))
            non_global = caller_locals - self._globals
            return frozenset({(ZERO, ZERO), *((d, d) for d in non_global)})
        src = g.nodes[edge.src]
        if src.kind is NodeKind.START:
            # hoisting: every non-param local of the function starts
            # possibly-uninitialized
            sc = self.scopes
            locs = frozenset(self.domain.index_of(n)
                             for n in sc.locals_by_func.get(src.func, ()))
            return self._gen_rel(locs)
        if src.kind is not NodeKind.STMT:
            return canon_rel(self._identity_pairs())
        stmt = self.program.stmt(src.sid)
        if isinstance(stmt, VarDecl):
            if stmt.init is None:
                return self._gen_rel(
                    frozenset((self._idx(src.func, stmt.name),)))
            return self._assign_rel(src.func, stmt.name, stmt.init)
        if isinstance(stmt, Assign):
            return self._assign_rel(src.func, stmt.name, stmt.value)
        return canon_rel(self._identity_pairs())

    def _call_rel(self, edge) -> RepRelation:
        # globals cross into the callee; parameters are bound from the
        # variables read by their actuals
        pairs = set(self._globals_only())
        if edge.kind is EdgeKind.CALL and edge.sid is not None:
            stmt = self.program.stmt(edge.sid)
            if isinstance(stmt, Call) and self.program.has_function(stmt.callee):
                callee = self.program.function(stmt.callee)
                caller = self.graph.proc_of(edge.src)
                for param, actual in zip(callee.params, stmt.args):
                    p_i = self._idx(callee.name, param)
                    for v in expr_vars(actual):
                        pairs.add((self._idx(caller, v), p_i))
        return canon_rel(pairs)

    # -- reporting --

    def reads_at(self, node_id: str) -> tuple[int, ...]:
        node = self.graph.nodes[node_id]
        if node.sid is None:
            return ()
        if node.kind not in (NodeKind.STMT, NodeKind.CALL_SITE):
            return ()
        stmt = self.program.stmt(node.sid)
        names: tuple[str, ...] = ()
        if isinstance(stmt, VarDecl) and stmt.init is not None:
            names = expr_vars(stmt.init)
        elif isinstance(stmt, Assign):
            names = expr_vars(stmt.value)
        elif isinstance(stmt, (If, While)):
            names = expr_vars(stmt.cond)
        elif isinstance(stmt, Print):
            names = expr_vars(stmt.value)
        elif isinstance(stmt, Call):
            skip: set[int | None] = set()
            if not self.program.has_function(stmt.callee) and self.model:
                reg = self.model.registration_for(stmt.callee)
                emi = self.model.emission_for(stmt.callee)
                if reg is not None:
                    skip = {reg.event_arg, reg.handler_arg}
                elif emi is not None:
                    skip = {emi.event_arg}
            names = tuple(v for i, a in enumerate(stmt.args) if i not in skip
                          for v in expr_vars(a))
        elif isinstance(stmt, RegisterAsync):
            names = tuple(v for a in stmt.args for v in expr_vars(a))
        seen: list[int] = []
        for name in names:
            i = self._idx(node.func, name)
            if i not in seen:
                seen.append(i)
        return tuple(seen)


@dataclass(frozen=True)
class Diagnostic:
    node: str
    var: str        # display name
    qualified: str
    line: int
    file: str

    def render(self) -> str:
        where = f"{self.file}:" if self.file else ""
        return f"{where}{self.line}: variable '{self.var}' may be uninitialized"


def report_uses(problem: UninitProblem, facts: dict[str, frozenset[int]]
                ) -> list[Diagnostic]:
    """One diagnostic per (read site, variable) whose fact reaches the
    reading node."""
    out: list[Diagnostic] = []
    graph = problem.graph
    for node_id in sorted(graph.nodes):
        incoming = facts.get(node_id)
        if not incoming:
            continue
        for fact in problem.reads_at(node_id):
            if fact in incoming:
                node = graph.nodes[node_id]
                qualified = problem.domain.name_of(fact)
                out.append(Diagnostic(node_id, Scopes.display(qualified),
                                      qualified, node.line or 0,
                                      problem.program.stmt(node.sid).file))
    out.sort(key=lambda d: (d.file, d.line, d.var, d.node))
    return out
