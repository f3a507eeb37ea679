"""Distributive flow functions as representation relations, the exploded
supergraph, a worklist tabulation solver and a brute-force oracle.

Facts are small integers; index 0 is the tautological fact that holds
everywhere and seeds the analysis.  A flow function is stored as the
canonical bipartite relation over (D u {0})^2; meet is union of edges
and composition is the relational join, both re-canonicalized.

The tabulation solver computes, per node, the facts reachable from
<entry, 0> along call/return-balanced paths, treating event-loop
dispatches as calls that return to the loop node and the end of
top-level as a call into the loop that never returns.
"""

from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass, field

from .supergraph import Edge, EdgeRole, Supergraph

ZERO = 0

RepRelation = frozenset  # of (int, int) pairs


class PathBudgetExceededError(Exception):
    def __init__(self, budget: int):
        self.budget = budget
        super().__init__(f"path enumeration exceeded the budget of {budget}")


class FactDomain:
    """Ordered finite fact set; names map to indices 1..n, 0 is reserved."""

    def __init__(self, names):
        self._names = tuple(names)
        if len(set(self._names)) != len(self._names):
            raise ValueError("facts must be unique")
        self._index = {name: i + 1 for i, name in enumerate(self._names)}

    @property
    def names(self) -> tuple[str, ...]:
        return self._names

    def __len__(self) -> int:
        return len(self._names)

    def indices(self) -> range:
        return range(1, len(self._names) + 1)

    def index_of(self, name: str) -> int:
        return self._index[name]

    def name_of(self, index: int) -> str:
        return self._names[index - 1]

    def names_of(self, indices) -> frozenset[str]:
        return frozenset(self._names[i - 1] for i in indices)


def canon_rel(pairs) -> RepRelation:
    """Canonical form: always contains (0,0); drops any (d1,d2) with d1 != 0
    whose target is already generated from 0."""
    gen = {d2 for d1, d2 in pairs if d1 == ZERO and d2 != ZERO}
    out = {(ZERO, ZERO)}
    for d1, d2 in pairs:
        if d1 == ZERO:
            if d2 != ZERO:
                out.add((ZERO, d2))
        elif d2 != ZERO and d2 not in gen:
            out.add((d1, d2))
    return frozenset(out)


def rep_relation(f, domain: FactDomain) -> RepRelation:
    """Canonical relation of a distributive set function f: 2^D -> 2^D."""
    empty_image = frozenset(f(frozenset()))
    pairs = {(ZERO, ZERO)}
    pairs.update((ZERO, d) for d in empty_image)
    for d1 in domain.indices():
        for d2 in f(frozenset((d1,))):
            if d2 not in empty_image:
                pairs.add((d1, d2))
    return frozenset(pairs)


def apply_rel(r: RepRelation, s) -> frozenset[int]:
    """Evaluate the represented function on a subset of D (union meet)."""
    out = set()
    for d1, d2 in r:
        if d2 == ZERO:
            continue
        if d1 == ZERO or d1 in s:
            out.add(d2)
    return frozenset(out)


def compose_rel(r1: RepRelation, r2: RepRelation) -> RepRelation:
    """Relation of (g o f) where r1 represents f and r2 represents g."""
    by_src = defaultdict(set)
    for d1, d2 in r2:
        by_src[d1].add(d2)
    joined = set()
    for x, y in r1:
        for z in by_src.get(y, ()):
            joined.add((x, z))
    return canon_rel(joined)


def meet_rel(r1: RepRelation, r2: RepRelation) -> RepRelation:
    return canon_rel(r1 | r2)


def identity_rel(domain: FactDomain) -> RepRelation:
    return frozenset({(ZERO, ZERO), *((d, d) for d in domain.indices())})


class ExplodedSupergraph:
    """Supergraph with one canonical relation per edge; the exploded node
    and edge sets are derived views."""

    def __init__(self, graph: Supergraph, domain: FactDomain,
                 rel_of: dict[int, RepRelation]):
        self.graph = graph
        self.domain = domain
        self.rel_of = rel_of
        missing = [e.eid for e in graph.edges if e.eid not in rel_of]
        if missing:
            raise ValueError(f"edges without a flow relation: {missing}")
        self.succ: dict[int, dict[int, tuple[int, ...]]] = {}
        for eid, rel in rel_of.items():
            by_src: dict[int, list[int]] = defaultdict(list)
            for d1, d2 in sorted(rel):
                by_src[d1].append(d2)
            self.succ[eid] = {d1: tuple(ds) for d1, ds in by_src.items()}

    def iter_exploded_edges(self):
        for edge in self.graph.edges:
            for d1, d2 in sorted(self.rel_of[edge.eid]):
                yield (edge.src, d1), (edge.dst, d2)

    def exploded_node_count(self) -> int:
        return len(self.graph.nodes) * (len(self.domain) + 1)


def explode(graph: Supergraph, domain: FactDomain, flow_for) -> ExplodedSupergraph:
    """Build the exploded supergraph from a per-edge flow-function factory."""
    return ExplodedSupergraph(
        graph, domain, {e.eid: flow_for(e) for e in graph.edges})


@dataclass
class IfdsResult:
    facts: dict[str, frozenset[int]]
    reachable: frozenset[str]
    stats: dict = field(default_factory=dict)

    def facts_at(self, node: str) -> frozenset[int]:
        return self.facts.get(node, frozenset())

    def is_reachable(self, node: str) -> bool:
        return node in self.reachable

    def names_at(self, node: str, domain: FactDomain) -> frozenset[str]:
        return domain.names_of(self.facts_at(node))


def solve_ifds(xsg: ExplodedSupergraph, entry: str | None = None) -> IfdsResult:
    """Worklist tabulation over the exploded supergraph.

    Path edges (d1, n, d2) record that <n, d2> is reachable from
    <start_p, d1> in n's procedure; procedure summaries plug callee
    effects into callers at matching return sites.
    """
    g = xsg.graph
    succ = xsg.succ
    entry = entry or g.entry()

    path_edges: set[tuple[int, str, int]] = set()
    work: deque[tuple[int, str, int]] = deque()
    # (callee_start, entry fact) -> {(call node, fact at call, return site)}
    incoming: dict[tuple[str, int], set] = defaultdict(set)
    # (proc start, entry fact) -> facts seen at the proc's end node
    summaries: dict[tuple[str, int], set[int]] = defaultdict(set)
    # (node, fact) -> set of source facts with a path edge into it
    rev: dict[tuple[str, int], set[int]] = defaultdict(set)
    steps = 0

    def propagate(d1: int, n: str, d2: int) -> None:
        key = (d1, n, d2)
        if key not in path_edges:
            path_edges.add(key)
            rev[(n, d2)].add(d1)
            work.append(key)

    def apply_return(end_node: str, ret_site: str, d_exit: int,
                     caller_node: str, d_call: int) -> None:
        ret_edge = g.edge_between(end_node, ret_site)
        for d5 in succ[ret_edge.eid].get(d_exit, ()):
            for d3 in tuple(rev[(caller_node, d_call)]):
                propagate(d3, ret_site, d5)

    propagate(ZERO, entry, ZERO)
    while work:
        d1, n, d2 = work.popleft()
        steps += 1
        proc = g.proc_of(n)
        if g.is_exit(n):
            start = g.start_of(proc)
            summaries[(start, d1)].add(d2)
            for caller_node, d_call, ret_site in tuple(incoming[(start, d1)]):
                if ret_site is None:
                    continue
                apply_return(n, ret_site, d2, caller_node, d_call)
        for edge in g.out_edges(n):
            if edge.role is EdgeRole.RETURN:
                continue  # consumed by exit processing
            if edge.role is EdgeRole.CALL:
                callee_start = edge.dst
                callee_end = g.end_of(g.proc_of(callee_start))
                for d3 in succ[edge.eid].get(d2, ()):
                    key = (callee_start, d3)
                    incoming[key].add((n, d2, edge.ret_site))
                    propagate(d3, callee_start, d3)
                    if edge.ret_site is not None:
                        for d4 in tuple(summaries[key]):
                            apply_return(callee_end, edge.ret_site, d4, n, d2)
            else:
                for d3 in succ[edge.eid].get(d2, ()):
                    propagate(d1, edge.dst, d3)

    facts: dict[str, set[int]] = defaultdict(set)
    reachable: set[str] = set()
    for d1, n, d2 in path_edges:
        reachable.add(n)
        if d2 != ZERO:
            facts[n].add(d2)
    return IfdsResult(
        {n: frozenset(ds) for n, ds in facts.items()},
        frozenset(reachable),
        {"worklist_steps": steps, "path_edges": len(path_edges)},
    )


def _edge_stack_effect(edge: Edge, g: Supergraph):
    """('push', frame) | ('pop', frame) | None for valid-path tracking."""
    if edge.role is EdgeRole.CALL:
        return ("push", (edge.dst, edge.ret_site))
    if edge.role is EdgeRole.RETURN:
        return ("pop", (g.start_of(g.proc_of(edge.src)), edge.dst))
    return None


def iter_valid_paths(g: Supergraph, entry: str, max_len: int,
                     path_budget: int):
    """Depth-first enumeration of call/return-balanced paths from entry.

    Yields (path, node) for every path prefix, where path is the tuple of
    edges taken.  Unmatched calls may stay open; a return edge is taken
    only when it matches the innermost open call.
    """
    explored = 0

    def walk(node: str, stack: tuple, path: tuple):
        nonlocal explored
        yield path, node
        if len(path) >= max_len:
            return
        for edge in g.out_edges(node):
            effect = _edge_stack_effect(edge, g)
            if effect is None:
                new_stack = stack
            elif effect[0] == "push":
                new_stack = stack + (effect[1],)
            else:
                if not stack or stack[-1] != effect[1]:
                    continue
                new_stack = stack[:-1]
            explored += 1
            if explored > path_budget:
                raise PathBudgetExceededError(path_budget)
            yield from walk(edge.dst, new_stack, path + (edge,))

    yield from walk(entry, (), ())


def mvp_bruteforce(g: Supergraph, flow, entry: str | None = None,
                   max_len: int = 40, path_budget: int = 100_000) -> IfdsResult:
    """Definitional oracle: enumerate valid paths up to max_len, apply the
    composed flow function of each to the empty set, union per node.

    `flow` is either a dict from edge id to relation or a callable on
    edges.  Intended for small graphs only; raises PathBudgetExceededError
    when enumeration outgrows the budget.
    """
    entry = entry or g.entry()
    if callable(flow):
        rel_of = {e.eid: flow(e) for e in g.edges}
    else:
        rel_of = flow

    facts: dict[str, set[int]] = defaultdict(set)
    reachable: set[str] = set()
    # memo avoids re-walking suffixes for identical (node, facts, stack)
    # states; the set of facts fully determines everything downstream.
    seen: set = set()

    explored = 0

    def walk(node: str, s: frozenset, stack: tuple, depth: int):
        nonlocal explored
        reachable.add(node)
        facts[node] |= s
        if depth >= max_len:
            return
        key = (node, s, stack, depth)
        if key in seen:
            return
        seen.add(key)
        for edge in g.out_edges(node):
            effect = _edge_stack_effect(edge, g)
            if effect is None:
                new_stack = stack
            elif effect[0] == "push":
                new_stack = stack + (effect[1],)
            else:
                if not stack or stack[-1] != effect[1]:
                    continue
                new_stack = stack[:-1]
            explored += 1
            if explored > path_budget:
                raise PathBudgetExceededError(path_budget)
            walk(edge.dst, apply_rel(rel_of[edge.eid], s), new_stack, depth + 1)

    walk(entry, frozenset(), (), 0)
    return IfdsResult({n: frozenset(ds) for n, ds in facts.items() if ds},
                      frozenset(reachable), {"paths_explored": explored})


# --- DOT export -------------------------------------------------------------

def exploded_dot(xsg: ExplodedSupergraph) -> str:
    """Render the exploded supergraph: one row of fact columns per
    supergraph node, edges per representation-relation pair."""
    domain = xsg.domain
    lines = ["digraph exploded {", "  node [shape=circle fontsize=9];",
             "  rankdir=TB;"]

    def xid(node: str, d: int) -> str:
        name = "0" if d == ZERO else domain.name_of(d)
        return f"{node}#{name}"

    for node in xsg.graph.nodes.values():
        ids = [xid(node.id, d) for d in (ZERO, *domain.indices())]
        lines.append("  { rank=same; " +
                     " ".join(f'"{i}";' for i in ids) + " }")
        for d in (ZERO, *domain.indices()):
            name = "0" if d == ZERO else domain.name_of(d)
            lines.append(f'  "{xid(node.id, d)}" '
                         f'[label="{name}" xlabel="{node.id}"];')
    for (m, d1), (n, d2) in xsg.iter_exploded_edges():
        lines.append(f'  "{xid(m, d1)}" -> "{xid(n, d2)}";')
    lines.append("}")
    return "\n".join(lines) + "\n"
