"""Shared pipeline helpers and independent oracles for the test suite."""

from collections import defaultdict

from evflow.event_lattice import (
    HState,
    all_s,
    hmf_apply,
    hsm_meet,
)
from evflow.ifds import ZERO, explode
from evflow.supergraph import EdgeRole, build_supergraph
from evflow.uninit import UninitProblem


def pipeline(program, model=None):
    """parse-result -> (build result, uninit problem, exploded graph)."""
    build = build_supergraph(program, model)
    problem = UninitProblem(program, build.graph, model=model)
    xsg = explode(build.graph, problem.domain, problem.flow_for)
    return build, problem, xsg


def facts_by_name(result, problem):
    return {n: problem.domain.names_of(ds) for n, ds in result.facts.items()}


def brute_force_ide(graph, rel_of, labels, handlers, entry=None,
                    max_len=40, path_budget=200_000):
    """Path-enumeration oracle for the two-phase solver: walk every valid
    path, carry an environment (fact -> handler-state map, with the 0 row
    seeded all-S), and meet per node.  Memoizes identical continuation
    states, which leaves accumulated results unchanged."""
    entry = entry or graph.entry()
    values: dict[str, dict[int, dict]] = defaultdict(dict)
    explored = 0
    seen = set()

    def record(node, env):
        table = values[node]
        for d, hsm in env.items():
            table[d] = hsm_meet(table[d], hsm) if d in table else hsm

    def walk(node, env, stack, depth):
        nonlocal explored
        record(node, env)
        if depth >= max_len:
            return
        key = (node, frozenset((d, tuple(sorted(m.items())))
                               for d, m in env.items()), stack, depth)
        if key in seen:
            return
        seen.add(key)
        for edge in graph.out_edges(node):
            if edge.role is EdgeRole.CALL:
                new_stack = stack + ((edge.dst, edge.ret_site),)
            elif edge.role is EdgeRole.RETURN:
                frame = (graph.start_of(graph.proc_of(edge.src)), edge.dst)
                if not stack or stack[-1] != frame:
                    continue
                new_stack = stack[:-1]
            else:
                new_stack = stack
            explored += 1
            if explored > path_budget:
                raise RuntimeError("ide path oracle budget exceeded")
            label = labels[edge.eid]
            new_env: dict[int, dict] = {}
            for d1, d2 in rel_of[edge.eid]:
                if d1 not in env:
                    continue
                value = hmf_apply(label, env[d1])
                new_env[d2] = hsm_meet(new_env[d2], value) \
                    if d2 in new_env else value
            walk(edge.dst, new_env, new_stack, depth + 1)

    walk(entry, {ZERO: all_s(handlers)}, (), 0)
    return values


def filtered_by_hand(values, handlers):
    """Untransform applied to a brute-force IDE table."""
    out = {}
    for node, table in values.items():
        keep = frozenset(
            d for d, hsm in table.items()
            if d != ZERO and all(hsm[h] != HState.X for h in handlers))
        out[node] = keep
    return out
