"""Interprocedural control-flow supergraph with an event-loop node.

Each function contributes a start node, an end node and one node per
statement; calls split into a call-site/return-site pair.  A single
event-loop node acts as a zero-length procedure of its own: explicit
emissions call into it and return to the emitter, the end of top-level
tail-calls into it, and dispatch edges leave it for every statically
registered handler, returning to it when the handler ends.

Edges that perform event operations carry annotations naming the
operation and the handler; everything else is unannotated.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .eventmodel import EventModel, EventModelError, synthetic_event
from .lang.ast import (
    Assign,
    Call,
    Emit,
    If,
    Print,
    Program,
    Register,
    RegisterAsync,
    Return,
    Stmt,
    TOP_LEVEL,
    VarDecl,
    While,
    iter_stmts,
)
from .lang.parser import UnknownHandlerError

EVENT_LOOP = "loop"
LOOP_PROC = "@loop"


class NodeKind(Enum):
    START = "start"
    END = "end"
    STMT = "stmt"
    CALL_SITE = "call"
    RETURN_SITE = "ret"
    EVENT_LOOP = "loop"


class EdgeKind(Enum):
    INTRA = "intra"
    CALL = "call"
    RETURN = "return"
    CALL_TO_RETURN = "call-to-return"
    TO_EVENT_LOOP = "to-event-loop"
    DISPATCH = "dispatch"


# How the solvers treat an edge when matching calls with returns.
class EdgeRole(Enum):
    NORMAL = "normal"
    CALL = "call"
    RETURN = "return"


@dataclass(frozen=True)
class Node:
    id: str
    kind: NodeKind
    func: str                 # owning procedure; LOOP_PROC for the loop node
    sid: int | None = None
    line: int | None = None
    label: str = ""


@dataclass(frozen=True)
class Edge:
    eid: int
    src: str
    dst: str
    kind: EdgeKind
    role: EdgeRole
    sid: int | None = None       # statement the edge originates from
    ret_site: str | None = None  # for call-role edges; None means no return
    handler: str | None = None   # for dispatch edges


@dataclass(frozen=True)
class EventOp:
    kind: str      # "register" | "emit" | "invoke" | "emit_register"
    handler: str


class EventAnnotation:
    """Total map from edge ids to (possibly empty) event-operation tuples."""

    def __init__(self, ops_by_eid: dict[int, tuple[EventOp, ...]],
                 all_eids: frozenset[int]):
        self._ops = ops_by_eid
        self._eids = all_eids

    def ops(self, eid: int) -> tuple[EventOp, ...]:
        return self._ops.get(eid, ())

    def covers(self, eid: int) -> bool:
        return eid in self._eids

    @property
    def eids(self) -> frozenset[int]:
        return self._eids

    def annotated(self) -> dict[int, tuple[EventOp, ...]]:
        return dict(self._ops)


class Supergraph:
    def __init__(self):
        self.nodes: dict[str, Node] = {}
        self.edges: list[Edge] = []
        self._out: dict[str, list[Edge]] = {}
        self._in: dict[str, list[Edge]] = {}
        self._by_endpoints: dict[tuple[str, str], Edge] = {}
        self.funcs: dict[str, tuple[str, str]] = {}  # proc -> (start, end)
        self.handlers: tuple[str, ...] = ()

    def add_node(self, node: Node) -> str:
        self.nodes[node.id] = node
        self._out.setdefault(node.id, [])
        self._in.setdefault(node.id, [])
        return node.id

    def add_edge(self, src: str, dst: str, kind: EdgeKind, role: EdgeRole,
                 sid: int | None = None, ret_site: str | None = None,
                 handler: str | None = None) -> Edge:
        edge = Edge(len(self.edges), src, dst, kind, role, sid, ret_site, handler)
        self.edges.append(edge)
        self._out[src].append(edge)
        self._in[dst].append(edge)
        self._by_endpoints[(src, dst)] = edge
        return edge

    def out_edges(self, node_id: str) -> list[Edge]:
        return self._out[node_id]

    def in_edges(self, node_id: str) -> list[Edge]:
        return self._in[node_id]

    def edge_between(self, src: str, dst: str) -> Edge:
        return self._by_endpoints[(src, dst)]

    def proc_of(self, node_id: str) -> str:
        return self.nodes[node_id].func

    def start_of(self, proc: str) -> str:
        return self.funcs[proc][0]

    def end_of(self, proc: str) -> str:
        return self.funcs[proc][1]

    def is_exit(self, node_id: str) -> bool:
        return self.end_of(self.proc_of(node_id)) == node_id

    def entry(self) -> str:
        return self.start_of(TOP_LEVEL)


class UnknownEventWarning:
    def __init__(self, event: str, line: int, file: str):
        self.event, self.line, self.file = event, line, file

    def __str__(self):
        where = f"{self.file}:" if self.file else ""
        return (f"{where}{self.line}: event '{self.event}' is emitted but has "
                f"no registered handler anywhere")


@dataclass
class BuildResult:
    graph: Supergraph
    annotations: EventAnnotation
    handlers: tuple[str, ...]
    registry: dict[str, frozenset[str]]
    warnings: list = field(default_factory=list)


def handler_registry(program: Program,
                     model: EventModel) -> dict[str, frozenset[str]]:
    """Flow-insensitive map from each event to every handler ever
    registered for it anywhere in the program."""
    out: dict[str, set[str]] = {}
    for f in program.functions:
        for s in iter_stmts(f.body):
            if isinstance(s, Register):
                out.setdefault(s.event, set()).add(s.handler)
            elif isinstance(s, RegisterAsync):
                out.setdefault(synthetic_event(s.handler), set()).add(s.handler)
            elif isinstance(s, Call) and not program.has_function(s.callee):
                if model.registration_for(s.callee) is not None:
                    event, handler, _ = model.registration_operands(s)
                    out.setdefault(event, set()).add(handler)
    return {e: frozenset(hs) for e, hs in out.items()}


def _classify_stmt(s: Stmt, program: Program, model: EventModel):
    """Event behavior of one statement: ("reg", event, handler, implicit),
    ("emit", event), or None."""
    if isinstance(s, Register):
        return ("reg", s.event, s.handler, False)
    if isinstance(s, RegisterAsync):
        return ("reg", synthetic_event(s.handler), s.handler, True)
    if isinstance(s, Call) and not program.has_function(s.callee):
        if model.registration_for(s.callee) is not None:
            event, handler, implicit = model.registration_operands(s)
            return ("reg", event, handler, implicit)
        if model.emission_for(s.callee) is not None:
            return ("emit", model.emission_operand(s))
        raise EventModelError(
            f"line {s.line}: call to '{s.callee}' has no event semantics")
    if isinstance(s, Emit):
        return ("emit", s.event)
    return None


class _Builder:
    def __init__(self, program: Program, model: EventModel):
        self.program = program
        self.model = model
        self.g = Supergraph()
        self.registry = handler_registry(program, model)
        self.handlers = tuple(sorted({h for hs in self.registry.values()
                                      for h in hs}))
        self.pending_ops: dict[str, tuple[EventOp, ...]] = {}  # node -> ops
        self.ops_by_eid: dict[int, tuple[EventOp, ...]] = {}
        self.warnings: list[UnknownEventWarning] = []

    def build(self) -> BuildResult:
        for h in self.handlers:
            if not self.program.has_function(h):
                raise UnknownHandlerError(h)
        self.g.add_node(Node(EVENT_LOOP, NodeKind.EVENT_LOOP, LOOP_PROC,
                             label="event loop"))
        self.g.funcs[LOOP_PROC] = (EVENT_LOOP, EVENT_LOOP)
        for f in self.program.functions:
            start = self.g.add_node(Node(f"start:{f.name}", NodeKind.START,
                                         f.name, label=f"start {f.name}"))
            end = self.g.add_node(Node(f"end:{f.name}", NodeKind.END,
                                       f.name, label=f"end {f.name}"))
            self.g.funcs[f.name] = (start, end)
        for f in self.program.functions:
            self._lower_function(f)
        self._wire_event_loop()
        self._attach_simple_annotations()
        self.g.handlers = self.handlers
        ann = EventAnnotation(self.ops_by_eid,
                              frozenset(e.eid for e in self.g.edges))
        return BuildResult(self.g, ann, self.handlers, self.registry,
                           self.warnings)

    # -- function lowering --

    def _lower_function(self, f) -> None:
        start, end = self.g.funcs[f.name]
        entry, exits = self._lower_body(f.body, f.name)
        if entry is None:
            self.g.add_edge(start, end, EdgeKind.INTRA, EdgeRole.NORMAL)
        else:
            self.g.add_edge(start, entry, EdgeKind.INTRA, EdgeRole.NORMAL)
            for node in exits:
                self.g.add_edge(node, end, EdgeKind.INTRA, EdgeRole.NORMAL)

    def _lower_body(self, body, func: str):
        entry: str | None = None
        exits: list[str] = []
        for s in body:
            s_entry, s_exits = self._lower_stmt(s, func)
            if entry is None:
                entry = s_entry
            for node in exits:
                self.g.add_edge(node, s_entry, EdgeKind.INTRA, EdgeRole.NORMAL)
            exits = s_exits
        return entry, exits

    def _stmt_node(self, s: Stmt, func: str, text: str) -> str:
        return self.g.add_node(Node(f"stmt:{func}:{s.sid}", NodeKind.STMT,
                                    func, s.sid, s.line, text))

    def _call_pair(self, s: Stmt, func: str, text: str) -> tuple[str, str]:
        c = self.g.add_node(Node(f"call:{func}:{s.sid}", NodeKind.CALL_SITE,
                                 func, s.sid, s.line, text))
        r = self.g.add_node(Node(f"ret:{func}:{s.sid}", NodeKind.RETURN_SITE,
                                 func, s.sid, s.line, f"after {text}"))
        return c, r

    def _lower_stmt(self, s: Stmt, func: str):
        if isinstance(s, If):
            cond = self._stmt_node(s, func, "if")
            exits: list[str] = []
            for body in (s.then_body, s.else_body):
                entry, body_exits = self._lower_body(body, func)
                if entry is None:
                    if cond not in exits:
                        exits.append(cond)
                else:
                    self.g.add_edge(cond, entry, EdgeKind.INTRA, EdgeRole.NORMAL)
                    exits.extend(body_exits)
            return cond, exits
        if isinstance(s, While):
            cond = self._stmt_node(s, func, "while")
            entry, body_exits = self._lower_body(s.body, func)
            if entry is not None:
                self.g.add_edge(cond, entry, EdgeKind.INTRA, EdgeRole.NORMAL)
                for node in body_exits:
                    self.g.add_edge(node, cond, EdgeKind.INTRA, EdgeRole.NORMAL)
            return cond, [cond]
        if isinstance(s, Return):
            node = self._stmt_node(s, func, "return")
            self.g.add_edge(node, self.g.end_of(func), EdgeKind.INTRA,
                            EdgeRole.NORMAL, sid=s.sid)
            return node, []
        if isinstance(s, Call) and self.program.has_function(s.callee):
            c, r = self._call_pair(s, func, f"{s.callee}(...)")
            callee_start, callee_end = self.g.funcs[s.callee]
            self.g.add_edge(c, callee_start, EdgeKind.CALL, EdgeRole.CALL,
                            sid=s.sid, ret_site=r)
            self.g.add_edge(callee_end, r, EdgeKind.RETURN, EdgeRole.RETURN,
                            sid=s.sid)
            self.g.add_edge(c, r, EdgeKind.CALL_TO_RETURN, EdgeRole.NORMAL,
                            sid=s.sid)
            return c, [r]
        behavior = _classify_stmt(s, self.program, self.model)
        if behavior is not None and behavior[0] == "emit":
            return self._lower_emit(s, func, behavior[1])
        if behavior is not None:
            _, event, handler, implicit = behavior
            kind = "emit_register" if implicit else "register"
            node = self._stmt_node(s, func, _stmt_text(s))
            self.pending_ops[node] = (EventOp(kind, handler),)
            return node, [node]
        node = self._stmt_node(s, func, _stmt_text(s))
        return node, [node]

    def _lower_emit(self, s: Stmt, func: str, event: str):
        ops = tuple(EventOp("emit", h) for h in sorted(self.registry.get(event, ())))
        if not ops:
            self.warnings.append(UnknownEventWarning(event, s.line, s.file))
        c, r = self._call_pair(s, func, f'emit "{event}"')
        call_edge = self.g.add_edge(c, EVENT_LOOP, EdgeKind.CALL, EdgeRole.CALL,
                                    sid=s.sid, ret_site=r)
        self.g.add_edge(EVENT_LOOP, r, EdgeKind.RETURN, EdgeRole.RETURN,
                        sid=s.sid)
        c2r = self.g.add_edge(c, r, EdgeKind.CALL_TO_RETURN, EdgeRole.NORMAL,
                              sid=s.sid)
        if ops:
            self.ops_by_eid[call_edge.eid] = ops
            self.ops_by_eid[c2r.eid] = ops
        return c, [r]

    # -- event loop wiring --

    def _wire_event_loop(self) -> None:
        top_end = self.g.end_of(TOP_LEVEL)
        self.g.add_edge(top_end, EVENT_LOOP, EdgeKind.TO_EVENT_LOOP,
                        EdgeRole.CALL, ret_site=None)
        for h in self.handlers:
            dispatch = self.g.add_edge(EVENT_LOOP, self.g.start_of(h),
                                       EdgeKind.DISPATCH, EdgeRole.CALL,
                                       ret_site=EVENT_LOOP, handler=h)
            self.ops_by_eid[dispatch.eid] = (EventOp("invoke", h),)
            self.g.add_edge(self.g.end_of(h), EVENT_LOOP,
                            EdgeKind.TO_EVENT_LOOP, EdgeRole.RETURN)

    def _attach_simple_annotations(self) -> None:
        for node_id, ops in self.pending_ops.items():
            out = [e for e in self.g.out_edges(node_id)
                   if e.kind is EdgeKind.INTRA]
            assert len(out) == 1, f"event statement {node_id} must have one exit"
            self.ops_by_eid[out[0].eid] = ops


def _stmt_text(s: Stmt) -> str:
    if isinstance(s, VarDecl):
        return f"var {s.name}"
    if isinstance(s, Assign):
        return f"{s.name} = ..."
    if isinstance(s, Print):
        return "print"
    if isinstance(s, Register):
        return f'register "{s.event}" {s.handler}'
    if isinstance(s, RegisterAsync):
        return f"register_async {s.handler}"
    if isinstance(s, Call):
        return f"{s.callee}(...)"
    return type(s).__name__.lower()


def build_supergraph(program: Program, model: EventModel | None = None) -> BuildResult:
    """Construct the supergraph, its event annotations and the handler set."""
    return _Builder(program, model or EventModel.default()).build()


def node_for_sid(graph: Supergraph, program: Program, sid: int) -> str:
    """The supergraph node where the statement with this sid executes
    (its call-site node for statements lowered to call/return pairs)."""
    func = program.func_of_stmt(sid)
    for prefix in ("stmt", "call"):
        node_id = f"{prefix}:{func}:{sid}"
        if node_id in graph.nodes:
            return node_id
    raise KeyError(f"no supergraph node for statement {sid}")


# --- DOT export -------------------------------------------------------------

_DOT_STYLES = {
    EdgeKind.CALL: "dashed",
    EdgeKind.RETURN: "dashed",
    EdgeKind.DISPATCH: "dashed",
    EdgeKind.TO_EVENT_LOOP: "dashed",
    EdgeKind.CALL_TO_RETURN: "dotted",
    EdgeKind.INTRA: "",
}


def supergraph_dot(graph: Supergraph, annotations: EventAnnotation | None = None,
                   highlight: frozenset[int] | set[int] = frozenset()) -> str:
    """Render the supergraph in DOT: one cluster per function, dashed
    interprocedural edges, optional bold highlight for a chosen path."""
    lines = ["digraph supergraph {", '  node [shape=box fontsize=10];']
    funcs: dict[str, list[Node]] = {}
    for node in graph.nodes.values():
        funcs.setdefault(node.func, []).append(node)
    for i, (func, nodes) in enumerate(sorted(funcs.items())):
        if func == LOOP_PROC:
            for node in nodes:
                lines.append(f'  "{node.id}" [label="{node.label}" shape=ellipse];')
            continue
        lines.append(f'  subgraph cluster_{i} {{')
        lines.append(f'    label="{func}";')
        for node in nodes:
            label = node.label or node.id
            lines.append(f'    "{node.id}" [label="{_dot_escape(label)}"];')
        lines.append("  }")
    for edge in graph.edges:
        styles = [s for s in (_DOT_STYLES[edge.kind],) if s]
        attrs = []
        if annotations is not None and annotations.ops(edge.eid):
            ops = annotations.ops(edge.eid)
            text = ", ".join(f"{op.kind} {op.handler}" for op in ops)
            attrs.append(f'label="{_dot_escape(text)}"')
        if edge.eid in highlight:
            styles.append("bold")
            attrs.append("penwidth=2")
        if styles:
            attrs.insert(0, f'style="{",".join(styles)}"')
        attr_text = f' [{" ".join(attrs)}]' if attrs else ""
        lines.append(f'  "{edge.src}" -> "{edge.dst}"{attr_text};')
    lines.append("}")
    return "\n".join(lines) + "\n"


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')
