"""Tree-walking interpreter with single-threaded event-loop semantics.

Top-level code runs to completion, then the ready-handler queue drains:
callback-style registrations enqueue their handler, explicit emissions
dispatch synchronously and return to the emitter.  Uninitialized reads
yield 0 and are recorded in the trace, so execution continues past the
first defect and traces stay comparable to analysis results.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .ast import (
    Assign,
    Binary,
    BoolLit,
    Call,
    Emit,
    Expr,
    If,
    IntLit,
    Print,
    Program,
    Register,
    RegisterAsync,
    Return,
    Stmt,
    StrLit,
    Unary,
    Var,
    VarDecl,
    While,
    resolve_scopes,
)
from .parser import EvlError
from ..eventmodel import EventModel, synthetic_event


class EvlRuntimeError(EvlError):
    def __init__(self, message: str, line: int = 0):
        self.line = line
        super().__init__(f"line {line}: {message}")


@dataclass(frozen=True)
class StmtExec:
    sid: int


@dataclass(frozen=True)
class HandlerInvoked:
    handler: str


@dataclass(frozen=True)
class UninitRead:
    sid: int
    var: str  # qualified name


@dataclass(frozen=True)
class Output:
    text: str


@dataclass
class ExecutionTrace:
    events: list = field(default_factory=list)
    truncated: bool = False
    error: str | None = None
    steps: int = 0
    decision_arity: list[int] = field(default_factory=list)

    def outputs(self) -> list[str]:
        return [e.text for e in self.events if isinstance(e, Output)]

    def uninit_reads(self) -> list[UninitRead]:
        return [e for e in self.events if isinstance(e, UninitRead)]


@dataclass(frozen=True)
class Fifo:
    pass


@dataclass(frozen=True)
class Choices:
    """Dispatch decisions by index into the ready queue; 0 past the end."""

    indices: tuple[int, ...] = ()


class _Truncated(Exception):
    pass


class _ReturnSignal(Exception):
    pass


_UNSET = object()


def _render(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


_MAX_EMIT_DEPTH = 64


class _Interp:
    def __init__(self, program: Program, schedule, step_limit: int,
                 model: EventModel):
        self.program = program
        self.scopes = resolve_scopes(program)
        self.model = model
        self.step_limit = step_limit
        self.choices = schedule.indices if isinstance(schedule, Choices) else ()
        self.trace = ExecutionTrace()
        self.genv = {g: _UNSET for g in self.scopes.globals}
        self.registered: dict[str, str] = {}  # handler -> event, first wins
        self.pending: list[str] = []
        self.emit_depth = 0

    # -- variable access --

    def _read(self, func: str, name: str, frame: dict, sid: int):
        q = self.scopes.qualify(func, name)
        store = frame if "." in q else self.genv
        value = store[q]
        if value is _UNSET:
            self.trace.events.append(UninitRead(sid, q))
            return 0
        return value

    def _write(self, func: str, name: str, frame: dict, value) -> None:
        q = self.scopes.qualify(func, name)
        store = frame if "." in q else self.genv
        store[q] = value

    # -- expressions --

    def eval(self, e: Expr, func: str, frame: dict, sid: int, line: int):
        if isinstance(e, IntLit):
            return e.value
        if isinstance(e, StrLit):
            return e.value
        if isinstance(e, BoolLit):
            return e.value
        if isinstance(e, Var):
            return self._read(func, e.name, frame, sid)
        if isinstance(e, Unary):
            v = self.eval(e.operand, func, frame, sid, line)
            if e.op == "-":
                if not isinstance(v, int) or isinstance(v, bool):
                    raise EvlRuntimeError("unary '-' needs an integer", line)
                return -v
            if not isinstance(v, bool):
                raise EvlRuntimeError("'!' needs a boolean", line)
            return not v
        if isinstance(e, Binary):
            if e.op in ("&&", "||"):
                left = self.eval(e.left, func, frame, sid, line)
                if not isinstance(left, bool):
                    raise EvlRuntimeError(f"'{e.op}' needs booleans", line)
                if e.op == "&&" and not left:
                    return False
                if e.op == "||" and left:
                    return True
                right = self.eval(e.right, func, frame, sid, line)
                if not isinstance(right, bool):
                    raise EvlRuntimeError(f"'{e.op}' needs booleans", line)
                return right
            left = self.eval(e.left, func, frame, sid, line)
            right = self.eval(e.right, func, frame, sid, line)
            return self._binop(e.op, left, right, line)
        raise TypeError(f"unknown expression {e!r}")

    @staticmethod
    def _is_int(v) -> bool:
        return isinstance(v, int) and not isinstance(v, bool)

    def _binop(self, op: str, a, b, line: int):
        if op == "+":
            if self._is_int(a) and self._is_int(b):
                return a + b
            if isinstance(a, str) and isinstance(b, str):
                return a + b
            raise EvlRuntimeError("'+' needs two integers or two strings", line)
        if op in ("-", "*", "/", "%"):
            if not (self._is_int(a) and self._is_int(b)):
                raise EvlRuntimeError(f"'{op}' needs integers", line)
            if op == "-":
                return a - b
            if op == "*":
                return a * b
            if b == 0:
                raise EvlRuntimeError("division by zero", line)
            return a // b if op == "/" else a % b
        if op in ("<", "<=", ">", ">="):
            if not (self._is_int(a) and self._is_int(b)):
                raise EvlRuntimeError(f"'{op}' needs integers", line)
            return {"<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b}[op]
        if op in ("==", "!="):
            if type(a) is not type(b):
                raise EvlRuntimeError(f"'{op}' needs matching types", line)
            return (a == b) if op == "==" else (a != b)
        raise TypeError(f"unknown operator {op!r}")

    def _cond(self, e: Expr, func: str, frame: dict, sid: int, line: int) -> bool:
        v = self.eval(e, func, frame, sid, line)
        if not isinstance(v, bool):
            raise EvlRuntimeError("condition must be a boolean", line)
        return v

    # -- event runtime --

    def _register(self, handler: str, event: str, enqueue: bool) -> None:
        # Re-registration of an already-registered handler is a no-op.
        if handler in self.registered:
            return
        self.registered[handler] = event
        if enqueue:
            self.pending.append(handler)

    def _emit(self, event: str) -> None:
        # synchronous dispatch; emit chains deeper than the bound stand in
        # for a stack overflow and are reported as truncation
        if self.emit_depth >= _MAX_EMIT_DEPTH:
            raise _Truncated()
        self.emit_depth += 1
        try:
            handlers = [h for h, e in self.registered.items() if e == event]
            for h in handlers:
                self._invoke(h)
        finally:
            self.emit_depth -= 1

    def _invoke(self, handler: str) -> None:
        self.trace.events.append(HandlerInvoked(handler))
        self._run_function(self.program.function(handler), ())

    # -- execution --

    def _run_function(self, fn, arg_values) -> None:
        frame = {q: _UNSET for q in self.scopes.locals_by_func[fn.name]}
        for p, v in zip(self.scopes.params_by_func[fn.name], arg_values):
            frame[p] = v
        try:
            self._run_body(fn.body, fn.name, frame)
        except _ReturnSignal:
            pass

    def _run_body(self, body, func: str, frame: dict) -> None:
        for s in body:
            self.exec_stmt(s, func, frame)

    def _step(self, s: Stmt) -> None:
        self.trace.steps += 1
        if self.trace.steps > self.step_limit:
            raise _Truncated()
        self.trace.events.append(StmtExec(s.sid))

    def exec_stmt(self, s: Stmt, func: str, frame: dict) -> None:
        self._step(s)
        if isinstance(s, VarDecl):
            if s.init is not None:
                value = self.eval(s.init, func, frame, s.sid, s.line)
                self._write(func, s.name, frame, value)
        elif isinstance(s, Assign):
            value = self.eval(s.value, func, frame, s.sid, s.line)
            self._write(func, s.name, frame, value)
        elif isinstance(s, If):
            branch = s.then_body if self._cond(s.cond, func, frame, s.sid, s.line) \
                else s.else_body
            self._run_body(branch, func, frame)
        elif isinstance(s, While):
            while self._cond(s.cond, func, frame, s.sid, s.line):
                self._run_body(s.body, func, frame)
                self._step(s)
        elif isinstance(s, Print):
            value = self.eval(s.value, func, frame, s.sid, s.line)
            self.trace.events.append(Output(_render(value)))
        elif isinstance(s, Register):
            self._register(s.handler, s.event, enqueue=False)
        elif isinstance(s, Emit):
            self._emit(s.event)
        elif isinstance(s, RegisterAsync):
            for a in s.args:
                self.eval(a, func, frame, s.sid, s.line)
            self._register(s.handler, synthetic_event(s.handler), enqueue=True)
        elif isinstance(s, Return):
            raise _ReturnSignal()
        elif isinstance(s, Call):
            self._exec_call(s, func, frame)
        else:
            raise TypeError(f"unknown statement {s!r}")

    def _exec_call(self, s: Call, func: str, frame: dict) -> None:
        if self.program.has_function(s.callee):
            values = [self.eval(a, func, frame, s.sid, s.line) for a in s.args]
            fn = self.program.function(s.callee)
            if len(values) != len(fn.params):
                raise EvlRuntimeError(
                    f"'{s.callee}' takes {len(fn.params)} arguments, "
                    f"got {len(values)}", s.line)
            self._run_function(fn, values)
            return
        reg = self.model.registration_for(s.callee)
        if reg is not None:
            event, handler, implicit = self.model.registration_operands(s)
            for i, a in enumerate(s.args):
                if i not in (reg.event_arg, reg.handler_arg):
                    self.eval(a, func, frame, s.sid, s.line)
            self._register(handler, event, enqueue=implicit)
            return
        emi = self.model.emission_for(s.callee)
        if emi is not None:
            event = self.model.emission_operand(s)
            for i, a in enumerate(s.args):
                if i != emi.event_arg:
                    self.eval(a, func, frame, s.sid, s.line)
            self._emit(event)
            return
        raise EvlRuntimeError(f"call to unknown function '{s.callee}'", s.line)

    def _drain(self) -> None:
        decision = 0
        while self.pending:
            idx = 0
            if len(self.pending) > 1:
                self.trace.decision_arity.append(len(self.pending))
                if decision < len(self.choices):
                    idx = self.choices[decision]
                    if not 0 <= idx < len(self.pending):
                        raise ValueError(
                            f"schedule index {idx} out of range at decision "
                            f"{decision} (queue size {len(self.pending)})")
                decision += 1
            handler = self.pending.pop(idx)
            self._invoke(handler)

    def run(self) -> ExecutionTrace:
        try:
            self._run_function(self.program.top_level, ())
            self._drain()
        except _Truncated:
            self.trace.truncated = True
        except EvlRuntimeError as e:
            self.trace.error = str(e)
        return self.trace


def interpret(program: Program, schedule=Fifo(), step_limit: int = 10_000,
              model: EventModel | None = None) -> ExecutionTrace:
    """Run a program under the given dispatch schedule, collecting a trace."""
    if step_limit <= 0:
        raise ValueError("step_limit must be positive")
    return _Interp(program, schedule, step_limit,
                   model or EventModel.default()).run()


def explore_schedules(program: Program, model: EventModel | None = None,
                      max_decisions: int = 6,
                      step_limit: int = 10_000) -> list[ExecutionTrace]:
    """Traces under FIFO plus every dispatch order within the decision bound.

    The first trace is the FIFO run; further traces flip one ready-queue
    decision at a time, depth-first, up to max_decisions decisions.
    """
    results: list[ExecutionTrace] = []

    def go(prefix: tuple[int, ...]) -> None:
        trace = interpret(program, Choices(prefix), step_limit, model)
        results.append(trace)
        arity = trace.decision_arity
        limit = min(len(arity), max_decisions)
        for pos in range(len(prefix), limit):
            taken = list(prefix) + [0] * (pos - len(prefix))
            for choice in range(1, arity[pos]):
                go(tuple(taken + [choice]))

    go(())
    return results


def check_trace_ordering(program: Program, trace: ExecutionTrace,
                         model: EventModel | None = None) -> list[str]:
    """Structural check: every handler invocation in a trace was preceded
    by its registration and a subsequent emission (explicit or implicit).
    Returns human-readable violations; an empty list means the trace is
    consistent."""
    model = model or EventModel.default()
    registered: dict[str, str] = {}
    state: dict[str, str] = {}  # handler -> "R" | "E"
    violations: list[str] = []

    def do_register(handler: str, event: str, implicit: bool) -> None:
        if handler in registered:
            return
        registered[handler] = event
        state[handler] = "E" if implicit else "R"

    def do_emit(event: str) -> None:
        for h, e in registered.items():
            if e == event and state[h] == "R":
                state[h] = "E"

    for ev in trace.events:
        if isinstance(ev, StmtExec):
            s = program.stmt(ev.sid)
            if isinstance(s, Register):
                do_register(s.handler, s.event, implicit=False)
            elif isinstance(s, RegisterAsync):
                do_register(s.handler, synthetic_event(s.handler), implicit=True)
            elif isinstance(s, Emit):
                do_emit(s.event)
            elif isinstance(s, Call) and not program.has_function(s.callee):
                if model.registration_for(s.callee) is not None:
                    event, handler, implicit = model.registration_operands(s)
                    do_register(handler, event, implicit)
                elif model.emission_for(s.callee) is not None:
                    do_emit(model.emission_operand(s))
        elif isinstance(ev, HandlerInvoked):
            if state.get(ev.handler) != "E":
                violations.append(
                    f"handler '{ev.handler}' invoked in state "
                    f"{state.get(ev.handler, 'S')}")
    return violations
