"""EVL mini-language: AST, parser, pretty printer and interpreter."""

from .ast import (
    Assign,
    Binary,
    BoolLit,
    Call,
    Emit,
    Expr,
    FunctionDecl,
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
    VarDecl,
    Var,
    While,
    Scopes,
    TOP_LEVEL,
    expr_vars,
    iter_stmts,
    resolve_scopes,
    to_source,
)
from .parser import (
    DuplicateFunctionError,
    DuplicateVariableError,
    EvlError,
    ParseError,
    UndeclaredVariableError,
    UnknownHandlerError,
    UnresolvedCalleeError,
    parse,
    parse_files,
)
from .interp import (
    Choices,
    EvlRuntimeError,
    ExecutionTrace,
    Fifo,
    HandlerInvoked,
    Output,
    StmtExec,
    UninitRead,
    check_trace_ordering,
    explore_schedules,
    interpret,
)

__all__ = [name for name in dir() if not name.startswith("_")]
