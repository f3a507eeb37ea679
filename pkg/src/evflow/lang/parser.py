"""Tokenizer, recursive-descent parser and static validation for EVL."""

from __future__ import annotations

import re
from dataclasses import dataclass

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
    TOP_LEVEL,
    Unary,
    Var,
    VarDecl,
    While,
    expr_vars,
    iter_stmts,
)


class EvlError(Exception):
    pass


class ParseError(EvlError):
    def __init__(self, line: int, col: int, message: str, file: str = ""):
        self.line, self.col, self.message, self.file = line, col, message, file
        where = f"{file}:" if file else ""
        super().__init__(f"{where}{line}:{col}: {message}")


class DuplicateFunctionError(EvlError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"function '{name}' is declared more than once")


class UnresolvedCalleeError(EvlError):
    def __init__(self, name: str, line: int = 0):
        self.name, self.line = name, line
        super().__init__(
            f"line {line}: call to '{name}' does not resolve to a declared "
            f"function or a known event primitive")


class UnknownHandlerError(EvlError):
    def __init__(self, name: str, line: int = 0):
        self.name, self.line = name, line
        super().__init__(f"line {line}: handler '{name}' is not a declared function")


class UndeclaredVariableError(EvlError):
    def __init__(self, name: str, func: str, line: int = 0):
        self.name, self.func, self.line = name, func, line
        super().__init__(f"line {line}: variable '{name}' is not declared in '{func}'")


class DuplicateVariableError(EvlError):
    def __init__(self, name: str, func: str, line: int = 0):
        self.name, self.func, self.line = name, func, line
        super().__init__(f"line {line}: variable '{name}' declared twice in '{func}'")


KEYWORDS = {"var", "fn", "if", "else", "while", "return", "true", "false",
            "print", "register", "emit", "register_async"}

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>//[^\n]*)
  | (?P<nl>\n)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>"(?:\\.|[^"\\\n])*")
  | (?P<op>==|!=|<=|>=|&&|\|\||[-+*/%<>=!(){},;])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(source: str, file: str = "") -> list[Token]:
    tokens: list[Token] = []
    line, line_start = 1, 0
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ParseError(line, pos - line_start + 1,
                             f"unexpected character {source[pos]!r}", file)
        kind = m.lastgroup
        text = m.group()
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            col = m.start() - line_start + 1
            if kind == "ident" and text in KEYWORDS:
                kind = text
            tokens.append(Token(kind, text, line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, len(source) - line_start + 1))
    return tokens


def _unescape(raw: str, line: int, col: int, file: str) -> str:
    body = raw[1:-1]
    out: list[str] = []
    i = 0
    while i < len(body):
        c = body[i]
        if c == "\\":
            i += 1
            esc = body[i]
            mapped = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}.get(esc)
            if mapped is None:
                raise ParseError(line, col, f"bad escape '\\{esc}'", file)
            out.append(mapped)
        else:
            out.append(c)
        i += 1
    return "".join(out)


class _Parser:
    def __init__(self, tokens: list[Token], file: str, next_sid: int):
        self.tokens = tokens
        self.pos = 0
        self.file = file
        self.next_sid = next_sid

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def take(self, kind: str | None = None, text: str | None = None) -> Token:
        tok = self.tokens[self.pos]
        if kind is not None and tok.kind != kind or \
           text is not None and tok.text != text:
            expected = text or kind
            raise ParseError(tok.line, tok.col,
                             f"expected '{expected}', found '{tok.text or 'eof'}'",
                             self.file)
        self.pos += 1
        return tok

    def at(self, kind: str, text: str | None = None) -> bool:
        tok = self.peek()
        return tok.kind == kind and (text is None or tok.text == text)

    def sid(self) -> int:
        s = self.next_sid
        self.next_sid += 1
        return s

    # -- entry points --

    def parse_unit(self) -> tuple[list[FunctionDecl], list[Stmt]]:
        functions: list[FunctionDecl] = []
        top: list[Stmt] = []
        while not self.at("eof"):
            if self.at("fn"):
                functions.append(self.function_decl())
            else:
                top.append(self.statement())
        return functions, top

    def function_decl(self) -> FunctionDecl:
        start = self.take("fn")
        name = self.take("ident").text
        self.take("op", "(")
        params: list[str] = []
        while not self.at("op", ")"):
            if params:
                self.take("op", ",")
            params.append(self.take("ident").text)
        self.take("op", ")")
        body = self.block()
        return FunctionDecl(name, tuple(params), tuple(body),
                            line=start.line, file=self.file)

    def block(self) -> list[Stmt]:
        self.take("op", "{")
        body: list[Stmt] = []
        while not self.at("op", "}"):
            body.append(self.statement())
        self.take("op", "}")
        return body

    # -- statements --

    def statement(self) -> Stmt:
        tok = self.peek()
        if tok.kind == "var":
            return self.var_decl()
        if tok.kind == "if":
            return self.if_stmt()
        if tok.kind == "while":
            return self.while_stmt()
        if tok.kind == "return":
            self.take("return")
            self.take("op", ";")
            return Return(self.sid(), tok.line, self.file)
        if tok.kind == "print":
            self.take("print")
            self.take("op", "(")
            value = self.expression()
            self.take("op", ")")
            self.take("op", ";")
            return Print(self.sid(), tok.line, self.file, value)
        if tok.kind == "register":
            self.take("register")
            self.take("op", "(")
            event = self.string_literal("event name")
            self.take("op", ",")
            handler = self.take("ident").text
            self.take("op", ")")
            self.take("op", ";")
            return Register(self.sid(), tok.line, self.file, event, handler)
        if tok.kind == "emit":
            self.take("emit")
            self.take("op", "(")
            event = self.string_literal("event name")
            self.take("op", ")")
            self.take("op", ";")
            return Emit(self.sid(), tok.line, self.file, event)
        if tok.kind == "register_async":
            self.take("register_async")
            self.take("op", "(")
            handler = self.take("ident").text
            args: list[Expr] = []
            while self.at("op", ","):
                self.take("op", ",")
                args.append(self.expression())
            self.take("op", ")")
            self.take("op", ";")
            return RegisterAsync(self.sid(), tok.line, self.file,
                                 handler, tuple(args))
        if tok.kind == "ident":
            name = self.take("ident").text
            if self.at("op", "("):
                self.take("op", "(")
                args = []
                while not self.at("op", ")"):
                    if args:
                        self.take("op", ",")
                    args.append(self.expression())
                self.take("op", ")")
                self.take("op", ";")
                return Call(self.sid(), tok.line, self.file, name, tuple(args))
            self.take("op", "=")
            value = self.expression()
            self.take("op", ";")
            return Assign(self.sid(), tok.line, self.file, name, value)
        raise ParseError(tok.line, tok.col,
                         f"expected a statement, found '{tok.text or 'eof'}'",
                         self.file)

    def var_decl(self) -> Stmt:
        tok = self.take("var")
        name = self.take("ident").text
        init = None
        if self.at("op", "="):
            self.take("op", "=")
            init = self.expression()
        self.take("op", ";")
        return VarDecl(self.sid(), tok.line, self.file, name, init)

    def if_stmt(self) -> Stmt:
        tok = self.take("if")
        self.take("op", "(")
        cond = self.expression()
        self.take("op", ")")
        then_body = self.block()
        else_body: list[Stmt] = []
        if self.at("else"):
            self.take("else")
            else_body = self.block()
        return If(self.sid(), tok.line, self.file, cond,
                  tuple(then_body), tuple(else_body))

    def while_stmt(self) -> Stmt:
        tok = self.take("while")
        self.take("op", "(")
        cond = self.expression()
        self.take("op", ")")
        body = self.block()
        return While(self.sid(), tok.line, self.file, cond, tuple(body))

    def string_literal(self, what: str) -> str:
        tok = self.peek()
        if tok.kind != "string":
            raise ParseError(tok.line, tok.col,
                             f"{what} must be a string literal", self.file)
        self.take("string")
        return _unescape(tok.text, tok.line, tok.col, self.file)

    # -- expressions (precedence climbing) --

    _BIN_LEVELS = (("||",), ("&&",), ("==", "!="),
                   ("<", "<=", ">", ">="), ("+", "-"), ("*", "/", "%"))

    def expression(self, level: int = 0) -> Expr:
        if level == len(self._BIN_LEVELS):
            return self.unary()
        ops = self._BIN_LEVELS[level]
        left = self.expression(level + 1)
        while self.at("op") and self.peek().text in ops:
            op = self.take("op").text
            right = self.expression(level + 1)
            left = Binary(op, left, right)
        return left

    def unary(self) -> Expr:
        if self.at("op", "-") or self.at("op", "!"):
            op = self.take("op").text
            return Unary(op, self.unary())
        return self.primary()

    def primary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "int":
            self.take("int")
            return IntLit(int(tok.text))
        if tok.kind == "string":
            self.take("string")
            return StrLit(_unescape(tok.text, tok.line, tok.col, self.file))
        if tok.kind in ("true", "false"):
            self.take(tok.kind)
            return BoolLit(tok.kind == "true")
        if tok.kind == "ident":
            self.take("ident")
            if self.at("op", "("):
                raise ParseError(tok.line, tok.col,
                                 "calls are statements, not expressions",
                                 self.file)
            return Var(tok.text)
        if tok.kind == "op" and tok.text == "(":
            self.take("op", "(")
            e = self.expression()
            self.take("op", ")")
            return e
        raise ParseError(tok.line, tok.col,
                         f"expected an expression, found '{tok.text or 'eof'}'",
                         self.file)


def _call_reads(s: Call, declared: set[str], model) -> tuple[str, ...]:
    """Variables read by a call's arguments.  Event-name and handler
    operands of model-classified calls are literals, not reads."""
    skip: set[int] = set()
    if s.callee not in declared and model is not None:
        reg = model.registration_for(s.callee)
        emi = model.emission_for(s.callee)
        if reg is not None:
            skip = {reg.event_arg, reg.handler_arg}
        elif emi is not None:
            skip = {emi.event_arg}
    return tuple(v for i, a in enumerate(s.args) if i not in skip
                 for v in expr_vars(a))


def _check_classified_call(s: Call, declared: set[str], model) -> None:
    if model.registration_for(s.callee) is not None:
        _event, handler, _implicit = model.registration_operands(s)
        if handler not in declared or handler == TOP_LEVEL:
            raise UnknownHandlerError(handler, s.line)
    elif model.emission_for(s.callee) is not None:
        model.emission_operand(s)


def _validate(program: Program, model) -> None:
    declared = {f.name for f in program.functions}
    for f in program.functions:
        seen: set[str] = set()
        scope = set(f.params)
        if f.name != TOP_LEVEL:
            scope |= {s.name for s in iter_stmts(program.top_level.body)
                      if isinstance(s, VarDecl)}
        for s in iter_stmts(f.body):
            if isinstance(s, VarDecl):
                if s.name in seen or s.name in f.params:
                    raise DuplicateVariableError(s.name, f.name, s.line)
                seen.add(s.name)
                scope.add(s.name)
        for s in iter_stmts(f.body):
            reads: tuple[str, ...] = ()
            if isinstance(s, VarDecl) and s.init is not None:
                reads = expr_vars(s.init)
            elif isinstance(s, Assign):
                reads = expr_vars(s.value) + (s.name,)
            elif isinstance(s, (If, While)):
                reads = expr_vars(s.cond)
            elif isinstance(s, Print):
                reads = expr_vars(s.value)
            elif isinstance(s, RegisterAsync):
                reads = tuple(v for a in s.args for v in expr_vars(a))
            elif isinstance(s, Call):
                reads = _call_reads(s, declared, model)
            for name in reads:
                if name not in scope:
                    raise UndeclaredVariableError(name, f.name, s.line)
            if isinstance(s, (Register, RegisterAsync)):
                if s.handler not in declared or s.handler == TOP_LEVEL:
                    raise UnknownHandlerError(s.handler, s.line)
            if isinstance(s, Call):
                known = s.callee in declared or (
                    model is not None and model.classifies(s.callee))
                if not known or s.callee == TOP_LEVEL:
                    raise UnresolvedCalleeError(s.callee, s.line)
                if s.callee not in declared:
                    _check_classified_call(s, declared, model)


def _assemble(units: list[tuple[list[FunctionDecl], list[Stmt]]],
              files: list[str], model) -> Program:
    functions: list[FunctionDecl] = []
    top: list[Stmt] = []
    names: set[str] = set()
    for (fns, stmts), _file in zip(units, files):
        for f in fns:
            if f.name in names or f.name == TOP_LEVEL:
                raise DuplicateFunctionError(f.name)
            names.add(f.name)
            functions.append(f)
        top.extend(stmts)
    functions.append(FunctionDecl(TOP_LEVEL, (), tuple(top)))
    program = Program(tuple(functions))
    _validate(program, model)
    return program


def parse(source: str, *, filename: str = "<input>", model=None) -> Program:
    """Parse one EVL source text into a validated program."""
    parser = _Parser(tokenize(source, filename), filename, next_sid=0)
    unit = parser.parse_unit()
    return _assemble([unit], [filename], model)


def parse_files(paths, *, model=None) -> Program:
    """Parse several files into one program with a single top-level."""
    units = []
    files = []
    next_sid = 0
    for path in paths:
        path = str(path)
        with open(path, "r", encoding="utf-8") as fh:
            source = fh.read()
        parser = _Parser(tokenize(source, path), path, next_sid)
        units.append(parser.parse_unit())
        files.append(path)
        next_sid = parser.next_sid
    return _assemble(units, files, model)
