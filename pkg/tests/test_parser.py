import pytest

from evflow.lang import (
    Assign,
    Binary,
    DuplicateFunctionError,
    DuplicateVariableError,
    ParseError,
    Register,
    TOP_LEVEL,
    UndeclaredVariableError,
    UnknownHandlerError,
    UnresolvedCalleeError,
    Var,
    VarDecl,
    parse,
    parse_files,
    resolve_scopes,
    to_source,
)


def test_single_var_decl():
    p = parse("var x;")
    body = p.top_level.body
    assert len(body) == 1
    assert isinstance(body[0], VarDecl)
    assert body[0].name == "x" and body[0].init is None
    assert len(p.functions) == 1 and p.functions[0].name == TOP_LEVEL


def test_assignment_builds_binary_tree():
    p = parse("var x; var y; var z; x = y + z;")
    assign = p.top_level.body[3]
    assert isinstance(assign, Assign)
    assert assign.value == Binary("+", Var("y"), Var("z"))


def test_door_program_structure(door):
    program, _ = door
    names = [f.name for f in program.functions]
    assert sorted(names) == sorted(["hdlOpen", "hdlClose", TOP_LEVEL])
    open_body = program.function("hdlOpen").body
    assert any(isinstance(s, Register) and s.handler == "hdlClose"
               for s in open_body)


def test_precedence():
    p = parse("var a; var b; a = 1 + 2 * 3 < 4 == true && !false;")
    # parses without error and prints back with the same grouping
    assert "1 + 2 * 3 < 4 == true && (!false)" in to_source(p) or \
        "1 + 2 * 3 < 4 == true && !false" in to_source(p)


def test_comments_and_strings():
    p = parse('// heading\nvar s = "a\\"b\\n"; print(s); // trailing\n')
    decl = p.top_level.body[0]
    assert decl.init.value == 'a"b\n'


@pytest.mark.parametrize("source,error", [
    ("var x", ParseError),
    ("x = ;", ParseError),
    ("x = 1;", UndeclaredVariableError),
    ("print(1 +);", ParseError),
    ('register(open, f);', ParseError),          # event must be a literal
    ("fn f() {} fn f() {}", DuplicateFunctionError),
    ("var x; var x;", DuplicateVariableError),
    ("print(y);", UndeclaredVariableError),
    ("nosuch(1);", UnresolvedCalleeError),
    ('register("e", nosuch);', UnknownHandlerError),
    ("var x; x = f();", ParseError),             # calls are statements only
])
def test_rejects(source, error):
    with pytest.raises(error):
        parse(source)


def test_parse_error_carries_position():
    with pytest.raises(ParseError) as err:
        parse("var x;\nvar y = @;")
    assert err.value.line == 2
    assert err.value.col >= 8


def test_roundtrip_through_pretty_printer(door, dirstat, timer, server):
    for program, model in (door, dirstat, timer, server):
        src = to_source(program)
        again = parse(src, model=model)
        assert to_source(again) == src


def test_roundtrip_nested_control_flow():
    src = ("var x;\n"
           "x = 0;\n"
           "while (x < 3) {\n"
           "  if (x == 1) {\n"
           "    print(x);\n"
           "  } else {\n"
           "    x = x + 1;\n"
           "  }\n"
           "  x = x + 1;\n"
           "}\n")
    p = parse(src)
    assert to_source(parse(to_source(p))) == to_source(p)


def test_multi_file_concatenation(tmp_path):
    a = tmp_path / "a.evl"
    b = tmp_path / "b.evl"
    a.write_text("fn f() { print(1); }\nvar x;\n")
    b.write_text("f();\nprint(x);\n")
    p = parse_files([a, b])
    assert p.has_function("f")
    kinds = [type(s).__name__ for s in p.top_level.body]
    assert kinds == ["VarDecl", "Call", "Print"]
    files = {s.file for s in p.top_level.body}
    assert files == {str(a), str(b)}


def test_register_async_extra_args():
    p = parse("fn h() { print(1); }\nvar d;\nregister_async(h, d + 1, 2);")
    stmt = p.top_level.body[1]
    assert stmt.handler == "h"
    assert len(stmt.args) == 2
    assert to_source(parse(to_source(p))) == to_source(p)


def test_scope_resolution():
    p = parse("fn f(a) { var b; b = a; g = b; }\nvar g;\nf(g);")
    sc = resolve_scopes(p)
    assert sc.globals == ("g",)
    assert sc.qualify("f", "a") == "f.a"
    assert sc.qualify("f", "b") == "f.b"
    assert sc.qualify("f", "g") == "g"
    assert sc.qualify(TOP_LEVEL, "g") == "g"
    assert set(sc.all_facts()) == {"g", "f.a", "f.b"}


def test_local_shadows_global():
    p = parse("fn f() { var g; print(g); }\nvar g;\nf();")
    sc = resolve_scopes(p)
    assert sc.qualify("f", "g") == "f.g"
