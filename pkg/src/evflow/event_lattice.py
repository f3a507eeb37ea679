"""Event-handler state lattice and its micro-function algebra.

A handler moves through a four-state chain: S (not yet registered), R
(registered, event not yet emitted), E (event emitted after registration)
and X (infeasible: invoked too early).  The chain is ordered
X > S > R > E and meet is the minimum, so X acts as "unreachable" and E
as "every ordering constraint satisfied".

A function over the chain is total and packs into one byte, two bits per
output value.  There are only 256 such functions, so composition and
meet are served from precomputed 256x256 tables.
"""

from __future__ import annotations

from enum import IntEnum


class HState(IntEnum):
    """Abstract state of one event handler.

    The 2-bit encoding makes the chain meet an unsigned min.
    """

    E = 0b00
    R = 0b01
    S = 0b10
    X = 0b11

    def __str__(self) -> str:
        return self.name


def hstate_meet(a: HState, b: HState) -> HState:
    """Meet on the chain X > S > R > E: the lower of the two states."""
    return HState(min(a, b))


def mf_pack(fx: HState, fs: HState, fr: HState, fe: HState) -> int:
    """Pack the four output values of a chain function into one byte."""
    return (fx << 6) | (fs << 4) | (fr << 2) | fe


_HSTATES = (HState.E, HState.R, HState.S, HState.X)  # indexed by bit value


def mf_apply(f: int, s: HState) -> HState:
    """Look up f(s) in the packed table."""
    return _HSTATES[(f >> (2 * s)) & 0b11]


# The three generators, the identity and the constant-X top function.
MF_ID = mf_pack(HState.X, HState.S, HState.R, HState.E)
MF_REGISTER = mf_pack(HState.X, HState.R, HState.R, HState.E)
MF_EMIT = mf_pack(HState.X, HState.S, HState.E, HState.E)
MF_INVOKE = mf_pack(HState.X, HState.X, HState.X, HState.E)
MF_TOP = mf_pack(HState.X, HState.X, HState.X, HState.X)

_STATES = (HState.X, HState.S, HState.R, HState.E)

_COMPOSE: bytes | None = None
_MEET: bytes | None = None


def _out(f: int, s: int) -> int:
    return (f >> (2 * s)) & 0b11


def mf_compose_def(g: int, f: int) -> int:
    """g after f, computed directly from the definitions (no tables)."""
    return (_out(g, _out(f, 0))
            | (_out(g, _out(f, 1)) << 2)
            | (_out(g, _out(f, 2)) << 4)
            | (_out(g, _out(f, 3)) << 6))


def mf_meet_def(f: int, g: int) -> int:
    """Pointwise chain meet, computed directly from the definitions."""
    return (min(_out(f, 0), _out(g, 0))
            | (min(_out(f, 1), _out(g, 1)) << 2)
            | (min(_out(f, 2), _out(g, 2)) << 4)
            | (min(_out(f, 3), _out(g, 3)) << 6))


def _build_tables() -> tuple[bytes, bytes]:
    compose = bytearray(256 * 256)
    meet = bytearray(256 * 256)
    for g in range(256):
        base = g << 8
        for f in range(256):
            compose[base | f] = mf_compose_def(g, f)
            meet[base | f] = mf_meet_def(g, f)
    return bytes(compose), bytes(meet)


def _selfcheck(compose: bytes, meet: bytes) -> None:
    # identities plus a fixed behavioral sample; the test suite covers the
    # full 256x256 tables
    for f in range(256):
        assert compose[(MF_ID << 8) | f] == f
        assert compose[(f << 8) | MF_ID] == f
        assert meet[(f << 8) | f] == f
    reg_then_emit = compose[(MF_EMIT << 8) | MF_REGISTER]
    full = compose[(MF_INVOKE << 8) | reg_then_emit]
    assert mf_apply(full, HState.S) == HState.E
    assert mf_apply(compose[(MF_INVOKE << 8) | MF_REGISTER], HState.S) == HState.X
    sample = 0x9E3779B9
    for _ in range(1024):
        sample = (sample * 0x41C64E6D + 0x3039) & 0xFFFFFFFF
        g, f = (sample >> 16) & 0xFF, (sample >> 8) & 0xFF
        for s in _STATES:
            assert mf_apply(compose[(g << 8) | f], s) == \
                mf_apply(g, mf_apply(f, s))
            assert mf_apply(meet[(f << 8) | g], s) == \
                hstate_meet(mf_apply(f, s), mf_apply(g, s))


def _tables() -> tuple[bytes, bytes]:
    global _COMPOSE, _MEET
    if _COMPOSE is None or _MEET is None:
        _COMPOSE, _MEET = _build_tables()
        _selfcheck(_COMPOSE, _MEET)
    return _COMPOSE, _MEET


def mf_compose(g: int, f: int) -> int:
    """g after f, via the precomputed table."""
    return _tables()[0][(g << 8) | f]


def mf_meet(f: int, g: int) -> int:
    """Pointwise meet, via the precomputed table."""
    return _tables()[1][(f << 8) | g]


def mf_leq(f: int, g: int) -> bool:
    """Pointwise order: f(s) below-or-equal g(s) for all four states."""
    return all(mf_apply(f, s) <= mf_apply(g, s) for s in _STATES)


def mf_format(f: int) -> str:
    """Render a packed chain function as a domain-to-image 4-tuple."""
    outs = ",".join(str(mf_apply(f, s)) for s in _STATES)
    return f"⟨X,S,R,E⟩→⟨{outs}⟩"


MF_EMIT_REGISTER = mf_compose_def(MF_EMIT, MF_REGISTER)


class HandlerMicroFn:
    """Separable transformer over per-handler states.

    Stores one packed chain function per handler it touches; handlers
    without an entry are mapped by the identity.  Composition, meet and
    equality are pointwise per handler, so their cost is bounded by the
    number of handlers touched.
    """

    __slots__ = ("_m",)

    def __init__(self, entries: dict[str, int] | None = None):
        self._m = {h: f for h, f in (entries or {}).items() if f != MF_ID}

    @classmethod
    def identity(cls) -> "HandlerMicroFn":
        return cls()

    def mf_for(self, handler: str) -> int:
        return self._m.get(handler, MF_ID)

    def touched(self) -> dict[str, int]:
        return dict(self._m)

    def is_identity(self) -> bool:
        return not self._m

    def __len__(self) -> int:
        return len(self._m)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, HandlerMicroFn) and self._m == other._m

    def __hash__(self) -> int:
        return hash(frozenset(self._m.items()))

    def __repr__(self) -> str:
        if not self._m:
            return "HandlerMicroFn(id)"
        body = ", ".join(f"{h}: {mf_format(f)}" for h, f in sorted(self._m.items()))
        return f"HandlerMicroFn({{{body}}})"


HMF_ID = HandlerMicroFn.identity()


def hmf_compose(g: HandlerMicroFn, f: HandlerMicroFn) -> HandlerMicroFn:
    """g after f, pointwise per handler."""
    if f.is_identity():
        return g
    if g.is_identity():
        return f
    out: dict[str, int] = {}
    for h in f._m.keys() | g._m.keys():
        out[h] = mf_compose(g.mf_for(h), f.mf_for(h))
    return HandlerMicroFn(out)


def hmf_meet(f: HandlerMicroFn, g: HandlerMicroFn) -> HandlerMicroFn:
    """Pointwise meet per handler; absent entries meet as identity."""
    if f._m == g._m:
        return f
    out: dict[str, int] = {}
    for h in f._m.keys() | g._m.keys():
        out[h] = mf_meet(f.mf_for(h), g.mf_for(h))
    return HandlerMicroFn(out)


def hmf_equal(f: HandlerMicroFn, g: HandlerMicroFn) -> bool:
    return f == g


def hmf_leq(f: HandlerMicroFn, g: HandlerMicroFn) -> bool:
    return all(mf_leq(f.mf_for(h), g.mf_for(h)) for h in f._m.keys() | g._m.keys())


def hmf_apply(f: HandlerMicroFn, m: dict[str, HState]) -> dict[str, HState]:
    """Apply a separable transformer to a dense handler-state map."""
    return {h: mf_apply(f.mf_for(h), s) for h, s in m.items()}


def all_s(handlers) -> dict[str, HState]:
    """The initial handler-state map: every handler still in S."""
    return {h: HState.S for h in handlers}


def hsm_meet(a: dict[str, HState], b: dict[str, HState]) -> dict[str, HState]:
    """Pointwise meet of two handler-state maps over the same handlers."""
    return {h: hstate_meet(s, b[h]) for h, s in a.items()}


def hsm_leq(a: dict[str, HState], b: dict[str, HState]) -> bool:
    return all(s <= b[h] for h, s in a.items())


def hsm_format(m: dict[str, HState]) -> str:
    body = ", ".join(f"{h}: {s}" for h, s in sorted(m.items()))
    return "{" + body + "}"
