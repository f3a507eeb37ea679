import itertools
import random

import pytest

from evflow.ifds import (
    FactDomain,
    ZERO,
    apply_rel,
    canon_rel,
    compose_rel,
    identity_rel,
    meet_rel,
    rep_relation,
)


def subsets(domain):
    idx = list(domain.indices())
    for k in range(len(idx) + 1):
        for combo in itertools.combinations(idx, k):
            yield frozenset(combo)


def relation_function(pairs):
    """The distributive set function defined by arbitrary relation pairs."""
    def f(s):
        out = set()
        for d1, d2 in pairs:
            if d2 == ZERO:
                continue
            if d1 == ZERO or d1 in s:
                out.add(d2)
        return frozenset(out)
    return f


def random_relation(rng, domain):
    universe = [ZERO, *domain.indices()]
    pairs = {(ZERO, ZERO)}
    for d1 in universe:
        for d2 in domain.indices():
            if rng.random() < 0.3:
                pairs.add((d1, d2))
    return frozenset(pairs)


def test_assignment_relation_matches_reference():
    # x = y + z: x is possibly uninitialized iff y or z is
    domain = FactDomain(["x", "y", "z"])
    x, y, z = (domain.index_of(v) for v in "xyz")

    def f(s):
        if y in s or z in s:
            return s | {x}
        return s - {x}

    assert rep_relation(f, domain) == frozenset(
        {(ZERO, ZERO), (y, x), (y, y), (z, x), (z, z)})


def test_apply_reference_relation():
    domain = FactDomain(["x", "y", "z"])
    x, y, z = (domain.index_of(v) for v in "xyz")
    r = frozenset({(ZERO, ZERO), (y, x), (y, y), (z, x), (z, z)})
    assert apply_rel(r, {y}) == frozenset({x, y})
    assert apply_rel(r, frozenset()) == frozenset()
    assert apply_rel(r, {x}) == frozenset()


def test_identity_and_kill_all():
    domain = FactDomain(["a", "b"])
    assert rep_relation(lambda s: s, domain) == identity_rel(domain)
    assert rep_relation(lambda s: frozenset(), domain) == frozenset(
        {(ZERO, ZERO)})


def test_apply_equals_direct_evaluation_randomized():
    rng = random.Random(7)
    domain = FactDomain(["a", "b", "c", "d"])
    for _ in range(50):
        pairs = random_relation(rng, domain)
        f = relation_function(pairs)
        r = rep_relation(f, domain)
        for s in subsets(domain):
            assert apply_rel(r, s) == f(s), (pairs, s)


def test_compose_matches_function_composition():
    rng = random.Random(11)
    domain = FactDomain(["a", "b", "c", "d"])
    for _ in range(40):
        f = relation_function(random_relation(rng, domain))
        g = relation_function(random_relation(rng, domain))
        rf, rg = rep_relation(f, domain), rep_relation(g, domain)
        composed = compose_rel(rf, rg)
        for s in subsets(domain):
            assert apply_rel(composed, s) == g(f(s))


def test_meet_matches_union():
    rng = random.Random(13)
    domain = FactDomain(["a", "b", "c"])
    for _ in range(40):
        f = relation_function(random_relation(rng, domain))
        g = relation_function(random_relation(rng, domain))
        rf, rg = rep_relation(f, domain), rep_relation(g, domain)
        met = meet_rel(rf, rg)
        for s in subsets(domain):
            assert apply_rel(met, s) == f(s) | g(s)


def test_identity_neutral_and_meet_idempotent():
    rng = random.Random(17)
    domain = FactDomain(["a", "b", "c"])
    rid = identity_rel(domain)
    for _ in range(20):
        r = rep_relation(relation_function(random_relation(rng, domain)),
                         domain)
        assert compose_rel(rid, r) == r
        assert compose_rel(r, rid) == r
        assert meet_rel(r, r) == r


@pytest.mark.parametrize("names", [["a", "b"], ["a", "b", "c"]])
def test_canonical_form_idempotent_exhaustive_small(names):
    # every canonical relation rebuilds to itself, and canonicalization
    # preserves the represented function
    domain = FactDomain(names)
    universe = [ZERO, *domain.indices()]
    cells = [(d1, d2) for d1 in universe for d2 in domain.indices()]
    all_subsets = list(subsets(domain))
    for bits in range(2 ** len(cells)):
        pairs = frozenset({(ZERO, ZERO)} | {
            cells[i] for i in range(len(cells)) if bits >> i & 1})
        canon = canon_rel(pairs)
        rebuilt = rep_relation(relation_function(canon), domain)
        assert rebuilt == canon
        f = relation_function(pairs)
        for s in all_subsets:
            assert apply_rel(canon, s) == f(s)


def test_outputs_stay_canonical():
    rng = random.Random(23)
    domain = FactDomain(["a", "b", "c"])

    def is_canonical(r):
        if (ZERO, ZERO) not in r:
            return False
        gen = {d2 for d1, d2 in r if d1 == ZERO and d2 != ZERO}
        return not any(d1 != ZERO and d2 in gen for d1, d2 in r)

    for _ in range(40):
        rf = rep_relation(relation_function(random_relation(rng, domain)),
                          domain)
        rg = rep_relation(relation_function(random_relation(rng, domain)),
                          domain)
        assert is_canonical(compose_rel(rf, rg))
        assert is_canonical(meet_rel(rf, rg))


def test_domain_validation():
    with pytest.raises(ValueError):
        FactDomain(["a", "a"])
    d = FactDomain(["p", "q"])
    assert d.name_of(d.index_of("q")) == "q"
    assert d.names_of({1, 2}) == frozenset({"p", "q"})
