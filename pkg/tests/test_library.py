import random
import textwrap

import pytest
import yaml

from reconfplan.core import CoreError, Interval, Polarity, Property, parse_property
from reconfplan.library import (
    DesignLibrary, LibraryParseError, LibrarySemanticError, load_library, load_seed_library,
    match_variable, query, seed_library_path,
)

from _oracles import naive_satisfies


@pytest.fixture(scope="module")
def seed():
    return load_seed_library()


def test_seed_entry_count(seed):
    # [DERIVED] count of entries in the shipped file, frozen
    doc = yaml.safe_load(seed_library_path().read_text())
    assert len(doc["entries"]) == 18
    assert len(seed) == 18


def test_empty_library():
    lib = load_library("schema_version: 1\nentries: []\n")
    assert len(lib) == 0
    assert match_variable(lib, "y", []).matched == ()


ONE_MODULE = textwrap.dedent("""\
    schema_version: 1
    configurations:
      - id: one
        modules: [m0]
    entries:
      - id: bad
        configuration: one
        behavior:
          states:
            - commands: {m0.elbow: [position, 0.0, 1.0]}
      - id: also-bad
        configuration: nowhere
        behavior: {states: []}
    """)


def test_missing_joint_semantic_error_lists_all():
    with pytest.raises(LibrarySemanticError) as ei:
        load_library(ONE_MODULE)
    text = str(ei.value)
    assert "unknown joint m0.elbow" in text
    assert "unknown configuration nowhere" in text


def test_parse_error_has_line():
    with pytest.raises(LibraryParseError) as ei:
        load_library("schema_version: 1\nentries: [\n  - {id: x\n")
    assert ei.value.line is not None


def test_parse_error_field_path():
    doc = ONE_MODULE.replace("[position, 0.0, 1.0]", "[position, 0.0]")
    with pytest.raises(LibraryParseError) as ei:
        load_library(doc)
    assert "entries[0].behavior.states[0].commands.m0.elbow" in str(ei.value)


def test_push_example(seed):
    # [PAPER] the drive-and-push requirement is served by doubleDriver
    reqs = [parse_property(s) for s in ("Cup_Mass=[1,3]", "Action=[Drive]", "Speed=[1]")]
    b1 = match_variable(seed, "push", reqs)
    b2 = match_variable(seed, "push", list(reversed(reqs)))
    assert b1.matched == b2.matched == ("doubleDriver-turnAndDrive",)


def test_fly_unmatched(seed):
    assert match_variable(seed, "fly", [parse_property("Action=[Fly]")]).matched == ()


def test_empty_requirements_match_all(seed):
    assert match_variable(seed, "y", []).matched == tuple(sorted(e.id for e in seed.entries))


def test_duplicate_requirement_names_rejected(seed):
    with pytest.raises(ValueError):
        match_variable(seed, "y", [parse_property("Speed=1"), parse_property("Speed=2")])


def test_query_climb(seed):
    # [DERIVED] scan of the seed file under the covers polarity for Action
    assert query(seed, parse_property("Action=[Climb]")) == [
        "snake-climb", "snake7-climbdown", "snake7-climbup", "stairClimber-climb"]


def test_query_ledge(seed):
    assert "stairClimber-climb" in query(seed, parse_property("Ledge_Height=[0.75,0.75]"))


def test_query_empty_set_rejected():
    with pytest.raises(CoreError):
        parse_property("Action={}")


def test_polarity_override(seed):
    lit = seed.with_polarity({"Ledge_Height": Polarity.LITERAL})
    assert query(lit, parse_property("Ledge_Height=[0.75,0.75]")) == []
    assert query(lit, parse_property("Ledge_Height=[0,3]")) == [
        "rollingLoop-forward", "snake-climb", "snake7-climbdown", "snake7-climbup",
        "stairClimber-climb"]


# -- randomized properties ----------------------------------------------------------

def _random_requirement(rng, seed_lib):
    entry = rng.choice(seed_lib.entries)
    props = entry.properties
    if not props or rng.random() < 0.2:
        if rng.random() < .5:
            return Property(rng.choice(["Action", "Fly"]), {rng.choice(["Climb", "Drive"])})
        return Property("Speed", Interval(0, rng.choice([0.5, 1, 3])))
    p = rng.choice(props)
    if p.is_interval:
        lo, hi = p.values.lo, p.values.hi
        a = rng.uniform(lo - 1, hi)
        return Property(p.name, Interval(round(a, 2), round(a + rng.uniform(0, 2), 2)))
    syms = sorted(p.values)
    k = rng.randint(1, len(syms))
    return Property(p.name, frozenset(rng.sample(syms, k)) | ({"Zap"} if rng.random() < .1 else set()))


def _random_reqset(rng, lib, n):
    out = {}
    for _ in range(n):
        r = _random_requirement(rng, lib)
        out.setdefault(r.name, r)
    return list(out.values())


def _oracle_match(lib, reqs):
    hits = []
    for e in lib.entries:
        ok = True
        for r in reqs:
            covers = lib.polarity_of(r.name) is Polarity.COVERS
            vals = lambda v: (v.lo, v.hi) if isinstance(v, Interval) else v  # noqa: E731
            if not any(p.name == r.name and p.is_interval == r.is_interval
                       and naive_satisfies(vals(p.values), vals(r.values), covers)
                       for p in e.properties):
                ok = False
        if ok:
            hits.append(e.id)
    return tuple(sorted(hits))


def test_anti_monotone_1000(seed):
    rng = random.Random(20240601)
    for _ in range(1000):
        reqs = _random_reqset(rng, seed, rng.randint(0, 3))
        extra = _random_requirement(rng, seed)
        if any(r.name == extra.name for r in reqs):
            continue
        small = match_variable(seed, "y", reqs).matched
        big = match_variable(seed, "y", reqs + [extra]).matched
        assert set(big) <= set(small)


def test_matching_agrees_with_oracle(seed):
    rng = random.Random(7)
    for _ in range(300):
        reqs = _random_reqset(rng, seed, rng.randint(1, 3))
        assert match_variable(seed, "y", reqs).matched == _oracle_match(seed, reqs)


def test_order_independence(seed):
    rng = random.Random(3)
    for _ in range(20):
        shuffled = list(seed.entries)
        rng.shuffle(shuffled)
        lib = DesignLibrary(tuple(shuffled), seed.polarity, seed.schema_version, seed.configurations)
        reqs = _random_reqset(rng, seed, 2)
        assert match_variable(lib, "y", reqs) == match_variable(seed, "y", reqs)


def test_growth_monotone(seed):
    rng = random.Random(11)
    for _ in range(100):
        k = rng.randint(0, len(seed.entries))
        part = DesignLibrary(tuple(rng.sample(seed.entries, k)), seed.polarity)
        reqs = _random_reqset(rng, seed, rng.randint(1, 2))
        assert set(match_variable(part, "y", reqs).matched) <= set(match_variable(seed, "y", reqs).matched)
