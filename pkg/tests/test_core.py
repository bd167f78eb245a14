import math

import pytest
from hypothesis import given, settings, strategies as st

from reconfplan.core import (
    Behavior, BehaviorState, Configuration, Connection, CoreError, Interval, JointCommand,
    LibraryEntry, Mode, ModuleSpec, Polarity, Property, PropertyTypeError, entry_satisfies,
    parse_property, property_satisfies, validate_configuration,
)
from reconfplan.library import load_seed_library

L, C = Polarity.LITERAL, Polarity.COVERS


# -- property_satisfies examples ------------------------------------------------

def test_interval_reflexive_literal():
    # [TRIVIAL]
    p = Property("Ledge_Height", Interval(2, 3))
    assert property_satisfies(p, p, L)


def test_symbol_not_subset_literal():
    # [TRIVIAL]
    assert not property_satisfies(Property("Action", {"Drive"}), Property("Action", {"Move", "Push"}), L)


def test_cup_mass_both_polarities():
    # [DERIVED] endpoint comparison: [1,3] inside [1,5] but not the reverse
    cand, req = Property("Cup_Mass", Interval(1, 5)), Property("Cup_Mass", Interval(1, 3))
    assert property_satisfies(cand, req, C) is True
    assert property_satisfies(cand, req, L) is False


def test_names_differ():
    assert not property_satisfies(Property("A", {"x"}), Property("B", {"x"}), C)


def test_type_mismatch_names_both():
    with pytest.raises(PropertyTypeError) as ei:
        property_satisfies(Property("Speed", Interval(0, 1)), Property("Speed", {"fast"}))
    assert "Speed=[0,1]" in str(ei.value) and "Speed={fast}" in str(ei.value)


def test_closed_interval_endpoints():
    assert property_satisfies(Property("h", Interval(1, 1)), Property("h", Interval(1, 2)), L)
    assert not property_satisfies(Property("h", Interval(0.999, 1)), Property("h", Interval(1, 2)), L)


def test_empty_symbol_set_rejected():
    with pytest.raises(CoreError):
        Property("Action", frozenset())


def test_bad_interval_rejected():
    with pytest.raises(CoreError):
        Interval(3, 2)


@pytest.mark.parametrize("text,expected", [
    ("Action=[Climb]", frozenset({"Climb"})),
    ("Action={Drive,Push}", frozenset({"Drive", "Push"})),
    ("Action=Drive", frozenset({"Drive"})),
    ("height=1.5", Interval(1.5, 1.5)),
    ("Speed=[1]", Interval(1, 1)),
    ("Ledge_Height=[2,3]", Interval(2, 3)),
])
def test_parse_property(text, expected):
    assert parse_property(text).values == expected


@pytest.mark.parametrize("text", ["Action", "Action=", "Action={}", "x=[1,2,3]", "1x=2", "x=[1"])
def test_parse_property_errors(text):
    with pytest.raises(CoreError):
        parse_property(text)


# -- entry_satisfies: the snake entry ----------------------------------------------

@pytest.fixture(scope="module")
def snake():
    return load_seed_library().entry("snake-climb")


@pytest.mark.parametrize("pol", [L, C])
def test_snake_entry(snake, pol):
    # [PAPER] (Action,[Climb]) and (Speed,[1]) are properties of the snake entry
    assert entry_satisfies(snake, parse_property("Action=[Climb]"), pol)
    assert entry_satisfies(snake, parse_property("Speed=[1]"), pol)
    assert entry_satisfies(snake, parse_property("Ledge_Height=[2,3]"), pol)
    assert not entry_satisfies(snake, parse_property("Stair_Height=[1,2]"), pol)


# -- property laws ------------------------------------------------------------------

_bounds = st.floats(-10, 10, allow_nan=False).map(lambda x: round(x, 2))
intervals = st.tuples(_bounds, _bounds).map(lambda t: Interval(min(t), max(t)))
symsets = st.frozensets(st.sampled_from("abcde"), min_size=1)
values = st.one_of(intervals, symsets)


def _same_kind(a, b):
    return isinstance(a, Interval) == isinstance(b, Interval)


@given(values)
def test_reflexive(v):
    p = Property("n", v)
    assert property_satisfies(p, p, L) and property_satisfies(p, p, C)


@given(values, values)
def test_duality(a, b):
    if not _same_kind(a, b):
        return
    pa, pb = Property("n", a), Property("n", b)
    assert property_satisfies(pa, pb, L) == property_satisfies(pb, pa, C)


@settings(max_examples=200)
@given(st.one_of(st.tuples(intervals, intervals, intervals), st.tuples(symsets, symsets, symsets)))
def test_literal_partial_order(t):
    a, b, c = (Property("n", v) for v in t)
    if property_satisfies(a, b, L) and property_satisfies(b, c, L):
        assert property_satisfies(a, c, L)
    if property_satisfies(a, b, L) and property_satisfies(b, a, L):
        assert a.values == b.values


# -- configurations -------------------------------------------------------------------

def test_single_module_valid():
    assert validate_configuration(Configuration("one", (ModuleSpec("m0"),))) == []


def test_two_modules_disconnected():
    v = validate_configuration(Configuration("two", (ModuleSpec("a"), ModuleSpec("b"))))
    assert [x.kind for x in v] == ["disconnected"]


def test_attachment_reuse():
    mods = tuple(ModuleSpec(n) for n in "abc")
    edges = (Connection("a", "top", "b", "bottom"), Connection("a", "top", "c", "bottom"))
    kinds = [x.kind for x in validate_configuration(Configuration("t", mods, edges))]
    assert "attachment-reuse" in kinds


def test_seed_configurations_valid():
    lib = load_seed_library()
    for cfg in lib.configurations.values():
        assert validate_configuration(cfg) == [], cfg.id


# -- behaviors --------------------------------------------------------------------------

def test_state_duration_is_longest_command():
    st_ = BehaviorState({("m0", "left"): JointCommand(Mode.VELOCITY, 1.0, 0.5),
                         ("m0", "tilt"): JointCommand(Mode.POSITION, 0.3, 2.0)})
    assert st_.duration == 2.0
    with pytest.raises(CoreError):
        BehaviorState({("m0", "left"): JointCommand(Mode.VELOCITY, 1.0, 0.5)}, duration=1.0)


def test_seed_state_durations_recompute():
    for e in load_seed_library().entries:
        for s in e.behavior.states:
            assert math.isclose(s.duration, max(c.duration for c in s.commands.values()))


def test_behavior_check_flags_missing_joint():
    cfg = Configuration("one", (ModuleSpec("m0"),))
    b = Behavior("b", "one", (BehaviorState({("m0", "left"): JointCommand(Mode.VELOCITY, 1.0, 1.0)}),))
    problems = b.check(cfg)
    assert any("no command for joint m0.tilt" in p for p in problems)


def test_velocity_limit():
    cfg = Configuration("one", (ModuleSpec("m0"),))
    cmds = {k: JointCommand(Mode.VELOCITY, 0.0, 1.0) for k in cfg.joint_keys()}
    cmds[("m0", "left")] = JointCommand(Mode.VELOCITY, 2.0, 1.0)
    assert any("exceeds" in p for p in Behavior("b", "one", (BehaviorState(cmds),)).check(cfg))


def test_entry_rejects_duplicate_property_names():
    cfg = Configuration("one", (ModuleSpec("m0"),))
    cmds = {k: JointCommand(Mode.VELOCITY, 0.0, 1.0) for k in cfg.joint_keys()}
    b = Behavior("b", "one", (BehaviorState(cmds),))
    with pytest.raises(CoreError):
        LibraryEntry("e", cfg, b, (Property("x", {"a"}),), (Property("x", {"b"}),))
