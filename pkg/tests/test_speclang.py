import random
from itertools import product

import pytest

from reconfplan.logic import Iff, Or, TRUE, Var, to_text, variables
from reconfplan.pipeline import data_file
from reconfplan.speclang import (
    AndE, Atom, BoolConst, Conditional, Do, IffS, InfinitelyOften, NotE, OrE, SetReset,
    SpecError, SpecSource, SpecSyntaxError, UndeclaredNameError, Visit, load_spec_file, lower,
    parse, parse_sentence, pretty,
)

from _oracles import ev, ev_all

DECL = """\
environment: mug, trash, wasteBin
regions: ground, dock, table
adjacent: ground-dock, dock-table
actions: spin, push, pickup, explore
memory: carry, loc1visited
spec:
"""


def body(*lines):
    return parse(DECL + "\n".join(lines) + "\n")


# -- parse examples -------------------------------------------------------------

def test_visit():
    assert parse_sentence("visit Classroom") == Visit("Classroom")


def test_set_reset_false():
    # [PAPER] "set on pickup and reset on false"
    assert parse_sentence("carry is set on pickup and reset on false") == \
        SetReset("carry", Atom("name", "pickup"), BoolConst(False))


def test_iff_composition():
    s = parse_sentence("do push if and only if you are sensing trash and you are not activating carry")
    assert s == IffS("push", AndE((Atom("sensing", "trash"), NotE(Atom("activating", "carry")))))


def test_clause_groups_distribute_tense():
    s = parse_sentence("if you were in (dock or table) then do spin")
    assert s == Conditional(OrE((Atom("were_in", "dock"), Atom("were_in", "table"))), Do("spin"))


def test_robot_senses_and_activated():
    s = parse_sentence("if the robot senses mug and you activated spin then do push")
    assert s == Conditional(AndE((Atom("sensing", "mug"), Atom("activated", "spin"))), Do("push"))


def test_infinitely_often_assumption():
    s = parse_sentence("infinitely often not you are sensing mug")
    assert s == InfinitelyOften(NotE(Atom("sensing", "mug")))


def test_comments_and_blank_lines():
    ast = parse(DECL + "# a comment\n\nvisit dock  # trailing\n")
    assert ast.sentences == (Visit("dock"),)


def test_shipped_specs_parse():
    for name in ("scenario1.spec", "scenario2.spec", "tabletop_wastebin.spec",
                 "tabletop_clean.spec", "unmatched_goal.spec"):
        ast = load_spec_file(data_file(f"specs/{name}"))
        assert ast.sentences
        lower(ast).validate()


# -- errors ----------------------------------------------------------------------

def test_syntax_error_position_and_expected():
    with pytest.raises(SpecSyntaxError) as ei:
        body("visit dock", "do spin if and only if you are sensing")
    e = ei.value
    assert (e.line, e.col) == (8, 39)
    assert e.expected == ["NAME"]


def test_syntax_error_bad_start():
    with pytest.raises(SpecSyntaxError) as ei:
        parse_sentence("please spin", 4)
    assert ei.value.line == 4 and ei.value.col == 1
    assert "visit" in ei.value.expected and "do" in ei.value.expected


def test_syntax_error_trailing():
    with pytest.raises(SpecSyntaxError) as ei:
        parse_sentence("visit dock now")
    assert ei.value.col == 12 and ei.value.expected == ["end of sentence"]


def test_bad_character():
    with pytest.raises(SpecSyntaxError) as ei:
        parse_sentence("visit dock!")
    assert ei.value.col == 11


def test_undeclared_name():
    with pytest.raises(UndeclaredNameError) as ei:
        body("visit kitchen")
    assert ei.value.line == 7


def test_wrong_class():
    with pytest.raises(SpecError):
        body("if you are sensing spin then do push")
    with pytest.raises(SpecError):
        body("do mug if and only if you are sensing trash")


def test_assumption_restrictions():
    with pytest.raises(SpecError):
        body("if you were sensing mug then you are activating spin")
    with pytest.raises(SpecError):
        body("if you are activating spin then you are sensing mug")
    body("if you were activating spin then you are sensing mug")


def test_unknown_declaration():
    with pytest.raises(SpecSyntaxError):
        parse("sensors: a\nspec:\n")


def test_implicit_memory():
    ast = parse("actions: pickup\nspec:\ncarry is set on pickup and reset on false\n")
    assert ast.source.memory == ["carry"]


# -- round trip ------------------------------------------------------------------

ENV, REG, ACT, MEM = ["mug", "trash", "wasteBin"], ["ground", "dock", "table"], \
    ["spin", "push", "pickup", "explore"], ["carry", "loc1visited"]


def _rand_expr(rng, depth, kinds):
    if depth == 0 or rng.random() < 0.35:
        kind = rng.choice(kinds)
        if kind == "const":
            return BoolConst(rng.random() < .5)
        pool = {"sensing": ENV, "were_sensing": ENV, "in": REG, "were_in": REG,
                "activating": ACT + MEM, "were_activating": ACT + MEM,
                "activated": ACT, "name": ENV + ACT + MEM + REG}[kind]
        return Atom(kind, rng.choice(pool))
    r = rng.random()
    if r < 0.3:
        return NotE(_rand_expr(rng, depth - 1, kinds))
    args = tuple(_rand_expr(rng, depth - 1, kinds) for _ in range(rng.randint(2, 3)))
    return AndE(args) if r < 0.65 else OrE(args)


ALL = ["sensing", "were_sensing", "in", "were_in", "activating", "were_activating",
       "activated", "name", "const"]


def _rand_sentence(rng):
    k = rng.randrange(7)
    if k == 0:
        return Visit(rng.choice(REG + ACT + MEM))
    if k == 1:
        return IffS(rng.choice(ACT), _rand_expr(rng, 3, ALL))
    if k == 2:
        return SetReset(rng.choice(MEM), _rand_expr(rng, 2, ALL), _rand_expr(rng, 2, ALL))
    if k == 3:
        return Conditional(_rand_expr(rng, 3, ALL), Do(rng.choice(ACT)))
    if k == 4:
        return InfinitelyOften(Do(rng.choice(ACT)))
    if k == 5:
        cond = _rand_expr(rng, 2, [c for c in ALL if c != "activating"])
        return Conditional(cond, _rand_expr(rng, 2, ["sensing", "in", "were_sensing"]))
    return InfinitelyOften(_rand_expr(rng, 2, ["sensing", "in", "were_sensing"]))


def test_round_trip_random():
    rng = random.Random(5)
    for _ in range(300):
        ast = body()
        ast.sentences = tuple(_rand_sentence(rng) for _ in range(rng.randint(1, 5)))
        text = pretty(ast)
        again = parse(text)
        assert again == ast, text
        assert pretty(again) == text


def test_round_trip_shipped():
    for name in ("tabletop_wastebin.spec", "tabletop_clean.spec", "scenario2.spec"):
        ast = load_spec_file(data_file(f"specs/{name}"))
        again = parse(pretty(ast))
        assert again == ast
        assert again.source.requirements == ast.source.requirements


# -- lowering --------------------------------------------------------------------

def test_lower_visit():
    assert Var("dock") in lower(body("visit dock")).sys_liveness


def test_lower_set_reset_latches():
    # [DERIVED] truth table: once the trigger holds, the latch stays up forever
    spec = lower(body("carry is set on pickup and reset on false"))
    f = spec.sys_safety[0]
    assert f == Iff(Var("carry", True), Or((Var("pickup"), Var("carry"))))
    for carry, pickup in product((False, True), repeat=2):
        nxt_ok = [c2 for c2 in (False, True) if ev(f, {"carry": carry, "pickup": pickup}, {"carry": c2})]
        assert nxt_ok == [carry or pickup]


def test_lower_set_reset_with_reset():
    spec = lower(body("carry is set on pickup and reset on you were sensing trash"))
    f = spec.sys_safety[0]
    for carry, pickup, trash in product((False, True), repeat=3):
        cur = {"carry": carry, "pickup": pickup, "trash": trash}
        want = pickup or (carry and not trash)
        assert ev(f, cur, {"carry": want}) and not ev(f, cur, {"carry": not want})


def test_lower_iff_were_sensing():
    spec = lower(body("do pickup if and only if you were sensing wasteBin"))
    assert Iff(Var("pickup", True), Var("wasteBin")) in spec.sys_safety


def test_lower_priming_table():
    spec = lower(body("if you are sensing mug and you were activating spin then do push"))
    assert to_text(spec.sys_safety[0]) == "mug' & spin -> push'"


def test_lower_activated_memory():
    spec = lower(body("if you activated spin then do push"))
    assert "_past_spin" in spec.sys_vars
    assert "_past_spin' <-> _past_spin | spin" in [to_text(f) for f in spec.sys_safety]


def test_lower_assumptions_and_defaults():
    spec = lower(body("if you were sensing mug then you are sensing mug",
                      "infinitely often not you are sensing trash"))
    assert to_text(spec.env_safety[-1]) == "mug -> mug'"
    assert [to_text(f) for f in spec.env_liveness] == ["!trash"]
    assert spec.sys_liveness == (TRUE,)


def test_lower_regions():
    spec = lower(body())
    regions = ["ground", "dock", "table"]
    names = list(spec.env_vars) + list(spec.sys_vars)
    for bits in product((False, True), repeat=3):
        cur = dict(zip(regions, bits)) | {n: False for n in names if n not in regions}
        assert ev_all(spec.env_init, cur) == (sum(bits) == 1)
    # ground may not jump to table
    cur = {n: False for n in names} | {"ground": True}
    nxt = {n: False for n in names} | {"table": True}
    assert not ev_all(spec.env_safety, cur, nxt)
    assert ev_all(spec.env_safety, cur, {n: False for n in names} | {"dock": True})


def test_lower_sys_init_all_false():
    spec = lower(body("visit dock"))
    assert [to_text(f) for f in spec.sys_init] == [f"!{v}" for v in spec.sys_vars]
    assert spec.sys_vars == ("spin", "push", "pickup", "explore", "carry", "loc1visited")


def test_env_safety_never_reads_next_robot_state():
    for name in ("tabletop_clean.spec", "tabletop_wastebin.spec", "scenario1.spec"):
        spec = lower(load_spec_file(data_file(f"specs/{name}")))
        for f in spec.env_safety:
            assert not any(p and n in spec.sys_vars for n, p in variables(f))


def test_lower_with_external_decls():
    src = SpecSource(environment=["e"], actions=["a"])
    ast = parse("do a if and only if you are sensing e\n", src)
    assert to_text(lower(ast).sys_safety[0]) == "a' <-> e'"
