import random

import pytest
from hypothesis import given, settings, strategies as st

from adaptrace.gen import gen_formula, gen_script
from adaptrace.parser import ParseError, RuntimeConstructError, parse_event, parse_script, \
    parse_trace
from adaptrace.printer import show
from adaptrace.syntax import RECV, SEND, AdaptS, Atom, Int, Lit, Mode, Nec, Pid, SyncFls, VTuple

PIDS = ("i", "j", "k", "h")


def test_blocking_necessity_and_sync_adaptation():
    f = parse_script("[|i ? 3|]{} restart(i)_{i} tt", PIDS)
    assert isinstance(f, Nec) and f.mode is Mode.BLOCKING
    assert isinstance(f.body, AdaptS) and f.body.adaptees == (Pid("i"),)


def test_binders_scope_over_body():
    f = parse_script("[i ? x] [j ! x . x] ff", PIDS)
    assert f.pat.binds == frozenset({"x"})
    assert f.body.pat.binds == frozenset()


def test_sff_keyword():
    assert isinstance(parse_script("sff"), SyncFls)


@pytest.mark.parametrize("src", ["block(i) tt", "release{i} tt", "clr X. tt"])
def test_runtime_constructs_rejected(src):
    with pytest.raises(RuntimeConstructError):
        parse_script(src, PIDS)


def test_error_has_position():
    with pytest.raises(ParseError, match=r"1:7"):
        parse_script("[i ? 3", PIDS)


def test_trace_parsing():
    t = parse_trace("pids: i, h\nrecv i {inc, 5, h}\nsend i j {res, 6}\n")
    assert t[0].kind == RECV and t[1].kind == SEND
    assert t[0].payload == Lit(VTuple((Atom("inc"), Int(5), Pid("h"))))


def test_event_parsing():
    e = parse_event("send k h err", PIDS)
    assert e.subject == Lit(Pid("k")) and e.target == Lit(Pid("h"))


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_print_parse_roundtrip(seed):
    rng = random.Random(seed)
    for f in (gen_formula(rng), gen_script(rng)):
        assert parse_script(show(f), PIDS) == f
