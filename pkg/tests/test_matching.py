import pytest
from hypothesis import given, strategies as st

from adaptrace.matching import action_pids, match_action, mtch, tbnd
from adaptrace.parser import parse_event, parse_pattern
from adaptrace.syntax import Atom, Int, Pid, VType

P = ("srv", "clnt", "i", "h")


def pat(s, bound=()):
    return parse_pattern(s, P, bound)


@pytest.mark.parametrize("a,b,expected", [
    ("srv ! clnt . {x, ack, y}", "srv ! clnt . {5, ack, z}", {"x": Int(5)}),
    ("srv ! clnt . {5, ack, z}", "srv ! clnt . {x, ack, y}", {"x": Int(5)}),
    ("srv ! clnt . {x, ack, y}", "srv ! clnt . {5, ack, joe}", {"x": Int(5), "y": Atom("joe")}),
    ("srv ! clnt . {5, ack, joe}", "srv ! clnt . {5, ack, joe}", {}),
    ("clnt ! srv . {x, ack, y}", "srv ! clnt . {5, ack, joe}", None),
    ("clnt ? {x, ack, y}", "srv ! clnt . {5, ack, joe}", None),
])
def test_mtch_table(a, b, expected):
    assert mtch(pat(a), pat(b)) == expected


def test_wildcard_matches_anything():
    assert match_action(pat("_ ! _ . _"), parse_event("send srv clnt 3", P)) == {}


def test_tuple_arity_mismatch():
    assert mtch(pat("i ? {x, y}"), pat("i ? {1, 2, 3}")) is None


def test_repeated_variable_must_agree():
    p = pat("i ? {x, x}")
    assert match_action(p, parse_event("recv i {1, 1}", P)) == {"x": Int(1)}
    assert match_action(p, parse_event("recv i {1, 2}", P)) is None


def test_typed_bindings():
    p = pat("i ? {inc, x:dat, y:upid}")
    assert tbnd(p) == {"y": VType.UPID}


def test_action_pids():
    assert action_pids(parse_event("send i h {res, 6}", P)) == {Pid("i"), Pid("h")}


@given(st.integers(-5, 5), st.sampled_from(["ack", "nack"]))
def test_closed_action_matches_itself(n, tag):
    e = parse_event(f"send srv clnt {{{n}, {tag}}}", P)
    assert mtch(e, e) == {}
