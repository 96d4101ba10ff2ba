import random

from hypothesis import given, settings, strategies as st

from adaptrace.core import Inconclusive, TriviallySatisfied, Violated, correspondence_check, \
    normalize_top, run_core, run_core_trace, violates_oracle
from adaptrace.gen import gen_formula, gen_trace
from adaptrace.parser import parse_script, parse_trace
from adaptrace.syntax import FF, TT, And

from conftest import load, trace

PIDS = ("i", "j", "k", "h")


def test_mismatch_is_trivially_satisfied():
    f = parse_script("[i ? 3] ff", PIDS)
    assert isinstance(run_core(f, parse_trace("recv i 4", PIDS)), TriviallySatisfied)
    assert isinstance(run_core(f, parse_trace("recv i 3", PIDS)), Violated)


def test_empty_trace_is_inconclusive():
    assert isinstance(run_core(parse_script("[i ? 3] ff", PIDS), []), Inconclusive)


def test_normalize_top_absorbs_units():
    f = parse_script("[i ? 3] ff", PIDS)
    assert normalize_top(And(TT, f)) == f
    assert normalize_top(And(f, FF)) == FF


def test_recursion_keeps_monitoring():
    f = parse_script("max X. ([i ? 1] X & [i ? 2] ff)", PIDS)
    t = parse_trace("recv i 1\nrecv i 1\nrecv i 2", PIDS)
    assert isinstance(run_core(f, t), Violated)
    assert not isinstance(run_core(f, t[:2]), Violated)


def test_intro_residual_returns_to_start():
    s, _ = load("intro1")
    run = run_core_trace(s.formula, trace("intro", s.pids))
    assert run.residuals[1] == s.formula
    assert isinstance(run.verdict, Violated)


def test_data_dependent_condition():
    f = parse_script("[i ? x] if x > 2 then ff else tt", PIDS)
    assert isinstance(run_core(f, parse_trace("recv i 3", PIDS)), Violated)
    assert isinstance(run_core(f, parse_trace("recv i 1", PIDS)), TriviallySatisfied)


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_oracle_agrees_with_reduction(seed):
    rng = random.Random(seed)
    f, t = gen_formula(rng), gen_trace(rng)
    assert violates_oracle(f, t) == isinstance(run_core(f, t), Violated)
    assert correspondence_check(f, t)
