import random
import time

import pytest
from hypothesis import given, settings, strategies as st

from adaptrace.core import Violated, run_core
from adaptrace.gen import gen_formula, gen_trace
from adaptrace.matching import action_pids
from adaptrace.parser import parse_script
from adaptrace.runtime import BLK, REL, SYS, Configuration, Refused, SystemState, explore, \
    explore_script, is_error, mu_moves, sys_steps
from adaptrace.syntax import TT, AdaptS, Pid, Release

from conftest import load, trace

I, K = Pid("i"), Pid("k")


def test_sync_adaptation_on_unblocked_is_error():
    f = parse_script("restart(i)_{} purge(k)_{i, k} tt", ("i", "k"))
    assert is_error(Configuration(SystemState.of("ijhk", blocked="k"), f))
    assert not is_error(Configuration(SystemState.of("ijhk", blocked="ik"), f))


def test_double_release_is_error():
    assert is_error(Configuration(SystemState.of("i"), Release((I,), TT)))


def test_blocked_subject_cannot_act():
    from adaptrace.parser import parse_event
    from adaptrace.runtime import Sys
    s = SystemState.of("ij", blocked="i")
    assert isinstance(sys_steps(s, Sys(parse_event("recv i 3", ("i",)))), Refused)


def test_mu_moves_offered_after_blocking_match():
    f = parse_script("restart(i)_{i} tt", ("i",))
    labels = [l for l, _ in mu_moves(f)]
    assert labels and labels[0].kind == "restart"


def _explore(name, tr):
    s, f = load(name)
    t0 = time.perf_counter()
    rep = explore_script(f, trace(tr, s.pids), s.pids, budget=10_000)
    return rep, time.perf_counter() - t0


def test_clean_script_has_no_error():
    rep, _ = _explore("phi_prime", "incdec")
    assert not rep.error_reachable and rep.counts["adapted-clean"] > 0


def test_non_blocking_forward_gets_stuck():
    rep, _ = _explore("phi2", "incdec")
    e = rep.errors[0]
    assert e.blocked == frozenset({K})
    assert any(l.kind == "restart" for l in e.refused)


def test_race_has_both_outcomes():
    rep, _ = _explore("phi3", "incdec")
    assert rep.error_reachable and rep.counts["adapted-clean"] > 0
    assert "error" in rep.witnesses and "adapted-clean" in rep.witnesses


def test_duplicated_adaptation_errs_on_second_unfolding():
    rep, _ = _explore("phi_err", "phi_err")
    assert rep.error_reachable
    assert min(e.index for e in rep.errors) == 2


def test_budget_exhaustion_flagged():
    s, f = load("phi3")
    rep = explore_script(f, trace("incdec", s.pids), s.pids, budget=3)
    assert rep.budget_exhausted


def test_empty_trace():
    s, f = load("phi_prime")
    rep = explore_script(f, [], s.pids)
    assert not rep.error_reachable and rep.states >= 1


@pytest.mark.parametrize("name,tr", [("phi_prime", "incdec"), ("phi3", "incdec"),
                                     ("phi_err", "phi_err")])
def test_witness_bookkeeping(name, tr):
    rep, _ = _explore(name, tr)
    s, _ = load(name)
    for outcome, sched in rep.witnesses.items():
        dom = set(s.pids).union(*(action_pids(a) for a in trace(tr, s.pids)))
        st_ = SystemState.of(dom)
        balance: dict = {}
        for l in sched:
            if l.tag == SYS:
                assert l.action.subject.v not in st_.blocked
            nxt = sys_steps(st_, l)
            if isinstance(nxt, Refused):
                assert outcome in ("error", "stuck")
                break
            st_ = nxt
            for r in l.refs:
                if l.tag == BLK:
                    balance[r] = balance.get(r, 0) + 1
                elif l.tag == REL:
                    balance[r] = balance.get(r, 0) - 1
        else:
            assert {r for r, n in balance.items() if n} == set(st_.blocked)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_monotone_detection(seed):
    rng = random.Random(seed)
    f, t = gen_formula(rng, 4), gen_trace(rng, 5)
    rep = explore_script(f, t, ("i", "j", "k"), budget=2000)
    if rep.counts.get("violation"):
        assert isinstance(run_core(f, t), Violated)
