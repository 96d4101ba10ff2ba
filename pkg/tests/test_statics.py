import random

import pytest
from hypothesis import given, settings, strategies as st

from adaptrace.gen import INC_ENV, gen_script
from adaptrace.parser import parse_script
from adaptrace.preprocess import prepare
from adaptrace.statics import TypeMismatch, eff, env_extend, env_splits, excl, typecheck
from adaptrace.syntax import And, Pid, VType

from conftest import load

I, J, K, L = (Pid(x) for x in "ijkl")
LP, UP, LB = VType.LPID, VType.UPID, VType.LPIDB


def check(src, env, pids=("i", "j", "k")):
    f, _ = prepare(parse_script(src, pids), lint=False)
    return typecheck(f, {Pid(k): VType(v) for k, v in env.items()})


def test_env_extend_agreeing():
    assert env_extend({I: LP}, {J: UP}) == {I: LP, J: UP}


def test_env_extend_conflict():
    with pytest.raises(TypeMismatch):
        env_extend({I: UP}, {I: LP})


def test_env_splits_share_unrestricted_only():
    splits = list(env_splits({I: LP, J: UP}))
    assert len(splits) == 2
    for a, b in splits:
        assert a[J] == b[J] == UP
        assert (I in a) != (I in b)


def test_eff_releases_blocked():
    assert eff({I: LB, J: UP}, {I}) == {I: LP, J: UP}


@pytest.mark.parametrize("name,rule,side", [
    ("static9", None, False),
    ("phi2", "tAdS", False),
    ("phi3", "tAdS", True),
    ("phi_err", "tVar", False),
])
def test_golden_scripts(corpus, name, rule, side):
    s, f = corpus(name)
    res = typecheck(f, s.types)
    assert res.rule == rule
    if rule:
        assert res.rejection.via_side_effects is side
    else:
        assert res.derivation is not None


def test_upid_cannot_be_blocked():
    assert check("[|j ? 3|]{j} tt", {"j": "upid"}).rule is not None


def test_linear_ref_not_shared_across_overlapping_branches():
    res = check("([|i ? x|]{} restart(i)_{i} tt) & ([|i ? 4|]{} purge(i)_{i} tt)",
                {"i": "lpid"})
    assert not res.ok


def test_exclusive_branches_may_share():
    assert check("([|i ? 3|]{} restart(i)_{i} tt) & ([|i ? 4|]{} purge(i)_{i} tt)",
                 {"i": "lpid"}).ok


def test_release_restores_linear():
    assert check("[|i ? 3|]{} restart(i)_{i} [|i ? 4|]{} purge(i)_{i} tt", {"i": "lpid"}).ok


def test_excl_golden(corpus):
    s, f = corpus("excl")
    assert excl(f.left, f.right) == (frozenset({J, K}), frozenset({L}))
    assert excl(f.left.left, f.left.right) is None


def test_derivation_renders():
    res = check("[|i ? 3|]{} restart(i)_{i} tt", {"i": "lpid"})
    text = res.derivation.render()
    assert text.splitlines()[0].startswith("t")


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_typecheck_total_on_generated(seed):
    f = gen_script(random.Random(seed))
    g, _ = prepare(f, lint=False)
    res = typecheck(g, {Pid(k): VType(v) for k, v in INC_ENV.items()})
    assert res.ok == (res.rejection is None)
