import random

from hypothesis import given, settings, strategies as st

from adaptrace.gen import gen_formula, gen_script, gen_trace, incdec_traces
from adaptrace.matching import free_formula_vars, is_closed_action
from adaptrace.preprocess import check_guarded, prepare
from adaptrace.syntax import size

seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=200, deadline=None)
@given(seeds)
def test_formulas_closed_and_guarded(seed):
    f = gen_formula(random.Random(seed))
    assert not free_formula_vars(f)
    assert check_guarded(f)


@settings(max_examples=200, deadline=None)
@given(seeds)
def test_scripts_prepare(seed):
    prepare(gen_script(random.Random(seed)), lint=False)


@given(seeds)
def test_traces_are_closed(seed):
    assert all(is_closed_action(a) for a in gen_trace(random.Random(seed)))


def test_deterministic_from_seed():
    assert gen_script(random.Random(7)) == gen_script(random.Random(7))


def test_scripts_are_not_trivial():
    sizes = [size(gen_script(random.Random(s))) for s in range(200)]
    assert sum(sizes) / len(sizes) > 8


def test_incdec_traces():
    ts = incdec_traces(random.Random(0))
    assert len(ts) == 5 and all(ts)
