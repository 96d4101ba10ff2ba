import pytest
from hypothesis import given, settings, strategies as st

from adaptrace.harness import MALICIOUS_PATH, corpus_script, make_workload, replay_sync_count, \
    spec_for, workload_incdec, workload_webserver
from adaptrace.protocol import InstrMode, ModeConflict, instrument, simulate_protocol, val
from adaptrace.syntax import Atom, Int, Pid, VTuple


def run(mode, wl, seed=0, **kw):
    family = "webserver" if wl.startswith("webserver") else "incdec"
    return simulate_protocol(spec_for(mode, family), make_workload(wl, **kw), seed)


def test_val_conversion():
    assert val(("res", 6)) == VTuple((Atom("res"), Int(6)))
    assert val(Pid("h")) == Pid("h")


def test_ca_refuses_sync_adaptations():
    s = corpus_script("static9")
    with pytest.raises(ModeConflict):
        instrument(s.formula, InstrMode.CA, s.types)


def test_ca_has_no_handshakes():
    st_ = run("CA", "webserver")
    assert st_.blockingHandshakes == 0 and st_.events > 0


def test_smsi_handshakes_every_observed_event():
    st_ = run("SMSI", "webserver")
    assert st_.blockingHandshakes == st_.events


def test_amsd_matches_replay():
    st_ = run("AMSD", "webserver", seed=4)
    f = corpus_script("yaws_hybrid").formula
    assert st_.blockingHandshakes == replay_sync_count(st_.event_log, f)


@pytest.mark.parametrize("mode", ["CA", "SMSI", "AMSD"])
def test_faulty_incdec_detected(mode):
    st_ = run(mode, "incdec-faulty")
    assert "violated" in st_.verdicts.values()


@pytest.mark.parametrize("mode", ["CA", "SMSI", "AMSD", "RA"])
def test_correct_incdec_not_violated(mode):
    st_ = run(mode, "incdec")
    assert "violated" not in st_.verdicts.values()
    assert st_.completed


def test_ra_incdec_restarts_and_purges():
    st_ = run("RA", "incdec-faulty")
    assert [f"{k}({p})" for k, p in st_.adaptations] == ["restart(i)", "purge(k)"]
    assert st_.adptMessages == 2 and not st_.errors
    assert st_.quiescent_nonces == 0


def test_ra_webserver_kills_only_malicious():
    st_ = run("RA", "webserver", seed=1, clients=4, malicious=[2])
    kinds = [k for k, _ in st_.adaptations]
    assert sorted(kinds) == ["purge", "skill"]
    assert sorted(map(str, st_.completed)) == ["c0", "c1", "c3"]


def test_malicious_path_outside_whitelist():
    wl = workload_webserver(3, [1])
    assert wl.connections[1][1] == MALICIOUS_PATH
    assert any("../" in h[2] for h in wl.connections[1][2])


def test_workload_names():
    assert workload_incdec(True).name == "incdec-faulty"
    with pytest.raises(ValueError):
        make_workload("nope")


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(["CA", "SMSI", "AMSD", "RA"]))
def test_seeded_runs_reproducible(seed, mode):
    a = run(mode, "webserver", seed, clients=3).record()
    b = run(mode, "webserver", seed, clients=3).record()
    assert a == b


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000))
def test_handshake_ordering_holds_per_seed(seed):
    n = {m: run(m, "webserver", seed).blockingHandshakes for m in ("CA", "AMSD", "SMSI")}
    assert n["SMSI"] > n["AMSD"] > n["CA"] == 0
