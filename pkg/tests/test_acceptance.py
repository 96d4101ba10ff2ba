"""Acceptance suite: one check per criterion, each printing a PASS/FAIL line.

Run standalone with ``python3 tests/test_acceptance.py`` or through pytest,
where the lines are repeated in the terminal summary.
"""
from __future__ import annotations

import os
import random
import sys
import time
from collections import Counter

sys.path.insert(0, os.path.dirname(__file__))

from adaptrace.core import Violated, run_core, run_core_trace, violates_oracle  # noqa: E402
from adaptrace.dynamics import ALIASING, TYPE_MISMATCH, TypedEngine, TypedMonitor, \
    dt_explore  # noqa: E402
from adaptrace.gen import INC_ENV, gen_formula, gen_script, gen_trace, incdec_traces  # noqa: E402
from adaptrace.harness import bench, corpus_script, make_workload, replay_sync_count, \
    spec_for  # noqa: E402
from adaptrace.matching import mtch  # noqa: E402
from adaptrace.parser import parse_event, parse_pattern  # noqa: E402
from adaptrace.preprocess import prepare, syn_enc  # noqa: E402
from adaptrace.protocol import simulate_protocol  # noqa: E402
from adaptrace.runtime import SystemState, explore_script  # noqa: E402
from adaptrace.statics import excl, typecheck  # noqa: E402
from adaptrace.syntax import Atom, Int, Mode, Nec, Pid, VType, subformulas  # noqa: E402

from conftest import load, trace  # noqa: E402

# pinned tolerances
AC1_MAX_SECONDS = 1e-3
AC2_PAIRS, AC2_MAX_SECONDS, AC2_DEPTH, AC2_TRACE_LEN = 10_000, 60.0, 6, 8
AC7_BUDGET, AC7_MAX_SECONDS = 10_000, 5.0
AC8_ACCEPTED, AC8_BUDGET, AC8_MAX_SECONDS = 1_000, 50_000, 300.0
AC10_CLIENTS, AC10_SEEDS, AC10_MAX_SECONDS = 5, range(10), 10.0
AC11_BENIGN, AC11_SEEDS = 4, range(5)

RESULTS: list = []


def report(n: int, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] AC{n:<2} {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


# ---------------------------------------------------------------- 1

def test_ac01_core_golden():
    s, _ = load("intro1")
    t = trace("intro", s.pids)
    run = run_core_trace(s.formula, t)
    best = min(_timed(lambda: run_core(s.formula, t)) for _ in range(20))
    ok = isinstance(run.verdict, Violated) and run.residuals[1] == s.formula \
        and best < AC1_MAX_SECONDS
    report(1, ok, f"core golden: violated, residual after 2 events equals the script, "
                  f"{best * 1e3:.3f} ms (< {AC1_MAX_SECONDS * 1e3:.0f} ms)")


def _timed(fn) -> float:
    t0 = time.perf_counter()
    fn()
    return time.perf_counter() - t0


# ---------------------------------------------------------------- 2

def test_ac02_correspondence():
    rng = random.Random(2024)
    t0 = time.perf_counter()
    agree = 0
    for _ in range(AC2_PAIRS):
        f, t = gen_formula(rng, AC2_DEPTH), gen_trace(rng, AC2_TRACE_LEN)
        agree += violates_oracle(f, t) == isinstance(run_core(f, t), Violated)
    dt = time.perf_counter() - t0
    report(2, agree == AC2_PAIRS and dt < AC2_MAX_SECONDS,
           f"oracle/reduction agreement {agree}/{AC2_PAIRS} in {dt:.1f} s "
           f"(< {AC2_MAX_SECONDS:.0f} s)")


# ---------------------------------------------------------------- 3

MTCH_TABLE = [
    ("srv ! clnt . {x, ack, y}", "srv ! clnt . {5, ack, z}", {"x": Int(5)}),
    ("srv ! clnt . {5, ack, z}", "srv ! clnt . {x, ack, y}", {"x": Int(5)}),
    ("srv ! clnt . {x, ack, y}", "srv ! clnt . {5, ack, joe}", {"x": Int(5), "y": Atom("joe")}),
    ("srv ! clnt . {5, ack, joe}", "srv ! clnt . {5, ack, joe}", {}),
    ("clnt ! srv . {x, ack, y}", "srv ! clnt . {5, ack, joe}", None),
    ("clnt ? {x, ack, y}", "srv ! clnt . {5, ack, joe}", None),
]


def test_ac03_mtch_table():
    pids = ("srv", "clnt")
    got = [mtch(parse_pattern(a, pids), parse_pattern(b, pids)) for a, b, _ in MTCH_TABLE]
    hits = sum(g == e for g, (_, _, e) in zip(got, MTCH_TABLE))
    report(3, hits == 6, f"pattern matching table {hits}/6 exact")


# ---------------------------------------------------------------- 4

def test_ac04_syn_enc():
    s3, s4 = corpus_script("hybrid3"), corpus_script("hybrid4")
    flag, enc = syn_enc(s3.formula)
    marked = sum(1 for g in subformulas(enc) if isinstance(g, Nec) and g.mode is Mode.BLOCKING)
    ok = not flag and enc == s4.formula and marked == 2
    report(4, ok, f"synchronous-falsity encoding equals the expected script, "
                  f"{marked} necessities marked synchronous (expected 2)")


# ---------------------------------------------------------------- 5

def test_ac05_static_goldens():
    expected = {"static9": (None, False), "phi2": ("tAdS", False), "phi3": ("tAdS", True),
                "phi_err": ("tVar", False)}
    got = {}
    for name in expected:
        s, f = load(name)
        r = typecheck(f, s.types)
        got[name] = (r.rule, bool(r.rejection and r.rejection.via_side_effects))
    ok = got == expected and load("static9")[0].types == {Pid("i"): VType.LPID,
                                                          Pid("j"): VType.UPID}
    shown = ", ".join(f"{k}={v[0] or 'ok'}{'(side effects)' if v[1] else ''}"
                      for k, v in got.items())
    report(5, ok, f"static goldens: {shown}")


# ---------------------------------------------------------------- 6

def test_ac06_excl():
    _, f = load("excl")
    outer = excl(f.left, f.right)
    inner = excl(f.left.left, f.left.right)
    want = (frozenset({Pid("j"), Pid("k")}), frozenset({Pid("l")}))
    ok = outer == want and inner is None
    show = lambda a: "{" + ",".join(sorted(map(str, a))) + "}"
    report(6, ok, f"mutual exclusion: outer ({show(outer[0])},{show(outer[1])}), "
                  f"inner {'not exclusive' if inner is None else inner}")


# ---------------------------------------------------------------- 7

def test_ac07_explore_goldens():
    out = {}
    for name, tr in (("phi2", "incdec"), ("phi3", "incdec"), ("phi_err", "phi_err"),
                     ("phi_prime", "incdec")):
        s, f = load(name)
        t0 = time.perf_counter()
        rep = explore_script(f, trace(tr, s.pids), s.pids, budget=AC7_BUDGET)
        out[name] = (rep, time.perf_counter() - t0)
    phi2, phi3, err, clean = (out[k][0] for k in ("phi2", "phi3", "phi_err", "phi_prime"))
    stuck_ra9 = any(e.blocked == frozenset({Pid("k")}) and
                    any(l.kind == "restart" for l in e.refused) for e in phi2.errors)
    ok = (stuck_ra9 and phi3.error_reachable and phi3.counts["adapted-clean"] > 0
          and any(e.index == 2 for e in err.errors) and not clean.error_reachable
          and not any(r.budget_exhausted for r, _ in out.values())
          and max(dt for _, dt in out.values()) < AC7_MAX_SECONDS)
    worst = max(dt for _, dt in out.values())
    report(7, ok, f"exploration: phi2 stuck={stuck_ra9}, phi3 error+clean="
                  f"{phi3.error_reachable and phi3.counts['adapted-clean'] > 0}, "
                  f"phi_err stuck after 2nd event={any(e.index == 2 for e in err.errors)}, "
                  f"slowest {worst:.2f} s (< {AC7_MAX_SECONDS:.0f} s)")


# ---------------------------------------------------------------- 8

def test_ac08_soundness_fuzz():
    env = {Pid(k): VType(v) for k, v in INC_ENV.items()}
    rng = random.Random(8)
    traces = incdec_traces(random.Random(80))
    stats: Counter = Counter()
    t0 = time.perf_counter()
    while stats["accepted"] < AC8_ACCEPTED:
        f, _ = prepare(gen_script(rng), lint=False)
        stats["generated"] += 1
        if not typecheck(f, env).ok:
            continue
        stats["accepted"] += 1
        for t in traces:
            rep = dt_explore(SystemState.of("ijkh"), TypedMonitor.initial(env, f), t,
                             AC8_BUDGET)
            stats["explorations"] += 1
            stats["errors"] += len(rep.errors)
            stats["aborts"] += bool(rep.aborts)
            stats["exhausted"] += rep.budget_exhausted
    dt = time.perf_counter() - t0
    ok = stats["errors"] == 0 and stats["exhausted"] == 0 and dt < AC8_MAX_SECONDS
    report(8, ok, f"soundness fuzz: {stats['accepted']} accepted of {stats['generated']}, "
                  f"{stats['explorations']} explorations, {stats['errors']} errors, "
                  f"{stats['aborts']} with aborts, {dt:.1f} s (< {AC8_MAX_SECONDS:.0f} s)")


# ---------------------------------------------------------------- 9

def test_ac09_dynamic_goldens():
    pids = ("i", "j", "k", "h")
    prefix = ["recv i {inc, 5, h}", "send i i {inc, 5, h}"]

    def go(name, events):
        s, f = load(name)
        e = TypedEngine(f, s.types, s.pids)
        for ev in events:
            e.feed(parse_event(ev, pids))
        return e

    mismatch = go("static9", ["recv i {inc, 5, i}"])
    alias = go("static9", prefix + ["send i h err"])
    alias2 = go("phi_alias", ["recv i 3"])
    good = go("static9", prefix + ["send k h err"])
    deltas = [r.env_delta for r in good.log if r.rule == "rNc" and r.env_delta]
    ok = (mismatch.abort is not None and mismatch.abort.kind == TYPE_MISMATCH
          and alias.abort is not None and alias.abort.kind == ALIASING
          and alias2.abort is not None and alias2.abort.kind == ALIASING
          and good.abort is None and deltas == [{"h": "upid"}, {"k": "lpid"}])
    report(9, ok, f"dynamic typing: mismatch={mismatch.abort and mismatch.abort.kind}, "
                  f"aliasing={alias.abort and alias.abort.kind}, "
                  f"cross-branch={alias2.abort and alias2.abort.kind}, "
                  f"accepting env growth={deltas}")


# ---------------------------------------------------------------- 10

def test_ac10_overhead_ordering():
    t0 = time.perf_counter()
    rep = bench(["CA", "SMSI", "AMSD"], ["webserver"], AC10_SEEDS, AC10_CLIENTS)
    dt = time.perf_counter() - t0
    by = {(r.mode, r.seed): r for r in rep.runs}
    f = corpus_script("yaws_hybrid").formula
    ordered = replay_ok = 0
    for seed in AC10_SEEDS:
        ca, smsi, amsd = (by[(m, seed)] for m in ("CA", "SMSI", "AMSD"))
        ordered += smsi.blockingHandshakes > amsd.blockingHandshakes > ca.blockingHandshakes == 0
        replay_ok += amsd.blockingHandshakes == replay_sync_count(amsd.event_log, f)
    n = len(AC10_SEEDS)
    ok = ordered == n and replay_ok == n and dt < AC10_MAX_SECONDS
    cell = rep.cells
    means = ", ".join(f"{m}={cell[(m, f'webserver-{AC10_CLIENTS}')]['blockingHandshakes'][0]:.0f}"
                      for m in ("SMSI", "AMSD", "CA"))
    report(10, ok, f"handshakes {means}; ordering on {ordered}/{n} seeds, replay agreement "
                   f"{replay_ok}/{n}, {dt:.2f} s (< {AC10_MAX_SECONDS:.0f} s)")


# ---------------------------------------------------------------- 11

def test_ac11_mitigation():
    spec = spec_for("RA", "webserver")
    clients = AC11_BENIGN + 1
    good = 0
    for seed in AC11_SEEDS:
        bad = seed % clients
        st = simulate_protocol(spec, make_workload("webserver", clients, [bad]), seed)
        kinds = Counter(k for k, _ in st.adaptations)
        benign = {f"c{c}" for c in range(clients) if c != bad}
        done = set(map(str, st.completed))
        fine = (kinds == Counter({"skill": 1, "purge": 1}) and benign <= done
                and f"c{bad}" not in done and "violated" not in st.verdicts.values()
                and not st.errors)
        good += fine
    n = len(AC11_SEEDS)
    report(11, good == n, f"mitigation: {good}/{n} runs with exactly one silent kill and one "
                          f"purge, all {AC11_BENIGN} benign clients served")


if __name__ == "__main__":
    fails = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_ac"):
            try:
                fn()
            except AssertionError:
                fails += 1
    sys.exit(1 if fails else 0)
