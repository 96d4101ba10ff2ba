#!/usr/bin/env python3
"""Type-soundness fuzz: generated scripts accepted by the checker must never
reach an error configuration.  Rejected scripts are explored too, as a check
that the generator can produce unsafe scripts at all."""
import argparse
import random
import time
from collections import Counter

from adaptrace.dynamics import TypedMonitor, dt_explore
from adaptrace.gen import INC_ENV, gen_script, incdec_traces
from adaptrace.preprocess import prepare
from adaptrace.printer import show
from adaptrace.runtime import SystemState
from adaptrace.statics import typecheck
from adaptrace.syntax import Pid, VType


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--accepted", type=int, default=1000, help="stop after this many accepted")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--budget", type=int, default=50_000)
    ap.add_argument("--show-failures", action="store_true")
    a = ap.parse_args()
    env = {Pid(k): VType(v) for k, v in INC_ENV.items()}
    rng = random.Random(a.seed)
    traces = incdec_traces(random.Random(a.seed + 1))
    c = Counter()
    t0 = time.perf_counter()
    while c["accepted"] < a.accepted:
        f, _ = prepare(gen_script(rng), lint=False)
        ok = typecheck(f, env).ok
        c["accepted" if ok else "rejected"] += 1
        errs = 0
        for t in traces:
            rep = dt_explore(SystemState.of("ijkh"), TypedMonitor.initial(env, f), t, a.budget)
            errs += len(rep.errors)
            c["aborts"] += bool(rep.aborts)
            c["exhausted"] += rep.budget_exhausted
        if errs:
            c["accepted-with-errors" if ok else "rejected-with-errors"] += 1
            if ok and a.show_failures:
                print("UNSOUND:", show(f))
    print(dict(c), f"{time.perf_counter() - t0:.1f}s")
    raise SystemExit(1 if c["accepted-with-errors"] else 0)


if __name__ == "__main__":
    main()
