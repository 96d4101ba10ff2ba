#!/usr/bin/env python3
"""Explore every interleaving for the bundled example scripts and print the reports."""
import argparse

from adaptrace.dynamics import TypedMonitor, dt_explore
from adaptrace.harness import corpus_script, corpus_text
from adaptrace.parser import parse_trace
from adaptrace.preprocess import prepare
from adaptrace.runtime import SystemState, explore_script
from adaptrace.statics import typecheck

EXAMPLES = [("phi_prime", "incdec"), ("static9", "incdec"), ("phi2", "incdec"),
            ("phi3", "incdec"), ("phi_err", "phi_err")]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--budget", type=int, default=10_000)
    ap.add_argument("--untyped", action="store_true",
                    help="ignore type headers and use the plain monitor throughout")
    a = ap.parse_args()
    for name, tr in EXAMPLES:
        s = corpus_script(name)
        f, _ = prepare(s.formula, lint=False)
        t = parse_trace(corpus_text(tr + ".trace"), s.pids)
        verdict = typecheck(f, s.types)
        print(f"## {name} on {tr}.trace  (typecheck: {verdict.rule or 'accepted'})")
        if s.types and not a.untyped:
            rep = dt_explore(SystemState.of(s.pids), TypedMonitor.initial(s.types, f), t,
                             a.budget)
        else:
            rep = explore_script(f, t, s.pids, a.budget)
        print(rep.to_text())
        print()


if __name__ == "__main__":
    main()
