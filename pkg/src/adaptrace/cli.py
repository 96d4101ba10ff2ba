"""Command-line front end: typecheck | run | explore | bench."""
from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional

from .core import TriviallySatisfied, Violated, run_core
from .dynamics import TypedEngine, TypedMonitor, dt_explore
from .harness import bench, make_workload
from .parser import ParseError, load_script, parse_trace
from .preprocess import PreprocessError, encode_hybrid, prepare
from .protocol import InstrMode, ModeConflict, instrument, simulate_protocol
from .runtime import SystemState, explore
from .statics import typecheck
from .syntax import AdaptA, AdaptS, Mode, Nec, SyncFls, subformulas

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Usage(Exception):
    pass


def _read(path: str) -> str:
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as e:
        raise _Usage(f"cannot read {path}: {e.strerror}") from None


def _emit(args, obj, text: Optional[str] = None):
    if args.format == "json":
        print(json.dumps(obj, default=str))
    else:
        print(text if text is not None else obj)


def _is_ra(f) -> bool:
    return any(isinstance(g, (AdaptA, AdaptS)) or
               (isinstance(g, Nec) and (g.mode is not Mode.CORE or g.releases))
               for g in subformulas(f))


def _load(args, path: str):
    script = load_script(_read(path))
    f = script.formula
    if any(isinstance(g, SyncFls) for g in subformulas(f)):
        f = encode_hybrid(f)
    g, warnings = prepare(f, lint=not getattr(args, "no_lint", False))
    return script, g, warnings


# ---------------------------------------------------------------- typecheck

def cmd_typecheck(args) -> int:
    script, f, warnings = _load(args, args.script)
    for w in warnings:
        print(str(w), file=sys.stderr)
    res = typecheck(f, script.types)
    env = {str(k): v.value for k, v in script.types.items()}
    if res.ok:
        rec = {"script": args.script, "accepted": True, "env": env}
        _emit(args, rec, f"{args.script}: accepted under {env}")
        if args.derivation:
            print(res.derivation.render())
        return EXIT_OK
    r = res.rejection
    rec = {"script": args.script, "accepted": False, "rule": r.rule, "message": r.message,
           "ref": None if r.ref is None else str(r.ref),
           "viaSideEffects": r.via_side_effects}
    side = " (under side effects of a mutually exclusive branch)" if r.via_side_effects else ""
    _emit(args, rec, f"{args.script}: rejected by {r.rule}{side}: {r.message}")
    return EXIT_FAIL


# ---------------------------------------------------------------- run

def _report_explore(args, rep) -> None:
    if args.format == "json":
        print(json.dumps(rep.summary(), default=str))
    else:
        print(rep.to_text())


def cmd_run(args) -> int:
    script, f, warnings = _load(args, args.script)
    for w in warnings:
        print(str(w), file=sys.stderr)
    if args.workload:
        return _run_workload(args, script)
    if not args.trace:
        raise _Usage("run needs --trace FILE or --workload NAME")
    trace = parse_trace(_read(args.trace), script.pids)
    if not _is_ra(f):
        v = run_core(f, trace)
        name = {Violated: "violated", TriviallySatisfied: "satisfied"}.get(type(v), "inconclusive")
        _emit(args, {"verdict": name}, f"verdict: {name}")
        return EXIT_FAIL if isinstance(v, Violated) else EXIT_OK
    res = typecheck(f, script.types)
    if not res.ok:
        if not args.unsafe:
            r = res.rejection
            print(f"refusing to run: rejected by {r.rule}: {r.message} (use --unsafe to explore)",
                  file=sys.stderr)
            return EXIT_FAIL
        rep = dt_explore(SystemState.of(script.pids), TypedMonitor.initial(script.types, f),
                         trace, args.budget)
        _report_explore(args, rep)
        return EXIT_OK
    eng = TypedEngine(f, script.types, script.pids)
    for a in trace:
        eng.feed(a)
        if eng.verdict is not None:
            break
    for rec in eng.log:
        if args.format == "json":
            print(json.dumps(rec.to_json()))
        else:
            print(f"{rec.step:>3} {rec.rule:<5} {rec.label}"
                  + (f"  env {rec.env_delta}" if rec.env_delta else "")
                  + (f"  used {rec.used_delta}" if rec.used_delta else ""))
    summary = {"verdict": eng.verdict, "adaptations": [r.label for r in eng.log
                                                       if r.rule in ("rAdA", "rAdS")],
               "aborted": None if eng.abort is None else eng.abort.kind,
               "errors": [str(l) for l in eng.errors]}
    _emit(args, {"summary": summary}, f"summary: {summary}")
    return EXIT_FAIL if eng.verdict == "violated" else EXIT_OK


def _run_workload(args, script) -> int:
    mode = InstrMode(args.mode)
    try:
        spec = instrument(script.formula, mode, script.types)
    except ModeConflict as e:
        print(f"mode conflict: {e}", file=sys.stderr)
        return EXIT_FAIL
    if mode is InstrMode.RA:
        res = typecheck(spec.formula, script.types)
        if not res.ok and not args.unsafe:
            print(f"refusing to run: rejected by {res.rejection.rule}", file=sys.stderr)
            return EXIT_FAIL
    malicious = [int(x) for x in args.malicious.split(",")] if args.malicious else []
    wl = make_workload(args.workload, args.clients, malicious)
    st = simulate_protocol(spec, wl, args.seed)
    _emit(args, st.record(), "\n".join(f"{k}: {v}" for k, v in st.record().items()))
    return EXIT_FAIL if "violated" in st.verdicts.values() else EXIT_OK


# ---------------------------------------------------------------- explore / bench

def cmd_explore(args) -> int:
    script, f, _ = _load(args, args.script)
    trace = parse_trace(_read(args.trace), script.pids) if args.trace else []
    dom = set(script.pids)
    if script.types:
        rep = dt_explore(SystemState.of(dom), TypedMonitor.initial(script.types, f), trace,
                         args.budget)
    else:
        from .runtime import Configuration
        from .matching import action_pids
        for a in trace:
            dom |= action_pids(a)
        rep = explore(Configuration(SystemState.of(dom), f), trace, args.budget)
    _report_explore(args, rep)
    return EXIT_OK


def cmd_bench(args) -> int:
    modes = [m.strip() for m in args.modes.split(",")]
    workloads = [w.strip() for w in args.workloads.split(",")]
    seeds = range(args.seed, args.seed + args.seeds)
    rep = bench(modes, workloads, seeds, args.clients)
    if args.format == "json":
        for r in rep.records():
            print(json.dumps(r))
    else:
        print(rep.to_text())
    return EXIT_OK


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    seed = int(os.environ.get("ADAPTRACE_SEED", "0"))
    p = argparse.ArgumentParser(prog="adaptrace", description="Adaptation-script toolkit")
    p.add_argument("--format", choices=("text", "json"), default="text")
    sub = p.add_subparsers(dest="cmd", required=True)

    t = sub.add_parser("typecheck", help="statically check an adaptation script")
    t.add_argument("script")
    t.add_argument("--derivation", action="store_true", help="print the typing derivation")
    t.add_argument("--no-lint", action="store_true", help="suppress blocking/release advice")
    t.set_defaults(fn=cmd_typecheck)

    r = sub.add_parser("run", help="monitor a trace or simulate a workload")
    r.add_argument("script")
    r.add_argument("--trace")
    r.add_argument("--workload", choices=("incdec", "incdec-faulty", "webserver"))
    r.add_argument("--mode", default="RA", choices=[m.value for m in InstrMode])
    r.add_argument("--seed", type=int, default=seed)
    r.add_argument("--clients", type=int, default=5)
    r.add_argument("--malicious", default="", help="comma separated client indices")
    r.add_argument("--budget", type=int, default=10000)
    r.add_argument("--unsafe", action="store_true", help="explore rejected scripts")
    r.add_argument("--no-lint", action="store_true")
    r.set_defaults(fn=cmd_run)

    e = sub.add_parser("explore", help="enumerate every interleaving of monitor moves")
    e.add_argument("script")
    e.add_argument("trace", nargs="?")
    e.add_argument("--budget", type=int, default=10000)
    e.set_defaults(fn=cmd_explore, no_lint=True)

    b = sub.add_parser("bench", help="synchronisation counts per mode and workload")
    b.add_argument("--modes", default="CA,SMSI,AMSD,RA")
    b.add_argument("--workloads", default="incdec,incdec-faulty,webserver")
    b.add_argument("--seeds", type=int, default=5)
    b.add_argument("--seed", type=int, default=seed)
    b.add_argument("--clients", type=int, default=5)
    b.set_defaults(fn=cmd_bench)
    for sp in (t, r, e, b):
        sp.add_argument("--format", choices=("text", "json"), default=argparse.SUPPRESS)
    return p


def main(argv=None) -> int:
    p = build_parser()
    try:
        args = p.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    try:
        return args.fn(args)
    except _Usage as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, PreprocessError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
