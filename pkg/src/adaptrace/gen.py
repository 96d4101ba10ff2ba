"""Seeded random generators for formulas, adaptation scripts and traces.

Used by the property suites and the fuzzing scripts.  They take a
random.Random so results are reproducible from a single seed.
"""
from __future__ import annotations

import random
from typing import Optional

from .syntax import (
    FF, RECV, SEND, TT, WILD, AdaptA, AdaptS, And, Arith, Atom, Cmp, FVar, If, Int, Lit, Max,
    Mode, Nec, Node, Pattern, Pid, PTuple, TypeAnnot, Var, VTuple,
)

PIDS = ("i", "j", "k")
ATOMS = ("a", "b")


# ---------------------------------------------------------------- core formulas

class _Names:
    def __init__(self):
        self.n = 0

    def fresh(self, stem: str) -> str:
        self.n += 1
        return f"{stem}{self.n}"


def _core_pattern(rng: random.Random, bound: list, names: _Names):
    binds = []

    def subject():
        r = rng.random()
        if r < 0.6:
            return Lit(Pid(rng.choice(PIDS)))
        if r < 0.75:
            return WILD
        if r < 0.85 and bound:
            return Var(rng.choice(bound))
        v = names.fresh("p")
        binds.append(v)
        return Var(v)

    def payload():
        r = rng.random()
        if r < 0.45:
            return Lit(Int(rng.randint(0, 2)))
        if r < 0.6 and bound:
            return Var(rng.choice(bound))
        if r < 0.8:
            v = names.fresh("x")
            binds.append(v)
            return Var(v)
        if r < 0.9:
            return WILD
        return PTuple((Lit(Atom(rng.choice(ATOMS))), payload()))

    s = subject()
    if rng.random() < 0.5:
        pat = Pattern(RECV, s, payload(), None, frozenset(binds))
    else:
        t = Lit(Pid(rng.choice(PIDS))) if rng.random() < 0.7 else WILD
        pl = payload()
        pat = Pattern(SEND, s, pl, t, frozenset(binds))
    return pat, list(binds)


def gen_formula(rng: random.Random, depth: int = 6, names: Optional[_Names] = None,
                bound: Optional[list] = None, rec: Optional[list] = None,
                guarded: bool = True) -> Node:
    """A closed, guarded core formula of nesting depth at most `depth`."""
    names = names or _Names()
    bound = list(bound or [])
    rec = list(rec or [])
    if depth <= 0:
        opts = [TT, FF]
        if rec and guarded:
            opts.append(FVar(rng.choice(rec)))
        return rng.choice(opts)
    r = rng.random()
    if r < 0.08:
        return TT
    if r < 0.16:
        return FF
    if r < 0.24 and rec and guarded:
        return FVar(rng.choice(rec))
    if r < 0.60:
        pat, binds = _core_pattern(rng, bound, names)
        body = gen_formula(rng, depth - 1, names, bound + binds, rec, True)
        return Nec(Mode.CORE, pat, (), body)
    if r < 0.75:
        return And(gen_formula(rng, depth - 1, names, bound, rec, guarded),
                   gen_formula(rng, depth - 1, names, bound, rec, guarded))
    if r < 0.85 and bound:
        x = Var(rng.choice(bound))
        cond = Cmp(rng.choice(["=", "<", "!="]), x, Lit(Int(rng.randint(0, 2))))
        return If(cond, gen_formula(rng, depth - 1, names, bound, rec, guarded),
                  gen_formula(rng, depth - 1, names, bound, rec, guarded))
    x = names.fresh("X")
    return Max(x, gen_formula(rng, depth - 1, names, bound, rec + [x], False))


def _value(rng: random.Random):
    r = rng.random()
    if r < 0.6:
        return Int(rng.randint(0, 2))
    if r < 0.8:
        return Pid(rng.choice(PIDS))
    return VTuple((Atom(rng.choice(ATOMS)), Int(rng.randint(0, 2))))


def gen_event(rng: random.Random) -> Pattern:
    s = Lit(Pid(rng.choice(PIDS)))
    if rng.random() < 0.5:
        return Pattern(RECV, s, Lit(_value(rng)))
    return Pattern(SEND, s, Lit(_value(rng)), Lit(Pid(rng.choice(PIDS))))


def gen_trace(rng: random.Random, max_len: int = 8) -> list:
    return [gen_event(rng) for _ in range(rng.randint(0, max_len))]


# ---------------------------------------------------------------- adaptation scripts

INC_ENV = {"i": "lpid", "j": "upid"}


def _inc_events(x: int, client: str, faulty: bool) -> list:
    i, j, k, c = (Lit(Pid(p)) for p in ("i", "j", "k", client))
    req = Lit(VTuple((Atom("inc"), Int(x), Pid(client))))
    out = [Pattern(RECV, i, req), Pattern(SEND, i, req, k if faulty else j)]
    if faulty:
        out.append(Pattern(SEND, k, Lit(Atom("err")), c))
    else:
        out.append(Pattern(SEND, j, Lit(VTuple((Atom("res"), Int(x + 1)))), c))
    return out


def incdec_traces(rng: Optional[random.Random] = None) -> list:
    """Traces the inc/dec server can produce, plus one shuffled variant."""
    ts = [_inc_events(5, "h", False), _inc_events(1, "h", True),
          _inc_events(5, "h", False) + _inc_events(1, "h", True),
          _inc_events(1, "h", True) + _inc_events(2, "h", False)]
    if rng is not None:
        t = _inc_events(rng.randint(0, 3), "h", rng.random() < 0.5) + \
            _inc_events(rng.randint(0, 3), "h", rng.random() < 0.5)
        rng.shuffle(t)
        ts.append(t[:rng.randint(1, len(t))])
    return ts


class _ScriptGen:
    """Builds scripts over the inc/dec vocabulary, biased toward well-typed
    blocking/release discipline so a useful fraction passes the checker."""

    SYNC = ("restart", "purge")

    def __init__(self, rng: random.Random):
        self.rng = rng
        self.names = _Names()

    def pattern(self, stage: int, dat: list, up: list):
        """Returns (pattern, blocking-subject-ref or None, new lin, new dat, new up).
        Mostly follows the protocol order request, forward, reply-or-error."""
        rng = self.rng
        binds = []
        if rng.random() < 0.8:
            choice = stage if stage < 2 else rng.choice((2, 3))
        else:
            choice = rng.randrange(4)
        if choice == 0:
            x, y = self.names.fresh("x"), self.names.fresh("y")
            binds = [x, y]
            pl = PTuple((Lit(Atom("inc")), Var(x, TypeAnnot.DAT), Var(y, TypeAnnot.UPID)))
            return (Pattern(RECV, Lit(Pid("i")), pl, None, frozenset(binds)), Pid("i"),
                    [], [x], [y])
        if choice == 1:
            pl = PTuple((Lit(Atom("inc")), Var(dat[-1]) if dat else WILD,
                         Var(up[-1]) if up else WILD))
            tgt = WILD
            return Pattern(SEND, Lit(Pid("i")), pl, tgt), Pid("i"), [], [], []
        if choice == 2:
            tgt = Var(up[-1]) if up else Lit(Pid("h"))
            pl = PTuple((Lit(Atom("res")), Arith("+", Var(dat[-1]), Lit(Int(1))) if dat else WILD))
            return Pattern(SEND, Lit(Pid("j")), pl, tgt), None, [], [], []
        z = self.names.fresh("z")
        tgt = Var(up[-1]) if up else WILD
        pat = Pattern(SEND, Var(z, TypeAnnot.LPID), Lit(Atom("err")), tgt, frozenset([z]))
        return pat, Var(z), [Var(z)], [], []

    def gen(self, depth, lin_free: list, blocked: list, dat, up, rec, guarded,
            stage: int = 0) -> Node:
        rng = self.rng
        if depth <= 0 or rng.random() < 0.12:
            if blocked:
                return self.adapt(depth, lin_free, blocked, dat, up, rec, guarded, stage)
            if rec and guarded and rng.random() < 0.7:
                return FVar(rng.choice(rec))
            return TT if rng.random() < 0.8 else FF
        r = rng.random()
        if r < 0.55:
            pat, bsubj, lin_new, dat_new, up_new = self.pattern(stage, dat, up)
            can_block = bsubj is not None and (bsubj in lin_free or bsubj in lin_new)
            blocking = can_block and rng.random() < 0.6 and bsubj not in blocked
            rl = tuple(b for b in blocked if rng.random() < 0.85)
            nfree = [p for p in lin_free + lin_new if not (blocking and p == bsubj)]
            nblocked = blocked + ([bsubj] if blocking else [])
            mode = Mode.BLOCKING if blocking else Mode.ASYNC
            nxt = {0: 1, 1: 2}.get(stage, 0)
            body = self.gen(depth - 1, nfree, nblocked, dat + dat_new, up + up_new, rec, True,
                            nxt)
            return Nec(mode, pat, rl, body)
        if r < 0.70 and blocked:
            return self.adapt(depth, lin_free, blocked, dat, up, rec, guarded, stage)
        if r < 0.85:
            # split the linear resources between the branches
            lf, rf, lb, rb = [], [], [], []
            for p in lin_free:
                (lf if rng.random() < 0.5 else rf).append(p)
            for b in blocked:
                (lb if rng.random() < 0.5 else rb).append(b)
            return And(self.gen(depth - 1, lf, lb, dat, up, rec, guarded, stage),
                       self.gen(depth - 1, rf, rb, dat, up, rec, guarded, stage))
        if r < 0.92 and dat:
            cond = Cmp(rng.choice(["=", ">"]), Var(dat[-1]), Lit(Int(rng.randint(0, 3))))
            return If(cond, self.gen(depth - 1, lin_free, blocked, dat, up, rec, guarded, stage),
                      self.gen(depth - 1, lin_free, blocked, dat, up, rec, guarded, stage))
        if not blocked:
            x = self.names.fresh("X")
            return Max(x, self.gen(depth - 1, lin_free, blocked, dat, up, rec + [x], False, stage))
        return self.adapt(depth, lin_free, blocked, dat, up, rec, guarded, stage)

    def adapt(self, depth, lin_free, blocked, dat, up, rec, guarded, stage: int = 0) -> Node:
        rng = self.rng
        if rng.random() < 0.2 and lin_free:
            target = rng.choice(lin_free)
            body = self.gen(depth - 1, lin_free, blocked, dat, up, rec, guarded, stage)
            return AdaptA((target,), (), body, "kill" if rng.random() < 0.5 else "adaptA")
        k = rng.randint(1, len(blocked))
        adaptees = tuple(rng.sample(blocked, k))
        rel = tuple(b for b in blocked if rng.random() < 0.9)
        remaining = [b for b in blocked if b not in rel]
        body = self.gen(depth - 1, lin_free + list(rel), remaining, dat, up, rec, guarded, stage)
        return AdaptS(rng.choice(self.SYNC), adaptees, rel, body)


def gen_script(rng: random.Random, depth: int = 8) -> Node:
    g = _ScriptGen(rng)
    if rng.random() < 0.7:
        return Max("Y", g.gen(depth - 1, [Pid("i")], [], [], [], ["Y"], False))
    return g.gen(depth, [Pid("i")], [], [], [], [], True)
