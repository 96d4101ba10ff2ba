"""Dynamically type-checked monitor semantics: a runtime type environment,
the scope environment of linear pids in use, and abort on incompatibility."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from .core import normalize_top
from .matching import action_pids, apply_subst, eval_bool, match_action, subst_formula_var, tbnd
from .runtime import (
    ADA, ADS, BLK, REL, SYS, Aborted, Configuration, ExplorationReport, MonLabel,
    Refused, Sys, SystemState, _merge_blocks, _release, explore, mu_moves, sys_steps,
)
from .statics import env_extend, TypeMismatch as _EnvConflict
from .syntax import (
    FF, TT, And, Block, Clear, Fls, If, Max, Mode, Nec, Node, Pid, Release, SyncFls, Tru,
    TypeAnnot, VType,
)

TYPE_MISMATCH = "TypeMismatch"
ALIASING = "Aliasing"


class Incompatibility(Aborted):
    def __init__(self, kind: str, detail: str, snapshot=None):
        super().__init__(kind, detail)
        self.snapshot = snapshot


# ---------------------------------------------------------------- typed monitors

def _freeze_env(g: dict) -> tuple:
    return tuple(sorted(g.items(), key=lambda kv: str(kv[0])))


def _freeze_used(d: dict) -> tuple:
    return tuple(sorted(((p, frozenset(w)) for p, w in d.items()), key=lambda kv: str(kv[0])))


@dataclass(frozen=True)
class TypedMonitor:
    env_items: tuple
    used_items: tuple
    formula: Node

    @classmethod
    def make(cls, env: dict, used: dict, formula: Node) -> "TypedMonitor":
        return cls(_freeze_env(env), _freeze_used(used), formula)

    @classmethod
    def initial(cls, env: dict, formula: Node) -> "TypedMonitor":
        env = {(Pid(k) if isinstance(k, str) else k): VType(v) for k, v in env.items()}
        used = {p: frozenset() for p, t in env.items() if t is VType.LPID}
        return cls.make(env, used, formula)

    @property
    def env(self) -> dict:
        return dict(self.env_items)

    @property
    def used(self) -> dict:
        return dict(self.used_items)

    def with_formula(self, f: Node) -> "TypedMonitor":
        return TypedMonitor(self.env_items, self.used_items, f)

    def __str__(self):
        env = ", ".join(f"{k}:{t.value}" for k, t in self.env_items)
        used = ", ".join(f"{p}:{{{','.join(sorted(w))}}}" for p, w in self.used_items)
        return f"<{{{env}}}; {{{used}}} |- {self.formula}>"


def after(g: dict, l: MonLabel) -> dict:
    """Environment after a monitor step with label l (event extensions are
    applied by the necessity rule itself)."""
    if l.tag not in (BLK, REL):
        return dict(g)
    need, give = (VType.LPID, VType.LPIDB) if l.tag == BLK else (VType.LPIDB, VType.LPID)
    out = dict(g)
    for p in l.refs:
        if out.get(p) is not need:
            raise ValueError(f"{l}: {p} is not typed {need.value}")
        out[p] = give
    return out


def _after_lenient(g: dict, l: MonLabel) -> dict:
    if l.tag not in (BLK, REL):
        return g
    need, give = (VType.LPID, VType.LPIDB) if l.tag == BLK else (VType.LPIDB, VType.LPID)
    out = dict(g)
    for p in l.refs:
        if out.get(p) is need:
            out[p] = give
    return out


# ---------------------------------------------------------------- silent steps

def _unfold(f: Max) -> Node:
    return subst_formula_var(f.body, f.var, Clear(f.var, f))


def dt_max_unfold(m: TypedMonitor) -> TypedMonitor:
    assert isinstance(m.formula, Max)
    return m.with_formula(_unfold(m.formula))


def _clear(used: dict, x: str) -> dict:
    return {p: w for p, w in used.items() if x not in w}


def dt_clear(m: TypedMonitor, x: str) -> TypedMonitor:
    body = m.formula.body if isinstance(m.formula, Clear) else m.formula
    return TypedMonitor.make(m.env, _clear(m.used, x), body)


def _sat(f: Node, used: dict, preds, fuel: list) -> Node:
    while True:
        if isinstance(f, Max):
            fuel[0] -= 1
            if fuel[0] < 0:
                raise RuntimeError("unguarded recursion")
            f = _unfold(f)
        elif isinstance(f, Clear):
            for p in [p for p, w in used.items() if f.var in w]:
                del used[p]
            f = f.body
        elif isinstance(f, If):
            f = f.then if eval_bool(f.cond, preds) else f.els
        elif isinstance(f, (Release, Block)) and not f.refs:
            f = f.body
        elif isinstance(f, SyncFls):
            return FF
        elif isinstance(f, And):
            l = _sat(f.left, used, preds, fuel)
            r = _sat(f.right, used, preds, fuel)
            return normalize_top(f if (l is f.left and r is f.right) else And(l, r))
        else:
            return f


def dt_saturate(m: TypedMonitor, preds=None) -> TypedMonitor:
    used = m.used
    f = _sat(m.formula, used, preds, [10000])
    return TypedMonitor(m.env_items, _freeze_used(used), f)


# ---------------------------------------------------------------- event steps

def _snapshot(env, used, detail):
    return {"env": {str(k): v.value for k, v in env.items()},
            "used": {str(p): sorted(w) for p, w in used.items()}, "binding": detail}


def _nec(f: Nec, a, env: dict, used: dict):
    s = match_action(f.pat, a)
    if s is None:
        return _release(f.releases, TT), env, used
    binders = tbnd(f.pat)
    new: dict = {}
    lin_vals: dict = {}
    for name, annot in binders.items():
        v = s.get(name)
        if not isinstance(v, Pid):
            raise Incompatibility(TYPE_MISMATCH, f"{name}:{annot.value} bound to non-pid {v}",
                                  _snapshot(env, used, f"{name}={v}"))
        t = VType(annot.value)
        if v in new and new[v] != t:
            raise Incompatibility(TYPE_MISMATCH, f"{v} bound as both {new[v].value} and {t.value}",
                                  _snapshot(env, used, f"{name}={v}"))
        new[v] = t
        if annot is TypeAnnot.LPID:
            lin_vals.setdefault(v, []).append(name)
    # a blocked linear pid rebound linearly is an aliasing question, not a mismatch
    env2 = dict(env)
    for p, t in new.items():
        have = env.get(p)
        if have is None:
            env2[p] = t
        elif have != t and not (have is VType.LPIDB and t is VType.LPID):
            raise Incompatibility(TYPE_MISMATCH, f"{p}:{have.value} rebound as {t.value}",
                                  _snapshot(env, used, f"{p}:{t.value}"))
    clash = set(used) & set(new)
    if clash:
        p = sorted(clash, key=str)[0]
        raise Incompatibility(ALIASING, f"{p} is in use and rebound to {f.pat}",
                              _snapshot(env, used, str(p)))
    for v, names in lin_vals.items():
        if len(set(names)) > 1:
            raise Incompatibility(ALIASING, f"{v} bound to distinct linear variables {names}",
                                  _snapshot(env, used, str(v)))
    used2 = dict(used)
    for p, t in new.items():
        if t is VType.LPID:
            used2[p] = frozenset(f.pat.scope)
    body = apply_subst(f.body, s)
    if f.mode is Mode.BLOCKING:
        body = Block((a.subject.v,), body)
    return body, env2, used2


def _step(f: Node, a, env: dict, used: dict):
    if isinstance(f, (Tru, Fls)):
        return f, env, used
    if isinstance(f, Nec):
        return _nec(f, a, env, used)
    if isinstance(f, And):
        l, env1, used1 = _step(f.left, a, env, used)
        r, env2, used2 = _step(f.right, a, env, used)
        if set(used) != set(used1) & set(used2):
            both = sorted((set(used1) & set(used2)) - set(used), key=str)
            raise Incompatibility(ALIASING, f"{', '.join(map(str, both))} bound linearly in both "
                                  f"branches", _snapshot(env, used, str(both)))
        try:
            env3 = env_extend(env1, env2)
        except _EnvConflict as e:
            raise Incompatibility(TYPE_MISMATCH, f"branches disagree on {e.key}",
                                  _snapshot(env, used, str(e.key))) from None
        return And(l, r), env3, {**used1, **used2}
    raise ValueError(f"monitor cannot react to an event in state {f}")


@dataclass(frozen=True)
class NoMatchResidual:
    formula: Node


def dt_necessity_step(m: TypedMonitor, a):
    """One necessity against one event: a TypedMonitor on a match, a
    NoMatchResidual carrying the release residual otherwise."""
    if match_action(m.formula.pat, a) is None:
        return NoMatchResidual(_release(m.formula.releases, TT))
    f, env, used = _nec(m.formula, a, m.env, m.used)
    return TypedMonitor.make(env, used, f)


def dt_conjunction_step(m: TypedMonitor, a) -> TypedMonitor:
    f, env, used = _step(m.formula, a, m.env, m.used)
    return TypedMonitor.make(env, used, f)


def dt_event(m: TypedMonitor, a, preds=None) -> TypedMonitor:
    """React to a system event and exhaust the silent moves that follow."""
    f, env, used = _step(m.formula, a, m.env, m.used)
    return dt_saturate(TypedMonitor.make(env, used, _merge_blocks(f)), preds)


# ---------------------------------------------------------------- exploration

class TypedSemantics:
    def __init__(self, preds=None):
        self.preds = preds

    def start(self, mon):
        if isinstance(mon, TypedMonitor):
            return dt_saturate(mon, self.preds)
        return TypedMonitor((), (), mon)

    def formula(self, ms: TypedMonitor) -> Node:
        return ms.formula

    def mu_moves(self, ms: TypedMonitor) -> list:
        out = []
        env = ms.env
        for l, g in mu_moves(ms.formula):
            env2 = _after_lenient(env, l)
            out.append((l, dt_saturate(TypedMonitor(_freeze_env(env2), ms.used_items, g),
                                       self.preds)))
        return out

    def monitor_refuses(self, ms: TypedMonitor, l: MonLabel) -> bool:
        # releasing a pid the environment does not track as blocked-linear is an error
        if l.tag != REL:
            return False
        env = ms.env
        return any(env.get(p) is not VType.LPIDB for p in l.refs)

    def alpha(self, ms: TypedMonitor, a) -> TypedMonitor:
        return dt_event(ms, a, self.preds)


def typed_is_error(sys: SystemState, m: TypedMonitor) -> list:
    sem = TypedSemantics()
    bad = []
    for l, _ in mu_moves(m.formula):
        if l.tag in (ADS, REL) and (isinstance(sys_steps(sys, l), Refused)
                                    or sem.monitor_refuses(m, l)):
            bad.append(l)
    return bad


def dt_explore(sys: SystemState, m: TypedMonitor, trace: Sequence, budget: int = 10000,
               preds=None) -> ExplorationReport:
    dom = set(sys.dom)
    for a in trace:
        dom |= action_pids(a)
    return explore(Configuration(SystemState(frozenset(dom), sys.blocked), m), trace, budget,
                   semantics=TypedSemantics(preds))


# ---------------------------------------------------------------- incremental engine

@dataclass
class StepRecord:
    step: int
    label: str
    rule: str
    env_delta: dict = field(default_factory=dict)
    used_delta: dict = field(default_factory=dict)
    verdict: Optional[str] = None

    def to_json(self) -> dict:
        d = {"step": self.step, "label": self.label, "rule": self.rule,
             "envDelta": self.env_delta, "usedDelta": self.used_delta}
        if self.verdict is not None:
            d["verdict"] = self.verdict
        return d


def _delta(old: dict, new: dict, fmt) -> dict:
    out = {}
    for k in set(old) | set(new):
        if old.get(k) != new.get(k):
            out[str(k)] = None if k not in new else fmt(new[k])
    return out


class TypedEngine:
    """Drives one typed monitor event by event, performing its adaptation and
    synchronisation moves eagerly (leftmost first) after each event."""

    RULES = {BLK: "rBlk", REL: "rRel", ADA: "rAdA", ADS: "rAdS", SYS: "rNc"}

    def __init__(self, formula: Node, env: dict, pids=(), preds=None, typed: bool = True):
        self.sem = TypedSemantics(preds)
        self.m = dt_saturate(TypedMonitor.initial(env, formula), preds)
        self.sys = SystemState.of(pids)
        self.log: list = []
        self.abort: Optional[Incompatibility] = None
        self.errors: list = []
        self.typed = typed

    @property
    def verdict(self) -> Optional[str]:
        if self.abort is not None:
            return "aborted"
        if isinstance(self.m.formula, Fls):
            return "violated"
        if isinstance(self.m.formula, Tru):
            return "satisfied"
        return None

    def _record(self, label, rule, old: TypedMonitor):
        self.log.append(StepRecord(len(self.log), str(label), rule,
                                   _delta(old.env, self.m.env, lambda t: t.value),
                                   _delta(old.used, self.m.used, sorted),
                                   self.verdict))

    def add_pid(self, p: Pid):
        self.sys = SystemState(self.sys.dom | {p}, self.sys.blocked)

    def feed(self, a) -> list:
        """Process one event; returns the labels of the moves performed after it."""
        if self.verdict is not None:
            return []
        for p in action_pids(a):
            self.add_pid(p)
        old = self.m
        try:
            self.m = self.sem.alpha(self.m, a)
        except Incompatibility as e:
            self.abort = e
            self.m = self.m.with_formula(TT)
            self._record(Sys(a), "iTrm", old)
            return []
        self._record(Sys(a), "rNc", old)
        return self.drain()

    def drain(self) -> list:
        done = []
        while True:
            moves = self.sem.mu_moves(self.m)
            if not moves:
                return done
            for l, m2 in moves:
                s2 = sys_steps(self.sys, l)
                if isinstance(s2, Refused) or (self.typed and self.sem.monitor_refuses(self.m, l)):
                    if l.tag in (ADS, REL):
                        self.errors.append(l)
                    continue
                old = self.m
                self.sys, self.m = s2, m2
                self._record(l, self.RULES[l.tag], old)
                done.append(l)
                break
            else:
                return done
