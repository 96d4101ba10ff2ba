"""Configurations of an abstract system and an adaptation monitor, their
interaction labels, error detection and a bounded explorer over schedules."""
from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .core import normalize_top
from .matching import action_pids, apply_subst, eval_bool, match_action, subst_formula_var
from .syntax import (
    FF, TT, AdaptA, AdaptS, And, Block, Clear, Fls, If, Max, Mode, Nec, Node, Pid,
    Release, SyncFls, Tru, conj, conjuncts,
)


# ---------------------------------------------------------------- labels

TAU, SYS, ADA, ADS, REL, BLK = "tau", "sys", "AdA", "AdS", "Rel", "Blk"


@dataclass(frozen=True)
class MonLabel:
    tag: str
    refs: tuple = ()
    kind: Optional[str] = None
    action: Optional[Node] = None

    def __str__(self):
        if self.tag == SYS:
            return str(self.action)
        if self.tag == TAU:
            return "tau"
        refs = ",".join(str(r) for r in self.refs)
        if self.tag in (ADA, ADS):
            return f"{self.tag}:{self.kind}({refs})"
        return f"{self.tag}({refs})"


def Sys(a) -> MonLabel:
    return MonLabel(SYS, action=a)


# ---------------------------------------------------------------- system

@dataclass(frozen=True)
class SystemState:
    dom: frozenset
    blocked: frozenset = frozenset()

    @classmethod
    def of(cls, pids, blocked=()) -> "SystemState":
        as_pid = lambda p: Pid(p) if isinstance(p, str) else p
        return cls(frozenset(map(as_pid, pids)), frozenset(map(as_pid, blocked)))

    @property
    def procs(self) -> dict:
        return {p: ("Blocked" if p in self.blocked else "Unblocked")
                for p in sorted(self.dom, key=str)}

    def __str__(self):
        return "{" + ", ".join(f"{p}:{'B' if v == 'Blocked' else 'U'}"
                               for p, v in self.procs.items()) + "}"


class Refused:
    """Marker returned when the system prohibits a label."""

    def __init__(self, label: MonLabel, reason: str):
        self.label, self.reason = label, reason

    def __repr__(self):
        return f"Refused({self.label}: {self.reason})"


def sys_steps(s: SystemState, l: MonLabel):
    refs = l.refs
    known = all(isinstance(r, Pid) and r in s.dom for r in refs)
    if l.tag == SYS:
        a = l.action
        subj = a.subject.v
        if subj in s.blocked:
            return Refused(l, f"{subj} is blocked")
        if not action_pids(a) <= s.dom:
            return Refused(l, "unknown pid in action")
        return s
    if l.tag == TAU:
        return s
    if not known:
        return Refused(l, "unknown reference")
    if l.tag == BLK:
        if any(r in s.blocked for r in refs):
            return Refused(l, "already blocked")
        return SystemState(s.dom, s.blocked | set(refs))
    if l.tag == REL:
        if any(r not in s.blocked for r in refs):
            return Refused(l, "not blocked")
        return SystemState(s.dom, s.blocked - set(refs))
    if l.tag == ADA:
        return s
    if l.tag == ADS:
        if any(r not in s.blocked for r in refs):
            return Refused(l, "adaptee not blocked")
        return s
    raise ValueError(l.tag)


# ---------------------------------------------------------------- monitor

def _release(refs, body):
    return Release(tuple(refs), body) if refs else body


def saturate(f: Node, preds=None, fuel: int = 10000) -> Node:
    """Exhaust the monitor's silent moves (unfolding, conditionals, empty
    block/release lists, clear markers)."""
    while True:
        if isinstance(f, Max):
            fuel -= 1
            if fuel < 0:
                raise RuntimeError("unguarded recursion")
            f = subst_formula_var(f.body, f.var, f)
        elif isinstance(f, If):
            f = f.then if eval_bool(f.cond, preds) else f.els
        elif isinstance(f, Clear):
            f = f.body
        elif isinstance(f, (Release, Block)) and not f.refs:
            f = f.body
        elif isinstance(f, SyncFls):
            return FF
        elif isinstance(f, And):
            l, r = saturate(f.left, preds, fuel), saturate(f.right, preds, fuel)
            return normalize_top(f if (l is f.left and r is f.right) else And(l, r))
        else:
            return f


def mu_moves(f: Node) -> list:
    """Adaptation and synchronisation moves the monitor offers."""
    if isinstance(f, AdaptA):
        return [(MonLabel(ADA, tuple(f.adaptees), f.kind), _release(f.releases, f.body))]
    if isinstance(f, AdaptS):
        return [(MonLabel(ADS, tuple(f.adaptees), f.kind), _release(f.releases, f.body))]
    if isinstance(f, Release):
        return [(MonLabel(REL, tuple(f.refs)), f.body)]
    if isinstance(f, Block):
        return [(MonLabel(BLK, tuple(f.refs)), f.body)]
    if isinstance(f, And):
        out = [(l, And(g, f.right)) for l, g in mu_moves(f.left)]
        out += [(l, And(f.left, g)) for l, g in mu_moves(f.right)]
        return out
    return []


def _alpha(f: Node, a) -> Node:
    if isinstance(f, (Tru, Fls)):
        return f
    if isinstance(f, Nec):
        s = match_action(f.pat, a)
        if s is None:
            return _release(f.releases, TT)
        body = apply_subst(f.body, s)
        if f.mode is Mode.BLOCKING:
            return Block((a.subject.v,), body)
        return body
    if isinstance(f, And):
        return And(_alpha(f.left, a), _alpha(f.right, a))
    raise ValueError(f"monitor cannot react to an event in state {f}")


def _merge_blocks(f: Node) -> Node:
    """Blocks created by one event all suspend its subject: suspend it once."""
    parts = conjuncts(f)
    blocks = [g for g in parts if isinstance(g, Block)]
    if len(blocks) < 2:
        return f
    refs = blocks[0].refs
    if any(set(b.refs) != set(refs) for b in blocks):
        return f
    rest = [g for g in parts if not isinstance(g, Block)]
    return conj(*rest, Block(refs, conj(*[b.body for b in blocks])))


def alpha_step(f: Node, a, preds=None) -> Node:
    return saturate(_merge_blocks(_alpha(f, a)), preds)


def mon_steps(f: Node, action=None, preds=None) -> list:
    """All monitor transitions: the mu-moves, plus the reaction to `action`."""
    out = list(mu_moves(f))
    if action is not None and not out:
        out.append((Sys(action), alpha_step(f, action, preds)))
    return out


# ---------------------------------------------------------------- configurations

@dataclass(frozen=True)
class Configuration:
    sys: SystemState
    mon: Node

    def __str__(self):
        return f"{self.sys} |> {self.mon}"


def is_error(c: Configuration) -> bool:
    return bool(refused_moves(c))


def refused_moves(c: Configuration) -> list:
    out = []
    for l, _ in mu_moves(c.mon):
        if l.tag in (ADS, REL) and isinstance(sys_steps(c.sys, l), Refused):
            out.append(l)
    return out


def config_steps(c: Configuration, pending=None, preds=None) -> list:
    """Successor configurations, monitor moves taking precedence over events."""
    mus = mu_moves(c.mon)
    if mus:
        out = []
        for l, g in mus:
            s2 = sys_steps(c.sys, l)
            if not isinstance(s2, Refused):
                out.append((l, Configuration(s2, saturate(g, preds))))
        return out
    if pending is None:
        return []
    l = Sys(pending)
    s2 = sys_steps(c.sys, l)
    if isinstance(s2, Refused):
        return []
    return [(l, Configuration(s2, alpha_step(c.mon, pending, preds)))]


# ---------------------------------------------------------------- exploration

OUTCOMES = ("error", "violation", "satisfied", "completed", "stuck", "abort",
            "budget-exhausted", "adapted-clean")


@dataclass
class ErrorState:
    blocked: frozenset
    monitor: Node
    index: int
    refused: list
    schedule: list

    def __str__(self):
        b = ",".join(sorted(str(p) for p in self.blocked))
        r = ", ".join(str(l) for l in self.refused)
        return f"blocked={{{b}}} event={self.index} refused=[{r}] monitor={self.monitor}"


@dataclass
class ExplorationReport:
    states: int = 0
    budget_exhausted: bool = False
    counts: Counter = field(default_factory=Counter)
    witnesses: dict = field(default_factory=dict)   # outcome -> schedule
    errors: list = field(default_factory=list)      # ErrorState
    aborts: list = field(default_factory=list)      # (kind, detail, event index)

    @property
    def error_reachable(self) -> bool:
        return bool(self.errors)

    def summary(self) -> dict:
        return {
            "states": self.states,
            "budget_exhausted": self.budget_exhausted,
            "error_reachable": self.error_reachable,
            "counts": {k: self.counts.get(k, 0) for k in OUTCOMES},
            "witnesses": {k: [str(l) for l in v] for k, v in self.witnesses.items()},
            "aborts": [{"kind": k, "detail": d, "event": i} for k, d, i in self.aborts],
        }

    def to_text(self) -> str:
        lines = [f"states explored: {self.states}",
                 f"budget exhausted: {'yes' if self.budget_exhausted else 'no'}",
                 f"error reachable: {'yes' if self.error_reachable else 'no'}"]
        for k in OUTCOMES:
            if self.counts.get(k):
                lines.append(f"{k}: {self.counts[k]}")
        for k in OUTCOMES:
            if k in self.witnesses:
                lines.append(f"witness {k}:")
                for n, l in enumerate(self.witnesses[k], 1):
                    lines.append(f"  {n}. {l}")
        for k, d, i in self.aborts[:5]:
            lines.append(f"abort at event {i}: {k} ({d})")
        for e in self.errors[:5]:
            lines.append(f"error state: {e}")
        return "\n".join(lines)


class UntypedSemantics:
    """Monitor-side hooks used by the explorer; the typed layer swaps these."""

    def __init__(self, preds=None):
        self.preds = preds

    def start(self, mon):
        return saturate(mon, self.preds)

    def formula(self, ms) -> Node:
        return ms

    def mu_moves(self, ms) -> list:
        return [(l, saturate(g, self.preds)) for l, g in mu_moves(ms)]

    def monitor_refuses(self, ms, label) -> bool:
        return False

    def alpha(self, ms, a):
        return alpha_step(ms, a, self.preds)


class Aborted(Exception):
    """Raised by a semantics when monitoring must stop (the monitor becomes tt)."""

    def __init__(self, kind: str, detail: str = ""):
        self.kind, self.detail = kind, detail
        super().__init__(f"{kind}: {detail}")


def explore(c: Configuration, trace: Sequence, budget: int = 10000, preds=None,
            keep_errors: int = 50, semantics=None) -> ExplorationReport:
    """Breadth-first enumeration of every schedule of monitor moves and trace events."""
    sem = semantics or UntypedSemantics(preds)
    rep = ExplorationReport()
    trace = tuple(trace)
    start = (c.sys.blocked, sem.start(c.mon), 0, True)
    parent: dict = {start: None}
    queue = deque([start])
    dom = c.sys.dom

    def schedule(key, last=None):
        out = [] if last is None else [last]
        while parent[key] is not None:
            key, l = parent[key]
            out.append(l)
        return out[::-1]

    def hit(kind, key, last=None):
        rep.counts[kind] += 1
        if kind not in rep.witnesses:
            rep.witnesses[kind] = schedule(key, last)

    def push(key, l, k2):
        if k2 not in parent:
            parent[k2] = (key, l)
            queue.append(k2)

    while queue:
        if rep.states >= budget:
            rep.budget_exhausted = True
            hit("budget-exhausted", queue[0])
            break
        key = queue.popleft()
        rep.states += 1
        blocked, ms, idx, clean = key
        mon = sem.formula(ms)
        s = SystemState(dom, blocked)

        if isinstance(mon, Fls):
            hit("violation", key)
            continue
        if isinstance(mon, Tru):
            hit("satisfied", key)
            continue

        mus = sem.mu_moves(ms)
        bad, succ = [], []
        for l, ms2 in mus:
            s2 = sys_steps(s, l)
            refused = isinstance(s2, Refused) or sem.monitor_refuses(ms, l)
            if refused:
                if l.tag in (ADS, REL):
                    bad.append(l)
                continue
            succ.append((l, s2, ms2))
        if bad:
            hit("error", key)
            if len(rep.errors) < keep_errors:
                rep.errors.append(ErrorState(blocked, mon, idx, bad, schedule(key)))
        nclean = clean and not bad
        if mus:
            if not succ:
                hit("stuck", key)
            for l, s2, ms2 in succ:
                if l.tag == ADS and nclean:
                    hit("adapted-clean", key, l)
                push(key, l, (s2.blocked, ms2, idx, nclean))
            continue
        if idx >= len(trace):
            hit("completed", key)
            continue
        a = trace[idx]
        l = Sys(a)
        if isinstance(sys_steps(s, l), Refused):
            hit("stuck", key)
            continue
        try:
            ms2 = sem.alpha(ms, a)
        except Aborted as e:
            rep.aborts.append((e.kind, e.detail, idx))
            hit("abort", key, l)
            ms2 = sem.start(TT)
        push(key, l, (blocked, ms2, idx + 1, nclean))
    return rep


def explore_script(formula: Node, trace: Sequence, pids, budget: int = 10000,
                   preds=None) -> ExplorationReport:
    dom = set(pids)
    for a in trace:
        dom |= action_pids(a)
    return explore(Configuration(SystemState.of(dom), formula), trace, budget, preds)
