"""Message-level simulation of the event-reporting and adaptation protocols.

Actors are generator programs driven by a seeded discrete-event loop.  Every
observed event travels on one ordered trace channel to the monitor; a
synchronously reported event carries a fresh nonce and its actor waits for the
matching acknowledgement.  Monitoring verdicts come from the typed engine.
"""
from __future__ import annotations

import itertools
import random
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

from .dynamics import TypedEngine
from .matching import match_action
from .preprocess import prepare, syn_enc
from .runtime import ADA, ADS, BLK, REL
from .syntax import (
    CALL, RECV, RET, SEND, AdaptS, And, Atom, Block, Fls, Int, Lit, Mode, Nec, Node, Pattern,
    Pid, SyncFls, VList, VTuple, map_children, subformulas,
)


class InstrMode(str, Enum):
    CA = "CA"
    SMSI = "SMSI"
    AMSD = "AMSD"
    RA = "RA"


class ModeConflict(Exception):
    pass


class ProtocolViolation(Exception):
    pass


class TargetAbsent(Exception):
    pass


# ---------------------------------------------------------------- wire messages

@dataclass(frozen=True)
class Evt:
    data: Pattern
    subject: Pid
    nonce: Optional[int] = None


@dataclass(frozen=True)
class Ack:
    nonce: int


@dataclass(frozen=True)
class Adpt:
    kind: str
    nonce: int


# ---------------------------------------------------------------- values and events

def val(x):
    """Python data to a runtime value: str atoms, int, tuple, list, Pid."""
    if isinstance(x, (Pid, Atom, Int, VTuple, VList)):
        return x
    if isinstance(x, bool):
        return Atom(str(x).lower())
    if isinstance(x, int):
        return Int(x)
    if isinstance(x, str):
        return Atom(x)
    if isinstance(x, tuple):
        return VTuple(tuple(val(y) for y in x))
    if isinstance(x, list):
        return VList(tuple(val(y) for y in x))
    raise TypeError(f"no runtime value for {x!r}")


def event(kind: str, subject: Pid, payload, target: Optional[Pid] = None) -> Pattern:
    return Pattern(kind, Lit(subject), Lit(val(payload)),
                   None if target is None else Lit(target))


# ---------------------------------------------------------------- instrumentation

def _strip_modes(f: Node) -> Node:
    if isinstance(f, Nec):
        return Nec(Mode.CORE, f.pat, (), _strip_modes(f.body))
    if isinstance(f, SyncFls):
        return Fls()
    return map_children(f, _strip_modes)


def blocking_patterns(f: Node) -> tuple:
    return tuple(g.pat for g in subformulas(f) if isinstance(g, Nec) and g.mode is Mode.BLOCKING)


def _patterns(f: Node) -> tuple:
    return tuple(g.pat for g in subformulas(f) if isinstance(g, Nec))


def _has_sync_adaptation(f: Node) -> bool:
    return any(isinstance(g, (AdaptS, Block)) for g in subformulas(f))


@dataclass
class InstrumentedSpec:
    mode: InstrMode
    formula: Node                      # what the monitor engine runs
    sync_patterns: tuple = ()          # events reported with a nonce (SMSI: all)
    types: dict = field(default_factory=dict)
    preds: Optional[dict] = None
    observed: tuple = ()               # instrumentation only reports matching events

    def observes(self, a: Pattern) -> bool:
        return any(match_action(p, a) is not None for p in self.observed)

    def is_sync(self, a: Pattern) -> bool:
        if self.mode is InstrMode.SMSI:
            return True
        if self.mode is InstrMode.CA:
            return False
        return any(match_action(p, a) is not None for p in self.sync_patterns)


def instrument(f: Node, mode: InstrMode, types: Optional[dict] = None,
               preds: Optional[dict] = None) -> InstrumentedSpec:
    mode = InstrMode(mode)
    types = dict(types or {})
    if mode is InstrMode.RA:
        g, _ = prepare(f, lint=False)
        return InstrumentedSpec(mode, g, blocking_patterns(g), types, preds, _patterns(g))
    if mode is InstrMode.CA and (_has_sync_adaptation(f) or
                                 any(isinstance(g, AdaptS) for g in subformulas(f))):
        raise ModeConflict("synchronous adaptations cannot be applied without synchronisation")
    _, enc = syn_enc(f)
    enc, _ = prepare(enc, lint=False)
    sync = blocking_patterns(enc) if mode is InstrMode.AMSD else ()
    return InstrumentedSpec(mode, _strip_modes(enc), sync, types, preds, _patterns(enc))


# ---------------------------------------------------------------- actors

class Actor:
    """A running actor: a generator program plus mailbox and suspension state.

    Programs yield operations (tuples); see World._advance for the vocabulary."""

    def __init__(self, pid: Pid, factory: Callable, state: Optional[dict] = None):
        self.pid = pid
        self.factory = factory
        self.init_state = dict(state or {})
        self.mailbox: list = []          # (sender, msg, token), FIFO per sender
        self.control: list = []          # Ack / Adpt addressed to this actor
        self.alive = True
        self.waiting_nonce: Optional[int] = None
        self.reset()

    def reset(self):
        self.state = dict(self.init_state)
        self.gen = self.factory(self)
        self.pending = None              # operation awaiting its enabling condition
        self.reply = None
        self.started = False

    @property
    def suspended(self) -> bool:
        return self.waiting_nonce is not None


@dataclass
class ProtocolStats:
    mode: str
    workload: str
    seed: int
    events: int = 0
    blockingHandshakes: int = 0
    adptMessages: int = 0
    totalSuspendedSteps: int = 0
    steps: int = 0
    verdicts: dict = field(default_factory=dict)
    adaptations: list = field(default_factory=list)
    aborts: list = field(default_factory=list)
    errors: list = field(default_factory=list)
    completed: list = field(default_factory=list)
    log: list = field(default_factory=list)
    event_log: list = field(default_factory=list)
    quiescent_nonces: int = 0

    def record(self) -> dict:
        return {"mode": self.mode, "workload": self.workload, "seed": self.seed,
                "events": self.events, "blockingHandshakes": self.blockingHandshakes,
                "adptMessages": self.adptMessages,
                "totalSuspendedSteps": self.totalSuspendedSteps,
                "verdicts": {str(k): v for k, v in sorted(self.verdicts.items(), key=str)},
                "adaptations": [f"{k}({p})" for k, p in self.adaptations],
                "aborts": self.aborts, "errors": self.errors,
                "completed": sorted(map(str, self.completed))}


class World:
    """Live state of a workload under simulation."""

    def __init__(self, workload, spec: InstrumentedSpec, seed: int, max_steps: int = 200000):
        self.w = workload
        self.spec = spec
        self.rng = random.Random(seed)
        self.max_steps = max_steps
        self.actors: dict = {}
        self.links: set = set(frozenset(l) for l in workload.links)
        self.listen: deque = deque(workload.connections)
        self.sinks: dict = {}            # unmonitored endpoints (clients)
        self.trace: deque = deque()      # the ordered trace channel
        self.nonces = itertools.count(1)
        self.issued: set = set()
        self.nonce_map: dict = {}        # pid -> nonce, while held by the monitor
        self.sessions: dict = {}
        self.spawned = itertools.count(1)
        self.tokens = itertools.count(1)
        self.untaken: set = set()
        self.stats = ProtocolStats(spec.mode.value, workload.name, seed)
        for pid, (factory, state) in workload.actors.items():
            self.actors[pid] = Actor(pid, factory, state)
        for pid, msgs in workload.mailboxes.items():
            for sender, m in msgs:
                self.deliver(sender, pid, m)

    # -- transport
    def deliver(self, sender, target: Pid, msg) -> int:
        token = next(self.tokens)
        a = self.actors.get(target)
        if a is None or not a.alive:
            self.sinks.setdefault(target, []).append(msg)
            return token
        a.mailbox.append((sender, msg, token))
        self.untaken.add(token)
        return token

    def _take(self, a: Actor, pred=None):
        """Pop an application message: a random sender's oldest message."""
        heads: dict = {}
        for idx, (s, m, _) in enumerate(a.mailbox):
            if s not in heads and (pred is None or pred(m)):
                heads[s] = idx
        if not heads:
            return None
        s = self.rng.choice(sorted(heads, key=str))
        _, m, token = a.mailbox.pop(heads[s])
        self.untaken.discard(token)
        return m

    def emit(self, a: Actor, action: Pattern):
        if not self.spec.observes(action):
            return
        self.stats.events += 1
        self.stats.event_log.append(action)
        nonce = None
        if self.spec.is_sync(action):
            nonce = next(self.nonces)
            self.issued.add(nonce)
            self.stats.blockingHandshakes += 1
            a.waiting_nonce = nonce
        self.trace.append(Evt(action, a.pid, nonce))

    # -- actors
    def _advance(self, a: Actor) -> bool:
        """Run actor a for one operation; False when it cannot move."""
        if a.suspended:
            return self._serve_control(a)
        if a.pending is None:
            try:
                a.pending = a.gen.send(a.reply) if a.started else next(a.gen)
            except StopIteration:
                a.alive = False
                return True
            a.started = True
            a.reply = None
        op = a.pending
        tag = op[0]
        if tag == "recv":
            observe = op[1] if len(op) > 1 else True
            pred = op[2] if len(op) > 2 else None
            m = self._take(a, pred)
            if m is None:
                return False
            a.reply = m
            if observe:
                self.emit(a, event(RECV, a.pid, m))
        elif tag == "send":
            _, target, msg, observe = op
            self.deliver(a.pid, target, msg)
            if observe:
                self.emit(a, event(SEND, a.pid, msg, target))
        elif tag in ("call", "ret"):
            self.emit(a, event(CALL if tag == "call" else RET, a.pid, op[1]))
            if len(op) > 2 and op[2] is not None:
                target, msg = op[2]
                self.deliver(a.pid, target, msg)
        elif tag == "sync_send":
            _, target, msg = op
            a.pending = ("wait_taken", self.deliver(a.pid, target, msg))
            return True
        elif tag == "wait_taken":
            if op[1] in self.untaken:
                return False
        elif tag == "accept":
            if not self.listen:
                return False
            a.reply = self.listen.popleft()
        elif tag == "spawn":
            _, factory, state = op
            pid = Pid(f"{state.get('prefix', 'p')}{next(self.spawned)}")
            self.actors[pid] = Actor(pid, factory, state)
            a.reply = pid
        else:
            raise ValueError(f"unknown operation {op!r}")
        a.pending = None
        return True

    def _serve_control(self, a: Actor) -> bool:
        """A suspended actor reads control messages out of order by nonce."""
        for idx, m in enumerate(a.control):
            if m.nonce != a.waiting_nonce:
                continue
            a.control.pop(idx)
            if isinstance(m, Adpt):
                self.apply_adaptation_effect(m.kind, [a.pid])
                return True
            if m.nonce not in self.issued:
                raise ProtocolViolation(f"ack for unissued nonce {m.nonce}")
            self.issued.discard(m.nonce)
            a.waiting_nonce = None
            return True
        stray = [m for m in a.control if m.nonce not in self.issued]
        if stray:
            raise ProtocolViolation(f"{a.pid} received {stray[0]} with an unissued nonce")
        return False

    def apply_adaptation_effect(self, kind: str, targets) -> None:
        for p in targets:
            a = self.actors.get(p)
            if a is None or not a.alive:
                raise TargetAbsent(f"{kind}: {p} is not a live actor")
        self.stats.adaptations.append((kind, ",".join(map(str, targets))))
        if kind in ("slink", "link", "sunlink", "unlink"):
            pair = frozenset(targets)
            if kind.endswith("unlink"):
                self.links.discard(pair)
            else:
                self.links.add(pair)
            return
        for p in targets:
            a = self.actors[p]
            if kind in ("purge", "restart"):
                self.untaken.difference_update(t for _, _, t in a.mailbox)
                a.mailbox.clear()
            if kind == "restart":
                # injected faults live in actor-local state, which a restart discards
                a.init_state.pop("fault", None)
                a.reset()
            elif kind in ("kill", "skill"):
                peers = [q for l in self.links if p in l for q in l if q != p]
                self.links = {l for l in self.links if p not in l}
                a.alive = False
                if kind == "kill":
                    for q in peers:
                        self.deliver(p, q, ("EXIT", p))

    # -- monitor
    def _engine(self, key):
        if key not in self.sessions:
            self.sessions[key] = TypedEngine(self.spec.formula, self.spec.types,
                                             self.w.pids, self.spec.preds,
                                             typed=self.spec.mode is InstrMode.RA)
        return self.sessions[key]

    def _to(self, pid, msg):
        a = self.actors.get(pid)
        if a is not None:
            a.control.append(msg)

    def _monitor_step(self):
        e: Evt = self.trace.popleft()
        key = self.w.session_of(e.data)
        eng = self._engine(key)
        labels = eng.feed(e.data)
        held = set()
        for l in labels:
            if l.tag == BLK:
                for p in l.refs:
                    if p == e.subject and e.nonce is not None:
                        self.nonce_map[p] = e.nonce
                        held.add(p)
            elif l.tag == ADS:
                for p in l.refs:
                    n = self.nonce_map.get(p)
                    if n is None:
                        self.stats.errors.append(f"{l}: {p} not suspended")
                        continue
                    self.stats.adptMessages += 1
                    self.stats.log.append(f"adpt {l.kind} -> {p} (nonce {n})")
                    self._to(p, Adpt(l.kind, n))
            elif l.tag == ADA:
                live = [p for p in l.refs if p in self.actors and self.actors[p].alive]
                if live:
                    self.apply_adaptation_effect(l.kind, live)
            elif l.tag == REL:
                for p in l.refs:
                    n = self.nonce_map.pop(p, None)
                    held.discard(p)
                    if n is not None:
                        self.stats.log.append(f"ack -> {p} (nonce {n})")
                        self._to(p, Ack(n))
        for bad in eng.errors:
            self.stats.errors.append(str(bad))
        eng.errors.clear()
        if eng.abort is not None and key not in dict(self.stats.aborts):
            self.stats.aborts.append((str(key), eng.abort.kind))
        if e.nonce is not None and e.subject not in self.nonce_map:
            if eng.verdict == "violated":
                # the offending actor is never acknowledged
                self.stats.log.append(f"withhold ack from {e.subject} (violation)")
            else:
                self._to(e.subject, Ack(e.nonce))

    # -- main loop
    def run(self) -> ProtocolStats:
        st = self.stats
        while st.steps < self.max_steps:
            agents = [a for a in self.actors.values() if a.alive]
            self.rng.shuffle(agents)
            options = ["monitor"] if self.trace else []
            moved = False
            order = options + agents
            self.rng.shuffle(order)
            for ag in order:
                if ag == "monitor":
                    self._monitor_step()
                    moved = True
                elif self._advance(ag):
                    moved = True
                if moved:
                    break
            if not moved:
                break
            st.steps += 1
            st.totalSuspendedSteps += sum(1 for a in self.actors.values()
                                          if a.alive and a.suspended)
        for key, eng in self.sessions.items():
            st.verdicts[key] = eng.verdict
        st.completed = self.w.completed(self)
        st.quiescent_nonces = len(self.nonce_map)
        return st


def simulate_protocol(spec: InstrumentedSpec, workload, seed: int = 0,
                      max_steps: int = 200000) -> ProtocolStats:
    return World(workload, spec, seed, max_steps).run()
