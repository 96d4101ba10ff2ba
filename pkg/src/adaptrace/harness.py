"""Canonical workloads and the benchmark driver."""
from __future__ import annotations

import statistics
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable, Iterable, Optional, Sequence

from .matching import match_action
from .parser import Script, load_script
from .preprocess import syn_enc
from .protocol import InstrMode, InstrumentedSpec, ProtocolStats, instrument, simulate_protocol
from .syntax import CALL, RECV, RET, Lit, Mode, Nec, Node, Pattern, Pid, VTuple, subformulas

HEADERS = 6
WHITELIST = ("/pic.png", "/site.html")
MALICIOUS_PATH = "/../secret"


def corpus_text(name: str) -> str:
    return (resources.files("adaptrace") / "corpus" / name).read_text()


def corpus_script(name: str) -> Script:
    if not name.endswith(".shml"):
        name += ".shml"
    return load_script(corpus_text(name))


@dataclass
class Workload:
    name: str
    pids: tuple
    actors: dict                       # Pid -> (behaviour factory, initial state)
    links: set = field(default_factory=set)
    mailboxes: dict = field(default_factory=dict)   # Pid -> [(sender, msg)]
    connections: list = field(default_factory=list)  # pending external connections
    faults: dict = field(default_factory=dict)
    session_key: Optional[Callable] = None
    done: Optional[Callable] = None

    def session_of(self, a: Pattern):
        return "main" if self.session_key is None else self.session_key(a)

    def completed(self, world) -> list:
        return [] if self.done is None else self.done(world)


# ---------------------------------------------------------------- inc/dec server

def _interface(me):
    # forwards inc requests to the incrementor; an injected fault misroutes the next one
    while True:
        m = yield ("recv", True)
        target = Pid("j") if m[0] == "inc" else Pid("k")
        if me.state.get("fault") and m[0] == "inc":
            me.state["fault"] -= 1
            target = Pid("k")
        yield ("send", target, m, True)


def _incrementor(me):
    while True:
        op, x, client = yield ("recv", False)
        yield ("send", client, ("res", x + 1), True)


def _decrementor(me):
    while True:
        op, x, client = yield ("recv", False)
        yield ("send", client, ("res", x - 1) if op == "dec" else "err", True)


def _client(me):
    for x in me.state["requests"]:
        yield ("send", Pid("i"), ("inc", x, me.pid), False)
        yield ("recv", False)


def workload_incdec(faulty: bool = False, requests: Sequence[int] = (5,)) -> Workload:
    """Interface i, incrementor j, decrementor k and client h.  With `faulty`,
    the first inc request is forwarded to k, which answers err."""
    i, j, k, h = (Pid(x) for x in "ijkh")
    if faulty and tuple(requests) == (5,):
        requests = (1,)
    actors = {
        i: (_interface, {"fault": 1} if faulty else {}),
        j: (_incrementor, {}),
        k: (_decrementor, {}),
        h: (_client, {"requests": list(requests)}),
    }

    def done(world):
        return [h] if not world.actors[h].alive else []

    return Workload("incdec-faulty" if faulty else "incdec", (i, j, k, h), actors,
                    faults={"misroute": faulty}, done=done)


# ---------------------------------------------------------------- webserver

def _do_recv(x):
    return ("yaws", "do_recv", 3, ("ok", x))


def _acceptor(me):
    remaining = me.state["clients"]
    if remaining:
        yield ("spawn", _handler, {"prefix": "h"})
    while True:
        m = yield ("recv", True)
        remaining -= 1
        if remaining > 0:
            yield ("spawn", _handler, {"prefix": "h"})


def _handler(me):
    client, path, headers = yield ("accept",)
    me.state["client"] = client
    # the acceptor takes the hand-over before the request is read
    yield ("sync_send", Pid("acceptor"), (me.pid, "next", client.name))
    yield ("ret", _do_recv(("http_req", "GET", ("abs_path", path), ("http", 1, 1))))
    for hd in headers:
        yield ("ret", _do_recv(hd))
    yield ("ret", _do_recv("http_eoh"))
    yield ("call", ("yaws_sendfile", "send", ["sock", path, 0, 1024]), (client, ("file", path)))


def _headers(malicious: bool) -> list:
    hs = [("http_header", "Host", "localhost"), ("http_header", "User-Agent", "sim"),
          ("http_header", "Accept", "*/*"), ("http_header", "Accept-Encoding", "identity"),
          ("http_header", "Connection", "close"), ("http_header", "Referer", "/index.html")]
    if malicious:
        hs[5] = ("http_header", "Referer", "/../../etc")
    return hs[:HEADERS]


def workload_webserver(n_clients: int, malicious_at: Iterable[int] = ()) -> Workload:
    """An acceptor spawning one connection handler per client; malicious clients
    ask for a path outside the whitelist."""
    bad = set(malicious_at)
    acc = Pid("acceptor")
    conns = []
    for c in range(n_clients):
        path = MALICIOUS_PATH if c in bad else WHITELIST[c % 2]
        conns.append((Pid(f"c{c}"), path, _headers(c in bad)))

    def session(a: Pattern):
        s = a.subject.v
        if s == acc and a.kind == RECV:
            return a.payload.v.items[0]
        return s

    def done(world):
        return sorted((p for p, msgs in world.sinks.items()
                       if any(isinstance(m, tuple) and m[0] == "file" for m in msgs)), key=str)

    return Workload(f"webserver-{n_clients}" + (f"-mal{sorted(bad)}" if bad else ""), (acc,),
                    {acc: (_acceptor, {"clients": n_clients})}, connections=conns,
                    faults={"malicious": sorted(bad)}, session_key=session, done=done)


# ---------------------------------------------------------------- replay oracle

def replay_sync_count(events: Sequence[Pattern], f: Node) -> int:
    """Count events matching a necessity that synchronous-falsity encoding
    marks blocking; independent of the simulator's bookkeeping."""
    _, enc = syn_enc(f)
    pats = [g.pat for g in subformulas(enc) if isinstance(g, Nec) and g.mode is Mode.BLOCKING]
    return sum(1 for e in events if any(match_action(p, e) is not None for p in pats))


# ---------------------------------------------------------------- bench

MONITOR_SCRIPTS = {"incdec": "hybrid3", "webserver": "yaws_hybrid"}
RA_SCRIPTS = {"incdec": "static9", "webserver": "yaws_v4"}


def spec_for(mode: InstrMode, family: str) -> InstrumentedSpec:
    mode = InstrMode(mode)
    s = corpus_script((RA_SCRIPTS if mode is InstrMode.RA else MONITOR_SCRIPTS)[family])
    return instrument(s.formula, mode, s.types)


def make_workload(name: str, clients: int = 5, malicious: Iterable[int] = ()) -> Workload:
    if name == "incdec":
        return workload_incdec(False)
    if name == "incdec-faulty":
        return workload_incdec(True)
    if name == "webserver":
        return workload_webserver(clients, malicious)
    raise ValueError(f"unknown workload {name!r}")


COUNTERS = ("events", "blockingHandshakes", "adptMessages", "totalSuspendedSteps")


@dataclass
class BenchReport:
    runs: list                          # ProtocolStats
    cells: dict                         # (mode, workload) -> {counter: (mean, min, max)}

    def to_text(self) -> str:
        head = f"{'mode':<5} {'workload':<22}" + "".join(f" {c:>22}" for c in COUNTERS)
        lines = [head, "-" * len(head)]
        for (mode, wl), agg in sorted(self.cells.items()):
            row = f"{mode:<5} {wl:<22}"
            for c in COUNTERS:
                mean, lo, hi = agg[c]
                row += f" {f'{mean:.1f} [{lo}-{hi}]':>22}"
            lines.append(row)
        return "\n".join(lines)

    def records(self) -> list:
        return [r.record() for r in self.runs]


def bench(modes: Sequence, workloads: Sequence[str], seeds: Iterable[int], clients: int = 5,
          malicious: Iterable[int] = ()) -> BenchReport:
    runs = []
    seeds = list(seeds)
    for mode in modes:
        for wl in workloads:
            family = "webserver" if wl.startswith("webserver") else "incdec"
            spec = spec_for(mode, family)
            for seed in seeds:
                runs.append(simulate_protocol(spec, make_workload(wl, clients, malicious), seed))
    cells: dict = {}
    for r in runs:
        cells.setdefault((r.mode, r.workload), []).append(r)
    agg = {}
    for key, rs in cells.items():
        agg[key] = {c: (statistics.fmean(getattr(r, c) for r in rs),
                        min(getattr(r, c) for r in rs), max(getattr(r, c) for r in rs))
                    for c in COUNTERS}
    return BenchReport(runs, agg)
