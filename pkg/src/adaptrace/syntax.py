"""Abstract syntax of adaptation scripts: values, pattern terms, patterns and formulas.

Every node is an immutable dataclass with a cached structural hash, so formulas
can be used directly as keys in the interleaving explorer's visited set.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields
from enum import Enum
from typing import Iterator, Optional, Union


class Node:
    """Base class giving cached hashing and structural equality."""

    def _vals(self) -> tuple:
        names = type(self).__dict__.get("_fcache")
        if names is None:
            names = tuple(f.name for f in fields(self) if f.compare)
            type.__setattr__(type(self), "_fcache", names)
        return tuple(getattr(self, n) for n in names)

    def __hash__(self) -> int:
        h = self.__dict__.get("_h")
        if h is None:
            h = hash((type(self).__name__,) + self._vals())
            object.__setattr__(self, "_h", h)
        return h

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if type(self) is not type(other):
            return NotImplemented if not isinstance(other, Node) else False
        return hash(self) == hash(other) and self._vals() == other._vals()

    def __ne__(self, other) -> bool:
        r = self.__eq__(other)
        return r if r is NotImplemented else not r

    def __str__(self) -> str:
        s = self.__dict__.get("_s")
        if s is None:
            from .printer import show
            s = show(self)
            object.__setattr__(self, "_s", s)
        return s


def node(cls):
    return dataclass(frozen=True, eq=False, repr=True)(cls)


# ---------------------------------------------------------------- values

@node
class Pid(Node):
    name: str


@node
class Atom(Node):
    name: str


@node
class Int(Node):
    n: int


@node
class VTuple(Node):
    items: tuple


@node
class VList(Node):
    items: tuple


Value = Union[Pid, Atom, Int, VTuple, VList]
VALUE_TYPES = (Pid, Atom, Int, VTuple, VList)


class TypeAnnot(str, Enum):
    DAT = "dat"
    UPID = "upid"
    LPID = "lpid"


class VType(str, Enum):
    DAT = "dat"
    UPID = "upid"
    LPID = "lpid"
    LPIDB = "lpidb"


# ---------------------------------------------------------------- pattern terms

@node
class Wild(Node):
    pass


WILD = Wild()


@node
class Var(Node):
    name: str
    annot: Optional[TypeAnnot] = None


@node
class Lit(Node):
    v: Node  # a Value


@node
class PTuple(Node):
    items: tuple


@node
class PList(Node):
    items: tuple


@node
class Arith(Node):
    """Arithmetic over term leaves, e.g. ``x+1``; evaluated once closed."""
    op: str
    left: Node
    right: Node


PatTerm = Union[Wild, Var, Lit, PTuple, PList, Arith]


def plain(v: Var) -> Var:
    """The reference form of a variable (annotation stripped)."""
    return v if v.annot is None else Var(v.name)


# ---------------------------------------------------------------- patterns

SEND, RECV, CALL, RET, ANY = "send", "recv", "call", "ret", "any"


@node
class Pattern(Node):
    kind: str
    subject: Node
    payload: Node
    target: Optional[Node] = None
    binds: frozenset = frozenset()   # names bound by this pattern
    scope: frozenset = frozenset()   # enclosing recursion variables (decoration)


ANY_PATTERN = Pattern(ANY, WILD, WILD)


def send(s, t, p, **kw) -> Pattern:
    return Pattern(SEND, s, p, t, **kw)


def recv(s, p, **kw) -> Pattern:
    return Pattern(RECV, s, p, None, **kw)


def pterms(p: Pattern) -> tuple:
    if p.kind == SEND:
        return (p.subject, p.target, p.payload)
    return (p.subject, p.payload)


def with_terms(p: Pattern, terms: tuple) -> Pattern:
    if p.kind == SEND:
        s, t, pl = terms
        return Pattern(p.kind, s, pl, t, p.binds, p.scope)
    s, pl = terms
    return Pattern(p.kind, s, pl, None, p.binds, p.scope)


# ---------------------------------------------------------------- boolean expressions

@node
class Cmp(Node):
    op: str  # one of = != < > <= >=
    left: Node
    right: Node


@node
class BAnd(Node):
    left: Node
    right: Node


@node
class BOr(Node):
    left: Node
    right: Node


@node
class BNot(Node):
    arg: Node


@node
class BConst(Node):
    value: bool


@node
class Pred(Node):
    name: str
    args: tuple


# ---------------------------------------------------------------- formulas

class Mode(str, Enum):
    ASYNC = "async"
    BLOCKING = "blocking"
    CORE = "core"


SYNC_KINDS = ("restart", "purge", "skill", "slink", "sunlink")
ASYNC_KINDS = ("adaptA", "kill", "link", "unlink")


@node
class Tru(Node):
    pass


@node
class Fls(Node):
    pass


@node
class SyncFls(Node):
    pass


TT, FF, SFF = Tru(), Fls(), SyncFls()


@node
class And(Node):
    left: Node
    right: Node


@node
class Nec(Node):
    mode: Mode
    pat: Pattern
    releases: tuple
    body: Node


@node
class Max(Node):
    var: str
    body: Node


@node
class FVar(Node):
    name: str


@node
class If(Node):
    cond: Node
    then: Node
    els: Node


@node
class AdaptA(Node):
    adaptees: tuple
    releases: tuple
    body: Node
    kind: str = "adaptA"


@node
class AdaptS(Node):
    kind: str
    adaptees: tuple
    releases: tuple
    body: Node


@node
class Block(Node):
    refs: tuple
    body: Node


@node
class Release(Node):
    refs: tuple
    body: Node


@node
class Clear(Node):
    var: str
    body: Node


Formula = Node


def conj(*fs: Node) -> Node:
    """Right-nested conjunction; tt for no arguments."""
    if not fs:
        return TT
    out = fs[-1]
    for f in reversed(fs[:-1]):
        out = And(f, out)
    return out


def conjuncts(f: Node) -> list:
    out = []
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, And):
            stack.append(g.right)
            stack.append(g.left)
        else:
            out.append(g)
    return out


def children(f: Node) -> Iterator[Node]:
    if isinstance(f, And):
        yield f.left
        yield f.right
    elif isinstance(f, If):
        yield f.then
        yield f.els
    elif isinstance(f, (Nec, Max, AdaptA, AdaptS, Block, Release, Clear)):
        yield f.body


def subformulas(f: Node) -> Iterator[Node]:
    stack = [f]
    while stack:
        g = stack.pop()
        yield g
        stack.extend(children(g))


def map_children(f: Node, fn) -> Node:
    """Rebuild f with fn applied to each immediate subformula."""
    if isinstance(f, And):
        return And(fn(f.left), fn(f.right))
    if isinstance(f, If):
        return If(f.cond, fn(f.then), fn(f.els))
    if isinstance(f, Nec):
        return Nec(f.mode, f.pat, f.releases, fn(f.body))
    if isinstance(f, Max):
        return Max(f.var, fn(f.body))
    if isinstance(f, AdaptA):
        return AdaptA(f.adaptees, f.releases, fn(f.body), f.kind)
    if isinstance(f, AdaptS):
        return AdaptS(f.kind, f.adaptees, f.releases, fn(f.body))
    if isinstance(f, Block):
        return Block(f.refs, fn(f.body))
    if isinstance(f, Release):
        return Release(f.refs, fn(f.body))
    if isinstance(f, Clear):
        return Clear(f.var, fn(f.body))
    return f


def size(f: Node) -> int:
    return sum(1 for _ in subformulas(f))


def count_max(f: Node) -> int:
    return sum(1 for g in subformulas(f) if isinstance(g, Max))


@dataclass
class Script:
    """A parsed script file: formula plus its header declarations."""
    formula: Node
    pids: tuple = ()
    types: dict = field(default_factory=dict)   # Pid -> VType
    source: str = ""
