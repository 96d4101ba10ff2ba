"""Concrete-syntax printer. Output parses back to the same AST (given the same pid set)."""
from __future__ import annotations

import re

from .syntax import (
    ANY, CALL, RECV, RET, SEND, AdaptA, AdaptS, And, Arith, Atom, BAnd, BConst, BNot,
    Block, BOr, Clear, Cmp, FVar, Fls, If, Int, Lit, Max, Mode, Nec, Node, Pattern, Pid,
    PList, Pred, PTuple, Release, SyncFls, Tru, Var, VList, VTuple, Wild,
)

_PLAIN_ATOM = re.compile(r"^[a-z][A-Za-z0-9_]*$")
_VARLIKE = re.compile(r"^[a-z][0-9']*$")
KEYWORDS = {"tt", "ff", "sff", "max", "if", "then", "else", "and", "or", "not",
            "andalso", "orelse", "true", "false", "call", "ret", "block", "release", "clr"}


def show_atom(name: str) -> str:
    if _PLAIN_ATOM.match(name) and not _VARLIKE.match(name) and name not in KEYWORDS:
        return name
    return "'" + name.replace("\\", "\\\\").replace("'", "\\'") + "'"


def show_refs(refs) -> str:
    return "{" + ", ".join(show(r) for r in refs) + "}"


def _show_term(t: Node) -> str:
    if isinstance(t, Wild):
        return "_"
    if isinstance(t, Var):
        return t.name if t.annot is None else f"{t.name}:{t.annot.value}"
    if isinstance(t, Lit):
        return show(t.v)
    if isinstance(t, (PTuple, VTuple)):
        return "{" + ", ".join(show(x) for x in t.items) + "}"
    if isinstance(t, (PList, VList)):
        return "[" + ", ".join(show(x) for x in t.items) + "]"
    if isinstance(t, Arith):
        r = show(t.right)
        if isinstance(t.right, Arith):
            r = f"({r})"
        return f"{show(t.left)}{t.op}{r}"
    raise TypeError(t)


def _show_pattern(p: Pattern) -> str:
    if p.kind == ANY:
        return "_"
    if p.kind == SEND:
        return f"{show(p.subject)} ! {show(p.target)} . {show(p.payload)}"
    if p.kind == RECV:
        return f"{show(p.subject)} ? {show(p.payload)}"
    if p.kind in (CALL, RET):
        return f"{p.kind} {show(p.subject)} {show(p.payload)}"
    raise ValueError(p.kind)


def _show_bool(b: Node) -> str:
    if isinstance(b, Cmp):
        return f"{show(b.left)} {b.op} {show(b.right)}"
    if isinstance(b, BAnd):
        return f"({_show_bool(b.left)} and {_show_bool(b.right)})"
    if isinstance(b, BOr):
        return f"({_show_bool(b.left)} or {_show_bool(b.right)})"
    if isinstance(b, BNot):
        return f"not ({_show_bool(b.arg)})"
    if isinstance(b, BConst):
        return "true" if b.value else "false"
    if isinstance(b, Pred):
        return f"{b.name}(" + ", ".join(show(a) for a in b.args) + ")"
    raise TypeError(b)


def show(x: Node) -> str:
    if isinstance(x, Pid):
        return x.name
    if isinstance(x, Atom):
        return show_atom(x.name)
    if isinstance(x, Int):
        return str(x.n)
    if isinstance(x, (Wild, Var, Lit, PTuple, PList, Arith, VTuple, VList)):
        return _show_term(x)
    if isinstance(x, Pattern):
        return _show_pattern(x)
    if isinstance(x, (Cmp, BAnd, BOr, BNot, BConst, Pred)):
        return _show_bool(x)
    if isinstance(x, Tru):
        return "tt"
    if isinstance(x, Fls):
        return "ff"
    if isinstance(x, SyncFls):
        return "sff"
    if isinstance(x, FVar):
        return x.name
    if isinstance(x, And):
        return f"({show(x.left)} & {show(x.right)})"
    if isinstance(x, Nec):
        p = show(x.pat)
        if x.mode is Mode.CORE:
            head = f"[{p}]"
        elif x.mode is Mode.ASYNC:
            head = f"[{p}]a,{show_refs(x.releases)}"
        else:
            head = f"[|{p}|]{show_refs(x.releases)}"
        return f"{head} {show(x.body)}"
    if isinstance(x, Max):
        return f"max {x.var}. {show(x.body)}"
    if isinstance(x, If):
        return f"if {_show_bool(x.cond)} then {show(x.then)} else {show(x.els)}"
    if isinstance(x, AdaptA):
        return f"{x.kind}({', '.join(show(r) for r in x.adaptees)})_{show_refs(x.releases)} {show(x.body)}"
    if isinstance(x, AdaptS):
        return f"{x.kind}({', '.join(show(r) for r in x.adaptees)})_{show_refs(x.releases)} {show(x.body)}"
    if isinstance(x, Block):
        return f"block{show_refs(x.refs)} {show(x.body)}"
    if isinstance(x, Release):
        return f"release{show_refs(x.refs)} {show(x.body)}"
    if isinstance(x, Clear):
        return f"clr {x.var}. {show(x.body)}"
    raise TypeError(f"cannot print {x!r}")
