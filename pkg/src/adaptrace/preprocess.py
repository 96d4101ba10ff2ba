"""Normalisation passes run before monitoring or type checking."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

from .syntax import (
    FF, AdaptA, AdaptS, And, Arith, BAnd, BNot, Block, BOr, Clear, Cmp, FVar, If, Max,
    Mode, Nec, Node, Pattern, Pid, PList, Pred, PTuple, Release, SyncFls, Var,
    map_children, pterms, with_terms,
)
from .matching import subj_ref


class PreprocessError(Exception):
    pass


class GuardednessError(PreprocessError):
    def __init__(self, var: str):
        self.var = var
        super().__init__(f"recursion variable {var} is not guarded by a necessity")


@dataclass(frozen=True)
class LintWarning:
    code: str
    ref: str
    message: str

    def __str__(self):
        return f"warning[{self.code}] {self.message}"


# ---------------------------------------------------------------- alpha renaming

def _fresh(name: str, used: set) -> str:
    if name not in used:
        used.add(name)
        return name
    for k in itertools.count(1):
        cand = name + "'" * k if name[-1:].isalpha() or name.endswith("'") else f"{name}_{k}"
        if cand not in used:
            used.add(cand)
            return cand
    raise AssertionError


def _rn_term(t, m):
    if isinstance(t, Var):
        return Var(m.get(t.name, t.name), t.annot)
    if isinstance(t, PTuple):
        return PTuple(tuple(_rn_term(x, m) for x in t.items))
    if isinstance(t, PList):
        return PList(tuple(_rn_term(x, m) for x in t.items))
    if isinstance(t, Arith):
        return Arith(t.op, _rn_term(t.left, m), _rn_term(t.right, m))
    return t


def _rn_bool(b, m):
    if isinstance(b, Cmp):
        return Cmp(b.op, _rn_term(b.left, m), _rn_term(b.right, m))
    if isinstance(b, BAnd):
        return BAnd(_rn_bool(b.left, m), _rn_bool(b.right, m))
    if isinstance(b, BOr):
        return BOr(_rn_bool(b.left, m), _rn_bool(b.right, m))
    if isinstance(b, BNot):
        return BNot(_rn_bool(b.arg, m))
    if isinstance(b, Pred):
        return Pred(b.name, tuple(_rn_term(a, m) for a in b.args))
    return b


def _rn_refs(refs, m):
    return tuple(Var(m.get(r.name, r.name)) if isinstance(r, Var) else r for r in refs)


def alpha_rename(f: Node) -> Node:
    """Make every recursion binder and every term binder unique."""
    fused: set = set()
    tused: set = set()

    def go(g, fm, tm):
        if isinstance(g, Max):
            new = _fresh(g.var, fused)
            return Max(new, go(g.body, {**fm, g.var: new}, tm))
        if isinstance(g, FVar):
            return FVar(fm.get(g.name, g.name))
        if isinstance(g, Clear):
            return Clear(fm.get(g.var, g.var), go(g.body, fm, tm))
        if isinstance(g, Nec):
            rl = _rn_refs(g.releases, tm)
            inner = dict(tm)
            for b in sorted(g.pat.binds):
                inner[b] = _fresh(b, tused)
            pat = with_terms(g.pat, tuple(_rn_term(t, inner) for t in pterms(g.pat)))
            pat = Pattern(pat.kind, pat.subject, pat.payload, pat.target,
                          frozenset(inner[b] for b in g.pat.binds), pat.scope)
            return Nec(g.mode, pat, rl, go(g.body, fm, inner))
        if isinstance(g, If):
            return If(_rn_bool(g.cond, tm), go(g.then, fm, tm), go(g.els, fm, tm))
        if isinstance(g, AdaptA):
            return AdaptA(_rn_refs(g.adaptees, tm), _rn_refs(g.releases, tm),
                          go(g.body, fm, tm), g.kind)
        if isinstance(g, AdaptS):
            return AdaptS(g.kind, _rn_refs(g.adaptees, tm), _rn_refs(g.releases, tm),
                          go(g.body, fm, tm))
        if isinstance(g, (Block, Release)):
            return type(g)(_rn_refs(g.refs, tm), go(g.body, fm, tm))
        return map_children(g, lambda h: go(h, fm, tm))

    return go(f, {}, {})


# ---------------------------------------------------------------- guardedness

def check_guarded(f: Node) -> bool:
    def go(g, unguarded: frozenset):
        if isinstance(g, FVar):
            if g.name in unguarded:
                raise GuardednessError(g.name)
            return
        if isinstance(g, Max):
            go(g.body, unguarded | {g.var})
            return
        if isinstance(g, Nec):
            go(g.body, frozenset())
            return
        for ch in _kids(g):
            go(ch, unguarded)

    go(f, frozenset())
    return True


def _kids(g):
    if isinstance(g, And):
        return (g.left, g.right)
    if isinstance(g, If):
        return (g.then, g.els)
    b = getattr(g, "body", None)
    return (b,) if b is not None else ()


# ---------------------------------------------------------------- syn_enc

def syn_enc(f: Node):
    """Push synchronous falsities onto the nearest necessity above them.

    Returns (flag, formula); a true flag means a sff was found that no
    enclosing necessity has absorbed yet."""
    if isinstance(f, Nec):
        b, body = syn_enc(f.body)
        if b:
            return False, Nec(Mode.BLOCKING, f.pat, f.releases, body)
        return False, Nec(f.mode, f.pat, f.releases, body)
    if isinstance(f, And):
        b1, l = syn_enc(f.left)
        b2, r = syn_enc(f.right)
        return b1 or b2, And(l, r)
    if isinstance(f, If):
        b1, t = syn_enc(f.then)
        b2, e = syn_enc(f.els)
        return b1 or b2, If(f.cond, t, e)
    if isinstance(f, (Max, Clear)):
        b, body = syn_enc(f.body)
        return b, type(f)(f.var, body)
    if isinstance(f, SyncFls):
        return True, FF
    return False, f


def encode_hybrid(f: Node) -> Node:
    flag, g = syn_enc(f)
    if flag:
        raise PreprocessError("synchronous falsity with no preceding necessity")
    return g


# ---------------------------------------------------------------- decoration

def decorate(f: Node, scope: frozenset = frozenset()) -> Node:
    """Annotate every pattern with the recursion variables enclosing it."""
    if isinstance(f, Max):
        return Max(f.var, decorate(f.body, scope | {f.var}))
    if isinstance(f, Nec):
        p = f.pat
        if p.scope != scope:
            p = Pattern(p.kind, p.subject, p.payload, p.target, p.binds, scope)
        return Nec(f.mode, p, f.releases, decorate(f.body, scope))
    return map_children(f, lambda g: decorate(g, scope))


# ---------------------------------------------------------------- reference lists

def dedupe_refs(f: Node, warnings: list) -> Node:
    def dd(refs, where):
        seen, out = set(), []
        for r in refs:
            if r in seen:
                warnings.append(LintWarning("dup-ref", str(r),
                                            f"duplicate reference {r} in {where} list collapsed"))
                continue
            seen.add(r)
            out.append(r)
        return tuple(out)

    def go(g):
        if isinstance(g, Nec):
            return Nec(g.mode, g.pat, dd(g.releases, "release"), go(g.body))
        if isinstance(g, AdaptA):
            return AdaptA(dd(g.adaptees, "adaptation"), dd(g.releases, "release"),
                          go(g.body), g.kind)
        if isinstance(g, AdaptS):
            return AdaptS(g.kind, dd(g.adaptees, "adaptation"), dd(g.releases, "release"),
                          go(g.body))
        return map_children(g, go)

    return go(f)


# ---------------------------------------------------------------- blocking lints

def _key(r):
    return r if isinstance(r, Pid) else Var(r.name)


def lint_blocking(f: Node) -> list:
    """Advisory checks for the blocking/release rules of thumb."""
    out: list = []
    seen: set = set()

    def warn(code, ref, msg):
        if (code, str(ref)) not in seen:
            seen.add((code, str(ref)))
            out.append(LintWarning(code, str(ref), msg))

    def go(g, blocked: frozenset, unreleased: frozenset):
        # blocked: refs suspended on this path; unreleased: blocked refs that some
        # intermediate necessity fails to list in its release list
        if isinstance(g, Nec):
            rl = {_key(r) for r in g.releases}
            missing = unreleased | frozenset(r for r in blocked if r not in rl)
            b = blocked
            if g.mode is Mode.BLOCKING:
                s = subj_ref(g.pat)
                if s is not None:
                    b = b | {s}
            go(g.body, b, missing)
            return
        if isinstance(g, AdaptS):
            for r in g.adaptees:
                k = _key(r)
                if k not in blocked:
                    warn("unblocked-adaptee", k,
                         f"{g.kind} adapts {k} synchronously but no preceding blocking "
                         f"necessity suspends it")
                elif k in unreleased:
                    warn("missing-release", k,
                         f"{k} is blocked but not released by every necessity before {g.kind}")
        if isinstance(g, (AdaptA, AdaptS)):
            rel = {_key(r) for r in g.releases}
            go(g.body, blocked - rel, unreleased - rel)
            return
        if isinstance(g, FVar):
            return
        for ch in _kids(g):
            go(ch, blocked, unreleased)

    go(f, frozenset(), frozenset())
    return out


# ---------------------------------------------------------------- pipeline

def prepare(f: Node, lint: bool = True):
    """alpha-rename, check guardedness, collapse duplicate refs, decorate.
    Returns (formula, warnings)."""
    warnings: list = []
    g = alpha_rename(f)
    check_guarded(g)
    g = dedupe_refs(g, warnings)
    g = decorate(g)
    if lint:
        warnings.extend(lint_blocking(g))
    return g, warnings
