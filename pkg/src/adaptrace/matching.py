"""Pattern matching, substitution and expression evaluation."""
from __future__ import annotations

from typing import Callable, Optional

from .syntax import (
    ANY, AdaptA, AdaptS, And, Arith, Atom, BAnd, BConst, BNot, Block, BOr, Clear, Cmp,
    FVar, If, Int, Lit, Max, Nec, Node, Pattern, Pid, PList, Pred, PTuple, Release,
    TypeAnnot, Var, VList, VTuple, Wild, map_children, pterms, with_terms,
)

Subst = dict  # name -> Value


class OpenTermError(ValueError):
    """An expression was evaluated while it still contained variables."""


# ---------------------------------------------------------------- term helpers

def term_value(t: Node):
    """The value of a closed term, or None if it is open (contains Var/Wild)."""
    if isinstance(t, Lit):
        return t.v
    if isinstance(t, PTuple):
        items = [term_value(x) for x in t.items]
        return None if any(x is None for x in items) else VTuple(tuple(items))
    if isinstance(t, PList):
        items = [term_value(x) for x in t.items]
        return None if any(x is None for x in items) else VList(tuple(items))
    if isinstance(t, Arith):
        left, right = term_value(t.left), term_value(t.right)
        if left is None or right is None:
            return None
        return _arith(t.op, left, right)
    return None


def _arith(op: str, a, b):
    if not (isinstance(a, Int) and isinstance(b, Int)):
        raise OpenTermError(f"arithmetic on non-integers: {a} {op} {b}")
    return Int(a.n + b.n if op == "+" else a.n - b.n)


def _view(t: Node):
    if isinstance(t, Wild):
        return ("w", None)
    if isinstance(t, Var):
        return ("v", t.name)
    if isinstance(t, Lit):
        v = t.v
        if isinstance(v, VTuple):
            return ("t", tuple(Lit(x) for x in v.items))
        if isinstance(v, VList):
            return ("l", tuple(Lit(x) for x in v.items))
        return ("c", v)
    if isinstance(t, PTuple):
        return ("t", t.items)
    if isinstance(t, PList):
        return ("l", t.items)
    if isinstance(t, Arith):
        try:
            v = term_value(t)
        except OpenTermError:
            return ("x", None)
        # open arithmetic behaves as a wildcard when comparing patterns statically
        return ("w", None) if v is None else ("c", v)
    raise TypeError(f"not a pattern term: {t!r}")


def _merge(a: dict, b: dict) -> Optional[dict]:
    if not a:
        return b
    if not b:
        return a
    out = dict(a)
    for k, v in b.items():
        if k in out and out[k] != v:
            return None
        out[k] = v
    return out


def _pmtch(a: Node, b: Node) -> Optional[dict]:
    ka, xa = _view(a)
    kb, xb = _view(b)
    if ka == "x" or kb == "x":
        return None
    if ka == "w" or kb == "w":
        return {}
    if ka == "v" and kb == "v":
        return {}
    if ka == "v":
        v = term_value(b)
        return {(0, xa): v} if v is not None else {}
    if kb == "v":
        v = term_value(a)
        return {(1, xb): v} if v is not None else {}
    if ka == "c" and kb == "c":
        return {} if xa == xb else None
    if ka == kb and ka in ("t", "l") and len(xa) == len(xb):
        out: dict = {}
        for x, y in zip(xa, xb):
            s = _pmtch(x, y)
            if s is None:
                return None
            out = _merge(out, s)
            if out is None:
                return None
        return out
    return None


def mtch(p1: Pattern, p2: Pattern) -> Optional[Subst]:
    """Compare two patterns; returns a substitution or None (no match)."""
    if p1.kind == ANY or p2.kind == ANY:
        return {}
    if p1.kind != p2.kind:
        return None
    out: dict = {}
    for a, b in zip(pterms(p1), pterms(p2)):
        s = _pmtch(a, b)
        if s is None:
            return None
        out = _merge(out, s)
        if out is None:
            return None
    flat: dict = {}
    for (_, name), v in out.items():
        if name in flat and flat[name] != v:
            return None
        flat[name] = v
    return flat


def match_action(p: Pattern, a: Pattern) -> Optional[Subst]:
    """Match a necessity pattern against a closed action."""
    return mtch(p, a)


def subj(p: Pattern) -> Node:
    """The term in the subject position: sender for outputs, the actor otherwise."""
    return p.subject


def subj_ref(p: Pattern):
    """Subject as a reference (Pid or plain Var), or None for wildcards/atoms."""
    s = p.subject
    if isinstance(s, Lit) and isinstance(s.v, Pid):
        return s.v
    if isinstance(s, Var):
        return Var(s.name)
    return None


def _term_vars(t: Node, acc: list):
    if isinstance(t, Var):
        acc.append(t)
    elif isinstance(t, (PTuple, PList)):
        for x in t.items:
            _term_vars(x, acc)
    elif isinstance(t, Arith):
        _term_vars(t.left, acc)
        _term_vars(t.right, acc)


def pattern_vars(p: Pattern) -> list:
    acc: list = []
    for t in pterms(p):
        _term_vars(t, acc)
    return acc


def tbnd(p: Pattern) -> dict:
    """Process bindings of a pattern: annotated upid/lpid binders only."""
    out = {}
    for v in pattern_vars(p):
        if v.annot in (TypeAnnot.UPID, TypeAnnot.LPID):
            out[v.name] = v.annot
    return out


# ---------------------------------------------------------------- free variables

def _bool_vars(b: Node, acc: set):
    if isinstance(b, Cmp):
        lst: list = []
        _term_vars(b.left, lst)
        _term_vars(b.right, lst)
        acc.update(v.name for v in lst)
    elif isinstance(b, (BAnd, BOr)):
        _bool_vars(b.left, acc)
        _bool_vars(b.right, acc)
    elif isinstance(b, BNot):
        _bool_vars(b.arg, acc)
    elif isinstance(b, Pred):
        lst = []
        for a in b.args:
            _term_vars(a, lst)
        acc.update(v.name for v in lst)


def _ref_vars(refs) -> set:
    return {r.name for r in refs if isinstance(r, Var)}


def free_term_vars(f: Node) -> frozenset:
    """Free term variables of a formula (cached on the node)."""
    c = f.__dict__.get("_ftv")
    if c is not None:
        return c
    if isinstance(f, Nec):
        inner = set(free_term_vars(f.body))
        pv = {v.name for v in pattern_vars(f.pat)}
        inner |= pv
        inner -= f.pat.binds
        inner |= _ref_vars(f.releases)
        out = frozenset(inner)
    elif isinstance(f, If):
        acc: set = set()
        _bool_vars(f.cond, acc)
        out = frozenset(acc | free_term_vars(f.then) | free_term_vars(f.els))
    elif isinstance(f, (AdaptA, AdaptS)):
        out = frozenset(_ref_vars(f.adaptees) | _ref_vars(f.releases) | free_term_vars(f.body))
    elif isinstance(f, (Block, Release)):
        out = frozenset(_ref_vars(f.refs) | free_term_vars(f.body))
    elif isinstance(f, And):
        out = free_term_vars(f.left) | free_term_vars(f.right)
    elif isinstance(f, (Max, Clear)):
        out = free_term_vars(f.body)
    else:
        out = frozenset()
    object.__setattr__(f, "_ftv", out)
    return out


def free_formula_vars(f: Node) -> frozenset:
    c = f.__dict__.get("_ffv")
    if c is not None:
        return c
    if isinstance(f, FVar):
        out = frozenset([f.name])
    elif isinstance(f, Max):
        out = free_formula_vars(f.body) - {f.var}
    else:
        out = frozenset()
        for ch in _kids(f):
            out |= free_formula_vars(ch)
    object.__setattr__(f, "_ffv", out)
    return out


def _kids(f):
    if isinstance(f, And):
        return (f.left, f.right)
    if isinstance(f, If):
        return (f.then, f.els)
    b = getattr(f, "body", None)
    return (b,) if b is not None else ()


# ---------------------------------------------------------------- substitution

def subst_term(t: Node, s: Subst) -> Node:
    if isinstance(t, Var):
        v = s.get(t.name)
        return t if v is None else Lit(v)
    if isinstance(t, PTuple):
        return PTuple(tuple(subst_term(x, s) for x in t.items))
    if isinstance(t, PList):
        return PList(tuple(subst_term(x, s) for x in t.items))
    if isinstance(t, Arith):
        return Arith(t.op, subst_term(t.left, s), subst_term(t.right, s))
    return t


def subst_pattern(p: Pattern, s: Subst) -> Pattern:
    inner = {k: v for k, v in s.items() if k not in p.binds} if p.binds else s
    return with_terms(p, tuple(subst_term(t, inner) for t in pterms(p)))


def subst_refs(refs: tuple, s: Subst) -> tuple:
    return tuple(s.get(r.name, r) if isinstance(r, Var) else r for r in refs)


def subst_bool(b: Node, s: Subst) -> Node:
    if isinstance(b, Cmp):
        return Cmp(b.op, subst_term(b.left, s), subst_term(b.right, s))
    if isinstance(b, BAnd):
        return BAnd(subst_bool(b.left, s), subst_bool(b.right, s))
    if isinstance(b, BOr):
        return BOr(subst_bool(b.left, s), subst_bool(b.right, s))
    if isinstance(b, BNot):
        return BNot(subst_bool(b.arg, s))
    if isinstance(b, Pred):
        return Pred(b.name, tuple(subst_term(a, s) for a in b.args))
    return b


def apply_subst(f: Node, s: Subst) -> Node:
    """Replace free term variables by values. Binders shadow outer bindings."""
    if not s:
        return f
    fv = free_term_vars(f)
    if not fv:
        return f
    s = {k: v for k, v in s.items() if k in fv}
    if not s:
        return f
    if isinstance(f, Nec):
        inner = {k: v for k, v in s.items() if k not in f.pat.binds}
        return Nec(f.mode, subst_pattern(f.pat, s), subst_refs(f.releases, s),
                   apply_subst(f.body, inner))
    if isinstance(f, If):
        return If(subst_bool(f.cond, s), apply_subst(f.then, s), apply_subst(f.els, s))
    if isinstance(f, AdaptA):
        return AdaptA(subst_refs(f.adaptees, s), subst_refs(f.releases, s),
                      apply_subst(f.body, s), f.kind)
    if isinstance(f, AdaptS):
        return AdaptS(f.kind, subst_refs(f.adaptees, s), subst_refs(f.releases, s),
                      apply_subst(f.body, s))
    if isinstance(f, Block):
        return Block(subst_refs(f.refs, s), apply_subst(f.body, s))
    if isinstance(f, Release):
        return Release(subst_refs(f.refs, s), apply_subst(f.body, s))
    return map_children(f, lambda g: apply_subst(g, s))


def subst_formula_var(f: Node, x: str, g: Node) -> Node:
    """Replace free occurrences of recursion variable x in f by g."""
    if x not in free_formula_vars(f):
        return f
    if isinstance(f, FVar):
        return g
    if isinstance(f, Max) and f.var == x:
        return f
    return map_children(f, lambda h: subst_formula_var(h, x, g))


# ---------------------------------------------------------------- evaluation

def eval_term(t: Node):
    v = term_value(t)
    if v is None:
        raise OpenTermError(f"open term {t}")
    return v


def _rank(v) -> tuple:
    if isinstance(v, Int):
        return (0, v.n)
    if isinstance(v, Atom):
        return (1, v.name)
    if isinstance(v, Pid):
        return (2, v.name)
    if isinstance(v, VTuple):
        return (3, len(v.items), tuple(_rank(x) for x in v.items))
    return (4, tuple(_rank(x) for x in v.items))


def value_text(v) -> str:
    if isinstance(v, (Atom, Pid)):
        return v.name
    if isinstance(v, Int):
        return str(v.n)
    return " ".join(value_text(x) for x in v.items)


def _is_malicious(*headers) -> bool:
    return any("../" in value_text(h) for h in headers)


DEFAULT_PREDICATES: dict = {"isMalicious": _is_malicious}


def eval_bool(b: Node, preds: Optional[dict] = None) -> bool:
    if isinstance(b, BConst):
        return b.value
    if isinstance(b, Cmp):
        x, y = eval_term(b.left), eval_term(b.right)
        if b.op == "=":
            return x == y
        if b.op == "!=":
            return x != y
        rx, ry = _rank(x), _rank(y)
        return {"<": rx < ry, ">": rx > ry, "<=": rx <= ry, ">=": rx >= ry}[b.op]
    if isinstance(b, BAnd):
        return eval_bool(b.left, preds) and eval_bool(b.right, preds)
    if isinstance(b, BOr):
        return eval_bool(b.left, preds) or eval_bool(b.right, preds)
    if isinstance(b, BNot):
        return not eval_bool(b.arg, preds)
    if isinstance(b, Pred):
        table = DEFAULT_PREDICATES if preds is None else preds
        fn: Optional[Callable] = table.get(b.name)
        if fn is None:
            raise KeyError(f"unknown predicate {b.name!r}")
        return bool(fn(*[eval_term(a) for a in b.args]))
    raise TypeError(f"not a boolean expression: {b!r}")


def action_pids(a: Pattern) -> set:
    """All pids occurring anywhere in a closed action."""
    out: set = set()

    def walk(v):
        if isinstance(v, Pid):
            out.add(v)
        elif isinstance(v, (VTuple, VList)):
            for x in v.items:
                walk(x)

    for t in pterms(a):
        walk(term_value(t))
    return out


def is_closed_action(p: Pattern) -> bool:
    return all(term_value(t) is not None for t in pterms(p)) and isinstance(p.subject, Lit) \
        and isinstance(p.subject.v, Pid)
