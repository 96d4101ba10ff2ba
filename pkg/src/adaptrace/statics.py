"""Static linear type checking of adaptation scripts."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

from .matching import mtch, subj_ref, tbnd
from .syntax import (
    ANY_PATTERN, TT, AdaptA, AdaptS, And, Atom, Block, Clear, FVar, Fls, If, Lit, Max,
    Mode, Nec, Node, Pid, Release, SyncFls, Tru, Var, VType, conjuncts,
)

LINEAR = (VType.LPID, VType.LPIDB)


# ---------------------------------------------------------------- environments

def ref_key(r):
    """Environment key of a reference: the pid itself, or the variable without annotation."""
    if isinstance(r, Pid):
        return r
    if isinstance(r, Var):
        return Var(r.name)
    if isinstance(r, Lit) and isinstance(r.v, Pid):
        return r.v
    raise TypeError(f"not an actor reference: {r}")


def show_env(g: dict) -> str:
    items = sorted(g.items(), key=lambda kv: str(kv[0]))
    return "{" + ", ".join(f"{k}:{v.value}" for k, v in items) + "}"


class TypeMismatch(Exception):
    def __init__(self, key, have, want):
        self.key, self.have, self.want = key, have, want
        super().__init__(f"{key} is {have.value} but is rebound as {want.value}")


def env_extend(g: dict, g2: dict) -> dict:
    out = dict(g)
    for k, t in g2.items():
        if k in out and out[k] != t:
            raise TypeMismatch(k, out[k], t)
        out[k] = t
    return out


def env_splits(g: dict):
    """Every way of splitting g: unrestricted entries go to both sides, each
    linear entry to exactly one (left-first)."""
    shared = {k: t for k, t in g.items() if t not in LINEAR}
    lin = sorted(((k, t) for k, t in g.items() if t in LINEAR), key=lambda kv: str(kv[0]))
    for sides in itertools.product((0, 1), repeat=len(lin)):
        left, right = dict(shared), dict(shared)
        for (k, t), s in zip(lin, sides):
            (left if s == 0 else right)[k] = t
        yield left, right


def eff(g: dict, q) -> dict:
    q = set(q)
    return {k: (VType.LPID if k in q and t is VType.LPIDB else t) for k, t in g.items()}


# ---------------------------------------------------------------- mutual exclusion

def fps(f: Node) -> list:
    if isinstance(f, Nec):
        return [f.pat]
    if isinstance(f, (And, If)):
        a, b = (f.left, f.right) if isinstance(f, And) else (f.then, f.els)
        return fps(a) + fps(b)
    if isinstance(f, (Max, Clear)):
        return fps(f.body)
    return [ANY_PATTERN]


def _is_rel_tt(f: Node) -> bool:
    return isinstance(f, Tru) or (isinstance(f, Release) and isinstance(f.body, Tru))


def triv_sat(f: Node) -> bool:
    return all(_is_rel_tt(g) for g in conjuncts(f))


def vexcl(f: Node, g: Node) -> Optional[frozenset]:
    """Release set of f if f is exclusive to g, else None."""
    if isinstance(f, And):
        a, b = vexcl(f.left, g), vexcl(f.right, g)
        return None if a is None or b is None else a | b
    if not triv_sat(g):
        if isinstance(f, Nec) and all(mtch(f.pat, p) is None for p in fps(g)):
            return vexcl(Release(f.releases, TT), g)
        if isinstance(f, If):
            a, b = vexcl(f.then, g), vexcl(f.els, g)
            return a if a is not None and a == b else None
        if isinstance(f, (Max, Clear)):
            return vexcl(f.body, g)
    if isinstance(f, Tru):
        return frozenset()
    if isinstance(f, Release) and isinstance(f.body, Tru):
        return frozenset(ref_key(r) for r in f.refs)
    if triv_sat(g):
        return frozenset()
    return None


def excl(f: Node, g: Node):
    a = vexcl(f, g)
    if a is None:
        return None
    b = vexcl(g, f)
    if b is None:
        return None
    return a, b


# ---------------------------------------------------------------- derivations

@dataclass
class Deriv:
    rule: str
    env: str
    formula: str
    children: list = field(default_factory=list)

    def render(self, indent: int = 0, width: int = 100) -> str:
        f = self.formula if len(self.formula) <= width else self.formula[:width - 3] + "..."
        lines = ["  " * indent + f"{self.rule}: {self.env} |- {f}"]
        for c in self.children:
            lines.append(c.render(indent + 1, width))
        return "\n".join(lines)


class Rejection(Exception):
    def __init__(self, rule: str, message: str, ref=None, vtype=None, formula=None):
        self.rule, self.message, self.ref, self.vtype, self.formula = \
            rule, message, ref, vtype, formula
        # set when the failing judgment sits under an environment adjusted by eff
        self.via_side_effects = False
        super().__init__(f"[{rule}] {message}")


@dataclass
class TypeResult:
    ok: bool
    rejection: Optional[Rejection] = None
    derivation: Optional[Deriv] = None

    @property
    def rule(self) -> Optional[str]:
        return None if self.rejection is None else self.rejection.rule


class _Checker:
    def __init__(self):
        self.steps = 0

    # deferred: list of (formula, sigma, gamma, parent Deriv)
    def drain(self, deferred: list):
        while deferred:
            f, sigma, gamma, parent = deferred.pop(0)
            parent.children.append(self.check(f, sigma, gamma, deferred))

    def check(self, f: Node, sigma: dict, gamma: dict, deferred: list) -> Deriv:
        self.steps += 1
        env = show_env(gamma)

        if isinstance(f, Tru):
            return Deriv("tTru", env, "tt")
        if isinstance(f, (Fls, SyncFls)):
            return Deriv("tFls", env, str(f))

        if isinstance(f, Nec):
            rule = "tNcB" if f.mode is Mode.BLOCKING else "tNcA"
            ext = {Var(n): VType(a.value) for n, a in tbnd(f.pat).items()}
            try:
                g2 = env_extend(gamma, ext)
            except TypeMismatch as e:
                raise Rejection(rule, str(e), e.key, e.have, f) from None
            cont = f.body
            if f.mode is Mode.BLOCKING:
                s = subj_ref(f.pat)
                if s is None or isinstance(s, Atom):
                    raise Rejection(rule, f"blocking subject of [{f.pat}] is not an actor reference",
                                    formula=f)
                cont = Block((s,), f.body)
            d = Deriv(rule, env, str(f))
            d.children.append(self.check(cont, sigma, g2, deferred))
            if f.releases:
                deferred.append((Release(f.releases, TT), sigma, gamma, d))
            return d

        if isinstance(f, If):
            return Deriv("tIf", env, str(f), [self.check(f.then, sigma, gamma, deferred),
                                               self.check(f.els, sigma, gamma, deferred)])

        if isinstance(f, (Block, Release)):
            rule, need, give = (("tBlk", VType.LPID, VType.LPIDB) if isinstance(f, Block)
                                else ("tRel", VType.LPIDB, VType.LPID))
            g2 = dict(gamma)
            for r in f.refs:
                k = ref_key(r)
                have = gamma.get(k)
                if have is not need:
                    raise Rejection(rule, f"{k}:{need.value} not in {env}", k, have, f)
                g2[k] = give
            return Deriv(rule, env, str(f), [self.check(f.body, sigma, g2, deferred)])

        if isinstance(f, (AdaptA, AdaptS)):
            rule, need = ("tAdA", VType.LPID) if isinstance(f, AdaptA) else ("tAdS", VType.LPIDB)
            for r in f.adaptees:
                k = ref_key(r)
                have = gamma.get(k)
                if have is not need:
                    raise Rejection(rule, f"{k}:{need.value} not in {env}", k, have, f)
            cont = Release(f.releases, f.body) if f.releases else f.body
            return Deriv(rule, env, str(f), [self.check(cont, sigma, gamma, deferred)])

        if isinstance(f, And):
            e = excl(f.left, f.right)
            if e is not None:
                qa, qb = e
                d = Deriv("tCn2", env, str(f))
                for branch, q in ((f.left, qb), (f.right, qa)):
                    g2 = eff(gamma, q)
                    try:
                        d.children.append(self.check(branch, sigma, g2, deferred))
                    except Rejection as r:
                        r.via_side_effects |= g2 != gamma
                        raise
                return d
            return self.split(f, sigma, gamma, env)

        if isinstance(f, Max):
            s2 = {**sigma, f.var: dict(gamma)}
            return Deriv("tMax", env, str(f), [self.check(f.body, s2, gamma, deferred)])

        if isinstance(f, FVar):
            if f.name not in sigma:
                raise ValueError(f"free recursion variable {f.name}")
            saved = sigma[f.name]
            for k, t in saved.items():
                if gamma.get(k) is not t:
                    raise Rejection("tVar", f"{show_env(saved)} not a subset of {env}",
                                    k, gamma.get(k), f)
            return Deriv("tVar", env, f.name)

        if isinstance(f, Clear):
            return Deriv("tClr", env, str(f), [self.check(f.body, sigma, gamma, deferred)])

        raise TypeError(f"no typing rule for {type(f).__name__}")

    def split(self, f: And, sigma, gamma, env) -> Deriv:
        best = None  # (progress, rejection)
        for g1, g2 in env_splits(gamma):
            start = self.steps
            local: list = []
            try:
                d = Deriv("tCn1", env, str(f))
                d.children.append(self.check(f.left, sigma, g1, local))
                d.children.append(self.check(f.right, sigma, g2, local))
                self.drain(local)
                return d
            except Rejection as r:
                prog = self.steps - start
                if best is None or prog > best[0]:
                    best = (prog, r)
        raise best[1]


def typecheck(f: Node, gamma: dict, sigma: Optional[dict] = None) -> TypeResult:
    """Check f under value environment gamma (keys: Pid or Var)."""
    gamma = {ref_key(k) if not isinstance(k, str) else Pid(k): VType(v) for k, v in gamma.items()}
    if any(t is VType.LPIDB for t in gamma.values()):
        raise ValueError("initial environments may not contain blocked linear ids")
    c = _Checker()
    deferred: list = []
    try:
        d = c.check(f, dict(sigma or {}), gamma, deferred)
        c.drain(deferred)
    except Rejection as r:
        return TypeResult(False, r)
    return TypeResult(True, None, d)
