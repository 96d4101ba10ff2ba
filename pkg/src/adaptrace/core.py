"""Reduction semantics of the core logic, the finite-trace violation oracle,
and the correspondence check between the two."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .matching import apply_subst, eval_bool, match_action, subst_formula_var
from .syntax import (
    FF, TT, AdaptA, AdaptS, And, Block, Clear, FVar, Fls, If, Max, Nec, Node, Release,
    SyncFls, Tru, conjuncts, count_max, map_children,
)


class FuelExhausted(RuntimeError):
    pass


# ---------------------------------------------------------------- verdicts

@dataclass(frozen=True)
class Violated:
    def __str__(self):
        return "violated"


@dataclass(frozen=True)
class TriviallySatisfied:
    def __str__(self):
        return "satisfied"


@dataclass(frozen=True)
class Inconclusive:
    residual: Node

    def __str__(self):
        return f"inconclusive: {self.residual}"


CoreVerdict = object


# ---------------------------------------------------------------- structural equivalence

def _sort_key(f: Node) -> str:
    return str(f)


def struct_eq_normalize(f: Node) -> Node:
    """ff-absorption, tt-unit, then conjuncts sorted canonically; applied everywhere."""
    c = f.__dict__.get("_nf")
    if c is not None:
        return c
    if isinstance(f, And):
        parts = []
        for g in conjuncts(f):
            g = struct_eq_normalize(g)
            if isinstance(g, (Fls, SyncFls)):
                out = FF
                break
            if isinstance(g, Tru):
                continue
            parts.extend(conjuncts(g))
        else:
            if not parts:
                out = TT
            else:
                parts.sort(key=_sort_key)
                out = parts[-1]
                for g in reversed(parts[:-1]):
                    out = And(g, out)
    else:
        out = map_children(f, struct_eq_normalize)
    object.__setattr__(f, "_nf", out)
    object.__setattr__(out, "_nf", out)
    return out


def normalize_top(f: Node) -> Node:
    """Structural equivalence on the active conjunction spine only; guarded
    continuations are left untouched so residuals stay literally comparable."""
    if not isinstance(f, And):
        return FF if isinstance(f, SyncFls) else f
    parts = []
    for g in conjuncts(f):
        if isinstance(g, (Fls, SyncFls)):
            return FF
        if not isinstance(g, Tru):
            parts.append(g)
    if not parts:
        return TT
    parts.sort(key=_sort_key)
    out = parts[-1]
    for g in reversed(parts[:-1]):
        out = And(g, out)
    return out


# ---------------------------------------------------------------- LTS steps

def _unfold(f: Max) -> Node:
    return subst_formula_var(f.body, f.var, f)


def tau_step(f: Node, preds=None) -> Optional[Node]:
    """One silent reduction (leftmost-innermost), or None when none applies."""
    if isinstance(f, Max):
        return _unfold(f)
    if isinstance(f, If):
        return f.then if eval_bool(f.cond, preds) else f.els
    if isinstance(f, And):
        left = tau_step(f.left, preds)
        if left is not None:
            return And(left, f.right)
        right = tau_step(f.right, preds)
        if right is not None:
            return And(f.left, right)
    return None


def tau_fixpoint(f: Node, preds=None, fuel: int = 100000) -> Node:
    """Exhaust silent moves. Unfolds Max and evaluates conditions in every conjunct."""
    while True:
        if isinstance(f, Max):
            fuel -= 1
            if fuel < 0:
                raise FuelExhausted("unguarded recursion")
            f = _unfold(f)
        elif isinstance(f, If):
            f = f.then if eval_bool(f.cond, preds) else f.els
        elif isinstance(f, And):
            left = tau_fixpoint(f.left, preds, fuel)
            right = tau_fixpoint(f.right, preds, fuel)
            if left is f.left and right is f.right:
                return f
            return And(left, right)
        else:
            return f


def alpha_step(f: Node, a, preds=None) -> Node:
    """React to a visible action: match-and-continue, or collapse to tt on mismatch."""
    if isinstance(f, (Tru, Fls)):
        return f
    if isinstance(f, SyncFls):
        return FF
    if isinstance(f, Nec):
        s = match_action(f.pat, a)
        return TT if s is None else apply_subst(f.body, s)
    if isinstance(f, And):
        return And(alpha_step(f.left, a, preds), alpha_step(f.right, a, preds))
    if isinstance(f, (Max, If)):
        return alpha_step(tau_fixpoint(f, preds), a, preds)
    raise TypeError(f"no core transition for {type(f).__name__}")


def _as_core(f: Node) -> Node:
    # sff is ff for the purposes of the core semantics
    return FF if isinstance(f, SyncFls) else f


@dataclass
class CoreRun:
    verdict: object
    residuals: list        # normalized residual after each event (before the trailing taus)


def run_core_trace(f: Node, trace: Sequence, preds=None) -> CoreRun:
    cur = normalize_top(tau_fixpoint(f, preds))
    residuals = []
    last = normalize_top(f)
    for a in trace:
        if isinstance(cur, (Tru, Fls, SyncFls)):
            residuals.append(_as_core(cur))
            last = _as_core(cur)
            continue
        nxt = normalize_top(alpha_step(cur, a, preds))
        residuals.append(nxt)
        last = nxt
        cur = normalize_top(tau_fixpoint(nxt, preds))
    cur = _as_core(cur)
    if isinstance(cur, Fls):
        verdict = Violated()
    elif isinstance(cur, Tru):
        verdict = TriviallySatisfied()
    else:
        verdict = Inconclusive(last)
    return CoreRun(verdict, residuals)


def run_core(f: Node, trace: Sequence, preds=None):
    """Verdict of running f over trace under the reduction semantics."""
    return run_core_trace(f, trace, preds).verdict


# ---------------------------------------------------------------- violation oracle

def violates_oracle(f: Node, trace: Sequence, preds=None) -> bool:
    """Finite-trace violation relation, implemented directly by recursion on f."""
    per_event = 2 * max(1, count_max(f))
    return _viol(f, tuple(trace), 0, per_event, per_event, preds)


def _viol(f, t, i, fuel, per_event, preds) -> bool:
    if isinstance(f, Tru):
        return False
    if isinstance(f, (Fls, SyncFls)):
        return True
    if isinstance(f, And):
        return _viol(f.left, t, i, fuel, per_event, preds) or \
            _viol(f.right, t, i, fuel, per_event, preds)
    if isinstance(f, If):
        branch = f.then if eval_bool(f.cond, preds) else f.els
        return _viol(branch, t, i, fuel, per_event, preds)
    if isinstance(f, Nec):
        if i >= len(t):
            return False
        s = match_action(f.pat, t[i])
        if s is None:
            return False
        return _viol(apply_subst(f.body, s), t, i + 1, per_event, per_event, preds)
    if isinstance(f, Max):
        if fuel <= 0:
            raise FuelExhausted(f"more than {per_event} unfoldings without consuming an event")
        return _viol(_unfold(f), t, i, fuel - 1, per_event, preds)
    if isinstance(f, FVar):
        raise ValueError(f"free recursion variable {f.name}")
    raise TypeError(f"violation semantics undefined for {type(f).__name__}")


# ---------------------------------------------------------------- correspondence

class Mismatch(AssertionError):
    def __init__(self, formula, trace, oracle, lts):
        self.formula, self.trace, self.oracle, self.lts = formula, trace, oracle, lts
        super().__init__(f"oracle={oracle} lts={lts} on {formula} / {[str(a) for a in trace]}")


def correspondence_check(f: Node, trace: Sequence, preds=None) -> bool:
    o = violates_oracle(f, trace, preds)
    v = run_core(f, trace, preds)
    lts = isinstance(v, Violated)
    if o != lts:
        raise Mismatch(f, trace, o, v)
    return True


def strip_adaptations(f: Node) -> Node:
    """Erase adaptation syntax: adaptations/blocks/releases/clears disappear,
    necessities become core ones, sff becomes ff."""
    if isinstance(f, (AdaptA, AdaptS, Block, Release, Clear)):
        return strip_adaptations(f.body)
    if isinstance(f, Nec):
        from .syntax import Mode
        return Nec(Mode.CORE, f.pat, (), strip_adaptations(f.body))
    if isinstance(f, SyncFls):
        return FF
    return map_children(f, strip_adaptations)
