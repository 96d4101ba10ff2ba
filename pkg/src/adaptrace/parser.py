"""Recursive-descent parser for adaptation scripts and trace files.

Lexical conventions (the logic itself gives none):

* header lines ``pids: i, j``, ``types: i:lpid, j:upid``, ``vars: hId, path`` and
  ``atoms: x`` may precede the formula; names under ``types`` are pids too;
* an identifier in a binding position of a necessity pattern is a new term
  variable when it is annotated, listed under ``vars``, or looks like a
  variable (one letter plus optional digits/primes); otherwise it is an atom,
  except in subject/target positions where it denotes a pid;
* identifiers already bound by an enclosing pattern are variable uses;
* quoted text (``'GET'``, ``"/pic.png"``) is always an atom.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from .syntax import (
    ASYNC_KINDS, CALL, RECV, RET, SEND, SYNC_KINDS, WILD, AdaptA, AdaptS, And, Arith,
    Atom, BAnd, BConst, BNot, BOr, Cmp, FF, FVar, If, Int, Lit, Max, Mode, Nec, Pattern,
    Pid, PList, Pred, PTuple, SFF, Script, TT, TypeAnnot, Var, VList, VTuple, VType,
)


class ParseError(Exception):
    def __init__(self, msg: str, line: int = 0, col: int = 0, expected=()):
        self.msg, self.line, self.col, self.expected = msg, line, col, tuple(expected)
        where = f"{line}:{col}: " if line else ""
        exp = f" (expected one of: {', '.join(self.expected)})" if self.expected else ""
        super().__init__(f"{where}{msg}{exp}")


class RuntimeConstructError(ParseError):
    """Raised for block/release/clr, which exist only in the runtime syntax."""


@dataclass
class Tok:
    kind: str   # ident, int, str, sym, eof
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>[%\#][^\n]*)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<str>'(?:\\.|[^'\\])*'|"(?:\\.|[^"\\])*")
  | (?P<sym>\[\||\|\]|==|!=|/=|=<|<=|>=|[\[\]{}(),.!?&:=<>+\-;|])
  | (?P<eps>ε)
""", re.VERBOSE)

_VARLIKE = re.compile(r"^[a-z][0-9']*$")
RUNTIME_ONLY = ("block", "release", "clr")
_FORMULA_WORDS = {"tt", "ff", "sff", "max", "if"} | set(RUNTIME_ONLY)


def tokenize(src: str, line0: int = 1) -> list:
    toks = []
    pos, line, lstart = 0, line0, 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if not m:
            raise ParseError(f"unexpected character {src[pos]!r}", line, pos - lstart + 1)
        kind = m.lastgroup
        text = m.group()
        if kind not in ("ws", "comment"):
            if kind == "eps":
                kind = "ident"
            toks.append(Tok(kind, text, line, pos - lstart + 1))
        nl = text.count("\n")
        if nl:
            line += nl
            lstart = pos + text.rfind("\n") + 1
        pos = m.end()
    toks.append(Tok("eof", "", line, pos - lstart + 1))
    return toks


def _unquote(s: str) -> str:
    body = s[1:-1]
    return re.sub(r"\\(.)", r"\1", body)


class _Parser:
    def __init__(self, toks, pids=(), var_names=(), atom_names=()):
        self.toks = toks
        self.i = 0
        self.pids = set(pids)
        self.var_names = set(var_names)
        self.atom_names = set(atom_names)
        self.bound: list = []          # stack of sets of bound term variables
        self.closed = False            # trace mode: no binders, var-like names are pids
        self._cur: list = []

    # -- token helpers
    @property
    def tok(self) -> Tok:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("sym", "ident") and t.text == text

    def advance(self) -> Tok:
        t = self.tok
        self.i += 1
        return t

    def expect(self, text: str) -> Tok:
        if not self.at(text):
            self.fail(f"unexpected {self.tok.text or 'end of input'!r}", [text])
        return self.advance()

    def fail(self, msg, expected=()):
        t = self.tok
        raise ParseError(msg, t.line, t.col, expected)

    def is_bound(self, name: str) -> bool:
        return any(name in s for s in self.bound)

    # -- formulas
    def formula(self):
        f = self.unary()
        while self.at("&"):
            self.advance()
            f = And(f, self.unary())
        return f

    def unary(self):
        t = self.tok
        if t.kind == "ident":
            if t.text == "tt":
                self.advance()
                return TT
            if t.text == "ff":
                self.advance()
                return FF
            if t.text == "sff":
                self.advance()
                return SFF
            if t.text == "max":
                self.advance()
                v = self.advance()
                if v.kind != "ident" or not v.text[0].isupper():
                    raise ParseError("recursion variable must be capitalised", v.line, v.col)
                self.expect(".")
                return Max(v.text, self.unary())
            if t.text == "if":
                self.advance()
                c = self.bexpr()
                self.expect("then")
                a = self.unary()
                b = TT
                if self.at("else"):
                    self.advance()
                    b = self.unary()
                return If(c, a, b)
            if t.text in RUNTIME_ONLY:
                raise RuntimeConstructError(
                    f"'{t.text}' is a runtime-only construct and cannot appear in scripts",
                    t.line, t.col)
            if t.text in SYNC_KINDS or t.text in ASYNC_KINDS:
                return self.adaptation()
            if t.text[0].isupper():
                self.advance()
                return FVar(t.text)
            self.fail(f"unexpected identifier {t.text!r}",
                      ["tt", "ff", "sff", "max", "if", "[", "(", "adaptation"])
        if self.at("("):
            self.advance()
            f = self.formula()
            self.expect(")")
            return f
        if self.at("[|"):
            self.advance()
            pat = self.pattern()
            self.expect("|]")
            rl = self.reflist() if self._rl_ahead() else ()
            return self._nec_body(Mode.BLOCKING, pat, rl)
        if self.at("["):
            self.advance()
            pat = self.pattern()
            self.expect("]")
            mode, rl = Mode.CORE, ()
            if self.tok.kind == "ident" and self.tok.text == "a" and self.peek().text == ",":
                self.advance()
                self.advance()
                mode, rl = Mode.ASYNC, self.reflist()
            return self._nec_body(mode, pat, rl)
        self.fail(f"unexpected {t.text or 'end of input'!r}",
                  ["tt", "ff", "sff", "max", "if", "[", "[|", "(", "X"])

    def _rl_ahead(self) -> bool:
        t = self.tok
        if self.at("{") or self.at("ε") or self.at("eps"):
            return True
        return (t.kind == "ident" and t.text[0].islower() and t.text not in _FORMULA_WORDS
                and t.text not in SYNC_KINDS and t.text not in ASYNC_KINDS)

    def _nec_body(self, mode, pat, rl):
        self.bound.append(set(pat.binds))
        try:
            body = self.unary()
        finally:
            self.bound.pop()
        return Nec(mode, pat, rl, body)

    def adaptation(self):
        kind = self.advance().text
        self.expect("(")
        al = self.refs_until(")")
        self.expect(")")
        rl = ()
        if self.at("_"):
            self.advance()
            rl = self.reflist()
        body = self.unary()
        if kind in SYNC_KINDS:
            return AdaptS(kind, al, rl, body)
        return AdaptA(al, rl, body, kind)

    def reflist(self) -> tuple:
        if self.at("ε") or self.at("eps"):
            self.advance()
            return ()
        if self.at("{"):
            self.advance()
            out = self.refs_until("}")
            self.expect("}")
            return out
        if self.tok.kind == "ident" and not self.tok.text[0].isupper():
            return (self.ref(),)
        self.fail("expected a reference list", ["{", "ε"])

    def refs_until(self, close: str) -> tuple:
        out = []
        while not self.at(close):
            out.append(self.ref())
            if self.at(",") or self.at(";"):
                self.advance()
            elif not self.at(close):
                self.fail("malformed reference list", [",", close])
        return tuple(out)

    def ref(self):
        t = self.advance()
        if t.kind != "ident" or t.text == "_":
            raise ParseError(f"bad reference {t.text!r}", t.line, t.col)
        if self.is_bound(t.text):
            return Var(t.text)
        self.pids.add(t.text)
        return Pid(t.text)

    # -- patterns
    def pattern(self) -> Pattern:
        self._cur = []   # binders introduced by this pattern, in order
        if self.tok.kind == "ident" and self.tok.text in ("call", "ret"):
            kind = CALL if self.advance().text == "call" else RET
            s = self.term(role="subject")
            p = self.term()
            return Pattern(kind, s, p, None, frozenset(self._cur))
        if self.at("_") and self.peek().text in ("]", "|]"):
            self.fail("the whole-action wildcard is internal only")
        s = self.primary(role="subject")
        if self.at("!"):
            self.advance()
            tgt = self.primary(role="subject")
            self.expect(".")
            p = self.term()
            return Pattern(SEND, s, p, tgt, frozenset(self._cur))
        if self.at("?"):
            self.advance()
            p = self.term()
            return Pattern(RECV, s, p, None, frozenset(self._cur))
        self.fail("malformed action pattern", ["!", "?"])

    def term(self, role: str = "payload", binding: bool = True):
        t = self.primary(role, binding)
        while self.at("+") or self.at("-"):
            op = self.advance().text
            t = Arith(op, t, self.primary(role, binding))
        return t

    def primary(self, role: str = "payload", binding: bool = True):
        t = self.tok
        if t.kind == "int":
            self.advance()
            return Lit(Int(int(t.text)))
        if self.at("-") and self.peek().kind == "int":
            self.advance()
            return Lit(Int(-int(self.advance().text)))
        if t.kind == "str":
            self.advance()
            return Lit(Atom(_unquote(t.text)))
        if self.at("{"):
            self.advance()
            items = self._items("}", role, binding)
            return PTuple(items)
        if self.at("["):
            self.advance()
            items = self._items("]", role, binding)
            return PList(items)
        if t.kind == "ident":
            self.advance()
            name = t.text
            if name == "_":
                return WILD
            if self.closed:
                if name in self.pids or _VARLIKE.match(name) or role == "subject":
                    return Lit(Pid(name))
                return Lit(Atom(name))
            if self.at(":") and self.peek().kind == "ident" and self.peek().text in ("dat", "upid", "lpid"):
                if not binding:
                    raise ParseError("type annotations only allowed in patterns", t.line, t.col)
                self.advance()
                ann = TypeAnnot(self.advance().text)
                if name in self.pids or self.is_bound(name) or name in self._cur:
                    raise ParseError(f"{name!r} cannot be rebound here", t.line, t.col)
                self._cur.append(name)
                return Var(name, ann)
            if self.is_bound(name) or (binding and name in self._cur):
                return Var(name)
            if name in self.pids:
                return Lit(Pid(name))
            if binding and name not in self.atom_names and (
                    name in self.var_names or _VARLIKE.match(name)):
                self._cur.append(name)
                return Var(name)
            if role == "subject":
                self.pids.add(name)
                return Lit(Pid(name))
            return Lit(Atom(name))
        self.fail(f"unexpected {t.text or 'end of input'!r} in pattern", ["term"])

    def _items(self, close, role, binding):
        items = []
        while not self.at(close):
            items.append(self.term("payload", binding))
            if self.at(","):
                self.advance()
            elif not self.at(close):
                self.fail("malformed sequence", [",", close])
        self.expect(close)
        return tuple(items)

    # -- boolean expressions
    def bexpr(self):
        b = self.band()
        while self.at("or") or self.at("orelse"):
            self.advance()
            b = BOr(b, self.band())
        return b

    def band(self):
        b = self.bnot()
        while self.at("and") or self.at("andalso"):
            self.advance()
            b = BAnd(b, self.bnot())
        return b

    def bnot(self):
        if self.at("not"):
            self.advance()
            return BNot(self.bnot())
        return self.batom()

    def batom(self):
        if self.at("true"):
            self.advance()
            return BConst(True)
        if self.at("false"):
            self.advance()
            return BConst(False)
        if self.at("("):
            self.advance()
            b = self.bexpr()
            self.expect(")")
            return b
        t = self.tok
        if t.kind == "ident" and self.peek().text == "(" and not self.is_bound(t.text):
            self.advance()
            self.advance()
            self._cur = []
            args = []
            while not self.at(")"):
                args.append(self.term(binding=False))
                if self.at(","):
                    self.advance()
            self.expect(")")
            return Pred(t.text, tuple(args))
        self._cur = []
        left = self.term(binding=False)
        ops = {"=": "=", "==": "=", "!=": "!=", "/=": "!=", "<": "<", ">": ">",
               "<=": "<=", "=<": "<=", ">=": ">="}
        if self.tok.text not in ops:
            self.fail("expected a comparison", list(ops))
        op = ops[self.advance().text]
        right = self.term(binding=False)
        return Cmp(op, left, right)


# ---------------------------------------------------------------- entry points

_HEADER_RE = re.compile(r"^\s*(pids|types|vars|atoms)\s*:(.*)$")


def _split_header(source: str):
    header = {"pids": [], "types": {}, "vars": [], "atoms": []}
    lines = source.split("\n")
    n = 0
    for idx, ln in enumerate(lines):
        stripped = ln.strip()
        if not stripped or stripped[0] in "%#":
            n = idx + 1
            continue
        m = _HEADER_RE.match(ln)
        if not m:
            break
        key, rest = m.group(1), m.group(2)
        items = [x.strip() for x in re.split(r"[,;]", rest) if x.strip()]
        if key == "types":
            for it in items:
                if ":" not in it:
                    raise ParseError(f"malformed type declaration {it!r}", idx + 1, 1)
                name, ty = (x.strip() for x in it.split(":", 1))
                if ty not in ("dat", "upid", "lpid"):
                    raise ParseError(f"unknown type {ty!r} (lpidb is internal)", idx + 1, 1)
                header["types"][name] = VType(ty)
        else:
            header[key].extend(items)
        n = idx + 1
    body = "\n".join(lines[n:])
    return header, body, n


def load_script(source: str, pids=()) -> Script:
    """Parse a script with its header into a :class:`Script`."""
    header, body, skipped = _split_header(source)
    declared = list(dict.fromkeys(list(pids) + header["pids"] + list(header["types"])))
    p = _Parser(tokenize(body, line0=skipped + 1), declared, header["vars"], header["atoms"])
    if p.tok.kind == "eof":
        p.fail("empty script", ["formula"])
    f = p.formula()
    if p.tok.kind != "eof":
        p.fail(f"trailing input {p.tok.text!r}", ["&", "end of input"])
    types = {Pid(k): v for k, v in header["types"].items()}
    allp = tuple(sorted(p.pids))
    return Script(f, allp, types, source)


def parse_script(source: str, pids=()):
    """Parse script text and return the formula (header lines are honoured)."""
    return load_script(source, pids).formula


def parse_pattern(text: str, pids=(), bound=()) -> Pattern:
    p = _Parser(tokenize(text), pids)
    p.bound.append(set(bound))
    pat = p.pattern()
    if p.tok.kind != "eof":
        p.fail("trailing input in pattern")
    return pat


# ---------------------------------------------------------------- traces

def _value_of(term):
    if isinstance(term, Lit):
        return term.v
    if isinstance(term, PTuple):
        return VTuple(tuple(_value_of(x) for x in term.items))
    if isinstance(term, PList):
        return VList(tuple(_value_of(x) for x in term.items))
    raise ParseError(f"trace events must be closed, found {term!r}")


def _closed(term):
    return Lit(_value_of(term)) if isinstance(term, (PTuple, PList)) else term


def _trace_lines(text: str):
    header_pids = []
    out = []
    for no, ln in enumerate(text.split("\n"), 1):
        s = ln.split("%")[0].split("#")[0].strip()
        if not s:
            continue
        if s.startswith("pids:"):
            header_pids += [x.strip() for x in s[5:].split(",") if x.strip()]
            continue
        out.append((no, s))
    return header_pids, out


def parse_trace(text: str, pids=()) -> list:
    """Parse a trace file: one event per line (``send i j {..}``, ``recv i {..}``,
    ``call i {..}``, ``ret i {..}``), or the pattern notation ``i ! j . v``/``i ? v``.
    Events may also be separated by ``;`` on one line."""
    header_pids, lines = _trace_lines(text)
    events = []
    for no, s in lines:
        for part in s.split(";"):
            part = part.strip()
            if part:
                events.append((no, part))
    known = set(pids) | set(header_pids)
    # first pass: subjects and targets are pids
    for no, ev in events:
        w = ev.split()
        if w[0] in ("send",) and len(w) >= 3:
            known.update([w[1], w[2]])
        elif w[0] in ("recv", "call", "ret") and len(w) >= 2:
            known.add(w[1])
        else:
            m = re.match(r"^\s*([A-Za-z_][\w']*)\s*([!?])\s*([A-Za-z_][\w']*)?", ev)
            if m:
                known.add(m.group(1))
                if m.group(2) == "!" and m.group(3):
                    known.add(m.group(3))
    out = []
    for no, ev in events:
        w = ev.split(None, 1)
        head = w[0]
        if head in ("send", "recv", "call", "ret"):
            p = _Parser(tokenize(w[1] if len(w) > 1 else "", line0=no), known)
            p.closed = True
            s = p.primary(role="subject", binding=False)
            tgt = p.primary(role="subject", binding=False) if head == "send" else None
            pl = p.term(binding=False)
            if p.tok.kind != "eof":
                p.fail("trailing input in event")
            kind = {"send": SEND, "recv": RECV, "call": CALL, "ret": RET}[head]
            pat = Pattern(kind, s, _closed(pl), tgt)
        else:
            p = _Parser(tokenize(ev, line0=no), known)
            p.closed = True
            pat = p.pattern()
            if pat.binds:
                raise ParseError(f"trace event contains variables: {ev!r}", no, 1)
            pat = Pattern(pat.kind, pat.subject, _closed(pat.payload),
                          pat.target, frozenset(), frozenset())
        if not isinstance(pat.subject, Lit) or not isinstance(pat.subject.v, Pid):
            raise ParseError(f"event subject must be a pid: {ev!r}", no, 1)
        out.append(pat)
    return out


def parse_event(text: str, pids=()) -> Pattern:
    evs = parse_trace(text, pids)
    if len(evs) != 1:
        raise ParseError(f"expected exactly one event in {text!r}")
    return evs[0]
