"""First-order arithmetic syntax, numeric coding, and syntactic fixed points.

The language has binary numerals (Zero / D0 / D1), unary successor, plus,
times, a designated self-substitution function symbol `diag`, equality, an
uninterpreted provability predicate `Prov`, the usual connectives and
quantifiers.

Coding is a bijective base-B positional reading of a canonical prefix
(Polish) serialization, B = 54: digits 1..17 are the structural symbols, the
rest spell variable names.  String-style coding keeps code magnitude linear
in formula length, which is what makes diagonal sentences materializable.

`diagonalize(theta)` runs the standard fixed-point construction:

    beta(x) = theta[x := diag(x)],   b = code(beta),   psi = beta[x := numeral(b)]

and certifies, by independently evaluating the self-substitution function on
b, that delta(b) equals code(psi): the machine-checkable content of
"psi holds iff theta holds of psi's own code".
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import DecodeError, InputError, ParseError

TERM_ARITY = {
    "zero": 0,
    "d0": 1,
    "d1": 1,
    "var": 0,
    "succ": 1,
    "plus": 2,
    "times": 2,
    "diag": 1,
}
FORMULA_TERM_ARITY = {"eq": 2, "prov": 1}
FORMULA_SUB_ARITY = {"not": 1, "and": 2, "or": 2, "implies": 2}
QUANTIFIERS = ("forall", "exists")

_NAME_RE = re.compile(r"^[a-z_][a-z0-9_]*$")


@dataclass(frozen=True)
class Term:
    op: str
    args: tuple["Term", ...] = ()
    name: str = ""

    def __post_init__(self):
        if self.op not in TERM_ARITY:
            raise InputError(f"unknown term op {self.op!r}")
        if len(self.args) != TERM_ARITY[self.op]:
            raise InputError(f"term {self.op} takes {TERM_ARITY[self.op]} arguments")
        if self.op == "var":
            if not _NAME_RE.match(self.name):
                raise InputError(f"bad variable name {self.name!r}")
        elif self.name:
            raise InputError(f"term {self.op} carries no name")


@dataclass(frozen=True)
class Formula:
    op: str
    terms: tuple[Term, ...] = ()
    subs: tuple["Formula", ...] = ()
    var: str = ""

    def __post_init__(self):
        if self.op in FORMULA_TERM_ARITY:
            if len(self.terms) != FORMULA_TERM_ARITY[self.op] or self.subs or self.var:
                raise InputError(f"malformed {self.op} formula")
        elif self.op in FORMULA_SUB_ARITY:
            if len(self.subs) != FORMULA_SUB_ARITY[self.op] or self.terms or self.var:
                raise InputError(f"malformed {self.op} formula")
        elif self.op in QUANTIFIERS:
            if len(self.subs) != 1 or self.terms or not _NAME_RE.match(self.var):
                raise InputError(f"malformed {self.op} formula")
        else:
            raise InputError(f"unknown formula op {self.op!r}")


Zero = Term("zero")


def D0(t: Term) -> Term:
    return Term("d0", (t,))


def D1(t: Term) -> Term:
    return Term("d1", (t,))


def Var(name: str) -> Term:
    return Term("var", (), name)


def Succ(t: Term) -> Term:
    return Term("succ", (t,))


def Plus(a: Term, b: Term) -> Term:
    return Term("plus", (a, b))


def Times(a: Term, b: Term) -> Term:
    return Term("times", (a, b))


def Diag(t: Term) -> Term:
    return Term("diag", (t,))


def Eq(a: Term, b: Term) -> Formula:
    return Formula("eq", (a, b))


def Prov(t: Term) -> Formula:
    return Formula("prov", (t,))


def Not(f: Formula) -> Formula:
    return Formula("not", (), (f,))


def And(a: Formula, b: Formula) -> Formula:
    return Formula("and", (), (a, b))


def Or(a: Formula, b: Formula) -> Formula:
    return Formula("or", (), (a, b))


def Implies(a: Formula, b: Formula) -> Formula:
    return Formula("implies", (), (a, b))


def ForAll(var: str, f: Formula) -> Formula:
    return Formula("forall", (), (f,), var)


def Exists(var: str, f: Formula) -> Formula:
    return Formula("exists", (), (f,), var)


# Coding alphabet: digit values 1..BASE (bijective numeration has no zero digit,
# so leading symbols are never lost).

_SYMBOL_DIGITS = {
    "zero": 1,
    "d0": 2,
    "d1": 3,
    "var": 4,
    "succ": 5,
    "plus": 6,
    "times": 7,
    "diag": 8,
    "eq": 9,
    "prov": 10,
    "not": 11,
    "and": 12,
    "or": 13,
    "implies": 14,
    "forall": 15,
    "exists": 16,
}
_END_NAME = 17
_NAME_CHARS = "abcdefghijklmnopqrstuvwxyz0123456789_"
_CHAR_DIGITS = {ch: 18 + i for i, ch in enumerate(_NAME_CHARS)}
_DIGIT_CHARS = {d: ch for ch, d in _CHAR_DIGITS.items()}
BASE = 17 + len(_NAME_CHARS)  # 54
_DIGIT_SYMBOLS = {d: s for s, d in _SYMBOL_DIGITS.items()}


def symbol_stream(node: Term | Formula) -> list[int]:
    """Canonical prefix serialization as digit values 1..BASE (iterative)."""
    out: list[int] = []
    stack: list = [node]
    while stack:
        x = stack.pop()
        if isinstance(x, int):
            out.append(x)
            continue
        if isinstance(x, Term):
            out.append(_SYMBOL_DIGITS[x.op])
            if x.op == "var":
                out.extend(_CHAR_DIGITS[ch] for ch in x.name)
                out.append(_END_NAME)
            else:
                stack.extend(reversed(x.args))
        else:
            out.append(_SYMBOL_DIGITS[x.op])
            if x.op in QUANTIFIERS:
                out.extend(_CHAR_DIGITS[ch] for ch in x.var)
                out.append(_END_NAME)
                stack.append(x.subs[0])
            elif x.op in FORMULA_SUB_ARITY:
                stack.extend(reversed(x.subs))
            else:
                stack.extend(reversed(x.terms))
    return out


def code(node: Term | Formula) -> int:
    """Goedel code: bijective base-BASE reading of the prefix serialization."""
    value = 0
    for d in symbol_stream(node):
        value = value * BASE + d
    return value


def _digits_of(value: int) -> list[int]:
    if value <= 0:
        raise DecodeError(f"codes are positive, got {value}")
    digits = []
    n = value
    while n > 0:
        d = n % BASE
        if d == 0:
            d = BASE
        digits.append(d)
        n = (n - d) // BASE
    digits.reverse()
    return digits


def decode(value: int) -> Term | Formula:
    """Inverse of `code`; raises DecodeError on anything `code` cannot emit."""
    digits = _digits_of(value)
    pos = 0
    total = len(digits)

    def read_name() -> str:
        nonlocal pos
        chars = []
        while True:
            if pos >= total:
                raise DecodeError("truncated variable name", offset=pos)
            d = digits[pos]
            pos += 1
            if d == _END_NAME:
                break
            ch = _DIGIT_CHARS.get(d)
            if ch is None:
                raise DecodeError(f"digit {d} is not a name character", offset=pos - 1)
            chars.append(ch)
        name = "".join(chars)
        if not _NAME_RE.match(name):
            raise DecodeError(f"invalid variable name {name!r}", offset=pos)
        return name

    # pending frames: [constructor(args...), arity, children]
    pending: list[list] = []

    def finish(value_node):
        while pending:
            frame = pending[-1]
            frame[2].append(value_node)
            if len(frame[2]) < frame[1]:
                return None
            pending.pop()
            value_node = frame[0](frame[2])
        return value_node

    while True:
        if pos >= total:
            raise DecodeError("truncated serialization", offset=pos)
        d = digits[pos]
        pos += 1
        sym = _DIGIT_SYMBOLS.get(d)
        if sym is None:
            raise DecodeError(f"digit {d} cannot start a node", offset=pos - 1)
        node = None
        if sym == "zero":
            node = Zero
        elif sym == "var":
            node = Var(read_name())
        elif sym in TERM_ARITY:
            arity = TERM_ARITY[sym]

            def build_term(ch, s=sym):
                for c in ch:
                    if not isinstance(c, Term):
                        raise DecodeError(f"{s} needs term arguments")
                return Term(s, tuple(ch))

            pending.append([build_term, arity, []])
        elif sym in FORMULA_TERM_ARITY:
            arity = FORMULA_TERM_ARITY[sym]

            def build_atom(ch, s=sym):
                for c in ch:
                    if not isinstance(c, Term):
                        raise DecodeError(f"{s} needs term arguments")
                return Formula(s, tuple(ch))

            pending.append([build_atom, arity, []])
        elif sym in FORMULA_SUB_ARITY:
            arity = FORMULA_SUB_ARITY[sym]

            def build_conn(ch, s=sym):
                for c in ch:
                    if not isinstance(c, Formula):
                        raise DecodeError(f"{s} needs formula arguments")
                return Formula(s, (), tuple(ch))

            pending.append([build_conn, arity, []])
        else:  # quantifier
            name = read_name()

            def build_quant(ch, s=sym, v=name):
                if not isinstance(ch[0], Formula):
                    raise DecodeError(f"{s} needs a formula body")
                return Formula(s, (), tuple(ch), v)

            pending.append([build_quant, 1, []])
        if node is not None:
            done = finish(node)
            if done is not None:
                if pos != total:
                    raise DecodeError("trailing symbols after serialization", offset=pos)
                return done


def numeral(n: int) -> Term:
    """Binary numeral of size O(log n); denotation(numeral(n)) == n."""
    if n < 0:
        raise InputError("numerals are nonnegative")
    if n == 0:
        return Zero
    t = Zero
    for i in range(n.bit_length() - 1, -1, -1):
        t = D1(t) if (n >> i) & 1 else D0(t)
    return t


def denotation(term: Term) -> int:
    """Standard-model value of a closed term (diag evaluates self_subst)."""
    stack: list[tuple[Term, bool]] = [(term, False)]
    values: list[int] = []
    while stack:
        node, visited = stack.pop()
        if not visited:
            if node.op == "var":
                raise InputError(f"denotation of open term (variable {node.name})")
            stack.append((node, True))
            for child in reversed(node.args):
                stack.append((child, False))
            continue
        arity = TERM_ARITY[node.op]
        args = values[len(values) - arity :]
        del values[len(values) - arity :]
        if node.op == "zero":
            values.append(0)
        elif node.op == "d0":
            values.append(2 * args[0])
        elif node.op == "d1":
            values.append(2 * args[0] + 1)
        elif node.op == "succ":
            values.append(args[0] + 1)
        elif node.op == "plus":
            values.append(args[0] + args[1])
        elif node.op == "times":
            values.append(args[0] * args[1])
        else:  # diag
            values.append(self_subst(args[0]))
    return values[0]


def _term_free_vars(term: Term) -> set[str]:
    out: set[str] = set()
    stack = [term]
    while stack:
        t = stack.pop()
        if t.op == "var":
            out.add(t.name)
        else:
            stack.extend(t.args)
    return out


def free_vars(f: Formula) -> set[str]:
    if f.op in FORMULA_TERM_ARITY:
        out: set[str] = set()
        for t in f.terms:
            out |= _term_free_vars(t)
        return out
    if f.op in FORMULA_SUB_ARITY:
        out = set()
        for s in f.subs:
            out |= free_vars(s)
        return out
    inner = free_vars(f.subs[0])
    inner.discard(f.var)
    return inner


def _subst_term(term: Term, name: str, replacement: Term) -> Term:
    if term.op == "var":
        return replacement if term.name == name else term
    if not term.args:
        return term
    return Term(term.op, tuple(_subst_term(a, name, replacement) for a in term.args))


def subst(f: Formula, name: str, replacement: Term) -> Formula:
    """Replace free occurrences of `name` by a term (closed terms cannot be captured)."""
    if f.op in FORMULA_TERM_ARITY:
        return Formula(f.op, tuple(_subst_term(t, name, replacement) for t in f.terms))
    if f.op in FORMULA_SUB_ARITY:
        return Formula(f.op, (), tuple(subst(s, name, replacement) for s in f.subs))
    if f.var == name:
        return f  # bound here; no free occurrences below
    return Formula(f.op, (), (subst(f.subs[0], name, replacement),), f.var)


def self_subst(n: int) -> int:
    """The diagonal function: code of decode(n) with its free variable set to numeral(n)."""
    try:
        obj = decode(n)
    except DecodeError as exc:
        raise InputError(f"{n} is not a formula code: {exc}") from exc
    if not isinstance(obj, Formula):
        raise InputError(f"{n} codes a term, not a formula")
    fv = free_vars(obj)
    if len(fv) != 1:
        raise InputError(
            f"self-substitution needs exactly one free variable, found {sorted(fv)}"
        )
    (name,) = fv
    return code(subst(obj, name, numeral(n)))


@dataclass(frozen=True)
class DiagonalCertificate:
    """Machine-checkable record of one fixed-point construction."""

    theta: Formula
    beta: Formula
    beta_code: int
    psi: Formula
    psi_code: int
    delta_of_beta_code: int

    @property
    def ok(self) -> bool:
        return self.psi_code == self.delta_of_beta_code


def diagonalize(theta: Formula) -> tuple[Formula, DiagonalCertificate]:
    """Fixed point of theta: psi with delta(code(beta)) == code(psi).

    psi is theta applied to diag(numeral(b)), a term whose standard-model
    value is exactly psi's own code; the certificate carries the independent
    evaluation that confirms it.
    """
    fv = free_vars(theta)
    if len(fv) != 1:
        raise InputError(
            f"diagonalize needs exactly one free variable, found {sorted(fv)}"
        )
    (x,) = fv
    beta = subst(theta, x, Diag(Var(x)))
    b = code(beta)
    psi = subst(beta, x, numeral(b))
    cert = DiagonalCertificate(
        theta=theta,
        beta=beta,
        beta_code=b,
        psi=psi,
        psi_code=code(psi),
        delta_of_beta_code=self_subst(b),
    )
    return psi, cert


def matryoshka_family(n_max: int) -> list[tuple[int, Formula, DiagonalCertificate]]:
    """The nested sentence family phi_n from theta_n(x) = ~Prov(x + numeral(n)).

    The in-language addition offset forces pairwise distinct codes; each
    member carries its own passing diagonal certificate.
    """
    if n_max < 1:
        raise InputError("n_max must be at least 1")
    family = []
    for n in range(n_max):
        theta = Not(Prov(Plus(Var("x"), numeral(n))))
        psi, cert = diagonalize(theta)
        family.append((n, psi, cert))
    return family


def format_diagonal_certificate(cert: DiagonalCertificate) -> str:
    lines = [
        "diagonal certificate",
        f"theta: {format_formula(cert.theta)}",
        f"beta: {format_formula(cert.beta)}",
        f"beta-code: {cert.beta_code}",
        f"psi: {format_formula(cert.psi)}",
        f"psi-code: {cert.psi_code}",
        f"delta-of-beta-code: {cert.delta_of_beta_code}",
        f"status: {'pass' if cert.ok else 'fail'}",
    ]
    return "\n".join(lines) + "\n"


# Text form.  Grammar (terms bind through explicit parentheses only):
#   term    := "0" | name | "d0(" term ")" | "d1(" term ")" | "S(" term ")"
#            | "diag(" term ")" | "(" term "+" term ")" | "(" term "*" term ")"
#   formula := "~" formula | "forall" name "." formula | "exists" name "." formula
#            | "Prov(" term ")" | "(" term "=" term ")"
#            | "(" formula ("&" | "|" | "->") formula ")"

_UNARY_TERMS = {"d0": D0, "d1": D1, "S": Succ, "diag": Diag}
_TERM_BIN = {"+": Plus, "*": Times}
_FORMULA_BIN = {"&": And, "|": Or, "->": Implies}
_OP_TEXT = {"plus": "+", "times": "*", "and": "&", "or": "|", "implies": "->"}


def format_term(term: Term) -> str:
    parts: list[str] = []
    stack: list = [term]
    while stack:
        x = stack.pop()
        if isinstance(x, str):
            parts.append(x)
            continue
        if x.op == "zero":
            parts.append("0")
        elif x.op == "var":
            parts.append(x.name)
        elif x.op in ("d0", "d1", "succ", "diag"):
            tag = {"d0": "d0", "d1": "d1", "succ": "S", "diag": "diag"}[x.op]
            stack.append(")")
            stack.append(x.args[0])
            stack.append(tag + "(")
        else:
            stack.append(")")
            stack.append(x.args[1])
            stack.append(f" {_OP_TEXT[x.op]} ")
            stack.append(x.args[0])
            stack.append("(")
    return "".join(parts)


def format_formula(f: Formula) -> str:
    parts: list[str] = []
    stack: list = [f]
    while stack:
        x = stack.pop()
        if isinstance(x, str):
            parts.append(x)
            continue
        if isinstance(x, Term):
            parts.append(format_term(x))
            continue
        if x.op == "eq":
            parts.append(f"({format_term(x.terms[0])} = {format_term(x.terms[1])})")
        elif x.op == "prov":
            parts.append(f"Prov({format_term(x.terms[0])})")
        elif x.op == "not":
            stack.append(x.subs[0])
            parts.append("~")
        elif x.op in ("and", "or", "implies"):
            stack.append(")")
            stack.append(x.subs[1])
            stack.append(f" {_OP_TEXT[x.op]} ")
            stack.append(x.subs[0])
            stack.append("(")
        else:
            stack.append(x.subs[0])
            parts.append(f"{x.op} {x.var}. ")
    return "".join(parts)


_TOKEN_RE = re.compile(r"\s*(->|[()=+*&|~.]|[A-Za-z_][A-Za-z0-9_]*|0)")


class _Tokens:
    def __init__(self, text: str):
        self.toks: list[str] = []
        text = text.strip()
        pos = 0
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if not m:
                raise ParseError(f"cannot tokenize at {text[pos:pos + 12]!r}")
            self.toks.append(m.group(1))
            pos = m.end()
        self.pos = 0

    def peek(self) -> str | None:
        return self.toks[self.pos] if self.pos < len(self.toks) else None

    def take(self) -> str:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of input")
        self.pos += 1
        return tok

    def expect(self, tok: str) -> None:
        got = self.take()
        if got != tok:
            raise ParseError(f"expected {tok!r}, got {got!r}")


def _parse_term(ts: _Tokens) -> Term:
    chain = []
    while ts.peek() in _UNARY_TERMS:
        chain.append(_UNARY_TERMS[ts.take()])
        ts.expect("(")
    tok = ts.take()
    if tok == "0":
        base = Zero
    elif tok == "(":
        left = _parse_term(ts)
        op = ts.take()
        if op not in _TERM_BIN:
            raise ParseError(f"expected + or *, got {op!r}")
        right = _parse_term(ts)
        ts.expect(")")
        base = _TERM_BIN[op](left, right)
    elif _NAME_RE.match(tok):
        base = Var(tok)
    else:
        raise ParseError(f"unexpected token {tok!r} in term")
    for ctor in reversed(chain):
        ts.expect(")")
        base = ctor(base)
    return base


def _parse_formula(ts: _Tokens) -> Formula:
    negations = 0
    while ts.peek() == "~":
        ts.take()
        negations += 1
    tok = ts.peek()
    if tok in ("forall", "exists"):
        ts.take()
        name = ts.take()
        if not _NAME_RE.match(name):
            raise ParseError(f"bad variable name {name!r}")
        ts.expect(".")
        body = _parse_formula(ts)
        out = (ForAll if tok == "forall" else Exists)(name, body)
    elif tok == "Prov":
        ts.take()
        ts.expect("(")
        out = Prov(_parse_term(ts))
        ts.expect(")")
    elif tok == "(":
        ts.take()
        snapshot = ts.pos
        try:
            left_f = _parse_formula(ts)
            op = ts.take()
            if op not in _FORMULA_BIN:
                raise ParseError(f"expected &, | or ->, got {op!r}")
            right_f = _parse_formula(ts)
            ts.expect(")")
            out = _FORMULA_BIN[op](left_f, right_f)
        except ParseError:
            ts.pos = snapshot
            left_t = _parse_term(ts)
            ts.expect("=")
            right_t = _parse_term(ts)
            ts.expect(")")
            out = Eq(left_t, right_t)
    else:
        raise ParseError(f"unexpected token {tok!r} in formula")
    for _ in range(negations):
        out = Not(out)
    return out


def parse_term(text: str) -> Term:
    ts = _Tokens(text)
    out = _parse_term(ts)
    if ts.peek() is not None:
        raise ParseError(f"trailing input {ts.peek()!r}")
    return out


def parse_formula(text: str) -> Formula:
    ts = _Tokens(text)
    out = _parse_formula(ts)
    if ts.peek() is not None:
        raise ParseError(f"trailing input {ts.peek()!r}")
    return out
