"""Symbolic expressions over base/fiber coordinates.

Coefficient functions on the slashed tangent bundle are ASTs over the
variables x1..xn (base) and y1..yn (fiber) with arithmetic, integer
powers, and the unary functions sqrt, sin, cos, exp, log, abs.
Expressions are immutable; diff and simplify return new trees.

Grammar (whitespace insignificant)::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := base ('^' integer)?
    base   := number | ident | func '(' expr ')' | '(' expr ')' | '-' base
    ident  := ('x'|'y') positive-integer
    func   := sqrt | sin | cos | exp | log | abs

Numbers are decimal literals; scientific notation is accepted on input so
that printed expressions always re-parse.  Exponents after '^' must be
integer literals (general real powers go through exp/log explicitly).
"""

from __future__ import annotations

import math

UNARY_OPS = ("neg", "sqrt", "sin", "cos", "exp", "log", "abs")
BINARY_OPS = ("add", "sub", "mul", "div")
FUNCTIONS = ("sqrt", "sin", "cos", "exp", "log", "abs")


class ExpressionError(Exception):
    """Base class for DSL errors."""


class ParseError(ExpressionError):
    """Syntax or validation error, with the byte offset of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class Expression:
    """Immutable AST node.  Subclasses: Const, Var, Unary, Binary, Power."""

    __slots__ = ("_hash",)

    def __hash__(self):
        return self._hash

    def _coerce(self, other):
        if isinstance(other, Expression):
            return other
        if isinstance(other, (int, float)):
            return Const(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else Binary("add", self, other)

    def __radd__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else Binary("add", other, self)

    def __sub__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else Binary("sub", self, other)

    def __rsub__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else Binary("sub", other, self)

    def __mul__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else Binary("mul", self, other)

    def __rmul__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else Binary("mul", other, self)

    def __truediv__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else Binary("div", self, other)

    def __rtruediv__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else Binary("div", other, self)

    def __pow__(self, exponent):
        if not isinstance(exponent, int):
            raise TypeError("pow exponents must be integers")
        return Power(self, exponent)

    def __neg__(self):
        return Unary("neg", self)

    def __str__(self):
        return to_string(self)

    def __repr__(self):
        return f"<expr {to_string(self)}>"


class Const(Expression):
    __slots__ = ("value",)

    def __init__(self, value: float):
        v = float(value)
        if v == 0.0:
            v = 0.0  # normalize -0.0
        object.__setattr__(self, "value", v)
        object.__setattr__(self, "_hash", hash(("const", v)))

    def __setattr__(self, *a):  # pragma: no cover - immutability guard
        raise AttributeError("Expression nodes are immutable")

    def __eq__(self, other):
        return self is other or (type(other) is Const and self.value == other.value)

    __hash__ = Expression.__hash__


class Var(Expression):
    __slots__ = ("kind", "index")

    def __init__(self, kind: str, index: int):
        if kind not in ("x", "y"):
            raise ValueError(f"variable kind must be 'x' or 'y', got {kind!r}")
        if index < 1:
            raise ValueError("variable indices are 1-based")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "index", int(index))
        object.__setattr__(self, "_hash", hash(("var", kind, index)))

    __setattr__ = Const.__setattr__

    def __eq__(self, other):
        return self is other or (
            type(other) is Var and self.kind == other.kind and self.index == other.index
        )

    __hash__ = Expression.__hash__


class Unary(Expression):
    __slots__ = ("op", "arg")

    def __init__(self, op: str, arg: Expression):
        if op not in UNARY_OPS:
            raise ValueError(f"unknown unary op {op!r}")
        object.__setattr__(self, "op", op)
        object.__setattr__(self, "arg", arg)
        object.__setattr__(self, "_hash", hash(("u", op, arg._hash)))

    __setattr__ = Const.__setattr__

    def __eq__(self, other):
        if self is other:
            return True
        return type(other) is Unary and self.op == other.op and self.arg == other.arg

    __hash__ = Expression.__hash__


class Binary(Expression):
    __slots__ = ("op", "left", "right")

    def __init__(self, op: str, left: Expression, right: Expression):
        if op not in BINARY_OPS:
            raise ValueError(f"unknown binary op {op!r}")
        object.__setattr__(self, "op", op)
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)
        object.__setattr__(self, "_hash", hash(("b", op, left._hash, right._hash)))

    __setattr__ = Const.__setattr__

    def __eq__(self, other):
        if self is other:
            return True
        return (
            type(other) is Binary
            and self.op == other.op
            and self.left == other.left
            and self.right == other.right
        )

    __hash__ = Expression.__hash__


class Power(Expression):
    """Integer power; keeps differentiation closed-form (no branch cuts)."""

    __slots__ = ("base", "exponent")

    def __init__(self, base: Expression, exponent: int):
        if not isinstance(exponent, int) or isinstance(exponent, bool):
            raise ValueError("pow exponents must be integers")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "exponent", exponent)
        object.__setattr__(self, "_hash", hash(("p", base._hash, exponent)))

    __setattr__ = Const.__setattr__

    def __eq__(self, other):
        if self is other:
            return True
        return (
            type(other) is Power
            and self.exponent == other.exponent
            and self.base == other.base
        )

    __hash__ = Expression.__hash__


ZERO = Const(0.0)
ONE = Const(1.0)


def var_x(i: int) -> Var:
    return Var("x", i)


def var_y(i: int) -> Var:
    return Var("y", i)


def max_var_index(e: Expression) -> int:
    """Largest variable index appearing in e (0 when constant)."""
    if isinstance(e, Const):
        return 0
    if isinstance(e, Var):
        return e.index
    if isinstance(e, Unary):
        return max_var_index(e.arg)
    if isinstance(e, Power):
        return max_var_index(e.base)
    return max(max_var_index(e.left), max_var_index(e.right))


def uses_fiber(e: Expression) -> bool:
    """True when e depends on some y-variable."""
    if isinstance(e, Const):
        return False
    if isinstance(e, Var):
        return e.kind == "y"
    if isinstance(e, Unary):
        return uses_fiber(e.arg)
    if isinstance(e, Power):
        return uses_fiber(e.base)
    return uses_fiber(e.left) or uses_fiber(e.right)


# ---------------------------------------------------------------------------
# parsing


class _Parser:
    def __init__(self, text: str, n: int):
        self.text = text
        self.n = n
        self.pos = 0

    def error(self, message: str, offset=None):
        raise ParseError(message, self.pos if offset is None else offset)

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self):
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch: str):
        if self.peek() != ch:
            self.error(f"expected {ch!r}")
        self.pos += 1

    def parse(self) -> Expression:
        e = self.parse_expr()
        if self.peek():
            self.error(f"unexpected character {self.peek()!r}")
        return e

    def parse_expr(self) -> Expression:
        e = self.parse_term()
        while True:
            ch = self.peek()
            if ch == "+":
                self.pos += 1
                e = Binary("add", e, self.parse_term())
            elif ch == "-":
                self.pos += 1
                e = Binary("sub", e, self.parse_term())
            else:
                return e

    def parse_term(self) -> Expression:
        e = self.parse_factor()
        while True:
            ch = self.peek()
            if ch == "*":
                self.pos += 1
                e = Binary("mul", e, self.parse_factor())
            elif ch == "/":
                self.pos += 1
                e = Binary("div", e, self.parse_factor())
            else:
                return e

    def parse_factor(self) -> Expression:
        e = self.parse_base()
        if self.peek() == "^":
            self.pos += 1
            e = Power(e, self.parse_integer())
        return e

    def parse_integer(self) -> int:
        self.skip_ws()
        start = self.pos
        sign = 1
        if self.peek() == "-":
            self.pos += 1
            sign = -1
        lexeme, value, is_int = self.scan_number()
        if not is_int:
            self.error("pow exponent must be an integer literal", start)
        return sign * int(value)

    def scan_number(self):
        self.skip_ws()
        start = self.pos
        text = self.text
        if self.pos >= len(text) or not (text[self.pos].isdigit() or text[self.pos] == "."):
            self.error("expected a number")
        while self.pos < len(text) and text[self.pos].isdigit():
            self.pos += 1
        is_int = True
        if self.pos < len(text) and text[self.pos] == ".":
            is_int = False
            self.pos += 1
            while self.pos < len(text) and text[self.pos].isdigit():
                self.pos += 1
        if self.pos < len(text) and text[self.pos] in "eE":
            is_int = False
            mark = self.pos
            self.pos += 1
            if self.pos < len(text) and text[self.pos] in "+-":
                self.pos += 1
            if self.pos < len(text) and text[self.pos].isdigit():
                while self.pos < len(text) and text[self.pos].isdigit():
                    self.pos += 1
            else:
                self.pos = mark  # the 'e' was not an exponent marker
                is_int = True
        lexeme = text[start:self.pos]
        if lexeme in (".",):
            self.error("expected a number", start)
        return lexeme, float(lexeme), is_int

    def parse_base(self) -> Expression:
        ch = self.peek()
        start = self.pos
        if ch == "(":
            self.pos += 1
            e = self.parse_expr()
            self.expect(")")
            return e
        if ch == "-":
            self.pos += 1
            return Unary("neg", self.parse_base())
        if ch.isdigit() or ch == ".":
            _, value, _ = self.scan_number()
            return Const(value)
        if ch.isalpha():
            name_start = self.pos
            while self.pos < len(self.text) and self.text[self.pos].isalpha():
                self.pos += 1
            name = self.text[name_start:self.pos]
            if name in ("x", "y"):
                idx_start = self.pos
                while self.pos < len(self.text) and self.text[self.pos].isdigit():
                    self.pos += 1
                digits = self.text[idx_start:self.pos]
                if not digits:
                    self.error("expected a variable index", idx_start)
                index = int(digits)
                if not 1 <= index <= self.n:
                    self.error(
                        f"variable index {index} out of range for dimension {self.n}",
                        name_start,
                    )
                return Var(name, index)
            if name in FUNCTIONS:
                self.expect("(")
                e = self.parse_expr()
                self.expect(")")
                return Unary(name, e)
            self.error(f"unknown identifier {name!r}", name_start)
        self.error("unexpected end of input" if not ch else f"unexpected character {ch!r}", start)


def parse(text: str, n: int) -> Expression:
    """Parse text under dimension n (variables x1..xn, y1..yn)."""
    if n < 1:
        raise ValueError("dimension must be at least 1")
    return _Parser(text, n).parse()


# ---------------------------------------------------------------------------
# printing

_LEVEL_SUM, _LEVEL_TERM, _LEVEL_FACTOR, _LEVEL_BASE = 1, 2, 3, 4


def _fmt_number(v: float) -> str:
    if v == math.floor(v) and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def _level(e: Expression) -> int:
    if isinstance(e, Const):
        return _LEVEL_BASE if e.value >= 0 else _LEVEL_BASE  # printed as '-c', still a base
    if isinstance(e, Var):
        return _LEVEL_BASE
    if isinstance(e, Unary):
        return _LEVEL_BASE  # '-base' and 'func(...)' are both grammar bases
    if isinstance(e, Power):
        return _LEVEL_FACTOR
    return _LEVEL_SUM if e.op in ("add", "sub") else _LEVEL_TERM


def _wrap(e: Expression, minimum: int) -> str:
    s = to_string(e)
    return s if _level(e) >= minimum else f"({s})"


def to_string(e: Expression) -> str:
    """Render e in the DSL grammar; parse(to_string(e)) rebuilds the tree."""
    if isinstance(e, Const):
        if e.value < 0:
            return "-" + _fmt_number(-e.value)
        return _fmt_number(e.value)
    if isinstance(e, Var):
        return f"{e.kind}{e.index}"
    if isinstance(e, Unary):
        if e.op == "neg":
            return "-" + _wrap(e.arg, _LEVEL_BASE)
        return f"{e.op}({to_string(e.arg)})"
    if isinstance(e, Power):
        return f"{_wrap(e.base, _LEVEL_BASE)}^{e.exponent}"
    if e.op == "add":
        return f"{_wrap(e.left, _LEVEL_SUM)}+{_wrap(e.right, _LEVEL_TERM)}"
    if e.op == "sub":
        return f"{_wrap(e.left, _LEVEL_SUM)}-{_wrap(e.right, _LEVEL_TERM)}"
    if e.op == "mul":
        return f"{_wrap(e.left, _LEVEL_TERM)}*{_wrap(e.right, _LEVEL_FACTOR)}"
    return f"{_wrap(e.left, _LEVEL_TERM)}/{_wrap(e.right, _LEVEL_FACTOR)}"


# ---------------------------------------------------------------------------
# differentiation


def diff(e: Expression, v: Var) -> Expression:
    """Exact partial derivative of e with respect to the variable v.

    Total on the AST; abs contributes arg/abs(arg), which evaluation flags
    as undefined exactly at the non-smooth point.
    """
    memo: dict[int, Expression] = {}

    def d(node: Expression) -> Expression:
        key = id(node)
        got = memo.get(key)
        if got is not None:
            return got
        if isinstance(node, Const):
            out = ZERO
        elif isinstance(node, Var):
            out = ONE if (node.kind == v.kind and node.index == v.index) else ZERO
        elif isinstance(node, Unary):
            a, da = node.arg, d(node.arg)
            if node.op == "neg":
                out = Unary("neg", da)
            elif node.op == "sqrt":
                out = Binary("div", da, Binary("mul", Const(2.0), node))
            elif node.op == "sin":
                out = Binary("mul", Unary("cos", a), da)
            elif node.op == "cos":
                out = Unary("neg", Binary("mul", Unary("sin", a), da))
            elif node.op == "exp":
                out = Binary("mul", node, da)
            elif node.op == "log":
                out = Binary("div", da, a)
            else:  # abs
                out = Binary("mul", da, Binary("div", a, node))
        elif isinstance(node, Power):
            b, k = node.base, node.exponent
            out = Binary(
                "mul",
                Binary("mul", Const(float(k)), Power(b, k - 1)),
                d(b),
            )
        else:
            l, r, dl, dr = node.left, node.right, d(node.left), d(node.right)
            if node.op == "add":
                out = Binary("add", dl, dr)
            elif node.op == "sub":
                out = Binary("sub", dl, dr)
            elif node.op == "mul":
                out = Binary("add", Binary("mul", dl, r), Binary("mul", l, dr))
            else:  # div
                num = Binary("sub", Binary("mul", dl, r), Binary("mul", l, dr))
                out = Binary("div", num, Power(r, 2))
        memo[key] = out
        return out

    return simplify(d(e))


# ---------------------------------------------------------------------------
# simplification


def sort_key(e: Expression):
    """Deterministic structural ordering used to canonicalize sums/products."""
    if isinstance(e, Const):
        return (0, e.value)
    if isinstance(e, Var):
        return (1, 0 if e.kind == "x" else 1, e.index)
    if isinstance(e, Power):
        return (2, sort_key(e.base), e.exponent)
    if isinstance(e, Unary):
        return (3, e.op, sort_key(e.arg))
    return (4, e.op, sort_key(e.left), sort_key(e.right))


def _add_factor(coeff_factors, base: Expression, exponent: int):
    """Record base^exponent; sqrt(X) folds into half-integer powers of X
    and negated bases contribute their sign to the coefficient."""
    factors = coeff_factors[1]
    while isinstance(base, Unary) and base.op == "neg":
        if exponent % 2:
            coeff_factors[0] = -coeff_factors[0]
        base = base.arg
    if isinstance(base, Unary) and base.op == "sqrt":
        factors[base.arg] = factors.get(base.arg, 0) + exponent
    else:
        factors[base] = factors.get(base, 0) + 2 * exponent


def _decompose_product(node: Expression, coeff_factors=None, sign: int = 1):
    """Split a (simplified) node into (float coefficient, {base: half-exponent}).

    Exponents are tracked in half-units so sqrt powers combine exactly:
    sqrt(X) contributes 1, X contributes 2, X^k contributes 2k.
    """
    if coeff_factors is None:
        coeff_factors = [1.0, {}]
    factors = coeff_factors[1]
    if isinstance(node, Const):
        if node.value == 0.0 and sign < 0:
            factors[node] = factors.get(node, 0) - 2  # keep 1/0 to fail at eval
        elif sign > 0:
            coeff_factors[0] *= node.value
        else:
            coeff_factors[0] /= node.value
    elif isinstance(node, Binary) and node.op == "mul":
        _decompose_product(node.left, coeff_factors, sign)
        _decompose_product(node.right, coeff_factors, sign)
    elif isinstance(node, Binary) and node.op == "div":
        _decompose_product(node.left, coeff_factors, sign)
        _decompose_product(node.right, coeff_factors, -sign)
    elif isinstance(node, Unary) and node.op == "neg":
        coeff_factors[0] = -coeff_factors[0]
        _decompose_product(node.arg, coeff_factors, sign)
    elif isinstance(node, Power):
        _add_factor(coeff_factors, node.base, sign * node.exponent)
    else:
        _add_factor(coeff_factors, node, sign)
    return coeff_factors


def _power_parts(base: Expression, halves: int) -> list:
    """Expression factors realizing base^(halves/2) for halves > 0."""
    whole, half = divmod(halves, 2)
    parts = []
    if whole == 1:
        parts.append(base)
    elif whole > 1:
        parts.append(Power(base, whole))
    if half:
        parts.append(Unary("sqrt", base))
    return parts


def _rebuild_product(coeff: float, factors: dict) -> Expression:
    if coeff == 0.0:
        return ZERO
    norm: dict = {}
    for b, h in factors.items():
        if h and isinstance(b, Unary) and b.op == "neg":
            # whole powers of a negated base fold into the sign; only a
            # residual sqrt(-X) factor keeps the negation
            whole, half = divmod(h, 2)
            if whole % 2:
                coeff = -coeff
            if whole:
                norm[b.arg] = norm.get(b.arg, 0) + 2 * whole
            if half:
                norm[b] = norm.get(b, 0) + 1
        elif h:
            norm[b] = norm.get(b, 0) + h
    factors = norm
    items = sorted(((b, h) for b, h in factors.items() if h != 0), key=lambda it: sort_key(it[0]))
    num_parts = []
    den_parts = []
    for base, h in items:
        if h > 0:
            num_parts.extend(_power_parts(base, h))
        else:
            den_parts.extend(_power_parts(base, -h))
    negate = coeff == -1.0 and bool(num_parts)
    if negate:
        coeff = 1.0
    num = None
    if coeff != 1.0 or not num_parts:
        num = Const(coeff)
    for part in num_parts:
        num = part if num is None else Binary("mul", num, part)
    out = num
    if den_parts:
        den = None
        for part in den_parts:
            den = part if den is None else Binary("mul", den, part)
        out = Binary("div", num, den)
    return Unary("neg", out) if negate else out


def _term_key(factors: dict):
    return tuple(sorted((sort_key(b), k) for b, k in factors.items() if k != 0))


def _canonical_product(coeff: float, factors: dict) -> Expression:
    """Rebuild a product, distributing a bare constant over a lone sum so
    the sum and product entry points agree on the canonical form."""
    items = [(b, h) for b, h in factors.items() if h != 0]
    if (
        len(items) == 1
        and items[0][1] == 2
        and isinstance(items[0][0], Binary)
        and items[0][0].op in ("add", "sub")
    ):
        acc: dict = {}
        _collect_terms(items[0][0], coeff, acc)
        return _rebuild_sum(acc)
    return _rebuild_product(coeff, factors)


def _collect_terms(node: Expression, sign: float, acc: dict):
    if isinstance(node, Binary) and node.op == "add":
        _collect_terms(node.left, sign, acc)
        _collect_terms(node.right, sign, acc)
    elif isinstance(node, Binary) and node.op == "sub":
        _collect_terms(node.left, sign, acc)
        _collect_terms(node.right, -sign, acc)
    else:
        coeff, factors = _decompose_product(node)
        items = [(b, h) for b, h in factors.items() if h != 0]
        # a bare constant times a sum distributes without size growth
        # (half-exponent 2 is the first power)
        if (
            len(items) == 1
            and items[0][1] == 2
            and isinstance(items[0][0], Binary)
            and items[0][0].op in ("add", "sub")
        ):
            _collect_terms(items[0][0], sign * coeff, acc)
            return
        key = _term_key(factors)
        if key in acc:
            acc[key][0] += sign * coeff
        else:
            acc[key] = [sign * coeff, factors]


def _common_factors(factor_dicts: list) -> dict:
    """Common denominators across all terms.

    Only negative half-exponents are pulled out: factoring numerators
    would hide terms from later like-term cancellation.
    """
    common = {}
    for base, h0 in factor_dicts[0].items():
        if h0 >= 0:
            continue
        hs = [f.get(base, 0) for f in factor_dicts]
        if all(h < 0 for h in hs):
            common[base] = max(hs)
    return common


def _rebuild_sum(acc: dict) -> Expression:
    terms = [(key, cf) for key, cf in sorted(acc.items()) if cf[0] != 0.0]
    if not terms:
        return ZERO
    if len(terms) > 1:
        common = _common_factors([cf[1] for _, cf in terms])
        if common:
            inner_acc = {}
            for _, (coeff, factors) in terms:
                reduced = {b: h for b, h in factors.items() if h != 0}
                for b, h in common.items():
                    reduced[b] = reduced.get(b, 0) - h
                key = _term_key(reduced)
                if key in inner_acc:
                    inner_acc[key][0] += coeff
                else:
                    inner_acc[key] = [coeff, reduced]
            inner = _rebuild_sum(inner_acc)
            # run the product path so an inner sum equal to a factor base merges
            cf = [1.0, dict(common)]
            _decompose_product(inner, cf, 1)
            return _rebuild_product(cf[0], cf[1])
    expr = None
    for _, (coeff, factors) in terms:
        if expr is None:
            expr = _rebuild_product(coeff, factors)
        elif coeff > 0:
            expr = Binary("add", expr, _rebuild_product(coeff, factors))
        else:
            expr = Binary("sub", expr, _rebuild_product(-coeff, factors))
    return expr


_CONST_FOLD = {
    "sin": math.sin,
    "cos": math.cos,
    "exp": math.exp,
    "abs": abs,
}


def simplify(e: Expression) -> Expression:
    """Canonical, value-preserving rewrite.

    Folds constants, applies 0/1 identities, flattens sums and products,
    sorts commutative operands, and cancels like terms (so y1*y2 - y2*y1
    collapses to 0).  No expansion of products over sums.
    """
    memo: dict[int, Expression] = {}

    def rec(node: Expression) -> Expression:
        key = id(node)
        got = memo.get(key)
        if got is not None:
            return got
        if isinstance(node, (Const, Var)):
            out = node
        elif isinstance(node, Unary):
            arg = rec(node.arg)
            if node.op == "neg":
                acc: dict = {}
                _collect_terms(arg, -1.0, acc)
                out = _rebuild_sum(acc)
            elif isinstance(arg, Const):
                v = arg.value
                if node.op == "sqrt" and v >= 0:
                    out = Const(math.sqrt(v))
                elif node.op == "log" and v > 0:
                    out = Const(math.log(v))
                elif node.op in _CONST_FOLD:
                    try:
                        out = Const(_CONST_FOLD[node.op](v))
                    except OverflowError:
                        out = Unary(node.op, arg)
                else:
                    out = Unary(node.op, arg)
            else:
                out = Unary(node.op, arg)
        elif isinstance(node, Power):
            base = rec(node.base)
            k = node.exponent
            if k == 0:
                out = ONE
            elif k == 1:
                out = base
            elif isinstance(base, Const) and (base.value != 0.0 or k > 0):
                out = Const(base.value ** k)
            elif isinstance(base, Power):
                out = Power(base.base, base.exponent * k)
            else:
                cf = [1.0, {}]
                _add_factor(cf, base, k)
                out = _rebuild_product(cf[0], cf[1])
        elif node.op in ("add", "sub"):
            acc = {}
            _collect_terms(rec(node.left), 1.0, acc)
            _collect_terms(rec(node.right), 1.0 if node.op == "add" else -1.0, acc)
            out = _rebuild_sum(acc)
        else:  # mul / div
            left = rec(node.left)
            right = rec(node.right)
            cf = [1.0, {}]
            _decompose_product(left, cf, 1)
            _decompose_product(right, cf, 1 if node.op == "mul" else -1)
            out = _canonical_product(cf[0], cf[1])
        memo[key] = out
        return out

    return rec(e)
