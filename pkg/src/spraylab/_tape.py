"""Flat instruction tapes for fast expression evaluation.

An expression compiles once into a postfix tape (opcode / int-arg /
float-arg triples) executed by a stack machine.  Two interchangeable
runners exist: the Cython core in ``spraylab._evalcore`` and the NumPy
fallback below.  Both follow IEEE semantics, so out-of-domain points
surface as non-finite results rather than exceptions.
"""

from __future__ import annotations

import numpy as np

from .expression import Binary, Const, Expression, Power, Unary, Var

OP_CONST = 0
OP_VARX = 1
OP_VARY = 2
OP_ADD = 3
OP_SUB = 4
OP_MUL = 5
OP_DIV = 6
OP_NEG = 7
OP_SQRT = 8
OP_SIN = 9
OP_COS = 10
OP_EXP = 11
OP_LOG = 12
OP_ABS = 13
OP_POWI = 14

_UNARY_CODE = {
    "neg": OP_NEG,
    "sqrt": OP_SQRT,
    "sin": OP_SIN,
    "cos": OP_COS,
    "exp": OP_EXP,
    "log": OP_LOG,
    "abs": OP_ABS,
}
_BINARY_CODE = {"add": OP_ADD, "sub": OP_SUB, "mul": OP_MUL, "div": OP_DIV}


class Tape:
    """Compiled form of one expression."""

    __slots__ = ("code", "iarg", "farg", "stack_size")

    def __init__(self, code, iarg, farg, stack_size):
        self.code = np.asarray(code, dtype=np.int32)
        self.iarg = np.asarray(iarg, dtype=np.int32)
        self.farg = np.asarray(farg, dtype=np.float64)
        self.stack_size = stack_size

    def __len__(self):
        return len(self.code)


def compile_expression(e: Expression) -> Tape:
    code: list[int] = []
    iarg: list[int] = []
    farg: list[float] = []

    def emit(op, i=0, f=0.0):
        code.append(op)
        iarg.append(i)
        farg.append(f)

    def walk(node):
        if isinstance(node, Const):
            emit(OP_CONST, 0, node.value)
        elif isinstance(node, Var):
            emit(OP_VARX if node.kind == "x" else OP_VARY, node.index - 1)
        elif isinstance(node, Unary):
            walk(node.arg)
            emit(_UNARY_CODE[node.op])
        elif isinstance(node, Power):
            walk(node.base)
            emit(OP_POWI, node.exponent)
        elif isinstance(node, Binary):
            walk(node.left)
            walk(node.right)
            emit(_BINARY_CODE[node.op])
        else:  # pragma: no cover
            raise TypeError(f"cannot compile {type(node).__name__}")

    walk(e)

    depth = 0
    max_depth = 0
    for op in code:
        if op in (OP_CONST, OP_VARX, OP_VARY):
            depth += 1
        elif op in (OP_ADD, OP_SUB, OP_MUL, OP_DIV):
            depth -= 1
        max_depth = max(max_depth, depth)
    return Tape(code, iarg, farg, max_depth)


def run_batch_python(tape: Tape, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Evaluate one tape at a batch of points (NumPy backend).

    xs, ys: float64 arrays of shape (m, n).  Returns shape (m,); points
    outside the domain of the expression come back non-finite.
    """
    m = xs.shape[0]
    stack: list[np.ndarray] = []
    with np.errstate(all="ignore"):
        for op, i, f in zip(tape.code, tape.iarg, tape.farg):
            if op == OP_CONST:
                stack.append(np.full(m, f))
            elif op == OP_VARX:
                stack.append(xs[:, i].copy())
            elif op == OP_VARY:
                stack.append(ys[:, i].copy())
            elif op == OP_ADD:
                b = stack.pop()
                stack[-1] = stack[-1] + b
            elif op == OP_SUB:
                b = stack.pop()
                stack[-1] = stack[-1] - b
            elif op == OP_MUL:
                b = stack.pop()
                stack[-1] = stack[-1] * b
            elif op == OP_DIV:
                b = stack.pop()
                stack[-1] = stack[-1] / b
            elif op == OP_NEG:
                stack[-1] = -stack[-1]
            elif op == OP_SQRT:
                stack[-1] = np.sqrt(stack[-1])
            elif op == OP_SIN:
                stack[-1] = np.sin(stack[-1])
            elif op == OP_COS:
                stack[-1] = np.cos(stack[-1])
            elif op == OP_EXP:
                stack[-1] = np.exp(stack[-1])
            elif op == OP_LOG:
                stack[-1] = np.log(stack[-1])
            elif op == OP_ABS:
                stack[-1] = np.abs(stack[-1])
            elif op == OP_POWI:
                base = stack[-1]
                if i < 0:
                    stack[-1] = 1.0 / (base ** (-i))
                else:
                    stack[-1] = base ** i
    return stack[-1]


def concat_tapes(tapes: list[Tape]):
    """Concatenate tapes for the multi-expression kernels."""
    code = np.concatenate([t.code for t in tapes])
    iarg = np.concatenate([t.iarg for t in tapes])
    farg = np.concatenate([t.farg for t in tapes])
    bounds = np.zeros(len(tapes) + 1, dtype=np.int32)
    for k, t in enumerate(tapes):
        bounds[k + 1] = bounds[k] + len(t)
    stack_size = max(t.stack_size for t in tapes)
    return code, iarg, farg, bounds, stack_size
