# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled stack-machine evaluator for expression tapes.

Mirrors the NumPy runner in spraylab._tape: IEEE semantics, so points
outside an expression's domain yield non-finite values instead of
raising.  Opcode numbering must stay in sync with spraylab._tape.
"""

from libc.math cimport sqrt, sin, cos, exp, log, fabs, pow


cdef inline double _run_range(
    const int[::1] code, const int[::1] iarg, const double[::1] farg,
    Py_ssize_t start, Py_ssize_t stop,
    const double* x, const double* y,
    double* stack,
) noexcept nogil:
    cdef Py_ssize_t pc
    cdef Py_ssize_t sp = 0
    cdef int op, k
    cdef double a
    for pc in range(start, stop):
        op = code[pc]
        if op == 0:    # CONST
            stack[sp] = farg[pc]; sp += 1
        elif op == 1:  # VARX
            stack[sp] = x[iarg[pc]]; sp += 1
        elif op == 2:  # VARY
            stack[sp] = y[iarg[pc]]; sp += 1
        elif op == 3:  # ADD
            sp -= 1; stack[sp - 1] = stack[sp - 1] + stack[sp]
        elif op == 4:  # SUB
            sp -= 1; stack[sp - 1] = stack[sp - 1] - stack[sp]
        elif op == 5:  # MUL
            sp -= 1; stack[sp - 1] = stack[sp - 1] * stack[sp]
        elif op == 6:  # DIV
            sp -= 1; stack[sp - 1] = stack[sp - 1] / stack[sp]
        elif op == 7:  # NEG
            stack[sp - 1] = -stack[sp - 1]
        elif op == 8:  # SQRT
            stack[sp - 1] = sqrt(stack[sp - 1])
        elif op == 9:  # SIN
            stack[sp - 1] = sin(stack[sp - 1])
        elif op == 10: # COS
            stack[sp - 1] = cos(stack[sp - 1])
        elif op == 11: # EXP
            stack[sp - 1] = exp(stack[sp - 1])
        elif op == 12: # LOG
            stack[sp - 1] = log(stack[sp - 1])
        elif op == 13: # ABS
            stack[sp - 1] = fabs(stack[sp - 1])
        else:          # POWI
            k = iarg[pc]
            a = stack[sp - 1]
            if k < 0:
                stack[sp - 1] = 1.0 / _ipow(a, -k)
            else:
                stack[sp - 1] = _ipow(a, k)
    return stack[0]


cdef inline double _ipow(double a, int k) noexcept nogil:
    cdef double r = 1.0
    cdef double b = a
    cdef int e = k
    while e > 0:
        if e & 1:
            r *= b
        b *= b
        e >>= 1
    return r


def run_batch(const int[::1] code, const int[::1] iarg, const double[::1] farg,
              const double[:, ::1] xs, const double[:, ::1] ys,
              double[::1] out, double[::1] stack):
    """Evaluate one tape at every point of (xs, ys) into out."""
    cdef Py_ssize_t m = xs.shape[0]
    cdef Py_ssize_t p
    cdef Py_ssize_t stop = code.shape[0]
    with nogil:
        for p in range(m):
            out[p] = _run_range(code, iarg, farg, 0, stop,
                                &xs[p, 0], &ys[p, 0], &stack[0])


def run_many_batch(const int[::1] code, const int[::1] iarg, const double[::1] farg,
                   const int[::1] bounds,
                   const double[:, ::1] xs, const double[:, ::1] ys,
                   double[:, ::1] out, double[::1] stack):
    """Evaluate several concatenated tapes at a batch of points.

    out has shape (n_points, n_tapes).
    """
    cdef Py_ssize_t m = xs.shape[0]
    cdef Py_ssize_t ntapes = bounds.shape[0] - 1
    cdef Py_ssize_t p, t
    with nogil:
        for p in range(m):
            for t in range(ntapes):
                out[p, t] = _run_range(code, iarg, farg, bounds[t], bounds[t + 1],
                                       &xs[p, 0], &ys[p, 0], &stack[0])


def run_many_one(const int[::1] code, const int[::1] iarg, const double[::1] farg,
                 const int[::1] bounds,
                 const double[::1] x, const double[::1] y,
                 double[::1] out, double[::1] stack):
    """Evaluate several concatenated tapes at a single point (hot path)."""
    cdef Py_ssize_t ntapes = bounds.shape[0] - 1
    cdef Py_ssize_t t
    for t in range(ntapes):
        out[t] = _run_range(code, iarg, farg, bounds[t], bounds[t + 1],
                            &x[0], &y[0], &stack[0])
