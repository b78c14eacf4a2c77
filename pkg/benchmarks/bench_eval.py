"""Benchmark: compiled evaluator core vs the NumPy tape fallback.

Measures batch evaluation of representative coefficient expressions and
a full RK4 geodesic integration with each backend.  Run from the repo
root after an editable install:

    python3 benchmarks/bench_eval.py
"""

import time

from spraylab.evaluate import BatchEvaluator, backend_available, points_to_arrays, sample_points
from spraylab.expression import parse
from spraylab.geodesics import integrate
from spraylab.presets import get_preset
from spraylab.spray import jacobi


def time_call(fn, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_batch(backend: str, exprs, xs, ys) -> float:
    ev = BatchEvaluator(exprs, backend=backend)
    return time_call(lambda: ev.at_arrays(xs, ys))


def bench_integrate(backend: str, spray, steps=20000) -> float:
    import spraylab.evaluate as evmod

    # BatchEvaluator picks the active backend; pin it for the measurement
    class _pinned:
        def __enter__(self):
            self.orig = evmod.active_backend
            evmod.active_backend = lambda: backend

        def __exit__(self, *exc):
            evmod.active_backend = self.orig

    with _pinned():
        return time_call(lambda: integrate(spray, [0, 0], [1, 1], 1.0, steps), repeats=3)


def main():
    yang = get_preset("yang(0.5)").build()
    at = get_preset("anderson-thompson").build()
    jac = jacobi(yang)
    cases = {
        "anderson-thompson G": list(at.G),
        "yang G (sqrt-heavy)": list(yang.G),
        "yang Jacobi endomorphism": [jac.R[i][j] for i in range(2) for j in range(2)],
        "norm quotient": [parse(
            "y1^2*x1/sqrt(y1^2+y2^2)^3+exp(sin(x2))*y2/sqrt(y1^2+y2^2)", 2)],
    }

    backends = ["python"]
    if backend_available("compiled"):
        backends.insert(0, "compiled")
    else:
        print("compiled core not built; benchmarking the fallback only")

    # 50 points is the zero-check workload; 100k is a throughput stress
    # case where NumPy's whole-array ops amortize the dispatch instead
    for count, repeats in ((50, 400), (100_000, 3)):
        points = sample_points(2, count, seed=1)
        xs, ys = points_to_arrays(points)
        print(f"batch evaluation, {count} points:")
        header = f"  {'case':34s}" + "".join(f"{b:>12s}" for b in backends)
        if len(backends) == 2:
            header += f"{'speedup':>10s}"
        print(header)
        for name, exprs in cases.items():
            times = []
            for b in backends:
                ev = BatchEvaluator(exprs, backend=b)
                times.append(time_call(lambda: ev.at_arrays(xs, ys), repeats))
            row = f"  {name:34s}" + "".join(f"{t * 1e6:10.0f}us" for t in times)
            if len(times) == 2:
                row += f"{times[1] / times[0]:9.1f}x"
            print(row)
        print()

    print("RK4 geodesic integration (anderson-thompson, 20000 steps):")
    for b in backends:
        t = bench_integrate(b, at)
        print(f"  {b:10s} {t * 1e3:10.1f}ms")


if __name__ == "__main__":
    main()
