"""Explicit operation counters for instrumented code paths.

Instrumented functions take an optional ``counter`` and charge it with the
arithmetic they perform. Dense kernels delegated to LAPACK (LU, SVD) are
charged with the textbook counts from Golub & Van Loan, "Matrix
Computations", since their inner loops are not visible from Python.
"""

from __future__ import annotations

from collections import Counter
from contextlib import contextmanager

# real-flop weight of each operation class
FLOP_WEIGHTS = {
    "cmul": 6,
    "cadd": 2,
    "cdiv": 11,
    "rmul": 1,
    "radd": 1,
    "rdiv": 1,
    "act": 1,
}


class FlopCounter:
    """Per-class operation tally.

    ``counts`` maps an operation class (``cmul``, ``cadd``, ``cdiv``,
    ``rmul``, ``radd``, ``rdiv``, ``act``) to the number of operations.
    ``events`` records discrete kernel invocations (e.g. ``"pinv"``), which
    lets tests assert how many solves a routine performed.
    """

    def __init__(self):
        self.counts: Counter = Counter()
        self.events: Counter = Counter()

    def add(self, kind: str, n: float) -> None:
        if kind not in FLOP_WEIGHTS:
            raise KeyError(f"unknown operation class {kind!r}")
        if n < 0:
            raise ValueError("operation counts are nonnegative")
        self.counts[kind] += n

    def event(self, name: str, n: int = 1) -> None:
        self.events[name] += n

    @property
    def total(self) -> float:
        """Real-flop equivalent of everything counted so far."""
        return float(sum(FLOP_WEIGHTS[k] * v for k, v in self.counts.items()))

    def snapshot(self) -> dict:
        return dict(self.counts)

    def reset(self) -> None:
        self.counts.clear()
        self.events.clear()

    @contextmanager
    def region(self):
        """Yield a fresh counter and merge its tally back on exit."""
        inner = FlopCounter()
        yield inner
        self.counts.update(inner.counts)
        self.events.update(inner.events)

    def __repr__(self) -> str:
        return f"FlopCounter(total={self.total:.0f}, {dict(self.counts)})"


class _NullCounter(FlopCounter):
    def add(self, kind: str, n: float) -> None:
        pass

    def event(self, name: str, n: int = 1) -> None:
        pass


NULL = _NullCounter()


def charge_lu_solve(counter: FlopCounter, n: int, nrhs: int = 1, complex_: bool = True) -> None:
    """LU factorisation (n^3/3 multiply-adds) plus forward/back substitution."""
    mul, add = ("cmul", "cadd") if complex_ else ("rmul", "radd")
    counter.add(mul, n ** 3 / 3 + nrhs * n ** 2)
    counter.add(add, n ** 3 / 3 + nrhs * n ** 2)
    counter.event("solve")


def charge_svd(counter: FlopCounter, m: int, n: int) -> None:
    """Thin SVD (sigma, U1, V) of an m x n real matrix.

    Takes the cheaper of the Golub-Reinsch (14 m n^2 + 8 n^3) and R-SVD
    (6 m n^2 + 20 n^3) counts, with m >= n after transposition.
    """
    if m < n:
        m, n = n, m
    flops = min(14 * m * n ** 2 + 8 * n ** 3, 6 * m * n ** 2 + 20 * n ** 3)
    counter.add("rmul", flops / 2)
    counter.add("radd", flops / 2)
    counter.event("svd")


def charge_matmul(counter: FlopCounter, m: int, k: int, n: int, complex_: bool = False) -> None:
    """(m x k) @ (k x n)."""
    mul, add = ("cmul", "cadd") if complex_ else ("rmul", "radd")
    counter.add(mul, m * k * n)
    counter.add(add, m * (k - 1) * n)
