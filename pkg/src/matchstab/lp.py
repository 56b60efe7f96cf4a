"""Exact two-phase tableau simplex over the rationals.

Solves ``min c.x  s.t.  A x = b, x >= 0`` with Bland's rule, so it terminates
on degenerate problems. Alongside the primal solution it reports the dual
vector ``y = c_B B^-1`` (read off the artificial columns, which carry ``B^-1``),
and, when phase 1 ends with a positive infeasibility, a Farkas vector ``y`` with
``A^T y >= 0`` and ``b.y < 0``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass
class LPResult:
    status: str  # "optimal", "infeasible" or "unbounded"
    x: list | None = None
    value: Fraction | None = None
    duals: list | None = None
    farkas: list | None = None


def _pivot(T, basis, r, j):
    row = T[r]
    p = row[j]
    if p != ONE:
        inv = ONE / p
        row = T[r] = [v * inv if v else ZERO for v in row]
    nz = [k for k, v in enumerate(row) if v]
    for i, other in enumerate(T):
        if i == r:
            continue
        f = other[j]
        if f:
            for k in nz:
                other[k] -= f * row[k]
    basis[r] = j


def _run(T, basis, cost, allowed):
    """Bland's-rule iterations on tableau ``T``; returns "optimal" or "unbounded"."""
    m = len(T)
    while True:
        cb = [cost[b] for b in basis]
        entering = None
        for j in allowed:
            rc = cost[j]
            for i in range(m):
                if cb[i]:
                    rc -= cb[i] * T[i][j]
            if rc < 0:
                entering = j
                break
        if entering is None:
            return "optimal"
        best = None
        for i in range(m):
            a = T[i][entering]
            if a > 0:
                ratio = T[i][-1] / a
                key = (ratio, basis[i])
                if best is None or key < best[0]:
                    best = (key, i)
        if best is None:
            return "unbounded"
        _pivot(T, basis, best[1], entering)


def _duals(T, basis, cost, n):
    m = len(T)
    return [sum((cost[basis[k]] * T[k][n + i] for k in range(m)), ZERO) for i in range(m)]


def solve(A: Sequence[Sequence], b: Sequence, c: Sequence) -> LPResult:
    """Minimize ``c.x`` subject to ``A x = b`` and ``x >= 0``, exactly.

    Returned duals satisfy ``A^T y <= c`` and ``b.y = value``.
    """
    m, n = len(A), len(c)
    flip = [Fraction(b[i]) < 0 for i in range(m)]
    T = []
    for i in range(m):
        s = -1 if flip[i] else 1
        row = [Fraction(v) * s for v in A[i]]
        row += [ONE if k == i else ZERO for k in range(m)]
        row.append(Fraction(b[i]) * s)
        T.append(row)
    basis = [n + i for i in range(m)]

    cost1 = [ZERO] * n + [ONE] * m
    _run(T, basis, cost1, range(n))
    infeas = sum((T[k][-1] for k in range(m) if basis[k] >= n), ZERO)
    if infeas > 0:
        y1 = _duals(T, basis, cost1, n)
        farkas = [(y if flip[i] else -y) for i, y in enumerate(y1)]
        return LPResult("infeasible", farkas=farkas)

    for r in range(m):
        if basis[r] >= n:
            for j in range(n):
                if T[r][j]:
                    _pivot(T, basis, r, j)
                    break

    cost2 = [Fraction(v) for v in c] + [ZERO] * m
    status = _run(T, basis, cost2, range(n))
    if status == "unbounded":
        return LPResult("unbounded")
    x = [ZERO] * n
    for i, bvar in enumerate(basis):
        if bvar < n:
            x[bvar] = T[i][-1]
    y2 = _duals(T, basis, cost2, n)
    duals = [(-y if flip[i] else y) for i, y in enumerate(y2)]
    value = sum((cost2[j] * x[j] for j in range(n)), ZERO)
    return LPResult("optimal", x=x, value=value, duals=duals)


@dataclass
class MaxMinResult:
    """Outcome of :func:`max_min_weight`.

    ``epsilon`` is the optimal minimum entry (``None`` when ``M x = rhs`` has no
    solution at all). ``y`` always satisfies ``M^T y >= 0``; its objective
    ``rhs.y`` equals ``epsilon`` when feasible and is negative when infeasible.
    """

    feasible: bool
    epsilon: Fraction | None
    x: list | None
    y: list


def max_min_weight(M: Sequence[Sequence], rhs: Sequence) -> MaxMinResult:
    """Maximize ``min_k x_k`` subject to ``M x = rhs`` (``x`` free).

    Substitutes ``x = beta + eps * 1`` with ``beta >= 0`` and ``eps = eps+ - eps-``.
    ``M`` must have nonnegative entries and no zero column, which keeps the
    optimum bounded.
    """
    m = len(M)
    K = len(M[0]) if m else 0
    d = [sum((Fraction(v) for v in row), ZERO) for row in M]
    A = [list(M[i]) + [d[i], -d[i]] for i in range(m)]
    c = [ZERO] * K + [-ONE, ONE]
    res = solve(A, rhs, c)
    if res.status == "infeasible":
        return MaxMinResult(False, None, None, res.farkas)
    if res.status == "unbounded":  # pragma: no cover - excluded by the column condition
        raise ArithmeticError("max-min LP unbounded: a column of M is null")
    eps = res.x[K] - res.x[K + 1]
    x = [res.x[k] + eps for k in range(K)]
    y = [-v for v in res.duals]
    return MaxMinResult(True, eps, x, y)
