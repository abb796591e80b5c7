"""Exact rational LP feasibility for test oracles.

Phase-one simplex over Fractions with Bland's anti-cycling rule, so the
answer is exact and independent of constraint order (unlike float solvers,
whose infeasibility verdicts we could not certify).
"""

from fractions import Fraction


def lp_feasible(A, b):
    """Whether {x >= 0 : A x <= b} is nonempty, exactly.

    A is a list of m rows of length n, b a list of m bounds; entries may be
    ints or Fractions.
    """
    m = len(A)
    if m == 0:
        return True
    n = len(A[0])
    n_art = sum(1 for v in b if Fraction(v) < 0)
    ncols = n + m + n_art
    rows = []
    basis = []
    art_start = n + m
    k = 0
    for i in range(m):
        row = [Fraction(v) for v in A[i]] + [Fraction(0)] * (m + n_art)
        row[n + i] = Fraction(1)
        rhs = Fraction(b[i])
        if rhs < 0:
            row = [-v for v in row]
            rhs = -rhs
            row[art_start + k] = Fraction(1)
            basis.append(art_start + k)
            k += 1
        else:
            basis.append(n + i)
        rows.append([row, rhs])
    # reduced-cost row for minimizing the sum of artificials
    red = [Fraction(0)] * ncols
    objval = Fraction(0)
    for (row, rhs), bi in zip(rows, basis):
        if bi >= art_start:
            for j in range(ncols):
                red[j] += row[j]
            objval += rhs
    for j in range(art_start, ncols):
        red[j] -= 1
    while True:
        enter = next((j for j in range(ncols) if red[j] > 0), None)
        if enter is None:
            break
        candidates = [
            (rows[i][1] / rows[i][0][enter], basis[i], i)
            for i in range(m) if rows[i][0][enter] > 0
        ]
        if not candidates:
            break  # cannot happen in phase one; bail out conservatively
        _ratio, _bvar, leave = min(candidates)
        prow, prhs = rows[leave]
        piv = prow[enter]
        prow = [v / piv for v in prow]
        prhs = prhs / piv
        rows[leave] = [prow, prhs]
        basis[leave] = enter
        for i in range(m):
            if i == leave:
                continue
            row, rhs = rows[i]
            f = row[enter]
            if f:
                rows[i] = ([v - f * p for v, p in zip(row, prow)],
                           rhs - f * prhs)
        f = red[enter]
        red = [v - f * p for v, p in zip(red, prow)]
        objval -= f * prhs
    return objval == 0
