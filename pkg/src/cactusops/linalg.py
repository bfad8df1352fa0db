"""Exact linear algebra over the rationals and the integers.

Small dense routines, enough for boundary matrices and cochain complexes at
desk scale: rational rank / nullspace by fraction-free Gaussian elimination
and integer Smith normal form for torsion detection.
"""

from __future__ import annotations

from fractions import Fraction

__all__ = ["rational_rank", "rational_nullspace", "smith_normal_form", "solve_rational"]


def rational_rank(rows):
    """Rank of a matrix given as a list of rows of Fractions/ints."""
    m = [list(map(Fraction, row)) for row in rows]
    if not m:
        return 0
    ncols = len(m[0])
    rank = 0
    for col in range(ncols):
        pivot = None
        for r in range(rank, len(m)):
            if m[r][col]:
                pivot = r
                break
        if pivot is None:
            continue
        m[rank], m[pivot] = m[pivot], m[rank]
        pv = m[rank][col]
        for r in range(rank + 1, len(m)):
            if m[r][col]:
                f = m[r][col] / pv
                row_r, row_p = m[r], m[rank]
                for c in range(col, ncols):
                    row_r[c] -= f * row_p[c]
        rank += 1
        if rank == len(m):
            break
    return rank


def rational_nullspace(rows, ncols):
    """Basis of the right nullspace of the matrix (rows of Fractions)."""
    m = [list(map(Fraction, row)) for row in rows]
    pivots = []
    rank = 0
    for col in range(ncols):
        pivot = None
        for r in range(rank, len(m)):
            if m[r][col]:
                pivot = r
                break
        if pivot is None:
            continue
        m[rank], m[pivot] = m[pivot], m[rank]
        pv = m[rank][col]
        m[rank] = [x / pv for x in m[rank]]
        for r in range(len(m)):
            if r != rank and m[r][col]:
                f = m[r][col]
                m[r] = [a - f * b for a, b in zip(m[r], m[rank])]
        pivots.append(col)
        rank += 1
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        vec = [Fraction(0)] * ncols
        vec[fc] = Fraction(1)
        for r, pc in enumerate(pivots):
            vec[pc] = -m[r][fc]
        basis.append(vec)
    return basis


def solve_rational(rows, rhs):
    """One solution x of A x = b over Q, or None if inconsistent."""
    m = [list(map(Fraction, row)) + [Fraction(v)] for row, v in zip(rows, rhs)]
    ncols = len(rows[0]) if rows else 0
    pivots = []
    rank = 0
    for col in range(ncols):
        pivot = next((r for r in range(rank, len(m)) if m[r][col]), None)
        if pivot is None:
            continue
        m[rank], m[pivot] = m[pivot], m[rank]
        pv = m[rank][col]
        m[rank] = [x / pv for x in m[rank]]
        for r in range(len(m)):
            if r != rank and m[r][col]:
                f = m[r][col]
                m[r] = [a - f * b for a, b in zip(m[r], m[rank])]
        pivots.append(col)
        rank += 1
    for r in range(rank, len(m)):
        if m[r][ncols]:
            return None
    x = [Fraction(0)] * ncols
    for r, pc in enumerate(pivots):
        x[pc] = m[r][ncols]
    return x


def smith_normal_form(rows):
    """Diagonal entries of the Smith normal form of an integer matrix.

    Returns the nonzero diagonal invariant factors d_1 | d_2 | ... as
    positive integers.  Plain elimination with smallest-pivot selection,
    adequate for the modest boundary matrices this package produces.
    """
    m = [list(map(int, row)) for row in rows]
    nrows = len(m)
    ncols = len(m[0]) if nrows else 0
    diag = []
    top = 0
    while top < nrows and top < ncols:
        # find smallest nonzero entry in the remaining block
        best = None
        for i in range(top, nrows):
            for j in range(top, ncols):
                v = m[i][j]
                if v and (best is None or abs(v) < abs(m[best[0]][best[1]])):
                    best = (i, j)
        if best is None:
            break
        bi, bj = best
        m[top], m[bi] = m[bi], m[top]
        for row in m:
            row[top], row[bj] = row[bj], row[top]
        # clear row and column; restart if remainders appear
        while True:
            pivot = m[top][top]
            dirty = False
            for i in range(top + 1, nrows):
                if m[i][top]:
                    q = m[i][top] // pivot
                    for j in range(top, ncols):
                        m[i][j] -= q * m[top][j]
                    if m[i][top]:
                        m[top], m[i] = m[i], m[top]
                        dirty = True
                        break
            if dirty:
                continue
            for j in range(top + 1, ncols):
                if m[top][j]:
                    q = m[top][j] // pivot
                    for i in range(top, nrows):
                        m[i][j] -= q * m[i][top]
                    if m[top][j]:
                        for row in m:
                            row[top], row[j] = row[j], row[top]
                        dirty = True
                        break
            if not dirty:
                break
        # ensure divisibility of the remaining block by the pivot
        pivot = m[top][top]
        offender = None
        for i in range(top + 1, nrows):
            for j in range(top + 1, ncols):
                if m[i][j] % pivot:
                    offender = i
                    break
            if offender is not None:
                break
        if offender is not None:
            for j in range(top, ncols):
                m[top][j] += m[offender][j]
            continue
        diag.append(abs(pivot))
        top += 1
    return diag
