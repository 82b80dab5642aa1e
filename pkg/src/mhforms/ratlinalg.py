"""Dense exact linear algebra over Fraction for small matrices.

Matrices are lists of lists of Fraction.  Everything here is plain Gaussian
elimination; sizes stay in the low hundreds at desk scale.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import DomainError


def _copy(mat):
    return [[Fraction(v) for v in row] for row in mat]


def rref(mat, ncols=None):
    """Reduced row echelon form; returns (rows, pivot column list)."""
    rows = _copy(mat)
    if not rows:
        return rows, []
    ncols = ncols if ncols is not None else len(rows[0])
    pivots = []
    r = 0
    for c in range(ncols):
        pivot_row = None
        for i in range(r, len(rows)):
            if rows[i][c] != 0:
                pivot_row = i
                break
        if pivot_row is None:
            continue
        rows[r], rows[pivot_row] = rows[pivot_row], rows[r]
        pv = rows[r][c]
        rows[r] = [v / pv for v in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    return rows, pivots


def nullspace(mat, ncols):
    """Basis of the right nullspace; one vector per free column."""
    if not mat:
        basis = []
        for j in range(ncols):
            v = [Fraction(0)] * ncols
            v[j] = Fraction(1)
            basis.append(v)
        return basis
    rows, pivots = rref(mat, ncols)
    pivot_set = set(pivots)
    free = [c for c in range(ncols) if c not in pivot_set]
    basis = []
    for fc in free:
        v = [Fraction(0)] * ncols
        v[fc] = Fraction(1)
        for r, pc in enumerate(pivots):
            v[pc] = -rows[r][fc]
        basis.append(v)
    return basis


def det(mat):
    """Determinant by fraction GE with partial (first nonzero) pivoting."""
    rows = _copy(mat)
    n = len(rows)
    sign = 1
    result = Fraction(1)
    for c in range(n):
        pivot_row = None
        for i in range(c, n):
            if rows[i][c] != 0:
                pivot_row = i
                break
        if pivot_row is None:
            return Fraction(0)
        if pivot_row != c:
            rows[c], rows[pivot_row] = rows[pivot_row], rows[c]
            sign = -sign
        pv = rows[c][c]
        result *= pv
        for i in range(c + 1, n):
            if rows[i][c] != 0:
                f = rows[i][c] / pv
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[c])]
    return sign * result


class SingularMatrixError(DomainError):
    pass


class LU:
    """Exact LU factorization with row swaps; reusable solves."""

    def __init__(self, mat):
        self.n = len(mat)
        rows = _copy(mat)
        self.perm = list(range(self.n))
        self.low = [[Fraction(0)] * self.n for _ in range(self.n)]
        for c in range(self.n):
            pivot_row = None
            for i in range(c, self.n):
                if rows[i][c] != 0:
                    pivot_row = i
                    break
            if pivot_row is None:
                raise SingularMatrixError("matrix is singular")
            if pivot_row != c:
                rows[c], rows[pivot_row] = rows[pivot_row], rows[c]
                self.low[c], self.low[pivot_row] = self.low[pivot_row], self.low[c]
                self.perm[c], self.perm[pivot_row] = (
                    self.perm[pivot_row],
                    self.perm[c],
                )
            pv = rows[c][c]
            for i in range(c + 1, self.n):
                if rows[i][c] != 0:
                    f = rows[i][c] / pv
                    self.low[i][c] = f
                    rows[i] = [a - f * b for a, b in zip(rows[i], rows[c])]
        self.up = rows

    def solve(self, b):
        if len(b) != self.n:
            raise DomainError("right-hand side has wrong length")
        pb = [Fraction(b[self.perm[i]]) for i in range(self.n)]
        y = [Fraction(0)] * self.n
        for i in range(self.n):
            y[i] = pb[i] - sum(self.low[i][j] * y[j] for j in range(i))
        x = [Fraction(0)] * self.n
        for i in range(self.n - 1, -1, -1):
            s = y[i] - sum(self.up[i][j] * x[j] for j in range(i + 1, self.n))
            x[i] = s / self.up[i][i]
        return x


def solve(mat, b):
    return LU(mat).solve(b)


def ldl(gram):
    """LDL^T of a symmetric positive definite matrix; returns (L, D)."""
    n = len(gram)
    low = [[Fraction(1) if i == j else Fraction(0) for j in range(n)] for i in range(n)]
    diag = [Fraction(0)] * n
    for j in range(n):
        dj = Fraction(gram[j][j]) - sum(low[j][l] ** 2 * diag[l] for l in range(j))
        if dj <= 0:
            raise DomainError("matrix is not positive definite")
        diag[j] = dj
        for i in range(j + 1, n):
            s = Fraction(gram[i][j]) - sum(
                low[i][l] * low[j][l] * diag[l] for l in range(j)
            )
            low[i][j] = s / dj
    return low, diag
