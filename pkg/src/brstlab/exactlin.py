"""Exact rational linear algebra.

Scalars are :class:`fractions.Fraction`.  Ranks are computed by sparse
fraction-free elimination on integer rows, so no floating point is ever
involved.  The dense helpers at the bottom are used for the small subquotient
computations of the spectral sequence pages and as a test oracle.
"""

from __future__ import annotations

import heapq
from fractions import Fraction
from functools import cached_property
from math import gcd, lcm
from typing import Iterable, Mapping

Rational = Fraction


class ShapeError(ValueError):
    pass


def as_rational(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, int):
        return Fraction(x)
    raise TypeError(f"not an exact scalar: {x!r}")


def format_rational(x: Fraction) -> str:
    x = as_rational(x)
    return f"{x.numerator}/{x.denominator}"


class SparseMatrix:
    """Immutable sparse matrix over the rationals.

    Only nonzero entries are stored.  Equality compares shape and entries.
    """

    def __init__(self, rows: int, cols: int, entries: Mapping | Iterable = ()):
        if rows < 0 or cols < 0:
            raise ShapeError(f"negative shape {rows}x{cols}")
        self.rows = rows
        self.cols = cols
        items = entries.items() if isinstance(entries, Mapping) else entries
        data = {}
        for (i, j), v in items:
            if not (0 <= i < rows and 0 <= j < cols):
                raise IndexError(f"entry ({i}, {j}) outside {rows}x{cols}")
            v = as_rational(v)
            if v:
                data[(i, j)] = v
        self._entries = data

    @classmethod
    def from_dense(cls, rows: list[list]) -> "SparseMatrix":
        ncols = len(rows[0]) if rows else 0
        entries = {}
        for i, row in enumerate(rows):
            if len(row) != ncols:
                raise ShapeError("ragged dense matrix")
            for j, v in enumerate(row):
                if v:
                    entries[(i, j)] = v
        return cls(len(rows), ncols, entries)

    @classmethod
    def identity(cls, n: int) -> "SparseMatrix":
        return cls(n, n, {(i, i): 1 for i in range(n)})

    @classmethod
    def zero(cls, rows: int, cols: int) -> "SparseMatrix":
        return cls(rows, cols)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    @property
    def entries(self) -> dict:
        return dict(self._entries)

    @property
    def nnz(self) -> int:
        return len(self._entries)

    def __getitem__(self, key) -> Fraction:
        return self._entries.get(key, Fraction(0))

    def is_zero(self) -> bool:
        return not self._entries

    def triplets(self) -> list[tuple[int, int, Fraction]]:
        return [(i, j, v) for (i, j), v in sorted(self._entries.items())]

    def transpose(self) -> "SparseMatrix":
        return SparseMatrix(self.cols, self.rows, {(j, i): v for (i, j), v in self._entries.items()})

    def to_dense(self) -> list[list[Fraction]]:
        out = [[Fraction(0)] * self.cols for _ in range(self.rows)]
        for (i, j), v in self._entries.items():
            out[i][j] = v
        return out

    def row_dicts(self) -> list[dict[int, Fraction]]:
        out = [{} for _ in range(self.rows)]
        for (i, j), v in self._entries.items():
            out[i][j] = v
        return out

    def __eq__(self, other):
        if not isinstance(other, SparseMatrix):
            return NotImplemented
        return self.shape == other.shape and self._entries == other._entries

    def __hash__(self):
        return hash((self.rows, self.cols, frozenset(self._entries.items())))

    def __repr__(self):
        return f"SparseMatrix({self.rows}x{self.cols}, nnz={self.nnz})"

    @cached_property
    def rank(self) -> int:
        return _sparse_rank(self)


def _integer_rows(m: SparseMatrix) -> list[dict[int, int]]:
    rows = []
    for row in m.row_dicts():
        if not row:
            continue
        scale = lcm(*(v.denominator for v in row.values()))
        ints = {j: int(v * scale) for j, v in row.items()}
        g = 0
        for v in ints.values():
            g = gcd(g, v)
        rows.append({j: v // g for j, v in ints.items()})
    return rows


def _sparse_rank(m: SparseMatrix) -> int:
    # Work on whichever orientation has fewer rows; rank is symmetric.
    if m.rows > m.cols:
        m = m.transpose()
    rows = _integer_rows(m)
    col_rows: dict[int, set[int]] = {}
    for i, row in enumerate(rows):
        for j in row:
            col_rows.setdefault(j, set()).add(i)
    heap = [(len(row), i) for i, row in enumerate(rows)]
    heapq.heapify(heap)
    alive = set(range(len(rows)))
    rank = 0
    while heap:
        n, i = heapq.heappop(heap)
        if i not in alive or n != len(rows[i]):
            continue
        alive.discard(i)
        row = rows[i]
        if not row:
            continue
        # Pivot column: fewest other rows to update, then smallest entry.
        c = min(row, key=lambda j: (len(col_rows[j]), abs(row[j]), j))
        p = row[c]
        for j in row:
            col_rows[j].discard(i)
        for k in list(col_rows[c]):
            target = rows[k]
            a = target[c]
            g = gcd(p, a)
            sp, sa = p // g, a // g
            new = {}
            for j, v in target.items():
                v = sp * v
                if v:
                    new[j] = v
            for j, v in row.items():
                w = new.get(j, 0) - sa * v
                if w:
                    new[j] = w
                else:
                    new.pop(j, None)
            g = 0
            for v in new.values():
                g = gcd(g, v)
                if g == 1:
                    break
            if g > 1:
                new = {j: v // g for j, v in new.items()}
            for j in target:
                if j not in new:
                    col_rows[j].discard(k)
            for j in new:
                if j not in target:
                    col_rows.setdefault(j, set()).add(k)
            rows[k] = new
            heapq.heappush(heap, (len(new), k))
        rows[i] = {}
        rank += 1
    return rank


def rank(m: SparseMatrix) -> int:
    return m.rank


def kernel_dim(m: SparseMatrix) -> int:
    return m.cols - m.rank


def compose(a: SparseMatrix, b: SparseMatrix) -> SparseMatrix:
    """The product ``a @ b``."""
    if a.cols != b.rows:
        raise ShapeError(f"cannot compose {a.rows}x{a.cols} with {b.rows}x{b.cols}")
    b_rows = b.row_dicts()
    out: dict[tuple[int, int], Fraction] = {}
    for (i, k), v in a._entries.items():
        for j, w in b_rows[k].items():
            out[(i, j)] = out.get((i, j), 0) + v * w
    return SparseMatrix(a.rows, b.cols, out)


# Dense helpers.  Matrices are lists of rows of Fractions.

def rref(rows: list[list[Fraction]]) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form and pivot columns (plain Gaussian elimination)."""
    m = [[as_rational(x) for x in r] for r in rows]
    if not m:
        return m, []
    ncols = len(m[0])
    pivots = []
    r = 0
    for c in range(ncols):
        pr = next((i for i in range(r, len(m)) if m[i][c]), None)
        if pr is None:
            continue
        m[r], m[pr] = m[pr], m[r]
        inv = 1 / m[r][c]
        m[r] = [x * inv for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c]:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m[:r], pivots


def dense_rank(rows: list[list]) -> int:
    return len(rref(rows)[1])


def nullspace(rows: list[list], ncols: int) -> list[list[Fraction]]:
    """Basis of {x : A x = 0} for the dense matrix ``rows`` with ``ncols`` columns."""
    if not rows:
        return [[Fraction(int(i == j)) for j in range(ncols)] for i in range(ncols)]
    red, pivots = rref(rows)
    free = [c for c in range(ncols) if c not in set(pivots)]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for r, c in enumerate(pivots):
            v[c] = -red[r][f]
        basis.append(v)
    return basis


def independent_subset(vectors: list[list], start: list[list] = ()) -> list[int]:
    """Indices of ``vectors`` that extend the span of ``start`` greedily."""
    basis: list[tuple[int, list[Fraction]]] = []

    def reduce(v):
        v = list(v)
        for c, b in basis:
            if v[c]:
                f = v[c]
                v = [x - f * y for x, y in zip(v, b)]
        return v

    def insert(v):
        c = next(i for i, x in enumerate(v) if x)
        inv = 1 / v[c]
        v = [x * inv for x in v]
        for k, (c2, b) in enumerate(basis):
            if b[c]:
                f = b[c]
                basis[k] = (c2, [x - f * y for x, y in zip(b, v)])
        basis.append((c, v))

    for v in start:
        v = reduce([as_rational(x) for x in v])
        if any(v):
            insert(v)
    chosen = []
    for idx, v in enumerate(vectors):
        v = reduce([as_rational(x) for x in v])
        if any(v):
            insert(v)
            chosen.append(idx)
    return chosen


def solve_in_span(basis: list[list[Fraction]], v: list[Fraction]) -> list[Fraction] | None:
    """Coefficients expressing ``v`` in the (independent) ``basis``, or None."""
    n = len(basis)
    if n == 0:
        return [] if not any(v) else None
    dim = len(v)
    # Columns are basis vectors; augment with v.
    aug = [[basis[j][i] for j in range(n)] + [v[i]] for i in range(dim)]
    red, pivots = rref(aug)
    if n in pivots:
        return None
    coeffs = [Fraction(0)] * n
    for r, c in enumerate(pivots):
        coeffs[c] = red[r][n]
    return coeffs
