"""Spectral sequences of finite filtered complexes.

Filtrations are decreasing, F^s = span of basis states with filt >= s, and
must satisfy D(F^s) in F^s.  Everything is computed one internal grade at a
time since D preserves grade.  Pages use the approximate-cycle subquotients

    Z_r^s = {x in F^s : Dx in F^{s+r}}
    E_r^s = Z_r^s / (Z_{r-1}^{s+1} + D Z_{r-1}^{s-r+1})

with d_r induced by D, so the page differentials are explicit matrices.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from .brst import differential_commutator, enumerate_block, ghost_range, TruncationSpec
from .exactlin import (
    SparseMatrix, dense_rank, format_rational, independent_subset, nullspace, solve_in_span,
)
from .fock import (
    FockState, LinComb, ghost, grade, is_c0, li_grade, render,
)


class IncompatibleFiltration(ValueError):
    def __init__(self, state, target):
        super().__init__(f"D({render(state)}) has term {render(target)} of lower filtration")
        self.state = state
        self.target = target


@dataclass
class GradePiece:
    """One internal grade of a finite complex: bases by ghost degree and D."""

    grade: int
    bases: dict  # n -> list of states
    filt: dict   # n -> list of filtration values
    dmat: dict   # n -> dense rows (dim n+1) x (dim n)

    def dim(self, n: int) -> int:
        return len(self.bases.get(n, ()))

    def apply(self, n: int, x: list) -> list:
        rows = self.dmat.get(n)
        if rows is None:
            return [Fraction(0)] * self.dim(n + 1)
        return [sum((a * b for a, b in zip(row, x) if a and b), Fraction(0)) for row in rows]


@dataclass
class FilteredComplex:
    pieces: dict  # grade -> GradePiece
    filt: Callable
    name: str = "filtered"
    c0: bool = False

    @property
    def grades(self) -> list:
        return sorted(self.pieces)


def build_filtered(blocks: dict, differential: Callable, filt: Callable, name: str = "filtered",
                   check: bool = True, c0: bool = False) -> FilteredComplex:
    """``blocks`` maps (n, grade) to ordered basis lists."""
    pieces = {}
    for w in sorted({w for _, w in blocks}):
        bases = {n: list(b) for (n, w2), b in blocks.items() if w2 == w and b}
        filts = {n: [filt(s) for s in b] for n, b in bases.items()}
        dmat = {}
        for n, b in bases.items():
            target = bases.get(n + 1)
            if not target:
                continue
            index = {s: i for i, s in enumerate(target)}
            tf = filts[n + 1]
            rows = [[Fraction(0)] * len(b) for _ in target]
            for j, s in enumerate(b):
                fs = filts[n][j]
                for t, c in differential(s).terms.items():
                    i = index.get(t)
                    if i is None:
                        raise KeyError(f"D({render(s)}) leaves the complex: {render(t)}")
                    if check and tf[i] < fs:
                        raise IncompatibleFiltration(s, t)
                    rows[i][j] = c
            dmat[n] = rows
        pieces[w] = GradePiece(w, bases, filts, dmat)
    return FilteredComplex(pieces, filt, name, c0)


def check_compatible(fc: FilteredComplex) -> None:
    for piece in fc.pieces.values():
        for n, rows in piece.dmat.items():
            src = piece.filt[n]
            tgt = piece.filt[n + 1]
            for i, row in enumerate(rows):
                for j, c in enumerate(row):
                    if c and tgt[i] < src[j]:
                        raise IncompatibleFiltration(piece.bases[n][j], piece.bases[n + 1][i])


# Complexes used by the package.

def c0_states(flow: int, max_grade: int, max_excitations: int = 0) -> dict:
    """C0: d~ and phi* modes on the (dressed, for negative flow) vacuum at mu 0.

    Returns {(ghost, grade): basis}.  Grades are mode weights of the bare state.
    """
    spec = TruncationSpec(flow=flow, max_grade=max_grade, window=0, max_excitations=max_excitations)
    out = {}
    ell = max(0, -flow)
    dressing = set(range(-ell, 0))
    lo = ell * (ell + 1) // 2
    for w in range(lo, max_grade + 1):
        for p in ghost_range(spec, w):
            b = [s for s in enumerate_block(spec, p, w) if is_c0(s) and dressing <= set(s.ps)]
            if b:
                out[(p, w)] = b
    return out


def li_complex(flow: int = 0, max_grade: int = 8, max_excitations: int = 0) -> FilteredComplex:
    return build_filtered(c0_states(flow, max_grade, max_excitations), differential_commutator,
                          li_grade, name="li", c0=True)


def trivial_filtration(blocks: dict, differential=differential_commutator) -> FilteredComplex:
    return build_filtered(blocks, differential, lambda s: 0, name="trivial")


def mode_count_filtration(blocks: dict, differential=differential_commutator) -> FilteredComplex:
    """grade - (number of modes); D can only delete modes, so this is compatible."""
    def filt(s):
        return grade(s) - len(s.dt) - len(s.ec) - len(s.ph) - len(s.ps)
    return build_filtered(blocks, differential, filt, name="mode-count")


# Linear algebra on one (grade, ghost) slot.

def _unit_vectors(dim: int, idx) -> list:
    out = []
    for i in idx:
        v = [Fraction(0)] * dim
        v[i] = Fraction(1)
        out.append(v)
    return out


def _span(vectors: list) -> list:
    return [vectors[i] for i in independent_subset(vectors)]


def _F(piece: GradePiece, n: int, s: int) -> list:
    f = piece.filt.get(n, [])
    return _unit_vectors(len(f), [i for i, v in enumerate(f) if v >= s])


def _Z(piece: GradePiece, n: int, s: int, r: int) -> list:
    """Basis of {x in F^s C^n : Dx in F^{s+r} C^{n+1}} for r >= 0."""
    fvecs = _F(piece, n, s)
    if not fvecs:
        return []
    tf = piece.filt.get(n + 1, [])
    bad = [i for i, v in enumerate(tf) if v < s + r]
    if not bad or n not in piece.dmat:
        return fvecs
    images = [piece.apply(n, x) for x in fvecs]
    # constraint rows: the low-filtration coordinates of D x, as a function of the F^s coefficients
    rows = [[img[i] for img in images] for i in bad]
    if dense_rank(rows) == 0:
        return fvecs
    coeffs = nullspace(rows, len(fvecs))
    dim = piece.dim(n)
    out = []
    for c in coeffs:
        v = [Fraction(0)] * dim
        for a, fv in zip(c, fvecs):
            if a:
                v = [x + a * y for x, y in zip(v, fv)]
        out.append(v)
    return out


def _Zr(piece, n, s, r):
    # Z_{-1}^s = F^s
    if r < 0:
        return _F(piece, n, s)
    return _Z(piece, n, s, r)


def _denominator(piece: GradePiece, n: int, s: int, r: int) -> list:
    """Basis of Z_{r-1}^{s+1} + D Z_{r-1}^{s-r+1} inside C^n."""
    vecs = list(_Zr(piece, n, s + 1, r - 1))
    if n - 1 in piece.bases:
        for x in _Zr(piece, n - 1, s - r + 1, r - 1):
            vecs.append(piece.apply(n - 1, x))
    return _span([v for v in vecs if any(v)])


@dataclass
class PageSlot:
    reps: list       # chosen representatives of a basis of E_r^{s,n}
    denom: list      # basis of the denominator subspace


def _slot(piece: GradePiece, n: int, s: int, r: int) -> PageSlot:
    z = _Z(piece, n, s, r)
    denom = _denominator(piece, n, s, r)
    picked = independent_subset(z, start=denom)
    return PageSlot([z[i] for i in picked], denom)


@dataclass
class Page:
    r: int
    dims: dict = field(default_factory=dict)            # (p, q) -> dim, summed over grades
    by_grade: dict = field(default_factory=dict)        # grade -> {(p, q): dim}
    differentials: dict = field(default_factory=dict)   # (grade, p, q) -> SparseMatrix to (p+r, q-r+1)

    def total(self) -> int:
        return sum(self.dims.values())

    def nonzero(self) -> dict:
        return {k: v for k, v in sorted(self.dims.items()) if v}

    def differentials_vanish(self) -> bool:
        return all(m.is_zero() for m in self.differentials.values())

    def dump(self) -> str:
        lines = [f"# page {self.r}"]
        lines += [f"{p} {q} {d}" for (p, q), d in sorted(self.dims.items()) if d]
        for (w, p, q), m in sorted(self.differentials.items()):
            if m.is_zero():
                continue
            lines.append(f"# d{self.r} grade {w} from {p} {q} to {p + self.r} {q - self.r + 1}")
            lines += [f"{i} {j} {format_rational(v)}" for i, j, v in m.triplets()]
        return "\n".join(lines) + "\n"


def _filt_range(piece: GradePiece) -> tuple[int, int]:
    vals = [v for f in piece.filt.values() for v in f]
    return (min(vals), max(vals)) if vals else (0, 0)


def _coords(slot_reps: list, denom: list, v: list) -> list:
    basis = slot_reps + denom
    if not basis:
        return []
    c = solve_in_span(basis, v)
    if c is None:
        raise ArithmeticError("d_r image outside the target cycle space")
    return c[:len(slot_reps)]


def page(fc: FilteredComplex, r: int, with_differentials: bool = True) -> Page:
    if r < 0:
        raise ValueError("page index must be >= 0")
    check_compatible(fc)
    out = Page(r)
    for w, piece in sorted(fc.pieces.items()):
        lo, hi = _filt_range(piece)
        slots = {}
        for n in piece.bases:
            for s in range(lo, hi + 1):
                slot = _slot(piece, n, s, r)
                slots[(n, s)] = slot
                if slot.reps:
                    key = (s, n - s)
                    out.by_grade.setdefault(w, {})[key] = len(slot.reps)
                    out.dims[key] = out.dims.get(key, 0) + len(slot.reps)
        if not with_differentials:
            continue
        for (n, s), slot in slots.items():
            tgt = slots.get((n + 1, s + r))
            if not slot.reps or tgt is None or not tgt.reps:
                continue
            entries = {}
            for j, x in enumerate(slot.reps):
                for i, c in enumerate(_coords(tgt.reps, tgt.denom, piece.apply(n, x))):
                    if c:
                        entries[(i, j)] = c
            out.differentials[(w, s, n - s)] = SparseMatrix(len(tgt.reps), len(slot.reps), entries)
    return out


def cohomology_dims(fc: FilteredComplex) -> dict:
    """{(grade, n): dim H^n} from ranks."""
    out = {}
    for w, piece in fc.pieces.items():
        ranks = {n: dense_rank(rows) for n, rows in piece.dmat.items()}
        for n in piece.bases:
            h = piece.dim(n) - ranks.get(n, 0) - ranks.get(n - 1, 0)
            if h:
                out[(w, n)] = h
    return out


def detect_collapse(fc: FilteredComplex) -> tuple[int, Page]:
    """Smallest r after which every differential vanishes, and E_infinity.

    Bounded convergence gives sum dim E_r >= sum dim H with equality exactly
    when all later differentials vanish, so the search stops there.
    """
    h_total = sum(cohomology_dims(fc).values())
    span = max((b - a for a, b in map(_filt_range, fc.pieces.values())), default=0)
    r = 0
    while True:
        pg = page(fc, r, with_differentials=False)
        if pg.total() == h_total:
            return r, pg
        if r > span + 1:
            raise ArithmeticError("spectral sequence failed to converge on a finite complex")
        r += 1


def e0_differential_closed_form(state: FockState) -> LinComb:
    """Li-grade-preserving part of D on a C0 state."""
    if not is_c0(state):
        raise ValueError(f"not a C0 state: {render(state)}")
    acc = {}
    for i, a in enumerate(state.dt):
        if a in state.ps:
            continue
        ps = tuple(sorted(state.ps + (a,)))
        sign = -1 if sum(1 for b in state.ps if b < a) % 2 else 1
        t = state._replace(dt=state.dt[:i] + state.dt[i + 1:], ps=ps)
        acc[t] = acc.get(t, 0) + sign
    return LinComb(acc)


def generic_e0(fc: FilteredComplex, state: FockState, e0: Page | None = None) -> LinComb:
    """The d_0 image of one basis state, read off the matrices of page(fc, 0).

    E_0 representatives are the basis states of filtration exactly s, in basis order.
    """
    e0 = e0 if e0 is not None else page(fc, 0)
    w, n = grade(state), ghost(state)
    piece = fc.pieces[w]
    s = fc.filt(state)
    src = [x for x, f in zip(piece.bases[n], piece.filt[n]) if f == s]
    tgt = [x for x, f in zip(piece.bases.get(n + 1, []), piece.filt.get(n + 1, [])) if f == s]
    m = e0.differentials.get((w, s, n - s))
    if m is None:
        return LinComb()
    j = src.index(state)
    return LinComb({tgt[i]: v for (i, jj), v in m.entries.items() if jj == j})


@dataclass
class AuditRecord:
    bounded_convergence: bool
    exhaustive: bool
    hausdorff: bool
    conformally_bounded: bool
    collapse_page: int
    details: dict
    compatible: bool = True

    @property
    def ok(self) -> bool:
        return (self.compatible and self.bounded_convergence and self.exhaustive and self.hausdorff
                and self.conformally_bounded)


def convergence_audit(fc: FilteredComplex) -> AuditRecord:
    details = {"convergence_failures": [], "boundedness_failures": []}
    try:
        check_compatible(fc)
    except IncompatibleFiltration as exc:
        details["incompatible"] = render(exc.state)
        return AuditRecord(False, False, False, False, -1, details, compatible=False)
    r, einf = detect_collapse(fc)
    h = cohomology_dims(fc)
    for w, piece in fc.pieces.items():
        e = einf.by_grade.get(w, {})
        for n in piece.bases:
            total = sum(d for (p, q), d in e.items() if p + q == n)
            if total != h.get((w, n), 0):
                details["convergence_failures"].append([w, n])
    exhaustive = hausdorff = True
    for w, piece in fc.pieces.items():
        for n, f in piece.filt.items():
            # bounds independent of the truncation: F^0 is the whole grade-w
            # piece and F^{w+1} vanishes on it
            if any(v < 0 for v in f):
                exhaustive = False
                details.setdefault("exhaustive_failures", []).append([w, n])
            if any(v > w for v in f):
                hausdorff = False
                details.setdefault("hausdorff_failures", []).append([w, n])
    bounded = True
    if fc.c0:
        for piece in fc.pieces.values():
            for b in piece.bases.values():
                for s in b:
                    if li_grade(s) > grade(s):
                        bounded = False
                        details["boundedness_failures"].append(render(s))
    return AuditRecord(not details["convergence_failures"], exhaustive, hausdorff, bounded, r, details)
