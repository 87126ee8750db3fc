"""Truncated BRST complexes: basis enumeration, the differential, boundary matrices.

The differential is D = sum_k e^c_k phi*_{-k} + phi*_0, characterised by

    [D, phi_n} = e^c_n + delta_{n,0},   [D, d~_n] = phi*_n,
    [D, e^c_n] = {D, phi*_n} = 0.

Truncation keeps mu in a finite window.  At the top of the window the states
on which D would raise mu out of the window are dropped, which keeps the
retained span a subcomplex.  For negative flow the e^c modes with index in
[0, -flow-1] have non-positive weight, so the number of such excitations is
capped as well (see :func:`excitations`); D never increases that count, so
the capped span is again a subcomplex.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations_with_replacement
from typing import Mapping

from .combinatorics import partition_tuples
from .exactlin import SparseMatrix, format_rational
from .fock import (
    FERMIONIC, ONE, Family, FockState, LinComb, ModeOp, _add, _apply, _from_modes, _to_modes,
    clear_caches, ghost, grade, normal_order, render,
)


class WindowLeakage(RuntimeError):
    """A D-image left the enumerated target block."""


@dataclass(frozen=True)
class TruncationSpec:
    flow: int = 0
    max_grade: int = 4
    window: int = 2
    module_dims: Mapping[int, int] = field(default_factory=lambda: {0: 1})
    max_excitations: int = 0
    mu_start: int = 0

    def __post_init__(self):
        if self.max_grade < 0:
            raise ValueError("max_grade must be >= 0")
        if self.window < 0:
            raise ValueError("window must be >= 0")
        if self.max_excitations < 0:
            raise ValueError("max_excitations must be >= 0")
        dims = {int(k): int(v) for k, v in dict(self.module_dims).items()}
        for g, d in dims.items():
            if not 0 <= g <= self.max_grade:
                raise ValueError(f"module_dims grade {g} outside 0..{self.max_grade}")
            if d < 0:
                raise ValueError(f"module_dims entry {g} -> {d} is negative")
        object.__setattr__(self, "module_dims", dims)

    def __hash__(self):
        return hash((self.flow, self.max_grade, self.window, tuple(sorted(self.module_dims.items())),
                     self.max_excitations, self.mu_start))

    @property
    def mu_range(self) -> range:
        return range(self.mu_start, self.mu_start + self.window + 1)

    @property
    def mu_top(self) -> int:
        return self.mu_start + self.window

    def min_grade(self) -> int:
        f = self.flow
        if f >= 0:
            return f * self.mu_start
        return f * self.mu_top + self.max_excitations * (f + 1)

    def grades(self) -> range:
        return range(self.min_grade(), self.max_grade + 1)

    def replace(self, **kw) -> "TruncationSpec":
        data = dict(flow=self.flow, max_grade=self.max_grade, window=self.window,
                    module_dims=self.module_dims, max_excitations=self.max_excitations,
                    mu_start=self.mu_start)
        data.update(kw)
        return TruncationSpec(**data)


def excitations(s: FockState) -> int:
    """Excitation count capped for negative flow -l (always 0 otherwise).

    Counts e^c modes with index in [0, l-1], phi_0, holes of the dressing at
    phi*_{-n} for 1 <= n <= l-1, and d~_{-n} with 1 <= n <= l.  The last are
    closed against the dressing and, uncapped, stack up at the bottom edge of
    the mu-window.  D never increases this count.
    """
    ell = -s.flow
    if ell <= 0:
        return 0
    low = sum(1 for n in s.ec if n >= 0) + sum(1 for n in s.dt if n >= -ell)
    zero = 1 if s.ph and s.ph[-1] == 0 else 0
    present = set(s.ps)
    holes = sum(1 for n in range(1, ell) if -n not in present)
    return low + zero + holes


def allowed(spec: TruncationSpec, s: FockState) -> bool:
    """Window and excitation rules (mode ranges are assumed valid)."""
    if s.flow != spec.flow or s.mu_offset not in spec.mu_range:
        return False
    if excitations(s) > spec.max_excitations:
        return False
    if s.mu_offset == spec.mu_top:
        f = spec.flow
        if f >= 0:
            return -f not in s.ph
        return f in s.ps
    return True


# Per-family index tuples of a given total weight, cached.

@lru_cache(maxsize=None)
def _dt(n: int) -> tuple:
    return tuple(tuple(-p for p in parts) for parts in partition_tuples(n))


@lru_cache(maxsize=None)
def _ec(n: int, min_weight: int) -> tuple:
    return tuple(tuple(-p for p in parts) for parts in partition_tuples(n, min_part=min_weight))


@lru_cache(maxsize=None)
def _fermi(n: int) -> tuple:
    """Strictly negative index sets of weight n, grouped as {count: [tuples]}."""
    by_count: dict[int, list] = {}
    for parts in partition_tuples(n, distinct=True):
        by_count.setdefault(len(parts), []).append(tuple(-p for p in parts))
    return tuple(sorted((k, tuple(v)) for k, v in by_count.items()))


def _fermi_count(n: int) -> dict:
    return dict(_fermi(n))


@lru_cache(maxsize=None)
def _low_ec(ell: int, cap: int) -> tuple:
    """Multisets of e^c indices in [0, ell-1] of size <= cap, as (weight, tuple)."""
    out = []
    for size in range(cap + 1):
        for combo in combinations_with_replacement(range(ell), size):
            out.append((-sum(combo), tuple(combo)))
    return tuple(out)


def enumerate_block(spec: TruncationSpec, p: int, w: int) -> list[FockState]:
    if w > spec.max_grade:
        raise ValueError(f"grade {w} exceeds max_grade {spec.max_grade}")
    f = spec.flow
    K = spec.max_excitations
    out = []
    for mu in spec.mu_range:
        m = w - f * mu
        top = mu == spec.mu_top
        if f >= 0:
            lows = ((0, ()),)
            ec_min = f + 1
        else:
            lows = _low_ec(-f, K)
            ec_min = 1
        for low_w, low in lows:
            for z in (0, 1):
                if f < 0 and len(low) + z > K:
                    continue
                if top and f == 0 and z:
                    continue
                rest = m - low_w
                if rest < 0:
                    continue
                _fill(out, spec, mu, p, rest, low, z, ec_min, top)
    return out


def _fill(out, spec, mu, p, rest, low, z, ec_min, top):
    f = spec.flow
    K = spec.max_excitations
    ell = -f
    for a in range(rest + 1):
        dts = _dt(a)
        for b in range(rest - a + 1):
            ecs = _ec(b, ec_min)
            if not ecs:
                continue
            for c in range(rest - a - b + 1):
                d = rest - a - b - c
                ph_groups = _fermi_count(c)
                ps_groups = _fermi_count(d)
                for nph, phs in ph_groups.items():
                    nps = p + nph + z
                    pss = ps_groups.get(nps)
                    if not pss:
                        continue
                    for ps in pss:
                        if f < 0:
                            present = set(ps)
                            holes = sum(1 for n in range(1, ell) if -n not in present)
                            if len(low) + z + holes > K:
                                continue
                            if top and f not in present:
                                continue
                            budget = K - len(low) - z - holes
                        for ph in phs:
                            if top and f > 0 and -f in ph:
                                continue
                            full_ph = ph + (0,) if z else ph
                            for ec in ecs:
                                full_ec = ec + low
                                for dt in dts:
                                    if f < 0 and sum(1 for n in dt if n >= f) > budget:
                                        continue
                                    out.append(FockState(f, mu, dt, full_ec, full_ph, ps))


def block_grid(spec: TruncationSpec) -> list[tuple[int, int]]:
    """All (ghost, grade) pairs with a nonempty block, sorted by grade then ghost."""
    cells = []
    for w in spec.grades():
        for p in ghost_range(spec, w):
            if enumerate_block(spec, p, w):
                cells.append((p, w))
    return cells


def ghost_range(spec: TruncationSpec, w: int) -> range:
    """Ghost degrees that can occur at grade w (a safe superset)."""
    f = spec.flow
    if f >= 0:
        budget = w - f * spec.mu_start
    else:
        budget = w - f * spec.mu_top + spec.max_excitations * (-f - 1)
    # A fermionic set of size n has weight >= n(n-1)/2 (phi) or n(n+1)/2 (phi*).
    n = 0
    while (n + 1) * n // 2 <= budget:
        n += 1
    return range(-n - 1, n + 2)


# The differential.

def _bracket_D(m: ModeOp) -> tuple:
    fam, n = m
    if fam == Family.DT:
        return ((ModeOp(Family.PS, n), ONE),)
    if fam == Family.PH:
        terms = ((ModeOp(Family.EC, n), ONE),)
        if n == 0:
            terms += ((None, ONE),)
        return terms
    return ()


@lru_cache(maxsize=None)
def _D_vacuum(flow: int, mu: int) -> tuple:
    acc: dict = {}
    for k in range(1, max(0, -flow) + 1):
        for (mu1, m1), c1 in _apply(ModeOp(Family.PS, -k), flow, mu, ()):
            for key, c2 in _apply(ModeOp(Family.EC, k), flow, mu1, m1):
                _add(acc, key, c1 * c2)
    return tuple(acc.items())


@lru_cache(maxsize=1 << 18)
def _D(flow: int, mu: int, modes: tuple) -> tuple:
    # D (m1 rest) = [D, m1} rest + eps m1 D(rest)
    if not modes:
        return _D_vacuum(flow, mu)
    head, tail = modes[0], modes[1:]
    eps = -1 if FERMIONIC[head[0]] else 1
    acc: dict = {}
    for x, c in _bracket_D(head):
        if x is None:
            _add(acc, (mu, tail), c)
        else:
            for key, c2 in _apply(x, flow, mu, tail):
                _add(acc, key, c * c2)
    for (mu2, m2), c in _D(flow, mu, tail):
        for key, c2 in _apply(head, flow, mu2, m2):
            _add(acc, key, eps * c * c2)
    return tuple(acc.items())


def differential_commutator(state: FockState) -> LinComb:
    out = {}
    for (mu, modes), c in _D(state.flow, state.mu_offset, _to_modes(state)):
        out[_from_modes(state.flow, mu, modes)] = c
    return LinComb(out)


def clear_differential_caches() -> None:
    _D.cache_clear()
    _D_vacuum.cache_clear()
    clear_caches()


def to_dressed_word(state: FockState) -> tuple[tuple, FockState, int]:
    """Rewrite a bare state as (mode word, generating state, sign).

    For flow >= 0 the word is the state's own monomial on the bare vacuum.
    For flow -l < 0 the generating state is phi*_{-l}..phi*_{-1} on the bare
    vacuum; dressing holes become positive phi modes and the remaining phi*
    modes are the ones below -l.  The sign satisfies
    state = sign * normal_order(word, generating state).
    """
    ell = -state.flow
    if ell <= 0:
        return _to_modes(state), FockState(state.flow, state.mu_offset), 1
    dressing = set(range(-ell, 0))
    present = set(state.ps)
    holes = sorted(-n for n in dressing - present)
    extra = tuple(n for n in state.ps if n < -ell)
    word = (tuple(ModeOp(Family.DT, n) for n in state.dt)
            + tuple(ModeOp(Family.EC, n) for n in state.ec)
            + tuple(ModeOp(Family.PH, n) for n in state.ph + tuple(holes))
            + tuple(ModeOp(Family.PS, n) for n in extra))
    gen = FockState(state.flow, state.mu_offset, ps=tuple(range(-ell, 0)))
    image = normal_order(word, gen)
    if len(image) != 1 or state not in image.terms:
        raise AssertionError(f"dressed rewrite failed for {render(state)}")
    return word, gen, int(image[state])


def lemma_terms(word: tuple, flow: int) -> list[tuple[tuple, int, Fraction]]:
    """Closed-form D on a basis word: list of (word, mu shift, coefficient).

    Each d~_{-a} is replaced in place by phi*_{-a}.  The i-th phi_n (counted
    from the left) is replaced by e^c_n when that mode creates, is deleted
    with a mu shift when n = -flow, and also deleted without shift when n = 0;
    these three carry the sign (-1)^(i-1).
    """
    out = []
    i_phi = 0
    for pos, (fam, n) in enumerate(word):
        if fam == Family.DT:
            out.append((word[:pos] + (ModeOp(Family.PS, n),) + word[pos + 1:], 0, ONE))
        elif fam == Family.PH:
            sign = ONE if i_phi % 2 == 0 else -ONE
            i_phi += 1
            if n < -flow:
                out.append((word[:pos] + (ModeOp(Family.EC, n),) + word[pos + 1:], 0, sign))
            elif n == -flow:
                out.append((word[:pos] + word[pos + 1:], 1, sign))
            if n == 0:
                out.append((word[:pos] + word[pos + 1:], 0, sign))
    return out


def differential_lemma(state: FockState) -> LinComb:
    word, gen, sign = to_dressed_word(state)
    total = LinComb()
    for w2, shift, c in lemma_terms(word, state.flow):
        g = gen._replace(mu_offset=gen.mu_offset + shift)
        total = total + normal_order(w2, g).scale(c * sign)
    return total


# Matrices.

@dataclass
class ComplexBlock:
    ghost: int
    grade: int
    basis: list
    boundary: SparseMatrix
    target: list = field(default_factory=list)

    def dump(self) -> str:
        return dump_block(self)


def build_matrix(spec: TruncationSpec, p: int, w: int, source: list | None = None,
                 target: list | None = None, differential=differential_commutator) -> SparseMatrix:
    if source is None:
        source = enumerate_block(spec, p, w)
    if target is None:
        target = enumerate_block(spec, p + 1, w)
    index = {s: i for i, s in enumerate(target)}
    entries = {}
    for j, s in enumerate(source):
        for t, c in differential(s).terms.items():
            i = index.get(t)
            if i is None:
                raise WindowLeakage(f"D({render(s)}) contains {render(t)}, outside block ({p + 1}, {w})")
            entries[(i, j)] = c
    return SparseMatrix(len(target), len(source), entries)


def complex_block(spec: TruncationSpec, p: int, w: int) -> ComplexBlock:
    source = enumerate_block(spec, p, w)
    target = enumerate_block(spec, p + 1, w)
    return ComplexBlock(p, w, source, build_matrix(spec, p, w, source, target), target)


def dump_block(block: ComplexBlock) -> str:
    lines = [f"# block ghost {block.ghost} grade {block.grade} dim {len(block.basis)}"]
    lines += [render(s) for s in block.basis]
    lines.append(f"# boundary {block.boundary.rows}x{block.boundary.cols}")
    lines += [f"{i} {j} {format_rational(v)}" for i, j, v in block.boundary.triplets()]
    return "\n".join(lines) + "\n"


def check_state_in_block(s: FockState, p: int, w: int) -> bool:
    return ghost(s) == p and grade(s) == w
