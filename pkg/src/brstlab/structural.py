"""Factorised route: C = M (x) C0 (x) C1 with C1 split by mode index.

Each factor complex is built from the same Fock engine as the full complex
and has a closed-form cohomology.  The assembled Betti table is an
independent cross-check of the direct linear-algebra route.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

from .brst import TruncationSpec, _ec, _fermi_count, differential_commutator, enumerate_block, ghost_range
from .exactlin import SparseMatrix
from .fock import (
    EC, FockState, LinComb, PH, dressed_vacuum, ghost, grade, normal_order, vacuum,
)
from .homology import STABLE, BettiTable, convolve_module
from .specseq import c0_states, detect_collapse, li_complex

TAGS = ("C0", "C1", "gauged", "gauged_lattice_window", "cartan", "mode_factor", "acyclic_pair")


class FactorKind(NamedTuple):
    tag: str
    n: int | None = None

    def __repr__(self):
        return f"mode_factor({self.n})" if self.tag == "mode_factor" else self.tag


def mode_factor(n: int) -> FactorKind:
    return FactorKind("mode_factor", n)


def _check_kind(kind: FactorKind, flow: int) -> None:
    if kind.tag not in TAGS:
        raise ValueError(f"unknown factor kind {kind.tag!r}")
    if (kind.tag == "mode_factor") != (kind.n is not None):
        raise ValueError("only mode_factor carries an index")
    if kind.tag == "mode_factor" and kind.n > max(0, -flow):
        raise ValueError(f"mode index {kind.n} does not occur at flow {flow}")
    if kind.tag in ("gauged_lattice_window", "cartan") and flow != 0:
        raise ValueError(f"{kind.tag} lives at flow 0")
    if kind.tag == "acyclic_pair" and flow <= 0:
        raise ValueError("acyclic_pair (phi_0 against the unit) needs positive flow")


# Splitting states.

def split(state: FockState) -> tuple[FockState, FockState]:
    """(C0 part with dt and ps, C1 part with ec, ph and mu)."""
    c0 = state._replace(mu_offset=0, ec=(), ph=())
    c1 = state._replace(dt=(), ps=())
    return c0, c1


def recombine(c0: FockState, c1: FockState) -> tuple[FockState, int]:
    """Inverse of split with the sign of reordering (dt ps)(ec ph) into dt ec ph ps."""
    s = FockState(c1.flow, c1.mu_offset, c0.dt, c1.ec, c1.ph, c0.ps)
    return s, (-1) ** (len(c0.ps) * len(c1.ph))


# Factor complexes.

@dataclass
class FactorComplex:
    kind: FactorKind
    bases: dict                                    # (p, w) -> list of states
    matrices: dict = field(default_factory=dict)   # (p, w) -> SparseMatrix into (p + 1, w)

    def betti(self) -> BettiTable:
        ranks = {k: m.rank for k, m in self.matrices.items()}
        out = {}
        for (p, w), b in self.bases.items():
            h = len(b) - ranks.get((p, w), 0) - ranks.get((p - 1, w), 0)
            if h:
                out[(p, w)] = h
        return BettiTable(out, {k: STABLE for k in out})


def _assemble(kind, states, differential, base: FockState | None = None) -> FactorComplex:
    """Group states by (ghost, grade) measured from ``base`` and build D blockwise."""
    g0, w0 = (ghost(base), grade(base)) if base is not None else (0, 0)
    bases: dict = {}
    for s in states:
        bases.setdefault((ghost(s) - g0, grade(s) - w0), []).append(s)
    mats = {}
    for (p, w), b in bases.items():
        tgt = bases.get((p + 1, w), [])
        index = {s: i for i, s in enumerate(tgt)}
        entries = {}
        for j, s in enumerate(b):
            for t, c in differential(s).terms.items():
                if t not in index:
                    raise KeyError(f"{kind!r}: D leaves the factor at {t}")
                entries[(index[t], j)] = c
        if tgt:
            mats[(p, w)] = SparseMatrix(len(tgt), len(b), entries)
    return FactorComplex(kind, bases, mats)


def _full_states(spec: TruncationSpec):
    for w in spec.grades():
        for p in ghost_range(spec, w):
            yield from enumerate_block(spec, p, w)


def _in_mode_factor(s: FockState, n: int, spec: TruncationSpec) -> bool:
    f = spec.flow
    ell = max(0, -f)
    dressing = set(range(-ell, 0))
    if s.dt or any(m != n for m in s.ec) or any(m != n for m in s.ph):
        return False
    present = set(s.ps)
    if not present <= dressing or not dressing - present <= {-n}:
        return False
    if n != -f and s.mu_offset != spec.mu_start:
        return False
    return True


def gauged_differential(state: FockState) -> LinComb:
    """[D, phi_n] = F_n + delta_{n,0} with D|0> = 0; F is carried by the ec slot."""
    acc = LinComb()
    base = vacuum(state.flow, state.mu_offset)
    word = [EC(n) for n in state.ec] + [PH(n) for n in state.ph]
    nec = len(state.ec)
    for i, n in enumerate(state.ph):
        sign = (-1) ** i
        pos = nec + i
        acc = acc + normal_order(word[:pos] + [EC(n)] + word[pos + 1:], base).scale(sign)
        if n == 0:
            acc = acc + normal_order(word[:pos] + word[pos + 1:], base).scale(sign)
    return acc


def gauged_states(max_grade: int, zero_power: int | None = None) -> list[FockState]:
    """Basis of the gauged complex: fermion phi and boson F, both creating for n <= 0.

    The F_0 power is capped at ``zero_power`` (default max_grade + 1) and phi_0
    is dropped at the cap so the span stays D-stable.
    """
    R = max_grade + 1 if zero_power is None else zero_power
    out = []
    for w in range(max_grade + 1):
        for a in range(w + 1):
            for ec in _ec(a, 1):
                for r in range(R + 1):
                    for phs in _fermi_count(w - a).values():
                        for ph in phs:
                            for z in (0, 1):
                                if z and r == R:
                                    continue
                                out.append(FockState(-1, 0, (), ec + (0,) * r,
                                                     ph + (0,) if z else ph, ()))
    return out


def factor_differential(kind: FactorKind, spec: TruncationSpec) -> FactorComplex:
    _check_kind(kind, spec.flow)
    f = spec.flow
    N = spec.max_grade
    if kind.tag in ("C0", "cartan"):
        states = [s for b in c0_states(f, N, spec.max_excitations).values() for s in b]
        return _assemble(kind, states, differential_commutator, dressed_vacuum(f))
    if kind.tag == "gauged":
        return _assemble(kind, gauged_states(N), gauged_differential)
    if kind.tag == "gauged_lattice_window":
        states = [s for s in _full_states(spec) if _in_mode_factor(s, 0, spec)]
        return _assemble(kind, states, differential_commutator)
    if kind.tag == "acyclic_pair":
        states = [s for s in _full_states(spec)
                  if _in_mode_factor(s, 0, spec) and s.mu_offset == spec.mu_start]
        return _assemble(kind, states, differential_commutator)
    if kind.tag == "C1":
        states = [s for s in _full_states(spec) if not s.dt and set(s.ps) <= set(range(f, 0))]
        return _assemble(kind, states, differential_commutator, dressed_vacuum(f, spec.mu_start))
    states = [s for s in _full_states(spec) if _in_mode_factor(s, kind.n, spec)]
    return _assemble(kind, states, differential_commutator, dressed_vacuum(f, spec.mu_start))


# Closed forms and assembly.

def _delta() -> BettiTable:
    return BettiTable({(0, 0): 1}, {(0, 0): STABLE})


def closed_form_betti(kind: FactorKind, params: dict | None = None) -> BettiTable:
    """Cohomology of a factor; ``params`` supplies the flow for mode factors."""
    params = params or {}
    if kind.tag in ("C0", "cartan", "gauged", "gauged_lattice_window"):
        return _delta()
    if kind.tag == "acyclic_pair":
        return BettiTable()
    f = params.get("flow", 0)
    if kind.tag == "C1":
        return _delta() if f == 0 else BettiTable()
    _check_kind(kind, f)
    n = kind.n
    if n == -f:
        # the raiser factor: gauged lattice at flow 0, acyclic over all mu otherwise
        return _delta() if f == 0 else BettiTable()
    if n == 0 and f > 0:
        return BettiTable()
    if n < -f:
        return _delta()
    # -f < n < 0: a lone fermion with D phi_n = 0
    out = {(0, 0): 1, (-1, -n): 1}
    return BettiTable(out, {k: STABLE for k in out})


def kunneth_convolve(a: BettiTable, b: BettiTable, max_grade: int | None = None) -> BettiTable:
    out: dict = {}
    for (p1, w1), x in a.nonzero().items():
        for (p2, w2), y in b.nonzero().items():
            w = w1 + w2
            if max_grade is not None and w > max_grade:
                continue
            out[(p1 + p2, w)] = out.get((p1 + p2, w), 0) + x * y
    return BettiTable(out, {k: STABLE for k in out})


def c1_factor_kinds(flow: int, max_grade: int) -> list[FactorKind]:
    """Mode factors of C1 that are nontrivial below max_grade."""
    top = max(0, -flow)
    return [mode_factor(n) for n in range(-max_grade - max(0, flow), top + 1)]


def c0_betti_li(flow: int, max_grade: int, max_excitations: int = 0) -> BettiTable:
    """Cohomology of C0 read off the collapsed Li spectral sequence (relative grades)."""
    fc = li_complex(flow, max_grade, max_excitations)
    _, einf = detect_collapse(fc)
    vac = dressed_vacuum(flow)
    g0, w0 = ghost(vac), grade(vac)
    out: dict = {}
    for w, dims in einf.by_grade.items():
        for (p, q), d in dims.items():
            key = (p + q - g0, w - w0)
            out[key] = out.get(key, 0) + d
    return BettiTable(out, {k: STABLE for k in out})


def structural_betti(spec: TruncationSpec) -> BettiTable:
    f = spec.flow
    base = grade(dressed_vacuum(f, spec.mu_start))
    span = spec.max_grade - min(base, spec.min_grade())
    c1 = _delta()
    for kind in c1_factor_kinds(f, span):
        c1 = kunneth_convolve(c1, closed_form_betti(kind, {"flow": f}), span)
        if c1.is_zero():
            break
    if c1.is_zero():
        return BettiTable()
    vac = grade(dressed_vacuum(f))
    c0 = c0_betti_li(f, max(vac, spec.max_grade - base + vac), spec.max_excitations)
    total = kunneth_convolve(c0, c1, span)
    shifted = {(p, w + base): d for (p, w), d in total.nonzero().items() if w + base <= spec.max_grade}
    out = convolve_module(shifted, spec.module_dims, spec.max_grade)
    out = {k: v for k, v in out.items() if v}
    return BettiTable(out, {k: STABLE for k in out})
