"""Acceptance suite: one marked group per criterion, summarised at the end of the run."""

import itertools
from fractions import Fraction as F

import pytest

from brstlab.brst import TruncationSpec, block_grid, complex_block, differential_commutator, \
    differential_lemma, enumerate_block, ghost_range
from brstlab.catalog import AdmissibleLevel, level_table, sl2_weights, vir_weight
from brstlab.exactlin import compose
from brstlab.fock import AffineMode, dressed_vacuum, flow_map, flow_map_combo, ghost, grade, \
    li_grade, render, sl2hat_bracket
from brstlab.homology import stabilize
from brstlab.specseq import c0_states, cohomology_dims, convergence_audit, detect_collapse, \
    li_complex, page
from brstlab.structural import FactorKind, factor_differential, structural_betti

FLOWS = (-2, -1, 0, 1, 2)
GRID = [(f, N, W) for f in FLOWS for N in (4, 6) for W in (2, 4)]
DELTA = {(0, 0): 1}


def criterion(n, title):
    return pytest.mark.criterion(n, title)


# 1
@criterion(1, "D^2 = 0 on every block, flows -2..2, max_grade 8, window 6")
@pytest.mark.slow
@pytest.mark.parametrize("flow", FLOWS)
def test_c1_nilpotence(flow):
    spec = TruncationSpec(flow, 8, 6)
    blocks = {cell: complex_block(spec, *cell) for cell in block_grid(spec)}
    bad = [(p, w) for (p, w), b in blocks.items()
           if (p + 1, w) in blocks and not compose(blocks[(p + 1, w)].boundary, b.boundary).is_zero()]
    assert not bad


# 2
@criterion(2, "flow 0: stabilized Betti = delta, and = toy module dims at ghost 0; grades <= 8, windows 2..6")
@pytest.mark.slow
@pytest.mark.parametrize("window", range(2, 7))
@pytest.mark.parametrize("dims", [{0: 1}, {0: 1, 1: 2, 2: 3}], ids=["trivial", "toy"])
def test_c2_main_theorem(window, dims):
    _, stable = stabilize(TruncationSpec(0, 8, window, module_dims=dims))
    assert stable.nonzero() == {(0, w): d for w, d in dims.items()}
    assert not stable.artifacts()


# 3
@criterion(3, "flows +-1, +-2: stabilized Betti zero to grade 6; one raw artifact at negative flow")
@pytest.mark.parametrize("window", (2, 4))
@pytest.mark.parametrize("flow", (-2, -1, 1, 2))
def test_c3_vanishing(flow, window):
    raw, stable = stabilize(TruncationSpec(flow, 6, window))
    assert stable.is_zero()
    if flow < 0:
        assert len(raw.nonzero()) == 1
        assert list(raw.nonzero()) == raw.artifacts()
        assert list(raw.nonzero().values()) == [1]
    else:
        assert raw.is_zero()


# 4
@criterion(4, "gauged, windowed gauged-lattice and Cartan complexes: one class at ghost 0, up to grade 8")
@pytest.mark.parametrize("window", (2, 4))
@pytest.mark.parametrize("tag", ("gauged", "gauged_lattice_window", "cartan"))
def test_c4_appendix_b(tag, window):
    got = factor_differential(FactorKind(tag), TruncationSpec(0, 8, window)).betti().nonzero()
    assert got == DELTA


# 5
@criterion(5, "Li spectral sequence on C0 to grade 8: E1 = delta, collapse at r = 1, E_inf sums to H")
@pytest.mark.parametrize("flow", FLOWS)
def test_c5_li_spectral_sequence(flow):
    fc = li_complex(flow, 8)
    vac = dressed_vacuum(flow)
    p0 = li_grade(vac)
    want = {(p0, ghost(vac) - p0): 1}
    assert page(fc, 1, with_differentials=False).nonzero() == want
    r, einf = detect_collapse(fc)
    assert r == 1
    h = cohomology_dims(fc)
    assert h == {(grade(vac), ghost(vac)): 1}
    for w, piece in fc.pieces.items():
        for n in piece.bases:
            e = sum(d for (p, q), d in einf.by_grade.get(w, {}).items() if p + q == n)
            assert e == h.get((w, n), 0)


# 6
@criterion(6, "differential_lemma = differential_commutator on every basis state of the grid")
@pytest.mark.parametrize("flow,N,W", GRID)
def test_c6_lemma_vs_commutator(flow, N, W):
    spec = TruncationSpec(flow, N, W)
    bad = []
    for w in spec.grades():
        for p in ghost_range(spec, w):
            for s in enumerate_block(spec, p, w):
                if differential_lemma(s) != differential_commutator(s):
                    bad.append(render(s))
    assert not bad


# 7
@criterion(7, "structural (Kunneth) Betti = stabilized direct Betti on the grid")
@pytest.mark.parametrize("flow,N,W", GRID)
def test_c7_path_agreement(flow, N, W):
    spec = TruncationSpec(flow, N, W)
    _, stable = stabilize(spec)
    assert structural_betti(spec).same_values(stable)


# 8
SL2_MODES = [AffineMode(sym, n) for sym in "ehf" for n in range(-4, 5)]


@criterion(8, "spectral flow preserves sl2-hat brackets, |index| <= 4, |ell| <= 3")
@pytest.mark.parametrize("k", [F(-1, 2), F(7, 3)])
@pytest.mark.parametrize("ell", range(-3, 4))
def test_c8_flow_automorphism(ell, k):
    for x, y in itertools.product(SL2_MODES, repeat=2):
        lhs = flow_map_combo(ell, sl2hat_bracket(x, y, k), k)
        rhs = sl2hat_bracket(flow_map(ell, x, k), flow_map(ell, y, k), k)
        assert lhs == rhs, (x, y)


# 9
@criterion(9, "catalog: h symmetry and Delta = h + k/4 on the grid; Ising weights at (3,4)")
@pytest.mark.parametrize("u,v", [(3, 2), (5, 2), (3, 4), (4, 3), (5, 3)])
def test_c9_catalog_identities(u, v):
    level = AdmissibleLevel(u, v)
    for r, s in level.labels():
        h = vir_weight(level, r, s)
        assert h == vir_weight(level, u - r, v - s)
        assert sl2_weights(level, r, s)[1] == h + level.k / 4
    if (u, v) == (3, 4):
        assert {row["h"] for row in level_table(level)} == {F(0), F(1, 2), F(1, 16)}


# 10
@criterion(10, "li_grade <= grade on C0 to grade 10; exhaustive and Hausdorff audits pass")
@pytest.mark.parametrize("flow", FLOWS)
def test_c10_convergence_audits(flow):
    for states in c0_states(flow, 10).values():
        for s in states:
            assert 0 <= li_grade(s) <= grade(s), render(s)
    audit = convergence_audit(li_complex(flow, 8))
    assert audit.compatible and audit.exhaustive and audit.hausdorff
    assert audit.conformally_bounded and audit.bounded_convergence
