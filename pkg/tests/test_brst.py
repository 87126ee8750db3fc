from itertools import combinations, combinations_with_replacement

import pytest

from brstlab.brst import (
    TruncationSpec, WindowLeakage, build_matrix, complex_block, differential_commutator,
    differential_lemma, dump_block, enumerate_block, excitations, ghost_range,
)
from brstlab.exactlin import compose
from brstlab.fock import FockState, LinComb, dressed_vacuum, parse_state, ghost, grade, make_state, vacuum


def st_(**kw):
    return make_state(kw.pop("flow", 0), kw.pop("mu", 0), **kw)


def test_spec_validation():
    with pytest.raises(ValueError):
        TruncationSpec(max_grade=-1)
    with pytest.raises(ValueError):
        TruncationSpec(window=-1)
    with pytest.raises(ValueError):
        TruncationSpec(max_grade=2, module_dims={3: 1})
    with pytest.raises(ValueError):
        TruncationSpec(module_dims={0: -1})
    with pytest.raises(ValueError):
        enumerate_block(TruncationSpec(max_grade=2), 0, 3)


def test_enumeration_examples():
    spec = TruncationSpec(flow=0, max_grade=2, window=2)
    assert enumerate_block(spec, 0, 0) == [vacuum(0, m) for m in range(3)]
    assert enumerate_block(spec, -1, 0) == [st_(ph=[0]), st_(ph=[0], mu=1)]
    assert enumerate_block(TruncationSpec(0, 1, 0), 1, 1) == [st_(ps=[-1])]


def _family(indices, max_weight, fermionic, max_len=6):
    """All index multisets (or sets) from ``indices`` with weight -sum <= max_weight."""
    pool = combinations if fermionic else combinations_with_replacement
    out = []
    for r in range(max_len + 1):
        for c in pool(sorted(indices), r):
            if -sum(c) <= max_weight:
                out.append((c, -sum(c)))
    return out


def brute_force_states(spec):
    flow, N = spec.flow, spec.max_grade
    cap = N - min(0, flow) * spec.mu_top + 2
    idx = range(-cap - 1, 1)
    fams = [_family([n for n in idx if n <= -1], cap, False),
            _family([n for n in idx if n < -flow], cap, False),
            _family([n for n in idx if n <= 0], cap, True),
            _family([n for n in idx if n <= -1], cap, True)]
    found = set()
    for mu in spec.mu_range:
        budget = N - flow * mu
        for dt, a in fams[0]:
            for ec, b in fams[1]:
                for ph, c in fams[2]:
                    if a + b + c > budget:
                        continue
                    for ps, d in fams[3]:
                        if a + b + c + d > budget:
                            continue
                        s = FockState(flow, mu, dt, ec, ph, ps)
                        if grade(s) < spec.min_grade() or excitations(s) > spec.max_excitations:
                            continue
                        top = mu == spec.mu_top
                        if top and flow >= 0 and -flow in ph:
                            continue
                        if top and flow < 0 and flow not in ps:
                            continue
                        found.add(s)
    return found


@pytest.mark.parametrize("flow", [-2, -1, 0, 1, 2])
def test_enumeration_matches_brute_force(flow):
    spec = TruncationSpec(flow=flow, max_grade=3, window=2)
    enumerated = set()
    for w in spec.grades():
        for p in ghost_range(spec, w):
            block = enumerate_block(spec, p, w)
            assert len(block) == len(set(block))
            assert all(ghost(s) == p and grade(s) == w for s in block)
            enumerated.update(block)
    assert enumerated == brute_force_states(spec)


def test_differential_examples():
    assert differential_commutator(vacuum(0, 2)) == LinComb()
    assert differential_commutator(st_(ph=[0], mu=1)) == LinComb({vacuum(0, 1): 1, vacuum(0, 2): 1})
    assert differential_commutator(st_(dt=[-2, -1])) == LinComb(
        {st_(dt=[-1], ps=[-2]): 1, st_(dt=[-2], ps=[-1]): 1, st_(ps=[-3]): 1})
    assert differential_commutator(st_(flow=1, ph=[-1], mu=2)) == LinComb.single(vacuum(1, 3))
    for ell in (1, 2, 3):
        assert differential_commutator(dressed_vacuum(-ell, 1)) == LinComb()


def test_lemma_examples():
    assert differential_lemma(st_(dt=[-1])) == LinComb.single(st_(ps=[-1]))
    assert differential_lemma(st_(ph=[-1])) == LinComb.single(st_(ec=[-1]))
    s = st_(flow=2, dt=[-1], ph=[-2])
    image = differential_lemma(s)
    assert image[st_(flow=2, mu=1, dt=[-1])] != 0
    assert image == differential_commutator(s)


def test_build_matrix_examples():
    spec = TruncationSpec(0, 2, 2)
    m = build_matrix(spec, -1, 0)
    assert m.shape == (3, 2) and m.rank == 2
    assert m.to_dense() == [[1, 0], [1, 1], [0, 1]]
    assert build_matrix(spec, 0, 0).is_zero()


def test_window_leakage_detected():
    spec = TruncationSpec(0, 2, 2)
    source = [st_(ph=[0], mu=2)]
    with pytest.raises(WindowLeakage):
        build_matrix(spec, -1, 0, source=source)


@pytest.mark.parametrize("flow", [-2, -1, 0, 1, 2])
def test_d_squared_and_lemma_small(flow):
    spec = TruncationSpec(flow, 4, 3)
    for w in spec.grades():
        mats = {}
        for p in ghost_range(spec, w):
            basis = enumerate_block(spec, p, w)
            if not basis:
                continue
            mats[p] = build_matrix(spec, p, w, basis)
            for s in basis:
                image = differential_commutator(s)
                assert all(ghost(t) == p + 1 and grade(t) == w for t in image.terms)
                assert differential_lemma(s) == image
        for p, m in mats.items():
            if p + 1 in mats:
                assert compose(mats[p + 1], m).is_zero()


def test_excitation_cap_respected():
    spec = TruncationSpec(-2, 5, 2, max_excitations=1)
    for w in spec.grades():
        for p in ghost_range(spec, w):
            for s in enumerate_block(spec, p, w):
                assert excitations(s) <= 1
                for t in differential_commutator(s).terms:
                    assert excitations(t) <= excitations(s)


def test_deterministic_dump():
    spec = TruncationSpec(0, 3, 2)
    a = dump_block(complex_block(spec, 0, 2))
    b = dump_block(complex_block(spec, 0, 2))
    assert a == b
    block = complex_block(spec, 0, 2)
    lines = a.splitlines()
    assert [parse_state(x) for x in lines[1:1 + len(block.basis)]] == block.basis
