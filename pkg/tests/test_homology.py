import random

import pytest
from hypothesis import given, settings, strategies as st

from brstlab.brst import TruncationSpec, build_matrix, enumerate_block, ghost_range
from brstlab.exactlin import SparseMatrix
from brstlab.homology import (
    ARTIFACT, BettiTable, betti, convolve_module, euler_check, predict, raw_betti, stabilize, verify,
)


def test_betti_examples():
    assert betti(TruncationSpec(0, 4, 4)).nonzero() == {(0, 0): 1}
    assert betti(TruncationSpec(1, 4, 4)).is_zero()
    raw, stable = stabilize(TruncationSpec(-1, 4, 4))
    assert raw.nonzero() == {(1, 1): 1}
    assert raw.stability[(1, 1)] == ARTIFACT
    assert stable.is_zero()


def test_stabilize_examples():
    raw, stable = stabilize(TruncationSpec(0, 4, 3))
    assert raw.same_values(stable) and not raw.artifacts()
    assert stabilize(TruncationSpec(2, 4, 3))[1].is_zero()
    with pytest.raises(ValueError):
        stabilize(TruncationSpec(0, 2, 1))


def test_predict_examples():
    assert predict(TruncationSpec(0, 4, 2)).nonzero() == {(0, 0): 1}
    assert predict(TruncationSpec(3, 4, 2, module_dims={0: 1, 1: 5})).is_zero()
    assert predict(TruncationSpec(0, 4, 2, module_dims={0: 1, 2: 1})).nonzero() == {(0, 0): 1, (0, 2): 1}


def test_convolve_module():
    assert convolve_module({(0, 0): 1, (1, 2): 2}, {0: 1, 1: 3}, 2) == {(0, 0): 1, (0, 1): 3, (1, 2): 2}


@pytest.mark.parametrize("W", [2, 3, 4, 5, 6])
def test_flow_zero_independent_of_window(W):
    spec = TruncationSpec(0, 5, W, module_dims={0: 1, 2: 2})
    assert stabilize(spec)[1].same_values(predict(spec))


@pytest.mark.parametrize("flow", [-2, -1, 1, 2])
def test_nonzero_flow_vanishes(flow):
    assert stabilize(TruncationSpec(flow, 5, 3))[1].is_zero()


@pytest.mark.parametrize("flow", [-2, -1, 0, 1, 2])
def test_euler(flow):
    assert euler_check(TruncationSpec(flow, 5, 3))


@pytest.mark.parametrize("flow", [-1, 0, 1])
def test_betti_invariant_under_basis_permutation(flow):
    spec = TruncationSpec(flow, 4, 3)
    rng = random.Random(1234 + flow)
    expected = raw_betti(spec)
    for w in spec.grades():
        blocks = {p: enumerate_block(spec, p, w) for p in ghost_range(spec, w)}
        perm = {p: rng.sample(b, len(b)) for p, b in blocks.items()}
        ranks = {p: build_matrix(spec, p, w, perm[p], perm.get(p + 1) or []).rank
                 for p in perm if perm[p] and perm.get(p + 1)}
        for p, b in perm.items():
            if b:
                assert len(b) - ranks.get(p, 0) - ranks.get(p - 1, 0) == expected.get((p, w), 0)


def test_verify_records():
    rec = verify(TruncationSpec(0, 6, 4))
    assert rec.ok
    rec = verify(TruncationSpec(-2, 5, 4))
    assert rec.ok and rec.raw.artifacts()


def test_verify_negative_control():
    def corrupt(p, w, m):
        if p == -1 and w == 2 and m.rows and m.cols:
            entries = m.entries
            entries[(0, 0)] = entries.get((0, 0), 0) + 1
            return SparseMatrix(m.rows, m.cols, entries)
        return m
    rec = verify(TruncationSpec(0, 3, 2), corrupt=corrupt)
    assert not rec.d_squared_zero
    assert rec.failures["d_squared_zero"]


@settings(max_examples=8)
@given(st.dictionaries(st.integers(0, 4), st.integers(0, 3), min_size=1))
def test_module_convolution_matches_prediction(dims):
    spec = TruncationSpec(0, 4, 2, module_dims=dims)
    assert stabilize(spec)[1].same_values(predict(spec))


def test_table_json():
    t = BettiTable({(0, 0): 1, (1, 2): 0})
    assert t.to_json() == {"entries": [[0, 0, 1]], "artifacts": []}
