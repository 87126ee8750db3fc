"""Blockwise cohomology, window stabilisation and the predicted answer."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .brst import (
    TruncationSpec, WindowLeakage, build_matrix, clear_differential_caches, differential_commutator,
    differential_lemma, enumerate_block, ghost_range,
)
from .exactlin import compose
from .fock import ghost, grade, render

STABLE, ARTIFACT = "stable", "artifact"


@dataclass
class BettiTable:
    entries: dict = field(default_factory=dict)
    stability: dict = field(default_factory=dict)

    def nonzero(self) -> dict:
        return {k: v for k, v in sorted(self.entries.items()) if v}

    def __getitem__(self, key) -> int:
        return self.entries.get(key, 0)

    def same_values(self, other: "BettiTable") -> bool:
        return self.nonzero() == other.nonzero()

    def is_zero(self) -> bool:
        return not self.nonzero()

    def artifacts(self) -> list:
        return sorted(k for k, v in self.stability.items() if v == ARTIFACT)

    def to_json(self) -> dict:
        return {
            "entries": [[p, w, d] for (p, w), d in sorted(self.nonzero().items())],
            "artifacts": [[p, w] for p, w in self.artifacts()],
        }

    def __repr__(self):
        return f"BettiTable({self.nonzero()}, artifacts={self.artifacts()})"


def resolve_jobs(jobs: int | None = None) -> int:
    if jobs is None:
        jobs = int(os.environ.get("BRSTLAB_JOBS", "1") or 1)
    return max(1, jobs)


def map_grades(fn, spec: TruncationSpec, grades, jobs: int | None = None) -> list:
    """Apply fn(spec, w) for each grade; results come back in grade order."""
    grades = list(grades)
    jobs = resolve_jobs(jobs)
    if jobs == 1 or len(grades) < 2:
        return [fn(spec, w) for w in grades]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, [spec] * len(grades), grades))


def grade_data(spec: TruncationSpec, w: int) -> dict:
    """{p: (dim C^{p,w}, rank of D on C^{p,w})} for one grade."""
    blocks = {p: enumerate_block(spec, p, w) for p in ghost_range(spec, w)}
    out = {}
    for p, basis in blocks.items():
        if not basis:
            continue
        target = blocks.get(p + 1) or enumerate_block(spec, p + 1, w)
        r = build_matrix(spec, p, w, basis, target).rank if target else 0
        out[p] = (len(basis), r)
    clear_differential_caches()
    return out


def _betti_from_data(data: dict, w: int) -> dict:
    out = {}
    for p, (dim, r) in data.items():
        prev = data.get(p - 1, (0, 0))[1]
        out[(p, w)] = dim - r - prev
    return out


def convolve_module(table: dict, module_dims: dict, max_grade: int) -> dict:
    out: dict = {}
    for (p, w), b in table.items():
        for g, d in module_dims.items():
            if b and d and w + g <= max_grade:
                out[(p, w + g)] = out.get((p, w + g), 0) + b * d
    return out


def raw_betti(spec: TruncationSpec, jobs: int | None = None) -> dict:
    """Betti numbers of the complex with trivial module factor, on every grade."""
    out = {}
    grades = list(spec.grades())
    for w, data in zip(grades, map_grades(grade_data, spec, grades, jobs)):
        out.update(_betti_from_data(data, w))
    return out


def betti(spec: TruncationSpec, jobs: int | None = None) -> BettiTable:
    raw = convolve_module(raw_betti(spec, jobs), spec.module_dims, spec.max_grade)
    return BettiTable({k: v for k, v in raw.items() if v}, {k: STABLE for k, v in raw.items() if v})


def window_shift(spec: TruncationSpec) -> int:
    """How far the comparison window starts below the original one.

    One step suffices unless negative flow runs with a nonzero excitation
    cap; then the bottom edge carries a tower of classes spaced closer than
    one step moves them, and the window is lowered until the edge generating
    state sits above max_grade.
    """
    f = spec.flow
    if f >= 0 or spec.max_excitations == 0:
        return 1
    ell = -f
    edge = ell * (ell + 1) // 2 - f * spec.mu_start
    return max(1, -(-(spec.max_grade - edge + 1) // ell))


def shifted_spec(spec: TruncationSpec) -> TruncationSpec:
    s = window_shift(spec)
    return spec.replace(mu_start=spec.mu_start - s, window=spec.window + s + 1)


def stabilize(spec: TruncationSpec, jobs: int | None = None) -> tuple[BettiTable, BettiTable]:
    """(raw table with stability flags, stabilised table).

    The comparison run starts the window lower (see :func:`window_shift`) and
    ends it one step higher, using absolute mu so grades are comparable.
    Classes tied to the window edge move in grade and are flagged as artifacts.
    """
    if spec.window < 2:
        raise ValueError("stabilize needs window >= 2")
    first = betti(spec, jobs)
    second = betti(shifted_spec(spec), jobs)
    raw = BettiTable(dict(first.entries))
    stable = BettiTable()
    for key, v in first.nonzero().items():
        if second[key] == v:
            raw.stability[key] = STABLE
            stable.entries[key] = v
            stable.stability[key] = STABLE
        else:
            raw.stability[key] = ARTIFACT
    return raw, stable


def predict(spec: TruncationSpec) -> BettiTable:
    if spec.flow != 0:
        return BettiTable()
    entries = {(0, g): d for g, d in spec.module_dims.items() if d and g <= spec.max_grade}
    return BettiTable(entries, {k: STABLE for k in entries})


def euler_check(spec: TruncationSpec, jobs: int | None = None) -> bool:
    grades = list(spec.grades())
    for w, data in zip(grades, map_grades(grade_data, spec, grades, jobs)):
        chi_c = sum((-1) ** (p % 2) * dim for p, (dim, _) in data.items())
        b = _betti_from_data(data, w)
        chi_h = sum((-1) ** (p % 2) * v for (p, _), v in b.items())
        if chi_c != chi_h or any(v < 0 for v in b.values()):
            return False
    return True


def _check_grade(spec: TruncationSpec, w: int, lemma: bool = True, corrupt=None) -> dict:
    """D^2, grade/ghost preservation and lemma agreement on one grade."""
    fails = {"d_squared_zero": [], "grade_preserved": [], "lemma_equivalence": []}
    blocks = {p: enumerate_block(spec, p, w) for p in ghost_range(spec, w)}
    mats = {}
    for p, basis in blocks.items():
        if not basis:
            continue
        target = blocks.get(p + 1) or enumerate_block(spec, p + 1, w)
        try:
            m = build_matrix(spec, p, w, basis, target)
        except WindowLeakage:
            fails["grade_preserved"].append([p, w])
            continue
        if corrupt is not None:
            m = corrupt(p, w, m)
        mats[p] = m
        graded_ok = lemma_ok = True
        for s in basis:
            image = differential_commutator(s)
            if graded_ok and any(ghost(t) != p + 1 or grade(t) != w for t in image.terms):
                fails["grade_preserved"].append([p, w])
                graded_ok = False
            if lemma and lemma_ok and differential_lemma(s) != image:
                fails["lemma_equivalence"].append([p, w, render(s)])
                lemma_ok = False
    for p, m in mats.items():
        nxt = mats.get(p + 1)
        if nxt is not None and not compose(nxt, m).is_zero():
            fails["d_squared_zero"].append([p, w])
    clear_differential_caches()
    return fails


@dataclass
class VerifyRecord:
    spec: TruncationSpec
    d_squared_zero: bool
    grade_preserved: bool
    lemma_equivalence: bool
    betti_matches_prediction: bool
    structural_path_agrees: bool
    euler_consistent: bool
    raw: BettiTable
    stabilized: BettiTable
    predicted: BettiTable
    structural: BettiTable
    failures: dict

    @property
    def ok(self) -> bool:
        return all((self.d_squared_zero, self.grade_preserved, self.lemma_equivalence,
                    self.betti_matches_prediction, self.structural_path_agrees, self.euler_consistent))


def verify(spec: TruncationSpec, lemma: bool = True, corrupt=None, jobs: int | None = None) -> VerifyRecord:
    from .structural import structural_betti

    fails = {"d_squared_zero": [], "grade_preserved": [], "lemma_equivalence": []}
    for w in spec.grades():
        for k, v in _check_grade(spec, w, lemma, corrupt).items():
            fails[k].extend(v)
    raw, stable = stabilize(spec, jobs)
    predicted = predict(spec)
    structural = structural_betti(spec)
    return VerifyRecord(
        spec=spec,
        d_squared_zero=not fails["d_squared_zero"],
        grade_preserved=not fails["grade_preserved"],
        lemma_equivalence=not fails["lemma_equivalence"],
        betti_matches_prediction=stable.same_values(predicted),
        structural_path_agrees=structural.same_values(stable),
        euler_consistent=euler_check(spec, jobs),
        raw=raw, stabilized=stable, predicted=predicted, structural=structural,
        failures=fails,
    )
