"""Free-field Fock states and the normal-ordering engine.

A state is a monomial in the modes of four fields acting on the generating
state of a flow sector:

    DT  d~_n   boson,   creates for n <= -1
    EC  e^c_n  boson,   creates for n < -flow, raises mu at n = -flow
    PH  phi_n  fermion, creates for n <= 0
    PS  phi*_n fermion, creates for n <= -1

Monomials are kept in the canonical order DT, EC, PH, PS with ascending mode
index inside each family.  Moving an operator into place uses the bracket
table in :func:`bracket`; signs come from counting fermionic transpositions.
"""

from __future__ import annotations

import re
from enum import IntEnum
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, NamedTuple


class UnsupportedBracket(NotImplementedError):
    """Raised when a reordering needs a bracket the table deliberately omits."""


class Family(IntEnum):
    DT = 0
    EC = 1
    PH = 2
    PS = 3


FERMIONIC = (False, False, True, True)
ONE = Fraction(1)

CREATE, KILL, RAISE = "create", "kill", "raise"


class ModeOp(NamedTuple):
    family: Family
    index: int

    def __repr__(self):
        return f"{self.family.name}{self.index:+d}"


def DT(n): return ModeOp(Family.DT, n)
def EC(n): return ModeOp(Family.EC, n)
def PH(n): return ModeOp(Family.PH, n)
def PS(n): return ModeOp(Family.PS, n)


class FlowSector(NamedTuple):
    flow: int
    mu_base: str = "lambda"


class FockState(NamedTuple):
    """Canonical monomial; index tuples are sorted ascending."""

    flow: int
    mu_offset: int
    dt: tuple = ()
    ec: tuple = ()
    ph: tuple = ()
    ps: tuple = ()

    @property
    def sector(self) -> FlowSector:
        return FlowSector(self.flow)

    @property
    def modes(self) -> tuple:
        return _to_modes(self)

    def __str__(self):
        return render(self)


def _to_modes(s: FockState) -> tuple:
    return (tuple(ModeOp(Family.DT, n) for n in s.dt)
            + tuple(ModeOp(Family.EC, n) for n in s.ec)
            + tuple(ModeOp(Family.PH, n) for n in s.ph)
            + tuple(ModeOp(Family.PS, n) for n in s.ps))


def _from_modes(flow: int, mu: int, modes: tuple) -> FockState:
    parts = ([], [], [], [])
    for fam, n in modes:
        parts[fam].append(n)
    return FockState(flow, mu, *map(tuple, parts))


def make_state(flow: int = 0, mu_offset: int = 0, dt: Iterable[int] = (), ec: Iterable[int] = (),
               ph: Iterable[int] = (), ps: Iterable[int] = ()) -> FockState:
    """Validated constructor; index collections may be given in any order."""
    s = FockState(flow, mu_offset, tuple(sorted(dt)), tuple(sorted(ec)),
                  tuple(sorted(ph)), tuple(sorted(ps)))
    check_state(s)
    return s


def vacuum(flow: int = 0, mu_offset: int = 0) -> FockState:
    return FockState(flow, mu_offset)


def dressed_vacuum(flow: int, mu_offset: int = 0) -> FockState:
    """Generating state used for negative flow: phi*_{-l}..phi*_{-1} on the bare vacuum."""
    ell = max(0, -flow)
    return FockState(flow, mu_offset, ps=tuple(range(-ell, 0)))


def check_state(s: FockState) -> None:
    if any(n > -1 for n in s.dt):
        raise ValueError(f"dt indices must be <= -1: {s.dt}")
    if any(n >= -s.flow for n in s.ec):
        raise ValueError(f"ec indices must be < {-s.flow}: {s.ec}")
    if any(n > 0 for n in s.ph):
        raise ValueError(f"ph indices must be <= 0: {s.ph}")
    if any(n > -1 for n in s.ps):
        raise ValueError(f"ps indices must be <= -1: {s.ps}")
    for name in ("dt", "ec", "ph", "ps"):
        seq = getattr(s, name)
        if list(seq) != sorted(seq):
            raise ValueError(f"{name} indices must be sorted: {seq}")
    for name in ("ph", "ps"):
        seq = getattr(s, name)
        if len(set(seq)) != len(seq):
            raise ValueError(f"{name} is fermionic, repeated index: {seq}")


def mode_kind(op: ModeOp, flow: int) -> str:
    fam, n = op
    if fam == Family.DT:
        if n == 0:
            raise UnsupportedBracket("the d~_0 eigenvalue on the generating state is not defined")
        return CREATE if n <= -1 else KILL
    if fam == Family.EC:
        if n < -flow:
            return CREATE
        return RAISE if n == -flow else KILL
    if fam == Family.PH:
        return CREATE if n <= 0 else KILL
    return CREATE if n <= -1 else KILL


def bracket(a: ModeOp, b: ModeOp) -> tuple:
    """Graded bracket [a, b} as a tuple of (mode or None, coefficient); None is the unit.

    The d~ brackets with phi and e^c follow from [D, d~_n] = phi*_n together
    with the ghost anticommutator.  [d~_m, d~_n] is zero off the diagonal
    m + n = 0 and undefined on it.
    """
    fa, m = a
    fb, n = b
    if fa == Family.DT:
        if fb == Family.DT:
            if m + n == 0:
                raise UnsupportedBracket(f"[d~_{m}, d~_{n}] central term is not defined")
            return ()
        if fb == Family.EC:
            return ((ModeOp(Family.EC, m + n), ONE),)
        if fb == Family.PH:
            return ((ModeOp(Family.PH, m + n), ONE),)
        return ((ModeOp(Family.PS, m + n), -ONE),)
    if fb == Family.DT:
        if fa == Family.EC:
            return ((ModeOp(Family.EC, m + n), -ONE),)
        if fa == Family.PH:
            return ((ModeOp(Family.PH, m + n), -ONE),)
        return ((ModeOp(Family.PS, m + n), ONE),)
    if {fa, fb} == {Family.PH, Family.PS} and m + n == 0:
        return ((None, ONE),)
    return ()


def _add(acc: dict, key, c) -> None:
    v = acc.get(key, 0) + c
    if v:
        acc[key] = v
    else:
        acc.pop(key, None)


@lru_cache(maxsize=None)
def _apply(op: ModeOp, flow: int, mu: int, modes: tuple) -> tuple:
    kind = mode_kind(op, flow)
    if kind == CREATE:
        if not modes or op < modes[0]:
            return (((mu, (op,) + modes), ONE),)
        if op == modes[0]:
            if FERMIONIC[op[0]]:
                return ()
            return (((mu, (op,) + modes), ONE),)
    elif not modes:
        return (((mu + 1, ()), ONE),) if kind == RAISE else ()
    head, tail = modes[0], modes[1:]
    eps = -1 if FERMIONIC[op[0]] and FERMIONIC[head[0]] else 1
    acc: dict = {}
    # op head = eps head op + [op, head}
    for (mu2, m2), c in _apply(op, flow, mu, tail):
        for key, c2 in _apply(head, flow, mu2, m2):
            _add(acc, key, eps * c * c2)
    for x, c in bracket(op, head):
        if x is None:
            _add(acc, (mu, tail), c)
        else:
            for key, c2 in _apply(x, flow, mu, tail):
                _add(acc, key, c * c2)
    return tuple(acc.items())


def apply_mode(op: ModeOp, state: FockState) -> "LinComb":
    out = {}
    for (mu, modes), c in _apply(op, state.flow, state.mu_offset, _to_modes(state)):
        out[_from_modes(state.flow, mu, modes)] = c
    return LinComb(out)


def clear_caches() -> None:
    _apply.cache_clear()


class LinComb:
    """Finite rational combination of canonical FockStates."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping | Iterable = ()):
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict = {}
        for s, c in items:
            _add(acc, s, Fraction(c))
        self.terms = acc

    @classmethod
    def single(cls, state: FockState, coeff=1) -> "LinComb":
        return cls({state: coeff})

    def __iter__(self):
        return iter(sorted(self.terms.items(), key=lambda kv: state_sort_key(kv[0])))

    def __len__(self):
        return len(self.terms)

    def __bool__(self):
        return bool(self.terms)

    def __getitem__(self, s):
        return self.terms.get(s, Fraction(0))

    def __add__(self, other: "LinComb") -> "LinComb":
        out = dict(self.terms)
        for s, c in other.terms.items():
            _add(out, s, c)
        r = LinComb()
        r.terms = out
        return r

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "LinComb":
        r = LinComb()
        r.terms = {s: v * c for s, v in self.terms.items()} if c else {}
        return r

    def __eq__(self, other):
        if not isinstance(other, LinComb):
            return NotImplemented
        return self.terms == other.terms

    def __repr__(self):
        if not self.terms:
            return "LinComb(0)"
        return "LinComb(" + " + ".join(f"{c}*[{render(s)}]" for s, c in self) + ")"

    def map(self, f) -> "LinComb":
        """Linear extension of f: FockState -> LinComb."""
        acc: dict = {}
        for s, c in self.terms.items():
            for s2, c2 in f(s).terms.items():
                _add(acc, s2, c * c2)
        r = LinComb()
        r.terms = acc
        return r


def normal_order(ops: Iterable[ModeOp], base: FockState) -> LinComb:
    """Normal-order the operator word ``ops`` (read as written) acting on ``base``."""
    result = LinComb.single(base)
    for op in reversed(list(ops)):
        op = ModeOp(Family(op[0]), op[1])
        result = result.map(lambda s, op=op: apply_mode(op, s))
    return result


def state_sort_key(s: FockState) -> tuple:
    return (s.mu_offset, len(s.dt), s.dt, len(s.ec), s.ec, len(s.ph), s.ph, len(s.ps), s.ps)


def grade(s: FockState) -> int:
    return -(sum(s.dt) + sum(s.ec) + sum(s.ph) + sum(s.ps)) + s.flow * s.mu_offset


def ghost(s: FockState) -> int:
    return len(s.ps) - len(s.ph)


def is_c0(s: FockState) -> bool:
    return not s.ec and not s.ph


def li_grade(s: FockState) -> int:
    if not is_c0(s):
        raise ValueError(f"li_grade needs a state with only dt and ps modes: {render(s)}")
    return sum(-n - 1 for n in s.dt) + sum(-n - 1 for n in s.ps)


def _fmt(seq) -> str:
    return "[" + ",".join(str(n) for n in seq) + "]"


def render(s: FockState) -> str:
    return (f"dt{_fmt(s.dt)} ec{_fmt(s.ec)} ph{_fmt(s.ph)} ps{_fmt(s.ps)} "
            f"mu{s.mu_offset:+d} flow{s.flow:+d}")


_RENDER_RE = re.compile(
    r"dt\[(?P<dt>[^\]]*)\] ec\[(?P<ec>[^\]]*)\] ph\[(?P<ph>[^\]]*)\] ps\[(?P<ps>[^\]]*)\] "
    r"mu(?P<mu>[+-]\d+) flow(?P<flow>[+-]\d+)$")


def parse_state(text: str) -> FockState:
    m = _RENDER_RE.match(text.strip())
    if not m:
        raise ValueError(f"cannot parse state: {text!r}")
    ints = {k: tuple(int(x) for x in m[k].split(",") if x) for k in ("dt", "ec", "ph", "ps")}
    return make_state(int(m["flow"]), int(m["mu"]), **ints)


# Affine sl2 and half-lattice modes under spectral flow.

SL2 = ("e", "h", "f")
SUPPORTED = SL2 + ("T", "d", "c", "exp", "TPi")
UNIT = "1"


class AffineMode(NamedTuple):
    symbol: str
    index: int
    charge: int = 0  # N for the lattice exponential e^{Nc}

    def __repr__(self):
        if self.symbol == "exp":
            return f"e^{{{self.charge}c}}_{self.index}"
        return f"{self.symbol}_{self.index}"


def _combo(*pairs) -> dict:
    acc: dict = {}
    for key, c in pairs:
        _add(acc, key, Fraction(c))
    return acc


def flow_map(ell: int, x: AffineMode, k) -> dict:
    """Image of ``x`` under the spectral flow automorphism sigma^ell at level ``k``.

    Returns a combination {AffineMode or UNIT: Fraction}.
    """
    k = Fraction(k)
    sym, n, N = x
    delta = 1 if n == 0 else 0
    if sym == "e":
        return _combo((AffineMode("e", n - ell), 1))
    if sym == "f":
        return _combo((AffineMode("f", n + ell), 1))
    if sym == "h":
        return _combo((x, 1), (UNIT, -ell * k * delta))
    if sym == "T":
        return _combo((x, 1), (AffineMode("h", n), Fraction(-ell, 2)), (UNIT, k / 4 * ell * ell * delta))
    if sym == "d":
        return _combo((x, 1), (UNIT, -k / 2 * ell * delta))
    if sym == "c":
        return _combo((x, 1), (UNIT, -ell * delta))
    if sym == "exp":
        return _combo((AffineMode("exp", n - ell * N, N), 1))
    if sym == "TPi":
        # b = (k/4) c + d/2
        return _combo((x, 1), (AffineMode("c", n), -ell * k / 4), (AffineMode("d", n), Fraction(-ell, 2)),
                      (UNIT, k / 4 * ell * ell * delta))
    raise ValueError(f"unknown mode symbol {sym!r}")


def flow_map_combo(ell: int, combo: Mapping, k) -> dict:
    acc: dict = {}
    for key, c in combo.items():
        if key == UNIT:
            _add(acc, UNIT, c)
            continue
        for key2, c2 in flow_map(ell, key, k).items():
            _add(acc, key2, c * c2)
    return acc


_SL2_BRACKET = {
    ("h", "e"): (("e", 2),), ("e", "h"): (("e", -2),),
    ("h", "f"): (("f", -2),), ("f", "h"): (("f", 2),),
    ("e", "f"): (("h", 1),), ("f", "e"): (("h", -1),),
}
_KILLING = {("h", "h"): 2, ("e", "f"): 1, ("f", "e"): 1}


def sl2hat_bracket(x, y, k) -> dict:
    """[x, y] in affine sl2 at level ``k``; arguments are modes or combinations."""
    k = Fraction(k)
    xs = x.items() if isinstance(x, Mapping) else ((x, ONE),)
    ys = y.items() if isinstance(y, Mapping) else ((y, ONE),)
    acc: dict = {}
    for a, ca in xs:
        for b, cb in ys:
            if a == UNIT or b == UNIT:
                continue
            if a.symbol not in SL2 or b.symbol not in SL2:
                raise ValueError(f"sl2hat_bracket needs e, h, f modes: {a!r}, {b!r}")
            c = ca * cb
            for sym, v in _SL2_BRACKET.get((a.symbol, b.symbol), ()):
                _add(acc, AffineMode(sym, a.index + b.index), c * v)
            if a.index + b.index == 0:
                _add(acc, UNIT, c * a.index * _KILLING.get((a.symbol, b.symbol), 0) * k)
    return acc
