"""Admissible-level data: minimal-model weights, sl2 relaxed labels and reduction tables."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd

from .exactlin import format_rational

KINDS = ("Vir_L", "relaxed_E", "relaxed_Eminus", "relaxed_Eplus", "projective_P")
OUT_OF_SCOPE = "unknown, out of scope"


@dataclass(frozen=True)
class AdmissibleLevel:
    u: int
    v: int

    def __post_init__(self):
        if self.u < 2 or self.v < 1:
            raise ValueError(f"admissible level needs u >= 2 and v >= 1, got ({self.u}, {self.v})")
        if gcd(self.u, self.v) != 1:
            raise ValueError(f"u = {self.u} and v = {self.v} are not coprime")

    @property
    def k(self) -> Fraction:
        return Fraction(self.u, self.v) - 2

    def labels(self) -> list[tuple[int, int]]:
        return [(r, s) for r in range(1, self.u) for s in range(1, self.v)]


@dataclass(frozen=True)
class ModuleDescriptor:
    kind: str
    r: int
    s: int
    flow: int = 0
    Lambda: Fraction | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown module kind {self.kind!r}")
        if self.Lambda is not None:
            object.__setattr__(self, "Lambda", Fraction(self.Lambda))

    def validate(self, level: AdmissibleLevel) -> None:
        _check_range(level, self.r, self.s)
        if self.kind == "projective_P" and self.s > level.v - 2:
            raise ValueError(f"projective_P needs s <= v - 2 = {level.v - 2}")
        if self.kind == "relaxed_E":
            if self.Lambda is None:
                raise ValueError("relaxed_E needs a coset label Lambda")
            lam = sl2_weights(level, self.r, self.s)[0]
            dual = sl2_weights(level, level.u - self.r, level.v - self.s)[0]
            if _same_coset(self.Lambda, lam) or _same_coset(self.Lambda, dual):
                raise ValueError(f"Lambda = {self.Lambda} lies in an excluded coset")


def _same_coset(a: Fraction, b: Fraction) -> bool:
    d = (a - b) / 2
    return d.denominator == 1


def _check_range(level: AdmissibleLevel, r: int, s: int, allow_s0: bool = False) -> None:
    lo = 0 if allow_s0 else 1
    if not (1 <= r <= level.u - 1 and lo <= s <= level.v - 1):
        raise ValueError(f"(r, s) = ({r}, {s}) outside 1..{level.u - 1} x {lo}..{level.v - 1}")


def vir_weight(level: AdmissibleLevel, r: int, s: int, allow_s0: bool = False) -> Fraction:
    """h_{r,s}; ``allow_s0`` admits s = 0 as used for the ordinary modules."""
    _check_range(level, r, s, allow_s0)
    u, v = level.u, level.v
    return Fraction((v * r - u * s) ** 2 - (u - v) ** 2, 4 * u * v)


def sl2_weights(level: AdmissibleLevel, r: int, s: int, allow_s0: bool = False) -> tuple[Fraction, Fraction]:
    """(lambda_{r,s}, Delta_{r,s})."""
    _check_range(level, r, s, allow_s0)
    u, v = level.u, level.v
    lam = r - 1 - Fraction(u, v) * s
    delta = Fraction((v * r - u * s) ** 2 - v * v, 4 * u * v)
    return lam, delta


@dataclass(frozen=True)
class CentralCharges:
    c_vir: Fraction
    c_lattice: Fraction
    c_sl2: Fraction


def central_charges(level) -> CentralCharges:
    k = level.k if isinstance(level, AdmissibleLevel) else Fraction(level)
    if k == -2:
        raise ValueError("critical level k = -2")
    t = k + 2
    return CentralCharges(13 - 6 * (t + 1 / t), 2 + 6 * k, 3 * k / t)


def identify(level: AdmissibleLevel, r: int, s: int) -> tuple[int, int]:
    _check_range(level, r, s)
    return min((r, s), (level.u - r, level.v - s))


@dataclass(frozen=True)
class Reduction:
    """Outcome of a minus reduction: a Virasoro simple, zero, or unknown."""

    label: tuple[int, int] | None = None
    multiplicity: int = 0
    unknown: bool = False

    def __str__(self):
        if self.unknown:
            return OUT_OF_SCOPE
        if not self.multiplicity:
            return "0"
        return f"L{self.label}"

    @property
    def is_zero(self) -> bool:
        return not self.unknown and not self.multiplicity


def predict_reduction(level: AdmissibleLevel, m: ModuleDescriptor) -> Reduction:
    if m.kind == "Vir_L":
        raise ValueError("Vir_L is a reduction output, not an sl2 module")
    if level.v == 1:
        raise ValueError("relaxed and projective modules need v > 1; at v = 1 the category is "
                         "finite and semisimple")
    m.validate(level)
    if m.kind == "relaxed_Eplus":
        return Reduction(unknown=True)
    if m.kind in ("relaxed_E", "relaxed_Eminus"):
        if m.flow == 0:
            return Reduction(identify(level, m.r, m.s), 1)
        return Reduction()
    # projective_P
    if m.flow == 0:
        return Reduction(identify(level, m.r, m.s), 1)
    if m.flow == -1:
        return Reduction(identify(level, m.r, m.s + 1), 1)
    return Reduction()


def level_table(level: AdmissibleLevel) -> list[dict]:
    """Rows (r, s, lambda, Delta, h, canonical id) for every label of the level."""
    rows = []
    for r, s in level.labels():
        lam, delta = sl2_weights(level, r, s)
        rows.append({"r": r, "s": s, "lambda": lam, "Delta": delta,
                     "h": vir_weight(level, r, s), "id": identify(level, r, s)})
    return rows


def ordinary_rows(level: AdmissibleLevel) -> list[dict]:
    """The s = 0 extension used by the ordinary modules; flagged as such."""
    rows = []
    for r in range(1, level.u):
        lam, delta = sl2_weights(level, r, 0, allow_s0=True)
        rows.append({"r": r, "s": 0, "lambda": lam, "Delta": delta, "extended": True})
    return rows


def table_json(level: AdmissibleLevel) -> dict:
    cc = central_charges(level)
    return {
        "u": level.u, "v": level.v, "k": format_rational(level.k),
        "central_charges": {"c_vir": format_rational(cc.c_vir),
                            "c_lattice": format_rational(cc.c_lattice),
                            "c_sl2": format_rational(cc.c_sl2)},
        "rows": [{"r": row["r"], "s": row["s"], "lambda": format_rational(row["lambda"]),
                  "Delta": format_rational(row["Delta"]), "h": format_rational(row["h"]),
                  "id": list(row["id"])} for row in level_table(level)],
        "ordinary_extension": [{"r": row["r"], "s": 0, "lambda": format_rational(row["lambda"]),
                                "Delta": format_rational(row["Delta"])} for row in ordinary_rows(level)],
    }


def table_text(level: AdmissibleLevel) -> str:
    head = ("r", "s", "lambda", "Delta", "h", "id")
    body = [(str(row["r"]), str(row["s"]), format_rational(row["lambda"]),
             format_rational(row["Delta"]), format_rational(row["h"]),
             f"({row['id'][0]},{row['id'][1]})") for row in level_table(level)]
    widths = [max(len(x) for x in col) for col in zip(head, *body)]
    cc = central_charges(level)
    lines = [f"# u={level.u} v={level.v} k={format_rational(level.k)} "
             f"c_vir={format_rational(cc.c_vir)} c_lattice={format_rational(cc.c_lattice)} "
             f"c_sl2={format_rational(cc.c_sl2)}"]
    for row in (head, *body):
        lines.append("  ".join(x.rjust(w) for x, w in zip(row, widths)))
    return "\n".join(lines) + "\n"
