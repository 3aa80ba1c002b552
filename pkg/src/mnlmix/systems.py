"""Reduction of slate-choice equation systems to univariate quartics.

For a pair of items (pivot i, partner j), the four oracle values from the
full slate and the two drop-one slates pin the unknowns (a_i, a_j, b_i, b_j)
to the roots of a single quartic in b_i: the partner weight is a rational
function of the pivot weight, and substituting it into the remaining
drop-slate equation and clearing denominators leaves a degree-4 polynomial.
A second quartic arises the same way from the two-item slate {i, j}.

Quartics are constructed by evaluating the cleared expression at five
abscissae and interpolating, which is exact in rational arithmetic and
avoids hand-expanded coefficient formulas.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .model import MixtureModel, OracleTable, Slate, oracle_table
from .polynomials import (
    DegenerateInputError,
    RealPolynomial,
    deflate_root,
    interpolate,
    sylvester_resultant,
)


class DegenerateBranchSignal(ArithmeticError):
    """Pivot weight sits on the branch where the partner map's denominator dies."""


@dataclass(frozen=True)
class PairSystemInput:
    """Oracle values feeding one (a_i, a_j, b_i, b_j) system.

    c_full_i / c_full_j come from the full slate, c_drop_j_i from the slate
    without the partner, c_drop_i_j from the slate without the pivot, and
    c_pair_i (present only when the universe has more than the pair plus one
    item to spare) from the two-item slate {i, j}.
    """

    lam: object
    c_full_i: object
    c_full_j: object
    c_drop_j_i: object
    c_drop_i_j: object
    c_pair_i: object = None
    pivot: int = 1
    partner: int = 2

    @property
    def exact(self) -> bool:
        vals = [self.lam, self.c_full_i, self.c_full_j, self.c_drop_j_i, self.c_drop_i_j]
        if self.c_pair_i is not None:
            vals.append(self.c_pair_i)
        return all(isinstance(v, (Fraction, int)) for v in vals)

    def tau_den(self) -> float:
        return 1e-9 * float(1 + self.lam)

    def pivot_pin(self):
        """The pivot value on the degenerate branch, c_full_i / (1 + lam)."""
        return self.c_full_i / (1 + self.lam)


def pair_system(
    oracle: OracleTable,
    pivot: int,
    partner: int,
    items: Optional[Sequence[int]] = None,
    include_pair: bool = False,
) -> PairSystemInput:
    """Assemble the pair-system inputs from an oracle over the given universe."""
    universe = tuple(items) if items is not None else tuple(range(1, oracle.n + 1))
    full = Slate.of(universe)
    drop_partner = Slate.of(i for i in universe if i != partner)
    drop_pivot = Slate.of(i for i in universe if i != pivot)
    c_pair = None
    if include_pair:
        c_pair = oracle.value_for(Slate.of((pivot, partner)), pivot)
    return PairSystemInput(
        lam=oracle.lam,
        c_full_i=oracle.value_for(full, pivot),
        c_full_j=oracle.value_for(full, partner),
        c_drop_j_i=oracle.value_for(drop_partner, pivot),
        c_drop_i_j=oracle.value_for(drop_pivot, partner),
        c_pair_i=c_pair,
        pivot=pivot,
        partner=partner,
    )


def _numden(sys: PairSystemInput):
    lam = sys.lam

    def num(x):
        return (sys.c_drop_i_j * (1 - sys.c_full_i + lam * x) - sys.c_full_j) * (1 - x)

    def den(x):
        return lam * ((1 + lam) * x - sys.c_full_i)

    return num, den


def partner_value(bi, sys: PairSystemInput):
    """Partner weight b_j as a rational function of the pivot weight b_i.

    Raises DegenerateBranchSignal when the denominator falls under the guard,
    i.e. b_i is (numerically) the pinned value c_full_i / (1 + lam); callers
    switch to the degenerate branch.
    """
    num, den = _numden(sys)
    d = den(bi)
    if sys.exact and isinstance(bi, (Fraction, int)):
        if d == 0:
            raise DegenerateBranchSignal("pivot weight pinned, partner map undefined")
        return num(bi) / d
    if abs(float(d)) <= sys.tau_den():
        raise DegenerateBranchSignal("pivot weight pinned, partner map undefined")
    return num(bi) / d


def back_substitute(b1, b2, c_full_row: Sequence, lam):
    """Remaining 3-item unknowns from (b_1, b_2) and the full-slate row.

    c_full_row holds the scaled full-slate values for items (1, 2, 3).
    Returns (a_1, a_2, a_3, b_3); sums to one are built in.
    """
    c1, c2 = c_full_row[0], c_full_row[1]
    a1 = c1 - lam * b1
    a2 = c2 - lam * b2
    b3 = 1 - b1 - b2
    a3 = 1 - c1 - c2 + lam * (b1 + b2)
    return a1, a2, a3, b3


def _interp_nodes(exact: bool, shift=0):
    if exact:
        return [Fraction(k, 4) + Fraction(shift, 17) for k in range(5)]
    return [k / 4 + shift / 17 for k in range(5)]


def _build_by_interpolation(value_at, exact: bool) -> RealPolynomial:
    for attempt in range(10):
        xs = _interp_nodes(exact, attempt)
        ys = []
        ok = True
        for x in xs:
            y = value_at(x)
            if not exact and not _finite(y):
                ok = False
                break
            ys.append(y)
        if ok:
            return interpolate(xs, ys)
    raise DegenerateInputError("no usable interpolation abscissae after 10 retries")


def _finite(y) -> bool:
    try:
        return abs(float(y)) < float("inf")
    except (OverflowError, ValueError):
        return False


def pair_quartic(sys: PairSystemInput) -> RealPolynomial:
    """Quartic in the pivot weight from the drop-partner slate equation.

    Every admissible solution of the pair system has its pivot weight among
    the roots (plus possibly the degenerate pinned branch).
    """
    lam = sys.lam
    num, den = _numden(sys)

    def cleared(x):
        nx, dx = num(x), den(x)
        one_minus_aj = (1 - sys.c_full_j) * dx + lam * nx
        one_minus_bj = dx - nx
        return (
            sys.c_drop_j_i * one_minus_aj * one_minus_bj
            - (sys.c_full_i - lam * x) * dx * one_minus_bj
            - lam * x * dx * one_minus_aj
        )

    return _build_by_interpolation(cleared, sys.exact)


def pair_slate_quartic(sys: PairSystemInput) -> RealPolynomial:
    """Companion quartic from the two-item slate {pivot, partner} equation."""
    if sys.c_pair_i is None:
        raise ValueError("pair-slate value missing from the system input")
    lam = sys.lam
    num, den = _numden(sys)

    def cleared(x):
        nx, dx = num(x), den(x)
        sum_a = (sys.c_full_i + sys.c_full_j - lam * x) * dx - lam * nx
        sum_b = x * dx + nx
        return (
            sys.c_pair_i * sum_a * sum_b
            - (sys.c_full_i - lam * x) * dx * sum_b
            - lam * x * dx * sum_a
        )

    return _build_by_interpolation(cleared, sys.exact)


def pair_system_residual(sys: PairSystemInput, ai, aj, bi, bj):
    """Max absolute violation of the pair-system equations at a candidate."""
    lam = sys.lam
    errs = []
    exact = sys.exact and all(isinstance(v, (Fraction, int)) for v in (ai, aj, bi, bj))

    def ratio(nume, deno):
        if exact:
            if deno == 0:
                return None
            return nume / deno
        if abs(float(deno)) < 1e-300:
            return None
        return nume / deno

    t1 = ratio(ai, 1 - aj)
    t2 = ratio(bi, 1 - bj)
    if t1 is None or t2 is None:
        return float("inf")
    errs.append(abs(t1 + lam * t2 - sys.c_drop_j_i))
    t1 = ratio(aj, 1 - ai)
    t2 = ratio(bj, 1 - bi)
    if t1 is None or t2 is None:
        return float("inf")
    errs.append(abs(t1 + lam * t2 - sys.c_drop_i_j))
    errs.append(abs(ai + lam * bi - sys.c_full_i))
    errs.append(abs(aj + lam * bj - sys.c_full_j))
    if sys.c_pair_i is not None:
        t1 = ratio(ai, ai + aj)
        t2 = ratio(bi, bi + bj)
        if t1 is None or t2 is None:
            return float("inf")
        errs.append(abs(t1 + lam * t2 - sys.c_pair_i))
    return max(errs)


def degenerate_partner_quadratic(sys: PairSystemInput) -> RealPolynomial:
    """Partner-weight polynomial on the pinned branch b_i = c_full_i/(1+lam).

    With the pivot pinned, the drop-pivot equation turns into a consistency
    statement and the drop-partner equation becomes a quadratic in b_j.
    """
    lam = sys.lam
    m = sys.pivot_pin()

    def cleared(y):
        return sys.c_drop_j_i * (1 - sys.c_full_j + lam * y) * (1 - y) - m * (
            1 + lam * (1 - sys.c_full_j) + (lam * lam - 1) * y
        )

    exact = sys.exact
    xs = _interp_nodes(exact)[:3]
    return interpolate(xs, [cleared(x) for x in xs])


def resultant_gate(cubic_a: RealPolynomial, cubic_b: RealPolynomial):
    """Sylvester resultant of two deflated cubics after unit sup-norm scaling.

    Near-zero values signal a shared root, i.e. membership in the variety
    where a second solution of the joint system can exist.
    """
    return sylvester_resultant(cubic_a.scaled_to_unit(), cubic_b.scaled_to_unit())


def deflated_pair_cubic(
    model: MixtureModel,
    pivot: int,
    partner: int,
    use_pair_slate: bool = False,
    exact: Optional[bool] = None,
) -> RealPolynomial:
    """Pair quartic from the model's exact oracle, deflated at the true pivot weight."""
    n = model.n
    universe = tuple(range(1, n + 1))
    needed = [
        Slate.of(universe),
        Slate.of(i for i in universe if i != partner),
        Slate.of(i for i in universe if i != pivot),
    ]
    if use_pair_slate:
        needed.append(Slate.of((pivot, partner)))
    table = oracle_table(model, needed)
    sys = pair_system(table, pivot, partner, include_pair=use_pair_slate)
    quartic = pair_slate_quartic(sys) if use_pair_slate else pair_quartic(sys)
    return deflate_root(quartic, model.b[pivot - 1])


def gate_aggregate(
    model: MixtureModel,
    pairs: Optional[Sequence[tuple]] = None,
    pivot: int = 1,
):
    """Sum of squared scaled resultant gates over the listed partner pairs.

    Defaults to every pair (j, k) with pivot < j < k <= n. Zero means every
    listed gate vanishes; generic models give a strictly positive value.
    """
    n = model.n
    if pairs is None:
        others = [i for i in range(1, n + 1) if i != pivot]
        pairs = [(j, k) for idx, j in enumerate(others) for k in others[idx + 1:]]
    cubics = {}

    def cubic(j):
        if j not in cubics:
            cubics[j] = deflated_pair_cubic(model, pivot, j)
        return cubics[j]

    total = None
    for j, k in pairs:
        w = resultant_gate(cubic(j), cubic(k))
        total = w * w if total is None else total + w * w
    if total is None:
        raise ValueError("empty pair list")
    return total


def formal_pair_system(lam, a1, a2, b1, b2, include_pair: bool = False) -> PairSystemInput:
    """Pair system generated by formal 4-tuple inputs.

    The four oracle values only involve (a_1, a_2, b_1, b_2); third
    coordinates are implicitly one minus the sums, which may sit outside the
    simplex for formal witnesses.
    """
    c_full_1 = a1 + lam * b1
    c_full_2 = a2 + lam * b2
    c_drop_2_1 = a1 / (1 - a2) + lam * (b1 / (1 - b2))
    c_drop_1_2 = a2 / (1 - a1) + lam * (b2 / (1 - b1))
    c_pair = None
    if include_pair:
        c_pair = a1 / (a1 + a2) + lam * (b1 / (b1 + b2))
    return PairSystemInput(lam, c_full_1, c_full_2, c_drop_2_1, c_drop_1_2, c_pair)
