"""Solution enumeration and identifiability checks for small universes.

The pair-system quartic bounds the candidate pivot weights; back-substitution
turns each root into a full weight assignment, and residual filtering against
every available slate equation decides admissibility. Uniqueness holds when
exactly one admissible class survives (up to component swap at lambda = 1).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .model import (
    MixtureModel,
    OracleTable,
    Slate,
    all_slates,
    format_number,
    oracle_table,
)
from .polynomials import RealPolynomial, deflate_root, solve_all_roots
from .systems import (
    DegenerateBranchSignal,
    PairSystemInput,
    back_substitute,
    degenerate_partner_quadratic,
    pair_quartic,
    pair_slate_quartic,
    pair_system,
    partner_value,
    pair_system_residual,
    resultant_gate,
)

TAU_ADM = 1e-9
DEDUP_RTOL = 1e-6
COLLAPSE_GAP = 1e-9


@dataclass(frozen=True)
class CandidateSolution:
    """A (possibly partial) weight assignment with its residual and flags."""

    items: tuple
    a: tuple
    b: tuple
    residual: float
    admissible: bool
    level: str = "full"  # "full" or "pair"
    branch: str = "root"  # "root" or "pinned"

    @property
    def exact(self) -> bool:
        return all(isinstance(v, (Fraction, int)) for v in self.a + self.b)

    def to_dict(self) -> dict:
        return {
            "items": list(self.items),
            "a": [format_number(v) for v in self.a],
            "b": [format_number(v) for v in self.b],
            "residual": float(self.residual),
            "admissible": self.admissible,
            "level": self.level,
            "branch": self.branch,
        }


@dataclass(frozen=True)
class IdentifiabilityReport:
    unique: bool
    solutions: tuple
    gate_values: dict
    swap_note: bool
    codes: tuple

    def to_dict(self) -> dict:
        return {
            "unique": self.unique,
            "solutions": [s.to_dict() for s in self.solutions],
            "gates": {k: float(v) for k, v in self.gate_values.items()},
            "swap_note": self.swap_note,
            "codes": list(self.codes),
        }

    @property
    def exit_code(self) -> int:
        if "collapse" in self.codes:
            return 3
        return 0 if self.unique else 2


def _in_unit(x, tau=TAU_ADM) -> bool:
    return -tau <= float(x) <= 1 + tau


def _tuple_admissible(values, tau=TAU_ADM) -> bool:
    return all(_in_unit(v, tau) for v in values)


def _close(u: Sequence, v: Sequence, rtol=DEDUP_RTOL) -> bool:
    return all(
        abs(float(x) - float(y)) <= rtol * max(1.0, abs(float(x)), abs(float(y)))
        for x, y in zip(u, v)
    )


def _dedup(cands: list) -> list:
    kept: list = []
    for c in sorted(cands, key=lambda c: (float(c.residual), tuple(map(float, c.b)))):
        if any(_close(c.a + c.b, k.a + k.b) for k in kept):
            continue
        kept.append(c)
    return kept


def _rationalize_root(poly: RealPolynomial, r: float):
    """Nearest small-denominator rational that is an exact root, else None."""
    for digits in range(1, 13):
        cand = Fraction(r).limit_denominator(10**digits)
        if poly(cand) == 0:
            return cand
    return None


def _polish_pair(sys: PairSystemInput, bi: float, bj: float, steps: int = 12):
    """Newton-refine (b_i, b_j) on the two drop-slate equations.

    Closed-form quartic roots lose accuracy when solutions cluster (near the
    collapse set the quartic has a near-multiple root, costing ~eps^(1/4));
    the candidate itself still separates, so a couple of Newton steps on the
    residual system restore full precision.
    """
    lam = float(sys.lam)
    c_fi, c_fj = float(sys.c_full_i), float(sys.c_full_j)
    c_ji, c_ij = float(sys.c_drop_j_i), float(sys.c_drop_i_j)

    def eqs(x, y):
        ai = c_fi - lam * x
        aj = c_fj - lam * y
        da, db = 1 - aj, 1 - y
        dc, dd = 1 - ai, 1 - x
        if min(abs(da), abs(db), abs(dc), abs(dd)) < 1e-12:
            return None
        e1 = ai / da + lam * x / db - c_ji
        e2 = aj / dc + lam * y / dd - c_ij
        return e1, e2

    x, y = float(bi), float(bj)
    cur = eqs(x, y)
    if cur is None:
        return bi, bj
    best = (abs(cur[0]) + abs(cur[1]), x, y)
    for _ in range(steps):
        h = 1e-7
        f0 = eqs(x, y)
        fx = eqs(x + h, y)
        fy = eqs(x, y + h)
        if f0 is None or fx is None or fy is None:
            break
        j11 = (fx[0] - f0[0]) / h
        j12 = (fy[0] - f0[0]) / h
        j21 = (fx[1] - f0[1]) / h
        j22 = (fy[1] - f0[1]) / h
        det = j11 * j22 - j12 * j21
        if abs(det) < 1e-14:
            break
        dx = (-f0[0] * j22 + f0[1] * j12) / det
        dy = (-j11 * f0[1] + j21 * f0[0]) / det
        x, y = x + dx, y + dy
        cur = eqs(x, y)
        if cur is None:
            break
        err = abs(cur[0]) + abs(cur[1])
        if err < best[0]:
            best = (err, x, y)
        if err < 1e-15:
            break
    return best[1], best[2]


def _quartic_pivot_roots(sys: PairSystemInput, tau_adm: float, exact: bool) -> list:
    quartic = pair_quartic(sys)
    if quartic.as_float().is_zero():
        return []
    roots = solve_all_roots(quartic.as_float())
    out = []
    for r in roots.real_roots_in(-tau_adm, 1 + tau_adm):
        if exact:
            fr = _rationalize_root(quartic, r)
            out.append(fr if fr is not None else r)
        else:
            out.append(r)
    return out


def solve_pair_system(
    sys: PairSystemInput,
    tol: float = 1e-8,
    tau_adm: float = TAU_ADM,
    exact: Optional[bool] = None,
) -> list:
    """All admissible solutions of one (a_i, a_j, b_i, b_j) system.

    Takes the real quartic roots inside the admissible band, back-substitutes
    each to a full 4-tuple, then appends the pinned-branch candidates; only
    candidates whose equation residual stays at or below tol survive.
    """
    if exact is None:
        exact = sys.exact
    lam = sys.lam
    raw = []
    for bi in _quartic_pivot_roots(sys, tau_adm, exact):
        try:
            bj = partner_value(bi, sys)
        except DegenerateBranchSignal:
            continue
        if not isinstance(bi, (Fraction, int)):
            bi, bj = _polish_pair(sys, bi, bj)
        ai = sys.c_full_i - lam * bi
        aj = sys.c_full_j - lam * bj
        raw.append(((ai, aj, bi, bj), "root"))
    # pinned branch: pivot fixed at c_full_i/(1+lam)
    m = sys.pivot_pin()
    quad = degenerate_partner_quadratic(sys)
    pinned_js = [sys.c_full_j / (1 + lam)]
    if not quad.as_float().is_zero() and quad.as_float().degree >= 1:
        for y in solve_all_roots(quad.as_float()).real_roots_in(-tau_adm, 1 + tau_adm):
            if exact:
                fy = _rationalize_root(quad, y)
                pinned_js.append(fy if fy is not None else y)
            else:
                pinned_js.append(y)
    for bj in pinned_js:
        aj = sys.c_full_j - lam * bj
        raw.append(((m, aj, m, bj), "pinned"))

    cands = []
    for (ai, aj, bi, bj), branch in raw:
        res = pair_system_residual(sys, ai, aj, bi, bj)
        adm = _tuple_admissible((ai, aj, bi, bj), tau_adm)
        cands.append(
            CandidateSolution(
                items=(sys.pivot, sys.partner),
                a=(ai, aj),
                b=(bi, bj),
                residual=float(res),
                admissible=adm,
                level="pair",
                branch=branch,
            )
        )
    good = [c for c in cands if c.admissible and c.residual <= tol]
    return _dedup(good)


def full_residual(a: Sequence, b: Sequence, lam, oracle: OracleTable, items: Sequence[int]):
    """Max violation over every oracle equation plus the two sum constraints."""
    pos = {it: idx for idx, it in enumerate(items)}
    errs = [abs(sum(a) - 1), abs(sum(b) - 1)]
    for slate_items, values in oracle.entries.items():
        sa = sum(a[pos[i]] for i in slate_items)
        sb = sum(b[pos[i]] for i in slate_items)
        if float(sa) <= 0 or float(sb) <= 0:
            return float("inf")
        for i, c in zip(slate_items, values):
            errs.append(abs(a[pos[i]] / sa + lam * (b[pos[i]] / sb) - c))
    return max(errs)


def _extend_candidate(
    b1,
    b2,
    oracle: OracleTable,
    lam,
    items: Sequence[int],
    systems: dict,
) -> Optional[tuple]:
    """Complete (b1, b2) on the first two items to weights over all items."""
    m = len(items)
    full = Slate.of(items)
    c_full = {i: oracle.value_for(full, i) for i in items}
    if m == 3:
        a1, a2, a3, b3 = back_substitute(
            b1, b2, (c_full[items[0]], c_full[items[1]], c_full[items[2]]), lam
        )
        return (a1, a2, a3), (b1, b2, b3)
    bs = {items[0]: b1, items[1]: b2}
    for j in items[2:]:
        try:
            bs[j] = partner_value(b1, systems[(items[0], j)])
        except DegenerateBranchSignal:
            try:
                bs[j] = partner_value(b2, systems[(items[1], j)])
            except DegenerateBranchSignal:
                # both pivots pinned: fall through to the all-pinned branch,
                # which is exact for fully collapsed models
                bs[j] = c_full[j] / (1 + lam)
    a = tuple(c_full[i] - lam * bs[i] for i in items)
    b = tuple(bs[i] for i in items)
    return a, b


def enumerate_candidates(
    oracle: OracleTable,
    lam,
    items: Sequence[int],
    tol: float = 1e-8,
    tau_adm: float = TAU_ADM,
    exact: Optional[bool] = None,
    noisy: bool = False,
    sel_rtol: float = 1e-3,
) -> tuple:
    """All admissible full assignments over `items` consistent with the oracle.

    Candidate pivot pairs come from the quartics of the (first, second) and
    (second, first) item pairs plus the doubly pinned branch, so both
    degenerate branches are covered. With noisy=True the quartic roots are
    selected by the perturbed-root rule instead: complex roots with real part
    in (0, 1), nearest-to-real first.

    Returns (candidates, statuses).
    """
    items = tuple(items)
    if exact is None:
        exact = isinstance(lam, (Fraction, int)) and all(
            isinstance(v, (Fraction, int))
            for vals in oracle.entries.values()
            for v in vals
        )
    statuses: list = []
    i0, i1 = items[0], items[1]
    sys01 = pair_system(oracle, i0, i1, items=items)
    sys10 = pair_system(oracle, i1, i0, items=items)
    systems = {(i0, i1): sys01, (i1, i0): sys10}
    for j in items[2:]:
        systems[(i0, j)] = pair_system(oracle, i0, j, items=items)
        systems[(i1, j)] = pair_system(oracle, i1, j, items=items)

    pairs: list = []
    if noisy:
        quartic = pair_quartic(sys01).as_float()
        if quartic.is_zero():
            statuses.append("degenerate-quartic")
            return [], statuses
        roots = solve_all_roots(quartic).roots
        inside = sorted(
            (r for r in roots if 0 < r.real < 1), key=lambda r: abs(r.imag)
        )
        if not inside:
            statuses.append("sampling-too-noisy")
            return [], statuses
        if len(inside) >= 2:
            g0, g1 = abs(inside[0].imag), abs(inside[1].imag)
            if g1 - g0 < sel_rtol * (1 + g0):
                statuses.append("root-ambiguity")
        for r in inside:
            b1 = r.real
            try:
                b2 = partner_value(b1, sys01)
            except DegenerateBranchSignal:
                continue
            b1, b2 = _polish_pair(sys01, b1, b2)
            pairs.append((b1, b2, "root"))
    else:
        for b1 in _quartic_pivot_roots(sys01, tau_adm, exact):
            try:
                b2 = partner_value(b1, sys01)
            except DegenerateBranchSignal:
                continue
            if not isinstance(b1, (Fraction, int)):
                b1, b2 = _polish_pair(sys01, b1, b2)
            pairs.append((b1, b2, "root"))
        for b2 in _quartic_pivot_roots(sys10, tau_adm, exact):
            try:
                b1 = partner_value(b2, sys10)
            except DegenerateBranchSignal:
                continue
            if not isinstance(b2, (Fraction, int)):
                b2, b1 = _polish_pair(sys10, b2, b1)
            pairs.append((b1, b2, "root"))
        pairs.append(
            (sys01.pivot_pin(), sys10.pivot_pin(), "pinned")
        )

    cands = []
    for b1, b2, branch in pairs:
        ext = _extend_candidate(b1, b2, oracle, lam, items, systems)
        if ext is None:
            continue
        a, b = ext
        res = full_residual(a, b, lam, oracle, items)
        adm = _tuple_admissible(a + b, tau_adm)
        cands.append(
            CandidateSolution(
                items=items,
                a=a,
                b=b,
                residual=float(res),
                admissible=adm,
                level="full",
                branch=branch,
            )
        )
    good = [c for c in cands if c.admissible and c.residual <= tol]
    if noisy and not good and cands:
        # under sampling noise no candidate meets the exact-mode residual bar;
        # keep the best admissible one and let the caller judge accuracy
        adm = [c for c in cands if c.admissible]
        if adm:
            good = [min(adm, key=lambda c: c.residual)]
        else:
            statuses.append("no-admissible-candidate")
    return _dedup(good), statuses


def solve_3item(
    oracle: OracleTable,
    lam,
    tol: float = 1e-8,
    tau_adm: float = TAU_ADM,
    exact: Optional[bool] = None,
) -> list:
    """All admissible 6-tuples consistent with a 3-item oracle.

    Needs the full slate and all three 2-slates; the 2-slate not consumed by
    the reduction acts as the informative held-out filter, and the residual
    here is taken over every oracle equation at once.
    """
    needed = {(1, 2), (1, 3), (2, 3), (1, 2, 3)}
    if not needed <= set(oracle.entries):
        missing = needed - set(oracle.entries)
        raise ValueError(f"3-item solve needs slates {sorted(missing)}")
    cands, _ = enumerate_candidates(
        oracle, lam, (1, 2, 3), tol=tol, tau_adm=tau_adm, exact=exact
    )
    return cands


def _swap_equivalent(c1: CandidateSolution, c2: CandidateSolution) -> bool:
    return _close(c1.a + c1.b, c2.b + c2.a)


def _swap_dedup(cands: list) -> tuple:
    kept: list = []
    merged = False
    for c in cands:
        if any(_swap_equivalent(c, k) for k in kept):
            merged = True
            continue
        kept.append(c)
    return kept, merged


def check_identifiability(model: MixtureModel, tol: float = 1e-8) -> IdentifiabilityReport:
    """Decide uniqueness of the model's weights given its exact oracle.

    Enumerates full-system solutions, scans every pair system (with the
    two-item slate) for pair-level multiplicity, and computes the scaled
    resultant gates; unique means a single admissible class at both levels.
    At lambda = 1 solutions are classes up to component swap.
    """
    n = model.n
    codes: list = []
    if model.collapse_gap() < COLLAPSE_GAP:
        truth = CandidateSolution(
            items=tuple(range(1, n + 1)),
            a=model.a.w,
            b=model.b.w,
            residual=0.0,
            admissible=True,
        )
        return IdentifiabilityReport(
            unique=False,
            solutions=(truth,),
            gate_values={},
            swap_note=False,
            codes=("collapse",),
        )

    # n = 3 and n = 4 get every slate; larger universes keep the 2-, (n-1)-
    # and n-slates, the sizes the reduction and its filters consume
    budget = [s for s in all_slates(n) if len(s) in (2, n - 1, n)]
    table = oracle_table(model, budget)

    full_cands, _ = enumerate_candidates(
        table, model.lam, tuple(range(1, n + 1)), tol=tol
    )

    is_uniform = float(model.lam) == 1.0
    swap_note = False
    if is_uniform:
        full_cands, swap_note = _swap_dedup(full_cands)

    solutions = list(full_cands)
    if len(full_cands) > 1:
        codes.append("full-multiplicity")
    if not full_cands:
        codes.append("no-solution")

    pair_extra = []
    if n >= 4:
        truth_by_item = {i + 1: (model.a[i], model.b[i]) for i in range(n)}
        for i in range(1, n + 1):
            for j in range(i + 1, n + 1):
                sys_ij = pair_system(table, i, j, include_pair=True)
                sols = solve_pair_system(sys_ij, tol=tol)
                if is_uniform:
                    sols, _ = _swap_dedup(sols)
                if len(sols) <= 1:
                    continue
                ta = (truth_by_item[i][0], truth_by_item[j][0])
                tb = (truth_by_item[i][1], truth_by_item[j][1])
                for s in sols:
                    if not _close(s.a + s.b, ta + tb):
                        pair_extra.append(s)
        if pair_extra:
            codes.append("pair-multiplicity")
            solutions.extend(_dedup(pair_extra))

    gates = _gate_values(model, table)
    unique = (
        len(full_cands) == 1 and not pair_extra and "no-solution" not in codes
    )
    return IdentifiabilityReport(
        unique=unique,
        solutions=tuple(solutions),
        gate_values=gates,
        swap_note=swap_note,
        codes=tuple(codes),
    )


def _gate_values(model: MixtureModel, table: OracleTable) -> dict:
    """Scaled resultant gates from the model's deflated pair cubics."""
    from .polynomials import NotARootError, PolynomialShapeError

    n = model.n
    b1 = model.b[0]
    gates: dict = {}
    cubics = {}
    for j in range(2, n + 1):
        quartic = pair_quartic(pair_system(table, 1, j))
        try:
            cubics[j] = deflate_root(quartic, b1)
        except (NotARootError, PolynomialShapeError):
            cubics[j] = None
    others = [j for j in range(2, n + 1) if cubics.get(j) is not None]
    for idx, j in enumerate(others):
        for k in others[idx + 1:]:
            try:
                w = resultant_gate(cubics[j], cubics[k])
                gates[f"drop:{j},{k}"] = abs(float(w))
            except PolynomialShapeError:
                pass
    if n >= 4:
        for j in others:
            try:
                tilde = deflate_root(
                    pair_slate_quartic(pair_system(table, 1, j, include_pair=True)), b1
                )
                w = resultant_gate(cubics[j], tilde)
                gates[f"pair:{j}"] = abs(float(w))
            except (NotARootError, PolynomialShapeError):
                pass
    return gates
