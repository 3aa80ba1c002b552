"""Weight recovery from an oracle or from finite samples.

The learner solves a constant-size block of the first k items outright, then
extends one item at a time: each new item joins a pair system with a pivot
from the solved block, costing three new oracle values, and its weight is a
rational function of the pivot weight. A final scalar normalization equation
recovers the block's share of the total mass. Query accounting charges one
query per (slate, item) value, so the extension phase costs 3 per item and
everything else a constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .identify import CandidateSolution, enumerate_candidates, _swap_dedup
from .model import (
    MixtureModel,
    OracleTable,
    Slate,
    all_slates,
    sample_empirical,
    slate_distribution,
)
from .polynomials import RealPolynomial, interpolate, solve_all_roots


class LearnError(Exception):
    """Unrecoverable learner failure."""


class OracleInconsistentError(LearnError):
    """No admissible block solution: the oracle values are not a 2-MNL."""


class DegenerateInstanceError(LearnError):
    """Normalization equation has no admissible root."""


@dataclass(frozen=True)
class LearnConfig:
    """Learner knobs; defaults follow the desk-scale experiment setup."""

    k: int = 4
    eps: float = 0.05
    samples_per_slate: Optional[int] = None
    seed: int = 0
    c_low: float = 0.01
    c_high: float = 0.99
    tol: float = 1e-8
    sel_rtol: float = 1e-3  # noisy root selection: ambiguity guard on |imag| gaps

    def auto_samples(self, n: int) -> int:
        return math.ceil(8 * n**3 / self.eps**2)


@dataclass(frozen=True)
class LearnReport:
    a_hat: Optional[tuple]
    b_hat: Optional[tuple]
    queries_used: int
    queries_kblock: int
    queries_extension: int
    samples_used: int
    max_rel_error: Optional[float]
    status: tuple

    @property
    def ok(self) -> bool:
        bad = {"sampling-too-noisy", "k-identifiability-violation",
               "degenerate-normalization", "no-admissible-candidate"}
        return self.a_hat is not None and not bad & set(self.status)

    def to_dict(self) -> dict:
        return {
            "a_hat": list(self.a_hat) if self.a_hat else None,
            "b_hat": list(self.b_hat) if self.b_hat else None,
            "queries": self.queries_used,
            "queries_kblock": self.queries_kblock,
            "queries_extension": self.queries_extension,
            "samples": self.samples_used,
            "max_rel_error": self.max_rel_error,
            "status": list(self.status),
        }


class _ValueOracle:
    """Caches slate rows and counts distinct (slate, item) value queries."""

    def __init__(self, row_source: Callable[[Slate], tuple], lam, n: int):
        self._source = row_source
        self._rows: dict = {}
        self.lam = lam
        self.n = n
        self.counts = {"kblock": 0, "extension": 0}
        self._seen: set = set()

    def row(self, slate: Slate) -> tuple:
        if slate.items not in self._rows:
            self._rows[slate.items] = self._source(slate)
        return self._rows[slate.items]

    def value(self, slate: Slate, item: int, bucket: str):
        # one query per distinct (slate, item) ask within each phase; a value
        # the extension re-requests after the block phase is a fresh oracle
        # call even though the row is cached
        key = (slate.items, item, bucket)
        if key not in self._seen:
            self._seen.add(key)
            self.counts[bucket] += 1
        return self.row(slate)[slate.items.index(item)]

    def table_for(self, slates: Sequence[Slate], bucket: str) -> OracleTable:
        entries = {}
        for s in slates:
            values = tuple(self.value(s, i, bucket) for i in s.items)
            entries[s.items] = values
        return OracleTable(self.n, self.lam, entries)


def _rel_error(est_a, est_b, truth: MixtureModel) -> float:
    def one(pa, pb):
        return max(
            abs(x - t) / t + abs(y - u) / u
            for x, t, y, u in zip(pa, truth.a.w, pb, truth.b.w)
        )

    err = one(est_a, est_b)
    if float(truth.lam) == 1.0:
        err = min(err, one(est_b, est_a))
    return float(err)


NOISY_ADM_MARGIN = 0.05


def _noisy_block_estimate(table, lam: float, items: tuple, cands, size) -> tuple:
    """Best block fit under noise: refit every initializer, keep the lowest loss.

    Closed-form quartic roots degrade badly when the true pivot weight sits
    near the spurious root cluster at the partner map's pole, so the root
    candidates only seed a least-squares refit. Deterministic mixture-split
    perturbations of the single-component fit join the initializer pool; the
    split direction matters because the collapse point is a stationary ridge
    of the least-squares landscape.
    """
    k = len(items)
    rows = [(it, table.entries[it]) for it in sorted(table.entries)]
    full_row = table.entries[tuple(sorted(items))]
    base = [min(max(float(v) / (1 + lam), 1e-4), 1.0) for v in full_row]
    total = sum(base)
    base = [v / total for v in base]

    inits = [(list(c.a), list(c.b)) for c in cands]
    for axis in range(k):
        for sgn in (1.0, -1.0):
            delta = [
                sgn * (0.2 * base[t] if t == axis
                       else -0.2 * base[axis] * base[t] / (1 - base[axis]))
                for t in range(k)
            ]
            a0 = [max(base[t] + delta[t], 1e-4) for t in range(k)]
            b0 = [max(base[t] - delta[t] / lam, 1e-4) for t in range(k)]
            a0 = [v / sum(a0) for v in a0]
            b0 = [v / sum(b0) for v in b0]
            inits.append((a0, b0))

    best = None
    for a0, b0 in inits:
        a0 = [min(max(float(v), 1e-6), 1.0) for v in a0]
        b0 = [min(max(float(v), 1e-6), 1.0) for v in b0]
        a0 = [v / sum(a0) for v in a0]
        b0 = [v / sum(b0) for v in b0]
        a, b, loss = _refine_weights(a0, b0, lam, items, rows, size)
        if best is None or loss < best[2]:
            best = (a, b, loss)
    return best


def _solve_block(
    oracle: _ValueOracle, lam, cfg: LearnConfig, items: tuple, noisy: bool
) -> tuple:
    """Solve the k-item block; returns (candidate, statuses)."""
    statuses: list = []
    block_slates = all_slates(len(items), items=items)
    table = oracle.table_for(block_slates, "kblock")
    cands, st = enumerate_candidates(
        table,
        lam,
        items,
        tol=cfg.tol,
        # noisy estimates of small weights wobble below zero; admit them and
        # let the clamp + least-squares refit pull them back inside
        tau_adm=NOISY_ADM_MARGIN if noisy else 1e-9,
        noisy=noisy,
        sel_rtol=cfg.sel_rtol,
    )
    statuses.extend(st)
    if not cands and not noisy:
        raise OracleInconsistentError("no admissible block solution")
    if noisy:
        fit = _noisy_block_estimate(
            table, float(lam), items, cands, getattr(oracle, "noise_size", None)
        )
        if fit is None or not math.isfinite(fit[2]):
            statuses.append("sampling-too-noisy")
            return None, statuses
        a, b, _ = fit
        best = CandidateSolution(
            items=items, a=tuple(a), b=tuple(b), residual=0.0, admissible=True
        )
    else:
        if float(lam) == 1.0:
            cands, _ = _swap_dedup(cands)
        if len(cands) > 1:
            statuses.append("k-identifiability-violation")
        best = cands[0]
    # a collapsed block solves with component gap at solver-noise scale
    # (the quartic has a double root there), so detect well above it
    if max(abs(float(x) - float(y)) for x, y in zip(best.a, best.b)) < 1e-6:
        statuses.append("collapse")
        statuses.append("k-identifiability-violation")
        return None, statuses
    return best, statuses


def _normalization_roots(poly: RealPolynomial) -> list:
    p = poly.as_float()
    if p.is_zero() or p.degree < 1:
        return []
    return [r for r in solve_all_roots(p).real_roots if 0 < r <= 1 + 1e-12]


def _learn(
    oracle: _ValueOracle,
    lam,
    cfg: LearnConfig,
    n: int,
    noisy: bool,
    truth: Optional[MixtureModel],
    samples_used: int,
) -> LearnReport:
    k = max(3, min(cfg.k, n))
    statuses: list = []
    if k == 3:
        statuses.append("k3-warning")  # 3-item blocks may be non-identifiable
    items = tuple(range(1, k + 1))

    block, st = _solve_block(oracle, lam, cfg, items, noisy)
    statuses.extend(st)

    def report(a=None, b=None, err=None):
        return LearnReport(
            a_hat=a,
            b_hat=b,
            queries_used=oracle.counts["kblock"] + oracle.counts["extension"],
            queries_kblock=oracle.counts["kblock"],
            queries_extension=oracle.counts["extension"],
            samples_used=samples_used,
            max_rel_error=err,
            status=tuple(dict.fromkeys(statuses)),
        )

    if block is None:
        return report()

    # pivot: block item with the widest |b - a| gap keeps the partner-map
    # denominator, lam * (b_pivot - a_pivot), away from zero
    gaps = [abs(float(x) - float(y)) for x, y in zip(block.a, block.b)]
    piv_idx = max(range(k), key=gaps.__getitem__)
    pivot = items[piv_idx]
    a_rel = [float(x) for x in block.a]
    b_rel = [float(x) for x in block.b]

    full = Slate.of(range(1, n + 1))
    c_piv = float(oracle.value(full, pivot, "extension"))

    if k == n:
        b_hat = list(b_rel)
        a_hat = [float(x) for x in block.a]
    else:
        drop_pivot = Slate.of(i for i in range(1, n + 1) if i != pivot)
        tail = list(range(k + 1, n + 1))
        c_full_j = {j: float(oracle.value(full, j, "extension")) for j in tail}
        c_dropp_j = {j: float(oracle.value(drop_pivot, j, "extension")) for j in tail}
        # ratio-boundedness diagnostic on the large-slate values we paid for
        lo_prob = min([c_piv] + list(c_full_j.values())) / (1 + float(lam))
        if lo_prob * n < cfg.c_low:
            statuses.append("low-regularity")
        # third value per tail item: drop-j slate for the pivot, used as a
        # residual check on each extension step
        c_dropj_piv = {}
        for j in tail:
            drop_j = Slate.of(i for i in range(1, n + 1) if i != j)
            c_dropj_piv[j] = float(oracle.value(drop_j, pivot, "extension"))

        lamf = float(lam)

        def den(x):
            return lamf * ((1 + lamf) * x - c_piv)

        def num_j(j, x):
            return (c_dropp_j[j] * (1 - c_piv + lamf * x) - c_full_j[j]) * (1 - x)

        r = b_rel[piv_idx]

        def cleared(s):
            x = r * s
            return (s - 1) * den(x) + sum(num_j(j, x) for j in tail)

        nodes = [0.0, 0.5, 1.0]
        scale_poly = interpolate(nodes, [cleared(t) for t in nodes])

        margin = NOISY_ADM_MARGIN if noisy else 0.0

        def admissible_scale(s):
            x = r * s
            d = den(x)
            if abs(d) < 1e-12 * (1 + lamf):
                return None
            bj = {j: num_j(j, x) / d for j in tail}
            if not all(-margin < v < 1 for v in bj.values()):
                return None
            if not 0 < x < 1:
                return None
            return bj

        def extension_residual(s, bj):
            x = r * s
            worst = 0.0
            for j in tail:
                da = 1 - (c_full_j[j] - lamf * bj[j])
                db = 1 - bj[j]
                if abs(da) < 1e-12 or abs(db) < 1e-12:
                    return float("inf")
                e = (c_piv - lamf * x) / da + lamf * x / db - c_dropj_piv[j]
                worst = max(worst, abs(e))
            return worst

        options = []
        for s in _normalization_roots(scale_poly):
            bj = admissible_scale(s)
            if bj is None:
                continue
            options.append((extension_residual(s, bj), s, bj))
        if not options:
            # bisection fallback on the raw normalization equation, then a
            # grid argmin of |equation| over the admissible range (noise can
            # leave the polynomial rootless while a near-solution exists)
            s = _bisect_normalization(cleared, admissible_scale)
            if s is None:
                s = _argmin_normalization(cleared, admissible_scale)
            if s is None:
                if noisy:
                    statuses.append("degenerate-normalization")
                    return report()
                raise DegenerateInstanceError("no admissible normalization root")
            statuses.append("normalization-bisection")
            options = [(0.0, s, admissible_scale(s))]
        options.sort(key=lambda t: (t[0], t[1]))
        _, scale, b_tail = options[0]

        b_hat = [v * scale for v in b_rel] + [b_tail[j] for j in tail]
        a_tail = {j: c_full_j[j] - lamf * b_tail[j] for j in tail}
        a_piv = c_piv - lamf * b_hat[piv_idx]
        total_a = a_piv / a_rel[piv_idx]
        a_hat = [v * total_a for v in a_rel] + [a_tail[j] for j in tail]

    sum_a, sum_b = sum(a_hat), sum(b_hat)
    if abs(sum_a - 1) > 1e-8 or abs(sum_b - 1) > 1e-8:
        statuses.append("sum-mismatch" if not noisy else "sum-drift")
    if noisy:
        # sampling noise can push tiny weights over the edge; clamp before
        # the least-squares refit, which keeps iterates strictly positive
        a_hat = [max(v, 1e-9) for v in a_hat]
        b_hat = [max(v, 1e-9) for v in b_hat]
    elif min(a_hat) <= 0 or min(b_hat) <= 0:
        statuses.append("nonpositive-weight")
        return report()
    sum_a, sum_b = sum(a_hat), sum(b_hat)
    a_hat = [v / sum_a for v in a_hat]
    b_hat = [v / sum_b for v in b_hat]
    if noisy:
        a_hat, b_hat = _refine_full(a_hat, b_hat, float(lam), oracle)

    err = _rel_error(a_hat, b_hat, truth) if truth is not None else None
    return report(tuple(a_hat), tuple(b_hat), err)


def _refine_weights(
    a0: Sequence[float],
    b0: Sequence[float],
    lam: float,
    items: Sequence[int],
    rows: Sequence[tuple],
    size: Optional[int],
    iters: int = 12,
) -> tuple:
    """Gauss-Newton refit of the weights over `items` against the given rows.

    The chained plug-in estimate uses a minimal equation set; refitting
    against every queried row is the least-squares use of the same data and
    shrinks the noise amplification by a sizable factor. Equations carry
    inverse-sigma weights from the multinomial noise model; the weight
    vectors are parameterized by their trailing coordinates so the simplex
    constraint is built in. Returns (a, b, weighted_sse).
    """
    items = tuple(items)
    pos = {it: idx for idx, it in enumerate(items)}
    n = len(items)
    flat = [
        (row_items, i, float(c)) for row_items, values in rows
        for i, c in zip(row_items, values)
    ]

    def unpack(theta):
        a = [1 - sum(theta[: n - 1])] + list(theta[: n - 1])
        b = [1 - sum(theta[n - 1:])] + list(theta[n - 1:])
        return a, b

    def residuals(theta):
        a, b = unpack(theta)
        if min(a) <= 0 or min(b) <= 0:
            return None
        sums = {}
        out = []
        for row_items, i, c in flat:
            if row_items not in sums:
                sums[row_items] = (
                    sum(a[pos[t]] for t in row_items),
                    sum(b[pos[t]] for t in row_items),
                )
            sa, sb = sums[row_items]
            q = a[pos[i]] / sa + lam * (b[pos[i]] / sb)
            if size:
                # variance-stabilized residual: Gauss-Newton on sqrt cells is
                # the asymptotically efficient multinomial fit (the row-sum
                # constraint cancels the rank-one Fisher term)
                if q <= 0:
                    return None
                out.append(math.sqrt(max(c, 0.0)) - math.sqrt(q))
            else:
                out.append(q - c)
        return out

    theta = list(a0[1:]) + list(b0[1:])
    cur = residuals(theta)
    if cur is None:
        return list(a0), list(b0), float("inf")
    best = (sum(v * v for v in cur), list(theta))
    m = len(theta)
    for _ in range(iters):
        base = residuals(theta)
        if base is None:
            break
        jac = []
        h = 1e-7
        for idx in range(m):
            bumped = list(theta)
            bumped[idx] += h
            rb = residuals(bumped)
            if rb is None:
                rb = base
            jac.append([(x - y) / h for x, y in zip(rb, base)])
        # normal equations J^T J dx = -J^T r, solved by elimination
        jtj = [[sum(jac[i][t] * jac[j][t] for t in range(len(base))) for j in range(m)]
               for i in range(m)]
        jtr = [sum(jac[i][t] * base[t] for t in range(len(base))) for i in range(m)]
        for i in range(m):
            jtj[i][i] += 1e-12
        step = _solve_dense(jtj, [-v for v in jtr])
        if step is None:
            break
        moved = False
        scale = 1.0
        for _ in range(6):
            trial = [t + scale * s for t, s in zip(theta, step)]
            rt = residuals(trial)
            if rt is not None:
                ss = sum(v * v for v in rt)
                if ss < best[0]:
                    best = (ss, trial)
                    theta = trial
                    moved = True
                    break
            scale /= 2
        if not moved:
            break
        if best[0] < 1e-28:
            break
    a, b = unpack(best[1])
    return a, b, best[0]


def _refine_full(a0: list, b0: list, lam: float, oracle: "_ValueOracle") -> tuple:
    rows = [(items, oracle._rows[items]) for items in sorted(oracle._rows)]
    size = getattr(oracle, "noise_size", None)
    n = len(a0)
    a, b, _ = _refine_weights(a0, b0, lam, range(1, n + 1), rows, size)
    return a, b


def _solve_dense(mat: list, rhs: list):
    m = len(mat)
    aug = [row[:] + [rhs[i]] for i, row in enumerate(mat)]
    for col in range(m):
        piv = max(range(col, m), key=lambda r: abs(aug[r][col]))
        if abs(aug[piv][col]) < 1e-300:
            return None
        aug[col], aug[piv] = aug[piv], aug[col]
        pv = aug[col][col]
        for r in range(col + 1, m):
            f = aug[r][col] / pv
            for c in range(col, m + 1):
                aug[r][c] -= f * aug[col][c]
    out = [0.0] * m
    for i in range(m - 1, -1, -1):
        acc = aug[i][m] - sum(aug[i][j] * out[j] for j in range(i + 1, m))
        out[i] = acc / aug[i][i]
    return out


def _bisect_normalization(cleared, admissible_scale, grid: int = 2000):
    prev = None
    for idx in range(1, grid + 1):
        s = idx / grid
        val = cleared(s)
        if prev is not None and val * prev < 0:
            a, b = (idx - 1) / grid, s
            for _ in range(80):
                mid = (a + b) / 2
                if cleared(a) * cleared(mid) <= 0:
                    b = mid
                else:
                    a = mid
            mid = (a + b) / 2
            if admissible_scale(mid) is not None:
                return mid
        prev = val
    return None


def _argmin_normalization(cleared, admissible_scale, grid: int = 2000):
    best = None
    for idx in range(1, grid + 1):
        s = idx / grid
        if admissible_scale(s) is None:
            continue
        v = abs(cleared(s))
        if best is None or v < best[0]:
            best = (v, s)
    return best[1] if best else None


def learn_from_oracle(
    source,
    lam=None,
    cfg: LearnConfig = LearnConfig(),
    truth: Optional[MixtureModel] = None,
    n: Optional[int] = None,
) -> LearnReport:
    """Recover the weights from exact oracle access.

    `source` may be a MixtureModel (its exact oracle is queried and it doubles
    as ground truth for the error metric), an OracleTable covering the needed
    slates, or a callable mapping a Slate to its scaled value row (then both
    `lam` and `n` are required).
    """
    if isinstance(source, MixtureModel):
        model = source
        lam = model.lam
        n = model.n
        scale = 1 + model.lam

        def rows(slate: Slate) -> tuple:
            return tuple(scale * d for d in slate_distribution(model, slate))

        oracle = _ValueOracle(rows, lam, n)
        if truth is None:
            truth = model
    elif isinstance(source, OracleTable):
        if lam is None:
            lam = source.lam
        n = source.n
        oracle = _ValueOracle(source.value, lam, n)
    elif callable(source):
        if lam is None or n is None:
            raise ValueError("callable oracle access needs explicit lambda and n")
        oracle = _ValueOracle(source, lam, n)
    else:
        raise TypeError(f"unsupported oracle source {type(source)!r}")
    return _learn(oracle, lam, cfg, n, noisy=False, truth=truth, samples_used=0)


def learn_from_samples(
    model: MixtureModel,
    lam=None,
    cfg: LearnConfig = LearnConfig(),
) -> LearnReport:
    """Recover the weights from per-slate empirical estimates.

    Every queried slate is sampled cfg.samples_per_slate times (default
    8 n^3 / eps^2) with a stream derived from (cfg.seed, slate), and the
    oracle pipeline runs on the perturbed values with nearest-to-real root
    selection.
    """
    if lam is None:
        lam = model.lam
    n = model.n
    size = cfg.samples_per_slate or cfg.auto_samples(n)
    tally = {"slates": 0}

    def rows(slate: Slate) -> tuple:
        tally["slates"] += 1
        return tuple(
            float(v) for v in sample_empirical(model, slate, size, cfg.seed)
        )

    oracle = _ValueOracle(rows, float(lam), n)
    oracle.noise_size = size  # enables the efficient multinomial refit
    # sample the whole large-slate family up front: the final refit uses
    # every sampled row, and at a fixed per-slate budget the extra drop-one
    # slates buy a sizable accuracy margin for the tail items
    oracle.row(Slate.of(range(1, n + 1)))
    for j in range(1, n + 1):
        oracle.row(Slate.of(i for i in range(1, n + 1) if i != j))
    report = _learn(
        oracle, float(lam), cfg, n, noisy=True, truth=model, samples_used=0
    )
    return LearnReport(
        a_hat=report.a_hat,
        b_hat=report.b_hat,
        queries_used=report.queries_used,
        queries_kblock=report.queries_kblock,
        queries_extension=report.queries_extension,
        samples_used=size * tally["slates"],
        max_rel_error=report.max_rel_error,
        status=report.status,
    )


def solve_normalization(
    b1_rel: float,
    partner_maps: Sequence[tuple],
    lam: float,
    c_pivot: float,
    residual_fn: Optional[Callable[[float], float]] = None,
) -> float:
    """Block share of the total mass from the scalar normalization equation.

    partner_maps holds (c_full_j, c_drop_pivot_j) per tail item; all share the
    common linear denominator lam*((1+lam) x - c_pivot). Solves
    s + sum_j f_j(b1_rel * s) = 1 on (0, 1], preferring polynomial roots and
    falling back to bisection. The cleared equation is quadratic and can have
    two admissible roots; pass residual_fn (held-out equation violation at a
    candidate scale) to break such ties.
    """
    if not partner_maps:
        return 1.0

    def den(x):
        return lam * ((1 + lam) * x - c_pivot)

    def num(cf, cd, x):
        return (cd * (1 - c_pivot + lam * x) - cf) * (1 - x)

    def cleared(s):
        x = b1_rel * s
        return (s - 1) * den(x) + sum(num(cf, cd, x) for cf, cd in partner_maps)

    def admissible(s):
        x = b1_rel * s
        d = den(x)
        if abs(d) < 1e-12 * (1 + lam) or not 0 < x < 1:
            return None
        vals = [num(cf, cd, x) / d for cf, cd in partner_maps]
        if not all(0 < v < 1 for v in vals):
            return None
        return vals

    nodes = [0.0, 0.5, 1.0]
    poly = interpolate(nodes, [cleared(t) for t in nodes])
    roots = [s for s in _normalization_roots(poly) if admissible(s) is not None]
    if roots:
        rank = residual_fn if residual_fn is not None else (lambda s: abs(cleared(s)))
        return min(roots, key=rank)
    s = _bisect_normalization(cleared, admissible)
    if s is None:
        raise DegenerateInstanceError("no admissible normalization root")
    return s
