"""Univariate real-polynomial toolkit.

Dense ascending-coefficient polynomials with closed-form cubic/quartic
solvers (Newton-polished), discriminants, synthetic deflation, Sylvester
resultants, and a Sturm-sequence real-root counter used as an independent
cross-check on the closed forms.

Coefficients may be floats or exact ``fractions.Fraction`` values; the
closed-form solvers work in IEEE doubles, everything else (evaluation,
deflation, resultants, discriminants, Sturm counting) runs in whichever
arithmetic the coefficients carry.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence, Union

Number = Union[int, float, Fraction]


class PolynomialShapeError(ValueError):
    """Polynomial has the wrong degree (or is identically zero) for an operation."""


class NotARootError(ValueError):
    """Deflation requested at a point that is not a root within tolerance."""


class DegenerateInputError(ValueError):
    """Input hits a guard (e.g. Sturm endpoint stays a root after perturbation)."""


@dataclass(frozen=True)
class Tolerances:
    """Numerical guards for the floating-point paths, kept in one record.

    tau_imag: |imag| at or below which a solver root counts as real
    tau_defl: relative residual allowed when deflating at a claimed root
    tau_lead: relative size below which a leading coefficient is trimmed
    tau_conj: pairing tolerance for complex-conjugate root checks
    """

    tau_imag: float = 1e-8
    tau_defl: float = 1e-6
    tau_lead: float = 1e-13
    tau_conj: float = 1e-8


DEFAULT_TOL = Tolerances()


def _is_exact(coeffs: Sequence[Number]) -> bool:
    return all(isinstance(c, (Fraction, int)) for c in coeffs)


@dataclass(frozen=True)
class RealPolynomial:
    """Dense polynomial, ascending coefficients; trailing (near-)zeros trimmed."""

    coeffs: tuple
    exact: bool = field(default=False, compare=False)

    @staticmethod
    def of(coeffs: Sequence[Number], tol: Tolerances = DEFAULT_TOL) -> "RealPolynomial":
        cs = list(coeffs)
        if not cs:
            raise PolynomialShapeError("empty coefficient vector")
        exact = _is_exact(cs)
        if exact:
            while len(cs) > 1 and cs[-1] == 0:
                cs.pop()
        else:
            cs = [float(c) for c in cs]
            scale = max(abs(c) for c in cs)
            cut = tol.tau_lead * scale
            while len(cs) > 1 and abs(cs[-1]) <= cut:
                cs.pop()
        return RealPolynomial(tuple(cs), exact)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def sup_norm(self):
        return max(abs(c) for c in self.coeffs)

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs)

    def __call__(self, x):
        acc = self.coeffs[-1]
        for c in reversed(self.coeffs[:-1]):
            acc = acc * x + c
        return acc

    def derivative(self) -> "RealPolynomial":
        if self.degree == 0:
            return RealPolynomial.of([self.coeffs[0] * 0])
        return RealPolynomial.of([i * c for i, c in enumerate(self.coeffs)][1:])

    def scaled_to_unit(self) -> "RealPolynomial":
        m = self.sup_norm
        if m == 0:
            return self
        return RealPolynomial.of([c / m for c in self.coeffs])

    def as_float(self) -> "RealPolynomial":
        return RealPolynomial.of([float(c) for c in self.coeffs])


@dataclass(frozen=True)
class RootSet:
    """Solver output: all complex roots with realness flags."""

    roots: tuple
    real_flags: tuple

    @property
    def real_roots(self) -> tuple:
        return tuple(r.real for r, f in zip(self.roots, self.real_flags) if f)

    def real_roots_in(self, lo: float, hi: float) -> tuple:
        return tuple(r for r in self.real_roots if lo < r <= hi)


def poly_add(p: RealPolynomial, q: RealPolynomial) -> RealPolynomial:
    n = max(len(p.coeffs), len(q.coeffs))
    pc = list(p.coeffs) + [p.coeffs[0] * 0] * (n - len(p.coeffs))
    qc = list(q.coeffs) + [q.coeffs[0] * 0] * (n - len(q.coeffs))
    return RealPolynomial.of([a + b for a, b in zip(pc, qc)])


def poly_mul(p: RealPolynomial, q: RealPolynomial) -> RealPolynomial:
    zero = p.coeffs[0] * q.coeffs[0] * 0
    out = [zero] * (len(p.coeffs) + len(q.coeffs) - 1)
    for i, a in enumerate(p.coeffs):
        for j, b in enumerate(q.coeffs):
            out[i + j] += a * b
    return RealPolynomial.of(out)


def poly_scale(p: RealPolynomial, c) -> RealPolynomial:
    return RealPolynomial.of([c * a for a in p.coeffs])


def interpolate(xs: Sequence[Number], ys: Sequence[Number]) -> RealPolynomial:
    """Lagrange interpolation through len(xs) points, exact for exact inputs."""
    n = len(xs)
    if len(ys) != n:
        raise PolynomialShapeError("interpolation needs matching xs/ys")
    zero = xs[0] * 0
    acc = [zero] * n
    for i in range(n):
        basis = [zero + 1]
        denom = zero + 1
        for j in range(n):
            if j == i:
                continue
            nxt = [zero] * (len(basis) + 1)
            for k, c in enumerate(basis):
                nxt[k + 1] += c
                nxt[k] -= xs[j] * c
            basis = nxt
            denom *= xs[i] - xs[j]
        w = ys[i] / denom
        for k, c in enumerate(basis):
            acc[k] += w * c
    return RealPolynomial.of(acc)


def _newton_polish(p: RealPolynomial, r: complex, steps: int = 5) -> complex:
    dp = p.derivative()
    best, best_res = r, abs(p(r))
    x = r
    for _ in range(steps):
        d = dp(x)
        if abs(d) < 1e-300:
            break
        x = x - p(x) / d
        res = abs(p(x))
        if res < best_res:
            best, best_res = x, res
        else:
            break
    return best


def _flag_real(roots, tol: Tolerances) -> RootSet:
    flags = tuple(abs(r.imag) <= tol.tau_imag for r in roots)
    roots = tuple(complex(r.real, 0.0) if f else r for r, f in zip(roots, flags))
    return RootSet(roots, flags)


def _solve_quadratic(a: float, b: float, c: float) -> tuple:
    if a == 0:
        if b == 0:
            raise PolynomialShapeError("constant polynomial has no roots")
        return (complex(-c / b),)
    sq = cmath.sqrt(complex(b * b - 4 * a * c))
    big = -b - sq if b >= 0 else -b + sq
    if abs(big) < 1e-300:
        r = complex(-b / (2 * a))
        return (r, r)
    return (big / (2 * a), (2 * c) / big)


def _cbrt(x: float) -> float:
    return math.copysign(abs(x) ** (1.0 / 3.0), x)


def _balance_scale(coeffs_desc_monic: Sequence[float]) -> float:
    """Variable scale making a monic depressed polynomial's coefficients O(1)."""
    n = len(coeffs_desc_monic)
    s = 0.0
    for k, c in enumerate(coeffs_desc_monic, start=1):
        if c != 0:
            s = max(s, abs(c) ** (1.0 / k))
    return s if s > 0 else 1.0


def solve_cubic(p: RealPolynomial, tol: Tolerances = DEFAULT_TOL) -> RootSet:
    """All three roots of a degree-3 polynomial via Cardano, Newton-polished."""
    if p.degree != 3:
        raise PolynomialShapeError(f"solve_cubic needs degree 3, got {p.degree}")
    q = p.as_float().scaled_to_unit()
    d0, c1, b2, a3 = q.coeffs
    shift = b2 / (3 * a3)
    pp0 = c1 / a3 - 3 * shift * shift
    qq0 = 2 * shift**3 - shift * c1 / a3 + d0 / a3
    # balance the depressed cubic t^3 + pp t + qq so huge coefficient ratios
    # (tiny leading coefficients upstream) cannot wreck the closed form
    s = _balance_scale([0.0, pp0, qq0])
    pp = pp0 / (s * s)
    qq = qq0 / (s * s * s)
    half_q = qq / 2
    third_p = pp / 3
    disc = half_q * half_q + third_p**3
    if disc <= 0:
        # three real roots (trigonometric branch); disc <= 0 forces third_p <= 0
        m = math.sqrt(-third_p) if third_p < 0 else 0.0
        if m == 0.0:
            roots = [complex(-shift)] * 3  # triple root
        else:
            arg = max(-1.0, min(1.0, -half_q / (m**3)))
            theta = math.acos(arg)
            roots = [
                complex(2 * m * math.cos((theta + 2 * math.pi * k) / 3) * s - shift)
                for k in range(3)
            ]
    else:
        sq = math.sqrt(disc)
        # evaluate the cancellation-free cube root, recover the other via u*v = -third_p
        if half_q >= 0:
            cv = _cbrt(-half_q - sq)
            cu = -third_p / cv if cv != 0 else 0.0
        else:
            cu = _cbrt(-half_q + sq)
            cv = -third_p / cu if cu != 0 else 0.0
        w = complex(-0.5, math.sqrt(3) / 2)
        roots = [
            complex((cu + cv) * s - shift),
            (cu * w + cv * w.conjugate()) * s - shift,
            (cu * w.conjugate() + cv * w) * s - shift,
        ]
    roots = [_newton_polish(q, r) for r in roots]
    return _flag_real(tuple(roots), tol)


def solve_quartic(p: RealPolynomial, tol: Tolerances = DEFAULT_TOL) -> RootSet:
    """All four roots of a degree-4 polynomial via Ferrari's resolvent cubic."""
    if p.degree != 4:
        raise PolynomialShapeError(f"solve_quartic needs degree 4, got {p.degree}")
    q = p.as_float().scaled_to_unit()
    e0, d1, c2, b3, a4 = q.coeffs
    b, c, d, e = b3 / a4, c2 / a4, d1 / a4, e0 / a4
    shift = b / 4
    pp0 = c - 3 * b * b / 8
    qq0 = b**3 / 8 - b * c / 2 + d
    rr0 = -3 * b**4 / 256 + b * b * c / 16 - b * d / 4 + e
    # balance the depressed quartic: y = scale * t keeps the resolvent sane
    scale = _balance_scale([0.0, pp0, qq0, rr0])
    pp = pp0 / scale**2
    qq = qq0 / scale**3
    rr = rr0 / scale**4

    def biquadratic() -> list:
        ys = []
        for z in _solve_quadratic(1.0, pp, rr):
            sz = cmath.sqrt(z)
            ys.extend([sz, -sz])
        return ys

    if abs(qq) <= 1e-13 * (1 + abs(pp) + abs(rr)):
        ys = biquadratic()
    else:
        # factor t^4+pp t^2+qq t+rr = (t^2+s t+u)(t^2-s t+v) with S=s^2 solving
        # S^3 + 2 pp S^2 + (pp^2-4 rr) S - qq^2 = 0 (always has a root S >= 0)
        resolvent = RealPolynomial((-qq * qq, pp * pp - 4 * rr, 2 * pp, 1.0), False)
        zs = solve_cubic(resolvent, tol)
        real_s = [r.real for r, f in zip(zs.roots, zs.real_flags) if f and r.real > 0]
        if not real_s:
            ys = biquadratic()
        else:
            big_s = max(real_s)
            s = math.sqrt(big_s)
            t = qq / s
            u = (pp + big_s - t) / 2
            v = (pp + big_s + t) / 2
            ys = list(_solve_quadratic(1.0, s, u)) + list(_solve_quadratic(1.0, -s, v))
    roots = [_newton_polish(q, y * scale - shift) for y in ys]
    return _flag_real(tuple(roots), tol)


def solve_all_roots(p: RealPolynomial, tol: Tolerances = DEFAULT_TOL) -> RootSet:
    """Roots of a polynomial of degree 1..4, degrading gracefully.

    Construction-time trimming may drop an underflowing leading coefficient,
    so callers that build quartics from data silently get cubic or quadratic
    solving when the top coefficient degenerates.
    """
    q = p.as_float()
    if q.degree == 4:
        return solve_quartic(q, tol)
    if q.degree == 3:
        return solve_cubic(q, tol)
    if q.degree == 2:
        a, b, c = q.scaled_to_unit().coeffs[::-1]
        return _flag_real(tuple(_solve_quadratic(a, b, c)), tol)
    if q.degree == 1:
        return _flag_real((complex(-q.coeffs[0] / q.coeffs[1]),), tol)
    raise PolynomialShapeError("no roots for a constant polynomial")


def cubic_discriminant(p: RealPolynomial):
    """Standard discriminant of a cubic; >= 0 iff all roots are real."""
    if p.degree != 3:
        raise PolynomialShapeError(f"discriminant needs degree 3, got {p.degree}")
    d, c, b, a = p.coeffs
    return (
        18 * a * b * c * d
        - 4 * b**3 * d
        + b * b * c * c
        - 4 * a * c**3
        - 27 * a * a * d * d
    )


def deflate_root(p: RealPolynomial, r, tol: Tolerances = DEFAULT_TOL) -> RealPolynomial:
    """Synthetic division of p by (x - r); r must be a root within tau_defl."""
    if p.degree < 1:
        raise PolynomialShapeError("cannot deflate a constant")
    residual = p(r)
    if p.exact and isinstance(r, (Fraction, int)):
        if residual != 0:
            raise NotARootError(f"{r} is not an exact root (p(r)={residual})")
    elif abs(residual) > tol.tau_defl * float(p.sup_norm):
        raise NotARootError(
            f"|p(r)|={abs(residual):.3e} exceeds {tol.tau_defl:.0e} * sup-norm"
        )
    n = p.degree
    out = [p.coeffs[0] * 0] * n
    acc = p.coeffs[n]
    for k in range(n - 1, -1, -1):
        out[k] = acc
        acc = p.coeffs[k] + acc * r
    return RealPolynomial.of(out)


def is_exact_root(p: RealPolynomial, r) -> bool:
    """Exact-arithmetic membership test: p(r) == 0 with rational inputs."""
    if not p.exact:
        raise ValueError("exact root checking needs rational coefficients")
    return p(Fraction(r)) == 0


def sylvester_resultant(p: RealPolynomial, q: RealPolynomial):
    """Resultant of p and q as the determinant of their Sylvester matrix.

    Determinant by Gaussian elimination with partial pivoting; runs exactly
    when both polynomials carry Fraction coefficients.
    """
    m, n = p.degree, q.degree
    if m < 1 or n < 1:
        raise PolynomialShapeError("resultant needs two polynomials of degree >= 1")
    size = m + n
    exact = p.exact and q.exact
    zero = Fraction(0) if exact else 0.0
    pc = list(reversed(p.coeffs))  # descending
    qc = list(reversed(q.coeffs))
    rows = []
    for i in range(n):
        row = [zero] * size
        for j, cf in enumerate(pc):
            row[i + j] = cf if exact else float(cf)
        rows.append(row)
    for i in range(m):
        row = [zero] * size
        for j, cf in enumerate(qc):
            row[i + j] = cf if exact else float(cf)
        rows.append(row)
    det = Fraction(1) if exact else 1.0
    sign = 1
    for col in range(size):
        piv = max(range(col, size), key=lambda r: abs(rows[r][col]))
        if rows[piv][col] == 0:
            return zero
        if piv != col:
            rows[col], rows[piv] = rows[piv], rows[col]
            sign = -sign
        pval = rows[col][col]
        det *= pval
        for r in range(col + 1, size):
            f = rows[r][col] / pval
            if f == 0:
                continue
            for cc in range(col, size):
                rows[r][cc] -= f * rows[col][cc]
    return sign * det


def _poly_remainder(a: RealPolynomial, b: RealPolynomial, exact: bool) -> RealPolynomial:
    ra = list(a.coeffs)
    bc = b.coeffs
    db = b.degree

    def trim(v: list) -> list:
        if exact:
            while len(v) > 1 and v[-1] == 0:
                v.pop()
        else:
            scale = max((abs(c) for c in v), default=0.0)
            while len(v) > 1 and abs(v[-1]) <= 1e-12 * scale:
                v.pop()
        return v

    ra = trim(ra)
    while len(ra) - 1 >= db and any(c != 0 for c in ra):
        da = len(ra) - 1
        lead = ra[-1] / bc[-1]
        for k in range(db + 1):
            ra[da - db + k] -= lead * bc[k]
        ra.pop()
        ra = trim(ra)
    return RealPolynomial.of(ra)


def _sturm_chain(p: RealPolynomial) -> list:
    chain = [p, p.derivative()]
    while chain[-1].degree > 0:
        rem = _poly_remainder(chain[-2], chain[-1], p.exact)
        if rem.is_zero():
            break
        chain.append(poly_scale(rem, -1))
    return chain


def _sign_changes(chain, x) -> int:
    signs = []
    for f in chain:
        v = f(x)
        if v != 0:
            signs.append(1 if v > 0 else -1)
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def count_real_roots_sturm(
    p: RealPolynomial, lo: float, hi: float, tol: Tolerances = DEFAULT_TOL
) -> int:
    """Exact count of distinct real roots of p in (lo, hi] via Sturm signs."""
    if lo >= hi:
        raise DegenerateInputError("need lo < hi")
    span = hi - lo
    for attempt in range(6):
        bump = span * 1e-9 * (10**attempt) if attempt else 0.0
        a, b = lo + bump, hi + bump
        if p(a) != 0 and p(b) != 0:
            chain = _sturm_chain(p)
            return _sign_changes(chain, a) - _sign_changes(chain, b)
    raise DegenerateInputError("interval endpoint is a root after perturbation")
