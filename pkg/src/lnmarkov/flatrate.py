"""Closed-form zero geometry for a constant short rate.

When the input curve is flat the infinite-volatility slice polynomial
collapses, after the substitution y = e^{r0 tau} x, onto the family

    p_n(y) = a + y + y^2 + ... + y^n,      a = 1/(1 - e^{-r0 tau}) > 1,

whose zeros admit a complete analysis: they solve the trinomial
y^{n+1} + (a-1)y - a = 0 (with y = 1 excluded), sit outside the unit
disk, and arrange themselves on an explicit polar curve rho(theta)
satisfying

    rho^{2(n+1)} = (a-1)^2 rho^2 - 2a(a-1) rho cos(theta) + a^2.

On the real axis (theta = 0) that equation factorises and the existence
of crossings reduces to the sign of h(rho) = rho^{n+1} - (a-1)rho + a at
its minimum — two crossings, a tangency, or none, with the case
boundary at an explicit degree threshold n_star(a).  Everything here
feeds the critical-volatility formulas and the maximal-volatility
table builder.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from decimal import Decimal, ROUND_HALF_EVEN

from mpmath import mp, mpf

from .errors import DomainError, InvalidInputError, NotBracketedError
from .model import DEFAULT_PRECISION_BITS, Real, to_mpf
from .genfunc import GenFunction
from .zeros import RootSet, find_roots


@dataclass(frozen=True)
class FlatRatePoly:
    """The polynomial a + y + ... + y^degree with a > 1."""

    a: mpf
    degree: int
    precision_bits: int = DEFAULT_PRECISION_BITS

    def __post_init__(self) -> None:
        bits = int(self.precision_bits)
        with mp.workprec(bits):
            a = mp.mpf(self.a)
        if not a > 1:
            raise InvalidInputError("constant term parameter must exceed 1")
        if int(self.degree) < 1:
            raise InvalidInputError("degree must be at least 1")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "degree", int(self.degree))
        object.__setattr__(self, "precision_bits", bits)

    @property
    def coeffs(self) -> tuple:
        with mp.workprec(self.precision_bits):
            return (self.a,) + (mp.one,) * self.degree

    @property
    def ring_radius(self) -> mpf:
        """a^(1/degree): modulus of the uniform-ring approximation."""
        with mp.workprec(self.precision_bits):
            return self.a ** (mp.one / self.degree)


def from_short_rate(
    r0: Real, tau: Real, degree: int, precision_bits: int = DEFAULT_PRECISION_BITS
) -> FlatRatePoly:
    """Build the polynomial for a given short rate and accrual."""
    with mp.workprec(precision_bits):
        r0 = to_mpf(r0, precision_bits)
        tau = to_mpf(tau, precision_bits)
        if r0 <= 0 or tau <= 0:
            raise InvalidInputError("need r0 > 0 and tau > 0")
        a = 1 / (1 - mp.exp(-r0 * tau))
    return FlatRatePoly(a=a, degree=degree, precision_bits=precision_bits)


def asymptotic_genfunc(
    r0: Real, tau: Real, degree: int, precision_bits: int = DEFAULT_PRECISION_BITS
) -> GenFunction:
    """Infinite-volatility slice polynomial for a flat curve, in x units.

    g(x) = 1 + (1 - e^{-r0 tau}) * sum_{j=1..degree} (e^{r0 tau} x)^j.
    Its zeros are e^{-r0 tau} times the zeros of the corresponding
    :class:`FlatRatePoly`, so the ring pinches the axis near e^{-r0 tau}
    as the degree grows.
    """
    with mp.workprec(precision_bits):
        r0 = to_mpf(r0, precision_bits)
        tau = to_mpf(tau, precision_bits)
        if r0 <= 0 or tau <= 0:
            raise InvalidInputError("need r0 > 0 and tau > 0")
        if int(degree) < 1:
            raise InvalidInputError("degree must be at least 1")
        lead = 1 - mp.exp(-r0 * tau)
        growth = mp.exp(r0 * tau)
        coeffs = [mp.one]
        power = mp.one
        for _ in range(int(degree)):
            power *= growth
            coeffs.append(lead * power)
    return GenFunction(
        slice_index=0,
        coeffs=tuple(coeffs),
        psi_t=0,
        psi=None,
        precision_bits=precision_bits,
    )


def p_roots(poly: FlatRatePoly) -> RootSet:
    """All zeros of p_n; every modulus exceeds 1 (positive, increasing
    coefficient tail)."""
    return find_roots(poly.coeffs, precision_bits=poly.precision_bits)


def zeros_approx(poly: FlatRatePoly) -> tuple:
    """First/last-term approximation: a^{1/n} e^{i pi (2k-1)/n}, k = 1..n.

    Keeping only the constant and leading terms of p_n places the zeros
    uniformly on the circle of radius a^{1/n}; sorted like a RootSet for
    direct comparison.
    """
    n = poly.degree
    with mp.workprec(poly.precision_bits):
        r = poly.ring_radius
        pts = [r * mp.expjpi(mp.mpf(2 * k - 1) / n) for k in range(1, n + 1)]
        pts.sort(key=lambda z: (z.real, z.imag))
        return tuple(pts)


# ---------------------------------------------------------------------------
# The modulus curve rho(theta) and its real-axis cases
# ---------------------------------------------------------------------------

def _bisect(f, lo, hi, bits):
    """Plain sign-change bisection run down to working precision."""
    flo = f(lo)
    if flo == 0:
        return lo
    for _ in range(bits + 16):
        mid = (lo + hi) / 2
        fm = f(mid)
        if fm == 0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return (lo + hi) / 2


def _curve_gap(poly: FlatRatePoly, rho, cos_theta):
    a, n = poly.a, poly.degree
    return rho ** (2 * (n + 1)) - (
        (a - 1) ** 2 * rho * rho - 2 * a * (a - 1) * rho * cos_theta + a * a
    )


def _h(poly: FlatRatePoly, rho):
    a, n = poly.a, poly.degree
    return rho ** (n + 1) - (a - 1) * rho + a


@dataclass(frozen=True)
class RealAxisReport:
    """Classification of the modulus curve on the positive real axis.

    ``case`` is 1 (two crossings), 2 (tangency at rho_star) or 3 (no
    crossing beyond the trivial rho = 1).  ``crossings`` holds the exact
    solutions of h when they exist; ``quadratic`` the second-order
    expansion around the minimum, available in case 1.
    """

    case: int
    rho_star: mpf
    h_at_star: mpf
    crossings: tuple
    quadratic: tuple


def real_axis_cases(poly: FlatRatePoly) -> RealAxisReport:
    """Classify theta = 0 by the sign of h at its minimum rho_star."""
    bits = poly.precision_bits
    a, n = poly.a, poly.degree
    with mp.workprec(bits):
        rho_star = ((a - 1) / (n + 1)) ** (mp.one / n)
        h_star = a - n * rho_star ** (n + 1)
        if h_star > 0:
            return RealAxisReport(3, rho_star, h_star, (), ())
        if h_star == 0:
            return RealAxisReport(2, rho_star, h_star, (rho_star,), ())
        # two simple crossings straddle the minimum; h(1) = 2 > 0 brackets
        # the lower one, growth brackets the upper one
        lower = _bisect(lambda r: _h(poly, r), mp.one, rho_star, bits)
        hi = 2 * rho_star
        while _h(poly, hi) <= 0:
            hi *= 2
        upper = _bisect(lambda r: _h(poly, r), rho_star, hi, bits)
        spread = mp.sqrt(
            2 * (n * rho_star ** (n + 1) - a)
            / (n * (n + 1) * rho_star ** (n - 1))
        )
        return RealAxisReport(
            1,
            rho_star,
            h_star,
            (lower, upper),
            (rho_star - spread, rho_star + spread),
        )


def rho_curve(poly: FlatRatePoly, theta: Real) -> mpf:
    """Radius of the zero-carrying branch of the modulus curve at theta.

    Solves the degree-2(n+1) modulus equation for the largest solution
    in (1, infinity) — the branch the zeros sit on; every exact zero
    satisfies the equation identically at its own angle.  At theta = 0
    the equation factorises and the answer follows the case analysis:
    the larger h crossing (case 1), the tangency point (case 2), or a
    not-bracketed error when the curve never returns to the axis
    (case 3, the long-polynomial regime).
    """
    bits = poly.precision_bits
    with mp.workprec(bits):
        theta = to_mpf(theta, bits)
        if theta < 0 or theta > mp.pi:
            raise DomainError("theta must lie in [0, pi]")
        if theta == 0:
            report = real_axis_cases(poly)
            if report.case == 3:
                raise NotBracketedError(
                    "modulus curve does not cross the positive real axis "
                    "(degree above the case threshold)"
                )
            return report.crossings[-1]
        cos_t = mp.cos(theta)
        delta = mp.mpf("1e-6")
        lo = 1 + delta
        hi = max(mp.mpf(2), poly.a ** (mp.mpf(2) / poly.degree))
        while _curve_gap(poly, hi, cos_t) <= 0:
            hi *= 2
        # walk down from the positive side; the first sign change from
        # above brackets the largest crossing
        cells = 2048
        step = (hi - lo) / cells
        upper = hi
        for k in range(1, cells + 1):
            r = hi - k * step
            if r < lo:
                r = lo
            if _curve_gap(poly, r, cos_t) <= 0:
                return _bisect(
                    lambda q: _curve_gap(poly, q, cos_t), r, upper, bits
                )
            upper = r
        raise NotBracketedError(
            "no modulus-curve crossing found above 1 at this angle"
        )


@dataclass(frozen=True)
class DegreeThreshold:
    """Case boundary in the polynomial degree for fixed a.

    ``integer`` is the smallest degree at which the real-axis crossing
    disappears; ``real`` the continuous solution of the boundary
    equation when one exists in (0, integer].
    """

    integer: int
    real: mpf | None


def _phi(a, x):
    return x * mp.log(a / x) - (x + 1) * mp.log((a - 1) / (x + 1))


def n_star(a: Real, precision_bits: int = DEFAULT_PRECISION_BITS) -> DegreeThreshold:
    """Degree threshold where the real-axis crossings vanish.

    The crossing exists (case 1) exactly while (a/n)^n <
    ((a-1)/(n+1))^{n+1}; the threshold is the smallest integer degree
    violating this, found by scanning the log form, together with the
    real solution of the equality.
    """
    bits = precision_bits
    with mp.workprec(bits):
        a = to_mpf(a, bits)
        if not a > 1:
            raise InvalidInputError("parameter a must exceed 1")
        n = 1
        while _phi(a, mp.mpf(n)) < 0:
            n += 1
        if n == 1:
            # boundary may sit below degree 1; probe smaller arguments
            lo = None
            x = mp.mpf("0.5")
            while x > mp.mpf(2) ** -40:
                if _phi(a, x) < 0:
                    lo = x
                    break
                x /= 2
            if lo is None:
                return DegreeThreshold(integer=1, real=None)
            real = _bisect(lambda t: _phi(a, t), lo, mp.one, bits)
            return DegreeThreshold(integer=1, real=real)
        real = _bisect(lambda t: _phi(a, t), mp.mpf(n - 1), mp.mpf(n), bits)
        return DegreeThreshold(integer=n, real=real)


def angular_check(poly: FlatRatePoly, rootset: RootSet | None = None) -> tuple:
    """Count upper-half-plane roots per predicted angular interval.

    For even degree n every upper-half root has its angle in exactly one
    window ((2k-1) pi/(n+1), 2k pi/(n+1)), k = 1..n/2; the returned
    tuple should therefore be all ones.  Odd degrees put one root on the
    negative real axis and are not covered by this bookkeeping.
    """
    from .errors import UnsupportedInputError

    n = poly.degree
    if n % 2 != 0:
        raise UnsupportedInputError("angular interval count needs even degree")
    rs = rootset if rootset is not None else p_roots(poly)
    with mp.workprec(poly.precision_bits):
        angles = [mp.arg(z) for z in rs.roots if z.imag > 0]
        counts = []
        for k in range(1, n // 2 + 1):
            lo = (2 * k - 1) * mp.pi / (n + 1)
            hi = 2 * k * mp.pi / (n + 1)
            counts.append(sum(1 for t in angles if lo < t < hi))
        return tuple(counts)


# ---------------------------------------------------------------------------
# Critical-volatility formulas and the maximal-volatility table
# ---------------------------------------------------------------------------

def critical_vol_formula(
    r0: Real,
    tau: Real,
    n: int,
    i: int,
    precision_bits: int = DEFAULT_PRECISION_BITS,
):
    """Closed-form critical-volatility estimates for a flat curve.

    Exact form: solves e^{r0 tau + psi^2 t_i} = a^{1/(n-i-1)}, i.e. the
    evaluation point reaching the pinch radius of the asymptotic
    polynomial.  Simplified form: psi^2 = log(1/(r0 tau)) /
    (i (n-i-1) tau), which drops an r0 tau-sized correction.  Returns
    (exact, simplified).
    """
    n, i = int(n), int(i)
    if not (0 < i < n - 1):
        raise DomainError(f"need 0 < i < n-1, got i={i}, n={n}")
    with mp.workprec(precision_bits):
        r0 = to_mpf(r0, precision_bits)
        tau = to_mpf(tau, precision_bits)
        if r0 <= 0 or tau <= 0:
            raise DomainError("need r0 > 0 and tau > 0")
        if r0 * tau >= 1:
            raise DomainError("r0 tau must be below 1")
        a = 1 / (1 - mp.exp(-r0 * tau))
        n_f = n - i - 1
        t_i = i * tau
        sq_exact = (mp.log(a) / n_f - r0 * tau) / t_i
        if sq_exact <= 0:
            raise DomainError(
                "no positive critical volatility at this slice (rate term "
                "dominates the pinch radius)"
            )
        sq_simpl = mp.log(1 / (r0 * tau)) / (i * n_f * tau)
        return mp.sqrt(sq_exact), mp.sqrt(sq_simpl)


def max_vol_percent(
    r0: Real, t_n: Real, tau: Real, precision_bits: int = DEFAULT_PRECISION_BITS
) -> Decimal:
    """Worst-slice volatility cap, in percent to two decimals.

    The simplified critical volatility is smallest at the mid-tenor
    slice i = [n/2]; the cap is sqrt(log(1/(r0 tau)) / ([n/2]^2 tau))
    with n = t_n/tau, rounded half-to-even.
    """
    with mp.workprec(precision_bits):
        r0 = to_mpf(r0, precision_bits)
        tau = to_mpf(tau, precision_bits)
        t_n = to_mpf(t_n, precision_bits)
        if r0 <= 0 or tau <= 0 or t_n <= 0:
            raise DomainError("need positive r0, tau, t_n")
        steps = t_n / tau
        n = int(mp.nint(steps))
        if abs(steps - n) > mp.mpf("1e-9") or n < 2:
            raise DomainError("total tenor must be an integer number of accruals")
        if r0 * tau >= 1:
            raise DomainError("r0 tau must be below 1")
        half = n // 2
        psi = mp.sqrt(mp.log(1 / (r0 * tau)) / (half * half * tau))
        pct = Decimal(mp.nstr(100 * psi, 30))
    return pct.quantize(Decimal("0.01"), rounding=ROUND_HALF_EVEN)


def max_vol_table(
    r0_values=("0.01", "0.02", "0.03", "0.04", "0.05"),
    t_n_values=(5, 10, 20, 30),
    tau_values=("0.25", "0.5"),
    precision_bits: int = DEFAULT_PRECISION_BITS,
) -> list:
    """Grid of volatility caps; one (r0, t_n, tau, percent) row per cell."""
    rows = []
    for r0 in r0_values:
        for t_n in t_n_values:
            for tau in tau_values:
                rows.append(
                    (
                        to_mpf(r0, precision_bits),
                        to_mpf(t_n, precision_bits),
                        to_mpf(tau, precision_bits),
                        max_vol_percent(r0, t_n, tau, precision_bits),
                    )
                )
    return rows


def write_max_vol_csv(rows, path) -> None:
    """Table dump with header ``r0,t_n,tau,psi_max_percent``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["r0", "t_n", "tau", "psi_max_percent"])
        for r0, t_n, tau, pct in rows:
            writer.writerow(
                [f"{float(r0):g}", f"{float(t_n):g}", f"{float(tau):g}", str(pct)]
            )


def max_vol_markdown(rows) -> str:
    """Markdown table, r0 rows against (t_n, tau) columns."""
    cols = []
    for _, t_n, tau, _ in rows:
        key = (float(t_n), float(tau))
        if key not in cols:
            cols.append(key)
    by_r0: dict = {}
    for r0, t_n, tau, pct in rows:
        by_r0.setdefault(float(r0), {})[(float(t_n), float(tau))] = pct
    header = "| r0 | " + " | ".join(
        f"t_n={t_n:g}, tau={tau:g}" for t_n, tau in cols
    ) + " |"
    rule = "|" + "---|" * (len(cols) + 1)
    lines = [header, rule]
    for r0 in sorted(by_r0):
        cells = [f"{by_r0[r0].get(c, '')}%" for c in cols]
        lines.append(f"| {100 * r0:g}% | " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"
