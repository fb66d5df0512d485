"""Tenor structure, discount curve inputs and derived curve quantities.

The model lives on a discrete tenor grid 0 = t_0 < t_1 < ... < t_n with
accruals tau_i = t_{i+1} - t_i.  Inputs are the initial discount factors
P_{0,i} on that grid and a single log-normal Libor volatility psi; the
Markov driver is a standard Brownian motion observed at the tenor dates.

Every real number is stored as an arbitrary-precision binary float
(mpmath) with a configurable mantissa width, 240 bits by default.  This
is not a luxury: at large volatility the convexity-adjusted Libors decay
like exp(-(n-i-1) psi^2 t_i) and drop below the double-precision range
well inside the parameter region this package is meant to explore, while
the associated expectations grow just as fast.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence, Union

from mpmath import mp, mpf
from mpmath.libmp import prec_to_dps

from .errors import InvalidInputError

Real = Union[int, float, str, mpf]

DEFAULT_PRECISION_BITS = 240
MIN_PRECISION_BITS = 64

#: Smallest positive IEEE-754 double (subnormal floor).  Adjusted Libors
#: below this value are flagged in exports: a double-precision consumer
#: would read them as exact zeros.
DOUBLE_SUBNORMAL_FLOOR = 2.0 ** -1074


def to_mpf(value: Real, precision_bits: int = DEFAULT_PRECISION_BITS) -> mpf:
    """Convert ``value`` to an mpf, rounding at ``precision_bits`` if needed.

    Decimal strings are the recommended way to pass curve levels such as
    "0.05": they are converted directly at the working precision instead
    of taking a detour through a 53-bit double.
    """
    with mp.workprec(precision_bits):
        try:
            out = mp.mpf(value)
        except (TypeError, ValueError) as exc:
            raise InvalidInputError(f"not a real number: {value!r}") from exc
        if not mp.isfinite(out):
            raise InvalidInputError(f"value must be finite, got {value!r}")
        return out


def decimal_str(value: Real, precision_bits: int = DEFAULT_PRECISION_BITS) -> str:
    """Decimal string with enough digits to round-trip at this precision."""
    if not isinstance(value, mpf):
        value = to_mpf(value, precision_bits)
    return mp.nstr(value, prec_to_dps(precision_bits) + 3, strip_zeros=True)


def rel_diff(a: Real, b: Real, precision_bits: int = DEFAULT_PRECISION_BITS) -> mpf:
    """Relative difference |a - b| / max(|a|, |b|), zero-safe."""
    with mp.workprec(precision_bits):
        a = mp.mpf(a) if not isinstance(a, mpf) else a
        b = mp.mpf(b) if not isinstance(b, mpf) else b
        scale = max(abs(a), abs(b))
        if scale == 0:
            return mp.zero
        return abs(a - b) / scale


@dataclass(frozen=True)
class TenorModel:
    """Tenor dates, initial discounts, volatility and working precision.

    Parameters
    ----------
    dates : sequence
        Tenor dates t_0 .. t_n in years; t_0 must be 0, strictly increasing.
    discounts : sequence
        Initial discount factors P_{0,i}; P_{0,0} must be 1, all positive.
    psi : real
        Log-normal Libor volatility, units 1/sqrt(year); non-negative.
    precision_bits : int
        Mantissa width for all internal arithmetic (>= 64, default 240).
    """

    dates: tuple
    discounts: tuple
    psi: mpf
    precision_bits: int = DEFAULT_PRECISION_BITS

    def __post_init__(self) -> None:
        bits = int(self.precision_bits)
        if bits < MIN_PRECISION_BITS:
            raise InvalidInputError(
                f"precision_bits must be >= {MIN_PRECISION_BITS}, got {bits}"
            )
        with mp.workprec(bits):
            dates = tuple(mp.mpf(t) for t in self.dates)
            discounts = tuple(mp.mpf(p) for p in self.discounts)
            psi = mp.mpf(self.psi)
            accruals = tuple(b - a for a, b in zip(dates, dates[1:]))
        if len(dates) != len(discounts):
            raise InvalidInputError("dates and discounts must have equal length")
        if len(dates) < 3:
            raise InvalidInputError("need at least three tenor dates (n >= 2)")
        if dates[0] != 0:
            raise InvalidInputError("first tenor date must be t = 0")
        if any(not b > a for a, b in zip(dates, dates[1:])):
            raise InvalidInputError("tenor dates must be strictly increasing")
        if discounts[0] != 1:
            raise InvalidInputError("the t = 0 discount factor must equal 1")
        if any(p <= 0 for p in discounts):
            raise InvalidInputError("discount factors must be strictly positive")
        if psi < 0:
            raise InvalidInputError("volatility psi must be non-negative")
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "discounts", discounts)
        object.__setattr__(self, "psi", psi)
        object.__setattr__(self, "precision_bits", bits)
        object.__setattr__(self, "_accruals", accruals)

    @property
    def n(self) -> int:
        """Number of accrual periods (dates run 0..n)."""
        return len(self.dates) - 1

    @property
    def accruals(self) -> tuple:
        """Accrual year fractions tau_i = t_{i+1} - t_i, i = 0..n-1."""
        return self._accruals

    def with_psi(self, psi: Real) -> "TenorModel":
        """Same curve and precision, different volatility."""
        return TenorModel(self.dates, self.discounts, psi, self.precision_bits)


@dataclass(frozen=True)
class RebasedCurve:
    """Initial discounts divided by the terminal discount P_{0,n}.

    values[i] holds P_{0,i} / P_{0,n}; the last entry is exactly 1.
    These are the natural units of the terminal measure and the only
    curve information the backward recursion consumes.
    """

    values: tuple
    precision_bits: int = DEFAULT_PRECISION_BITS

    def __post_init__(self) -> None:
        bits = int(self.precision_bits)
        with mp.workprec(bits):
            values = tuple(mp.mpf(v) for v in self.values)
        if len(values) < 3:
            raise InvalidInputError("need at least three curve points")
        if any(v <= 0 for v in values):
            raise InvalidInputError("rebased discounts must be positive")
        if values[-1] != 1:
            raise InvalidInputError("terminal rebased discount must equal 1")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "precision_bits", bits)


def flat_curve(
    r0: Real,
    n: int,
    tau: Real,
    psi: Real = 0,
    precision_bits: int = DEFAULT_PRECISION_BITS,
) -> TenorModel:
    """Constant-short-rate curve: t_i = i tau, P_{0,i} = exp(-r0 t_i)."""
    n = int(n)
    if n < 2:
        raise InvalidInputError("flat curve needs n >= 2 periods")
    with mp.workprec(precision_bits):
        r0 = mp.mpf(r0)
        tau = mp.mpf(tau)
        if r0 < 0:
            raise InvalidInputError("flat rate r0 must be non-negative")
        if tau <= 0:
            raise InvalidInputError("accrual tau must be positive")
        dates = tuple(i * tau for i in range(n + 1))
        discounts = tuple(mp.exp(-r0 * t) for t in dates)
    return TenorModel(dates, discounts, psi, precision_bits)


def rebase(model: TenorModel) -> RebasedCurve:
    """Divide the initial curve by its terminal discount."""
    with mp.workprec(model.precision_bits):
        pn = model.discounts[-1]
        values = tuple(p / pn for p in model.discounts)
    return RebasedCurve(values, model.precision_bits)


def forward_libors(curve: RebasedCurve, accruals: Sequence[Real]) -> tuple:
    """Simply-compounded forwards L_j = (values[j]/values[j+1] - 1)/tau_j."""
    if len(accruals) != len(curve.values) - 1:
        raise InvalidInputError("need one accrual per curve interval")
    with mp.workprec(curve.precision_bits):
        taus = [mp.mpf(t) for t in accruals]
        if any(t <= 0 for t in taus):
            raise InvalidInputError("accruals must be positive")
        v = curve.values
        return tuple((v[j] / v[j + 1] - 1) / taus[j] for j in range(len(taus)))


def scale(model: TenorModel, lam: Real) -> TenorModel:
    """Rescale time by lam, rates by 1/lam and volatility by 1/sqrt(lam).

    Discount factors are unchanged (P = exp(-r t) is invariant), so the
    solved coefficients and expectations are invariant as well; only the
    adjusted Libors pick up the factor 1/lam.
    """
    with mp.workprec(model.precision_bits):
        lam = mp.mpf(lam)
        if lam <= 0:
            raise InvalidInputError("scaling factor must be positive")
        dates = tuple(lam * t for t in model.dates)
        psi = model.psi / mp.sqrt(lam)
    return TenorModel(dates, model.discounts, psi, model.precision_bits)


def is_flat(model: TenorModel, rel_tol: mpf | None = None):
    """Detect a constant-short-rate curve with equal accruals.

    Returns ``(True, r0, tau)`` when all accruals agree and the discount
    ratios are geometric within ``rel_tol`` (default 2^(-bits/2)), else
    ``(False, None, None)``.
    """
    bits = model.precision_bits
    with mp.workprec(bits):
        tol = mp.mpf(2) ** (-(bits // 2)) if rel_tol is None else mp.mpf(rel_tol)
        taus = model.accruals
        tau = taus[0]
        if any(abs(t - tau) > tol * tau for t in taus[1:]):
            return False, None, None
        ratios = [
            model.discounts[i + 1] / model.discounts[i] for i in range(model.n)
        ]
        ratio = ratios[0]
        if any(abs(r - ratio) > tol * abs(ratio) for r in ratios[1:]):
            return False, None, None
        r0 = -mp.log(ratio) / tau
        return True, r0, tau


def read_curve_csv(
    path,
    psi: Real = 0,
    precision_bits: int = DEFAULT_PRECISION_BITS,
) -> TenorModel:
    """Load a ``t,P`` curve file written by :func:`write_curve_csv`.

    The header must be exactly ``t,P``; dates must start at 0 and increase
    strictly.  Values are parsed as decimal strings at the requested
    precision, so files written at 240 bits round-trip.
    """
    dates: list = []
    discounts: list = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["t", "P"]:
            raise InvalidInputError(f"curve file {path!r} must start with header 't,P'")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 2:
                raise InvalidInputError(f"{path!r}:{lineno}: expected two columns")
            try:
                t = to_mpf(row[0].strip(), precision_bits)
                p = to_mpf(row[1].strip(), precision_bits)
            except ValueError as exc:
                raise InvalidInputError(f"{path!r}:{lineno}: {exc}") from exc
            if dates and not t > dates[-1]:
                raise InvalidInputError(
                    f"{path!r}:{lineno}: tenor dates must be strictly increasing"
                )
            dates.append(t)
            discounts.append(p)
    return TenorModel(dates, discounts, psi, precision_bits)


def write_curve_csv(model: TenorModel, path) -> None:
    """Write the curve as ``t,P`` with full-precision discounts."""
    bits = model.precision_bits
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "P"])
        for t, p in zip(model.dates, model.discounts):
            writer.writerow([f"{float(t):.8f}", decimal_str(p, bits)])
