"""Per-slice generating polynomials and their volatility limits.

Collect the slice coefficients into a polynomial g_i(x) = sum_j c_j^(i) x^j.
The slice normalisation is then a single evaluation, N_i = g_i(q_i) with
q_i = exp(psi^2 t_i), and the whole backward induction can be rewritten
without ever forming a Libor:

    g_i(x) = g_{i+1}(x)
             + (Phat_{0,i+1} - Phat_{0,i+2}) * x
               * g_{i+1}(x q_{i+1}) / g_{i+1}(q_{i+1}),

with g_{n-1}(x) = 1 + (Phat_{0,n-1} - 1) x.  Both endpoint values are
curve data alone: g_i(0) = 1 and g_i(1) = Phat_{0,i+1}.

The polynomial interpolates between two closed forms.  At zero
volatility it factorises over the forward Libors,

    g_i(x) -> prod_{j>i} (1 + L_j tau_j x),

and as psi -> infinity the coefficients freeze at plain curve
differences, c_j -> Phat_{0,n-j} - Phat_{0,n-j+1} (first one
Phat_{0,n-1} - 1), independent of psi.  The analytic structure of these
polynomials in the complex plane is what drives the phase transition
studied in :mod:`lnmarkov.zeros`.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

from mpmath import mp, mpf

from .errors import DomainError, InvalidInputError
from .model import (
    DEFAULT_PRECISION_BITS,
    Real,
    TenorModel,
    decimal_str,
    forward_libors,
    rebase,
    to_mpf,
)
from .solver import ModelSolution, solve


@dataclass(frozen=True)
class GenFunction:
    """A slice generating polynomial sum_j coeffs[j] x^j.

    ``psi_t`` stores psi^2 * t_i for the slice, so the physical
    normalisation point q = exp(psi_t) travels with the polynomial.
    ``psi`` is kept when known (purely informational).
    """

    slice_index: int
    coeffs: tuple
    psi_t: mpf
    psi: mpf | None = None
    precision_bits: int = DEFAULT_PRECISION_BITS

    def __post_init__(self) -> None:
        bits = int(self.precision_bits)
        with mp.workprec(bits):
            coeffs = tuple(mp.mpf(c) for c in self.coeffs)
            psi_t = mp.mpf(self.psi_t)
            psi = None if self.psi is None else mp.mpf(self.psi)
        if not coeffs:
            raise InvalidInputError("generating polynomial needs coefficients")
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "psi_t", psi_t)
        object.__setattr__(self, "psi", psi)
        object.__setattr__(self, "precision_bits", bits)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def tilt_point(self) -> mpf:
        """q = exp(psi^2 t_i), the argument whose value is N_i."""
        with mp.workprec(self.precision_bits):
            return mp.exp(self.psi_t)


def from_solution(solution: ModelSolution, i: int) -> GenFunction:
    """Wrap row i of a solved coefficient table."""
    if not (0 <= i <= solution.n - 1):
        raise DomainError(f"slice index must be in 0..{solution.n - 1}, got {i}")
    m = solution.model
    with mp.workprec(m.precision_bits):
        psi_t = m.psi * m.psi * m.dates[i]
    return GenFunction(
        slice_index=i,
        coeffs=solution.coeffs[i],
        psi_t=psi_t,
        psi=m.psi,
        precision_bits=m.precision_bits,
    )


def evaluate(gf: GenFunction, x) -> mpf:
    """Horner evaluation; accepts real or complex argument."""
    with mp.workprec(gf.precision_bits):
        if isinstance(x, (mp.mpc, complex)):
            x = mp.mpc(x)
        else:
            x = to_mpf(x, gf.precision_bits)
        acc = mp.mpf(0) if not isinstance(x, mp.mpc) else mp.mpc(0)
        for c in reversed(gf.coeffs):
            acc = acc * x + c
        return acc


def build_libor_free(model: TenorModel, i: int) -> GenFunction:
    """Build g_i directly from the curve, never forming a Libor.

    Equivalent to solving and reading row i, but the recursion advances
    whole polynomials: each step adds the shifted-and-renormalised
    previous polynomial.  Useful both as an independent cross-check of
    the backward induction and as the natural construction when only the
    analytic structure (not the Libors) is wanted.
    """
    if not (0 <= i <= model.n - 1):
        raise DomainError(f"slice index must be in 0..{model.n - 1}, got {i}")
    bits = model.precision_bits
    curve = rebase(model)
    with mp.workprec(bits):
        psi2 = model.psi * model.psi
        phat = curve.values
        n = model.n
        coeffs = [mp.one]
        for k in range(n - 2, i - 1, -1):
            q = mp.exp(psi2 * model.dates[k + 1])
            # value and tilted coefficients of the previous polynomial
            norm = mp.zero
            power = mp.one
            tilted = []
            for c in coeffs:
                norm += c * power
                tilted.append(c * power)
                power *= q
            dp = phat[k + 1] - phat[k + 2]
            new = list(coeffs) + [mp.zero]
            for j in range(1, len(new)):
                new[j] += dp * tilted[j - 1] / norm
            coeffs = new
        psi_t = psi2 * model.dates[i]
    return GenFunction(
        slice_index=i,
        coeffs=tuple(coeffs),
        psi_t=psi_t,
        psi=model.psi,
        precision_bits=bits,
    )


def zero_vol_limit(model: TenorModel, i: int) -> GenFunction:
    """psi -> 0 limit: product over forward Libors after slice i."""
    if not (0 <= i <= model.n - 1):
        raise DomainError(f"slice index must be in 0..{model.n - 1}, got {i}")
    bits = model.precision_bits
    curve = rebase(model)
    with mp.workprec(bits):
        fwds = forward_libors(curve, model.accruals)
        coeffs = [mp.one]
        for j in range(i + 1, model.n):
            lt = fwds[j] * model.accruals[j]
            new = list(coeffs) + [mp.zero]
            for k in range(len(coeffs), 0, -1):
                new[k] += lt * coeffs[k - 1]
            coeffs = new
    return GenFunction(
        slice_index=i,
        coeffs=tuple(coeffs),
        psi_t=mp.zero,
        psi=mp.zero,
        precision_bits=bits,
    )


def infinite_vol_limit(model: TenorModel, i: int) -> GenFunction:
    """psi -> infinity limit: coefficients freeze at curve differences.

    c_0 = 1, c_1 = Phat_{0,n-1} - 1, and c_j = Phat_{0,n-j} - Phat_{0,n-j+1}
    for j >= 2 (down to j = n-1-i).  The stored tilt is zero: the limit
    polynomial is a fixed object and its tilt point diverges.
    """
    if not (0 <= i <= model.n - 1):
        raise DomainError(f"slice index must be in 0..{model.n - 1}, got {i}")
    bits = model.precision_bits
    curve = rebase(model)
    with mp.workprec(bits):
        phat = curve.values
        n = model.n
        coeffs = [mp.one]
        if n - 1 - i >= 1:
            coeffs.append(phat[n - 1] - 1)
        for j in range(2, n - i):
            coeffs.append(phat[n - j] - phat[n - j + 1])
    return GenFunction(
        slice_index=i,
        coeffs=tuple(coeffs),
        psi_t=mp.zero,
        psi=None,
        precision_bits=bits,
    )


def tilted_expectation(gf: GenFunction) -> mpf:
    """N_i = g_i(exp(psi^2 t_i)), the slice normalisation."""
    return evaluate(gf, gf.tilt_point)


# ---------------------------------------------------------------------------
# Small-psi and large-psi Libor asymptotics
# ---------------------------------------------------------------------------

def low_vol_libor(model: TenorModel, i: int) -> mpf:
    """First-order small-volatility expansion of the adjusted Libor.

    Ltilde_i ~ L_i^fwd (1 - sum_{j>i} [L_j tau_j / (1 + L_j tau_j)]
                             * (exp(psi^2 t_i) - 1)),

    with relative error of order (psi^2 t_i)^2.  Only the slice's own
    date enters the tilt: the expansion collapses every later tilt onto
    t_i at this order.
    """
    if not (0 <= i <= model.n - 1):
        raise DomainError(f"slice index must be in 0..{model.n - 1}, got {i}")
    bits = model.precision_bits
    curve = rebase(model)
    with mp.workprec(bits):
        fwds = forward_libors(curve, model.accruals)
        tilt = mp.exp(model.psi * model.psi * model.dates[i]) - 1
        weight = mp.fsum(
            fwds[j] * model.accruals[j] / (1 + fwds[j] * model.accruals[j])
            for j in range(i + 1, model.n)
        )
        return fwds[i] * (1 - weight * tilt)


def high_vol_libor(model: TenorModel, i: int) -> mpf:
    """Leading large-volatility decay for a flat curve.

    For a constant short rate the adjusted Libor collapses onto

        Ltilde_i ~ (exp(r0 tau)/tau) * exp(-(n-i-1) psi^2 t_i):

    the level forgets the rate almost entirely and dies at a rate set
    purely by the number of periods left.  Raises if the curve is not
    flat (the closed form needs equal accruals and a single rate).
    """
    from .model import is_flat

    if not (0 <= i <= model.n - 1):
        raise DomainError(f"slice index must be in 0..{model.n - 1}, got {i}")
    flat, r0, tau = is_flat(model)
    if not flat:
        from .errors import UnsupportedInputError

        raise UnsupportedInputError(
            "large-volatility closed form requires a flat curve"
        )
    bits = model.precision_bits
    with mp.workprec(bits):
        decay = (model.n - i - 1) * model.psi * model.psi * model.dates[i]
        return mp.exp(r0 * tau) / tau * mp.exp(-decay)


def write_genfunc_csv(gf: GenFunction, path) -> None:
    """Coefficient dump ``j,c_j`` at full precision."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["j", "c_j"])
        for j, c in enumerate(gf.coeffs):
            writer.writerow([j, decimal_str(c, gf.precision_bits)])
