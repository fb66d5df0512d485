"""Complex zeros of the slice polynomials and the induced phase transition.

The slice normalisation N_i = g_i(exp(psi^2 t_i)) stays an analytic
function of volatility only while the evaluation point stays inside the
zero-free disc of g_i.  The polynomial's zeros sit in the left half
plane on a rough ring; the evaluation point exp(psi^2 t_i) marches right
along the positive axis as psi grows.  The volatility where the point
first reaches the ring — where

    D(psi) = min_k |z_k(psi)| - exp(psi^2 t_i)

changes sign — marks a finite-size critical volatility: beyond it the
normalisation is dominated by the zero configuration, log N_i switches
growth regimes, and sampling-based methods lose the integrand.  This is
the classic mechanism by which accumulating complex zeros of a positive
generating function produce a non-analytic point on the real axis.

Root finding is simultaneous Newton (Aberth-Ehrlich) in arbitrary
precision, with residual certificates returned alongside the roots.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

from mpmath import mp, mpf

from .errors import (
    DivergenceError,
    InsufficientDataError,
    InvalidInputError,
    NotBracketedError,
    NumericFailureError,
)
from .model import DEFAULT_PRECISION_BITS, Real, TenorModel, decimal_str, to_mpf
from .genfunc import GenFunction, build_libor_free

PolyLike = Union[GenFunction, Sequence]


@dataclass(frozen=True)
class RootSet:
    """All complex roots of one polynomial, with residual certificates.

    Roots are conjugate-symmetrised and sorted by (real, imaginary)
    part, so equal inputs give byte-equal output.  ``residuals[k]`` is
    |p(roots[k])| evaluated at working precision.
    """

    roots: tuple
    residuals: tuple
    precision_bits: int
    slice_index: int | None = None
    psi: mpf | None = None

    @property
    def degree(self) -> int:
        return len(self.roots)

    def moduli(self) -> tuple:
        with mp.workprec(self.precision_bits):
            return tuple(abs(z) for z in self.roots)

    def min_modulus(self) -> mpf:
        return min(self.moduli())


@dataclass(frozen=True)
class RootLocus:
    """Root trajectories over a volatility sweep.

    ``tracks[k][m]`` is root k at ``psi_values[m]``; tracks are stitched
    across neighbouring volatilities by nearest-distance matching, so a
    single k follows one root as it migrates.
    """

    slice_index: int
    psi_values: tuple
    tracks: tuple
    precision_bits: int


@dataclass(frozen=True)
class CriticalReport:
    """Outcome of the critical-volatility search on one slice."""

    slice_index: int
    psi_cr: mpf
    z_star: object  # mpc: the root attaining the minimum modulus
    min_modulus: mpf
    tilt_radius: mpf  # exp(psi_cr^2 t_i)
    bracket: tuple
    tolerance: mpf
    precision_bits: int
    formula_exact: mpf | None = None
    formula_simplified: mpf | None = None


@dataclass(frozen=True)
class DensityJump:
    """Angular root density at the positive real axis and implied kink.

    ``rho0`` is the ring radius where the zeros pinch the axis, ``g0``
    the local density in roots per radian, and ``jump`` the predicted
    discontinuity 2 pi g0 / rho0 of d(log g)/dx across x = rho0.
    """

    rho0: mpf
    g0: mpf
    jump: mpf


# ---------------------------------------------------------------------------
# Root finding
# ---------------------------------------------------------------------------

def _eval_with_derivative(coeffs, z):
    """Horner evaluation of p and p' at a complex point."""
    p = mp.mpc(coeffs[-1])
    dp = mp.mpc(0)
    for c in reversed(coeffs[:-1]):
        dp = dp * z + p
        p = p * z + c
    return p, dp


def _residual_bound(coeffs, z, bits):
    d = len(coeffs) - 1
    return (
        mp.mpf(10) ** (-(bits // 8))
        * abs(coeffs[-1])
        * max(mp.one, abs(z)) ** d
    )


def _aberth(coeffs, bits):
    """All roots of a dense polynomial by simultaneous Newton iteration.

    Starts on a circle at the geometric-mean root modulus with an angle
    offset (no starting point on the real axis, so conjugate symmetry is
    broken and the iteration cannot stall on it).  Sweeps are
    Gauss-Seidel.  Convergence is declared when either every correction
    is below 2^-(bits-16) relative or every residual clears the
    certificate bound — the latter is what terminates on tight root
    clusters, where individual roots are ill-conditioned but the cluster
    as a whole is found.
    """
    d = len(coeffs) - 1
    radius = abs(coeffs[0] / coeffs[-1]) ** (mp.one / d)
    if radius == 0:
        radius = mp.one
    third = mp.one / 3
    zs = [
        radius * mp.expjpi(2 * (k + third) / d)
        for k in range(d)
    ]
    step_tol = mp.mpf(2) ** (-(bits - 16))
    max_sweeps = 64 + 16 * d
    for _ in range(max_sweeps):
        max_step = mp.zero
        all_resid_ok = True
        for k in range(d):
            z = zs[k]
            p, dp = _eval_with_derivative(coeffs, z)
            if abs(p) > _residual_bound(coeffs, z, bits):
                all_resid_ok = False
            if p == 0:
                continue
            if dp == 0:
                zs[k] = z + radius * mp.mpf(2) ** (-bits // 2)
                max_step = max(max_step, abs(zs[k] - z))
                continue
            newton = p / dp
            s = mp.mpc(0)
            for j in range(d):
                if j != k and zs[j] != z:
                    s += 1 / (z - zs[j])
            denom = 1 - newton * s
            w = newton if denom == 0 else newton / denom
            zs[k] = z - w
            rel = abs(w) / max(mp.one, abs(zs[k]))
            max_step = max(max_step, rel)
        if max_step < step_tol or all_resid_ok:
            return zs
    # a final residual check decides whether the sweep budget was enough
    for z in zs:
        p, _ = _eval_with_derivative(coeffs, z)
        if abs(p) > _residual_bound(coeffs, z, bits):
            raise NumericFailureError(
                f"root iteration did not converge in {max_sweeps} sweeps "
                f"(degree {d}, residual {mp.nstr(abs(p), 5)})"
            )
    return zs


def _polish(coeffs, z):
    """Up to two guarded Newton steps; keeps a step only if it helps."""
    p, dp = _eval_with_derivative(coeffs, z)
    best, best_res = z, abs(p)
    for _ in range(2):
        if dp == 0 or best_res == 0:
            break
        cand = best - p / dp
        pc, dpc = _eval_with_derivative(coeffs, cand)
        if abs(pc) < best_res:
            best, best_res, p, dp = cand, abs(pc), pc, dpc
        else:
            break
    return best, best_res


def _symmetrise(zs, bits):
    """Snap near-real roots to the axis and enforce exact conjugate pairs."""
    snap = mp.mpf(2) ** (-(bits // 8))
    pending = []
    for z in zs:
        if abs(z.imag) <= snap * (1 + abs(z)):
            pending.append(mp.mpc(z.real, 0))
        else:
            pending.append(z)
    out = []
    used = [False] * len(pending)
    for k, z in enumerate(pending):
        if used[k]:
            continue
        used[k] = True
        if z.imag == 0:
            out.append(z)
            continue
        target = mp.conj(z)
        best_j, best_d = None, None
        for j in range(k + 1, len(pending)):
            if used[j] or pending[j].imag == 0:
                continue
            dist = abs(pending[j] - target)
            if best_d is None or dist < best_d:
                best_j, best_d = j, dist
        if best_j is not None and best_d <= snap * (1 + abs(z)):
            used[best_j] = True
            avg = (z + mp.conj(pending[best_j])) / 2
            pair = (avg, mp.conj(avg)) if avg.imag > 0 else (mp.conj(avg), avg)
            out.extend(pair)
        else:
            out.append(z)
    out.sort(key=lambda w: (w.real, w.imag))
    return out


def find_roots(poly: PolyLike, precision_bits: int | None = None) -> RootSet:
    """All complex roots of a slice polynomial or raw coefficient list.

    Accepts a :class:`~lnmarkov.genfunc.GenFunction` (its precision and
    slice metadata carry over) or any ascending coefficient sequence
    c_0..c_d.  Returns roots with per-root residuals; raises
    :class:`NumericFailureError` if any residual misses its certificate
    bound.
    """
    if isinstance(poly, GenFunction):
        bits = precision_bits or poly.precision_bits
        slice_index = poly.slice_index
        psi = poly.psi
        raw = poly.coeffs
    else:
        bits = precision_bits or DEFAULT_PRECISION_BITS
        slice_index = None
        psi = None
        raw = poly
    with mp.workprec(bits):
        coeffs = [mp.mpf(c) for c in raw]
        while coeffs and coeffs[-1] == 0:
            coeffs.pop()
        if len(coeffs) < 2:
            raise InvalidInputError("polynomial must have positive degree")
        zero_roots = 0
        while coeffs[0] == 0:
            zero_roots += 1
            coeffs.pop(0)
        d = len(coeffs) - 1
        roots = []
        if d == 1:
            roots = [mp.mpc(-coeffs[0] / coeffs[1], 0)]
        elif d == 2:
            a, b, c = coeffs[2], coeffs[1], coeffs[0]
            disc = b * b - 4 * a * c
            sq = mp.sqrt(mp.mpc(disc))
            roots = [(-b + sq) / (2 * a), (-b - sq) / (2 * a)]
        elif d > 2:
            roots = _aberth(coeffs, bits)
        polished = []
        residuals = []
        for z in roots:
            zz, res = _polish(coeffs, z)
            polished.append(zz)
            residuals.append(res)
        for z, res in zip(polished, residuals):
            if res > _residual_bound(coeffs, z, bits):
                raise NumericFailureError(
                    f"root residual {mp.nstr(res, 5)} exceeds certificate "
                    f"bound at degree {d}"
                )
        final = [mp.mpc(0, 0)] * zero_roots + _symmetrise(polished, bits)
        resid_final = []
        for z in final:
            p, _ = _eval_with_derivative(coeffs, z) if zero_roots == 0 else (
                _eval_with_derivative([mp.mpf(c) for c in raw], z)
            )
            resid_final.append(abs(p))
    return RootSet(
        roots=tuple(final),
        residuals=tuple(resid_final),
        precision_bits=bits,
        slice_index=slice_index,
        psi=psi,
    )


# ---------------------------------------------------------------------------
# Critical volatility
# ---------------------------------------------------------------------------

def _gap_and_roots(model: TenorModel, i: int, psi: Real):
    m = model.with_psi(psi)
    gf = build_libor_free(m, i)
    rs = find_roots(gf)
    with mp.workprec(model.precision_bits):
        tilt = mp.exp(m.psi * m.psi * m.dates[i])
        return rs.min_modulus() - tilt, rs, tilt


def min_modulus_gap(model: TenorModel, i: int, psi: Real) -> mpf:
    """D(psi): distance of the evaluation point from the nearest zero ring.

    Positive while exp(psi^2 t_i) is strictly inside the smallest root
    modulus of g_i; the sign change locates the finite-size critical
    volatility.
    """
    gap, _, _ = _gap_and_roots(model, i, psi)
    return gap


def critical_volatility(
    model: TenorModel,
    i: int,
    bracket=("0.05", "1.0"),
    tol: Real = "1e-4",
) -> CriticalReport:
    """Bisect D(psi) to locate the slice's critical volatility.

    The bracket must straddle the sign change (D > 0 at the low end,
    D < 0 at the high end) or :class:`NotBracketedError` is raised —
    near-terminal slices with too little time or too few remaining
    periods may simply have no crossing inside the searched range.

    When the input curve is flat, the report also carries the two
    closed-form estimates of the transition point (the saddle-point
    value and its short high-rate simplification) for comparison.
    """
    bits = model.precision_bits
    with mp.workprec(bits):
        lo = to_mpf(bracket[0], bits)
        hi = to_mpf(bracket[1], bits)
        tol = to_mpf(tol, bits)
        if not (0 <= lo < hi):
            raise InvalidInputError("need 0 <= low < high in the bracket")
        d_lo, _, _ = _gap_and_roots(model, i, lo)
        d_hi, rs_hi, _ = _gap_and_roots(model, i, hi)
        if not (d_lo > 0 and d_hi < 0):
            raise NotBracketedError(
                "min-modulus gap does not change sign on "
                f"[{mp.nstr(lo, 6)}, {mp.nstr(hi, 6)}]: "
                f"D(low) = {mp.nstr(d_lo, 6)}, D(high) = {mp.nstr(d_hi, 6)}"
            )
        while hi - lo > tol:
            mid = (lo + hi) / 2
            d_mid, _, _ = _gap_and_roots(model, i, mid)
            if d_mid > 0:
                lo = mid
            else:
                hi = mid
        psi_cr = (lo + hi) / 2
        _, rs, tilt = _gap_and_roots(model, i, psi_cr)
        moduli = rs.moduli()
        k_star = min(range(len(moduli)), key=lambda k: moduli[k])

        formula_exact = formula_simplified = None
        from .model import is_flat

        flat, r0, tau = is_flat(model)
        if flat:
            from .flatrate import critical_vol_formula

            try:
                formula_exact, formula_simplified = critical_vol_formula(
                    r0, tau, model.n, i, bits
                )
            except (ValueError, ArithmeticError):
                pass

    return CriticalReport(
        slice_index=i,
        psi_cr=psi_cr,
        z_star=rs.roots[k_star],
        min_modulus=moduli[k_star],
        tilt_radius=tilt,
        bracket=(to_mpf(bracket[0], bits), to_mpf(bracket[1], bits)),
        tolerance=tol,
        precision_bits=bits,
        formula_exact=formula_exact,
        formula_simplified=formula_simplified,
    )


def root_locus(model: TenorModel, i: int, psi_values: Sequence[Real]) -> RootLocus:
    """Track every root of g_i across a volatility sweep.

    Consecutive root sets are stitched by greedy nearest-distance
    matching, so each track follows a single root's migration from the
    low-volatility cluster near -1/(L tau) out to the frozen
    curve-difference configuration at high volatility.
    """
    if not psi_values:
        raise InvalidInputError("need at least one volatility in the sweep")
    bits = model.precision_bits
    sets = []
    for p in psi_values:
        gf = build_libor_free(model.with_psi(p), i)
        sets.append(find_roots(gf))
    degree = sets[0].degree
    tracks = [[z] for z in sets[0].roots]
    with mp.workprec(bits):
        for rs in sets[1:]:
            prev = [tr[-1] for tr in tracks]
            pairs = sorted(
                (abs(prev[a] - rs.roots[b]), a, b)
                for a in range(degree)
                for b in range(degree)
            )
            taken_a = [False] * degree
            taken_b = [False] * degree
            for _, a, b in pairs:
                if taken_a[a] or taken_b[b]:
                    continue
                taken_a[a] = True
                taken_b[b] = True
                tracks[a].append(rs.roots[b])
        psis = tuple(to_mpf(p, bits) for p in psi_values)
    return RootLocus(
        slice_index=i,
        psi_values=psis,
        tracks=tuple(tuple(tr) for tr in tracks),
        precision_bits=bits,
    )


# ---------------------------------------------------------------------------
# Angular density and the induced kink
# ---------------------------------------------------------------------------

def density_and_jump(rootset: RootSet) -> DensityJump:
    """Estimate the root density pinching the positive real axis.

    Uses the two roots closest to the axis in the upper half plane: the
    gap across the axis is twice the first angle, the next gap is the
    angular spacing, and the local density is the reciprocal mean gap.
    The predicted kink of d(log g)/dx at the pinch radius is
    2 pi g(0) / rho(0).  Needs a reasonably long ring, hence the degree
    floor.
    """
    if rootset.degree < 8:
        raise InsufficientDataError(
            "angular density needs a polynomial of degree >= 8"
        )
    with mp.workprec(rootset.precision_bits):
        upper = sorted(
            (mp.arg(z), abs(z)) for z in rootset.roots if z.imag > 0
        )
        if len(upper) < 2:
            raise InsufficientDataError(
                "angular density needs at least two roots above the axis"
            )
        theta1, rho1 = upper[0]
        theta2, _ = upper[1]
        mean_gap = (2 * theta1 + (theta2 - theta1)) / 2
        g0 = 1 / mean_gap
        jump = 2 * mp.pi * g0 / rho1
    return DensityJump(rho0=rho1, g0=g0, jump=jump)


def log_from_roots(roots, x: Real, c0: Real = 1, precision_bits: int | None = None) -> mpf:
    """log g(x) for real x, reconstructed from the zero configuration.

    Computes log c_0 + sum_k log |1 - x/z_k|; for a polynomial with real
    coefficients and conjugate-paired roots this is exact.  Raises
    :class:`DivergenceError` if x sits on a root.
    """
    if isinstance(roots, RootSet):
        precision_bits = precision_bits or roots.precision_bits
        roots = roots.roots
    bits = precision_bits or DEFAULT_PRECISION_BITS
    with mp.workprec(bits):
        x = to_mpf(x, bits)
        total = mp.log(to_mpf(c0, bits))
        for z in roots:
            w = abs(1 - x / z)
            if w == 0:
                raise DivergenceError("evaluation point coincides with a zero")
            total += mp.log(w)
        return total


def log_derivative(roots, x: Real, precision_bits: int | None = None) -> mpf:
    """d/dx log g(x) = sum_k 1/(x - z_k), real part (conjugates cancel)."""
    if isinstance(roots, RootSet):
        precision_bits = precision_bits or roots.precision_bits
        roots = roots.roots
    bits = precision_bits or DEFAULT_PRECISION_BITS
    with mp.workprec(bits):
        x = to_mpf(x, bits)
        total = mp.zero
        for z in roots:
            w = x - z
            if w == 0:
                raise DivergenceError("evaluation point coincides with a zero")
            total += (1 / w).real
        return total


def log_slope(poly: PolyLike, x: Real, precision_bits: int | None = None) -> mpf:
    """g'(x)/g(x) for real x, from the coefficients directly."""
    if isinstance(poly, GenFunction):
        bits = precision_bits or poly.precision_bits
        raw = poly.coeffs
    else:
        bits = precision_bits or DEFAULT_PRECISION_BITS
        raw = poly
    with mp.workprec(bits):
        coeffs = [mp.mpf(c) for c in raw]
        x = to_mpf(x, bits)
        p, dp = _eval_with_derivative(coeffs, mp.mpc(x))
        if p == 0:
            raise DivergenceError("evaluation point coincides with a zero")
        return (dp / p).real


def measured_kink(
    poly: PolyLike,
    rho: Real,
    log_offset: Real = "0.6931471805599453",
    precision_bits: int | None = None,
) -> mpf:
    """Measure the derivative jump of log g across x = rho.

    Samples the logarithmic slope x g'/g at the geometric offsets
    x = rho e^{±h} and returns their difference divided by rho.  Why the
    logarithmic variable: past the zero ring the slope x g'/g saturates
    at the polynomial degree (log g grows like degree * log x there), so
    this estimator converges to the true kink magnitude with an error of
    order 1/degree — whereas a plain two-point difference of g'/g at
    rho(1 ± eps) is biased low by the curvature of degree*log(x) by a
    factor that does not vanish at any fixed degree.  Default offset is
    h = log 2 (sample at half and double the pinch radius).
    """
    if isinstance(poly, GenFunction):
        bits = precision_bits or poly.precision_bits
    else:
        bits = precision_bits or DEFAULT_PRECISION_BITS
    with mp.workprec(bits):
        rho = to_mpf(rho, bits)
        h = to_mpf(log_offset, bits)
        if rho <= 0 or h <= 0:
            raise InvalidInputError("need rho > 0 and a positive log offset")
        x_hi = rho * mp.exp(h)
        x_lo = rho * mp.exp(-h)
        s_hi = x_hi * log_slope(poly, x_hi, bits)
        s_lo = x_lo * log_slope(poly, x_lo, bits)
        return (s_hi - s_lo) / rho


# ---------------------------------------------------------------------------
# Serialisation
# ---------------------------------------------------------------------------

def write_locus_csv(locus: RootLocus, path) -> None:
    """Sweep dump ``psi,k,re,im,modulus``, float64 columns."""
    import csv

    with mp.workprec(locus.precision_bits):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["psi", "k", "re", "im", "modulus"])
            for m, psi in enumerate(locus.psi_values):
                for k, track in enumerate(locus.tracks):
                    z = track[m]
                    writer.writerow(
                        [
                            f"{float(psi):.17g}",
                            k,
                            f"{float(z.real):.17g}",
                            f"{float(z.imag):.17g}",
                            f"{float(abs(z)):.17g}",
                        ]
                    )


def write_critical_json(report: CriticalReport, path) -> None:
    import json

    bits = report.precision_bits
    with mp.workprec(bits):
        payload = {
            "slice_index": report.slice_index,
            "psi_cr": float(report.psi_cr),
            "psi_cr_decimal": decimal_str(report.psi_cr, bits),
            "min_modulus": float(report.min_modulus),
            "tilt_radius": float(report.tilt_radius),
            "z_star": {
                "re": float(report.z_star.real),
                "im": float(report.z_star.imag),
            },
            "bracket": [float(report.bracket[0]), float(report.bracket[1])],
            "tolerance": float(report.tolerance),
            "precision_bits": bits,
            "formula_exact": (
                None if report.formula_exact is None else float(report.formula_exact)
            ),
            "formula_simplified": (
                None
                if report.formula_simplified is None
                else float(report.formula_simplified)
            ),
        }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
