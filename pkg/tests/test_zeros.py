"""Root finding and the critical-volatility machinery.

Frozen oracle values in this file were obtained from independent runs of
the same quantities at 240 bits (bisection tolerance 1e-4), cross-checked
against the closed-form flat-curve formulas where those exist.
"""

import random

import pytest
from hypothesis import given, settings, strategies as st
from mpmath import mp

from lnmarkov import (
    InvalidInputError,
    NotBracketedError,
    critical_volatility,
    find_roots,
    flat_curve,
    min_modulus_gap,
    root_locus,
)
from lnmarkov import DivergenceError
from lnmarkov.zeros import (
    density_and_jump,
    log_derivative,
    log_from_roots,
    log_slope,
    measured_kink,
    write_critical_json,
    write_locus_csv,
)
from lnmarkov import build_libor_free, flatrate

BITS = 240


def test_direct_low_degree_cases():
    with mp.workprec(BITS):
        rs = find_roots([6, 1, -4, 1], precision_bits=BITS)
        want = [-1, 2, 3]
        for z, w in zip(rs.roots, want):
            assert abs(z - w) < mp.mpf("1e-60")
        lin = find_roots(["1", "2"], precision_bits=BITS)
        assert abs(lin.roots[0] + mp.mpf("0.5")) < mp.mpf("1e-60")
        quad = find_roots([2, 0, 1], precision_bits=BITS)  # x^2 + 2
        assert abs(quad.roots[0] - mp.mpc(0, -mp.sqrt(2))) < mp.mpf("1e-60")


def test_trailing_and_leading_degeneracies():
    with pytest.raises(InvalidInputError):
        find_roots([3], precision_bits=BITS)
    with mp.workprec(BITS):
        # x^2(x-1): zero roots are stripped and reported
        rs = find_roots([0, 0, -1, 1], precision_bits=BITS)
        assert sorted(float(abs(z)) for z in rs.roots) == pytest.approx([0, 0, 1])


def test_residual_certificates_on_a_hard_polynomial():
    # Wilkinson-style clustering: (x-1)(x-2)...(x-12)
    with mp.workprec(BITS):
        coeffs = [mp.one]
        for r in range(1, 13):
            nxt = [mp.zero] * (len(coeffs) + 1)
            for k, c in enumerate(coeffs):
                nxt[k] += c * (-r)
                nxt[k + 1] += c
            coeffs = nxt
        rs = find_roots(coeffs, precision_bits=BITS)
        roots = sorted(float(z.real) for z in rs.roots)
        assert roots == pytest.approx(list(range(1, 13)), abs=1e-30)
        assert max(rs.residuals) < mp.mpf(10) ** (-BITS // 8)


def test_gap_function_changes_sign_across_the_transition():
    m = flat_curve("0.05", 20, "0.25", psi="0", precision_bits=BITS)
    with mp.workprec(BITS):
        g40 = min_modulus_gap(m, 10, "0.4")
        g53 = min_modulus_gap(m, 10, "0.53")
        g55 = min_modulus_gap(m, 10, "0.55")
        assert g40 > g53 > 0 > g55
        assert abs(g40 - mp.mpf("8.15384")) < mp.mpf("0.001")


def test_critical_volatility_reference_slice():
    m = flat_curve("0.05", 20, "0.25", psi="0", precision_bits=BITS)
    rep = critical_volatility(m, 10, bracket=("0.3", "0.8"), tol="1e-4")
    with mp.workprec(BITS):
        assert abs(rep.psi_cr - mp.mpf("0.532452")) < mp.mpf("2e-4")
        assert abs(rep.formula_exact - mp.mpf("0.435929")) < mp.mpf("1e-5")
        assert abs(rep.formula_simplified - mp.mpf("0.441313")) < mp.mpf("1e-5")
        # the bisected value sits well above the closed forms; the gap is
        # a finite-size effect of the short polynomial (measured 18.1%)
        gap = (rep.psi_cr - rep.formula_exact) / rep.psi_cr
        assert mp.mpf("0.10") < gap < mp.mpf("0.25")
        assert rep.slice_index == 10
        assert abs(abs(rep.z_star) - rep.min_modulus) < mp.mpf("1e-30")


def test_not_bracketed_reports_both_gap_values():
    m = flat_curve("0.05", 20, "0.25", psi="0", precision_bits=BITS)
    with pytest.raises(NotBracketedError) as exc:
        critical_volatility(m, 10, bracket=("0.3", "0.4"))
    msg = str(exc.value)
    assert "0.3" in msg and "0.4" in msg


def test_root_locus_is_continuous_and_consistent(tmp_path):
    m = flat_curve("0.05", 20, "0.25", psi="0", precision_bits=BITS)
    psis = ["0.50", "0.52", "0.54", "0.56"]
    loc = root_locus(m, 10, psis)
    assert len(loc.tracks) == 9
    with mp.workprec(BITS):
        # near the transition the real root moves fastest (~0.7 per 0.02 of
        # volatility); anything beyond ~1 would mean tracks swapped identity
        for track in loc.tracks:
            for a, b in zip(track, track[1:]):
                assert abs(a - b) < mp.mpf("1.0")
        # cross-check one column against a fresh root solve
        rs = find_roots(build_libor_free(m.with_psi("0.52"), 10))
        column = sorted((float(t[1].real), float(t[1].imag)) for t in loc.tracks)
        fresh = sorted((float(z.real), float(z.imag)) for z in rs.roots)
        for a, b in zip(column, fresh):
            assert a == pytest.approx(b, abs=1e-30)
    path = str(tmp_path / "locus.csv")
    write_locus_csv(loc, path)
    lines = open(path).read().splitlines()
    assert lines[0] == "psi,k,re,im,modulus"
    assert len(lines) == 1 + 9 * len(psis)


def test_density_and_jump_near_the_transition():
    m = flat_curve("0.05", 20, "0.25", psi="0.53", precision_bits=BITS)
    rs = find_roots(build_libor_free(m, 10))
    dj = density_and_jump(rs)
    with mp.workprec(BITS):
        assert abs(dj.rho0 - mp.mpf("2.08729")) < mp.mpf("0.001")
        assert abs(dj.g0 - mp.mpf("1.35134")) < mp.mpf("0.001")
        assert abs(dj.jump - mp.mpf("4.06782")) < mp.mpf("0.001")
        # within ~6% of the ideal-ring value degree/rho0
        ring = 9 / dj.rho0
        assert abs(dj.jump - ring) / ring < mp.mpf("0.08")


def test_log_from_roots_agrees_with_direct_evaluation():
    with mp.workprec(BITS):
        p9 = flatrate.from_short_rate("0.05", "0.25", 9, BITS)
        rs = find_roots(p9.coeffs, precision_bits=BITS)
        from lnmarkov.genfunc import GenFunction, evaluate

        gf = GenFunction(
            slice_index=0,
            coeffs=tuple(mp.mpf(c) for c in p9.coeffs),
            psi_t=mp.zero,
            psi=None,
            precision_bits=BITS,
        )
        for xv in ("0.25", "0.8", "1.3"):
            x = mp.mpf(xv)
            direct = mp.log(abs(evaluate(gf, x)))
            # f = a * prod(1 - x/z_k)
            via = log_from_roots(rs.roots, x, c0=p9.coeffs[0], precision_bits=BITS)
            assert abs(direct - via) < mp.mpf("1e-50")
            # and the two derivative flavours agree
            d1 = log_derivative(rs.roots, x, precision_bits=BITS)
            d2 = log_slope(gf, x, precision_bits=BITS)
            assert abs(d1 - d2) < mp.mpf("1e-50") * max(1, abs(d2))


def test_log_from_roots_rejects_a_root_hit():
    with mp.workprec(BITS):
        rs = find_roots([6, 1, -4, 1], precision_bits=BITS)
        with pytest.raises(DivergenceError):
            log_from_roots(rs.roots, mp.mpf(2), precision_bits=BITS)


def test_measured_kink_flat_reference_values():
    with mp.workprec(BITS):
        rho = mp.exp(-mp.mpf("0.05") * mp.mpf("0.25"))
        for deg, frozen in ((20, "19.2134"), (40, "39.4657")):
            gf = flatrate.asymptotic_genfunc("0.05", "0.25", deg, BITS)
            k = measured_kink(gf, rho)
            assert abs(k - mp.mpf(frozen)) < mp.mpf("0.001")


def test_critical_json_round_trip(tmp_path):
    import json

    m = flat_curve("0.05", 20, "0.25", psi="0", precision_bits=BITS)
    rep = critical_volatility(m, 10, bracket=("0.3", "0.8"))
    path = str(tmp_path / "critical.json")
    write_critical_json(rep, path)
    with open(path) as fh:
        payload = json.load(fh)
    assert payload["slice_index"] == 10
    assert payload["psi_cr"] == pytest.approx(0.532452, abs=2e-4)
    assert abs(float(payload["psi_cr_decimal"]) - payload["psi_cr"]) < 1e-12


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(min_value=0, max_value=10**6))
def test_real_polynomials_have_conjugate_closed_root_sets(seed):
    rng = random.Random(seed)
    deg = rng.randint(3, 9)
    coeffs = [rng.uniform(0.2, 3.0) for _ in range(deg)] + [rng.uniform(0.5, 2.0)]
    rs = find_roots([repr(c) for c in coeffs], precision_bits=96)
    with mp.workprec(96):
        pool = list(rs.roots)
        for z in rs.roots:
            zc = mp.conj(z)
            assert any(abs(zc - w) < mp.mpf("1e-18") * (1 + abs(w)) for w in pool)
        assert max(rs.residuals) < mp.mpf(10) ** (-96 // 8)
