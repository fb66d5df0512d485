"""Tenor-structure and curve plumbing.

Oracle values for the flat curve are closed-form: P_{0,i} = exp(-r0 t_i),
rebased P^_{0,i} = exp(r0 (n-i) tau), and the flat forward Libor is
(exp(r0 tau) - 1)/tau on every period.
"""

import os

import pytest
from hypothesis import given, settings, strategies as st
from mpmath import mp

from lnmarkov import (
    InvalidInputError,
    TenorModel,
    flat_curve,
    forward_libors,
    read_curve_csv,
    rebase,
    scale,
    write_curve_csv,
)
from lnmarkov.model import decimal_str, is_flat, rel_diff, to_mpf

BITS = 240


def test_flat_curve_discounts_and_rebase():
    m = flat_curve("0.05", 20, "0.25", precision_bits=BITS)
    curve = rebase(m)
    with mp.workprec(BITS):
        r0 = mp.mpf("0.05")
        tau = mp.mpf("0.25")
        assert m.discounts[20] == mp.exp(-r0 * 5)
        for i in range(21):
            want = mp.exp(r0 * (20 - i) * tau)
            assert abs(curve.values[i] - want) / want < mp.mpf(2) ** (-BITS + 8)
        assert curve.values[20] == 1


def test_flat_forward_libors_are_equal():
    m = flat_curve("0.05", 20, "0.25", precision_bits=BITS)
    with mp.workprec(BITS):
        fwds = forward_libors(rebase(m), m.accruals)
        want = (mp.exp(mp.mpf("0.05") * mp.mpf("0.25")) - 1) / mp.mpf("0.25")
        for f in fwds:
            assert abs(f - want) / want < mp.mpf(2) ** (-BITS + 8)


def test_validation_rejects_bad_structures():
    with pytest.raises(InvalidInputError):
        TenorModel(dates=("0", "1"), discounts=("1", "0.9"), psi="0.1")
    with pytest.raises(InvalidInputError):
        TenorModel(
            dates=("0", "1", "0.5", "2"),
            discounts=("1", "0.9", "0.8", "0.7"),
            psi="0.1",
        )
    with pytest.raises(InvalidInputError):
        TenorModel(
            dates=("0", "1", "2", "3"),
            discounts=("0.99", "0.9", "0.8", "0.7"),
            psi="0.1",
        )
    with pytest.raises(InvalidInputError):
        TenorModel(
            dates=("0", "1", "2", "3"),
            discounts=("1", "0.9", "-0.8", "0.7"),
            psi="0.1",
        )
    with pytest.raises(InvalidInputError):
        flat_curve("0.05", 20, "0.25", psi="-0.1")
    with pytest.raises(InvalidInputError):
        flat_curve("0.05", 20, "0.25", precision_bits=32)


def test_scale_moves_dates_and_volatility_together():
    m = flat_curve("0.05", 8, "0.25", psi="0.4", precision_bits=BITS)
    m4 = scale(m, "4")
    with mp.workprec(BITS):
        for a, b in zip(m.dates, m4.dates):
            assert b == 4 * a
        assert m4.psi == m.psi / 2
        # the tilt psi^2 t is exactly invariant under a power-of-four rescale
        assert m4.psi ** 2 * m4.dates[5] == m.psi ** 2 * m.dates[5]
        assert m4.discounts == m.discounts


def test_is_flat_detects_flat_and_rejects_bumped():
    m = flat_curve("0.03", 10, "0.5", precision_bits=BITS)
    flag, r0, tau = is_flat(m)
    assert flag
    with mp.workprec(BITS):
        assert abs(r0 - mp.mpf("0.03")) < mp.mpf("1e-50")
        assert abs(tau - mp.mpf("0.5")) < mp.mpf("1e-50")
    bumped = list(m.discounts)
    with mp.workprec(BITS):
        bumped[3] = bumped[3] * mp.mpf("1.001")
    m2 = TenorModel(dates=m.dates, discounts=tuple(bumped), psi="0")
    assert not is_flat(m2)[0]


def test_curve_csv_round_trip(tmp_path):
    m = flat_curve("0.043", 12, "0.5", psi="0.2", precision_bits=BITS)
    path = os.path.join(tmp_path, "curve.csv")
    write_curve_csv(m, path)
    m2 = read_curve_csv(path, psi="0.2", precision_bits=BITS)
    assert m2.discounts == m.discounts
    with mp.workprec(BITS):
        for a, b in zip(m.dates, m2.dates):
            assert a == b


def test_read_curve_csv_rejects_wrong_header(tmp_path):
    path = os.path.join(tmp_path, "bad.csv")
    with open(path, "w") as fh:
        fh.write("time,discount\n0,1\n1,0.9\n")
    with pytest.raises(InvalidInputError):
        read_curve_csv(path)


def test_decimal_str_round_trips_through_mpf():
    with mp.workprec(BITS):
        x = mp.mpf("0.1") ** 10 * mp.pi
        s = decimal_str(x, BITS)
        assert abs(mp.mpf(s) - x) / x < mp.mpf(2) ** (-BITS + 8)


def test_rel_diff_zero_for_equal_values():
    assert rel_diff("0.25", "0.25", BITS) == 0
    assert rel_diff("0", "0", BITS) == 0


@settings(max_examples=40, deadline=None)
@given(
    n=st.integers(min_value=2, max_value=12),
    seed=st.integers(min_value=0, max_value=10**6),
)
def test_rebase_always_ends_at_one_and_forwards_invert(n, seed):
    """Any positive decreasing-ish curve rebases to a curve ending at 1,
    and the forwards reconstruct the rebased discounts exactly."""
    import random

    rng = random.Random(seed)
    dates = ["0"]
    t = 0.0
    for _ in range(n):
        t += rng.uniform(0.1, 1.5)
        dates.append(repr(t))
    discounts = ["1"]
    p = 1.0
    for _ in range(n):
        p *= rng.uniform(0.85, 0.999)
        discounts.append(repr(p))
    m = TenorModel(dates=tuple(dates), discounts=tuple(discounts), psi="0.1")
    curve = rebase(m)
    with mp.workprec(m.precision_bits):
        assert curve.values[-1] == 1
        fwds = forward_libors(curve, m.accruals)
        acc = mp.one
        for j in range(n - 1, -1, -1):
            acc = acc * (1 + fwds[j] * m.accruals[j])
            got = curve.values[j]
            assert abs(acc - got) / got < mp.mpf(2) ** (-m.precision_bits + 16)


def test_to_mpf_rejects_nan_and_inf():
    with pytest.raises(InvalidInputError):
        to_mpf("nan", BITS)
    with pytest.raises(InvalidInputError):
        to_mpf("inf", BITS)
