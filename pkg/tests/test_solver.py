"""Backward-induction solver: identities, structure, bond reconstruction."""

import json
import os
import random

import pytest
from hypothesis import given, settings, strategies as st
from mpmath import mp

from lnmarkov import (
    NegativeForwardError,
    TenorModel,
    flat_curve,
    rebase,
    solve,
)
from lnmarkov.solver import (
    bond,
    libor,
    libor_tail_sum,
    rebased_bond,
    solution_to_json,
    write_libor_csv,
    write_solution_json,
)

BITS = 240


def tol(bits=BITS, slack=16):
    with mp.workprec(bits):
        return mp.mpf(2) ** (-bits + slack)


def test_sum_rule_on_the_reference_curve(solved20):
    """Row sums must reproduce the rebased discounts at the next date."""
    s = solved20
    with mp.workprec(BITS):
        for i in range(s.n):
            target = s.rebased.values[i + 1]
            got = mp.fsum(s.coeffs[i])
            assert abs(got - target) / target < mp.mpf("1e-60")


def test_norm_identity_on_the_reference_curve(solved20):
    s = solved20
    m = s.model
    with mp.workprec(BITS):
        for i in range(s.n):
            lhs = s.adjusted_libors[i] * m.accruals[i] * s.expectations[i]
            rhs = s.rebased.values[i] - s.rebased.values[i + 1]
            assert abs(lhs - rhs) / rhs < mp.mpf("1e-60")


def test_row_shapes_and_terminal_seed(solved20):
    s = solved20
    for i in range(s.n):
        assert len(s.coeffs[i]) == s.n - i
    with mp.workprec(BITS):
        assert s.coeffs[s.n - 1][0] == 1
        for i in range(s.n):
            assert s.coeffs[i][0] == 1


def test_first_order_coefficient_is_the_libor_tail(solved20):
    # c_1 on row i equals the sum of adjusted Libor times accrual over later slices
    s = solved20
    with mp.workprec(BITS):
        for i in range(s.n - 1):
            tail = libor_tail_sum(s, i)
            assert abs(s.coeffs[i][1] - tail) / tail < mp.mpf("1e-60")


def test_adjusted_libor_sits_below_forward(solved20):
    from lnmarkov import forward_libors

    s = solved20
    m = s.model
    with mp.workprec(BITS):
        fwds = forward_libors(rebase(m), m.accruals)
        # terminal-measure drag: every adjusted Libor strictly below its forward,
        # except the last which is pinned
        for i in range(s.n - 1):
            assert s.adjusted_libors[i] < fwds[i]
        last = s.n - 1
        assert abs(s.adjusted_libors[last] - fwds[last]) / fwds[last] < tol()


def test_libor_functional_form(solved20):
    s = solved20
    with mp.workprec(BITS):
        x = mp.mpf("0.7")
        i = 5
        t = s.model.dates[i]
        psi = s.model.psi
        want = s.adjusted_libors[i] * mp.exp(psi * x - psi * psi * t / 2)
        assert abs(libor(s, i, x) - want) < tol() * want
        # strictly increasing in the driver
        assert libor(s, i, "0.8") > libor(s, i, "0.7")


def test_rebased_bond_at_time_zero_matches_curve(solved20):
    """P^_{0,j}(x=0) must reproduce the input curve: t_0 = 0 so the
    state is degenerate and the reconstruction collapses to today's values."""
    s = solved20
    curve = rebase(s.model)
    with mp.workprec(BITS):
        for j in range(s.n + 1):
            got = rebased_bond(s, 0, j, mp.zero)
            want = curve.values[j]
            assert abs(got - want) / want < mp.mpf("1e-60")


def test_plain_bond_is_rebased_ratio(solved20):
    s = solved20
    with mp.workprec(BITS):
        x = mp.mpf("0.4")
        got = bond(s, 3, 11, x)
        want = rebased_bond(s, 3, 11, x) / rebased_bond(s, 3, 3, x)
        assert abs(got - want) < tol() * want
        assert bond(s, 3, 20, x) < 1  # discounting over 17 quarters


def test_negative_forward_curve_is_rejected():
    # increasing discounts on one period => negative forward there
    dates = tuple(str(k) for k in range(5))
    discounts = ("1", "0.95", "0.96", "0.90", "0.85")
    m = TenorModel(dates=dates, discounts=discounts, psi="0.2")
    with pytest.raises(NegativeForwardError):
        solve(m)


def test_solution_json_shape(tmp_path, solved20):
    payload = solution_to_json(solved20)
    assert payload["n"] == 20
    assert len(payload["slices"]) == 20
    row = payload["slices"][10]
    assert set(row) >= {"i", "t", "L_tilde", "N", "coeffs", "underflows_double"}
    assert isinstance(row["L_tilde"], str)  # decimal strings, not floats
    assert row["underflows_double"] is False
    path = os.path.join(tmp_path, "solution.json")
    write_solution_json(solved20, path)
    with open(path) as fh:
        assert json.load(fh) == payload


def test_underflow_flag_trips_at_extreme_volatility():
    m = flat_curve("0.05", 20, "0.25", psi="8", precision_bits=BITS)
    payload = solution_to_json(solve(m))
    flags = [row["underflows_double"] for row in payload["slices"]]
    assert any(flags)
    with mp.workprec(BITS):
        # the exact values are still finite and positive in working precision
        for row in payload["slices"]:
            assert mp.mpf(row["L_tilde"]) > 0


def test_libor_csv_layout(tmp_path, solved20):
    path = os.path.join(tmp_path, "libors.csv")
    write_libor_csv(solved20, path)
    lines = open(path).read().splitlines()
    assert lines[0] == "i,t,L_fwd,L_tilde,N"
    assert len(lines) == 21


@settings(max_examples=25, deadline=None)
@given(
    seed=st.integers(min_value=0, max_value=10**6),
    psi=st.sampled_from(["0", "0.05", "0.3", "0.7", "1.3"]),
)
def test_sum_rule_holds_on_random_curves(seed, psi):
    rng = random.Random(seed)
    n = rng.randint(2, 10)
    dates = ["0"]
    t = 0.0
    for _ in range(n):
        t += rng.uniform(0.2, 1.0)
        dates.append(repr(t))
    discounts = ["1"]
    p = 1.0
    for _ in range(n):
        p *= rng.uniform(0.9, 0.995)
        discounts.append(repr(p))
    m = TenorModel(dates=tuple(dates), discounts=tuple(discounts), psi=psi)
    s = solve(m)
    with mp.workprec(m.precision_bits):
        for i in range(s.n):
            target = s.rebased.values[i + 1]
            assert abs(mp.fsum(s.coeffs[i]) - target) / target < mp.mpf("1e-50")
