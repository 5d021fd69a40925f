from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nilrado.ffield import PrimeField, QuadExtField
from nilrado.resring import (DomainError, PrecisionError, Residue, cyclotomic_log, dlog_ell_part,
                             padic_log, unit_inverse, valuation)

from oracles import brute_dlog, log_fraction


def test_residue_arithmetic_takes_the_smaller_precision():
    a = Residue(5, 3, 3)
    b = Residue(7, 3, 2)
    assert (a + b) == Residue(12, 3, 2)
    assert (a * b).exp == 2
    assert (-a).value == 22
    assert a.reduce(1) == Residue(2, 3, 1)
    with pytest.raises(PrecisionError):
        b.reduce(3)


def test_residue_json_roundtrip():
    r = Residue(17, 2, 5)
    assert Residue.from_json(r.to_json()) == r


def test_unit_inverse_examples():
    assert unit_inverse(Residue(1, 3, 2)).value == 1
    assert unit_inverse(Residue(2, 3, 2)).value == 5
    assert unit_inverse(Residue(3, 2, 3)).value == 3
    with pytest.raises(DomainError):
        unit_inverse(Residue(3, 3, 2))


def test_log_of_one_is_zero():
    assert padic_log(Residue(1, 3, 5)).value == 0


def test_log_examples_match_series_oracle():
    # frozen from exact rational partial sums
    assert padic_log(Residue(4, 3, 3)).value == 7
    assert padic_log(Residue(4, 3, 3)).value % 3 == 1
    assert padic_log(Residue(5, 2, 6), digits=2).value == 3
    assert cyclotomic_log(31, 3, 3) == 25
    assert cyclotomic_log(5, 2, 4) == 15
    assert cyclotomic_log(7, 3, 4) == 74


def test_log_at_two_uses_minus_q_for_q_three_mod_four():
    assert cyclotomic_log(3, 2, 3) == log_fraction(-3, 2, 3) == 5


def test_log_domain_and_precision_errors():
    with pytest.raises(DomainError):
        padic_log(Residue(2, 3, 4))
    with pytest.raises(DomainError):
        padic_log(Residue(3, 2, 5))
    with pytest.raises(PrecisionError):
        padic_log(Residue(4, 3, 3), digits=3)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 200), st.integers(1, 200), st.sampled_from([2, 3, 5]))
def test_log_is_a_homomorphism(a, b, ell):
    shift = 2 if ell == 2 else 1
    u = 1 + a * ell**shift
    v = 1 + b * ell**shift
    d = 4
    lu = padic_log(Residue(u, ell, d + shift)).value
    lv = padic_log(Residue(v, ell, d + shift)).value
    luv = padic_log(Residue(u * v, ell, d + shift)).value
    assert (lu + lv - luv) % ell**d == 0


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 80), st.sampled_from([2, 3]))
def test_log_agrees_with_rational_partial_sums(a, ell):
    shift = 2 if ell == 2 else 1
    u = 1 + a * ell**shift
    assert padic_log(Residue(u, ell, 3 + shift)).value == log_fraction(u, ell, 3)


def test_dlog_examples():
    F = PrimeField(13)
    assert dlog_ell_part(3, 13, 3, 3, F).value == 1
    assert dlog_ell_part(9, 13, 3, 3, F).value == 2
    assert dlog_ell_part(2, 5, 2, 2, PrimeField(5)) == Residue(1, 2, 2)


def test_dlog_rejects_zero_and_bad_roots():
    with pytest.raises(DomainError):
        dlog_ell_part(0, 13, 3, 3, PrimeField(13))
    with pytest.raises(DomainError):
        dlog_ell_part(2, 13, 3, 1, PrimeField(13))


@pytest.mark.parametrize("p,ell", [(13, 2), (37, 3), (41, 2), (17, 2)])
def test_dlog_matches_exhaustive_search_in_prime_fields(p, ell):
    F = PrimeField(p)
    zeta, f = F.ell_root(ell)
    m = (p - 1) // ell**f
    for x in range(1, p):
        y = pow(x, m, p)
        k = brute_dlog(y, zeta, lambda a, b: a * b % p, 1, ell**f)
        assert dlog_ell_part(x, p, ell, zeta, F).value == k


def test_dlog_in_quadratic_extension_matches_exhaustive_search():
    F = QuadExtField(7, 3)
    zeta, f = F.ell_root(2)
    assert f == 4
    m = 48 // 16
    for a in range(7):
        for b in range(7):
            if a or b:
                y = F.pow((a, b), m)
                k = brute_dlog(y, zeta, F.mul, (1, 0), 16)
                assert dlog_ell_part((a, b), 49, 2, zeta, F).value == k


def test_valuation():
    assert valuation(48, 2) == 4
    assert valuation(7, 3) == 0
    with pytest.raises(ValueError):
        valuation(0, 2)
