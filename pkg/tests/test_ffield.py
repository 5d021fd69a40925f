from __future__ import annotations

import numpy as np
import pytest

from nilrado.ffield import Field, PrimeField, QuadExtField, factor_small, is_prime, legendre, primes_upto


def test_primes_and_factoring():
    assert primes_upto(30) == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]
    assert all(is_prime(p) for p in primes_upto(500))
    assert not is_prime(91)
    assert factor_small(360) == {2: 3, 3: 2, 5: 1}
    assert legendre(2, 7) == 1 and legendre(3, 7) == -1


def test_of_order_picks_the_right_model():
    assert isinstance(Field.of_order(13), PrimeField)
    F = Field.of_order(49)
    assert isinstance(F, QuadExtField) and F.q == 49
    with pytest.raises(ValueError):
        Field.of_order(12)


@pytest.mark.parametrize("q", [5, 13, 9, 25, 49, 121])
def test_generator_has_full_order(q):
    F = Field.of_order(q)
    g = F.generator()
    seen = set()
    x = F.one()
    for _ in range(q - 1):
        seen.add(x)
        x = F.mul(x, g)
    assert len(seen) == q - 1


@pytest.mark.parametrize("q,ell", [(13, 2), (13, 3), (49, 2), (49, 3), (121, 2), (169, 3)])
def test_ell_root_has_exact_ell_power_order(q, ell):
    F = Field.of_order(q)
    zeta, f = F.ell_root(ell)
    assert (q - 1) % ell**f == 0 and ((q - 1) // ell**f) % ell
    assert F.is_one(F.pow(zeta, ell**f))
    assert not F.is_one(F.pow(zeta, ell ** (f - 1)))


def test_vectorized_ops_agree_with_scalar_ops():
    F = QuadExtField(11, 2)
    rng = np.random.default_rng(0)
    a = (rng.integers(0, 11, 50), rng.integers(0, 11, 50))
    e = rng.integers(0, 200, 50)
    got = F.vpow(a, e)
    for i in range(50):
        assert F.eq((got[0][i], got[1][i]), F.pow((int(a[0][i]), int(a[1][i])), int(e[i])))
    P = PrimeField(101)
    x = rng.integers(1, 101, 50)
    assert (P.vpow(x, e) == np.array([pow(int(u), int(k), 101) for u, k in zip(x, e)])).all()
    assert (P.vpow_scalar(x, 37) == np.array([pow(int(u), 37, 101) for u in x])).all()


def test_quad_inverse():
    F = QuadExtField(7, 3)
    for a in range(7):
        for b in range(7):
            if a or b:
                assert F.is_one(F.mul((a, b), F.inv((a, b))))
