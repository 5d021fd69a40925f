"""Slow, independent reference computations used to freeze expected values."""

from __future__ import annotations

from fractions import Fraction


def log_fraction(u: int, ell: int, digits: int) -> int:
    """log(u)/ell (/4 at 2) mod ell^digits from exact rational partial sums."""
    shift = 2 if ell == 2 else 1
    x = Fraction(u - 1)
    total = Fraction(0)
    for k in range(1, 40 * (digits + 4)):
        total += (-1) ** (k + 1) * x**k / k
    total /= ell**shift
    m = ell**digits
    return total.numerator * pow(total.denominator, -1, m) % m


def brute_dlog(y, zeta, mul, one, order: int) -> int:
    x = one
    for k in range(order):
        if x == y:
            return k
        x = mul(x, zeta)
    raise ValueError("not in subgroup")


def kronecker_symbol(D: int, n: int) -> int:
    """Kronecker symbol (D/n) for n >= 1 by quadratic reciprocity-free factorization."""
    out = 1
    m = n
    p = 2
    while p * p <= m:
        while m % p == 0:
            out *= _kron_prime(D, p)
            m //= p
        p += 1
    if m > 1:
        out *= _kron_prime(D, m)
    return out


def _kron_prime(D: int, p: int) -> int:
    if p == 2:
        if D % 2 == 0:
            return 0
        return 1 if D % 8 in (1, 7) else -1
    r = pow(D % p, (p - 1) // 2, p)
    return 0 if r == 0 else (1 if r == 1 else -1)


def class_number_formula(D: int) -> int:
    """Dirichlet's formula h = -(1/|D|) sum_{a<|D|} (D/a) a, for fundamental D < -4."""
    s = sum(kronecker_symbol(D, a) * a for a in range(1, -D))
    return -s // -D


def is_square_mod(a: int, p: int) -> bool:
    return a % p == 0 or pow(a % p, (p - 1) // 2, p) == 1
