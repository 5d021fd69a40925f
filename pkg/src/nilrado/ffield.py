"""Finite fields F_p and F_{p^2} = F_p[t]/(t^2 - n), scalar and vectorized."""

from __future__ import annotations

from functools import lru_cache

import numpy as np


def factor_small(n: int) -> dict[int, int]:
    out: dict[int, int] = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def primes_upto(n: int) -> list[int]:
    if n < 2:
        return []
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    for i in range(2, int(n**0.5) + 1):
        if sieve[i]:
            sieve[i * i :: i] = False
    return [int(x) for x in np.nonzero(sieve)[0]]


def legendre(a: int, p: int) -> int:
    a %= p
    if a == 0:
        return 0
    return 1 if pow(a, (p - 1) // 2, p) == 1 else -1


class Field:
    """Common interface; see PrimeField and QuadExtField."""

    p: int
    q: int

    @staticmethod
    def of_order(q: int) -> Field:
        if is_prime(q):
            return PrimeField(q)
        r = int(round(q**0.5))
        if r * r == q and is_prime(r) and r > 2:
            n = 2
            while legendre(n, r) != -1:
                n += 1
            return QuadExtField(r, n)
        raise ValueError(f"unsupported field order {q}")

    def eq(self, a, b) -> bool:
        return a == b

    def is_one(self, a) -> bool:
        return self.eq(a, self.one())

    def pow(self, a, e: int):
        if e < 0:
            a, e = self.inv(a), -e
        r = self.one()
        while e:
            if e & 1:
                r = self.mul(r, a)
            a = self.mul(a, a)
            e >>= 1
        return r

    def order_factors(self) -> dict[int, int]:
        return _order_factors(self.p, self.q)

    def is_generator(self, a) -> bool:
        if self.is_zero(a):
            return False
        return all(not self.is_one(self.pow(a, (self.q - 1) // r)) for r in self.order_factors())

    def generator(self):
        for a in self.elements():
            if self.is_generator(a):
                return a
        raise RuntimeError("no generator found")

    def ell_root(self, ell: int):
        """Generator zeta of the ell-primary part of the unit group, with its exponent f.

        zeta = x^((q-1)/ell^f) for the first x (in element order) whose power has full order;
        every such zeta is the ell-part of some generator of the whole unit group."""
        f = 0
        m = self.q - 1
        while m % ell == 0:
            m //= ell
            f += 1
        if f == 0:
            return self.one(), 0
        for x in self._root_candidates():
            z = self.pow(x, m)
            if not self.is_one(self.pow(z, ell ** (f - 1))):
                return z, f
        raise RuntimeError("no ell-primary generator found")

    def _root_candidates(self):
        return self.elements()


@lru_cache(maxsize=None)
def _order_factors(p: int, q: int) -> dict[int, int]:
    if q == p:
        return factor_small(p - 1)
    out = factor_small(p - 1)
    for r, e in factor_small(p + 1).items():
        out[r] = out.get(r, 0) + e
    return out


class PrimeField(Field):
    def __init__(self, p: int):
        self.p = p
        self.q = p

    def one(self):
        return 1

    def is_zero(self, a) -> bool:
        return a % self.p == 0

    def mul(self, a, b):
        return a * b % self.p

    def inv(self, a):
        return pow(a, -1, self.p)

    def elements(self):
        return iter(range(1, self.p))

    def generator(self):
        return _prime_generator(self.p)

    # vectorized helpers on int64 arrays
    def vmul(self, a, b):
        return a * b % self.p

    def vpow(self, a, e):
        e = np.broadcast_to(np.asarray(e, dtype=np.int64), a.shape).copy()
        r = np.ones_like(a)
        a = a.copy()
        while e.any():
            odd = (e & 1).astype(bool)
            r = np.where(odd, r * a % self.p, r)
            a = a * a % self.p
            e >>= 1
        return r

    def vpow_scalar(self, a, e: int):
        r = np.ones_like(a)
        while e:
            if e & 1:
                r = r * a % self.p
            a = a * a % self.p
            e >>= 1
        return r

    def veq(self, a, b):
        return a == b


@lru_cache(maxsize=None)
def _prime_generator(p: int) -> int:
    fac = factor_small(p - 1)
    for a in range(1, p):
        if all(pow(a, (p - 1) // r, p) != 1 for r in fac) or p == 2:
            return a
    raise RuntimeError


class QuadExtField(Field):
    """F_p[t]/(t^2 - n), n a non-residue; elements are pairs (a, b) = a + b t."""

    def __init__(self, p: int, n: int):
        if legendre(n, p) != -1:
            raise ValueError(f"{n} is not a non-residue mod {p}")
        self.p = p
        self.n = n % p
        self.q = p * p

    def one(self):
        return (1, 0)

    def is_zero(self, a) -> bool:
        return a[0] % self.p == 0 and a[1] % self.p == 0

    def eq(self, a, b) -> bool:
        return (a[0] - b[0]) % self.p == 0 and (a[1] - b[1]) % self.p == 0

    def mul(self, a, b):
        p = self.p
        return ((a[0] * b[0] + self.n * a[1] * b[1]) % p, (a[0] * b[1] + a[1] * b[0]) % p)

    def inv(self, a):
        p = self.p
        norm = (a[0] * a[0] - self.n * a[1] * a[1]) % p
        ni = pow(norm, -1, p)
        return (a[0] * ni % p, -a[1] * ni % p)

    def elements(self):
        # lexicographic on (a, b), zero skipped
        for a in range(self.p):
            for b in range(self.p):
                if a or b:
                    yield (a, b)

    def generator(self):
        return _quad_generator(self.p, self.n)

    def _root_candidates(self):
        for b in range(1, self.p):
            for a in range(self.p):
                yield (a, b)

    def vmul(self, a, b):
        p, n = self.p, self.n
        return ((a[0] * b[0] + n * (a[1] * b[1] % p)) % p, (a[0] * b[1] + a[1] * b[0]) % p)

    def vpow(self, a, e):
        e = np.broadcast_to(np.asarray(e, dtype=np.int64), a[0].shape).copy()
        r = (np.ones_like(a[0]), np.zeros_like(a[0]))
        while e.any():
            odd = (e & 1).astype(bool)
            m = self.vmul(r, a)
            r = (np.where(odd, m[0], r[0]), np.where(odd, m[1], r[1]))
            a = self.vmul(a, a)
            e >>= 1
        return r

    def vpow_scalar(self, a, e: int):
        r = (np.ones_like(a[0]), np.zeros_like(a[0]))
        while e:
            if e & 1:
                r = self.vmul(r, a)
            a = self.vmul(a, a)
            e >>= 1
        return r

    def veq(self, a, b):
        return (a[0] == b[0]) & (a[1] == b[1])


@lru_cache(maxsize=None)
def _quad_generator(p: int, n: int):
    return Field.generator(QuadExtField(p, n))
