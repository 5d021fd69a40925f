"""Imaginary quadratic fields: class numbers, splitting, places and ideal generators."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from nilrado.ffield import is_prime, legendre
from nilrado.resring import valuation


class FieldError(ValueError):
    pass


class SearchBoundExceeded(FieldError):
    pass


def is_squarefree(n: int) -> bool:
    n = abs(n)
    d = 2
    while d * d <= n:
        if n % (d * d) == 0:
            return False
        d += 1
    return True


def fundamental_discriminant(d: int) -> int:
    return d if d % 4 == 1 else 4 * d


@lru_cache(maxsize=None)
def class_number(disc: int) -> int:
    """Number of reduced positive definite forms (a, b, c) with b^2 - 4ac = disc."""
    if disc >= 0 or disc % 4 not in (0, 1):
        raise FieldError(f"bad discriminant {disc}")
    h = 0
    a = 1
    while 3 * a * a <= -disc:
        for b in range(-a + 1, a + 1):
            num = b * b - disc
            if num % (4 * a):
                continue
            c = num // (4 * a)
            if c < a:
                continue
            if c == a and b < 0:
                continue
            if math.gcd(math.gcd(a, abs(b)), c) != 1:
                continue
            h += 1
        a += 1
    return h


def kronecker(D: int, p: int) -> int:
    """Kronecker symbol (D / p) for a prime p."""
    if p == 2:
        if D % 2 == 0:
            return 0
        return 1 if D % 8 in (1, 7) else -1
    return legendre(D, p)


def sqrt_mod(a: int, p: int) -> int:
    """The smaller square root of a mod an odd prime p."""
    a %= p
    if a == 0:
        return 0
    if legendre(a, p) != 1:
        raise FieldError(f"{a} is not a square mod {p}")
    if p % 4 == 3:
        r = pow(a, (p + 1) // 4, p)
    else:
        # Tonelli-Shanks
        q, s = p - 1, 0
        while q % 2 == 0:
            q //= 2
            s += 1
        z = 2
        while legendre(z, p) != -1:
            z += 1
        m, c, t, r = s, pow(z, q, p), pow(a, q, p), pow(a, (q + 1) // 2, p)
        while t != 1:
            i, t2 = 0, t
            while t2 != 1:
                t2 = t2 * t2 % p
                i += 1
            b = pow(c, 1 << (m - i - 1), p)
            m, c, t, r = i, b * b % p, t * b * b % p, r * b % p
    return min(r, p - r)


@dataclass(frozen=True)
class QuadInt:
    """(x + y sqrt(d)) / 2."""

    x: int
    y: int

    def to_json(self) -> list:
        return [self.x, self.y]


@dataclass(frozen=True)
class QuadField:
    d: int
    disc: int
    h: int
    half_integral: bool  # ring is Z[(1 + sqrt d)/2]

    def norm(self, a: QuadInt) -> int:
        n4 = a.x * a.x - self.d * a.y * a.y
        return n4 // 4

    def mul(self, a: QuadInt, b: QuadInt) -> QuadInt:
        x = a.x * b.x + self.d * a.y * b.y
        y = a.x * b.y + a.y * b.x
        return QuadInt(x // 2, y // 2)

    def conj(self, a: QuadInt) -> QuadInt:
        return QuadInt(a.x, -a.y)

    def neg(self, a: QuadInt) -> QuadInt:
        return QuadInt(-a.x, -a.y)

    def is_integral(self, a: QuadInt) -> bool:
        if self.half_integral:
            return (a.x - a.y) % 2 == 0
        return a.x % 2 == 0 and a.y % 2 == 0

    def units(self) -> list:
        out = []
        for x in range(-2, 3):
            for y in range(-2, 3):
                u = QuadInt(x, y)
                if self.is_integral(u) and x * x - self.d * y * y == 4:
                    out.append(u)
        return out


@dataclass(frozen=True)
class Eligibility:
    ell: int
    ok: bool
    reasons: tuple = ()


def field_init(d: int) -> QuadField:
    if d >= 0 or not is_squarefree(d):
        raise FieldError(f"d = {d} must be negative and squarefree")
    disc = fundamental_discriminant(d)
    return QuadField(d, disc, class_number(disc), d % 4 == 1)


def eligibility(K: QuadField, ell: int) -> Eligibility:
    reasons = []
    if K.h % ell == 0:
        reasons.append(f"{ell} divides the class number {K.h}")
    if ell == 2:
        if not is_prime(-K.d):
            reasons.append(f"-d = {-K.d} is not prime")
        if K.d % 8 != 5:
            reasons.append(f"2 is not inert (d = {K.d} is not 5 mod 8)")
    elif ell == 3:
        if K.d % 3 == 0 and (-K.d // 3) % 3 == 1:
            reasons.append("completion at 3 is Q_3(zeta_3)")
    return Eligibility(ell, not reasons, tuple(reasons))


def splitting(K: QuadField, p: int) -> str:
    if K.disc % p == 0:
        return "ramified"
    return "split" if kronecker(K.disc, p) == 1 else "inert"


@dataclass(frozen=True)
class PlaceData:
    p: int
    split_type: str
    conj_index: int
    q: int
    f: int
    g: int
    alpha: QuadInt
    root: int | None = None  # image of sqrt(d) mod p for split places

    @property
    def id(self) -> str:
        if self.split_type == "inert":
            return f"p{self.p}i"
        return f"p{self.p}{'+' if self.conj_index == 0 else '-'}"

    def record(self) -> dict:
        return {"id": self.id, "f": self.f, "g": self.g}

    def sidecar(self) -> dict:
        return {"alpha": self.alpha.to_json(), "q": self.q}


def level_and_unit(q: int, ell: int) -> tuple:
    f = valuation(q - 1, ell)
    return f, ((q - 1) // ell**f) % ell**f


def sqrt_d_root(K: QuadField, p: int) -> int:
    """Image of sqrt(d) at place index 0: from the smaller root of disc mod p."""
    s0 = sqrt_mod(K.disc, p)
    return s0 if K.disc == K.d else s0 * pow(2, -1, p) % p


def place_data(K: QuadField, p: int, ell: int) -> list:
    if not is_prime(p):
        raise FieldError(f"{p} is not prime")
    kind = splitting(K, p)
    if kind == "ramified":
        raise FieldError(f"{p} is ramified")
    if p == ell or p == 2:
        return []
    out = []
    if kind == "inert":
        q = p * p
        f, g = level_and_unit(q, ell)
        if f >= 1:
            out.append(PlaceData(p, kind, 0, q, f, g, QuadInt(2 * p**K.h, 0)))
        return out
    q = p
    f, g = level_and_unit(q, ell)
    if f == 0:
        return out
    r = sqrt_d_root(K, p)
    for idx, root in ((0, r), (1, (-r) % p)):
        out.append(PlaceData(p, kind, idx, q, f, g, ideal_generator(K, p, root), root))
    return out


def reduce_at(K: QuadField, a: QuadInt, p: int, root: int) -> int:
    return (a.x + a.y * root) * pow(2, -1, p) % p


DEFAULT_SEARCH = 10**7


def ideal_generator(K: QuadField, p: int, root: int, bound: int = DEFAULT_SEARCH) -> QuadInt:
    """Generator of the h-th power of the split prime where sqrt(d) -> root mod p."""
    N = p**K.h
    ymax = math.isqrt(4 * N // (-K.d))
    if ymax > bound:
        raise SearchBoundExceeded(f"norm search up to y = {ymax}")
    cands = []
    for y in range(-ymax, ymax + 1):
        rest = 4 * N + K.d * y * y
        if rest < 0:
            continue
        x = math.isqrt(rest)
        if x * x != rest:
            continue
        for xx in {x, -x}:
            a = QuadInt(xx, y)
            if not K.is_integral(a):
                continue
            if reduce_at(K, a, p, root) == 0 and reduce_at(K, a, p, -root % p) != 0:
                cands.append(a)
    if not cands:
        raise FieldError(f"no generator of norm {N} found at {p}")
    ok = [a for a in cands if a.x > 0 or (a.x == 0 and a.y > 0)]
    return max(ok, key=lambda a: (a.x, a.y))


def places_upto(K: QuadField, ell: int, bound: int) -> list:
    from nilrado.ffield import primes_upto

    out = []
    for p in primes_upto(bound):
        if splitting(K, p) == "ramified":
            continue
        out.extend(place_data(K, p, ell))
    return out


def place_order_key(pl: PlaceData) -> tuple:
    return (pl.p, pl.conj_index)
