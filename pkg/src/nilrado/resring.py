"""Residues mod l^e, the normalized l-adic logarithm, and discrete logs."""

from __future__ import annotations

from dataclasses import dataclass

from nilrado import ffield


class DomainError(ValueError):
    """Input outside the domain of the requested map."""


class PrecisionError(ValueError):
    """Not enough input digits for the requested output precision."""


def valuation(n: int, ell: int) -> int:
    if n == 0:
        raise ValueError("valuation of 0")
    v = 0
    while n % ell == 0:
        n //= ell
        v += 1
    return v


@dataclass(frozen=True)
class Residue:
    value: int
    ell: int
    exp: int

    def __post_init__(self):
        if self.exp < 1:
            raise ValueError("exp must be positive")
        object.__setattr__(self, "value", self.value % self.ell**self.exp)

    @property
    def modulus(self) -> int:
        return self.ell**self.exp

    def _coerce(self, other):
        if isinstance(other, Residue):
            if other.ell != self.ell:
                raise ValueError("residues over different primes")
            return other.value, min(self.exp, other.exp)
        if isinstance(other, int):
            return other, self.exp
        return None

    def __add__(self, other):
        c = self._coerce(other)
        if c is None:
            return NotImplemented
        return Residue(self.value + c[0], self.ell, c[1])

    __radd__ = __add__

    def __sub__(self, other):
        c = self._coerce(other)
        if c is None:
            return NotImplemented
        return Residue(self.value - c[0], self.ell, c[1])

    def __rsub__(self, other):
        c = self._coerce(other)
        if c is None:
            return NotImplemented
        return Residue(c[0] - self.value, self.ell, c[1])

    def __mul__(self, other):
        c = self._coerce(other)
        if c is None:
            return NotImplemented
        return Residue(self.value * c[0], self.ell, c[1])

    __rmul__ = __mul__

    def __neg__(self):
        return Residue(-self.value, self.ell, self.exp)

    def reduce(self, exp: int) -> Residue:
        if exp > self.exp:
            raise PrecisionError(f"cannot raise precision {self.exp} -> {exp}")
        return Residue(self.value, self.ell, exp)

    def is_unit(self) -> bool:
        return self.value % self.ell != 0

    def to_json(self) -> dict:
        return {"v": self.value, "ell": self.ell, "e": self.exp}

    @classmethod
    def from_json(cls, obj: dict) -> Residue:
        return cls(int(obj["v"]), int(obj["ell"]), int(obj["e"]))


def unit_inverse(u: Residue) -> Residue:
    if not u.is_unit():
        raise DomainError(f"{u.value} is not a unit mod {u.ell}^{u.exp}")
    return Residue(pow(u.value, -1, u.modulus), u.ell, u.exp)


def log_series(x: int, ell: int, prec: int) -> int:
    """log(1 + x) mod ell^prec for an integer x with ell | x (4 | x if ell == 2)."""
    vx = valuation(x, ell) if x else prec
    if x == 0:
        return 0
    # term k has valuation >= k*vx - v(k); stop once that passes prec for good
    guard = prec.bit_length() + 2
    mod = ell ** (prec + guard)
    total = 0
    power = 1
    k = 0
    while True:
        k += 1
        power = power * x % mod
        vk = valuation(k, ell)
        if k * vx - vk >= prec and k * vx >= prec + guard:
            break
        if k * vx - vk >= prec:
            continue
        kk = k // ell**vk
        term = (power // ell**vk) * pow(kk, -1, ell**prec)
        total += term if k % 2 else -term
    return total % ell**prec


def padic_log(u: Residue, ell: int | None = None, digits: int | None = None) -> Residue:
    """Classical log divided by ell (by 4 when ell == 2), to the precision u allows.

    An input known mod ell^(n+1) (ell^(n+2) when ell == 2) yields n digits.
    """
    ell = u.ell if ell is None else ell
    if ell != u.ell:
        raise ValueError("prime mismatch")
    shift = 2 if ell == 2 else 1
    if u.exp < shift + 1:
        raise PrecisionError(f"need exp >= {shift + 1}, got {u.exp}")
    if (u.value - 1) % ell**shift:
        raise DomainError(f"{u.value} is not 1 mod {ell**shift}")
    avail = u.exp - shift
    n = avail if digits is None else digits
    if n > avail:
        raise PrecisionError(f"{n} digits requested, input gives {avail}")
    raw = log_series(u.value - 1, ell, n + shift)
    return Residue(raw // ell**shift, ell, n)


def log_int(q: int, ell: int, digits: int) -> int:
    """Normalized log of an exact integer q (1 mod ell, or 1 mod 4 at 2)."""
    shift = 2 if ell == 2 else 1
    return padic_log(Residue(q, ell, digits + shift)).value


def cyclotomic_log(q: int, ell: int, digits: int) -> int:
    """log of q, using -q at ell = 2 when q is 3 mod 4."""
    if ell == 2 and q % 4 == 3:
        q = -q
    return log_int(q, ell, digits)


def dlog_ell_part(x, q: int, ell: int, zeta, field: ffield.Field | None = None) -> Residue:
    """k mod ell^f with x^((q-1)/ell^f) = zeta^k, by Pohlig-Hellman digits."""
    F = field if field is not None else ffield.Field.of_order(q)
    if F.is_zero(x):
        raise DomainError("dlog of zero")
    f = valuation(q - 1, ell)
    if f == 0:
        raise DomainError(f"{ell} does not divide q-1 = {q - 1}")
    if not F.is_one(F.pow(zeta, ell**f)) or F.is_one(F.pow(zeta, ell ** (f - 1))):
        raise DomainError(f"zeta does not have order {ell}^{f}")
    y = F.pow(x, (q - 1) // ell**f)
    k = dlog_in_subgroup(F, y, zeta, ell, f, f)
    return Residue(k, ell, f)


def dlog_in_subgroup(F, y, zeta, ell: int, f: int, digits: int) -> int:
    """k mod ell^digits with y = zeta^k, zeta of order ell^f."""
    root = F.pow(zeta, ell ** (f - 1))
    table = [F.pow(root, d) for d in range(ell)]
    zinv = F.inv(zeta)
    k = 0
    for i in range(digits):
        t = F.mul(y, F.pow(zinv, k))
        t = F.pow(t, ell ** (f - 1 - i))
        for d, r in enumerate(table):
            if F.eq(t, r):
                break
        else:
            raise DomainError("element not in the subgroup generated by zeta")
        k += d * ell**i
    return k
