"""Arithmetic decorated graphs of imaginary quadratic fields: character rows, local symbols at 2."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np

from nilrado import quadfield as qf
from nilrado.ffield import Field, PrimeField, QuadExtField, primes_upto
from nilrado.graph import (INF_IDS, DecoratedGraph, ExtensionQuery, InvalidQuery, Witness,
                           check_query, match_rows, units_mod)
from nilrado.resring import Residue, cyclotomic_log, dlog_in_subgroup, valuation


class CalibrationError(RuntimeError):
    pass


class PrecisionShortfall(ValueError):
    pass


# the 2-adic completion Q_2(sqrt 5): elements u + v w mod 2^m with w^2 = w + 1


def _two_adic_sqrt(a: int, bits: int) -> int:
    """The square root s = 1 mod 4 of a = 1 mod 8 in Z_2, mod 2^bits."""
    if a % 8 != 1:
        raise ValueError(f"{a} is not a 2-adic square unit")
    s = 1
    for k in range(3, bits + 2):
        if (s * s - a) % 2 ** (k + 1):
            s += 2 ** (k - 1)
    return s % 2**bits


@dataclass(frozen=True)
class LocalTwoContext:
    m: int = 6

    def __post_init__(self):
        if self.m < 5:
            raise ValueError("need m >= 5 for Hensel-sufficient square tests")

    @property
    def mod(self) -> int:
        return 2**self.m

    def mul(self, a, b):
        M = self.mod
        return ((a[0] * b[0] + a[1] * b[1]) % M, (a[0] * b[1] + a[1] * b[0] + a[1] * b[1]) % M)

    def norm(self, a) -> int:
        return (a[0] * a[0] + a[0] * a[1] - a[1] * a[1]) % self.mod

    def is_unit(self, a) -> bool:
        return self.norm(a) % 2 == 1

    @cached_property
    def squares(self) -> frozenset:
        M = self.mod
        out = set()
        for u in range(M):
            for v in range(M):
                if (u * u + u * v - v * v) % 2:
                    out.add(self.mul((u, v), (u, v)))
        return frozenset(out)

    def is_square(self, a) -> bool:
        return (a[0] % self.mod, a[1] % self.mod) in self.squares

    # basis of units modulo squares: 2 + sqrt5, -1, 2 sqrt5 - 5  (sqrt5 = 2w - 1)
    @property
    def basis(self) -> tuple:
        return ((1, 2), (-1 % self.mod, 0), (-7 % self.mod, 4))

    def basis_product(self, a: int, b: int, c: int):
        x = (1, 0)
        for e, u in zip((a, b, c), self.basis):
            if e % 2:
                x = self.mul(x, u)
        return x

    def classify(self, x) -> tuple:
        if not self.is_unit(x):
            raise ValueError("square classes are only defined for units")
        hits = [abc for abc in itertools.product((0, 1), repeat=3)
                if self.is_square(self.mul(x, self.basis_product(*abc)))]
        if len(hits) != 1:
            raise PrecisionShortfall(f"{len(hits)} square classes matched; raise m")
        return hits[0]

    def embed(self, K: qf.QuadField, a: qf.QuadInt):
        """Image of (x + y sqrt(d))/2 under sqrt(d) -> s sqrt5, s^2 = d/5, s = 1 mod 4."""
        if K.d % 8 != 5:
            raise ValueError("2 must be inert (d = 5 mod 8)")
        bits = self.m + 2
        s = _two_adic_sqrt(K.d * pow(5, -1, 2 ** (bits + 3)) % 2 ** (bits + 3), bits)
        # sqrt(d) = s (2w - 1)
        ys = a.y * s
        if (a.x - ys) % 2:
            raise ValueError("not an integer of the field")
        return (((a.x - ys) // 2) % self.mod, ys % self.mod)

    def hilbert(self, u, v) -> int:
        """(u, v)_2 in additive notation: 0 iff x^2 - u y^2 - v z^2 = 0 has a primitive solution."""
        M = 8
        els = [(a, b) for a in range(M) for b in range(M)]
        A = np.array([e[0] for e in els], dtype=np.int64)
        B = np.array([e[1] for e in els], dtype=np.int64)
        unit = (A * A + A * B - B * B) % 2 == 1

        def vmul(x, y):
            return ((x[0] * y[0] + x[1] * y[1]) % M, (x[0] * y[1] + x[1] * y[0] + x[1] * y[1]) % M)

        sq = vmul((A, B), (A, B))
        uy = vmul((np.full_like(A, u[0] % M), np.full_like(A, u[1] % M)), sq)
        vz = vmul((np.full_like(A, v[0] % M), np.full_like(A, v[1] % M)), sq)
        s0 = (sq[0][:, None, None] - uy[0][None, :, None] - vz[0][None, None, :]) % M
        s1 = (sq[1][:, None, None] - uy[1][None, :, None] - vz[1][None, None, :]) % M
        prim = unit[:, None, None] | unit[None, :, None] | unit[None, None, :]
        return 0 if ((s0 == 0) & (s1 == 0) & prim).any() else 1


EXPECTED_HILBERT = ((1, 1, 0), (1, 0, 0), (0, 0, 0))


def hilbert_table_check(ctx: LocalTwoContext | None = None) -> list:
    ctx = ctx or LocalTwoContext()
    return [[ctx.hilbert(a, b) for b in ctx.basis] for a in ctx.basis]


def square_class_at_2(K: qf.QuadField, x: qf.QuadInt, ctx: LocalTwoContext | None = None) -> tuple:
    ctx = ctx or LocalTwoContext()
    if K.norm(x) % 2 == 0:
        raise ValueError("even norm")
    return ctx.classify(ctx.embed(K, x))


def e2(K: qf.QuadField, x: qf.QuadInt, ctx: LocalTwoContext | None = None) -> int:
    a, b, _ = square_class_at_2(K, x, ctx)
    return (a + b) % 2


# finite rows


@lru_cache(maxsize=None)
def residue_field(p: int, split: bool, d: int) -> Field:
    return PrimeField(p) if split else QuadExtField(p, d % p)


@lru_cache(maxsize=None)
def _ell_root(p: int, split: bool, d: int, ell: int):
    return residue_field(p, split, d).ell_root(ell)


def reduce_alpha(K: qf.QuadField, v: qf.PlaceData, a: qf.QuadInt):
    p = v.p
    h = pow(2, -1, p)
    if v.split_type == "split":
        return (a.x + a.y * v.root) * h % p
    return (a.x * h % p, a.y * h % p)


def dlog_at(K: qf.QuadField, v: qf.PlaceData, a: qf.QuadInt, ell: int, digits: int) -> int:
    F = residue_field(v.p, v.split_type == "split", K.d)
    zeta, f = _ell_root(v.p, v.split_type == "split", K.d, ell)
    x = reduce_alpha(K, v, a)
    if F.is_zero(x):
        raise ValueError(f"alpha not invertible at {v.id}")
    y = F.pow(x, (v.q - 1) // ell**f)
    return dlog_in_subgroup(F, y, zeta, ell, f, digits)


def finite_row_eval(K: qf.QuadField, v: qf.PlaceData, target: qf.PlaceData, ell: int,
                    digits: int | None = None, e2_target: int | None = None) -> Residue:
    """pi_v(Frob_target) mod ell^digits (digits <= f(v)), before the ordering sign."""
    digits = v.f if digits is None else digits
    if digits > v.f:
        raise PrecisionShortfall(f"row {v.id} has only {v.f} digits")
    if v.id == target.id:
        raise ValueError("row and target must be distinct places")
    val = dlog_at(K, v, target.alpha, ell, digits)
    if ell == 2 and digits == v.f:
        e = e2(K, target.alpha) if e2_target is None else e2_target
        val += 2 ** (v.f - 1) * e
    return Residue(val * pow(K.h, -1, ell**digits), ell, digits)


def cyclotomic_row(target: qf.PlaceData, ell: int, digits: int) -> Residue:
    if digits > target.f:
        raise PrecisionShortfall("cyclotomic row is stored mod ell^f")
    return Residue(cyclotomic_log(target.q, ell, digits), ell, digits)


# anticyclotomic row


class _Order:
    """O_K / ell^N in the basis 1, w (w = sqrt d or (1 + sqrt d)/2)."""

    def __init__(self, K: qf.QuadField, ell: int, N: int):
        self.K, self.ell, self.N = K, ell, N
        self.mod = ell**N
        self.half = K.half_integral
        self.c = (K.d - 1) // 4 if self.half else K.d  # w^2 = w + c  or  w^2 = c

    def from_quad(self, a: qf.QuadInt):
        if self.half:
            return ((a.x - a.y) // 2 % self.mod, a.y % self.mod)
        return (a.x // 2 % self.mod, a.y // 2 % self.mod)

    def mul(self, a, b):
        M = self.mod
        if self.half:
            return ((a[0] * b[0] + self.c * a[1] * b[1]) % M,
                    (a[0] * b[1] + a[1] * b[0] + a[1] * b[1]) % M)
        return ((a[0] * b[0] + self.c * a[1] * b[1]) % M, (a[0] * b[1] + a[1] * b[0]) % M)

    def pow(self, a, e: int):
        r = (1, 0)
        while e:
            if e & 1:
                r = self.mul(r, a)
            a = self.mul(a, a)
            e >>= 1
        return r

    def unit_group_order(self) -> int:
        ell = self.ell
        kind = qf.splitting(self.K, ell)
        return {"split": (ell - 1) ** 2, "inert": ell * ell - 1, "ramified": ell * (ell - 1)}[kind]

    def log(self, x, digits: int):
        """log of x = 1 mod ell (mod 4 at 2), mod ell^digits, computed with guard digits."""
        ell = self.ell
        z = ((x[0] - 1) % self.mod, x[1] % self.mod)
        if z == (0, 0):
            return (0, 0)
        vz = min(valuation(c, ell) if c else self.N for c in z)
        need = 2 if ell == 2 else 1
        if vz < need:
            raise ValueError("argument outside the log domain")
        total = [0, 0]
        power = (1, 0)
        k = 0
        while True:
            k += 1
            power = self.mul(power, z)
            vk = valuation(k, ell)
            if k * vz - vk >= digits and k * vz >= digits + self.N // 2:
                break
            if k * vz - vk >= digits:
                continue
            inv = pow(k // ell**vk, -1, ell**digits)
            sign = 1 if k % 2 else -1
            for i in range(2):
                total[i] += sign * (power[i] // ell**vk) * inv
        return (total[0] % ell**digits, total[1] % ell**digits)


@dataclass
class AnticyclotomicCharacter:
    """psi(alpha): sqrt(d)-coefficient of log((alpha^2 / N alpha)^T), normalized.

    T kills (O/ell)^* (and is doubled at 2 so that the argument lies in 1 + 4O).
    The raw value is divided by ell^v0 (v0 the least valuation over reference places) and by h.
    At ell = 2 the cyclotomic row may be added so that psi mod 2 equals (q - 1)/2 mod 2.
    """

    K: qf.QuadField
    ell: int
    digits: int
    v0: int = 0
    add_cyclotomic: bool = False
    guard: int = 12
    calibration: dict = field(default_factory=dict)

    @property
    def T(self) -> int:
        o = _Order(self.K, self.ell, 2)
        t = o.unit_group_order()
        return 2 * t if self.ell == 2 else t

    def raw(self, a: qf.QuadInt, digits: int) -> int:
        ell = self.ell
        N = digits + self.guard
        O = _Order(self.K, ell, N)
        nrm = self.K.norm(a)
        if nrm % ell == 0:
            raise ValueError("alpha must be prime to ell")
        x = O.from_quad(a)
        beta = O.mul(O.mul(x, x), (pow(nrm, -1, O.mod), 0))
        L = O.log(O.pow(beta, self.T), digits)
        c = (-L[0]) if O.half else L[1]
        return c % ell**digits

    def psi(self, a: qf.QuadInt, digits: int) -> int:
        """The normalized anticyclotomic value, before any calibration."""
        ell = self.ell
        r = self.raw(a, digits + self.v0)
        if r % ell**self.v0:
            raise CalibrationError("raw value below the normalizing valuation")
        return (r // ell**self.v0) * pow(self.K.h, -1, ell**digits) % ell**digits

    def value(self, a: qf.QuadInt, digits: int, q: int | None = None) -> int:
        ell = self.ell
        val = self.psi(a, digits)
        if self.add_cyclotomic:
            if q is None:
                raise ValueError("q needed for the cyclotomic correction")
            val = (val + cyclotomic_log(q, ell, digits)) % ell**digits
        return val


def anticyclotomic_character(K: qf.QuadField, ell: int, places: list, digits: int = 8,
                             nref: int = 50) -> AnticyclotomicCharacter:
    ref = [pl for pl in places if pl.split_type == "split"][:nref]
    chi = AnticyclotomicCharacter(K, ell, digits)
    if not ref:
        return chi
    probe = digits + 8
    vals = [chi.raw(pl.alpha, probe) for pl in ref]
    nz = [valuation(v, ell) for v in vals if v]
    if not nz:
        raise CalibrationError("anticyclotomic row vanishes on all reference places")
    chi.v0 = min(nz)
    chi.calibration = {"v0": chi.v0, "reference_places": len(ref)}
    if ell == 2:
        refs = [pl for pl in places][:nref]
        want = [((pl.q - 1) // 2) % 2 for pl in refs]
        got = [chi.value(pl.alpha, 1) for pl in refs]
        if got != want:
            chi.add_cyclotomic = True
            got = [chi.value(pl.alpha, 1, pl.q) for pl in refs]
            if got != want:
                raise CalibrationError("no lattice member matches (q - 1)/2 mod 2")
        chi.calibration["add_cyclotomic"] = chi.add_cyclotomic
    return chi


def anticyclotomic_row(chi: AnticyclotomicCharacter, target: qf.PlaceData, digits: int) -> Residue:
    return Residue(chi.value(target.alpha, digits, target.q), chi.ell, digits)


# vectorized finite rows


def _vpow_prime(a, e: int, p: int):
    r = np.ones_like(a)
    while e:
        if e & 1:
            r = r * a % p
        a = a * a % p
        e >>= 1
    return r


def _vpow_prime_arr(a, e, p: int):
    e = e.copy()
    r = np.ones_like(a)
    while e.any():
        odd = (e & 1).astype(bool)
        r = np.where(odd, r * a % p, r)
        a = a * a % p
        e >>= 1
    return r


def row_values(K: qf.QuadField, v: qf.PlaceData, X, Y, ell: int, digits: int, E2=None):
    """pi_v(Frob) on alphas (X + Y sqrt d)/2 given as int64 arrays; -1 where alpha vanishes at v."""
    p = v.p
    split = v.split_type == "split"
    F = residue_field(p, split, K.d)
    zeta, f = _ell_root(p, split, K.d, ell)
    h2 = pow(2, -1, p)
    cof = (v.q - 1) // ell**f
    if split:
        z = ((X % p) + (Y % p) * v.root % p) % p * h2 % p
        bad = z == 0
        y = _vpow_prime(np.where(bad, 1, z), cof, p)
        zinv = F.inv(zeta)
        table = [F.pow(zeta, d * ell ** (f - 1)) for d in range(ell)]
        k = np.zeros_like(X)
        for i in range(digits):
            t = y * _vpow_prime_arr(np.full_like(X, zinv), k, p) % p
            t = _vpow_prime(t, ell ** (f - 1 - i), p)
            dig = np.zeros_like(X)
            for dd, r in enumerate(table):
                dig = np.where(t == r, dd, dig)
            k = k + dig * ell**i
    else:
        a0 = (X % p) * h2 % p
        a1 = (Y % p) * h2 % p
        bad = (a0 == 0) & (a1 == 0)
        a0 = np.where(bad, 1, a0)
        y = F.vpow_scalar((a0, a1), cof)
        zinv = F.inv(zeta)
        table = [F.pow(zeta, d * ell ** (f - 1)) for d in range(ell)]
        k = np.zeros_like(X)
        zi = (np.full_like(X, zinv[0]), np.full_like(X, zinv[1]))
        for i in range(digits):
            t = F.vmul(y, F.vpow(zi, k))
            t = F.vpow_scalar(t, ell ** (f - 1 - i))
            dig = np.zeros_like(X)
            for dd, r in enumerate(table):
                dig = np.where((t[0] == r[0]) & (t[1] == r[1]), dd, dig)
            k = k + dig * ell**i
    if ell == 2 and digits == v.f:
        k = k + 2 ** (v.f - 1) * E2
    out = k * pow(K.h, -1, ell**digits) % ell**digits
    return np.where(bad, -1, out)


# the arithmetic graph


@dataclass
class ArithmeticGraph:
    graph: DecoratedGraph
    places: list
    K: qf.QuadField
    ell: int
    bound: int
    anticyclotomic: AnticyclotomicCharacter
    e2_values: np.ndarray | None = None

    def provenance(self) -> dict:
        return {"d": self.K.d, "ell": self.ell, "bound": self.bound, "h": self.K.h,
                "anticyclotomic": dict(self.anticyclotomic.calibration),
                "alpha": {pl.id: pl.sidecar() for pl in self.places}}

    def to_json(self) -> dict:
        out = self.graph.to_json()
        out["provenance"] = self.provenance()
        return out


def _check_eligible(K, ell):
    el = qf.eligibility(K, ell)
    if not el.ok:
        raise qf.FieldError(f"Q(sqrt {K.d}) not eligible at ell={ell}: " + "; ".join(el.reasons))


def build_arithmetic_graph_data(K: qf.QuadField, ell: int, bound: int, cap: int,
                                e2_flip=()) -> ArithmeticGraph:
    """e2_flip: place ids whose 2-adic correction bit is deliberately inverted (negative controls)."""
    _check_eligible(K, ell)
    places = qf.places_upto(K, ell, bound)
    ctx = LocalTwoContext()
    chi = anticyclotomic_character(K, ell, places, digits=cap)
    n = len(places) + 2
    ids = INF_IDS + tuple(pl.id for pl in places)
    f = np.array([0, 0] + [pl.f for pl in places], dtype=np.int64)
    g = np.array([0, 0] + [pl.g for pl in places], dtype=np.int64)
    prec = np.where(f == 0, cap, np.minimum(f, cap))
    lab = np.zeros((n, n), dtype=np.int64)
    X = np.array([pl.alpha.x for pl in places], dtype=np.int64)
    Y = np.array([pl.alpha.y for pl in places], dtype=np.int64)
    E2 = (np.array([e2(K, pl.alpha, ctx) for pl in places], dtype=np.int64)
          if ell == 2 else np.zeros(len(places), dtype=np.int64))
    for j, pl in enumerate(places):
        if pl.id in e2_flip:
            E2[j] ^= 1
    for j, pl in enumerate(places):
        dj = int(prec[j + 2])
        lab[0, j + 2] = cyclotomic_row(pl, ell, dj).value
        lab[1, j + 2] = anticyclotomic_row(chi, pl, dj).value
    m = len(places)
    for i, pl in enumerate(places):
        di = int(prec[i + 2])
        vals = row_values(K, pl, X, Y, ell, di, E2)
        sign = np.where(np.arange(m) > i, 1, -1)
        mods = ell ** np.minimum(di, prec[2:])
        row = sign * vals % mods
        row[i] = 0
        lab[i + 2, 2:] = row
    flavor = "odd" if ell != 2 else "two-reciprocity"
    gr = DecoratedGraph(ell, flavor, cap, ids, f, g, lab)
    return ArithmeticGraph(gr, places, K, ell, bound, chi, E2)


def build_arithmetic_graph(K: qf.QuadField, ell: int, bound: int, cap: int) -> DecoratedGraph:
    return build_arithmetic_graph_data(K, ell, bound, cap).graph


# on-demand oracle and the weak Rado probe


def parse_place_id(s: str) -> tuple:
    if not s.startswith("p") or s[-1] not in "+-i":
        raise KeyError(s)
    return int(s[1:-1]), s[-1]


@dataclass
class ProbeResult:
    witness: str | None
    gamma: int | None
    scanned: int
    fg_matches: int
    split_scanned: int
    split_f_hits: int
    split_fg_hits: int
    exhausted: bool

    @property
    def density(self) -> float:
        return self.fg_matches / self.scanned if self.scanned else 0.0

    def to_json(self) -> dict:
        return {"witness": self.witness, "gamma": self.gamma, "scanned": self.scanned,
                "fg_matches": self.fg_matches, "split_scanned": self.split_scanned,
                "split_f_hits": self.split_f_hits, "split_fg_hits": self.split_fg_hits,
                "naive_density": self.density, "exhausted": self.exhausted}


class ArithmeticOracle:
    """Graph oracle over the places of K up to a prime bound; labels computed on demand."""

    def __init__(self, K: qf.QuadField, ell: int, cap: int, bound: int, mode: str = "up_to_scaling"):
        _check_eligible(K, ell)
        self.K, self.ell, self.cap, self.bound = K, ell, cap, bound
        self.flavor = "odd" if ell != 2 else "two-reciprocity"
        self.inf_ids = INF_IDS
        self.mode = mode
        self.ctx = LocalTwoContext()
        self._places: list = []
        self._by_id: dict = {}
        self._primes = iter(primes_upto(bound))
        self._done = False
        self._label_cache: dict = {}
        self._e2: dict = {}
        self.last_probe: ProbeResult | None = None
        self.probes: list = []
        self._chi = None

    # place enumeration

    def _extend(self) -> bool:
        for p in self._primes:
            if qf.splitting(self.K, p) == "ramified":
                continue
            new = qf.place_data(self.K, p, self.ell)
            for pl in new:
                self._by_id[pl.id] = pl
                self._places.append(pl)
            if new:
                return True
        self._done = True
        return False

    def places(self):
        i = 0
        while True:
            while i >= len(self._places):
                if self._done or not self._extend():
                    return
            yield self._places[i]
            i += 1

    def place(self, v: str) -> qf.PlaceData:
        while v not in self._by_id:
            p, _ = parse_place_id(v)
            if self._done or (self._places and self._places[-1].p > p):
                raise KeyError(v)
            self._extend()
        return self._by_id[v]

    @property
    def chi(self) -> AnticyclotomicCharacter:
        if self._chi is None:
            ref = []
            for pl in self.places():
                ref.append(pl)
                if sum(x.split_type == "split" for x in ref) >= 50 and len(ref) >= 50:
                    break
            self._chi = anticyclotomic_character(self.K, self.ell, ref, digits=self.cap)
        return self._chi

    # oracle protocol

    def finite_order(self):
        return (pl.id for pl in self.places())

    def rank(self, v) -> tuple:
        if v in self.inf_ids:
            return (0, self.inf_ids.index(v))
        pl = self.place(v)
        return (1, pl.p, pl.conj_index)

    def info(self, v) -> tuple:
        if v in self.inf_ids:
            return None, None
        pl = self.place(v)
        return pl.f, pl.g

    def prec(self, v) -> int:
        if v in self.inf_ids:
            return self.cap
        return min(self.place(v).f, self.cap)

    def e2(self, pl) -> int:
        if pl.id not in self._e2:
            self._e2[pl.id] = e2(self.K, pl.alpha, self.ctx)
        return self._e2[pl.id]

    def label(self, v, w) -> int:
        key = (v, w)
        if key in self._label_cache:
            return self._label_cache[key]
        ell = self.ell
        if v == w:
            raise KeyError(key)
        if w in self.inf_ids:
            if v in self.inf_ids:
                raise KeyError(key)
            val = 0
        else:
            tw = self.place(w)
            d = min(self.prec(v), self.prec(w))
            if v == self.inf_ids[0]:
                val = cyclotomic_row(tw, ell, d).value
            elif v == self.inf_ids[1]:
                val = anticyclotomic_row(self.chi, tw, d).value
            else:
                pv = self.place(v)
                digits = min(pv.f, self.cap)
                r = finite_row_eval(self.K, pv, tw, ell, digits, self.e2(tw) if ell == 2 else None)
                sign = 1 if self.rank(v) < self.rank(w) else -1
                val = sign * r.value % ell**d
        self._label_cache[key] = val
        return val

    def answer(self, query: ExtensionQuery, mode: str = "up_to_scaling", fresh: bool = False) -> Witness | None:
        # the scan only visits primes beyond S, so witnesses are always fresh
        res = weakrado_probe(self, query, mode=mode)
        if res.witness is None:
            return None
        return Witness(res.witness, res.gamma)


def _validate_against(oracle: ArithmeticOracle, query: ExtensionQuery):
    for s in query.S:
        if s not in oracle.inf_ids:
            try:
                oracle.place(s)
            except KeyError:
                raise InvalidQuery("subset", f"unknown vertex {s}") from None
    check_query(oracle.ell, oracle.flavor, oracle.cap, oracle.inf_ids, oracle.prec,
                lambda s: oracle.label(oracle.inf_ids[1], s) % 2, query)


def weakrado_probe(oracle: ArithmeticOracle, query: ExtensionQuery, mode: str = "up_to_scaling",
                   prime_bound: int | None = None) -> ProbeResult:
    """Scan places beyond every prime of S for a vertex realizing the query."""
    _validate_against(oracle, query)
    ell = oracle.ell
    bound = oracle.bound if prime_bound is None else min(prime_bound, oracle.bound)
    S = list(query.S)
    start = max([oracle.place(s).p for s in S if s not in oracle.inf_ids], default=0)
    n_prec = min(query.n, oracle.cap)
    mods = np.array([ell ** min(n_prec, oracle.prec(s)) for s in S], dtype=np.int64)
    want_out = np.array([query.out_labels[s] for s in S], dtype=np.int64)
    want_in = np.array([query.in_labels[s] for s in S], dtype=np.int64)
    scanned = fg = split_n = split_f = split_fg = 0
    for pl in oracle.places():
        if pl.p <= start:
            continue
        if pl.p > bound:
            break
        scanned += 1
        is_split = pl.split_type == "split"
        split_n += is_split
        if pl.f != query.n:
            continue
        split_f += is_split
        if pl.g != query.alpha:
            continue
        fg += 1
        split_fg += is_split
        out_row = np.array([[oracle.label(pl.id, s) for s in S]], dtype=np.int64)
        in_row = np.array([[oracle.label(s, pl.id) for s in S]], dtype=np.int64)
        hits = match_rows(ell, out_row, in_row, want_out, want_in, mods, n_prec, mode)
        if hits:
            res = ProbeResult(pl.id, hits[0][1], scanned, fg, split_n, split_f, split_fg, False)
            oracle.last_probe = res
            oracle.probes.append(res)
            return res
    res = ProbeResult(None, None, scanned, fg, split_n, split_f, split_fg, True)
    oracle.last_probe = res
    oracle.probes.append(res)
    return res


def random_arithmetic_query(oracle: ArithmeticOracle, rng, S, n: int, alpha=None) -> ExtensionQuery:
    from nilrado.graph import random_query

    return random_query(rng, oracle.ell, oracle.flavor, oracle.cap, oracle.inf_ids, S, n,
                        oracle.prec, lambda s: oracle.label(oracle.inf_ids[1], s) % 2, alpha)


def chebotarev_marginals(ell: int, n: int, alpha: int) -> dict:
    """Dirichlet densities among split places: P(f = n) and P(g = alpha | f = n)."""
    return {"f": ell**-n, "g_given_f": 1 / len(units_mod(ell, n))}
