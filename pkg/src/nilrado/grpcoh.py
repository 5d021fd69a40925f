"""Second cohomology of finite abelian l-groups with coefficients Z/l^c, by brute force."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

DEFAULT_BOUND = 81


class CohomologyError(ValueError):
    pass


class NoSolution(CohomologyError):
    """The block cocycle is not of the expected shape (axiom C3 fails)."""


class MultipleSolutions(CohomologyError):
    """The label pair is not determined by the block."""


class BoundExceeded(CohomologyError):
    pass


# linear algebra over Z/l^e


def _val_first(sub: np.ndarray, ell: int, e: int):
    for k in range(e):
        mask = sub % ell ** (k + 1) != 0
        if mask.any():
            flat = int(np.argmax(mask))
            return k, divmod(flat, sub.shape[1])
    return None, None


@dataclass
class Diagonalized:
    """P A Q = diag(ell^v_i u_i) with the row operations also applied to b."""

    ell: int
    e: int
    vals: list
    units: list
    b: np.ndarray | None
    Q: np.ndarray
    ncols: int

    @property
    def rank(self) -> int:
        return len(self.vals)

    def kernel_order_log(self) -> int:
        """log_ell of the number of solutions of A x = 0."""
        return sum(self.vals) + self.e * (self.ncols - self.rank)

    def kernel_generators(self) -> np.ndarray:
        mod = self.ell**self.e
        cols = []
        for i, v in enumerate(self.vals):
            if v:
                cols.append(self.Q[:, i] * self.ell ** (self.e - v) % mod)
        for i in range(self.rank, self.ncols):
            cols.append(self.Q[:, i] % mod)
        if not cols:
            return np.zeros((self.ncols, 0), dtype=np.int64)
        return np.stack(cols, axis=1)


def diagonalize(A, ell: int, e: int, b=None) -> Diagonalized:
    mod = ell**e
    if mod >= 3_000_000_000:
        raise ValueError("modulus too large for int64 elimination")
    A = np.array(A, dtype=np.int64) % mod
    m, n = A.shape
    Q = np.eye(n, dtype=np.int64)
    bb = None if b is None else np.array(b, dtype=np.int64) % mod
    vals, units = [], []
    r = 0
    while r < min(m, n):
        v, pos = _val_first(A[r:, r:], ell, e)
        if v is None:
            break
        i, j = pos[0] + r, pos[1] + r
        if i != r:
            A[[r, i]] = A[[i, r]]
            if bb is not None:
                bb[[r, i]] = bb[[i, r]]
        if j != r:
            A[:, [r, j]] = A[:, [j, r]]
            Q[:, [r, j]] = Q[:, [j, r]]
        pv = ell**v
        u = int(A[r, r]) // pv
        uinv = pow(u, -1, mod)
        col = A[r + 1 :, r]
        nz = np.nonzero(col)[0]
        if len(nz):
            fac = (col[nz] // pv) * uinv % mod
            rows = nz + r + 1
            A[rows] = (A[rows] - np.outer(fac, A[r])) % mod
            if bb is not None:
                bb[rows] = (bb[rows] - fac * bb[r]) % mod
        row = A[r, r + 1 :]
        nz = np.nonzero(row)[0]
        if len(nz):
            fac = (row[nz] // pv) * uinv % mod
            cols = nz + r + 1
            A[:, cols] = (A[:, cols] - np.outer(A[:, r], fac)) % mod
            Q[:, cols] = (Q[:, cols] - np.outer(Q[:, r], fac)) % mod
        vals.append(v)
        units.append(u)
        r += 1
    return Diagonalized(ell, e, vals, units, bb, Q, n)


def solve_mod(A, b, ell: int, e: int):
    """One solution x of A x = b over Z/ell^e, or None.  Also returns the diagonalization."""
    mod = ell**e
    D = diagonalize(A, ell, e, b)
    y = np.zeros(D.ncols, dtype=np.int64)
    bb = D.b
    for i, (v, u) in enumerate(zip(D.vals, D.units)):
        if bb[i] % ell**v:
            return None, D
        y[i] = (int(bb[i]) // ell**v) * pow(u, -1, mod) % mod
    if (bb[D.rank :] % mod).any():
        return None, D
    x = D.Q @ y % mod if D.ncols else y
    return x, D


# groups and cocycles


@dataclass(frozen=True)
class FinAbGroup:
    """Z/ell^a_1 x ... x Z/ell^a_k, elements in mixed radix (first coordinate slowest)."""

    ell: int
    exps: tuple

    def __post_init__(self):
        if any(a < 1 for a in self.exps):
            raise ValueError("cyclic factors must be nontrivial")

    @property
    def orders(self) -> tuple:
        return tuple(self.ell**a for a in self.exps)

    @property
    def order(self) -> int:
        return int(np.prod(self.orders)) if self.exps else 1

    @cached_property
    def elements(self) -> np.ndarray:
        if not self.exps:
            return np.zeros((1, 0), dtype=np.int64)
        grids = np.meshgrid(*[np.arange(o) for o in self.orders], indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1).astype(np.int64)

    def index_of(self, coords) -> np.ndarray:
        coords = np.asarray(coords, dtype=np.int64)
        idx = np.zeros(coords.shape[:-1], dtype=np.int64)
        for k, o in enumerate(self.orders):
            idx = idx * o + coords[..., k] % o
        return idx

    @cached_property
    def add_table(self) -> np.ndarray:
        el = self.elements
        return self.index_of(el[:, None, :] + el[None, :, :])

    @cached_property
    def neg(self) -> np.ndarray:
        return self.index_of(-self.elements)

    def generator(self, i) -> int:
        c = np.zeros(len(self.exps), dtype=np.int64)
        c[i] = 1
        return int(self.index_of(c))


@dataclass(frozen=True, eq=False)
class Cocycle2:
    group: FinAbGroup
    coeff_exp: int
    table: np.ndarray

    @property
    def modulus(self) -> int:
        return self.group.ell**self.coeff_exp

    @property
    def normalized(self) -> bool:
        return not self.table[0].any() and not self.table[:, 0].any()

    def __add__(self, other: Cocycle2) -> Cocycle2:
        _same(self, other)
        return Cocycle2(self.group, self.coeff_exp, (self.table + other.table) % self.modulus)

    def __sub__(self, other: Cocycle2) -> Cocycle2:
        _same(self, other)
        return Cocycle2(self.group, self.coeff_exp, (self.table - other.table) % self.modulus)

    def scaled(self, k: int) -> Cocycle2:
        return Cocycle2(self.group, self.coeff_exp, self.table * (k % self.modulus) % self.modulus)

    def cocycle_defect(self) -> np.ndarray:
        t, add = self.table, self.group.add_table
        N = self.group.order
        a, b, c = np.meshgrid(np.arange(N), np.arange(N), np.arange(N), indexing="ij")
        return (t[b, c] - t[add[a, b], c] + t[a, add[b, c]] - t[a, b]) % self.modulus

    def is_cocycle(self) -> bool:
        return not self.cocycle_defect().any()

    def antisymmetrization(self) -> np.ndarray:
        return (self.table - self.table.T) % self.modulus


def _same(a: Cocycle2, b: Cocycle2):
    if a.group != b.group or a.coeff_exp != b.coeff_exp:
        raise ValueError("cocycles on different groups or coefficients")


def character_values(group: FinAbGroup, images, c: int) -> np.ndarray:
    """Values on all elements of the character sending generator i to images[i] mod ell^c."""
    mod = group.ell**c
    images = np.asarray(images, dtype=np.int64) % mod
    for a, x in zip(group.exps, images):
        if group.ell**a * int(x) % mod:
            raise ValueError("images do not define a character")
    return group.elements @ images % mod


def cup_cocycle(chi1, chi2, group: FinAbGroup, c: int) -> Cocycle2:
    """(a, b) -> chi1(a) chi2(b); characters given by generator images mod ell^c."""
    x1 = character_values(group, chi1, c)
    x2 = character_values(group, chi2, c)
    return Cocycle2(group, c, np.outer(x1, x2) % group.ell**c)


def carry_table(ell: int, f: int, g: int, m: int | None = None) -> np.ndarray:
    """g^-1 * carry(a, b) on Z/ell^f, values mod ell^m (m defaults to f, m <= f)."""
    m = f if m is None else m
    n = ell**f
    a = np.arange(n)
    carry = ((a[:, None] + a[None, :]) >= n).astype(np.int64)
    return carry * pow(g, -1, ell**m) % ell**m


def _lift_power(table: np.ndarray, n: int, mod: int, k: int) -> tuple:
    """k-th power of the lift (0, 1) in the extension defined by table on Z/n."""
    kern, base = 0, 0
    for _ in range(k):
        kern = (kern + table[base, 1]) % mod
        base = (base + 1) % n
    return kern, base


def carry_cocycle(f: int, g_unit: int, ell: int) -> Cocycle2:
    if g_unit % ell == 0:
        raise ValueError(f"{g_unit} is not a unit mod {ell}")
    g_unit %= ell**f
    t = carry_table(ell, f, g_unit)
    # lifting 1 and multiplying it by ell^f * g must give 1 in the kernel
    if _lift_power(t, ell**f, ell**f, ell**f * g_unit) != (1, 0):
        raise AssertionError("carry normalization failed")
    return Cocycle2(FinAbGroup(ell, (f,)), f, t)


def coboundary(phi, group: FinAbGroup, c: int) -> Cocycle2:
    phi = np.asarray(phi, dtype=np.int64)
    add = group.add_table
    return Cocycle2(group, c, (phi[:, None] + phi[None, :] - phi[add]) % group.ell**c)


def _coboundary_matrix(group: FinAbGroup) -> np.ndarray:
    """Matrix of phi -> d(phi) with rows indexed by pairs (a, b) flattened."""
    N = group.order
    add = group.add_table
    M = np.zeros((N * N, N), dtype=np.int64)
    rows = np.arange(N * N)
    a = rows // N
    b = rows % N
    np.add.at(M, (rows, a), 1)
    np.add.at(M, (rows, b), 1)
    np.add.at(M, (rows, add[a, b]), -1)
    return M


def is_coboundary(theta: Cocycle2):
    if not theta.is_cocycle():
        raise CohomologyError("input violates the cocycle identity")
    M = _coboundary_matrix(theta.group)
    x, _ = solve_mod(M, theta.table.ravel(), theta.group.ell, theta.coeff_exp)
    return x


def class_order(theta: Cocycle2) -> int:
    k = 1
    mod = theta.modulus
    while k <= mod:
        if is_coboundary(theta.scaled(k)) is not None:
            return k
        k += 1
    raise AssertionError("class order exceeds coefficient modulus")


# complete class invariants: ell^a_i-th powers of lifts and the commutator pairing


def class_invariants(theta: Cocycle2) -> dict:
    """Invariants determining the class of theta in H^2.

    "power", i: sum over k < ell^a_i of theta(k e_i, e_i), mod ell^min(a_i, c);
    "comm", (i, j): theta(e_i, e_j) - theta(e_j, e_i), mod ell^min(a_i, a_j, c).
    """
    G, c, ell = theta.group, theta.coeff_exp, theta.group.ell
    t = (theta.table - theta.table[0, 0]) % theta.modulus
    out = {}
    for i, a in enumerate(G.exps):
        e = G.generator(i)
        cur, s = 0, 0
        for _ in range(ell**a):
            s += int(t[cur, e])
            cur = int(G.add_table[cur, e])
        out[("power", i)] = s % ell ** min(a, c)
    for i, j in itertools.combinations(range(len(G.exps)), 2):
        ei, ej = G.generator(i), G.generator(j)
        m = ell ** min(G.exps[i], G.exps[j], c)
        out[("comm", i, j)] = int(t[ei, ej] - t[ej, ei]) % m
    return out


def bilinear_invariants(B, exps, ell: int, c: int) -> dict:
    """class_invariants of (a, b) -> sum B[i, j] a_i b_j, in closed form."""
    B = np.asarray(B, dtype=object)
    out = {}
    for i, a in enumerate(exps):
        n = ell**a
        out[("power", i)] = int(B[i, i]) * (n * (n - 1) // 2) % ell ** min(a, c)
    for i, j in itertools.combinations(range(len(exps)), 2):
        out[("comm", i, j)] = int(B[i, j] - B[j, i]) % ell ** min(exps[i], exps[j], c)
    return out


# census


def _ext_log(exps, c):
    return sum(min(a, c) for a in exps)


def _wedge_log(exps, c):
    return sum(min(a, b, c) for a, b in itertools.combinations(exps, 2))


@dataclass(frozen=True)
class Census:
    Z2: int
    B2: int
    H2: int
    Ext: int
    Hom_wedge: int
    method: str

    def as_tuple(self):
        return (self.Z2, self.B2, self.H2, self.Ext, self.Hom_wedge)


EXHAUSTIVE_LIMIT = 1 << 20


def h2_census(group: FinAbGroup, coeff_exp: int, bound: int = DEFAULT_BOUND,
              method: str = "auto") -> Census:
    N, ell, c = group.order, group.ell, coeff_exp
    if N > bound:
        raise BoundExceeded(f"group order {N} exceeds bound {bound}")
    B = ell**c
    if method == "auto":
        method = "exhaustive" if B ** (N * N) <= EXHAUSTIVE_LIMIT else "linear"
    if method == "exhaustive":
        if B ** (N * N) > EXHAUSTIVE_LIMIT:
            raise BoundExceeded("cochain space too large to enumerate")
        z2 = _count_cocycles(group, c)
        b2 = _count_coboundaries(group, c)
    elif method == "linear":
        if N**5 > 5_000_000:
            raise BoundExceeded("coboundary matrices too large")
        z2 = ell ** diagonalize(_delta2_matrix(group), ell, c).kernel_order_log()
        ker1 = diagonalize(_coboundary_matrix(group), ell, c).kernel_order_log()
        b2 = ell ** (c * N - ker1)
    else:
        raise ValueError(method)
    ext = ell ** _ext_log(group.exps, c)
    hom = ell ** _wedge_log(group.exps, c)
    return Census(z2, b2, z2 // b2, ext, hom, method)


def _digits(T: int, base: int, width: int) -> np.ndarray:
    x = np.arange(T, dtype=np.int64)
    out = np.empty((T, width), dtype=np.int64)
    for k in range(width - 1, -1, -1):
        out[:, k] = x % base
        x //= base
    return out


def _count_cocycles(group, c) -> int:
    N, B = group.order, group.ell**c
    add = group.add_table
    tables = _digits(B ** (N * N), B, N * N)
    a, b, cc = np.meshgrid(np.arange(N), np.arange(N), np.arange(N), indexing="ij")
    a, b, cc = a.ravel(), b.ravel(), cc.ravel()
    ok = np.ones(len(tables), dtype=bool)
    for x, y, z in zip(a, b, cc):
        d = (tables[:, y * N + z] - tables[:, add[x, y] * N + z]
             + tables[:, x * N + add[y, z]] - tables[:, x * N + y]) % B
        ok &= d == 0
    return int(ok.sum())


def _count_coboundaries(group, c) -> int:
    N, B = group.order, group.ell**c
    phis = _digits(B**N, B, N)
    add = group.add_table
    d = (phis[:, :, None] + phis[:, None, :] - phis[:, add]) % B
    return len(np.unique(d.reshape(len(phis), -1), axis=0))


def _delta2_matrix(group) -> np.ndarray:
    N = group.order
    add = group.add_table
    M = np.zeros((N**3, N * N), dtype=np.int64)
    r = np.arange(N**3)
    a, b, c = r // (N * N), (r // N) % N, r % N
    np.add.at(M, (r, b * N + c), 1)
    np.add.at(M, (r, add[a, b] * N + c), -1)
    np.add.at(M, (r, a * N + add[b, c]), 1)
    np.add.at(M, (r, a * N + b), -1)
    return M


# label extraction from a two-vertex block


@dataclass
class LabelBlock:
    """Central extension of Z/ell^pv x Z/ell^pw by Z/ell^m, given by a section cocycle.

    gv / gw are the generator units of finite vertices, None for infinite ones.
    cocycle(a, b) takes pairs (a_v, a_w) and returns the kernel coordinate of s(a) s(b) s(a+b)^-1.
    """

    ell: int
    pv: int
    pw: int
    m: int
    gv: int | None
    gw: int | None
    cocycle: Callable

    @property
    def group(self) -> FinAbGroup:
        return FinAbGroup(self.ell, (self.pv, self.pw))

    def table(self) -> np.ndarray:
        el = self.group.elements
        N = len(el)
        t = np.zeros((N, N), dtype=np.int64)
        for i in range(N):
            for j in range(N):
                t[i, j] = self.cocycle(tuple(el[i]), tuple(el[j])) % self.ell**self.m
        return t


def extract_label_pair(block: LabelBlock, method: str = "invariants") -> tuple:
    """(lambda(v, w), lambda(w, v)) for a block with class cup + lambda(w,v) th_v + lambda(v,w) th_w."""
    if method == "invariants":
        return _extract_invariants(block)
    if method == "cochains":
        return _extract_cochains(block)
    raise ValueError(method)


def _extract_invariants(bl: LabelBlock) -> tuple:
    ell, m = bl.ell, bl.m
    c = bl.cocycle
    comm = (c((1, 0), (0, 1)) - c((0, 1), (1, 0))) % ell ** min(bl.pv, bl.pw, m)
    if comm != 1 % ell ** min(bl.pv, bl.pw, m):
        raise NoSolution(f"commutator pairing is {comm}, not 1")
    coef = []
    for p, g, unit in ((bl.pv, bl.gv, (1, 0)), (bl.pw, bl.gw, (0, 1))):
        s, cur = 0, (0, 0)
        for _ in range(ell**p):
            s += c(cur, unit)
            cur = ((cur[0] + unit[0]) % ell**bl.pv, (cur[1] + unit[1]) % ell**bl.pw)
        mod = ell ** min(p, m)
        s %= mod
        if g is None:
            if s:
                raise NoSolution("infinite vertex carries a nonzero power invariant")
            coef.append(0)
            continue
        if mod < ell**m:
            raise MultipleSolutions("label determined only modulo a smaller power")
        coef.append(g * s % ell**m)
    x, y = coef  # x multiplies th_v: lambda(w, v); y multiplies th_w: lambda(v, w)
    return y, x


def _extract_cochains(bl: LabelBlock) -> tuple:
    ell, m = bl.ell, bl.m
    mod = ell**m
    G = bl.group
    el = G.elements
    N = len(el)
    table = bl.table()
    cup = np.outer(el[:, 0], el[:, 1]) % mod
    rhs = (table - cup).ravel() % mod
    unknowns = []
    cols = []
    for g, k, p in ((bl.gv, 0, bl.pv), (bl.gw, 1, bl.pw)):
        if g is None:
            continue
        a = el[:, k]
        carry = ((a[:, None] + a[None, :]) >= ell**p).astype(np.int64)
        cols.append((carry * pow(g, -1, mod) % mod).ravel())
        unknowns.append(k)
    M = _coboundary_matrix(G)
    if cols:
        M = np.concatenate([np.stack(cols, axis=1), M], axis=1)
    x, D = solve_mod(M, rhs, ell, m)
    if x is None:
        raise NoSolution("no label pair reproduces the block class")
    K = D.kernel_generators()
    nlab = len(unknowns)
    if nlab and (K[:nlab] % mod).any():
        raise MultipleSolutions("label pair not unique")
    vals = {k: int(x[i]) for i, k in enumerate(unknowns)}
    lam_wv = vals.get(0, 0)
    lam_vw = vals.get(1, 0)
    return lam_vw, lam_wv
