"""Bounded-independence sign spaces and hash families.

Two sign-space constructions are provided:

* ``exact-k-wise``: a uniformly random polynomial of degree ``k - 1`` over
  GF(2^w) evaluated at the points ``0 .. m-1``; the low bit of each value is
  one output bit.  The seed is the ``k`` coefficients, ``k * w`` bits.
* ``almost-k-wise``: the coordinatewise product of an exact 4-wise space and
  a powering small-bias space (bit ``i`` is ``<a^i, b>`` for field elements
  ``a, b`` of width ``l``).  The product is exactly 4-wise independent and
  every marginal on ``<= k`` coordinates is ``delta``-close to uniform in L1.

Bits map to signs as ``x = (-1)**bit`` everywhere in the package.

Seeds are big-endian bit strings; multi-part seeds are concatenations with
the first part in the most significant position.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field as dc_field
from fractions import Fraction

import numpy as np

from .gf2 import (
    MAX_VECTOR_WIDTH,
    bits_to_ints,
    ceil_log2,
    field,
    ints_to_bits,
    is_pow2,
    parity,
)

SPEC_FORMAT = "ptfprg.spec"
SPEC_VERSION = 1


@dataclass(frozen=True)
class Seed:
    """A bit string of fixed length stored as an integer (first bit = most significant)."""

    bits: int
    length: int

    def __post_init__(self):
        if self.length < 0:
            raise ValueError("seed length must be non-negative")
        if self.bits < 0 or self.bits >> self.length:
            raise ValueError(f"seed value does not fit in {self.length} bits")

    @classmethod
    def from_string(cls, s: str) -> "Seed":
        s = s.strip()
        if s and set(s) - {"0", "1"}:
            raise ValueError("seed strings contain only 0 and 1")
        return cls(int(s, 2) if s else 0, len(s))

    @classmethod
    def random(cls, rng: np.random.Generator, length: int) -> "Seed":
        value = 0
        for chunk in rng.integers(0, 2, size=length, dtype=np.uint8):
            value = (value << 1) | int(chunk)
        return cls(value, length)

    def __str__(self) -> str:
        return format(self.bits, f"0{self.length}b") if self.length else ""

    def split(self, lengths) -> tuple["Seed", ...]:
        lengths = [int(x) for x in lengths]
        if sum(lengths) != self.length:
            raise ValueError(f"cannot split a {self.length}-bit seed into parts {lengths}")
        out = []
        shift = self.length
        for ln in lengths:
            shift -= ln
            out.append(Seed((self.bits >> shift) & ((1 << ln) - 1), ln))
        return tuple(out)

    @staticmethod
    def concat(*seeds: "Seed") -> "Seed":
        bits, length = 0, 0
        for s in seeds:
            bits = (bits << s.length) | s.bits
            length += s.length
        return Seed(bits, length)

    def to_bits(self) -> np.ndarray:
        return ints_to_bits([self.bits], self.length)[0]


def _check_seed(seed: Seed, expected: int, what: str) -> None:
    if not isinstance(seed, Seed):
        raise TypeError(f"{what} expects a Seed, got {type(seed).__name__}")
    if seed.length != expected:
        raise ValueError(f"{what} needs a {expected}-bit seed, got {seed.length} bits")


def _split_bit_matrix(bits: np.ndarray, lengths) -> list[np.ndarray]:
    out, start = [], 0
    for ln in lengths:
        out.append(bits[..., start:start + ln])
        start += ln
    return out


def _bias_width(m: int, k: int, delta: Fraction) -> int:
    # smallest l with (m - 1) / 2**l <= delta * 2**(-k/2), squared to stay rational
    need = Fraction((m - 1) ** 2 * 2 ** k) / (delta * delta)
    ell = 1
    while Fraction(4 ** ell) < need:
        ell += 1
    return ell


@dataclass(frozen=True)
class SignSpaceSpec:
    """Description of a sign space over ``{+1,-1}^m``."""

    m: int
    k: int
    delta: float
    kind: str
    field_width: int
    bias_width: int = 0
    exact_k: int = dc_field(default=0)

    def __post_init__(self):
        if self.kind not in ("exact-k-wise", "almost-k-wise"):
            raise ValueError(f"unknown sign-space kind {self.kind!r}")
        if self.m < 1 or self.k < 1:
            raise ValueError("m and k must be positive")

    @property
    def construction(self) -> str:
        if self.kind == "exact-k-wise":
            return "gf2-poly-lowbit"
        return "gf2-poly-lowbit-x-powering-bias" if self.bias_width else "gf2-poly-lowbit"

    @property
    def poly_seed_length(self) -> int:
        return self.exact_k * self.field_width

    @property
    def seed_length(self) -> int:
        return self.poly_seed_length + 2 * self.bias_width

    @property
    def bias(self) -> float:
        """Bias bound of the small-bias factor (0 when absent)."""
        if not self.bias_width:
            return 0.0
        return (self.m - 1) / 2.0 ** self.bias_width

    # ---------------------------------------------------------------- sampling
    def sample(self, seed: Seed) -> np.ndarray:
        """Reference (scalar) evaluation through field arithmetic."""
        _check_seed(seed, self.seed_length, "sign space")
        F = field(self.field_width)
        poly_seed, a_seed, b_seed = seed.split(
            [self.poly_seed_length, self.bias_width, self.bias_width])
        coeffs = [c.bits for c in poly_seed.split([self.field_width] * self.exact_k)]
        bits = [F.poly_eval(coeffs, i) & 1 for i in range(self.m)]
        if self.bias_width:
            G = field(self.bias_width)
            a, b, cur = a_seed.bits, b_seed.bits, 1
            for i in range(self.m):
                bits[i] ^= parity(cur & b)
                cur = G.mul(cur, a)
        return (1 - 2 * np.asarray(bits, dtype=np.int8)).astype(np.int8)

    def linear_map(self) -> np.ndarray:
        """``(m, poly_seed_length)`` GF(2) matrix sending polynomial seed bits to output bits."""
        return _poly_lowbit_matrix(self.m, self.exact_k, self.field_width)

    def expand_bits(self, bits: np.ndarray) -> np.ndarray:
        """Vectorised evaluation of seeds given as an ``(N, seed_length)`` bit matrix."""
        bits = np.asarray(bits, dtype=np.uint8)
        if bits.shape[-1] != self.seed_length:
            raise ValueError(f"expected {self.seed_length} seed bits, got {bits.shape[-1]}")
        lead = bits.shape[:-1]
        bits = bits.reshape(-1, self.seed_length)
        poly_bits, a_bits, b_bits = _split_bit_matrix(
            bits, [self.poly_seed_length, self.bias_width, self.bias_width])
        A = self.linear_map()
        out = (poly_bits.astype(np.int32) @ A.T.astype(np.int32)) & 1
        if self.bias_width:
            out ^= _powering_bits(a_bits, b_bits, self.m, self.bias_width)
        return (1 - 2 * out).astype(np.int8).reshape(*lead, self.m)

    def expand(self, seeds) -> np.ndarray:
        return self.expand_bits(ints_to_bits(np.asarray(seeds), self.seed_length))

    def random_bits(self, rng: np.random.Generator, size) -> np.ndarray:
        size = (size,) if np.isscalar(size) else tuple(size)
        return rng.integers(0, 2, size=size + (self.seed_length,), dtype=np.uint8)

    def all_outputs(self, cap_bits: int = 24) -> np.ndarray:
        if self.seed_length > cap_bits:
            raise ValueError(f"seed space 2^{self.seed_length} exceeds enumeration cap 2^{cap_bits}")
        return self.expand(np.arange(1 << self.seed_length, dtype=np.uint64))

    # ------------------------------------------------------------ descriptors
    def to_dict(self) -> dict:
        return {
            "format": SPEC_FORMAT,
            "version": SPEC_VERSION,
            "type": "sign-space",
            "kind": self.kind,
            "construction": self.construction,
            "m": self.m,
            "k": self.k,
            "exact_k": self.exact_k,
            "delta": self.delta,
            "field_width": self.field_width,
            "bias_width": self.bias_width,
            "seed_length": self.seed_length,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SignSpaceSpec":
        _check_descriptor(d, "sign-space")
        spec = cls(m=int(d["m"]), k=int(d["k"]), delta=float(d["delta"]), kind=d["kind"],
                   field_width=int(d["field_width"]), bias_width=int(d["bias_width"]),
                   exact_k=int(d["exact_k"]))
        if spec.seed_length != int(d["seed_length"]):
            raise ValueError("descriptor seed_length disagrees with its construction")
        return spec


def _check_descriptor(d: dict, typ: str) -> None:
    if d.get("format") != SPEC_FORMAT or d.get("type") != typ:
        raise ValueError(f"not a {typ} descriptor")
    if int(d.get("version", -1)) != SPEC_VERSION:
        raise ValueError(f"unsupported descriptor version {d.get('version')}")


_MATRIX_CACHE: dict = {}


def _poly_lowbit_matrix(m: int, k: int, w: int) -> np.ndarray:
    key = (m, k, w)
    if key not in _MATRIX_CACHE:
        F = field(w)
        A = np.zeros((m, k * w), dtype=np.uint8)
        for i in range(m):
            p = 1
            for j in range(k):
                mask = F.low_bit_mask(p)
                for r in range(w):
                    A[i, j * w + (w - 1 - r)] = (mask >> r) & 1
                p = F.mul(p, i)
        _MATRIX_CACHE[key] = A
    return _MATRIX_CACHE[key]


def _popcount_parity(x: np.ndarray) -> np.ndarray:
    return (np.bitwise_count(x) & 1).astype(np.uint8)


def _powering_bits(a_bits: np.ndarray, b_bits: np.ndarray, m: int, ell: int) -> np.ndarray:
    n = a_bits.shape[0]
    out = np.empty((n, m), dtype=np.uint8)
    if ell <= MAX_VECTOR_WIDTH:
        G = field(ell)
        a = bits_to_ints(a_bits)
        b = bits_to_ints(b_bits)
        cur = np.ones(n, dtype=np.uint64)
        for i in range(m):
            out[:, i] = _popcount_parity(cur & b)
            cur = G.mul_array(cur, a)
        return out
    G = field(ell)
    for row, (a, b) in enumerate(zip(bits_to_ints(a_bits), bits_to_ints(b_bits))):
        cur = 1
        for i in range(m):
            out[row, i] = parity(cur & b)
            cur = G.mul(cur, a)
    return out


def exact_kwise_space(m: int, k: int) -> SignSpaceSpec:
    """Exactly k-wise independent signs; ``k`` above ``m`` means full independence."""
    if m < 1 or k < 1:
        raise ValueError("m and k must be positive")
    w = max(1, ceil_log2(m))
    return SignSpaceSpec(m=m, k=k, delta=0.0, kind="exact-k-wise", field_width=w,
                         exact_k=min(k, m))


def almost_kwise_space(m: int, k: int, delta: float) -> SignSpaceSpec:
    """Exactly 4-wise and ``delta``-almost ``k``-wise independent signs.

    ``delta == 0`` or ``k <= 4`` gives the exact space, which already meets both
    requirements.
    """
    if not 0 <= delta <= 1:
        raise ValueError(f"delta must lie in [0, 1], got {delta}")
    if delta == 0:
        return exact_kwise_space(m, k)
    w = max(1, ceil_log2(m))
    k4 = min(4, m)
    ell = 0
    if min(k, m) > 4:
        ell = _bias_width(m, min(k, m), Fraction(delta))
    return SignSpaceSpec(m=m, k=k, delta=float(delta), kind="almost-k-wise", field_width=w,
                         bias_width=ell, exact_k=k4)


def kwise_sample(spec: SignSpaceSpec, seed: Seed) -> np.ndarray:
    if spec.kind != "exact-k-wise":
        raise ValueError("kwise_sample needs an exact-k-wise space")
    return spec.sample(seed)


def almost_kwise_sample(spec: SignSpaceSpec, seed: Seed) -> np.ndarray:
    return spec.sample(seed)


# ------------------------------------------------------------------ marginals
def _walsh(values: list[int]) -> list[int]:
    v = list(values)
    h = 1
    while h < len(v):
        for i in range(0, len(v), 2 * h):
            for j in range(i, i + h):
                v[j], v[j + h] = v[j] + v[j + h], v[j] - v[j + h]
        h *= 2
    return v


def _subset_xors(vectors, zero=0) -> list:
    """XOR of ``vectors[j]`` over ``j`` in S, for every subset S (bitmask order)."""
    out = [zero] * (1 << len(vectors))
    for s in range(1, len(out)):
        low = (s & -s).bit_length() - 1
        out[s] = out[s & (s - 1)] ^ vectors[low]
    return out


def marginal_counts(spec: SignSpaceSpec, coords, max_bias_width: int = 24) -> list[int]:
    """Exact seed counts for every sign pattern on ``coords``, over the full seed space.

    Pattern index ``c`` has bit ``j`` set when coordinate ``coords[j]`` is ``-1``.
    The counts sum to ``2**spec.seed_length``.  The computation uses the
    linear structure of both factors, so it is exact without enumerating
    seeds one by one.
    """
    coords = [int(c) for c in coords]
    if len(set(coords)) != len(coords) or any(not 0 <= c < spec.m for c in coords):
        raise ValueError("coordinates must be distinct and inside [0, m)")
    q = len(coords)
    A = spec.linear_map()
    rows = [int("".join(map(str, A[c])) or "0", 2) for c in coords]
    # E[chi_S] of the polynomial factor is 1 iff the XOR of its rows vanishes
    poly_zero = [1 if x == 0 else 0 for x in _subset_xors(rows)]
    poly_counts = _walsh(poly_zero)
    scale = 1 << spec.poly_seed_length
    poly_counts = [_exact_div(v * scale, 1 << q) for v in poly_counts]
    if not spec.bias_width:
        return poly_counts
    ell = spec.bias_width
    if ell > max_bias_width:
        raise ValueError(f"bias factor of width {ell} too large for exact marginals")
    G = field(ell)
    a = np.arange(1 << ell, dtype=np.uint64)
    powers = [_pow_array(G, a, c) for c in coords]
    zeros = [int(np.count_nonzero(x == 0)) for x in _subset_xors(powers, np.zeros_like(a))]
    bias_counts = [_exact_div(v << ell, 1 << q) for v in _walsh(zeros)]
    out = [0] * (1 << q)
    for c1, x in enumerate(poly_counts):
        if x:
            for c2, y in enumerate(bias_counts):
                out[c1 ^ c2] += x * y
    return out


def _pow_array(G, a: np.ndarray, e: int) -> np.ndarray:
    if G.w <= MAX_VECTOR_WIDTH:
        r = np.ones_like(a)
        base = a.copy()
        while e:
            if e & 1:
                r = G.mul_array(r, base)
            base = G.mul_array(base, base)
            e >>= 1
        return r
    return np.array([G.pow(int(x), e) for x in a], dtype=object)


def _exact_div(num: int, den: int) -> int:
    q, r = divmod(num, den)
    if r:
        raise ArithmeticError("non-integral marginal count")
    return q


def marginal_l1(spec: SignSpaceSpec, coords) -> Fraction:
    """L1 distance of the marginal on ``coords`` from uniform (exact)."""
    counts = marginal_counts(spec, coords)
    total = sum(counts)
    q = len(counts)
    return sum(abs(Fraction(c, total) - Fraction(1, q)) for c in counts)


def brute_marginal_counts(spec: SignSpaceSpec, coords, cap_bits: int = 24) -> list[int]:
    """Same as :func:`marginal_counts` by evaluating every seed."""
    out = spec.all_outputs(cap_bits)[:, list(coords)]
    idx = ((out < 0).astype(np.int64) << np.arange(len(coords))).sum(axis=1)
    return np.bincount(idx, minlength=1 << len(coords)).tolist()


# ---------------------------------------------------------------- hash families
@dataclass(frozen=True)
class HashFamilySpec:
    """Evenly distributed hash family ``[n] -> [t]``.

    ``pairwise``: ``h(j) = top_s(a * j) xor b`` over GF(2^w) with
    ``s = log2 t``; the multiplier ``a = 0`` is read as ``1``.
    ``balanced``: ``h(j) = hi(j) xor low_s(q(lo(j)))`` where ``hi``/``lo``
    are the top ``s`` and bottom ``log2(n/t)`` bits of ``j`` and ``q`` is a
    random polynomial of degree ``independence - 1``.
    """

    n: int
    t: int
    kind: str = "pairwise"
    independence: int = 2
    alpha: float = 0.0
    balance: tuple | None = None

    def __post_init__(self):
        if not (is_pow2(self.n) and is_pow2(self.t)) or self.t > self.n:
            raise ValueError(f"n and t must be powers of two with t <= n, got n={self.n}, t={self.t}")
        if self.kind not in ("pairwise", "balanced"):
            raise ValueError(f"unknown hash family kind {self.kind!r}")
        if self.independence < 2:
            raise ValueError("hash independence must be >= 2")

    @property
    def s(self) -> int:
        return ceil_log2(self.t)

    @property
    def w(self) -> int:
        return ceil_log2(self.n)

    @property
    def field_width(self) -> int:
        if self.kind == "pairwise":
            return max(1, self.w)
        return max(1, self.w - self.s, self.s)

    @property
    def construction(self) -> str:
        return "gf2-mul-top-bits" if self.kind == "pairwise" else "gf2-xor-lowpoly"

    @property
    def seed_length(self) -> int:
        if self.kind == "pairwise":
            return self.field_width + self.s
        return self.independence * self.field_width

    @property
    def size(self) -> int:
        return 1 << self.seed_length

    def table(self, seed: Seed) -> np.ndarray:
        """Bucket of every index under the member named by ``seed``."""
        _check_seed(seed, self.seed_length, "hash family")
        F = field(self.field_width)
        s, w = self.s, self.w
        if self.kind == "pairwise":
            a_seed, b_seed = seed.split([self.field_width, s])
            a = a_seed.bits or 1
            return np.array([(F.mul(a, j) >> (self.field_width - s)) ^ b_seed.bits
                             for j in range(self.n)], dtype=np.int64)
        coeffs = [c.bits for c in seed.split([self.field_width] * self.independence)]
        lo_bits = w - s
        out = []
        for j in range(self.n):
            hi, lo = j >> lo_bits, j & ((1 << lo_bits) - 1)
            out.append(hi ^ (F.poly_eval(coeffs, lo) & (self.t - 1)))
        return np.array(out, dtype=np.int64)

    def tables_from_bits(self, bits: np.ndarray) -> np.ndarray:
        """Vectorised :meth:`table` for an ``(N, seed_length)`` bit matrix; returns ``(N, n)``."""
        bits = np.asarray(bits, dtype=np.uint8).reshape(-1, self.seed_length)
        F = field(self.field_width)
        j = np.arange(self.n, dtype=np.uint64)
        s = self.s
        if self.kind == "pairwise":
            a_bits, b_bits = _split_bit_matrix(bits, [self.field_width, s])
            a = bits_to_ints(a_bits)
            a[a == 0] = 1
            b = bits_to_ints(b_bits) if s else np.zeros(len(a), dtype=np.uint64)
            u = F.mul_array(a[:, None], j[None, :])
            return ((u >> np.uint64(self.field_width - s)) ^ b[:, None]).astype(np.int64)
        lo_bits = self.w - s
        hi = j >> np.uint64(lo_bits)
        lo = j & np.uint64((1 << lo_bits) - 1)
        coeffs = [bits_to_ints(c) for c in
                  _split_bit_matrix(bits, [self.field_width] * self.independence)]
        acc = np.zeros((bits.shape[0], self.n), dtype=np.uint64)
        for c in reversed(coeffs):
            acc = F.mul_array(acc, lo[None, :]) ^ c[:, None]
        return (hi[None, :] ^ (acc & np.uint64(self.t - 1))).astype(np.int64)

    def all_tables(self, cap_bits: int = 20) -> np.ndarray:
        if self.seed_length > cap_bits:
            raise ValueError(f"family of size 2^{self.seed_length} exceeds enumeration cap 2^{cap_bits}")
        seeds = np.arange(self.size, dtype=np.uint64)
        return self.tables_from_bits(ints_to_bits(seeds, self.seed_length))

    def random_bits(self, rng: np.random.Generator, size) -> np.ndarray:
        size = (size,) if np.isscalar(size) else tuple(size)
        return rng.integers(0, 2, size=size + (self.seed_length,), dtype=np.uint8)

    def to_dict(self) -> dict:
        return {
            "format": SPEC_FORMAT,
            "version": SPEC_VERSION,
            "type": "hash-family",
            "kind": self.kind,
            "construction": self.construction,
            "n": self.n,
            "t": self.t,
            "independence": self.independence,
            "alpha": self.alpha,
            "balance": list(self.balance) if self.balance else None,
            "field_width": self.field_width,
            "seed_length": self.seed_length,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HashFamilySpec":
        _check_descriptor(d, "hash-family")
        bal = d.get("balance")
        spec = cls(n=int(d["n"]), t=int(d["t"]), kind=d["kind"],
                   independence=int(d["independence"]), alpha=float(d["alpha"]),
                   balance=tuple(bal) if bal else None)
        if spec.seed_length != int(d["seed_length"]):
            raise ValueError("descriptor seed_length disagrees with its construction")
        return spec


def pairwise_hash_family(n: int, t: int) -> HashFamilySpec:
    return HashFamilySpec(n=n, t=t, kind="pairwise", independence=2, alpha=0.0)


def balanced_hash_family(n: int, t: int, independence: int, balance=None) -> HashFamilySpec:
    return HashFamilySpec(n=n, t=t, kind="balanced", independence=max(2, int(independence)),
                          alpha=0.0, balance=tuple(balance) if balance else None)


def hash_eval(spec: HashFamilySpec, seed: Seed, j: int) -> int:
    if not 0 <= j < spec.n:
        raise IndexError(f"index {j} outside [0, {spec.n})")
    return int(spec.table(seed)[j])


def pair_collision_counts(spec: HashFamilySpec, cap_bits: int = 20) -> np.ndarray:
    """``counts[k]`` = max over pairs i != j of #members with h(i) = h(j) = k (exhaustive)."""
    tables = spec.all_tables(cap_bits)
    worst = np.zeros(spec.t, dtype=np.int64)
    for bucket in range(spec.t):
        ind = (tables == bucket).astype(np.int64)
        gram = ind.T @ ind
        np.fill_diagonal(gram, 0)
        worst[bucket] = gram.max()
    return worst


@dataclass(frozen=True)
class BalanceReport:
    tail: Fraction
    worst_set: tuple
    members: int
    exhaustive: bool


def balance_check(spec: HashFamilySpec, K: int, L: int, sets=None, n_sets: int = 64,
                  rng: np.random.Generator | None = None, member_cap_bits: int = 16,
                  n_members: int = 1 << 14) -> BalanceReport:
    """Largest observed ``Pr_h[max_j |h^{-1}(j) & S| >= L]`` over sets ``|S| <= K``.

    The family is enumerated when it has at most ``2**member_cap_bits``
    members, otherwise ``n_members`` members are sampled.  Candidate sets are
    ``sets`` when given, else contiguous, strided and random sets of size ``K``.
    """
    if not 0 < K <= spec.n:
        raise ValueError(f"K must lie in [1, n], got {K}")
    if L < 1:
        raise ValueError("L must be positive")
    rng = rng if rng is not None else np.random.default_rng(0)
    if sets is None:
        sets = [tuple(range(K))]
        stride = max(1, spec.n // K)
        sets.append(tuple(range(0, stride * K, stride)[:K]))
        sets += [tuple(sorted(rng.choice(spec.n, size=K, replace=False).tolist()))
                 for _ in range(n_sets)]
    sets = [tuple(int(i) for i in S) for S in sets]
    if any(len(S) > K for S in sets):
        raise ValueError("candidate sets must have at most K elements")
    if L > K:
        return BalanceReport(Fraction(0), sets[0] if sets else (), 0, True)
    exhaustive = spec.seed_length <= member_cap_bits
    if exhaustive:
        tables = spec.all_tables(member_cap_bits)
    else:
        tables = spec.tables_from_bits(spec.random_bits(rng, n_members))
    members = tables.shape[0]
    worst, worst_set = Fraction(0), sets[0]
    for S in sets:
        sub = tables[:, list(S)]
        loads = np.zeros((members, spec.t), dtype=np.int64)
        np.add.at(loads, (np.arange(members)[:, None], sub), 1)
        bad = int(np.count_nonzero(loads.max(axis=1) >= L))
        p = Fraction(bad, members)
        if p > worst:
            worst, worst_set = p, S
    return BalanceReport(worst, worst_set, members, exhaustive)


def kwise_counts_uniform(spec: SignSpaceSpec, k: int | None = None) -> bool:
    """True when every marginal on ``<= k`` coordinates is exactly uniform."""
    k = spec.exact_k if k is None else k
    for size in range(1, k + 1):
        for coords in itertools.combinations(range(spec.m), size):
            counts = marginal_counts(spec, coords)
            if len(set(counts)) != 1:
                return False
    return True
