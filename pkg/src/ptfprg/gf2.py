"""Arithmetic in binary extension fields GF(2^w) and bit-string helpers.

Field elements are non-negative integers whose bits are polynomial
coefficients over GF(2).  The modulus for each width is the
lexicographically smallest low-weight irreducible polynomial, found once by
search and cached, so every construction built on top of it is reproducible
bit for bit.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

# vectorised multiplication keeps the carry-less product inside uint64
MAX_VECTOR_WIDTH = 32
# widths up to this use log / antilog tables for vectorised products
MAX_LOG_WIDTH = 20


def _clmul(a: int, b: int) -> int:
    r = 0
    while b:
        if b & 1:
            r ^= a
        a <<= 1
        b >>= 1
    return r


def _polymod(a: int, m: int) -> int:
    dm = m.bit_length() - 1
    while a.bit_length() - 1 >= dm:
        a ^= m << (a.bit_length() - 1 - dm)
    return a


def _polygcd(a: int, b: int) -> int:
    while b:
        a, b = b, _polymod(a, b)
    return a


def is_irreducible(poly: int) -> bool:
    """Ben-Or irreducibility test for a polynomial over GF(2)."""
    deg = poly.bit_length() - 1
    if deg < 1:
        return False
    if deg == 1:
        return True
    if not poly & 1:
        return False
    x = 0b10
    power = x
    for _ in range(deg // 2):
        power = _polymod(_clmul(power, power), poly)
        if _polygcd(poly, power ^ x) != 1:
            return False
    return True


@lru_cache(maxsize=None)
def irreducible_poly(w: int) -> int:
    """Smallest irreducible trinomial of degree ``w``, else smallest pentanomial."""
    if w < 1:
        raise ValueError(f"field width must be >= 1, got {w}")
    if w == 1:
        return 0b11
    top = 1 << w
    for a in range(1, w):
        p = top | (1 << a) | 1
        if is_irreducible(p):
            return p
    for a in range(1, w):
        for b in range(a + 1, w):
            for c in range(b + 1, w):
                p = top | (1 << c) | (1 << b) | (1 << a) | 1
                if is_irreducible(p):
                    return p
    raise RuntimeError(f"no irreducible polynomial of weight <= 5 for w={w}")


class GF2m:
    """The field GF(2^w)."""

    def __init__(self, w: int):
        self.w = int(w)
        self.modulus = irreducible_poly(self.w)
        self.order = 1 << self.w
        self._table = None
        self._logs = None

    def __repr__(self) -> str:
        return f"GF2m(w={self.w}, modulus={self.modulus:#x})"

    def __eq__(self, other) -> bool:
        return isinstance(other, GF2m) and other.w == self.w

    def __hash__(self) -> int:
        return hash(("GF2m", self.w))

    def mul(self, a: int, b: int) -> int:
        return _polymod(_clmul(a, b), self.modulus)

    def pow(self, a: int, e: int) -> int:
        r = 1
        while e:
            if e & 1:
                r = self.mul(r, a)
            a = self.mul(a, a)
            e >>= 1
        return r

    def poly_eval(self, coeffs, x: int) -> int:
        """Evaluate sum(coeffs[j] * x**j) by Horner's rule."""
        acc = 0
        for c in reversed(coeffs):
            acc = self.mul(acc, x) ^ c
        return acc

    def mul_array(self, a, b) -> np.ndarray:
        """Elementwise product of broadcastable uint64 arrays."""
        if self.w > MAX_VECTOR_WIDTH:
            raise ValueError(f"vectorised arithmetic needs w <= {MAX_VECTOR_WIDTH}, got {self.w}")
        a = np.asarray(a, dtype=np.uint64)
        b = np.asarray(b, dtype=np.uint64)
        if self.w <= 8:
            return self._mul_table()[a.astype(np.intp), b.astype(np.intp)]
        if self.w <= MAX_LOG_WIDTH:
            log, exp = self._log_tables()
            ai, bi = a.astype(np.intp), b.astype(np.intp)
            out = exp[log[ai] + log[bi]]
            return np.where((ai == 0) | (bi == 0), np.uint64(0), out)
        a, b = np.broadcast_arrays(a, b)
        acc = np.zeros(a.shape, dtype=np.uint64)
        one = np.uint64(1)
        for i in range(self.w):
            bit = (b >> np.uint64(i)) & one
            acc ^= (a << np.uint64(i)) * bit
        return self._reduce(acc)

    def _reduce(self, acc: np.ndarray) -> np.ndarray:
        w = self.w
        mod = np.uint64(self.modulus)
        one = np.uint64(1)
        for d in range(2 * w - 2, w - 1, -1):
            hit = (acc >> np.uint64(d)) & one
            acc ^= (mod << np.uint64(d - w)) * hit
        return acc

    def _mul_table(self) -> np.ndarray:
        if self._table is None:
            q = self.order
            a = np.arange(q, dtype=np.uint64)
            acc = np.zeros((q, q), dtype=np.uint64)
            one = np.uint64(1)
            for i in range(self.w):
                bit = (a[None, :] >> np.uint64(i)) & one
                acc ^= (a[:, None] << np.uint64(i)) * bit
            self._table = self._reduce(acc)
        return self._table

    def primitive_element(self) -> int:
        """Smallest generator of the multiplicative group."""
        q1 = self.order - 1
        primes, r, p = [], q1, 2
        while p * p <= r:
            if r % p == 0:
                primes.append(p)
                while r % p == 0:
                    r //= p
            p += 1
        if r > 1:
            primes.append(r)
        for g in range(2, self.order):
            if all(self.pow(g, q1 // p) != 1 for p in primes):
                return g
        return 1

    def _log_tables(self) -> tuple[np.ndarray, np.ndarray]:
        if self._logs is None:
            q1 = self.order - 1
            g = self.primitive_element()
            exp = np.empty(2 * q1, dtype=np.uint64)
            log = np.zeros(self.order, dtype=np.intp)
            x = 1
            for i in range(q1):
                exp[i] = x
                log[x] = i
                x = self.mul(x, g)
            exp[q1:] = exp[:q1]
            self._logs = (log, exp)
        return self._logs

    def low_bit_mask(self, beta: int) -> int:
        """Mask ``M`` with ``lowbit(c * beta) == parity(c & M)`` for every ``c``."""
        mask = 0
        for r in range(self.w):
            mask |= (self.mul(1 << r, beta) & 1) << r
        return mask


@lru_cache(maxsize=None)
def field(w: int) -> GF2m:
    return GF2m(w)


def ceil_log2(x: int) -> int:
    """Smallest ``e >= 0`` with ``2**e >= x``."""
    if x <= 1:
        return 0
    return (int(x) - 1).bit_length()


def next_pow2(x: int) -> int:
    return 1 << ceil_log2(x)


def is_pow2(x: int) -> bool:
    return x >= 1 and (x & (x - 1)) == 0


def parity(x: int) -> int:
    return bin(x).count("1") & 1


def ints_to_bits(values, length: int) -> np.ndarray:
    """Unpack integers into an ``(N, length)`` uint8 matrix, most significant bit first.

    ``values`` may be Python ints of any size or an integer array.
    """
    if isinstance(values, np.ndarray) and values.dtype != object and length <= 63:
        v = values.astype(np.uint64).reshape(-1)
        shifts = np.arange(length - 1, -1, -1, dtype=np.uint64)
        return ((v[:, None] >> shifts[None, :]) & np.uint64(1)).astype(np.uint8)
    vals = [int(v) for v in np.asarray(values, dtype=object).reshape(-1)]
    out = np.zeros((len(vals), length), dtype=np.uint8)
    for row, v in enumerate(vals):
        if v < 0 or v >> length:
            raise ValueError(f"value {v} does not fit in {length} bits")
        s = format(v, f"0{length}b") if length else ""
        out[row] = np.frombuffer(s.encode(), dtype=np.uint8) - ord("0")
    return out


def bits_to_ints(bits: np.ndarray):
    """Inverse of :func:`ints_to_bits`; returns uint64 for <= 63 columns, else a list of ints."""
    bits = np.asarray(bits, dtype=np.uint8)
    length = bits.shape[-1]
    if length <= 63:
        weights = np.uint64(1) << np.arange(length - 1, -1, -1, dtype=np.uint64)
        return (bits.astype(np.uint64) * weights).sum(axis=-1, dtype=np.uint64)
    flat = bits.reshape(-1, length)
    return [int("".join(map(str, row)) or "0", 2) for row in flat]
