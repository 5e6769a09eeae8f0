"""Halfspaces, multilinear polynomials and polynomial threshold functions.

Inputs live in ``{+1, -1}^n`` and ``sign(0) = +1`` everywhere, so a
threshold function outputs ``+1`` exactly when ``P(x) - theta >= 0``.  When
the whole cube is enumerated, input number ``i`` has ``x_j = -1`` iff bit
``n - 1 - j`` of ``i`` is set (coordinate 0 is the most significant bit).
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from itertools import combinations

import numpy as np

REL_TOL = 1e-12
DEFAULT_INPUT_CAP = int(os.environ.get("PTFPRG_INPUT_CAP", 24))


class CapExceeded(ValueError):
    """Raised when an exact computation would enumerate more than the configured cap."""


def _is_integral(x) -> bool:
    if isinstance(x, (int, np.integer)):
        return True
    if isinstance(x, Fraction):
        return x.denominator == 1
    return False


@dataclass(frozen=True)
class MultilinearPolynomial:
    """Sparse map from sorted index tuples to coefficients; ``()`` is the constant term."""

    coeffs: dict
    n: int
    d: int = dc_field(default=-1)

    def __post_init__(self):
        merged: dict = {}
        for key, c in dict(self.coeffs).items():
            idx = tuple(sorted(int(i) for i in key))
            if len(set(idx)) != len(idx):
                raise ValueError(f"monomial {key} repeats a variable; polynomials are multilinear")
            if idx and (idx[0] < 0 or idx[-1] >= self.n):
                raise ValueError(f"monomial {key} uses a variable outside [0, {self.n})")
            merged[idx] = merged.get(idx, 0) + c
        merged = {k: v for k, v in merged.items() if v != 0}
        object.__setattr__(self, "coeffs", merged)
        top = max((len(k) for k in merged), default=0)
        if self.d < 0:
            object.__setattr__(self, "d", top)
        elif top > self.d:
            raise ValueError(f"monomial of degree {top} exceeds the degree bound {self.d}")

    @classmethod
    def linear(cls, w, const=0):
        coeffs = {(i,): wi for i, wi in enumerate(w)}
        if const:
            coeffs[()] = const
        return cls(coeffs, n=len(w), d=1)

    @property
    def norm2(self) -> float:
        """Sum of squared coefficients, constant term included."""
        return sum(c * c for c in self.coeffs.values())

    @property
    def is_integral(self) -> bool:
        return all(_is_integral(c) for c in self.coeffs.values())

    def scaled(self, s) -> "MultilinearPolynomial":
        return MultilinearPolynomial({k: c * s for k, c in self.coeffs.items()}, self.n, self.d)

    def normalized(self) -> tuple["MultilinearPolynomial", float]:
        norm = math.sqrt(self.norm2)
        if norm == 0:
            raise ValueError("the zero polynomial cannot be normalised")
        return self.scaled(1.0 / norm), norm

    def evaluate(self, X) -> np.ndarray:
        """Values on the rows of a ``+1/-1`` matrix (float, or int64 for integer coefficients)."""
        X = np.asarray(X)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        if X.shape[1] != self.n:
            raise ValueError(f"expected inputs of length {self.n}")
        exact = self.is_integral
        dtype = np.int64 if exact else np.float64
        Xd = X.astype(dtype)
        out = np.zeros(X.shape[0], dtype=dtype)
        by_deg: dict[int, list] = {}
        for k, c in self.coeffs.items():
            by_deg.setdefault(len(k), []).append((k, c))
        for deg, terms in by_deg.items():
            if deg == 0:
                out += dtype(terms[0][1]) if exact else float(terms[0][1])
            elif deg == 1:
                w = np.zeros(self.n, dtype=dtype)
                for (i,), c in terms:
                    w[i] = int(c) if exact else float(c)
                out += Xd @ w
            elif deg == 2 and (not exact or sum(abs(int(c)) for _, c in terms) < 2 ** 53):
                # integer sums below 2^53 are exact in float64, so BLAS is safe either way
                Q = np.zeros((self.n, self.n))
                for (i, j), c in terms:
                    Q[i, j] = float(c)
                Xf = X.astype(np.float64)
                val = np.einsum("ij,ij->i", Xf @ Q, Xf)
                out += val.astype(np.int64) if exact else val
            else:
                for k, c in terms:
                    out += (int(c) if exact else float(c)) * np.prod(Xd[:, list(k)], axis=1)
        return out[0] if single else out

    def influence(self, i: int):
        if not 0 <= i < self.n:
            raise IndexError(f"coordinate {i} out of range for n = {self.n}")
        return sum(c * c for k, c in self.coeffs.items() if i in k)

    def influences(self) -> np.ndarray:
        tau = np.zeros(self.n)
        for k, c in self.coeffs.items():
            for i in k:
                tau[i] += float(c) ** 2
        return tau


@dataclass(frozen=True)
class Halfspace:
    w: tuple
    theta: float = 0

    def __post_init__(self):
        object.__setattr__(self, "w", tuple(self.w))

    @property
    def n(self) -> int:
        return len(self.w)

    @property
    def is_integral(self) -> bool:
        return all(_is_integral(x) for x in self.w)

    def as_ptf(self) -> "PTF":
        return PTF(MultilinearPolynomial.linear(self.w), self.theta)

    def normalized(self) -> tuple["Halfspace", float]:
        norm = math.sqrt(sum(float(x) ** 2 for x in self.w))
        if norm == 0:
            raise ValueError("zero weight vector")
        return Halfspace(tuple(float(x) / norm for x in self.w), float(self.theta) / norm), norm

    def evaluate(self, X) -> np.ndarray:
        return self.as_ptf().evaluate(X)


@dataclass(frozen=True)
class PTF:
    p: MultilinearPolynomial
    theta: float = 0

    @property
    def n(self) -> int:
        return self.p.n

    def evaluate(self, X) -> np.ndarray:
        """``sign(P(x) - theta)`` as ``+1/-1`` with ``sign(0) = +1``."""
        vals = self.p.evaluate(X)
        theta = self.theta
        if self.p.is_integral and not isinstance(theta, float):
            # integer values: P >= theta  <=>  P >= ceil(theta), exactly
            vals = vals >= math.ceil(Fraction(theta))
        else:
            vals = vals - float(theta) >= 0
        return np.where(vals, 1, -1).astype(np.int8)


def as_ptf(f) -> PTF:
    if isinstance(f, PTF):
        return f
    if isinstance(f, Halfspace):
        return f.as_ptf()
    raise TypeError(f"expected a PTF or Halfspace, got {type(f).__name__}")


def influence(p: MultilinearPolynomial, i: int):
    return p.influence(i)


def total_influence(p: MultilinearPolynomial) -> float:
    return float(p.influences().sum())


def is_regular(obj, eps) -> tuple[bool, float]:
    """Regularity test returning ``(regular, ratio)``.

    For a halfspace the ratio is ``max |w_i| / ||w||``; for a polynomial it is
    ``sqrt(sum tau_i^2) / ||P||^2``, the scale-free form of the influence
    condition.  Regular means ratio <= eps up to a relative 1e-12.
    """
    if isinstance(obj, Halfspace):
        w = np.abs(np.asarray(obj.w, dtype=float))
        norm = float(np.sqrt((w ** 2).sum()))
        if norm == 0:
            raise ValueError("zero weight vector")
        ratio = float(w.max()) / norm
    elif isinstance(obj, MultilinearPolynomial):
        norm2 = float(obj.norm2)
        if norm2 == 0:
            raise ValueError("zero polynomial")
        ratio = float(np.sqrt((obj.influences() ** 2).sum())) / norm2
    else:
        raise TypeError(f"cannot test regularity of {type(obj).__name__}")
    return ratio <= eps * (1 + REL_TOL), ratio


def critical_index(p, eps) -> tuple[int, np.ndarray]:
    """Least ``K`` with ``tau_{K+1} <= eps^2 * sum_{l > K} tau_l`` after sorting influences.

    Influences are sorted in decreasing order (ties by coordinate); returns
    ``K`` and that permutation.  ``K = n`` when no index qualifies.
    """
    if isinstance(p, Halfspace):
        p = MultilinearPolynomial.linear(p.w)
    tau = p.influences()
    if not tau.any():
        raise ValueError("critical index of a polynomial without influential coordinates")
    perm = np.argsort(-tau, kind="stable")
    s = tau[perm]
    tails = np.cumsum(s[::-1])[::-1]
    e2 = eps * eps
    for i in range(len(s)):
        if s[i] <= e2 * tails[i] * (1 + REL_TOL):
            return i, perm
    return len(s), perm


# ----------------------------------------------------------------- enumeration
def cube(n: int, start: int = 0, stop: int | None = None) -> np.ndarray:
    """Rows ``start..stop`` of the enumerated cube as an int8 ``+1/-1`` matrix."""
    stop = (1 << n) if stop is None else stop
    idx = np.arange(start, stop, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    bits = (idx[:, None] >> shifts[None, :]) & 1
    return (1 - 2 * bits).astype(np.int8)


def _check_cap(n: int, cap: int | None):
    cap = DEFAULT_INPUT_CAP if cap is None else cap
    if n > cap:
        raise CapExceeded(f"n = {n} exceeds the enumeration cap {cap}; use Monte-Carlo estimation")


def truth_table(f, cap: int | None = None, chunk: int = 1 << 16) -> np.ndarray:
    """Values of ``f`` (+1/-1, int8) on the whole cube in enumeration order."""
    f = as_ptf(f)
    _check_cap(f.n, cap)
    total = 1 << f.n
    out = np.empty(total, dtype=np.int8)
    for start in range(0, total, chunk):
        stop = min(total, start + chunk)
        out[start:stop] = f.evaluate(cube(f.n, start, stop))
    return out


def exact_bias(f, cap: int | None = None) -> Fraction:
    """``Pr[f(x) = +1]`` over uniform ``x``, as an exact fraction."""
    tt = truth_table(f, cap)
    return Fraction(int((tt > 0).sum()), len(tt))


def fwht(a: np.ndarray) -> np.ndarray:
    """Unnormalised Walsh-Hadamard transform along the last axis (length a power of two)."""
    a = np.array(a, copy=True)
    n = a.shape[-1]
    if n & (n - 1):
        raise ValueError("length must be a power of two")
    h = 1
    while h < n:
        a = a.reshape(a.shape[:-1] + (n // (2 * h), 2, h))
        x, y = a[..., 0, :].copy(), a[..., 1, :].copy()
        a[..., 0, :] = x + y
        a[..., 1, :] = x - y
        a = a.reshape(a.shape[:-3] + (n,))
        h *= 2
    return a


def chow_parameters(f, d: int, cap: int | None = None) -> dict:
    """Exact ``E[f * chi_I]`` for every ``|I| <= d``, keyed by sorted index tuples."""
    f = as_ptf(f)
    tt = truth_table(f, cap).astype(np.int64)
    spec = fwht(tt)
    n = f.n
    out = {}
    for size in range(d + 1):
        for I in combinations(range(n), size):
            mask = sum(1 << (n - 1 - i) for i in I)
            out[I] = Fraction(int(spec[mask]), 1 << n)
    return out


# ----------------------------------------------------------------- constructors
def integerize(w, theta, max_denominator: int = 10 ** 6) -> tuple[Halfspace, Fraction]:
    """Integer halfspace with the same sign pattern as rational approximations of ``(w, theta)``.

    Weights are rounded to fractions with denominator at most
    ``max_denominator`` and scaled by the lcm of the denominators; the scaled
    threshold is then replaced by its ceiling, which is exact because
    ``<w, x>`` is an integer.  Returns the halfspace and the scale factor.
    """
    fw = [Fraction(x).limit_denominator(max_denominator) for x in w]
    ft = Fraction(theta).limit_denominator(max_denominator)
    scale = 1
    for x in fw + [ft]:
        scale = scale * x.denominator // math.gcd(scale, x.denominator)
    iw = tuple(int(x * scale) for x in fw)
    return Halfspace(iw, math.ceil(ft * scale)), Fraction(scale)


def random_polynomial(n: int, d: int, rng, low: int = -10, high: int = 10,
                      density: float = 1.0) -> MultilinearPolynomial:
    """Integer coefficients uniform in ``[low, high]`` on each monomial of degree ``<= d``."""
    coeffs = {}
    for size in range(d + 1):
        for I in combinations(range(n), size):
            if density >= 1 or rng.random() < density:
                coeffs[I] = int(rng.integers(low, high + 1))
    return MultilinearPolynomial(coeffs, n=n, d=d)


def symmetric_quadratic(n: int) -> MultilinearPolynomial:
    """``sum_{i<j} x_i x_j / sqrt(C(n, 2))``, a unit-norm regular degree-2 polynomial."""
    c = 1.0 / math.sqrt(math.comb(n, 2))
    return MultilinearPolynomial({(i, j): c for i, j in combinations(range(n), 2)}, n=n, d=2)


def moments_exact(p: MultilinearPolynomial, cap: int | None = None) -> tuple[int, int, int]:
    """``(sum P^2, sum P^4, 2^n)`` over the cube for an integer polynomial."""
    if not p.is_integral:
        raise ValueError("exact moments need integer coefficients")
    _check_cap(p.n, cap)
    s2 = s4 = 0
    total = 1 << p.n
    for start in range(0, total, 1 << 16):
        v = p.evaluate(cube(p.n, start, min(total, start + (1 << 16)))).astype(object)
        sq = v * v
        s2 += int(sq.sum())
        s4 += int((sq * sq).sum())
    return s2, s4, total


# ------------------------------------------------------------------ text formats
def dumps_polynomial(p: MultilinearPolynomial) -> str:
    lines = [f"# n={p.n} d={p.d}"]
    for k in sorted(p.coeffs, key=lambda k: (len(k), k)):
        c = p.coeffs[k]
        lines.append(" ".join([_fmt(c)] + [str(i) for i in k]))
    return "\n".join(lines) + "\n"


def loads_polynomial(text: str, n: int | None = None) -> MultilinearPolynomial:
    coeffs = {}
    d = -1
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            for tok in line[1:].split():
                key, _, val = tok.partition("=")
                if key == "n" and n is None:
                    n = int(val)
                elif key == "d":
                    d = int(val)
            continue
        parts = line.split()
        try:
            c = _parse_num(parts[0])
            idx = tuple(int(x) for x in parts[1:])
        except ValueError:
            raise ValueError(f"malformed monomial line: {raw!r}") from None
        coeffs[idx] = coeffs.get(idx, 0) + c
    if n is None:
        n = 1 + max((max(k) for k in coeffs if k), default=-1)
    return MultilinearPolynomial(coeffs, n=n, d=d)


def dumps_halfspace(h: Halfspace) -> str:
    return " ".join(_fmt(x) for x in h.w) + " | " + _fmt(h.theta) + "\n"


def loads_halfspace(text: str) -> Halfspace:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if len(lines) != 1 or lines[0].count("|") != 1:
        raise ValueError("halfspace text must be a single line 'w_1 ... w_n | theta'")
    left, right = lines[0].split("|")
    try:
        return Halfspace(tuple(_parse_num(x) for x in left.split()), _parse_num(right.strip()))
    except ValueError:
        raise ValueError(f"malformed halfspace line: {lines[0]!r}") from None


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    return repr(float(x))


def _parse_num(s: str):
    if "/" in s:
        return Fraction(s)
    try:
        return int(s)
    except ValueError:
        return float(s)
