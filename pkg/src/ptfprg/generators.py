"""Bucketed generators for threshold functions and the spherical-cap generator.

The main generator hashes the ``n`` coordinates into ``t`` buckets of equal
size ``m = n / t`` and fills bucket ``i`` (positions in increasing coordinate
order) with the block output ``G_0(z^i)``.  Its seed is the hash member
followed by the block seeds ``z^1 .. z^t``.  The derandomised variant
produces ``z^1 .. z^t`` with a branching-program generator, and the sphere
generator rotates a bucketed sign vector by a random-sign Hadamard matrix.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .gf2 import ceil_log2, ints_to_bits, is_pow2, next_pow2
from .robp import IdentityStretch, NisanPrg, robp_prg
from .sample_spaces import (SPEC_FORMAT, SPEC_VERSION, HashFamilySpec, Seed, SignSpaceSpec,
                            _check_seed, almost_kwise_space, balanced_hash_family,
                            exact_kwise_space, pairwise_hash_family)
from .threshold import fwht

MODES = ("regular-halfspace", "halfspace", "regular-ptf", "ptf")


def _pow2_ceil(x) -> int:
    """Smallest power of two >= ``x`` (at least 1), computed exactly for rationals."""
    x = Fraction(x)
    t = 1
    while t < x:
        t *= 2
    return t


def _log2_inv(eps: Fraction) -> float:
    return math.log2(1 / float(eps))


@dataclass(frozen=True)
class GeneratorSpec:
    mode: str
    n: int
    d: int
    eps: float
    t: int
    hash: HashFamilySpec
    block: SignSpaceSpec
    params: tuple = ()

    def __post_init__(self):
        if self.hash.t != self.t or self.hash.n != self.n_padded:
            raise ValueError("hash family shape does not match (n, t)")
        if self.block.m != self.m:
            raise ValueError(f"block dimension {self.block.m} differs from m = n/t = {self.m}")

    @property
    def n_padded(self) -> int:
        return next_pow2(self.n)

    @property
    def m(self) -> int:
        return self.n_padded // self.t

    @property
    def r0(self) -> int:
        return self.block.seed_length

    @property
    def seed_length(self) -> int:
        return self.hash.seed_length + self.t * self.block.seed_length

    def split_bits(self, bits: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Split ``(N, seed_length)`` bits into hash bits and ``(N, t, r0)`` block seeds."""
        bits = np.asarray(bits, dtype=np.uint8).reshape(-1, self.seed_length)
        hb = self.hash.seed_length
        return bits[:, :hb], bits[:, hb:].reshape(-1, self.t, self.r0)

    def assemble(self, tables: np.ndarray, blocks: np.ndarray) -> np.ndarray:
        """Place ``(N, t, m)`` block outputs into coordinates according to ``(N, n)`` bucket tables."""
        N = tables.shape[0]
        # stable sort on 16-bit keys runs as a radix sort
        keys = tables.astype(np.int16) if self.t <= 1 << 15 else tables
        order = np.argsort(keys, axis=1, kind="stable")
        x = np.empty((N, self.n_padded), dtype=np.int8)
        np.put_along_axis(x, order, blocks.reshape(N, self.n_padded), axis=1)
        return x[:, :self.n]

    def expand_bits(self, bits: np.ndarray) -> np.ndarray:
        hbits, zbits = self.split_bits(bits)
        tables = self.hash.tables_from_bits(hbits)
        blocks = self.block.expand_bits(zbits)
        return self.assemble(tables, blocks)

    def expand(self, seeds) -> np.ndarray:
        return self.expand_bits(ints_to_bits(np.asarray(seeds), self.seed_length))

    def sample(self, rng: np.random.Generator, size: int, chunk: int = 1 << 15) -> np.ndarray:
        """``size`` outputs on uniformly random seeds drawn from ``rng``."""
        out = np.empty((size, self.n), dtype=np.int8)
        for start in range(0, size, chunk):
            stop = min(size, start + chunk)
            bits = rng.integers(0, 2, size=(stop - start, self.seed_length), dtype=np.uint8)
            out[start:stop] = self.expand_bits(bits)
        return out

    def to_dict(self) -> dict:
        return {"format": SPEC_FORMAT, "version": SPEC_VERSION, "type": "generator",
                "mode": self.mode, "n": self.n, "n_padded": self.n_padded, "d": self.d,
                "eps": self.eps, "t": self.t, "m": self.m,
                "hash": self.hash.to_dict(), "block": self.block.to_dict(),
                "seed_length": self.seed_length, "params": dict(self.params)}

    @classmethod
    def from_dict(cls, d: dict) -> "GeneratorSpec":
        if d.get("format") != SPEC_FORMAT or d.get("type") != "generator":
            raise ValueError("not a generator descriptor")
        if int(d.get("version", -1)) != SPEC_VERSION:
            raise ValueError(f"unsupported descriptor version {d.get('version')}")
        spec = cls(mode=d["mode"], n=int(d["n"]), d=int(d["d"]), eps=float(d["eps"]),
                   t=int(d["t"]), hash=HashFamilySpec.from_dict(d["hash"]),
                   block=SignSpaceSpec.from_dict(d["block"]),
                   params=tuple(sorted(d.get("params", {}).items())))
        if spec.seed_length != int(d["seed_length"]):
            raise ValueError("descriptor seed_length disagrees with its parts")
        return spec


def profile_params(mode: str, n: int, d: int = 1, eps: float = 0.125, c: float = 1.0,
                   t: int | None = None) -> GeneratorSpec:
    """Instantiate the generator for ``mode`` at dimension ``n``, degree ``d`` and error ``eps``.

    Logarithms are base 2.  ``t`` may be raised above the profile value
    (never lowered); every derived count is rounded up to a power of two and
    ``t`` is capped at the padded dimension.  ``c`` scales the bucket count of
    the general PTF profile.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; choose from {', '.join(MODES)}")
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    if n < 1:
        raise ValueError("n must be positive")
    if mode in ("regular-halfspace", "halfspace"):
        d = 1
    elif d < 1:
        raise ValueError("degree must be at least 1")
    e = Fraction(eps)
    lg = _log2_inv(e)
    n_pad = next_pow2(n)
    if mode in ("regular-halfspace", "regular-ptf"):
        t_exact = 1 / (e * e)
    elif mode == "halfspace":
        t_exact = Fraction(lg) / (e * e)
    else:
        t_exact = Fraction(c) * Fraction(lg * lg) / (e * e)
    t_val = _pow2_ceil(t_exact)
    if t is not None:
        if not is_pow2(t) or t < t_val:
            raise ValueError(f"t override must be a power of two >= {t_val}")
        t_val = t
    t_val = min(t_val, n_pad)
    m = n_pad // t_val
    params = {"t_exact": float(t_exact)}
    if mode == "regular-halfspace":
        delta = float(e * e / (4 * Fraction(n) ** 5))
        hash_spec = pairwise_hash_family(n_pad, t_val)
        block = almost_kwise_space(m, 4, delta)
        params.update(block_k=4, block_delta=delta)
    elif mode == "halfspace":
        L = max(1, ceil_log2(t_val))
        K = min(n, math.ceil(lg * lg / float(e * e)))
        delta = float(e ** 3 / (t_val * Fraction(n) ** 5))
        hash_spec = balanced_hash_family(n_pad, t_val, independence=max(2, L),
                                         balance=(K, L, 1.0 / t_val ** 2))
        block = almost_kwise_space(m, L + 4, delta)
        params.update(block_k=L + 4, block_delta=delta, L=L, K=K)
    elif mode == "regular-ptf":
        hash_spec = pairwise_hash_family(n_pad, t_val)
        block = exact_kwise_space(m, 4 * d)
        params.update(block_k=4 * d)
    else:
        L = max(1, ceil_log2(t_val))
        hash_spec = balanced_hash_family(n_pad, t_val, independence=max(2, L),
                                         balance=(n, L, 1.0 / t_val ** 2))
        block = exact_kwise_space(m, t_val + 4 * d)
        params.update(block_k=t_val + 4 * d, L=L, c=c)
    return GeneratorSpec(mode=mode, n=n, d=d, eps=float(eps), t=t_val, hash=hash_spec,
                         block=block, params=tuple(sorted(params.items())))


def custom_spec(n: int, t: int, hash_spec: HashFamilySpec, block: SignSpaceSpec,
                eps: float = 0.0, mode: str = "custom") -> GeneratorSpec:
    """A generator with explicitly chosen building blocks (for small exhaustive experiments)."""
    return GeneratorSpec(mode=mode, n=n, d=1, eps=eps, t=t, hash=hash_spec, block=block)


def main_generate(spec: GeneratorSpec, seed: Seed) -> np.ndarray:
    """One output of the bucketed generator (reference path through the scalar samplers)."""
    _check_seed(seed, spec.seed_length, "generator")
    parts = seed.split([spec.hash.seed_length] + [spec.r0] * spec.t)
    table = spec.hash.table(parts[0])
    x = np.empty(spec.n_padded, dtype=np.int8)
    for i in range(spec.t):
        coords = np.flatnonzero(table == i)
        x[coords] = spec.block.sample(parts[1 + i])[:len(coords)]
    return x[:spec.n]


# ------------------------------------------------------------- derandomised
@dataclass(frozen=True)
class DerandSpec:
    base: GeneratorSpec
    robp_prg: object
    eps: float = 0.0
    delta: float | None = None

    def __post_init__(self):
        if self.robp_prg.D != self.base.r0 or self.robp_prg.T != self.base.t:
            raise ValueError("branching-program generator must emit t words of r0 bits")

    @property
    def hash(self) -> HashFamilySpec:
        return self.base.hash

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def seed_length(self) -> int:
        return self.base.hash.seed_length + self.robp_prg.seed_length

    def expand_bits(self, bits: np.ndarray) -> np.ndarray:
        bits = np.asarray(bits, dtype=np.uint8).reshape(-1, self.seed_length)
        hb = self.base.hash.seed_length
        words = self.robp_prg.expand_bits(bits[:, hb:])
        zbits = ints_to_bits(words.reshape(-1).astype(np.uint64), self.base.r0)
        zbits = zbits.reshape(bits.shape[0], self.base.t * self.base.r0)
        return self.base.expand_bits(np.concatenate([bits[:, :hb], zbits], axis=1))

    def expand(self, seeds) -> np.ndarray:
        return self.expand_bits(ints_to_bits(np.asarray(seeds), self.seed_length))

    def sample(self, rng: np.random.Generator, size: int, chunk: int = 1 << 15) -> np.ndarray:
        out = np.empty((size, self.n), dtype=np.int8)
        for start in range(0, size, chunk):
            stop = min(size, start + chunk)
            bits = rng.integers(0, 2, size=(stop - start, self.seed_length), dtype=np.uint8)
            out[start:stop] = self.expand_bits(bits)
        return out

    def to_dict(self) -> dict:
        return {"format": SPEC_FORMAT, "version": SPEC_VERSION, "type": "derandomized-generator",
                "base": self.base.to_dict(), "robp_prg": self.robp_prg.to_dict(),
                "eps": self.eps, "delta": self.delta, "seed_length": self.seed_length}


def derand_params(n: int, eps: float, delta: float | None = None,
                  block_bits: int | None = None) -> DerandSpec:
    """Halfspace-mode generator whose block seeds come from a Nisan generator.

    The branching programs to fool have width exponent ``ceil(log2(2t/eps))``,
    read ``r0`` bits per layer and have ``t`` layers.
    """
    base = profile_params("halfspace", n, 1, eps)
    s0 = ceil_log2(math.ceil(2 * base.t / eps))
    delta = eps if delta is None and block_bits is None else delta
    prg = robp_prg(S=s0, D=base.r0, T=base.t, delta=delta, block_bits=block_bits)
    return DerandSpec(base=base, robp_prg=prg, eps=eps, delta=delta)


def identity_derand(base: GeneratorSpec) -> DerandSpec:
    return DerandSpec(base=base, robp_prg=IdentityStretch(D=base.r0, T=base.t), eps=base.eps)


def derand_generate(spec: DerandSpec, seed: Seed) -> np.ndarray:
    _check_seed(seed, spec.seed_length, "derandomized generator")
    h, y = seed.split([spec.hash.seed_length, spec.robp_prg.seed_length])
    words = spec.robp_prg.generate(y)
    z = Seed.concat(*(Seed(int(wd), spec.base.r0) for wd in words))
    return main_generate(spec.base, Seed.concat(h, z))


def nisan_derand(base: GeneratorSpec, S: int, block_bits: int | None = None,
                 delta: float | None = None) -> DerandSpec:
    prg: NisanPrg = robp_prg(S=S, D=base.r0, T=base.t, delta=delta, block_bits=block_bits)
    return DerandSpec(base=base, robp_prg=prg, eps=base.eps, delta=delta)


# ------------------------------------------------------------------ spheres
def hadamard_transform(v) -> np.ndarray:
    """``H v`` for the normalised Sylvester matrix ``H`` (entries ``+-1/sqrt(n)``), along the last axis."""
    v = np.asarray(v, dtype=np.float64)
    n = v.shape[-1]
    if not is_pow2(n):
        raise ValueError(f"Hadamard transform needs a power-of-two length, got {n}")
    return fwht(v) / math.sqrt(n)


@dataclass(frozen=True)
class SphereSpec:
    n: int
    sign_space: SignSpaceSpec
    inner: GeneratorSpec

    def __post_init__(self):
        if not is_pow2(self.n):
            raise ValueError(f"sphere dimension must be a power of two, got {self.n}")
        if self.sign_space.m != self.n or self.inner.n != self.n:
            raise ValueError("sign space and inner generator must both have dimension n")

    @property
    def x_seed_length(self) -> int:
        return self.sign_space.seed_length

    @property
    def y_seed_length(self) -> int:
        return self.inner.seed_length

    @property
    def seed_length(self) -> int:
        return self.x_seed_length + self.y_seed_length

    def expand_bits(self, xbits: np.ndarray, ybits: np.ndarray) -> np.ndarray:
        x = self.sign_space.expand_bits(xbits).astype(np.int64)
        g = self.inner.expand_bits(ybits).astype(np.int64)
        # H^T g / sqrt(n) has entries (integer) / n, exactly representable
        return x * fwht(g) / self.n

    def sample(self, rng: np.random.Generator, size: int, chunk: int = 1 << 14) -> np.ndarray:
        out = np.empty((size, self.n))
        for start in range(0, size, chunk):
            stop = min(size, start + chunk)
            xb = self.sign_space.random_bits(rng, stop - start)
            yb = rng.integers(0, 2, size=(stop - start, self.y_seed_length), dtype=np.uint8)
            out[start:stop] = self.expand_bits(xb, yb)
        return out

    def to_dict(self) -> dict:
        return {"format": SPEC_FORMAT, "version": SPEC_VERSION, "type": "sphere-generator",
                "n": self.n, "sign_space": self.sign_space.to_dict(),
                "inner": self.inner.to_dict(), "seed_length": self.seed_length}


def sphere_params(n: int, eps: float) -> SphereSpec:
    if not is_pow2(n):
        raise ValueError(f"sphere dimension must be a power of two, got {n}; pad weights with pad_to_pow2")
    return SphereSpec(n=n, sign_space=exact_kwise_space(n, 8),
                      inner=profile_params("regular-halfspace", n, 1, eps))


def sphere_generate(spec: SphereSpec, x_seed: Seed, y_seed: Seed) -> np.ndarray:
    """``D(x) H^T G(y) / sqrt(n)``, a unit vector in ``R^n``."""
    _check_seed(x_seed, spec.x_seed_length, "sphere sign space")
    _check_seed(y_seed, spec.y_seed_length, "sphere inner generator")
    return spec.expand_bits(x_seed.to_bits()[None], y_seed.to_bits()[None])[0]


def pad_to_pow2(w) -> np.ndarray:
    """Zero-pad a weight vector to the next power-of-two length (cap probabilities unchanged)."""
    w = np.asarray(w, dtype=np.float64)
    out = np.zeros(next_pow2(len(w)))
    out[:len(w)] = w
    return out


def fourth_moment_tail(sign_space: SignSpaceSpec, w, gamma: float, rng: np.random.Generator,
                       samples: int = 4096) -> float:
    """Fraction of sampled ``x`` with ``sum_i v_i^4 >= gamma / n`` where ``v = H D(x) w``."""
    w = np.asarray(w, dtype=np.float64)
    n = len(w)
    x = sign_space.expand_bits(sign_space.random_bits(rng, samples)).astype(np.float64)
    v = hadamard_transform(x * w[None, :])
    return float(np.mean((v ** 4).sum(axis=1) >= gamma / n))
