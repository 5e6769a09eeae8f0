"""Measurement harness: CDF distances, normal approximation bounds and fooling errors.

Fooling errors compare ``Pr[f(x) = +1]`` under uniform inputs with the same
probability under a generator's output.  The exact method enumerates both
sides; the Monte-Carlo method draws from a harness PRNG that is seeded
explicitly and never shared with the generator under test.  Work is split
into fixed chunks, each with its own derived PRNG stream, so results do not
depend on the number of threads.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field as dc_field
from fractions import Fraction

import numpy as np
from scipy import special
from scipy.stats import beta as beta_dist

from .gf2 import ints_to_bits
from .threshold import CapExceeded, as_ptf, cube

DEFAULT_SEED_CAP = int(os.environ.get("PTFPRG_SEED_CAP", 24))
DEFAULT_INPUT_CAP = int(os.environ.get("PTFPRG_INPUT_CAP", 24))
CONFIDENCE = 0.99
CHUNK = 1 << 15


# ------------------------------------------------------------------------ CDFs
@dataclass(frozen=True)
class EmpiricalCDF:
    """Distribution on finitely many points: sorted distinct values with integer multiplicities."""

    values: np.ndarray
    counts: np.ndarray
    total: int

    @classmethod
    def from_samples(cls, samples) -> "EmpiricalCDF":
        samples = np.asarray(samples, dtype=np.float64).reshape(-1)
        if samples.size == 0:
            raise ValueError("empirical CDF of an empty sample")
        values, counts = np.unique(samples, return_counts=True)
        return cls(values, counts.astype(np.int64), int(samples.size))

    @classmethod
    def from_counts(cls, values, counts) -> "EmpiricalCDF":
        values = np.asarray(values, dtype=np.float64)
        counts = np.asarray(counts, dtype=np.int64)
        if values.size == 0 or counts.sum() == 0:
            raise ValueError("empirical CDF with no mass")
        order = np.argsort(values, kind="stable")
        values, counts = values[order], counts[order]
        uniq, inv = np.unique(values, return_inverse=True)
        merged = np.zeros(len(uniq), dtype=np.int64)
        np.add.at(merged, inv, counts)
        return cls(uniq, merged, int(merged.sum()))

    def cdf(self, x) -> np.ndarray:
        """``Pr[X <= x]``."""
        cum = np.concatenate([[0], np.cumsum(self.counts)])
        idx = np.searchsorted(self.values, np.asarray(x, dtype=np.float64), side="right")
        return cum[idx] / self.total

    def cdf_left(self, x) -> np.ndarray:
        """``Pr[X < x]``."""
        cum = np.concatenate([[0], np.cumsum(self.counts)])
        idx = np.searchsorted(self.values, np.asarray(x, dtype=np.float64), side="left")
        return cum[idx] / self.total

    def mixture(self, other: "EmpiricalCDF", lam: Fraction) -> "EmpiricalCDF":
        """``lam * self + (1 - lam) * other`` built by pooling scaled multiplicities."""
        lam = Fraction(lam)
        if not 0 <= lam <= 1:
            raise ValueError("mixture weight must lie in [0, 1]")
        scale_self = lam.numerator * other.total
        scale_other = (lam.denominator - lam.numerator) * self.total
        biggest = max(scale_self * int(self.counts.max()), scale_other * int(other.counts.max()))
        if biggest * (len(self.counts) + len(other.counts)) >= 1 << 62:
            raise ValueError("mixture multiplicities overflow 64-bit counts; use a coarser weight")
        values = np.concatenate([self.values, other.values])
        counts = np.concatenate([self.counts * scale_self, other.counts * scale_other])
        return EmpiricalCDF.from_counts(values, counts)


def normal_cdf(x):
    """Standard normal CDF (scipy's ``ndtr``, accurate to a few ulps)."""
    out = special.ndtr(np.asarray(x, dtype=np.float64))
    return float(out) if np.ndim(out) == 0 else out


def ks_distance(P, Q) -> float:
    """``sup_x |F_P(x) - F_Q(x)|``.

    Each argument is an :class:`EmpiricalCDF` or a continuous CDF given as a
    callable.  The supremum is evaluated at every jump point using both the
    left and the right limit of each step function.
    """
    emp = [isinstance(X, EmpiricalCDF) for X in (P, Q)]
    if not any(emp):
        raise TypeError("at least one argument must be an empirical CDF")
    if all(emp):
        xs = np.union1d(P.values, Q.values)
        right = np.abs(P.cdf(xs) - Q.cdf(xs))
        left = np.abs(P.cdf_left(xs) - Q.cdf_left(xs))
        return float(max(right.max(), left.max()))
    E, G = (P, Q) if emp[0] else (Q, P)
    g = np.asarray(G(E.values), dtype=np.float64)
    return float(max(np.abs(E.cdf(E.values) - g).max(), np.abs(E.cdf_left(E.values) - g).max()))


def dkw_term(n_samples: int, beta: float = 0.01) -> float:
    """Dvoretzky-Kiefer-Wolfowitz deviation ``sqrt(ln(2/beta) / 2N)``."""
    return math.sqrt(math.log(2 / beta) / (2 * n_samples))


def signed_sum_cdf(w, cap: int | None = None) -> EmpiricalCDF:
    """Exact distribution of ``<w, x>`` for uniform ``x`` by enumerating the cube."""
    w = np.asarray(w, dtype=np.float64)
    cap = DEFAULT_INPUT_CAP if cap is None else cap
    if len(w) > cap:
        raise CapExceeded(f"n = {len(w)} exceeds the enumeration cap {cap}")
    sums = cube(len(w)).astype(np.float64) @ w
    return EmpiricalCDF.from_samples(sums)


def binomial_sum_cdf(n: int) -> EmpiricalCDF:
    """Exact distribution of ``sum_i x_i / sqrt(n)`` from binomial counts."""
    k = np.arange(n + 1)
    counts = np.array([math.comb(n, int(j)) for j in k], dtype=np.int64)
    return EmpiricalCDF.from_counts((n - 2 * k) / math.sqrt(n), counts)


# -------------------------------------------------------------- Berry-Esseen
@dataclass(frozen=True)
class BerryEsseen:
    variance: float
    third: float | None
    fourth: float | None


def berry_esseen_bound(second_moments, fourth_moments=None, third_moments=None) -> BerryEsseen:
    """Normal-approximation bounds for a sum of independent centred terms.

    ``third = sum E|Y_i|^3 / sigma^3`` and ``fourth = sqrt(sum E Y_i^4) / sigma^2``
    with ``sigma^2 = sum E Y_i^2``; a bound is None when its moments are not given.
    """
    var = float(np.sum(second_moments))
    if var <= 0:
        raise ValueError("total variance must be positive")
    third = None if third_moments is None else float(np.sum(third_moments)) / var ** 1.5
    fourth = None if fourth_moments is None else math.sqrt(float(np.sum(fourth_moments))) / var
    return BerryEsseen(var, third, fourth)


def weighted_sign_moments(w) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Second, fourth and third absolute moments of the terms ``w_i x_i`` (argument order of :func:`berry_esseen_bound`)."""
    a = np.abs(np.asarray(w, dtype=np.float64))
    return a ** 2, a ** 4, a ** 3


# ------------------------------------------------------------ binomial CIs
def clopper_pearson(k: int, n: int, level: float = CONFIDENCE) -> tuple[float, float]:
    a = 1 - level
    lo = 0.0 if k == 0 else float(beta_dist.ppf(a / 2, k, n - k + 1))
    hi = 1.0 if k == n else float(beta_dist.ppf(1 - a / 2, k + 1, n - k))
    return lo, hi


def half_width(k: int, n: int, level: float = CONFIDENCE) -> float:
    lo, hi = clopper_pearson(k, n, level)
    p = k / n
    return max(p - lo, hi - p)


# ---------------------------------------------------------------- fooling
@dataclass
class FoolingReport:
    function_id: str
    generator_id: str
    eps_target: float | None
    method: str
    uniform_estimate: object
    generator_estimate: object
    error: object
    uniform_samples: int
    generator_samples: int
    ci_half_width: float = 0.0
    uniform_ci: tuple | None = None
    generator_ci: tuple | None = None
    harness_seed: int | None = None
    confidence: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def _run_chunks(work, n_chunks: int, threads: int) -> int:
    if threads <= 1 or n_chunks <= 1:
        return sum(work(c) for c in range(n_chunks))
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return sum(pool.map(work, range(n_chunks)))


def _positive(f, X) -> int:
    return int(np.count_nonzero(np.asarray(f.evaluate(X)) > 0))


def _output_dim(gen) -> int:
    return gen.n


def fooling_error(f, gen, method: str = "exact", budget: int = 10 ** 6, seed: int = 0,
                  input_cap: int | None = None, seed_cap: int | None = None, threads: int = 1,
                  function_id: str = "f", generator_id: str | None = None,
                  eps_target: float | None = None) -> FoolingReport:
    """Measure ``|Pr_uniform[f = +1] - Pr_generator[f = +1]|``.

    ``f`` is anything with ``n`` and ``evaluate`` (PTFs and halfspaces
    qualify); ``gen`` has ``n``, ``seed_length`` and ``expand_bits``.
    """
    if not hasattr(f, "evaluate"):
        f = as_ptf(f)
    n = f.n
    if _output_dim(gen) != n:
        raise ValueError(f"generator emits {_output_dim(gen)} coordinates, function reads {n}")
    generator_id = generator_id or getattr(gen, "mode", type(gen).__name__)
    if method == "exact":
        input_cap = DEFAULT_INPUT_CAP if input_cap is None else input_cap
        seed_cap = DEFAULT_SEED_CAP if seed_cap is None else seed_cap
        problems = []
        if n > input_cap:
            problems.append(f"input space 2^{n} exceeds input cap 2^{input_cap}")
        if gen.seed_length > seed_cap:
            problems.append(f"seed space 2^{gen.seed_length} exceeds seed cap 2^{seed_cap}")
        if problems:
            need = (1 << n) + (1 << gen.seed_length)
            raise CapExceeded("; ".join(problems)
                              + f"; exact mode would need {need} evaluations, use Monte-Carlo")
        total_in, total_seed = 1 << n, 1 << gen.seed_length

        def uni(c):
            start = c * CHUNK
            return _positive(f, cube(n, start, min(total_in, start + CHUNK)))

        def gen_work(c):
            start = c * CHUNK
            seeds = np.arange(start, min(total_seed, start + CHUNK), dtype=np.uint64)
            return _positive(f, gen.expand_bits(ints_to_bits(seeds, gen.seed_length)))

        u = _run_chunks(uni, -(-total_in // CHUNK), threads)
        g = _run_chunks(gen_work, -(-total_seed // CHUNK), threads)
        pu, pg = Fraction(u, total_in), Fraction(g, total_seed)
        return FoolingReport(function_id, generator_id, eps_target, "exact", pu, pg, abs(pu - pg),
                             total_in, total_seed)
    if method != "monte-carlo":
        raise ValueError(f"unknown method {method!r}")
    if budget < 1:
        raise ValueError("budget must be positive")
    n_chunks = -(-budget // CHUNK)

    def size(c):
        return min(budget, (c + 1) * CHUNK) - c * CHUNK

    def uni_mc(c):
        rng = np.random.default_rng([seed, 0, c])
        X = (1 - 2 * rng.integers(0, 2, size=(size(c), n), dtype=np.int8)).astype(np.int8)
        return _positive(f, X)

    def gen_mc(c):
        rng = np.random.default_rng([seed, 1, c])
        bits = rng.integers(0, 2, size=(size(c), gen.seed_length), dtype=np.uint8)
        return _positive(f, gen.expand_bits(bits))

    u = _run_chunks(uni_mc, n_chunks, threads)
    g = _run_chunks(gen_mc, n_chunks, threads)
    ci_u, ci_g = clopper_pearson(u, budget), clopper_pearson(g, budget)
    hw = half_width(u, budget) + half_width(g, budget)
    pu, pg = u / budget, g / budget
    return FoolingReport(function_id, generator_id, eps_target, "monte-carlo", pu, pg,
                         abs(pu - pg), budget, budget, hw, ci_u, ci_g, seed, CONFIDENCE)


def projection_samples(gen, w, size: int, seed: int = 0, threads: int = 1) -> np.ndarray:
    """Values ``<w, x>`` for ``size`` generator outputs (harness PRNG ``seed``)."""
    w = np.asarray(w, dtype=np.float64)
    n_chunks = -(-size // CHUNK)
    out = np.empty(size)

    def work(c):
        rng = np.random.default_rng([seed, 2, c])
        stop = min(size, (c + 1) * CHUNK)
        bits = rng.integers(0, 2, size=(stop - c * CHUNK, gen.seed_length), dtype=np.uint8)
        out[c * CHUNK:stop] = gen.expand_bits(bits).astype(np.float64) @ w
        return 0

    _run_chunks(work, n_chunks, threads)
    return out


def uniform_projection_samples(w, size: int, seed: int = 0, threads: int = 1) -> np.ndarray:
    """Values ``<w, x>`` for ``size`` uniform sign vectors (harness PRNG ``seed``)."""
    w = np.asarray(w, dtype=np.float64)
    n_chunks = -(-size // CHUNK)
    out = np.empty(size)

    def work(c):
        rng = np.random.default_rng([seed, 3, c])
        stop = min(size, (c + 1) * CHUNK)
        X = 1 - 2 * rng.integers(0, 2, size=(stop - c * CHUNK, len(w)), dtype=np.int8)
        out[c * CHUNK:stop] = X.astype(np.float64) @ w
        return 0

    _run_chunks(work, n_chunks, threads)
    return out


# ------------------------------------------------------------ lemma checks
@dataclass
class LemmaCheck:
    name: str
    description: str
    quantity: object
    bound: object
    passed: bool
    exact: bool
    details: dict = dc_field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def bucket_fourth_moment(hash_spec, w, cap_bits: int = 20):
    """Family average of ``sum_i ||w restricted to bucket i||^4`` (exact when ``w^2`` is rational)."""
    tables = hash_spec.all_tables(cap_bits)
    exact = all(isinstance(x, (int, Fraction)) for x in w)
    if not exact:
        w2 = np.asarray(w, dtype=np.float64) ** 2
        loads = np.zeros((tables.shape[0], hash_spec.t))
        np.add.at(loads, (np.arange(tables.shape[0])[:, None], tables), w2[None, :])
        return float((loads ** 2).sum(axis=1).mean())
    w2 = [Fraction(x) ** 2 for x in w]
    den = 1
    for x in w2:
        den = den * x.denominator // math.gcd(den, x.denominator)
    ints = np.array([int(x * den) for x in w2], dtype=object)
    total = 0
    for row in tables:
        loads = [0] * hash_spec.t
        for j, b in enumerate(row):
            loads[b] += ints[j]
        total += sum(v * v for v in loads)
    return Fraction(total, den * den * tables.shape[0])


def bucket_influence_spread(hash_spec, p, cap_bits: int = 20) -> float:
    """Family average of ``sum_i tau(h, i)^2`` where ``tau(h, i)`` is the weight of monomials meeting bucket ``i``."""
    tables = hash_spec.all_tables(cap_bits)
    keys = [k for k in p.coeffs if k]
    sq = np.array([float(p.coeffs[k]) ** 2 for k in keys])
    total = 0.0
    for row in tables:
        tau = np.zeros(hash_spec.t)
        for k, c in zip(keys, sq):
            for b in set(int(row[i]) for i in k):
                tau[b] += c
        total += float((tau ** 2).sum())
    return total / tables.shape[0]


def _check_equidistribution() -> list[LemmaCheck]:
    from .sample_spaces import pairwise_hash_family
    out = []
    eps = Fraction(1, 8)
    n, t = 64, 16
    h = pairwise_hash_family(n, t)
    w = [Fraction(1, 8)] * n
    q = bucket_fourth_moment(h, w)
    bound = (1 + Fraction(h.alpha)) * eps * eps + (1 + Fraction(h.alpha)) / t
    out.append(LemmaCheck("bucket_equidistribution",
                          "family average of bucket fourth powers, uniform unit w, n=64, t=16, eps=1/8",
                          q, bound, q <= bound, True, {"n": n, "t": t, "eps": str(eps)}))
    rng = np.random.default_rng(7)
    w = rng.normal(size=n)
    w /= np.linalg.norm(w)
    e = float(np.abs(w).max())
    q = bucket_fourth_moment(h, w)
    bound = e * e + 1 / t
    out.append(LemmaCheck("bucket_equidistribution_gaussian_w",
                          "same bound for a random unit w at its own regularity eps = max|w_i|",
                          q, bound, q <= bound * (1 + 1e-12), False, {"eps": e}))
    return out


def _check_influence_spread() -> list[LemmaCheck]:
    from .sample_spaces import pairwise_hash_family
    from .threshold import random_polynomial
    rng = np.random.default_rng(11)
    h = pairwise_hash_family(16, 4)
    worst = -math.inf
    records = []
    for _ in range(5):
        p, _ = random_polynomial(16, 2, rng, density=0.3).normalized()
        tau = p.influences()
        lhs = bucket_influence_spread(h, p)
        rhs = (1 + h.alpha) * float((tau ** 2).sum()) + (1 + h.alpha) * p.d ** 2 / h.t
        records.append((lhs, rhs))
        worst = max(worst, lhs - rhs)
    lhs, rhs = max(records, key=lambda r: r[0] - r[1])
    return [LemmaCheck("bucket_influence_spread",
                       "family average of squared bucket influences vs (1+a) sum tau^2 + (1+a) d^2/t, n=16, t=4, d=2",
                       lhs, rhs, worst <= 1e-12, False, {"instances": len(records)})]


def _check_polynomial_moments() -> list[LemmaCheck]:
    from .threshold import moments_exact, random_polynomial
    rng = np.random.default_rng(3)
    worst_ratio = Fraction(0)
    ok_hc = ok_ti = True
    worst_ti = Fraction(0)
    for _ in range(20):
        d = int(rng.integers(1, 4))
        p = random_polynomial(10, d, rng, density=0.5)
        if not p.coeffs:
            continue
        s2, s4, N = moments_exact(p)
        # E[Q^4] <= 9^d E[Q^2]^2  <=>  N * s4 <= 9^d * s2^2
        ok_hc &= N * s4 <= 9 ** d * s2 * s2
        if s2:
            worst_ratio = max(worst_ratio, Fraction(N * s4, 9 ** d * s2 * s2))
        total = sum(len(k) * c * c for k, c in p.coeffs.items())
        ok_ti &= total <= d * p.norm2
        worst_ti = max(worst_ti, Fraction(total, d * p.norm2))
    return [LemmaCheck("hypercontractivity", "E[Q^4] / (9^d E[Q^2]^2), worst of 20 integer polynomials, n=10",
                       worst_ratio, Fraction(1), bool(ok_hc), True),
            LemmaCheck("total_influence", "sum_j tau_j / (d ||P||^2), worst of 20 integer polynomials",
                       worst_ti, Fraction(1), bool(ok_ti), True)]


def _check_sandwich() -> list[LemmaCheck]:
    from . import robp
    rng = np.random.default_rng(5)
    eps = Fraction(1, 4)
    sound = True
    worst_up = worst_down = worst_gap = Fraction(0)
    for _ in range(20):
        n = int(rng.integers(4, 11))
        w = rng.integers(-8, 9, size=n)
        theta = int(rng.integers(-4, 5))
        M, order = robp.halfspace_to_robp(w, theta)
        down, up = robp.sandwich(M, order, eps)
        Z = robp.all_words(1, n)
        a, b, c = (robp.evaluate_many(x, Z) for x in (down, M, up))
        sound &= bool(np.all(a <= b) and np.all(b <= c))
        p, pd, pu = (robp.acceptance_prob(x) for x in (M, down, up))
        worst_up, worst_down = max(worst_up, pu - p), max(worst_down, p - pd)
        worst_gap = max(worst_gap, pu - pd)
    return [LemmaCheck("sandwich_containment", "M_down <= M <= M_up on every input, 20 halfspace programs",
                       int(sound), 1, sound, True),
            LemmaCheck("sandwich_upper_gap", "max Pr[M_up] - Pr[M] at eps=1/4", worst_up, eps / 2,
                       worst_up <= eps / 2, True),
            LemmaCheck("sandwich_lower_gap", "max Pr[M] - Pr[M_down] at eps=1/4", worst_down, eps / 2,
                       worst_down <= eps / 2, True),
            LemmaCheck("sandwich_gap", "max Pr[M_up] - Pr[M_down] at eps=1/4", worst_gap, eps,
                       worst_gap <= eps, True)]


def _check_berry_esseen() -> list[LemmaCheck]:
    n = 16
    d = ks_distance(binomial_sum_cdf(n), normal_cdf)
    bound = berry_esseen_bound(*weighted_sign_moments([1 / math.sqrt(n)] * n)[:2]).fourth
    return [LemmaCheck("berry_esseen_uniform", "exact KS of sum x_i/sqrt(16) against the normal CDF",
                       d, bound, d <= bound, True)]


def _check_fourth_moment_tail() -> list[LemmaCheck]:
    from .generators import fourth_moment_tail
    from .sample_spaces import exact_kwise_space
    n, gamma, declared = 64, 16.0, 0.25
    rng = np.random.default_rng(13)
    space = exact_kwise_space(n, 8)
    worst = 0.0
    for _ in range(10):
        w = rng.normal(size=n)
        w /= np.linalg.norm(w)
        worst = max(worst, fourth_moment_tail(space, w, gamma, rng, samples=2048))
    return [LemmaCheck("fourth_moment_tail",
                       "Pr[sum v_i^4 >= gamma/n] for v = H D(x) w, 8-wise x, n=64, gamma=16 (declared bound)",
                       worst, declared, worst <= declared, False, {"gamma": gamma})]


SUITES = {
    "quick": (_check_equidistribution, _check_polynomial_moments, _check_berry_esseen),
    "lemmas": (_check_equidistribution, _check_influence_spread, _check_polynomial_moments,
               _check_sandwich, _check_berry_esseen, _check_fourth_moment_tail),
}


def lemma_checks(suite: str = "lemmas") -> list[LemmaCheck]:
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
    out = []
    for check in SUITES[suite]:
        out.extend(check())
    return out

