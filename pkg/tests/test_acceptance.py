"""Numbered acceptance criteria.

Each test carries an ``acceptance`` marker; the conftest prints one PASS/FAIL
line per criterion at the end of the run, with the measured quantities.
"""
import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from ptfprg import generators as gen
from ptfprg import robp, stats
from ptfprg import threshold as th
from ptfprg.gf2 import ints_to_bits
from ptfprg.sample_spaces import exact_kwise_space, pairwise_hash_family

EPS_SANDWICH = Fraction(1, 4)
THREADS = 4


def enumerate_outputs(spec):
    seeds = np.arange(1 << spec.seed_length, dtype=np.uint64)
    return spec.expand_bits(ints_to_bits(seeds, spec.seed_length))


def words_of(prg):
    return np.concatenate(list(robp.prg_words(prg)))


def frac_accept(M, Z):
    return Fraction(int(robp.evaluate_many(M, Z).sum()), len(Z))


# ----------------------------------------------------------------------- 1
@pytest.mark.acceptance(1, "exact 4-wise space m=8: every 4-marginal uniform")
def test_exact_kwise_marginals(record_property):
    spec = exact_kwise_space(8, 4)
    out = (enumerate_outputs(spec) < 0).astype(np.int64)
    total = len(out)
    for coords in itertools.combinations(range(8), 4):
        codes = out[:, list(coords)] @ np.array([1, 2, 4, 8])
        hist = np.bincount(codes, minlength=16)
        assert (hist == total // 16).all(), coords
    record_property("detail", f"{total} seeds, 70 subsets, each pattern {total // 16}")


# ----------------------------------------------------------------------- 2
@pytest.mark.acceptance(2, "pairwise hash n=64 t=8: collisions <= 1/t^2, even buckets")
def test_hash_family(record_property):
    fam = pairwise_hash_family(64, 8)
    tables = fam.all_tables()
    size = len(tables)
    assert size == 64 * 8
    loads = np.stack([np.bincount(row, minlength=8) for row in tables])
    assert (loads == 8).all()
    worst = Fraction(0)
    for k in range(8):
        ind = (tables == k).astype(np.int64)
        gram = ind.T @ ind
        np.fill_diagonal(gram, 0)
        worst = max(worst, Fraction(int(gram.max()), size))
    assert worst <= Fraction(1, 64)
    record_property("detail", f"|H|={size}, worst pair probability {worst}")


# ----------------------------------------------------------------------- 3
@pytest.mark.acceptance(3, "sandwich programs for 100 halfspaces, eps=1/4")
def test_sandwich_halfspaces(record_property):
    rng = np.random.default_rng(2024)
    worst = Fraction(0)
    for _ in range(100):
        n = int(rng.integers(1, 13))
        w = rng.integers(-8, 9, size=n).tolist()
        theta = int(rng.integers(-sum(map(abs, w)) - 1, sum(map(abs, w)) + 2))
        M, order = robp.halfspace_to_robp(w, theta)
        down, up = robp.sandwich(M, order, EPS_SANDWICH)
        Z = robp.all_words(1, n)
        vm, vd, vu = (robp.evaluate_many(P, Z) for P in (M, down, up))
        assert (vd <= vm).all() and (vm <= vu).all()
        p, pd, pu = (frac_accept(P, Z) for P in (M, down, up))
        assert (p, pd, pu) == tuple(robp.acceptance_prob(P) for P in (M, down, up))
        assert pu - pd <= EPS_SANDWICH
        assert p - pd <= EPS_SANDWICH / 2 and pu - p <= EPS_SANDWICH / 2
        worst = max(worst, pu - pd)
    record_property("detail", f"largest gap {worst} ({float(worst):.4f})")


# ----------------------------------------------------------------------- 4
@pytest.mark.acceptance(4, "monotone trick on 20 wide programs with an enumerable ROBP generator")
def test_monotone_trick(record_property):
    rng = np.random.default_rng(44)
    slack = Fraction(0)
    widest = 0
    for T, ell in ((8, 3), (16, 2)):
        prg = robp.robp_prg(S=8, D=1, T=T, block_bits=ell)
        assert prg.seed_length <= 21
        Z = words_of(prg)
        U = robp.all_words(1, T)
        for _ in range(10):
            w = rng.integers(-100, 101, size=T).tolist()
            theta = int(rng.integers(-40, 41))
            M, order = robp.halfspace_to_robp(w, theta)
            assert robp.is_monotone(M)
            widest = max(widest, max(M.widths))
            down, up = robp.sandwich(M, order, EPS_SANDWICH)
            err = {}
            for name, P in (("M", M), ("down", down), ("up", up)):
                pu = frac_accept(P, U)
                assert pu == robp.acceptance_prob(P)
                err[name] = abs(frac_accept(P, Z) - pu)
            bound = max(err["down"], err["up"]) + EPS_SANDWICH
            assert err["M"] <= bound
            slack = max(slack, err["M"] - max(err["down"], err["up"]))
    assert widest >= 64
    record_property("detail", f"widest layer {widest}, max err(M) - max sandwich err {float(slack):.4f}")


# ----------------------------------------------------------------------- 5
@pytest.mark.acceptance(5, "binomial n=16 vs normal: exact KS <= 1/4")
def test_binomial_ks(record_property):
    B = stats.binomial_sum_cdf(16)
    assert B.counts.tolist() == [math.comb(16, k) for k in range(17)]
    d = stats.ks_distance(B, stats.normal_cdf)
    # the supremum sits at an atom: check both one-sided limits by hand
    phi = stats.normal_cdf(B.values)
    cum = np.cumsum(B.counts) / 2 ** 16
    manual = max(np.abs(cum - phi).max(), np.abs(np.concatenate([[0], cum[:-1]]) - phi).max())
    assert d == pytest.approx(manual, abs=1e-15)
    assert d <= 0.25
    record_property("detail", f"KS = {d:.6f}")


# ----------------------------------------------------------------------- 6
@pytest.mark.acceptance(6, "regular halfspace n=1024 eps=1/8: MC fooling and KS")
def test_regular_halfspace_fooling(record_property):
    n, N = 1024, 10 ** 6
    spec = gen.profile_params("regular-halfspace", n, eps=0.125)
    assert spec.t == 64
    ones = np.ones(n)
    g = stats.projection_samples(spec, ones, N, seed=6, threads=THREADS).astype(np.int64)
    u = stats.uniform_projection_samples(ones, N, seed=6, threads=THREADS).astype(np.int64)
    worst_excess = -1.0
    for theta in (-32, -16, 0, 16, 32):
        ku, kg = int((u >= theta).sum()), int((g >= theta).sum())
        diff = abs(ku - kg) / N
        tol = 0.05 + stats.half_width(ku, N) + stats.half_width(kg, N)
        assert diff <= tol, (theta, diff, tol)
        worst_excess = max(worst_excess, diff - tol)
    ks = stats.ks_distance(stats.EmpiricalCDF.from_samples(g / math.sqrt(n)), stats.normal_cdf)
    assert ks <= 0.15 + stats.dkw_term(N)
    # the same statistic through the fooling harness, at theta = 0
    rep = stats.fooling_error(th.Halfspace([1] * n, 0), spec, "monte-carlo", budget=N, seed=6,
                              threads=THREADS)
    assert rep.error <= 0.05 + rep.ci_half_width
    record_property("detail", f"harness error {rep.error:.4f} (CI {rep.ci_half_width:.4f}), KS {ks:.4f}")


# ----------------------------------------------------------------------- 7
def integer_symmetric_quadratic(n):
    # same sign as sum_{i<j} x_i x_j / sqrt(C(n,2)); integer coefficients keep ties exact
    return th.MultilinearPolynomial({pair: 1 for pair in itertools.combinations(range(n), 2)}, n=n)


@pytest.mark.acceptance(7, "symmetric quadratic n=256, theta=0: MC fooling by ptf-mode generators")
def test_symmetric_quadratic_fooling(record_property):
    n, N = 256, 10 ** 6
    f = th.PTF(integer_symmetric_quadratic(n), 0)
    X = th.cube(10)
    small = th.PTF(integer_symmetric_quadratic(10), 0)
    assert (small.evaluate(X) == np.where(th.symmetric_quadratic(10).evaluate(X) >= -1e-9, 1, -1)).all()
    details = []
    for mode, eps in (("ptf", 0.5), ("regular-ptf", 0.25)):
        spec = gen.profile_params(mode, n, d=2, eps=eps)
        rep = stats.fooling_error(f, spec, "monte-carlo", budget=N, seed=7, threads=THREADS)
        assert rep.error <= 0.1 + rep.ci_half_width, (mode, rep.error)
        details.append(f"{mode}(t={spec.t}) {rep.error:.4f}")
    record_property("detail", ", ".join(details))


# ----------------------------------------------------------------------- 8
@pytest.mark.acceptance(8, "derandomized generator n=16: err(G_D) <= err(G) + PRG error + eps")
def test_derandomized_generator(record_property):
    base = gen.custom_spec(16, 4, pairwise_hash_family(16, 4), exact_kwise_space(4, 2))
    D = gen.nisan_derand(base, S=6, block_bits=4)
    assert base.seed_length == 22 and D.seed_length == 26
    prg = D.robp_prg
    Z = words_of(prg)
    tables = base.hash.all_tables()
    rng = np.random.default_rng(8)
    details = []
    for case in range(3):
        w = rng.integers(-8, 9, size=16).tolist()
        theta = int(rng.integers(-4, 5))
        h = th.Halfspace(w, theta)
        pg, pd, prg_err, direct_err = Fraction(0), Fraction(0), Fraction(0), Fraction(0)
        for table in tables:
            M, order = robp.halfspace_to_robp(w, theta, bucket_view=(table, base.block))
            p_base = robp.acceptance_prob(M)
            p_prg = frac_accept(M, Z)
            pg += p_base
            pd += p_prg
            direct_err = max(direct_err, abs(p_prg - p_base))
            down, up = robp.sandwich(M, order, EPS_SANDWICH)
            for P in (down, up):
                prg_err = max(prg_err, abs(frac_accept(P, Z) - robp.acceptance_prob(P)))
        pg /= len(tables)
        pd /= len(tables)
        pu = th.exact_bias(h)
        err_g, err_d = abs(pu - pg), abs(pu - pd)
        if case == 0:
            # tie the program decomposition to both generators by full enumeration
            rep_g = stats.fooling_error(h, base, seed_cap=26, threads=THREADS)
            rep_d = stats.fooling_error(h, D, seed_cap=26, threads=THREADS)
            assert rep_g.generator_estimate == pg and rep_d.generator_estimate == pd
        assert err_d <= err_g + direct_err
        assert err_d <= err_g + prg_err + EPS_SANDWICH
        details.append(f"{float(err_d):.4f}<={float(err_g):.4f}+{float(prg_err):.4f}+1/4")
    record_property("detail", "; ".join(details))


# ----------------------------------------------------------------------- 9
@pytest.mark.acceptance(9, "degree-2 polynomials n=12: E[Q^4] <= 81 E[Q^2]^2")
def test_hypercontractivity(record_property):
    rng = np.random.default_rng(9)
    X = th.cube(12)
    worst = Fraction(0)
    for _ in range(50):
        p = th.random_polynomial(12, 2, rng)
        s2, s4, N = th.moments_exact(p)
        v = [int(x) for x in p.evaluate(X)]
        assert (s2, s4, N) == (sum(x * x for x in v), sum(x ** 4 for x in v), 4096)
        assert N * s4 <= 81 * s2 * s2
        worst = max(worst, Fraction(N * s4, s2 * s2))
    record_property("detail", f"largest E[Q^4]/E[Q^2]^2 = {float(worst):.3f}")


# ---------------------------------------------------------------------- 10
@pytest.mark.acceptance(10, "bias oracles: known values and program acceptance equals enumeration")
def test_bias_oracles(record_property):
    p = th.MultilinearPolynomial({(0, 1): 1, (2,): 1}, n=3)
    assert th.exact_bias(th.PTF(p, 0.5)) == Fraction(1, 4)
    chow = th.chow_parameters(th.Halfspace([1, 1, 1]), 1)
    assert [chow[(i,)] for i in range(3)] == [Fraction(1, 2)] * 3
    rng = np.random.default_rng(10)
    for _ in range(50):
        n = int(rng.integers(1, 13))
        w = rng.integers(-8, 9, size=n).tolist()
        theta = int(rng.integers(-10, 11))
        M, _ = robp.halfspace_to_robp(w, theta)
        assert robp.acceptance_prob(M) == th.exact_bias(th.Halfspace(w, theta))
    record_property("detail", "50 random instances equal")


# ---------------------------------------------------------------------- 11
def true_sphere_cap(w, theta, N, seed):
    rng = np.random.default_rng(seed)
    hits = 0
    for start in range(0, N, 1 << 15):
        g = rng.standard_normal((min(N, start + (1 << 15)) - start, len(w)))
        hits += int(((g @ w) / np.linalg.norm(g, axis=1) >= theta).sum())
    return hits


@pytest.mark.acceptance(11, "spherical caps n=256: unit norm, fourth-moment tail, cap probability")
def test_spherical_caps(record_property):
    n, theta = 256, 0.05
    spec = gen.sphere_params(n, 0.125)
    rng = np.random.default_rng(11)
    # (a)
    V = spec.sample(rng, 20000)
    assert ((V * V).sum(axis=1) == 1.0).all()
    # (b)
    worst_tail = 0.0
    for _ in range(100):
        w = rng.standard_normal(n)
        w /= np.linalg.norm(w)
        tail = gen.fourth_moment_tail(spec.sign_space, w, 16.0, rng)
        assert tail <= 0.25
        worst_tail = max(worst_tail, tail)
    # (c) the sphere is rotation invariant, so one oracle serves every direction
    N, Ng = 10 ** 6, 200000
    e1 = np.zeros(n)
    e1[0] = 1.0
    k_true = true_sphere_cap(e1, theta, N, seed=111)
    sparse = np.zeros(n)
    sparse[:16] = 0.25
    dense = rng.standard_normal(n)
    directions = [e1, np.full(n, 1 / 16), sparse, dense / np.linalg.norm(dense)]
    worst = 0.0
    for k, w in enumerate(directions):
        vals = spec.sample(np.random.default_rng([11, k]), Ng) @ w
        kg = int((vals >= theta).sum())
        diff = abs(kg / Ng - k_true / N)
        assert diff <= 0.1 + stats.half_width(k_true, N) + stats.half_width(kg, Ng)
        worst = max(worst, diff)
    record_property("detail", f"oracle cap {k_true / N:.4f}, worst diff {worst:.4f}, worst tail {worst_tail:.3f}")


# ---------------------------------------------------------------------- 12
@pytest.mark.acceptance(12, "seed-length accounting for every mode and the ROBP generator")
def test_seed_accounting(record_property):
    checked = 0
    for mode in gen.MODES:
        for n in (16, 100, 1024):
            for eps in (0.5, 0.25, 0.125):
                spec = gen.profile_params(mode, n, d=2 if "ptf" in mode else 1, eps=eps)
                assert spec.seed_length == spec.hash.seed_length + spec.t * spec.block.seed_length
                bits = np.zeros((1, spec.seed_length), dtype=np.uint8)
                assert spec.expand_bits(bits).shape == (1, n)
                checked += 1
    for S, D, T, delta in ((2, 1, 8, 0.25), (5, 3, 16, 0.1), (7, 12, 64, 0.125), (1, 1, 1, 0.5)):
        prg = robp.robp_prg(S, D, T, delta)
        ell = D + S + math.ceil(math.log2(T / delta))
        assert prg.block_bits == ell
        assert prg.seed_length == ell * (1 + 2 * math.ceil(math.log2(T)))
        checked += 1
    record_property("detail", f"{checked} configurations")


# ---------------------------------------------------------------------- 13
@pytest.mark.acceptance(13, "equidistribution n=64 t=16: family average of bucket fourth powers")
def test_equidistribution(record_property):
    fam = pairwise_hash_family(64, 16)
    w = [Fraction(1, 8)] * 64
    avg = stats.bucket_fourth_moment(fam, w)
    tables = fam.all_tables()
    oracle = Fraction(0)
    for row in tables:
        for b in range(16):
            oracle += sum(w[j] ** 2 for j in np.flatnonzero(row == b)) ** 2
    oracle /= len(tables)
    assert avg == oracle
    eps = Fraction(1, 8)
    bound = eps ** 2 + Fraction(1, 16)
    assert avg <= bound
    record_property("detail", f"average {avg} <= {bound}")
