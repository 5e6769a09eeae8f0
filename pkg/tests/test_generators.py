import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ptfprg import generators as gen
from ptfprg.gf2 import ints_to_bits
from ptfprg.robp import IdentityStretch
from ptfprg.sample_spaces import Seed, exact_kwise_space, pairwise_hash_family


def small_generator():
    # n = 16, two buckets of 8, pairwise blocks: 5 hash bits + 2 * 6 block bits
    return gen.custom_spec(16, 2, pairwise_hash_family(16, 2), exact_kwise_space(8, 2))


def enumerate_outputs(spec):
    seeds = np.arange(1 << spec.seed_length, dtype=np.uint64)
    return spec.expand_bits(ints_to_bits(seeds, spec.seed_length))


def pow2_at_least(x):
    k = 0
    while 2 ** k < x:
        k += 1
    return 2 ** k


# ------------------------------------------------------------- profiles
@pytest.mark.parametrize("n,eps", [(1024, 0.125), (100, 0.25), (64, 0.5), (8, 0.125)])
def test_regular_halfspace_profile(n, eps):
    spec = gen.profile_params("regular-halfspace", n, eps=eps)
    npad = pow2_at_least(n)
    t = min(npad, pow2_at_least(1 / Fraction(eps) ** 2))
    assert spec.t == t and spec.m == npad // t
    assert spec.hash.kind == "pairwise"
    assert spec.block.exact_k == min(4, spec.m)
    assert spec.seed_length == spec.hash.seed_length + t * spec.block.seed_length


def test_halfspace_profile():
    spec = gen.profile_params("halfspace", 1024, eps=0.125)
    t = pow2_at_least(Fraction(3) * 64)
    assert spec.t == t == 256
    L = 8
    params = dict(spec.params)
    assert params["L"] == L and params["K"] == 9 * 64
    assert spec.hash.independence == L
    assert spec.block.k == L + 4
    assert params["block_delta"] == pytest.approx(0.125 ** 3 / (256 * 1024 ** 5), rel=1e-12)


def test_ptf_profiles():
    spec = gen.profile_params("regular-ptf", 256, d=2, eps=0.25)
    assert spec.t == 16 and spec.block.k == 8 and spec.block.kind == "exact-k-wise"
    spec = gen.profile_params("ptf", 256, d=2, eps=0.5)
    assert spec.t == 4 and spec.block.k == 4 + 8
    # c = 3 gives 3 / (1/4) = 12 buckets before rounding
    spec = gen.profile_params("ptf", 256, d=2, eps=0.5, c=3.0)
    assert spec.t == 16 and spec.block.k == 16 + 8


def test_profile_validation():
    with pytest.raises(ValueError):
        gen.profile_params("bogus", 16)
    with pytest.raises(ValueError):
        gen.profile_params("regular-halfspace", 16, eps=1.5)
    with pytest.raises(ValueError):
        gen.profile_params("regular-halfspace", 1024, eps=0.125, t=32)
    assert gen.profile_params("regular-halfspace", 1024, eps=0.125, t=128).t == 128


def test_single_bucket_is_the_block_space():
    spec = gen.custom_spec(4, 1, pairwise_hash_family(4, 1), exact_kwise_space(4, 4))
    assert spec.t == 1 and spec.hash.seed_length == 2
    rng = np.random.default_rng(0)
    bits = rng.integers(0, 2, size=(20, spec.seed_length), dtype=np.uint8)
    hb = spec.hash.seed_length
    assert (spec.expand_bits(bits) == spec.block.expand_bits(bits[:, hb:])[:, :4]).all()


# --------------------------------------------------------- distribution
def test_coordinates_and_pairs_have_zero_mean():
    out = enumerate_outputs(small_generator()).astype(np.int64)
    assert (out.sum(axis=0) == 0).all()
    C = out.T @ out
    assert (C[~np.eye(16, dtype=bool)] == 0).all()


def test_buckets_are_independent_given_the_hash():
    spec = small_generator()
    rng = np.random.default_rng(1)
    zs = np.arange(1 << (spec.seed_length - spec.hash.seed_length), dtype=np.uint64)
    zbits = ints_to_bits(zs, spec.seed_length - spec.hash.seed_length)
    for h in rng.integers(0, 1 << spec.hash.seed_length, size=4):
        hbits = np.repeat(ints_to_bits(np.array([h], dtype=np.uint64), spec.hash.seed_length), len(zs), 0)
        out = spec.expand_bits(np.concatenate([hbits, zbits], axis=1)).astype(np.int64)
        table = spec.hash.table(Seed(int(h), spec.hash.seed_length))
        i = int(np.flatnonzero(table == 0)[0])
        js = np.flatnonzero(table == 1)[:3]
        for pattern in itertools.product((1, -1), repeat=4):
            hit = np.all(out[:, [i, *js]] == pattern, axis=1).sum()
            assert hit == len(out) // 16


@pytest.mark.parametrize("mode,n,d,eps", [("regular-halfspace", 64, 1, 0.25), ("halfspace", 64, 1, 0.25),
                                         ("regular-ptf", 32, 2, 0.5), ("ptf", 32, 2, 0.5),
                                         ("regular-halfspace", 20, 1, 0.5)])
def test_vector_path_matches_scalar_reference(mode, n, d, eps):
    spec = gen.profile_params(mode, n, d=d, eps=eps)
    rng = np.random.default_rng(2)
    bits = rng.integers(0, 2, size=(8, spec.seed_length), dtype=np.uint8)
    fast = spec.expand_bits(bits)
    for row, b in zip(fast, bits):
        seed = Seed(int("".join(map(str, b)), 2), spec.seed_length)
        assert (gen.main_generate(spec, seed) == row).all()


def test_bucket_contents_follow_coordinate_order():
    spec = small_generator()
    seed = Seed(0b10110_011010_100111, spec.seed_length)
    h, z1, z2 = seed.split([5, 6, 6])
    x = gen.main_generate(spec, seed)
    table = spec.hash.table(h)
    assert (x[table == 0] == spec.block.sample(z1)).all()
    assert (x[table == 1] == spec.block.sample(z2)).all()


def test_sampling_is_deterministic_in_the_rng():
    spec = gen.profile_params("regular-halfspace", 256, eps=0.25)
    a = spec.sample(np.random.default_rng(5), 100, chunk=7)
    b = spec.sample(np.random.default_rng(5), 100)
    assert (a == b).all()


def test_descriptor_round_trip():
    for mode in gen.MODES:
        spec = gen.profile_params(mode, 128, d=2, eps=0.25)
        assert gen.GeneratorSpec.from_dict(spec.to_dict()) == spec
    d = gen.profile_params("ptf", 128, d=2, eps=0.25).to_dict()
    d["seed_length"] += 1
    with pytest.raises(ValueError):
        gen.GeneratorSpec.from_dict(d)


# ------------------------------------------------------------ derandomized
def test_identity_stretch_reproduces_the_base_generator():
    base = gen.profile_params("halfspace", 64, eps=0.25)
    D = gen.identity_derand(base)
    assert D.seed_length == base.seed_length
    bits = np.random.default_rng(3).integers(0, 2, size=(50, base.seed_length), dtype=np.uint8)
    assert (D.expand_bits(bits) == base.expand_bits(bits)).all()


def test_derand_scalar_and_vector_agree():
    spec = gen.derand_params(64, 0.25, block_bits=12)
    rng = np.random.default_rng(4)
    bits = rng.integers(0, 2, size=(5, spec.seed_length), dtype=np.uint8)
    fast = spec.expand_bits(bits)
    for row, b in zip(fast, bits):
        seed = Seed(int("".join(map(str, b)), 2), spec.seed_length)
        assert (gen.derand_generate(spec, seed) == row).all()


def test_derand_seed_accounting():
    spec = gen.derand_params(1024, 0.125)
    base = spec.base
    S = math.ceil(math.log2(2 * base.t / 0.125))
    ell = base.r0 + S + math.ceil(math.log2(base.t / 0.125))
    assert spec.robp_prg.S == S and spec.robp_prg.block_bits == ell
    assert spec.seed_length == base.hash.seed_length + ell * (1 + 2 * math.ceil(math.log2(base.t)))
    assert spec.seed_length < base.seed_length


def test_derand_shape_mismatch():
    base = small_generator()
    with pytest.raises(ValueError):
        gen.DerandSpec(base=base, robp_prg=IdentityStretch(D=base.r0, T=3))


# ----------------------------------------------------------------- sphere
def test_hadamard_basics():
    assert gen.hadamard_transform([3.0]).tolist() == [3.0]
    rng = np.random.default_rng(6)
    v = rng.normal(size=64)
    assert np.allclose(gen.hadamard_transform(gen.hadamard_transform(v)), v, atol=1e-12)
    e1 = np.zeros(16)
    e1[0] = 1
    assert (gen.hadamard_transform(e1) == 0.25).all()
    with pytest.raises(ValueError):
        gen.hadamard_transform(np.ones(6))


def test_sphere_outputs_are_exact_unit_vectors():
    spec = gen.sphere_params(256, 0.125)
    v = spec.sample(np.random.default_rng(7), 2000)
    assert ((v * v).sum(axis=1) == 1.0).all()


def test_sphere_scalar_path():
    spec = gen.sphere_params(64, 0.25)
    rng = np.random.default_rng(8)
    xs = Seed.random(rng, spec.x_seed_length)
    ys = Seed.random(rng, spec.y_seed_length)
    v = gen.sphere_generate(spec, xs, ys)
    g = gen.main_generate(spec.inner, ys).astype(float)
    x = spec.sign_space.sample(xs).astype(float)
    # D(x) H^T g / sqrt(n) with the symmetric normalised Hadamard matrix
    assert np.allclose(v, x * gen.hadamard_transform(g) / math.sqrt(64), atol=1e-15)


def test_sphere_mean_is_zero_over_sign_seeds():
    inner = gen.profile_params("regular-halfspace", 8, eps=0.5)
    spec = gen.SphereSpec(n=8, sign_space=exact_kwise_space(8, 2), inner=inner)
    xs = np.arange(1 << spec.x_seed_length, dtype=np.uint64)
    xbits = ints_to_bits(xs, spec.x_seed_length)
    for y in range(5):
        ybits = np.repeat(ints_to_bits(np.array([y], dtype=np.uint64), spec.y_seed_length), len(xs), 0)
        assert np.abs(spec.expand_bits(xbits, ybits).sum(axis=0)).max() < 1e-12


def test_sphere_needs_power_of_two():
    with pytest.raises(ValueError):
        gen.sphere_params(100, 0.25)
    w = gen.pad_to_pow2(np.ones(100))
    assert len(w) == 128 and w[100:].sum() == 0


def test_fourth_moment_tail_extremes():
    space = exact_kwise_space(256, 8)
    e1 = np.zeros(256)
    e1[0] = 1.0
    rng = np.random.default_rng(9)
    # H D(x) e1 has every entry +-1/16, so sum v^4 = 1/256 for every x
    assert gen.fourth_moment_tail(space, e1, 1.0, rng, 64) == 1.0
    assert gen.fourth_moment_tail(space, e1, 1.01, rng, 64) == 0.0


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_sphere_preserves_norm_for_any_seed(seed):
    spec = gen.sphere_params(32, 0.5)
    rng = np.random.default_rng(seed)
    v = spec.sample(rng, 4)
    assert ((v * v).sum(axis=1) == 1.0).all()
