import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ptfprg import robp
from ptfprg.gf2 import ceil_log2, field
from ptfprg.sample_spaces import Seed, exact_kwise_space


def const_program(D, T, accept):
    trans = tuple(np.zeros((1, 1 << D), dtype=np.int64) for _ in range(T))
    return robp.BranchingProgram(D=D, transitions=trans, accept=[accept])


def majority3():
    # states count the ones read so far
    t0 = [[0, 1]]
    t1 = [[0, 1], [1, 2]]
    t2 = [[0, 0], [0, 1], [1, 1]]
    return robp.BranchingProgram(D=1, transitions=(t0, t1, t2), accept=[0, 1])


def parity(T):
    trans = tuple([[0, 1]] if i == 0 else [[0, 1], [1, 0]] for i in range(T))
    return robp.BranchingProgram(D=1, transitions=trans, accept=[0, 1])


def random_program(rng, D, T, width):
    widths = [1] + [width] * T
    trans = tuple(rng.integers(0, widths[i + 1], size=(widths[i], 1 << D)) for i in range(T))
    return robp.BranchingProgram(D=D, transitions=trans, accept=rng.integers(0, 2, width))


def accepting_sets(M, layer):
    """Accepted continuations from every state of ``layer``, by enumeration."""
    rest = M.T - layer
    conts = list(itertools.product(range(1 << M.D), repeat=rest))
    out = []
    for v in range(M.widths[layer]):
        acc = set()
        for z in conts:
            s = v
            for i, word in enumerate(z):
                s = int(M.transitions[layer + i][s, word])
            if M.accept[s]:
                acc.add(z)
        out.append(acc)
    return out


def halfspace_bias_oracle(w, theta):
    n = len(w)
    hits = sum(1 for x in itertools.product((1, -1), repeat=n)
               if sum(a * b for a, b in zip(w, x)) - theta >= 0)
    return Fraction(hits, 2 ** n)


# ------------------------------------------------------------------ basics
def test_trivial_programs():
    assert robp.acceptance_prob(const_program(2, 3, 1)) == 1
    assert robp.acceptance_prob(const_program(2, 3, 0)) == 0


def test_majority_of_three():
    M = majority3()
    assert robp.evaluate(M, [1, 0, 1]) == 1
    assert robp.evaluate(M, [1, 0, 0]) == 0
    assert robp.acceptance_prob(M) == Fraction(1, 2)
    assert robp.brute_acceptance_prob(M) == Fraction(1, 2)


def test_evaluate_rejects_bad_input():
    M = majority3()
    with pytest.raises(ValueError):
        robp.evaluate(M, [1, 0])
    with pytest.raises(ValueError):
        robp.evaluate(M, [1, 0, 2])


def test_program_validation():
    with pytest.raises(ValueError):
        robp.BranchingProgram(D=1, transitions=([[0, 2]],), accept=[0, 1])
    with pytest.raises(ValueError):
        robp.BranchingProgram(D=1, transitions=([[0, 1], [0, 1]],), accept=[0, 1])
    with pytest.raises(ValueError):
        robp.BranchingProgram(D=1, transitions=([[0, 1]], [[0, 1], [1, 2]]), accept=[0, 1, 1], S=1)


def test_dp_matches_enumeration_on_random_programs():
    rng = np.random.default_rng(0)
    for _ in range(30):
        M = random_program(rng, int(rng.integers(1, 3)), int(rng.integers(1, 6)), int(rng.integers(1, 5)))
        assert robp.acceptance_prob(M) == robp.brute_acceptance_prob(M)
        Z = robp.all_words(M.D, M.T)
        fast = robp.evaluate_many(M, Z)
        assert all(robp.evaluate(M, z) == f for z, f in zip(Z[:64], fast[:64]))


def test_text_round_trip():
    rng = np.random.default_rng(1)
    for _ in range(10):
        M = random_program(rng, 2, 4, 3)
        assert robp.loads(robp.dumps(M)) == M
    with pytest.raises(ValueError):
        robp.loads("robp 2 1 1 2\n0 1\n")


# ----------------------------------------------------------- halfspaces
def test_halfspace_all_ones_threshold():
    M, order = robp.halfspace_to_robp([1, 1, 1], Fraction(3, 2))
    assert robp.acceptance_prob(M) == Fraction(1, 8)
    assert order


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(-8, 8), min_size=1, max_size=8), st.integers(-10, 10))
def test_halfspace_program_matches_direct_count(w, theta):
    M, order = robp.halfspace_to_robp(w, theta)
    assert robp.acceptance_prob(M) == halfspace_bias_oracle(w, theta)
    assert robp.check_order(M, order)


def test_halfspace_program_pointwise():
    w, theta = [3, -1, 2, 5, -4], 1
    M, _ = robp.halfspace_to_robp(w, theta)
    for x in itertools.product((1, -1), repeat=5):
        want = int(np.dot(w, x) - theta >= 0)
        assert robp.evaluate(M, robp.signs_to_words(np.array(x))) == want


def test_halfspace_integer_cap():
    with pytest.raises(OverflowError):
        robp.halfspace_to_robp([2 ** 40, 2 ** 40], 0, int_cap=2 ** 40)
    robp.halfspace_to_robp([2 ** 40, 2 ** 40], 0, int_cap=2 ** 41)
    with pytest.raises(TypeError):
        robp.halfspace_to_robp([0.5, 1], 0)


def test_bucketed_program_counts_block_outputs():
    block = exact_kwise_space(4, 2)
    table = np.array([0, 1, 0, 1, 1, 0, 0, 1])
    w = [2, -1, 3, 1, -2, 1, 1, 4]
    M, order = robp.halfspace_to_robp(w, 0, bucket_view=(table, block))
    assert M.D == block.seed_length and M.T == 2
    outs = block.all_outputs()
    hits = 0
    for z0, z1 in itertools.product(range(len(outs)), repeat=2):
        x = np.zeros(8, dtype=np.int64)
        x[table == 0] = outs[z0][:4]
        x[table == 1] = outs[z1][:4]
        hits += int(np.dot(w, x) >= 0)
        assert robp.evaluate(M, [z0, z1]) == int(np.dot(w, x) >= 0)
    assert robp.acceptance_prob(M) == Fraction(hits, len(outs) ** 2)
    assert robp.check_order(M, order)


# --------------------------------------------------------- monotonicity
def test_parity_is_refused_with_witness():
    res = robp.is_monotone(parity(3))
    assert not res
    A = accepting_sets(parity(3), res.layer)
    u, v = res.pair
    assert not (A[u] <= A[v]) and not (A[v] <= A[u])


def test_single_state_layers_are_monotone():
    res = robp.is_monotone(const_program(1, 3, 1))
    assert res and all(len(layer) == 1 for layer in res.layers)


def test_monotone_decision_matches_enumeration():
    rng = np.random.default_rng(3)
    seen = {True: 0, False: 0}
    for _ in range(60):
        M = random_program(rng, 1, 4, 3)
        res = robp.is_monotone(M)
        chains = True
        for layer in range(M.T + 1):
            A = accepting_sets(M, layer)
            if any(not (a <= b or b <= a) for a, b in itertools.combinations(A, 2)):
                chains = False
        assert bool(res) == chains
        seen[chains] += 1
        if res:
            for layer in range(M.T + 1):
                A = accepting_sets(M, layer)
                seq = [A[v] for v in res.layers[layer]]
                assert all(a <= b for a, b in zip(seq, seq[1:]))
    assert seen[True] and seen[False]


# ------------------------------------------------------------- sandwich
def check_sandwich(M, order, eps):
    down, up = robp.sandwich(M, order, eps)
    Z = robp.all_words(M.D, M.T)
    f, lo, hi = (robp.evaluate_many(P, Z) for P in (M, down, up))
    assert (lo <= f).all() and (f <= hi).all()
    p, pd, pu = (robp.acceptance_prob(P) for P in (M, down, up))
    assert pu - pd <= eps
    assert pu - p <= eps / 2 and p - pd <= eps / 2
    bound = math.ceil(2 * M.T / Fraction(eps))
    assert max(down.widths) <= bound and max(up.widths) <= bound
    return down, up


def test_sandwich_of_narrow_program_is_unchanged():
    M = const_program(1, 4, 1)
    order = robp.is_monotone(M)
    down, up = robp.sandwich(M, order, Fraction(1, 4))
    assert down == M and up == M


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(-4, 4), min_size=1, max_size=8), st.integers(-6, 6),
       st.sampled_from([Fraction(1, 4), Fraction(1, 2), Fraction(1, 16)]))
def test_sandwich_soundness_on_halfspaces(w, theta, eps):
    M, order = robp.halfspace_to_robp(w, theta)
    check_sandwich(M, order, eps)


def test_sandwich_shrinks_wide_programs():
    rng = np.random.default_rng(5)
    w = rng.integers(-1000, 1000, size=10).tolist()
    M, order = robp.halfspace_to_robp(w, 7)
    down, up = check_sandwich(M, order, Fraction(1, 2))
    assert max(up.widths) < max(M.widths)


def test_sandwich_rejects_wrong_order():
    M, order = robp.halfspace_to_robp([1, 2, 3], 0)
    reversed_order = robp.MonotoneOrder(tuple(tuple(reversed(layer)) for layer in order.layers))
    with pytest.raises(ValueError):
        robp.sandwich(M, reversed_order, Fraction(1, 4))


def test_sandwich_transfers_generator_error():
    # any distribution that fools both sandwich programs fools the middle one up to eps
    rng = np.random.default_rng(6)
    eps = Fraction(1, 4)
    prg = robp.robp_prg(S=8, D=1, T=8, block_bits=2)
    for _ in range(5):
        M, order = robp.halfspace_to_robp(rng.integers(-50, 50, size=8).tolist(), 3)
        down, up = robp.sandwich(M, order, eps)
        err = robp.prg_error(prg, M)
        assert err <= max(robp.prg_error(prg, down), robp.prg_error(prg, up)) + eps


# ------------------------------------------------------------ generators
def nisan_oracle(seed_int, ell, D, T):
    """Scalar recursion G_0(x) = x, G_k(x, h_1..h_k) = G_{k-1}(x) . G_{k-1}(h_k(x))."""
    F = field(ell)
    K = ceil_log2(T)
    total = ell * (1 + 2 * K)
    bits = format(seed_int, f"0{total}b")
    x = int(bits[:ell], 2)
    hs = [(int(bits[ell + 2 * ell * k: 2 * ell + 2 * ell * k], 2),
           int(bits[2 * ell + 2 * ell * k: 3 * ell + 2 * ell * k], 2)) for k in range(K)]

    def G(x, k):
        if k == 0:
            return [x]
        a, b = hs[k - 1]
        return G(x, k - 1) + G(F.mul(a, x) ^ b, k - 1)

    return [v >> (ell - D) for v in G(x, K)[:T]]


def test_nisan_matches_recursive_definition():
    rng = np.random.default_rng(7)
    for D, T, ell in ((1, 1, 2), (2, 5, 4), (3, 8, 5), (1, 16, 3)):
        prg = robp.robp_prg(S=2, D=D, T=T, block_bits=ell)
        for _ in range(20):
            s = int(rng.integers(0, 1 << prg.seed_length))
            want = nisan_oracle(s, ell, D, T)
            assert prg.generate(Seed(s, prg.seed_length)) == want
            bits = np.array([int(c) for c in format(s, f"0{prg.seed_length}b")], dtype=np.uint8)
            assert prg.expand_bits(bits)[0].tolist() == want


def test_nisan_single_layer_outputs_seed_block():
    prg = robp.robp_prg(S=3, D=3, T=1, block_bits=5)
    assert prg.seed_length == 5
    for s in range(32):
        assert prg.generate(Seed(s, 5)) == [s >> 2]


def test_nisan_seed_length_closed_form():
    for S, D, T, delta in ((4, 2, 8, 0.1), (10, 1, 1000, 1e-3), (0, 5, 3, 0.5)):
        prg = robp.robp_prg(S, D, T, delta=delta)
        ell = D + S + int(np.ceil(np.log2(T / delta)))
        assert prg.block_bits == ell
        assert prg.seed_length == ell * (1 + 2 * int(np.ceil(np.log2(T))))


def test_nisan_error_on_random_programs():
    rng = np.random.default_rng(8)
    prg = robp.robp_prg(S=2, D=2, T=4, block_bits=4)
    assert prg.seed_length == 20
    for _ in range(3):
        M = random_program(rng, 2, 4, 4)
        err = robp.prg_error(prg, M)
        assert 0 <= err <= Fraction(1, 8)


def test_identity_stretch_is_exact():
    prg = robp.IdentityStretch(D=2, T=4)
    M = random_program(np.random.default_rng(9), 2, 4, 3)
    assert robp.prg_error(prg, M) == 0


def test_enumeration_cap():
    prg = robp.robp_prg(S=4, D=4, T=8, block_bits=8)
    with pytest.raises(ValueError):
        next(robp.prg_words(prg, cap_bits=24))
