"""Layered read-once branching programs.

A program reads ``T`` words of ``D`` bits.  Layer ``i`` has ``widths[i]``
states; ``transitions[i][v, z]`` is the successor in layer ``i + 1`` of state
``v`` on word ``z``.  Layer 0 has the single start state 0 and the last layer
carries accept labels.

Besides evaluation and exact acceptance probabilities this module builds the
partial-sum program of an integer halfspace, decides monotonicity (nested
accepting sets along an order of each layer), replaces a monotone program by
a narrow sandwiching pair, and provides two generators of word sequences:
Nisan's recursive hashing generator and the trivial identity stretch.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .gf2 import bits_to_ints, ceil_log2, field, ints_to_bits
from .sample_spaces import SPEC_FORMAT, SPEC_VERSION, Seed, _check_seed

DEFAULT_INT_CAP = 2 ** 62


@dataclass(frozen=True, eq=False)
class BranchingProgram:
    D: int
    transitions: tuple
    accept: np.ndarray
    S: int | None = None
    labels: tuple | None = None

    def __post_init__(self):
        trans = tuple(np.asarray(t, dtype=np.int64) for t in self.transitions)
        object.__setattr__(self, "transitions", trans)
        object.__setattr__(self, "accept", np.asarray(self.accept, dtype=bool).reshape(-1))
        if self.D < 0:
            raise ValueError("D must be non-negative")
        widths = self.widths
        if widths[0] != 1:
            raise ValueError("the first layer must hold exactly one state")
        for i, t in enumerate(trans):
            if t.ndim != 2 or t.shape[1] != 1 << self.D:
                raise ValueError(f"layer {i}: every state needs exactly 2^D = {1 << self.D} edges")
            if t.size and (t.min() < 0 or t.max() >= widths[i + 1]):
                raise ValueError(f"layer {i}: successor index out of range")
        if self.S is not None and max(widths) > 1 << self.S:
            raise ValueError(f"a layer is wider than 2^S = {1 << self.S}")

    @property
    def T(self) -> int:
        return len(self.transitions)

    @property
    def widths(self) -> list[int]:
        if not self.transitions:
            return [len(self.accept)]
        return [t.shape[0] for t in self.transitions] + [len(self.accept)]

    @property
    def width_exponent(self) -> int:
        return self.S if self.S is not None else ceil_log2(max(self.widths))

    def __eq__(self, other) -> bool:
        if not isinstance(other, BranchingProgram):
            return NotImplemented
        return (self.D == other.D and self.T == other.T
                and all(np.array_equal(a, b) for a, b in zip(self.transitions, other.transitions))
                and np.array_equal(self.accept, other.accept))

    __hash__ = None


def evaluate(M: BranchingProgram, z) -> int:
    """Follow the path labelled by the words ``z`` from the start state."""
    z = list(z)
    if len(z) != M.T:
        raise ValueError(f"program reads {M.T} words, got {len(z)}")
    v = 0
    for i, word in enumerate(z):
        word = int(word)
        if not 0 <= word < 1 << M.D:
            raise ValueError(f"word {word} at position {i} is not a {M.D}-bit word")
        v = int(M.transitions[i][v, word])
    return int(M.accept[v])


def evaluate_many(M: BranchingProgram, Z: np.ndarray) -> np.ndarray:
    """Vectorised :func:`evaluate` over the rows of an ``(N, T)`` word array."""
    Z = np.asarray(Z, dtype=np.int64)
    if Z.ndim != 2 or Z.shape[1] != M.T:
        raise ValueError(f"expected an (N, {M.T}) word array")
    state = np.zeros(Z.shape[0], dtype=np.int64)
    for i, t in enumerate(M.transitions):
        state = t[state, Z[:, i]]
    return M.accept[state]


def acceptance_counts(M: BranchingProgram) -> list[list[int]]:
    """Per layer ``i`` and state ``v``: number of accepting continuations out of ``2^(D(T-i))``."""
    counts = [None] * (M.T + 1)
    counts[M.T] = [int(a) for a in M.accept]
    wide = M.D * M.T > 62
    for i in range(M.T - 1, -1, -1):
        nxt = np.array(counts[i + 1], dtype=object if wide else np.int64)
        counts[i] = [int(x) for x in nxt[M.transitions[i]].sum(axis=1)]
    return counts


def layer_probabilities(M: BranchingProgram) -> list[list[Fraction]]:
    counts = acceptance_counts(M)
    return [[Fraction(c, 1 << (M.D * (M.T - i))) for c in layer] for i, layer in enumerate(counts)]


def acceptance_prob(M: BranchingProgram, state: tuple[int, int] = (0, 0)) -> Fraction:
    """Exact probability that a uniform continuation from ``state = (layer, index)`` accepts."""
    layer, v = state
    if not 0 <= layer <= M.T or not 0 <= v < M.widths[layer]:
        raise ValueError(f"{state} is not a state of the program")
    counts = acceptance_counts(M)
    return Fraction(counts[layer][v], 1 << (M.D * (M.T - layer)))


def brute_acceptance_prob(M: BranchingProgram) -> Fraction:
    """Acceptance probability by listing every input (``D*T <= 24``)."""
    total_bits = M.D * M.T
    if total_bits > 24:
        raise ValueError("too many inputs to enumerate")
    Z = all_words(M.D, M.T)
    return Fraction(int(evaluate_many(M, Z).sum()), 1 << total_bits)


def all_words(D: int, T: int) -> np.ndarray:
    """Every word sequence as an ``(2^(DT), T)`` array; the first word is most significant."""
    idx = np.arange(1 << (D * T), dtype=np.int64)
    shifts = D * np.arange(T - 1, -1, -1, dtype=np.int64)
    return (idx[:, None] >> shifts[None, :]) & ((1 << D) - 1)


# ------------------------------------------------------------------ monotonicity
@dataclass(frozen=True)
class MonotoneOrder:
    """``layers[i]`` lists the states of layer ``i`` from smallest to largest accepting set."""

    layers: tuple

    def __bool__(self) -> bool:
        return True

    def rank(self, layer: int) -> np.ndarray:
        order = np.asarray(self.layers[layer])
        r = np.empty(len(order), dtype=np.int64)
        r[order] = np.arange(len(order))
        return r


@dataclass(frozen=True)
class NotMonotone:
    """Refusal carrying a layer and two states whose accepting sets are incomparable."""

    layer: int
    pair: tuple

    def __bool__(self) -> bool:
        return False


def containment_violations(M: BranchingProgram) -> list[np.ndarray]:
    """``bad[i][u, v]`` is True when some continuation is accepted from ``u`` but not ``v``.

    Computed backwards over the product automaton, so ``A(u) <= A(v)`` iff
    ``not bad[i][u, v]``.
    """
    bad = [None] * (M.T + 1)
    acc = M.accept
    bad[M.T] = acc[:, None] & ~acc[None, :]
    for i in range(M.T - 1, -1, -1):
        t = M.transitions[i]
        nxt = bad[i + 1]
        cur = np.zeros((t.shape[0], t.shape[0]), dtype=bool)
        for z in range(t.shape[1]):
            col = t[:, z]
            cur |= nxt[np.ix_(col, col)]
        bad[i] = cur
    return bad


def is_monotone(M: BranchingProgram) -> MonotoneOrder | NotMonotone:
    """Return an order with nested accepting sets on every layer, or a witness that none exists.

    Any valid order sorts states by acceptance probability, so that order is
    the only candidate; consecutive states are then checked for containment.
    """
    counts = acceptance_counts(M)
    bad = containment_violations(M)
    layers = []
    for i in range(M.T + 1):
        order = sorted(range(M.widths[i]), key=lambda v: counts[i][v])
        for u, v in zip(order, order[1:]):
            if bad[i][u, v]:
                return NotMonotone(layer=i, pair=(u, v))
        layers.append(tuple(order))
    return MonotoneOrder(tuple(layers))


def check_order(M: BranchingProgram, order: MonotoneOrder) -> bool:
    bad = containment_violations(M)
    for i, layer in enumerate(order.layers):
        if sorted(layer) != list(range(M.widths[i])):
            return False
        if any(bad[i][u, v] for u, v in zip(layer, layer[1:])):
            return False
    return True


# --------------------------------------------------------------------- sandwich
def _intervals(order, counts, denom: int, width: Fraction) -> list[list[int]]:
    """Greedy partition of an ordered layer into runs whose probabilities span <= ``width``."""
    runs: list[list[int]] = []
    start = None
    for v in order:
        if runs and Fraction(counts[v] - counts[start], denom) <= width:
            runs[-1].append(v)
        else:
            runs.append([v])
            start = v
    return runs


def sandwich(M: BranchingProgram, order: MonotoneOrder, eps) -> tuple[BranchingProgram, BranchingProgram]:
    """Narrow programs ``(M_down, M_up)`` with ``M_down <= M <= M_up`` pointwise.

    Each layer is cut into intervals of the order whose acceptance
    probabilities differ by at most ``eps / 2T``; ``M_up`` keeps the top state
    of every interval and rounds every edge up to the top of its target
    interval, ``M_down`` does the same with bottom states.
    """
    eps = Fraction(eps)
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    if not check_order(M, order):
        raise ValueError("program is not monotone under the supplied order")
    T = M.T
    if T == 0:
        return M, M
    counts = acceptance_counts(M)
    width = eps / (2 * T)
    parts = [[[0]]]
    for i in range(1, T + 1):
        parts.append(_intervals(order.layers[i], counts[i], 1 << (M.D * (T - i)), width))
    s = max(ceil_log2(len(p)) for p in parts)
    out = []
    for pick in (0, -1):
        reps = [[run[pick] for run in p] for p in parts]
        where = []
        for p in parts:
            idx = {}
            for k, run in enumerate(p):
                for v in run:
                    idx[v] = k
            where.append(idx)
        trans = []
        for i in range(T):
            lookup = np.array([where[i + 1][v] for v in range(M.widths[i + 1])], dtype=np.int64)
            rows = M.transitions[i][np.array(reps[i], dtype=np.int64)]
            trans.append(lookup[rows])
        acc = M.accept[np.array(reps[T], dtype=np.int64)]
        out.append(BranchingProgram(D=M.D, transitions=tuple(trans), accept=acc, S=s))
    return out[0], out[1]


# ------------------------------------------------------------------ text format
def dumps(M: BranchingProgram) -> str:
    lines = ["robp {} {} {}".format(M.T, M.D, " ".join(str(w) for w in M.widths))]
    for t in M.transitions:
        lines.extend(" ".join(str(int(x)) for x in row) for row in t)
    lines.append(" ".join("1" if a else "0" for a in M.accept))
    return "\n".join(lines) + "\n"


def loads(text: str) -> BranchingProgram:
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows or rows[0][0] != "robp":
        raise ValueError("missing 'robp T D widths...' header")
    try:
        head = [int(x) for x in rows[0][1:]]
        T, D, widths = head[0], head[1], head[2:]
        if len(widths) != T + 1:
            raise ValueError(f"header lists {len(widths)} widths for T = {T}")
        pos = 1
        trans = []
        for i in range(T):
            block = rows[pos:pos + widths[i]]
            if len(block) != widths[i]:
                raise ValueError(f"layer {i} is truncated")
            trans.append(np.array([[int(x) for x in r] for r in block], dtype=np.int64)
                         .reshape(widths[i], 1 << D))
            pos += widths[i]
        if pos != len(rows) - 1:
            raise ValueError("expected a single accept-label line after the transitions")
        labels = [int(x) for x in rows[pos]]
        if len(labels) != widths[T] or set(labels) - {0, 1}:
            raise ValueError("accept labels must be one 0/1 entry per final state")
    except (IndexError, ValueError) as exc:
        raise ValueError(f"malformed ROBP text: {exc}") from None
    return BranchingProgram(D=D, transitions=tuple(trans), accept=np.array(labels, dtype=bool))


# ------------------------------------------------------------- halfspace programs
def _as_int(x, what: str) -> int:
    if isinstance(x, (int, np.integer)):
        return int(x)
    f = Fraction(x)
    if f.denominator != 1:
        raise TypeError(f"{what} must be integral, got {x}")
    return int(f)


def _layered_sums(contribs: list[np.ndarray], theta, D: int, int_cap: int | None):
    sums = [np.array([0], dtype=object)]
    trans = []
    for i, c in enumerate(contribs):
        nxt = (sums[-1][:, None] + c[None, :])
        vals = sorted(set(nxt.reshape(-1).tolist()))
        if int_cap is not None and vals and max(abs(vals[0]), abs(vals[-1])) > int_cap:
            raise OverflowError(f"partial sum in layer {i + 1} exceeds the integer cap {int_cap}")
        index = {v: k for k, v in enumerate(vals)}
        trans.append(np.vectorize(index.__getitem__, otypes=[np.int64])(nxt))
        sums.append(np.array(vals, dtype=object))
    accept = np.array([v - theta >= 0 for v in sums[-1]], dtype=bool)
    M = BranchingProgram(D=D, transitions=tuple(trans), accept=accept,
                         labels=tuple(tuple(s.tolist()) for s in sums))
    order = MonotoneOrder(tuple(tuple(range(len(s))) for s in sums))
    return M, order


def halfspace_to_robp(w, theta, bucket_view=None, int_cap: int | None = DEFAULT_INT_CAP):
    """Partial-sum program of ``sign(<w, x> - theta)`` for integer ``w`` and ``theta``.

    Without ``bucket_view`` the program reads one bit per layer (bit ``b`` is
    the sign ``(-1)**b``).  With ``bucket_view = (bucket_table, block_space)``
    layer ``i`` reads a whole block seed ``z^i`` and adds
    ``<w restricted to bucket i, G_0(z^i)>``, coordinates taken in increasing
    order.  States of every layer are the reachable partial sums in increasing
    order, which is also the monotone order returned alongside the program.
    """
    w = [_as_int(x, "weights") for x in w]
    theta = Fraction(theta)
    if theta.denominator == 1:
        theta = int(theta)
    if bucket_view is None:
        contribs = [np.array([wi, -wi], dtype=object) for wi in w]
        return _layered_sums(contribs, theta, 1, int_cap)
    table, block = bucket_view
    table = np.asarray(table, dtype=np.int64)
    if table.shape != (len(w),):
        raise ValueError("bucket table must assign every coordinate")
    t = int(table.max()) + 1 if len(table) else 0
    outputs = block.all_outputs(cap_bits=20).astype(object)
    wv = np.array(w, dtype=object)
    contribs = []
    for i in range(t):
        coords = np.flatnonzero(table == i)
        if len(coords) > block.m:
            raise ValueError(f"bucket {i} holds more than m = {block.m} coordinates")
        contribs.append(outputs[:, :len(coords)].dot(wv[coords]) if len(coords)
                        else np.zeros(outputs.shape[0], dtype=object))
    return _layered_sums(contribs, theta, block.seed_length, int_cap)


def signs_to_words(X: np.ndarray) -> np.ndarray:
    """Map a ``+1/-1`` array to the bit words a one-bit-per-layer program reads."""
    return (np.asarray(X) < 0).astype(np.int64)


# ------------------------------------------------------------------- generators
@dataclass(frozen=True)
class NisanPrg:
    """Recursive hashing generator for ``(S, D, T)`` programs.

    Seed: block ``x`` of ``block_bits`` bits followed by ``ceil(log2 T)``
    affine maps ``h(x) = a x + b`` over GF(2^block_bits).  Output position
    ``p`` is ``h_1^{p_0}(h_2^{p_1}(... h_K^{p_{K-1}}(x)))``; each word is the
    top ``D`` bits of its block.
    """

    S: int
    D: int
    T: int
    block_bits: int
    delta: float | None = None

    def __post_init__(self):
        if self.T < 1 or self.D < 0 or self.block_bits < max(1, self.D):
            raise ValueError("need T >= 1 and block_bits >= max(1, D)")

    @property
    def levels(self) -> int:
        return ceil_log2(self.T)

    @property
    def seed_length(self) -> int:
        return self.block_bits * (1 + 2 * self.levels)

    construction = "nisan-affine-gf2"

    def expand_bits(self, bits: np.ndarray) -> np.ndarray:
        bits = np.asarray(bits, dtype=np.uint8).reshape(-1, self.seed_length)
        ell = self.block_bits
        F = field(ell)
        blocks = bits_to_ints(bits[:, :ell])[:, None]
        for k in range(self.levels, 0, -1):
            start = ell + 2 * ell * (k - 1)
            a = bits_to_ints(bits[:, start:start + ell])[:, None]
            b = bits_to_ints(bits[:, start + ell:start + 2 * ell])[:, None]
            mapped = F.mul_array(a, blocks) ^ b
            blocks = np.stack([blocks, mapped], axis=-1).reshape(blocks.shape[0], -1)
        words = blocks[:, :self.T] >> np.uint64(ell - self.D)
        return words.astype(np.int64)

    def generate(self, seed: Seed) -> list[int]:
        _check_seed(seed, self.seed_length, "ROBP generator")
        ell = self.block_bits
        F = field(ell)
        parts = seed.split([ell] + [ell] * (2 * self.levels))
        blocks = [parts[0].bits]
        for k in range(self.levels, 0, -1):
            a, b = parts[1 + 2 * (k - 1)].bits, parts[2 + 2 * (k - 1)].bits
            blocks = [y for x in blocks for y in (x, F.mul(a, x) ^ b)]
        return [x >> (ell - self.D) for x in blocks[:self.T]]

    def to_dict(self) -> dict:
        return {"format": SPEC_FORMAT, "version": SPEC_VERSION, "type": "robp-prg",
                "construction": self.construction, "S": self.S, "D": self.D, "T": self.T,
                "block_bits": self.block_bits, "delta": self.delta,
                "seed_length": self.seed_length}


@dataclass(frozen=True)
class IdentityStretch:
    """The seed itself, cut into ``T`` words of ``D`` bits."""

    D: int
    T: int
    construction = "identity"

    @property
    def seed_length(self) -> int:
        return self.D * self.T

    def expand_bits(self, bits: np.ndarray) -> np.ndarray:
        bits = np.asarray(bits, dtype=np.uint8).reshape(-1, self.seed_length)
        return bits_to_ints(bits.reshape(-1, self.T, self.D)).astype(np.int64).reshape(-1, self.T)

    def generate(self, seed: Seed) -> list[int]:
        _check_seed(seed, self.seed_length, "ROBP generator")
        return [p.bits for p in seed.split([self.D] * self.T)]

    def to_dict(self) -> dict:
        return {"format": SPEC_FORMAT, "version": SPEC_VERSION, "type": "robp-prg",
                "construction": self.construction, "D": self.D, "T": self.T,
                "seed_length": self.seed_length}


def nisan_block_bits(S: int, D: int, T: int, delta: float) -> int:
    """Block width ``D + S + ceil(log2(T / delta))`` used when no override is given."""
    return D + S + max(0, math.ceil(math.log2(T / delta) - 1e-12))


def robp_prg(S: int, D: int, T: int, delta: float | None = None,
             block_bits: int | None = None) -> NisanPrg:
    """Generator for ``(S, D, T)`` programs with seed ``block_bits * (1 + 2 ceil(log2 T))``."""
    if min(S, D, T) < 0 or T < 1:
        raise ValueError("S, D must be non-negative and T positive")
    if block_bits is None:
        if delta is None or not 0 < delta < 1:
            raise ValueError("give a target error delta in (0, 1) or an explicit block width")
        block_bits = nisan_block_bits(S, D, T, delta)
    return NisanPrg(S=S, D=D, T=T, block_bits=max(int(block_bits), D, 1), delta=delta)


def prg_words(prg, cap_bits: int = 24, chunk: int = 1 << 18):
    """Yield the generator's outputs over its whole seed space in chunks."""
    if prg.seed_length > cap_bits:
        raise ValueError(f"seed space 2^{prg.seed_length} exceeds enumeration cap 2^{cap_bits}")
    total = 1 << prg.seed_length
    for start in range(0, total, chunk):
        seeds = np.arange(start, min(total, start + chunk), dtype=np.uint64)
        yield prg.expand_bits(ints_to_bits(seeds, prg.seed_length))


def prg_acceptance(prg, M: BranchingProgram, cap_bits: int = 24) -> Fraction:
    """Exact acceptance probability of ``M`` on the generator's output distribution."""
    if prg.T != M.T or prg.D != M.D:
        raise ValueError("generator shape does not match the program")
    hits = 0
    for Z in prg_words(prg, cap_bits):
        hits += int(evaluate_many(M, Z).sum())
    return Fraction(hits, 1 << prg.seed_length)


def prg_error(prg, M: BranchingProgram, cap_bits: int = 24) -> Fraction:
    return abs(prg_acceptance(prg, M, cap_bits) - acceptance_prob(M))
