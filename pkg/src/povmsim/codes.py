"""Prime-field arithmetic and Unionized Coset Codes.

A UCC with parameters (n, k, l, p) is the union over m in F_p^l of the cosets
a G + h(m).  The shift map h is stored as an explicit table of p^l vectors so
ensembles serialize and re-run bit-exactly.  Field arithmetic is 64-bit
integers with mod-p reduction.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

ENUMERATION_CAP = 2 ** 20        # cap on p**n for exhaustive sequence enumeration
EXHAUSTIVE_ENSEMBLE_CAP = 2 ** 24  # cap on the number of (G, h) ensembles enumerated


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    for q in range(2, int(p ** 0.5) + 1):
        if p % q == 0:
            return False
    return True


def require_prime(p: int) -> int:
    if not is_prime(int(p)):
        raise ValueError(f"{p} is not prime")
    return int(p)


def int_to_vec(x: int, length: int, p: int) -> np.ndarray:
    """Base-p digits of x, most significant first, as a length-``length`` vector."""
    out = np.zeros(length, dtype=np.int64)
    for j in range(length - 1, -1, -1):
        out[j] = x % p
        x //= p
    return out


def vec_to_int(v, p: int) -> int:
    out = 0
    for x in v:
        out = out * p + int(x)
    return out


def all_vectors(length: int, p: int) -> np.ndarray:
    """All p**length vectors over F_p in lexicographic order, shape (p**length, length)."""
    if length == 0:
        return np.zeros((1, 0), dtype=np.int64)
    grids = np.meshgrid(*([np.arange(p)] * length), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1).astype(np.int64)


def coset_code(G, B, p: int) -> np.ndarray:
    """All p**k codewords a G + B, ordered by the lexicographic sweep of a."""
    require_prime(p)
    G = np.asarray(G, dtype=np.int64) % p
    B = np.asarray(B, dtype=np.int64) % p
    k, n = G.shape
    if B.shape != (n,):
        raise ValueError(f"shift length {B.shape} != ({n},)")
    a = all_vectors(k, p)
    return (a @ G + B) % p


@dataclass(frozen=True)
class UccCode:
    """An (n, k, l, p) unionized coset code: generator G plus shift table h."""

    p: int
    n: int
    k: int
    l: int
    G: np.ndarray       # (k, n) over F_p
    h: np.ndarray       # (p**l, n) over F_p; row m is h(m)

    def __post_init__(self):
        require_prime(self.p)
        G = np.asarray(self.G, dtype=np.int64) % self.p
        h = np.asarray(self.h, dtype=np.int64) % self.p
        if G.shape != (self.k, self.n):
            raise ValueError(f"G shape {G.shape} != ({self.k}, {self.n})")
        if h.shape != (self.p ** self.l, self.n):
            raise ValueError(f"h shape {h.shape} != ({self.p ** self.l}, {self.n})")
        G.setflags(write=False)
        h.setflags(write=False)
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "h", h)

    @property
    def num_bins(self) -> int:
        return self.p ** self.l

    @property
    def num_words(self) -> int:
        return self.p ** (self.k + self.l)


def ucc_codeword(code: UccCode, a, i) -> np.ndarray:
    """W(a, i) = a G + h(i).  ``a`` is a length-k vector, ``i`` a vector or flat index."""
    a = np.asarray(a, dtype=np.int64)
    if a.shape != (code.k,):
        raise ValueError(f"a has shape {a.shape}, expected ({code.k},)")
    if np.any(a < 0) or np.any(a >= code.p):
        raise ValueError("a outside F_p")
    if np.isscalar(i) or isinstance(i, (int, np.integer)):
        idx = int(i)
    else:
        iv = np.asarray(i, dtype=np.int64)
        if iv.shape != (code.l,):
            raise ValueError(f"i has shape {iv.shape}, expected ({code.l},)")
        idx = vec_to_int(iv, code.p)
    if not 0 <= idx < code.num_bins:
        raise ValueError(f"coset index {idx} out of range")
    return (a @ code.G + code.h[idx]) % code.p


def all_codewords(code: UccCode) -> np.ndarray:
    """All p**(k+l) codewords, row (a, i) in lexicographic (a-major) order."""
    a = all_vectors(code.k, code.p)
    base = (a @ code.G) % code.p                       # (p^k, n)
    out = (base[:, None, :] + code.h[None, :, :]) % code.p
    return out.reshape(code.num_words, code.n)


def multiplicity(code: UccCode, w) -> int:
    """gamma_w = |{(a, i): W(a, i) = w}|."""
    w = np.asarray(w, dtype=np.int64)
    if w.shape != (code.n,):
        raise ValueError(f"word length {w.shape} != ({code.n},)")
    words = all_codewords(code)
    return int(np.sum(np.all(words == w % code.p, axis=1)))


def multiplicity_table(code: UccCode) -> dict:
    """Map word tuple -> multiplicity, with sum of values = p**(k+l)."""
    table: dict = {}
    for row in all_codewords(code):
        key = tuple(int(x) for x in row)
        table[key] = table.get(key, 0) + 1
    return table


def bins(code: UccCode) -> dict:
    """Map coset index i -> the coset C(G, h(i)) as a (p**k, n) array."""
    return {i: coset_code(code.G, code.h[i], code.p) for i in range(code.num_bins)}


@dataclass(frozen=True)
class CodeEnsembleSpec:
    p: int
    n: int
    k: int
    l: int
    N: int
    seed: int = 0

    def __post_init__(self):
        require_prime(self.p)
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if self.p ** self.n > ENUMERATION_CAP:
            raise ValueError(f"p**n = {self.p ** self.n} exceeds the desk-scale cap")


def sample_ensemble(spec: CodeEnsembleSpec) -> list[UccCode]:
    """N UCCs sharing one uniform G, with independently uniform shift tables."""
    rng = np.random.default_rng(spec.seed)
    G = rng.integers(0, spec.p, size=(spec.k, spec.n))
    return [
        UccCode(spec.p, spec.n, spec.k, spec.l, G,
                rng.integers(0, spec.p, size=(spec.p ** spec.l, spec.n)))
        for _ in range(spec.N)
    ]


@dataclass(frozen=True)
class PairwiseReport:
    p: int
    n: int
    k: int
    l: int
    num_ensembles: int
    worst_single_deviation: int   # max |count - expected| over codewords and values
    worst_pair_deviation: int     # same over ordered index pairs and value pairs
    exact: bool


def _iter_ensembles(p: int, n: int, k: int, l: int):
    """Yield every (G, h) pair of the grand ensemble; the caller checks the cap."""
    num_shifts = p ** l
    for g_idx in itertools.product(range(p ** n), repeat=k):
        G = np.stack([int_to_vec(x, n, p) for x in g_idx]) if k else np.zeros((0, n), dtype=np.int64)
        for h_idx in itertools.product(range(p ** n), repeat=num_shifts):
            h = np.stack([int_to_vec(x, n, p) for x in h_idx])
            yield G, h


def pairwise_independence_check(p: int, n: int, k: int, l: int) -> PairwiseReport:
    """Exhaustively verify single-codeword uniformity and pairwise joint uniformity.

    Enumerates every (G, h) of the grand ensemble and counts, for each codeword
    index (a, i), the distribution of W(a, i) over F_p^n, and for each ordered
    pair of distinct indices the joint distribution.  Reports worst integer
    deviations from the exactly uniform counts (0 when the facts hold).
    """
    require_prime(p)
    total = p ** (k * n + n * (p ** l))
    if total > EXHAUSTIVE_ENSEMBLE_CAP:
        raise ValueError(
            f"exhaustive enumeration needs {total} ensembles, above the cap "
            f"{EXHAUSTIVE_ENSEMBLE_CAP}")
    num_words = p ** (k + l)
    space = p ** n
    a_all = all_vectors(k, p)
    pow_vec = p ** np.arange(n - 1, -1, -1, dtype=np.int64)
    c1_idx, c2_idx = np.meshgrid(np.arange(num_words), np.arange(num_words), indexing="ij")
    off_diag = c1_idx != c2_idx
    c1_idx, c2_idx = c1_idx[off_diag], c2_idx[off_diag]
    pair_base = (c1_idx * num_words + c2_idx) * space * space
    single_keys = []
    pair_keys = []
    count = 0
    for G, h in _iter_ensembles(p, n, k, l):
        count += 1
        words = ((a_all @ G)[:, None, :] + h[None, :, :]) % p
        flat = words.reshape(num_words, n) @ pow_vec
        single_keys.append(np.arange(num_words) * space + flat)
        pair_keys.append(pair_base + flat[c1_idx] * space + flat[c2_idx])
    assert count == total
    singles = np.bincount(np.concatenate(single_keys), minlength=num_words * space)
    pairs = np.bincount(np.concatenate(pair_keys),
                        minlength=num_words * num_words * space * space)
    exp_single = total // space
    exp_pair = total // (space * space)
    dev_single = int(np.max(np.abs(singles - exp_single)))
    # Only off-diagonal (c1, c2) slots were filled; diagonal slots stay zero
    # and must be excluded from the comparison against exp_pair.
    pairs = pairs.reshape(num_words, num_words, space * space)
    mask = ~np.eye(num_words, dtype=bool)
    dev_pair = int(np.max(np.abs(pairs[mask] - exp_pair))) if num_words > 1 else 0
    return PairwiseReport(p, n, k, l, total, dev_single, dev_pair,
                          exact=(dev_single == 0 and dev_pair == 0))


@dataclass(frozen=True)
class DependenceWitness:
    p: int
    n: int
    k: int
    l: int
    triple: tuple            # three (a_int, i_int) codeword indices inside one coset
    relation_coeffs: tuple   # c with sum_j c_j W_j = 0 mod p on every ensemble
    relation_holds_always: bool
    max_joint_deviation: float  # deviation of the triple's joint counts from uniform
    fires: bool              # non-uniform triple => full independence fails


def three_way_dependence_report(p: int, n: int, k: int, l: int) -> DependenceWitness:
    """Exhibit a same-coset codeword triple that is NOT jointly uniform.

    W(a, i) is affine in a, so for p >= 3 the collinear triple
    W(0, i), W(1, i), W(2, i) obeys W(2,i) = 2 W(1,i) - W(0,i) identically:
    pairwise independence holds but three-way independence fails.  For p = 2
    any triple of distinct codewords is jointly uniform (the first genuine
    dependence involves four codewords), so no triple witness exists.
    """
    require_prime(p)
    if p < 3 or k < 1:
        raise ValueError("a three-codeword dependence witness needs p >= 3 and k >= 1")
    total = p ** (k * n + n * (p ** l))
    if total > EXHAUSTIVE_ENSEMBLE_CAP:
        raise ValueError("instance too large for exhaustive verification")
    a0 = np.zeros(k, dtype=np.int64)
    a1 = np.zeros(k, dtype=np.int64); a1[0] = 1
    a2 = np.zeros(k, dtype=np.int64); a2[0] = 2
    coeffs = (1, (-2) % p, 1)    # W(0,i) - 2 W(1,i) + W(2,i) = 0 mod p
    space = p ** n
    joint = np.zeros((space, space, space), dtype=np.int64)
    holds = True
    pow_vec = p ** np.arange(n - 1, -1, -1, dtype=np.int64)
    for G, h in _iter_ensembles(p, n, k, l):
        w0 = (a0 @ G + h[0]) % p
        w1 = (a1 @ G + h[0]) % p
        w2 = (a2 @ G + h[0]) % p
        if np.any((coeffs[0] * w0 + coeffs[1] * w1 + coeffs[2] * w2) % p != 0):
            holds = False
        joint[int(w0 @ pow_vec), int(w1 @ pow_vec), int(w2 @ pow_vec)] += 1
    expected = total / space ** 3
    dev = float(np.max(np.abs(joint - expected)))
    return DependenceWitness(
        p, n, k, l,
        triple=((vec_to_int(a0, p), 0), (vec_to_int(a1, p), 0), (vec_to_int(a2, p), 0)),
        relation_coeffs=coeffs,
        relation_holds_always=holds,
        max_joint_deviation=dev,
        fires=(holds and dev > 0),
    )


def code_to_json(code: UccCode) -> dict:
    return {"p": code.p, "n": code.n, "k": code.k, "l": code.l,
            "G": code.G.tolist(), "h": code.h.tolist()}


def code_from_json(d: dict) -> UccCode:
    return UccCode(int(d["p"]), int(d["n"]), int(d["k"]), int(d["l"]),
                   np.array(d["G"], dtype=np.int64), np.array(d["h"], dtype=np.int64))
