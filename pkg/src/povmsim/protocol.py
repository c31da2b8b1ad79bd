"""Desk-scale construction of the structured approximating POVMs.

Builds, for small block lengths, the full pipeline: canonical ensembles,
typical and conditional typical projectors, cut post-states, the coset-coded
operator tables with pruning, binning, decoding, and the end-to-end
faithfulness figure K of the resulting sub-POVM against the tensor-power
target measurement.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .codes import (
    CodeEnsembleSpec,
    UccCode,
    all_vectors,
    require_prime,
    sample_ensemble,
)
from .cq import StochasticMap
from .linalg import (
    DensityOperator,
    Povm,
    hermitian_part,
    kron_all,
    kron_power,
    max_eigenvalue,
    partial_trace,
    permute_registers,
    pruning_projector,
    psd_pinv_sqrt,
    psd_sqrt,
    trace_norm,
)

SEQUENCE_CAP = 2 ** 20   # cap on p**n (sequence enumeration)
DIM_CAP = 4200           # cap on dim(H)**n (dense operators)
PRUNE_TOL = 1e-10


# ---------------------------------------------------------------------------
# Canonical ensemble and typicality.

@dataclass(frozen=True)
class CanonicalEnsemble:
    """Measurement-induced ensemble: weights and unit-trace post-states.

    Outcomes with zero weight carry the null operator.
    """

    weights: np.ndarray
    post_states: tuple

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if len(self.post_states) != w.size:
            raise ValueError("weights/post_states length mismatch")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "post_states", tuple(np.asarray(s, dtype=complex)
                                                      for s in self.post_states))

    @property
    def num_letters(self) -> int:
        return self.weights.size

    def weight_of(self, seq) -> float:
        out = 1.0
        for w in seq:
            out *= self.weights[w]
        return out

    def post_state_of(self, seq) -> np.ndarray:
        return kron_all([self.post_states[w] for w in seq])


def canonical_ensemble(m: Povm, rho: DensityOperator) -> CanonicalEnsemble:
    """lambda_w = Tr{Lambda_w rho}; rho_hat_w = sqrt(rho) Lambda_w sqrt(rho) / lambda_w."""
    if m.dim != rho.dim:
        raise ValueError("POVM and state dimensions differ")
    root = psd_sqrt(rho.mat)
    weights, posts = [], []
    for lam in m.elements:
        w = float(np.trace(lam @ rho.mat).real)
        core = hermitian_part(root @ lam @ root)
        if w > 1e-14:
            weights.append(w)
            posts.append(core / w)
        else:
            weights.append(0.0)
            posts.append(np.zeros_like(core))
    return CanonicalEnsemble(np.array(weights), tuple(posts))


def pad_ensemble(ens: CanonicalEnsemble, p: int) -> CanonicalEnsemble:
    """Extend the letter alphabet to F_p with zero-weight null letters."""
    if ens.num_letters > p:
        raise ValueError(f"alphabet of size {ens.num_letters} does not embed in F_{p}")
    if ens.num_letters == p:
        return ens
    d = ens.post_states[0].shape[0]
    pad = p - ens.num_letters
    return CanonicalEnsemble(
        np.concatenate([ens.weights, np.zeros(pad)]),
        ens.post_states + tuple(np.zeros((d, d), dtype=complex) for _ in range(pad)),
    )


def sequence_counts(seq, num_letters: int) -> np.ndarray:
    return np.bincount(np.asarray(seq, dtype=np.int64), minlength=num_letters)


def counts_are_typical(counts, probs, n: int, delta: float) -> bool:
    """Strong typicality: |count/n - p| <= delta * p per letter, zero stays zero."""
    counts = np.asarray(counts, dtype=float)
    probs = np.asarray(probs, dtype=float)
    zero = probs <= 1e-14
    if np.any(counts[zero] > 0):
        return False
    pos = ~zero
    return bool(np.all(np.abs(counts[pos] / n - probs[pos]) <= delta * probs[pos] + 1e-12))


@dataclass(frozen=True)
class TypicalSet:
    probs: np.ndarray
    n: int
    delta: float
    members: tuple        # tuple of sequence tuples
    mass: float

    def is_member(self, seq) -> bool:
        counts = sequence_counts(seq, len(self.probs))
        return counts_are_typical(counts, self.probs, self.n, self.delta)


def typical_set(dist, n: int, delta: float) -> TypicalSet:
    """Enumerate the strong delta-typical sequences of an i.i.d. distribution."""
    probs = np.asarray(dist, dtype=float)
    q = probs.size
    if q ** n > SEQUENCE_CAP:
        raise ValueError(f"{q}**{n} sequences exceed the desk-scale cap")
    seqs = all_vectors(n, q)
    members = []
    mass = 0.0
    for row in seqs:
        counts = sequence_counts(row, q)
        if counts_are_typical(counts, probs, n, delta):
            members.append(tuple(int(x) for x in row))
            mass += float(np.prod(probs[row]))
    return TypicalSet(probs, n, delta, tuple(members), mass)


def _eigen_groups(vals, rel_tol: float = 1e-8):
    """Cluster eigenvalues equal within tolerance; returns (group_ids, group_probs)."""
    vals = np.asarray(vals, dtype=float)
    scale = max(float(np.max(np.abs(vals))), 1e-300)
    order = np.argsort(vals)
    ids = np.empty(vals.size, dtype=np.int64)
    probs = []
    current = -1
    last = None
    for idx in order:
        v = vals[idx]
        if last is None or v - last > rel_tol * scale:
            current += 1
            probs.append(0.0)
        ids[idx] = current
        probs[current] += max(v, 0.0)
        last = v
    return ids, np.array(probs)


def typical_projector(rho, n: int, delta: float) -> np.ndarray:
    """Projector onto tensor eigenvector sequences typical for the eigenvalue law.

    Eigenvalues equal within tolerance are grouped, so degenerate spectra
    (e.g. the maximally mixed state) behave like single letters.
    """
    mat = rho.mat if isinstance(rho, DensityOperator) else np.asarray(rho, dtype=complex)
    dim = mat.shape[0]
    if dim ** n > DIM_CAP:
        raise ValueError(f"dim**n = {dim ** n} exceeds the dense-operator cap")
    vals, vecs = np.linalg.eigh(hermitian_part(mat))
    ids, gprobs = _eigen_groups(vals)
    num_groups = gprobs.size
    basis = kron_power(vecs, n)
    mask = np.zeros(dim ** n)
    for flat, idx_seq in enumerate(itertools.product(range(dim), repeat=n)):
        counts = np.zeros(num_groups)
        for i in idx_seq:
            counts[ids[i]] += 1
        if counts_are_typical(counts, gprobs, n, delta):
            mask[flat] = 1.0
    return hermitian_part((basis * mask) @ basis.conj().T)


def cond_typical_projector(ens: CanonicalEnsemble, w_seq, delta: float) -> np.ndarray:
    """Strong conditional typical projector for the post-states along ``w_seq``.

    Within the positions carrying letter w, the eigenvalue-group counts of
    rho_hat_w must be strong-typical with the block length n_w.
    """
    w_seq = [int(w) for w in w_seq]
    n = len(w_seq)
    dim = ens.post_states[0].shape[0]
    if dim ** n > DIM_CAP:
        raise ValueError(f"dim**n = {dim ** n} exceeds the dense-operator cap")
    letters = sorted(set(w_seq))
    eig = {}
    for w in letters:
        vals, vecs = np.linalg.eigh(hermitian_part(ens.post_states[w]))
        eig[w] = (_eigen_groups(vals), vecs)
    basis = kron_all([eig[w][1] for w in w_seq])
    positions = {w: [j for j, x in enumerate(w_seq) if x == w] for w in letters}
    mask = np.zeros(dim ** n)
    for flat, idx_seq in enumerate(itertools.product(range(dim), repeat=n)):
        ok = True
        for w in letters:
            (ids, gprobs), _ = eig[w]
            counts = np.zeros(gprobs.size)
            for j in positions[w]:
                counts[ids[idx_seq[j]]] += 1
            if not counts_are_typical(counts, gprobs, len(positions[w]), delta):
                ok = False
                break
        if ok:
            mask[flat] = 1.0
    return hermitian_part((basis * mask) @ basis.conj().T)


def cut_post_state(ens: CanonicalEnsemble, pi_rho: np.ndarray, w_seq,
                   delta: float, tset: TypicalSet | None = None) -> np.ndarray:
    """Pi_rho Pi_{w^n} rho_hat_{w^n} Pi_{w^n} Pi_rho; the null operator off the typical set."""
    dim_n = pi_rho.shape[0]
    if tset is not None and not tset.is_member(w_seq):
        return np.zeros((dim_n, dim_n), dtype=complex)
    pi_w = cond_typical_projector(ens, w_seq, delta)
    rho_hat = ens.post_state_of(w_seq)
    return hermitian_part(pi_rho @ pi_w @ rho_hat @ pi_w @ pi_rho)


# ---------------------------------------------------------------------------
# Protocol parameters and instance.

@dataclass(frozen=True)
class ProtocolParams:
    """Block length, code sizes, shared randomness, and slack parameters.

    Point-to-point uses (n, k, l, p, num_mu); the distributed variant reads l
    as l1/num_mu as N1 and additionally uses l2/num_mu2.
    """

    n: int
    k: int
    l: int
    p: int
    num_mu: int
    eta: float = 0.1
    delta: float = 0.2
    seed: int = 0
    l2: int | None = None
    num_mu2: int | None = None

    def __post_init__(self):
        require_prime(self.p)
        if self.n < 1 or self.k < 0 or self.l < 0 or self.num_mu < 1:
            raise ValueError("invalid protocol sizes")
        if not 0.0 < self.eta < 1.0:
            raise ValueError("eta must lie in (0, 1)")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if self.p ** self.n > SEQUENCE_CAP:
            raise ValueError("p**n exceeds the desk-scale cap")

    @property
    def rate_r(self) -> float:
        return self.l / self.n * np.log2(self.p)

    @property
    def rate_r1(self) -> float:
        return self.k / self.n * np.log2(self.p)

    @property
    def rate_c(self) -> float:
        return np.log2(self.num_mu) / self.n


@dataclass
class MuData:
    """Operators derived from one (G, h^(mu)) realization."""

    code: UccCode
    gamma: dict                 # word tuple -> multiplicity
    sigma: np.ndarray           # sum_w gamma_w Abar_w
    pi_mu: np.ndarray           # pruning projector on range(Pi_rho)
    a_ops: dict                 # word tuple -> pruned A_w
    bin_ops: list               # p**l bin operators Gamma_i
    completion: np.ndarray      # I - sum_i Gamma_i
    decode_table: list          # message m in 0..p**l -> word tuple (or None sentinel)
    collisions: int             # bins whose typical-decoding set had >= 2 entries


@dataclass
class ProtocolInstance:
    params: ProtocolParams
    povm: Povm
    rho: DensityOperator
    ens: CanonicalEnsemble      # padded to F_p
    tset: TypicalSet
    pi_rho: np.ndarray
    abar: dict                  # word tuple -> unpruned Abar_w (typical words only)
    w0: tuple | None            # lexicographically smallest non-typical word, or None
    mus: list
    sub_povm_defect: float      # max over mu of lambda_max(sum_i Gamma_i - I)
    decoder_collisions: int

    @property
    def dim_n(self) -> int:
        return self.rho.dim ** self.params.n


def _lex_smallest_outside(tset: TypicalSet, p: int, n: int):
    members = set(tset.members)
    for row in all_vectors(n, p):
        t = tuple(int(x) for x in row)
        if t not in members:
            return t
    return None


def _gamma_table(code: UccCode) -> dict:
    table: dict = {}
    a_all = all_vectors(code.k, code.p)
    base = (a_all @ code.G) % code.p
    for i in range(code.num_bins):
        words = (base + code.h[i]) % code.p
        for row in words:
            key = tuple(int(x) for x in row)
            table[key] = table.get(key, 0) + 1
    return table


def build_instance(params: ProtocolParams, m: Povm, rho: DensityOperator) -> ProtocolInstance:
    """Construct the point-to-point structured sub-POVMs for every mu."""
    n, p = params.n, params.p
    if rho.dim ** n > DIM_CAP:
        raise ValueError(f"dim**n = {rho.dim ** n} exceeds the dense-operator cap")
    ens = pad_ensemble(canonical_ensemble(m, rho), p)
    tset = typical_set(ens.weights, n, params.delta)
    pi_rho = typical_projector(rho, n, params.delta)
    sqrt_inv_n = kron_power(psd_pinv_sqrt(rho.mat), n)
    norm = p ** n / ((1.0 + params.eta) * p ** (params.k + params.l))
    abar: dict = {}
    for w in tset.members:
        lam_wn = ens.weight_of(w)
        if lam_wn <= 0.0:
            continue
        rho_tilde = cut_post_state(ens, pi_rho, w, params.delta)
        abar[w] = hermitian_part(sqrt_inv_n @ rho_tilde @ sqrt_inv_n) * (norm * lam_wn)
    w0 = _lex_smallest_outside(tset, p, n)
    codes = sample_ensemble(CodeEnsembleSpec(p, n, params.k, params.l,
                                             params.num_mu, params.seed))
    dim_n = rho.dim ** n
    eye = np.eye(dim_n)
    mus = []
    worst_defect = 0.0
    total_collisions = 0
    a_all = all_vectors(params.k, p)
    for code in codes:
        gamma = _gamma_table(code)
        sigma = np.zeros((dim_n, dim_n), dtype=complex)
        for w, op in abar.items():
            g = gamma.get(w, 0)
            if g:
                sigma = sigma + g * op
        pi_mu = pruning_projector(sigma, base=pi_rho, tol=PRUNE_TOL)
        a_ops = {w: hermitian_part(pi_mu @ op @ pi_mu) for w, op in abar.items()}
        bin_ops = []
        decode_table: list = [w0]
        collisions = 0
        base_words = (a_all @ code.G) % p
        for i in range(code.num_bins):
            gam = np.zeros((dim_n, dim_n), dtype=complex)
            decodable = []
            words = (base_words + code.h[i]) % p
            for row in words:
                key = tuple(int(x) for x in row)
                if key in a_ops:
                    gam = gam + a_ops[key]
                    decodable.append(key)
            bin_ops.append(gam)
            if len(decodable) == 1:
                decode_table.append(decodable[0])
            else:
                if len(decodable) >= 2:
                    collisions += 1
                decode_table.append(w0)
        total = sum(bin_ops) if bin_ops else np.zeros_like(eye)
        defect = max(0.0, max_eigenvalue(total - eye))
        worst_defect = max(worst_defect, defect)
        total_collisions += collisions
        mus.append(MuData(code, gamma, sigma, pi_mu, a_ops, bin_ops,
                          hermitian_part(eye - total), decode_table, collisions))
    return ProtocolInstance(params, m, rho, ens, tset, pi_rho, abar, w0, mus,
                            float(worst_defect), total_collisions)


def decode_p2p(instance: ProtocolInstance, message: int, mu: int = 0):
    """Message 0 is the completion outcome (decoded to w0); 1..p**l are bins."""
    table = instance.mus[mu].decode_table
    if not 0 <= message < len(table):
        raise ValueError(f"message {message} out of range")
    return table[message]


def extend_map_to_field(p_zw: StochasticMap, p: int) -> StochasticMap:
    """Extend P_{Z|W} from |W| letters to all of F_p with uniform rows."""
    (nw,) = p_zw.input_sizes
    if nw == p:
        return p_zw
    if nw > p:
        raise ValueError("map already larger than the field")
    pad = np.full((p - nw, p_zw.output_size), 1.0 / p_zw.output_size)
    return StochasticMap((p,), p_zw.output_size, np.vstack([p_zw.probs, pad]))


def _word_weight_ops(mus, num_mu: int):
    """(1/N) sum_mu sum_{m: F(m)=w} Gamma_m, grouped by decoded word."""
    ops: dict = {}
    for mu in mus:
        entries = [(mu.decode_table[0], mu.completion)]
        entries += [(mu.decode_table[m + 1], g) for m, g in enumerate(mu.bin_ops)]
        for word, op in entries:
            if word in ops:
                ops[word] = ops[word] + op / num_mu
            else:
                ops[word] = op / num_mu
    return ops


def _spread_over_outputs(word_ops: dict, p_ext: StochasticMap, n: int, dim_n: int):
    """Apply P^n_{Z|W} to word-indexed operators; None spreads uniformly."""
    nz = p_ext.output_size
    if nz ** n > DIM_CAP:
        raise ValueError("|Z|**n exceeds the dense-operator cap")
    out = {z: np.zeros((dim_n, dim_n), dtype=complex)
           for z in itertools.product(range(nz), repeat=n)}
    for word, op in word_ops.items():
        if word is None:
            for z in out:
                out[z] = out[z] + op / nz ** n
            continue
        rows = [p_ext.row(w) for w in word]
        for z in out:
            pr = 1.0
            for j, zj in enumerate(z):
                pr *= rows[j][zj]
                if pr == 0.0:
                    break
            if pr > 0.0:
                out[z] = out[z] + op * pr
    return out


def assemble_overall(instance: ProtocolInstance, p_zw: StochasticMap) -> dict:
    """The overall sub-POVM {Lambda_hat_{z^n}} of the protocol (complete by construction)."""
    p_ext = extend_map_to_field(p_zw, instance.params.p)
    word_ops = _word_weight_ops(instance.mus, instance.params.num_mu)
    return _spread_over_outputs(word_ops, p_ext, instance.params.n, instance.dim_n)


def target_overall(m: Povm, p_zw: StochasticMap, n: int) -> dict:
    """(M composed with P_{Z|W})^{(x) n}: the measurement being simulated."""
    (nw,) = p_zw.input_sizes
    if nw < len(m):
        raise ValueError("P_{Z|W} must cover every POVM outcome")
    nz = p_zw.output_size
    singles = []
    for z in range(nz):
        op = np.zeros_like(m.elements[0])
        for w, lam in enumerate(m.elements):
            pr = p_zw(z, w)
            if pr:
                op = op + pr * lam
        singles.append(op)
    return {z: kron_all([singles[zj] for zj in z])
            for z in itertools.product(range(nz), repeat=n)}


def faithfulness(rho_n, target: dict, candidate: dict) -> float:
    """The faithfulness figure K of a candidate sub-POVM against a target.

    K = sum_z ||sqrt(rho)(T_z - C_z)sqrt(rho)||_1 + Tr{(I - sum_z C_z) rho},
    evaluated on the n-copy state ``rho_n``.
    """
    mat = rho_n.mat if isinstance(rho_n, DensityOperator) else np.asarray(rho_n, dtype=complex)
    root = psd_sqrt(mat)
    dim = mat.shape[0]
    zero = np.zeros((dim, dim), dtype=complex)
    total_candidate = np.zeros((dim, dim), dtype=complex)
    k = 0.0
    for z in set(target) | set(candidate):
        t = target.get(z, zero)
        c = candidate.get(z, zero)
        total_candidate = total_candidate + c
        k += trace_norm(root @ (t - c) @ root)
    k += float(np.trace((np.eye(dim) - total_candidate) @ mat).real)
    return k


# ---------------------------------------------------------------------------
# Distributed construction.

@dataclass
class SideData:
    """Per-side analogue of MuData (operators on one factor's n copies)."""

    code: UccCode
    gamma: dict
    sigma: np.ndarray
    pi_mu: np.ndarray
    a_ops: dict
    bin_ops: list
    completion: np.ndarray
    defect: float


@dataclass
class DistributedInstance:
    params: ProtocolParams
    m_a: Povm
    m_b: Povm
    rho_ab: DensityOperator
    ens_a: CanonicalEnsemble
    ens_b: CanonicalEnsemble
    tset_a: TypicalSet
    tset_b: TypicalSet
    tset_w: TypicalSet          # typical set of W = U + V at delta_hat = p * delta
    w0: tuple | None
    side_a: list                # SideData per mu1
    side_b: list                # SideData per mu2
    decode_tables: dict         # (mu1, mu2) -> dict (i, j) -> word (messages incl. 0)
    sub_povm_defect: float
    decoder_collisions: int


def _build_side(code: UccCode, abar: dict, pi_rho: np.ndarray, dim_n: int) -> SideData:
    gamma = _gamma_table(code)
    sigma = np.zeros((dim_n, dim_n), dtype=complex)
    for w, op in abar.items():
        g = gamma.get(w, 0)
        if g:
            sigma = sigma + g * op
    pi_mu = pruning_projector(sigma, base=pi_rho, tol=PRUNE_TOL)
    a_ops = {w: hermitian_part(pi_mu @ op @ pi_mu) for w, op in abar.items()}
    a_all = all_vectors(code.k, code.p)
    base = (a_all @ code.G) % code.p
    bin_ops = []
    for i in range(code.num_bins):
        gam = np.zeros((dim_n, dim_n), dtype=complex)
        for row in (base + code.h[i]) % code.p:
            key = tuple(int(x) for x in row)
            if key in a_ops:
                gam = gam + a_ops[key]
        bin_ops.append(gam)
    total = sum(bin_ops) if bin_ops else np.zeros((dim_n, dim_n), dtype=complex)
    eye = np.eye(dim_n)
    return SideData(code, gamma, sigma, pi_mu, a_ops, bin_ops,
                    hermitian_part(eye - total), max(0.0, float(max_eigenvalue(total - eye))))


def _side_abar(ens: CanonicalEnsemble, tset: TypicalSet, rho_mat: np.ndarray,
               n: int, eta: float, delta: float, p: int, kl: int) -> tuple:
    pi_rho = typical_projector(rho_mat, n, delta)
    sqrt_inv = kron_power(psd_pinv_sqrt(rho_mat), n)
    norm = p ** n / ((1.0 + eta) * p ** kl)
    abar = {}
    for w in tset.members:
        lam = ens.weight_of(w)
        if lam <= 0.0:
            continue
        rho_tilde = cut_post_state(ens, pi_rho, w, delta)
        abar[w] = hermitian_part(sqrt_inv @ rho_tilde @ sqrt_inv) * (norm * lam)
    return pi_rho, abar


def build_distributed_instance(params: ProtocolParams, m_a: Povm, m_b: Povm,
                               rho_ab: DensityOperator) -> DistributedInstance:
    """Two pruned sub-POVM families sharing one generator matrix, plus the joint decoder."""
    if params.l2 is None or params.num_mu2 is None:
        raise ValueError("distributed build needs l2 and num_mu2")
    n, p, k = params.n, params.p, params.k
    rho_a = partial_trace(rho_ab, traced=[1])
    rho_b = partial_trace(rho_ab, traced=[0])
    if (rho_a.dim * rho_b.dim) ** n > DIM_CAP:
        raise ValueError("joint dimension exceeds the dense-operator cap")
    ens_a = pad_ensemble(canonical_ensemble(m_a, rho_a), p)
    ens_b = pad_ensemble(canonical_ensemble(m_b, rho_b), p)
    tset_a = typical_set(ens_a.weights, n, params.delta)
    tset_b = typical_set(ens_b.weights, n, params.delta)
    # Exact distribution of W = U + V over F_p.
    lam_w = np.zeros(p)
    for u, lam_u_el in enumerate(m_a.elements):
        for v, lam_v_el in enumerate(m_b.elements):
            lam_w[(u + v) % p] += float(np.trace(np.kron(lam_u_el, lam_v_el)
                                                 @ rho_ab.mat).real)
    tset_w = typical_set(lam_w, n, p * params.delta)
    w0 = _lex_smallest_outside(tset_w, p, n)

    rng = np.random.default_rng(params.seed)
    g = rng.integers(0, p, size=(k, n))
    codes_a = [UccCode(p, n, k, params.l, g, rng.integers(0, p, size=(p ** params.l, n)))
               for _ in range(params.num_mu)]
    codes_b = [UccCode(p, n, k, params.l2, g, rng.integers(0, p, size=(p ** params.l2, n)))
               for _ in range(params.num_mu2)]

    pi_a, abar_a = _side_abar(ens_a, tset_a, rho_a.mat, n, params.eta, params.delta,
                              p, k + params.l)
    pi_b, abar_b = _side_abar(ens_b, tset_b, rho_b.mat, n, params.eta, params.delta,
                              p, k + params.l2)
    dim_an, dim_bn = rho_a.dim ** n, rho_b.dim ** n
    side_a = [_build_side(c, abar_a, pi_a, dim_an) for c in codes_a]
    side_b = [_build_side(c, abar_b, pi_b, dim_bn) for c in codes_b]

    members_w = set(tset_w.members)
    a_all = all_vectors(k, p)
    base = (a_all @ g) % p
    decode_tables = {}
    collisions = 0
    for i1, ca in enumerate(codes_a):
        for i2, cb in enumerate(codes_b):
            table = {}
            for i in range(ca.num_bins + 1):
                for j in range(cb.num_bins + 1):
                    if i == 0 or j == 0:
                        table[(i, j)] = w0
                        continue
                    shift = (ca.h[i - 1] + cb.h[j - 1]) % p
                    found = []
                    for row in (base + shift) % p:
                        key = tuple(int(x) for x in row)
                        if key in members_w:
                            found.append(key)
                    if len(found) == 1:
                        table[(i, j)] = found[0]
                    else:
                        if len(found) >= 2:
                            collisions += 1
                        table[(i, j)] = w0
            decode_tables[(i1, i2)] = table
    defect = max([s.defect for s in side_a + side_b])
    return DistributedInstance(params, m_a, m_b, rho_ab, ens_a, ens_b,
                               tset_a, tset_b, tset_w, w0, side_a, side_b,
                               decode_tables, float(defect), collisions)


def decode_distributed(inst: DistributedInstance, i: int, j: int,
                       mu1: int = 0, mu2: int = 0):
    """Messages (i, j) with 0 meaning the completion outcome on that side."""
    return inst.decode_tables[(mu1, mu2)][(i, j)]


def _interleave_ab(op: np.ndarray, da: int, db: int, n: int) -> np.ndarray:
    """Reorder A^n (x) B^n into (A B)^n to match rho_AB^{(x) n}."""
    dims = [da] * n + [db] * n
    order = []
    for j in range(n):
        order += [j, n + j]
    return permute_registers(op, dims, order)


def assemble_overall_distributed(inst: DistributedInstance, p_zw: StochasticMap) -> dict:
    """Overall sub-POVM {Lambda_hat_{z^n}} on (H_A (x) H_B)^{(x) n}."""
    params = inst.params
    p_ext = extend_map_to_field(p_zw, params.p)
    n = params.n
    da, db = inst.rho_ab.register_dims
    n1, n2 = params.num_mu, params.num_mu2
    word_ops: dict = {}
    for i1, sa in enumerate(inst.side_a):
        ops_a = [sa.completion] + sa.bin_ops
        for i2, sb in enumerate(inst.side_b):
            ops_b = [sb.completion] + sb.bin_ops
            table = inst.decode_tables[(i1, i2)]
            for (i, j), word in table.items():
                op = np.kron(ops_a[i], ops_b[j]) / (n1 * n2)
                if word in word_ops:
                    word_ops[word] = word_ops[word] + op
                else:
                    word_ops[word] = op
    word_ops = {w: _interleave_ab(op, da, db, n) for w, op in word_ops.items()}
    return _spread_over_outputs(word_ops, p_ext, n, (da * db) ** n)


def target_overall_distributed(m_a: Povm, m_b: Povm, p_zw: StochasticMap,
                               p: int, n: int) -> dict:
    """(M_AB composed with P_{Z|W})^{(x) n} in the interleaved (AB)^n ordering."""
    p_ext = extend_map_to_field(p_zw, p)
    nz = p_ext.output_size
    d = m_a.dim * m_b.dim
    singles = []
    for z in range(nz):
        op = np.zeros((d, d), dtype=complex)
        for u, lam_u in enumerate(m_a.elements):
            for v, lam_v in enumerate(m_b.elements):
                pr = p_ext(z, (u + v) % p)
                if pr:
                    op = op + pr * np.kron(lam_u, lam_v)
        singles.append(op)
    return {z: kron_all([singles[zj] for zj in z])
            for z in itertools.product(range(nz), repeat=n)}
