"""Monte-Carlo and exhaustive verification of the operator inequalities.

Covers the pairwise-independent covering bound, the pruning trace
inequalities, and the bipartite sandwich-reduction inequality.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .codes import all_vectors, require_prime
from .linalg import (
    DensityOperator,
    Povm,
    hermitian_part,
    max_eigenvalue,
    partial_trace_mat,
    pruning_projector,
    psd_sqrt,
    trace_norm,
)


@dataclass(frozen=True)
class CoveringInstance:
    """Ensemble, projectors, and scalars entering the covering bound.

    The alphabet may be padded: letters with lam = 0 carry null operators and
    contribute nothing when sampled, exactly as the change of measure wants.
    """

    lam: np.ndarray        # (X,) ensemble weights, zero on the padding
    sigmas: np.ndarray     # (X, d, d) states (null on the padding)
    mu: np.ndarray         # (X,) sampling distribution
    pi: np.ndarray         # total subspace projector
    pi_x: np.ndarray       # (X, d, d) codeword subspace projectors
    eps: float
    d: float
    big_d: float
    m: int                 # codewords per covering code
    kappa: float | None = None

    def __post_init__(self):
        lam = np.asarray(self.lam, dtype=float)
        mu = np.asarray(self.mu, dtype=float)
        sigmas = np.asarray(self.sigmas, dtype=complex)
        pi_x = np.asarray(self.pi_x, dtype=complex)
        if not (lam.size == mu.size == sigmas.shape[0] == pi_x.shape[0]):
            raise ValueError("alphabet sizes disagree")
        if abs(lam.sum() - 1.0) > 1e-9 or abs(mu.sum() - 1.0) > 1e-9:
            raise ValueError("lam and mu must be distributions")
        if np.any((lam > 1e-13) & (mu <= 0)):
            raise ValueError("lam is not absolutely continuous w.r.t. mu")
        if self.m < 1:
            raise ValueError("M must be >= 1")
        kappa = self.kappa
        if kappa is None:
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = np.where(lam > 0, lam / np.where(mu > 0, mu, 1.0), 0.0)
            kappa = float(ratios.max())
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigmas", sigmas)
        object.__setattr__(self, "pi_x", pi_x)
        object.__setattr__(self, "pi", np.asarray(self.pi, dtype=complex))
        object.__setattr__(self, "kappa", float(kappa))

    @property
    def alphabet_size(self) -> int:
        return self.lam.size

    def sigma(self) -> np.ndarray:
        return np.einsum("x,xij->ij", self.lam, self.sigmas)

    def sigma_tilde(self) -> np.ndarray:
        """(X, d, d) cut states Pi Pi_x sigma_x Pi_x Pi."""
        cut = np.einsum("xab,xbc,xcd->xad", self.pi_x, self.sigmas, self.pi_x)
        return np.einsum("ab,xbc,cd->xad", self.pi, cut, self.pi)

    def with_m(self, m: int) -> "CoveringInstance":
        return replace(self, m=int(m))

    def bound_raw(self) -> float:
        return float(np.sqrt(self.kappa * self.big_d / (self.m * self.d))
                     + 2 * 4 * np.sqrt(self.eps))

    def bound_cut(self) -> float:
        return float(np.sqrt(self.kappa * self.big_d / (self.m * self.d)))


@dataclass(frozen=True)
class HypothesesReport:
    support_overlap: float        # min_x Tr{Pi sigma_x} over lam > 0
    codeword_overlap: float       # min_x Tr{Pi_x sigma_x}
    ratio_bound: float            # ||Pi sqrt(sigma)||_1^2, must be <= D
    peak_defect: float            # max_x lambda_max(Pi_x sigma_x Pi_x - Pi_x / d)
    cut_defect: float             # max_x lambda_max(Pi_x sigma_x Pi_x - sigma_x)
    ok: tuple[bool, ...]          # one flag per hypothesis, in the order above


def check_covering_hypotheses(inst: CoveringInstance, slack: float = 1e-9) -> HypothesesReport:
    """Numerically verify the five covering hypotheses; report-only."""
    live = inst.lam > 1e-13
    s_over, c_over = 1.0, 1.0
    peak, cutd = -np.inf, -np.inf
    for x in np.nonzero(live)[0]:
        sx = inst.sigmas[x]
        px = inst.pi_x[x]
        s_over = min(s_over, float(np.trace(inst.pi @ sx).real))
        c_over = min(c_over, float(np.trace(px @ sx).real))
        cut = hermitian_part(px @ sx @ px)
        peak = max(peak, max_eigenvalue(cut - px / inst.d))
        cutd = max(cutd, max_eigenvalue(cut - sx))
    ratio = trace_norm(inst.pi @ psd_sqrt(inst.sigma())) ** 2
    ok = (
        s_over >= 1.0 - inst.eps - slack,
        c_over >= 1.0 - inst.eps - slack,
        ratio <= inst.big_d + slack,
        peak <= slack,
        cutd <= slack,
    )
    return HypothesesReport(float(s_over), float(c_over), float(ratio),
                            float(peak), float(cutd), ok)


# -- code samplers ----------------------------------------------------------

def iid_code_sampler(inst: CoveringInstance):
    """Fully independent codewords from mu, returned as occupation counts."""
    mu = inst.mu
    m = inst.m

    def sample(rng: np.random.Generator) -> np.ndarray:
        return rng.multinomial(m, mu)

    return sample


def ucc_code_sampler(inst: CoveringInstance, p: int, n: int, k: int, l: int):
    """Pairwise-independent codewords from a fresh (G, h); mu must be uniform."""
    require_prime(p)
    if p ** n != inst.alphabet_size:
        raise ValueError("UCC sampler needs |alphabet| = p**n")
    if p ** (k + l) != inst.m:
        raise ValueError("UCC sampler needs M = p**(k+l)")
    if np.max(np.abs(inst.mu - 1.0 / inst.alphabet_size)) > 1e-12:
        raise ValueError("UCC sampler needs a uniform sampling distribution")
    a_all = all_vectors(k, p)
    pow_vec = p ** np.arange(n - 1, -1, -1, dtype=np.int64)

    def sample(rng: np.random.Generator) -> np.ndarray:
        g = rng.integers(0, p, size=(k, n))
        h = rng.integers(0, p, size=(p ** l, n))
        words = ((a_all @ g)[:, None, :] + h[None, :, :]) % p
        flat = words.reshape(-1, n) @ pow_vec
        return np.bincount(flat, minlength=inst.alphabet_size)

    return sample


@dataclass(frozen=True)
class ExperimentReport:
    trials: int
    seed: int
    empirical_mean: float
    stderr: float
    bound: float
    passed: bool
    extras: dict


def covering_experiment(inst: CoveringInstance, trials: int, seed: int,
                        sampler=None) -> ExperimentReport:
    """Mean trace-norm deviation of sampled covering codes, raw and cut versions.

    The pass criterion allows 3 standard errors of statistical slack on top of
    the bound, which controls an expectation rather than single samples.
    """
    if inst.m == 0:
        raise ValueError("M must be positive")
    if sampler is None:
        sampler = iid_code_sampler(inst)
    rng = np.random.default_rng(seed)
    target_raw = inst.sigma()
    tilde = inst.sigma_tilde()
    target_cut = np.einsum("x,xij->ij", inst.lam, tilde)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(inst.mu > 0, inst.lam / np.where(inst.mu > 0, inst.mu, 1.0), 0.0)
    raw_devs = np.empty(trials)
    cut_devs = np.empty(trials)
    for t in range(trials):
        counts = sampler(rng)
        weights = counts * ratio / inst.m
        raw_devs[t] = trace_norm(target_raw - np.einsum("x,xij->ij", weights, inst.sigmas))
        cut_devs[t] = trace_norm(target_cut - np.einsum("x,xij->ij", weights, tilde))
    raw_mean, cut_mean = float(raw_devs.mean()), float(cut_devs.mean())
    raw_se = float(raw_devs.std(ddof=1) / np.sqrt(trials))
    cut_se = float(cut_devs.std(ddof=1) / np.sqrt(trials))
    b_raw, b_cut = inst.bound_raw(), inst.bound_cut()
    passed = (raw_mean <= b_raw + 3 * raw_se) and (cut_mean <= b_cut + 3 * cut_se)
    return ExperimentReport(
        trials=trials, seed=seed, empirical_mean=raw_mean, stderr=raw_se,
        bound=b_raw, passed=passed,
        extras={"cut_mean": cut_mean, "cut_stderr": cut_se, "cut_bound": b_cut,
                "m": inst.m},
    )


# -- pruning trace inequalities ----------------------------------------------

@dataclass(frozen=True)
class ScaledWishartSampler:
    """Random PSD X = (scale/shots) sum_j g_j g_j^dagger with E[X] = scale * I."""

    dim: int
    shots: int
    scale: float

    @property
    def mean(self) -> np.ndarray:
        return self.scale * np.eye(self.dim)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        g = (rng.standard_normal((self.dim, self.shots))
             + 1j * rng.standard_normal((self.dim, self.shots))) / np.sqrt(2)
        return hermitian_part((self.scale / self.shots) * (g @ g.conj().T))


@dataclass(frozen=True)
class PruningReport:
    trials: int
    seed: int
    eta: float
    pathwise_violations: int       # Tr{I-P} <= Tr{X} failures
    markov_violations: int         # 1{X not<= I} <= Tr{I-P} failures
    mean_cut: float                # E[Tr{I-P}]
    mean_bound: float              # (1/eta) E||X - E[X]||_1
    aggregate_ok: bool             # aggregate bound within 3 standard errors
    precondition_ok: bool          # E[X] <= (1-eta) I for the sampler's mean


def pruning_inequality_experiment(sampler, trials: int, eta: float,
                                  seed: int = 0) -> PruningReport:
    """Pathwise and aggregate pruning inequalities on random PSD samples."""
    if not 0.0 < eta < 1.0:
        raise ValueError("eta must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    pre_ok = max_eigenvalue(sampler.mean - (1.0 - eta) * np.eye(sampler.mean.shape[0])) <= 1e-9
    mean_x = sampler.mean
    cuts = np.empty(trials)
    diffs = np.empty(trials)    # Tr{I-P} - (1/eta)||X - E[X]||_1 per trial
    path_viol = 0
    markov_viol = 0
    for t in range(trials):
        x = sampler.sample(rng)
        proj = pruning_projector(x)
        cut = float(np.trace(np.eye(x.shape[0]) - proj).real)
        cuts[t] = cut
        if cut > float(np.trace(x).real) + 1e-9:
            path_viol += 1
        not_below_identity = max_eigenvalue(x - np.eye(x.shape[0])) > 1e-12
        if float(not_below_identity) > cut + 1e-9:
            markov_viol += 1
        diffs[t] = cut - trace_norm(x - mean_x) / eta
    se = float(diffs.std(ddof=1) / np.sqrt(trials)) if trials > 1 else 0.0
    aggregate_ok = float(diffs.mean()) <= 3 * se
    return PruningReport(trials, seed, eta, path_viol, markov_viol,
                         float(cuts.mean()),
                         float(cuts.mean() - diffs.mean()),
                         bool(aggregate_ok), bool(pre_ok))


# -- bipartite sandwich reduction ---------------------------------------------

@dataclass(frozen=True)
class SandwichReport:
    lhs: float       # sum_y ||sqrt(rho_AB)(Gamma^A (x) Lambda_y^B)sqrt(rho_AB)||_1
    rhs: float       # ||sqrt(rho_A) Gamma^A sqrt(rho_A)||_1
    complete: bool   # sum_y Lambda_y = I within tolerance
    inequality_ok: bool
    equality_ok: bool | None   # None when the POVM is incomplete


def sandwich_reduction_check(rho_ab: DensityOperator, gamma_a, m_y,
                         tol: float = 1e-9) -> SandwichReport:
    """LHS <= RHS always; the report records whether equality held.

    Equality under a complete B-side collection is guaranteed for PSD Gamma^A
    (each sandwich is then PSD and the trace norms telescope), and for product
    states with any Hermitian Gamma^A.  A sign-indefinite Gamma^A on an
    entangled state can make the inequality strict even for projective
    complete measurements (e.g. the Bell state with Gamma^A = Z measured in
    the |+>/|-> basis gives LHS = 0 < RHS = 1), so equality_ok is a report
    field, not an invariant.
    """
    da, db = rho_ab.register_dims
    gamma_a = np.asarray(gamma_a, dtype=complex)
    if gamma_a.shape != (da, da):
        raise ValueError("Gamma^A dimension mismatch")
    elements = list(m_y.elements) if isinstance(m_y, Povm) else [np.asarray(e) for e in m_y]
    root_ab = psd_sqrt(rho_ab.mat)
    lhs = 0.0
    total = np.zeros((db, db), dtype=complex)
    for lam in elements:
        lhs += trace_norm(root_ab @ np.kron(gamma_a, lam) @ root_ab)
        total = total + lam
    rho_a = partial_trace_mat(rho_ab.mat, rho_ab.register_dims, keep=[0])
    root_a = psd_sqrt(rho_a)
    rhs = trace_norm(root_a @ gamma_a @ root_a)
    complete = trace_norm(total - np.eye(db)) <= 1e-9
    ineq_ok = lhs <= rhs + tol
    eq_ok = (abs(lhs - rhs) <= tol) if complete else None
    return SandwichReport(float(lhs), float(rhs), bool(complete), bool(ineq_ok), eq_ok)
