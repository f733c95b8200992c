"""Recovery-guarantee certificates and proof-chain inequality checks.

Each certificate evaluates a pair of sufficient conditions on the
coherence metrics, block sparsity level, noise correlation and minimum
signal block norm, and reports a verdict together with every intermediate
quantity.  All inequality checks carry an explicit 1e-10 floating-point
slack; the underlying inequalities are exact.
"""

import numpy as np
from dataclasses import dataclass, field
from enum import Enum

from .coherence import BlockDictionary, block_coherence, coherence, sub_coherence
from .linalg import (
    BlockPartition,
    as_vector,
    block_norms,
    least_squares,
    mixed_operator_norm_lower,
    mixed_operator_norm_upper,
    mixed_vector_norm,
    project_onto_range,
)
from .recovery import BlockSparseSignal

SLACK = 1e-10


class CertificateKind(str, Enum):
    NOISELESS_BLOCK = "noiseless_block"
    THEOREM1 = "theorem1"
    OMP_TROPP = "omp_tropp"
    BOMP_ORTHONORMAL = "bomp_orthonormal"


@dataclass(frozen=True)
class RecoveryCertificate:
    """Evaluated sufficient conditions for exact support recovery.

    verdict is (condition_i_margin > 0) and (condition_ii_lhs >
    condition_ii_rhs); for the noiseless kind condition (ii) is vacuous
    (lhs = 1, rhs = 0).
    """

    kind: CertificateKind
    condition_i_margin: float
    condition_ii_lhs: float
    condition_ii_rhs: float
    verdict: bool
    inputs: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "kind": self.kind.value,
            "condition_i_margin": self.condition_i_margin,
            "condition_ii_lhs": self.condition_ii_lhs,
            "condition_ii_rhs": self.condition_ii_rhs,
            "verdict": self.verdict,
            "inputs": dict(self.inputs),
        }


@dataclass(frozen=True)
class NoiseDecomposition:
    """Split of the noise into in-span and orthogonal components.

    x_tilde_nz stacks the effective nonzero blocks (true blocks plus the
    in-span noise coefficients) in ascending support order; w_tilde is the
    residual noise orthogonal to every true-support column.  omega is the
    worst correlation max_l ||A_l^T w_tilde||_2 over all L blocks;
    omega_offsupport restricts the max to off-support blocks.
    """

    x_tilde_nz: np.ndarray
    w_tilde: np.ndarray
    omega: float
    x_block_min: float
    omega_offsupport: float
    support_order: tuple

    def block(self, position):
        """The effective signal block at `position` in support order."""
        d = self.x_tilde_nz.shape[0] // len(self.support_order)
        return self.x_tilde_nz[position * d:(position + 1) * d]

    def to_dict(self):
        return {
            "x_tilde_nz": [float(v) for v in self.x_tilde_nz],
            "w_tilde": [float(v) for v in self.w_tilde],
            "omega": self.omega,
            "x_block_min": self.x_block_min,
            "omega_offsupport": self.omega_offsupport,
            "support_order": list(self.support_order),
        }


@dataclass(frozen=True)
class BoundCheck:
    """One evaluated inequality: lhs relation rhs within SLACK."""

    label: str
    lhs: float
    rhs: float
    holds: bool
    applicable: bool = True

    def to_dict(self):
        return {
            "label": self.label,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "holds": self.holds,
            "applicable": self.applicable,
        }


def _support_columns(dic, indices):
    """Column indices of the given blocks, concatenated in the given order."""
    d = dic.d
    if not indices:
        return np.zeros(0, dtype=int)
    return np.concatenate([np.arange(l * d, (l + 1) * d) for l in indices])


def decompose_noise(dic, signal, w):
    """Split measurements into a signal-span component and orthogonal noise.

    Computes x_tilde_nz = x_nz + pinv(A_nz) w and w_tilde = w - P_{A_nz} w,
    so that A_nz x_tilde_nz + w_tilde reconstructs A x + w exactly.  Also
    reduces the decomposition to the two scalars the certificates need:
    omega (worst block correlation with w_tilde) and x_block_min (smallest
    effective nonzero block norm).
    """
    w = as_vector(w, "w")
    if w.shape[0] != dic.m:
        raise ValueError(f"noise length {w.shape[0]} != m = {dic.m}")
    if signal.k < 1:
        raise ValueError("signal support is empty")
    order = tuple(sorted(signal.support.indices))
    cols = _support_columns(dic, order)
    A_nz = dic.A[:, cols]
    x_nz = signal.x[cols]
    coef = least_squares(A_nz, w)       # pinv(A_nz) w for full column rank
    w_tilde = w - A_nz @ coef
    x_tilde_nz = x_nz + coef
    corr = block_norms(dic.A.T @ w_tilde, dic.part)
    on = np.zeros(dic.L, dtype=bool)
    on[list(order)] = True
    omega = float(corr.max())
    omega_off = float(corr[~on].max()) if (~on).any() else 0.0
    tilde_norms = np.linalg.norm(x_tilde_nz.reshape(len(order), dic.d), axis=1)
    x_block_min = float(tilde_norms.min())
    if x_block_min <= 0.0:
        raise ValueError("an effective support block has zero norm")
    return NoiseDecomposition(
        x_tilde_nz=x_tilde_nz,
        w_tilde=w_tilde,
        omega=omega,
        x_block_min=x_block_min,
        omega_offsupport=omega_off,
        support_order=order,
    )


def check_noiseless(mu_block, nu, k, d):
    """Noise-free block recovery condition.

    Condition (i) margin is 1 - (d-1)nu - (2k-1)d*mu_block; the verdict
    additionally requires the positive denominator 1 - (d-1)nu -
    (k-1)d*mu_block (the fractional form of the same condition).
    Condition (ii) is vacuous here.
    """
    if k < 1 or d < 1:
        raise ValueError(f"k and d must be >= 1, got k={k}, d={d}")
    margin = 1.0 - (d - 1) * nu - (2 * k - 1) * d * mu_block
    denom = 1.0 - (d - 1) * nu - (k - 1) * d * mu_block
    fraction = k * d * mu_block / denom if denom > 0 else np.inf
    return RecoveryCertificate(
        kind=CertificateKind.NOISELESS_BLOCK,
        condition_i_margin=margin,
        condition_ii_lhs=1.0,
        condition_ii_rhs=0.0,
        verdict=bool(margin > 0.0 and denom > 0.0),
        inputs={"mu_block": mu_block, "nu": nu, "k": k, "d": d,
                "denominator": denom, "fraction": fraction},
    )


def check_theorem1(mu_block, nu, k, d, omega, x_block_min):
    """Noisy block recovery condition.

    (i)  1 - (d-1)nu - (2k-1)d*mu_block > 0
    (ii) [1 - (d-1)nu - (2k-1)d*mu_block]^2 / (1 - (d-1)nu - (k-1)d*mu_block)
         > omega / x_block_min

    The left side of (ii) is always < 1, so omega/x_block_min >= 1 forces a
    false verdict regardless of the coherence values.  With omega = 0 the
    verdict coincides with the noiseless certificate.
    """
    if x_block_min <= 0.0:
        raise ValueError(f"x_block_min must be > 0, got {x_block_min}")
    if omega < 0.0:
        raise ValueError(f"omega must be >= 0, got {omega}")
    margin = 1.0 - (d - 1) * nu - (2 * k - 1) * d * mu_block
    denom = 1.0 - (d - 1) * nu - (k - 1) * d * mu_block
    lhs = margin * margin / denom if denom > 0.0 else -np.inf
    rhs = omega / x_block_min
    return RecoveryCertificate(
        kind=CertificateKind.THEOREM1,
        condition_i_margin=margin,
        condition_ii_lhs=lhs,
        condition_ii_rhs=rhs,
        verdict=bool(margin > 0.0 and lhs > rhs),
        inputs={"mu_block": mu_block, "nu": nu, "k": k, "d": d,
                "omega": omega, "x_block_min": x_block_min, "denominator": denom},
    )


def check_omp_tropp(mu, k, d, inf_noise_corr, x_min):
    """Conventional-OMP recovery condition for a kd-sparse vector.

    (i)  1 - 2kd*mu > 0
    (ii) (1 - 2kd*mu)^2 / (1 - kd*mu) > ||A^T w_tilde||_inf / x_min

    inf_noise_corr is the caller-computed max absolute single-column
    correlation with the orthogonal noise component.
    """
    if x_min <= 0.0:
        raise ValueError(f"x_min must be > 0, got {x_min}")
    margin = 1.0 - 2 * k * d * mu
    denom = 1.0 - k * d * mu
    lhs = margin * margin / denom if denom > 0.0 else -np.inf
    rhs = inf_noise_corr / x_min
    return RecoveryCertificate(
        kind=CertificateKind.OMP_TROPP,
        condition_i_margin=margin,
        condition_ii_lhs=lhs,
        condition_ii_rhs=rhs,
        verdict=bool(margin > 0.0 and lhs > rhs),
        inputs={"mu": mu, "k": k, "d": d,
                "inf_noise_corr": inf_noise_corr, "x_min": x_min, "denominator": denom},
    )


def check_bomp_orthonormal(mu_block, k, d, omega, x_block_min):
    """Block recovery condition for orthonormal blocks (nu = 0)."""
    cert = check_theorem1(mu_block, 0.0, k, d, omega, x_block_min)
    inputs = dict(cert.inputs)
    del inputs["nu"]
    return RecoveryCertificate(
        kind=CertificateKind.BOMP_ORTHONORMAL,
        condition_i_margin=cert.condition_i_margin,
        condition_ii_lhs=cert.condition_ii_lhs,
        condition_ii_rhs=cert.condition_ii_rhs,
        verdict=cert.verdict,
        inputs=inputs,
    )


@dataclass(frozen=True)
class ChainReport:
    """Quantities relating the block and conventional recovery conditions
    for an orthonormal-block dictionary, with the provable links checked."""

    quantities: dict
    checks: tuple
    dense_blocks: bool

    def all_hold(self):
        return all(c.holds for c in self.checks)

    def to_dict(self):
        return {
            "quantities": dict(self.quantities),
            "checks": [c.to_dict() for c in self.checks],
            "dense_blocks": self.dense_blocks,
        }


def check_comparison_chain(dic, signal, w):
    """Compare the block condition against the conventional-OMP condition.

    Requires orthonormal blocks (sub-coherence <= 1e-10).  Evaluates every
    quantity in the comparison chain and asserts the individually provable
    links: omega <= sqrt(d) * ||A^T w_tilde||_inf, x_block_min >= x_min
    (the sqrt(d)-strengthened form only when every effective block is fully
    dense), and the monotone improvement of the block bound over the 2k/k
    form whenever the latter's margin is positive.
    """
    G = dic.gram()
    nu = sub_coherence(dic, _gram=G)
    if nu > 1e-10:
        raise ValueError(f"blocks are not orthonormal (nu = {nu:.3e})")
    mu = coherence(dic, _gram=G)
    mu_block = block_coherence(dic, _gram=G)
    k, d = signal.k, dic.d
    dec = decompose_noise(dic, signal, w)
    inf_corr = float(np.abs(dic.A.T @ dec.w_tilde).max())
    nonzero = dec.x_tilde_nz[dec.x_tilde_nz != 0.0]
    dense = nonzero.size == dec.x_tilde_nz.size
    x_min = float(np.abs(nonzero).min()) if nonzero.size else 0.0

    def safe_ratio(margin, denom):
        return margin * margin / denom if denom > 0.0 else -np.inf

    q_block = safe_ratio(1.0 - (2 * k - 1) * d * mu_block, 1.0 - (k - 1) * d * mu_block)
    q_block_2k = safe_ratio(1.0 - 2 * k * d * mu_block, 1.0 - k * d * mu_block)
    q_omp = safe_ratio(1.0 - 2 * k * d * mu, 1.0 - k * d * mu)
    ratio_omp = inf_corr / x_min if x_min > 0 else np.inf
    ratio_block = dec.omega / dec.x_block_min

    checks = [
        BoundCheck("omega_le_sqrtd_infcorr", dec.omega, np.sqrt(d) * inf_corr,
                   dec.omega <= np.sqrt(d) * inf_corr + SLACK),
        BoundCheck("xbmin_ge_xmin", dec.x_block_min, x_min,
                   dec.x_block_min >= x_min - SLACK),
    ]
    if dense:
        checks.append(
            BoundCheck("xbmin_ge_sqrtd_xmin", dec.x_block_min, np.sqrt(d) * x_min,
                       dec.x_block_min >= np.sqrt(d) * x_min - SLACK)
        )
    margin_2k = 1.0 - 2 * k * d * mu_block
    checks.append(
        BoundCheck("block_bound_ge_2k_form", q_block, q_block_2k,
                   (q_block >= q_block_2k - SLACK) if margin_2k > 0.0 else True,
                   applicable=margin_2k > 0.0)
    )
    quantities = {
        "mu": mu, "mu_block": mu_block, "k": k, "d": d,
        "omega": dec.omega, "x_block_min": dec.x_block_min,
        "inf_noise_corr": inf_corr, "x_min": x_min,
        "block_bound": q_block, "block_bound_2k_form": q_block_2k,
        "omp_bound": q_omp,
        "noise_ratio_block": ratio_block, "noise_ratio_omp": ratio_omp,
        "block_2k_ge_omp_bound": bool(q_block_2k >= q_omp - SLACK),
        "block_noise_ratio_le_omp": bool(ratio_block <= ratio_omp + SLACK),
    }
    return ChainReport(quantities=quantities, checks=tuple(checks), dense_blocks=dense)


@dataclass(frozen=True)
class AppendixReport:
    """Numerical check of the proof-chain inequalities at one split depth k."""

    k: int
    num_blocks: int
    d: int
    margin: float
    conditioned: bool
    checks: tuple
    eq_norm_lower: float
    eq_norm_upper: float
    eq_norm_bound: float

    def all_hold(self):
        return all(c.holds for c in self.checks)

    def failing(self):
        return [c for c in self.checks if not c.holds]

    def to_dict(self):
        return {
            "k": self.k,
            "num_blocks": self.num_blocks,
            "d": self.d,
            "margin": self.margin,
            "conditioned": self.conditioned,
            "checks": [c.to_dict() for c in self.checks],
            "eq_norm_lower": self.eq_norm_lower,
            "eq_norm_upper": self.eq_norm_upper,
            "eq_norm_bound": self.eq_norm_bound,
        }


def check_appendix_bounds(dic, signal, w, k, prefix=None, lower_trials=2000, lower_seed=0):
    """Evaluate the proof-chain inequalities for a k-block correct prefix.

    The true support splits into a chosen part (the first k support blocks
    in ascending index order, or an explicit `prefix` replaying an actual
    pursuit order) and the remainder.  Builds the partial residual
    r_k = Phi2 phi2 - P_{Phi1} Phi2 phi2 and checks, with 1e-10 slack:

      (a) the on-support correlation with r_k is at least
          (1 - (d-1)nu - (2K-2k-1)d*mu_block) * x_block_min,
      (b) the on-support correlation with P_{Phi1} Phi2 phi2 is at most
          d*mu_block*(K-k) times the largest remaining block norm,
      (c) that correlation is maximized over the chosen blocks,
      (d) the sampled lower bound on the cross-talk operator norm respects
          K d mu_block / (1 - (d-1)nu - (K-1)d*mu_block),
      (e) 1 - (d-1)nu - (k-1)d*mu_block > k d mu_block.

    These are asserted only when the condition-(i) margin is positive
    (`conditioned`); the checks are still reported otherwise.
    """
    K, d, L = signal.k, dic.d, dic.L
    if not 0 <= k < K:
        raise ValueError(f"k must be in [0, K = {K}), got {k}")
    order = tuple(sorted(signal.support.indices))
    if prefix is None:
        phi1_blocks = order[:k]
    else:
        phi1_blocks = tuple(int(i) for i in prefix)
        if len(phi1_blocks) != k:
            raise ValueError(f"prefix has {len(phi1_blocks)} blocks, expected {k}")
        if len(set(phi1_blocks)) != k or not set(phi1_blocks) <= set(order):
            raise ValueError("prefix must be k distinct true-support blocks")
    phi2_blocks = tuple(l for l in order if l not in set(phi1_blocks))

    G = dic.gram()
    mu_block = block_coherence(dic, _gram=G)
    nu = sub_coherence(dic, _gram=G)
    margin = 1.0 - (d - 1) * nu - (2 * K - 1) * d * mu_block
    conditioned = margin > 0.0

    dec = decompose_noise(dic, signal, w)
    pos = {l: i for i, l in enumerate(dec.support_order)}
    xt_blocks = {l: dec.block(pos[l]) for l in order}
    Phi1 = dic.A[:, _support_columns(dic, phi1_blocks)]
    Phi2 = dic.A[:, _support_columns(dic, phi2_blocks)]
    phi2 = np.concatenate([xt_blocks[l] for l in phi2_blocks])
    Phi2phi2 = Phi2 @ phi2
    proj = project_onto_range(Phi1, Phi2phi2)
    r_k = Phi2phi2 - proj

    nz_order = order  # A_nz fixed in ascending support order
    A_nz = dic.A[:, _support_columns(dic, nz_order)]
    nz_part = BlockPartition(d=d, count=K)
    corr_rk = mixed_vector_norm(A_nz.T @ r_k, nz_part, np.inf)
    corr_proj = block_norms(A_nz.T @ proj, nz_part)
    corr_proj_by_block = {l: float(corr_proj[i]) for i, l in enumerate(nz_order)}
    max_remaining = max(float(np.linalg.norm(xt_blocks[l])) for l in phi2_blocks)

    lhs_c = max((corr_proj_by_block[l] for l in phi1_blocks), default=0.0)
    rhs_c = max((corr_proj_by_block[l] for l in phi2_blocks), default=0.0)

    denom = 1.0 - (d - 1) * nu - (K - 1) * d * mu_block
    bound = K * d * mu_block / denom if denom > 0.0 else np.inf
    z_blocks = tuple(l for l in range(L) if l not in set(order))
    if z_blocks:
        A_z = dic.A[:, _support_columns(dic, z_blocks)]
        M = A_z.T @ np.linalg.pinv(A_nz).T
        z_part = BlockPartition(d=d, count=L - K)
        lower = mixed_operator_norm_lower(M, z_part, nz_part, lower_trials, lower_seed)
        upper = mixed_operator_norm_upper(M, z_part, nz_part)
    else:
        lower = upper = 0.0  # no off-support blocks: cross-talk is vacuous

    checks = (
        BoundCheck("a_support_corr_floor", corr_rk,
                   (1.0 - (d - 1) * nu - (2 * K - 2 * k - 1) * d * mu_block) * dec.x_block_min,
                   corr_rk >= (1.0 - (d - 1) * nu - (2 * K - 2 * k - 1) * d * mu_block)
                   * dec.x_block_min - SLACK),
        BoundCheck("b_projection_corr_cap", float(corr_proj.max()),
                   d * mu_block * (K - k) * max_remaining,
                   float(corr_proj.max()) <= d * mu_block * (K - k) * max_remaining + SLACK),
        BoundCheck("c_chosen_dominates", lhs_c, rhs_c, lhs_c >= rhs_c - SLACK),
        BoundCheck("d_crosstalk_norm_bound", lower, bound,
                   (lower <= bound + SLACK) if (denom > 0.0 and z_blocks) else True,
                   applicable=bool(denom > 0.0 and z_blocks)),
        BoundCheck("e_positivity_chain", 1.0 - (d - 1) * nu - (k - 1) * d * mu_block,
                   k * d * mu_block,
                   1.0 - (d - 1) * nu - (k - 1) * d * mu_block > k * d * mu_block - SLACK),
    )
    return AppendixReport(
        k=k, num_blocks=K, d=d, margin=margin, conditioned=conditioned,
        checks=checks, eq_norm_lower=lower, eq_norm_upper=upper, eq_norm_bound=bound,
    )


def certify_instance(dic, signal, w):
    """Evaluate every certificate kind for one (dictionary, signal, noise) instance.

    Returns (certificates dict, decomposition, metrics dict).  The
    orthonormal-block certificate is always computed; its `inputs` record
    whether the blocks actually are orthonormal.
    """
    G = dic.gram()
    mu = coherence(dic, _gram=G)
    mu_block = block_coherence(dic, _gram=G)
    nu = sub_coherence(dic, _gram=G)
    k, d = signal.k, dic.d
    dec = decompose_noise(dic, signal, w)
    inf_corr = float(np.abs(dic.A.T @ dec.w_tilde).max())
    nonzero = dec.x_tilde_nz[dec.x_tilde_nz != 0.0]
    x_min = float(np.abs(nonzero).min()) if nonzero.size else 0.0
    certs = {
        CertificateKind.NOISELESS_BLOCK: check_noiseless(mu_block, nu, k, d),
        CertificateKind.THEOREM1: check_theorem1(mu_block, nu, k, d, dec.omega, dec.x_block_min),
        CertificateKind.BOMP_ORTHONORMAL: check_bomp_orthonormal(mu_block, k, d, dec.omega, dec.x_block_min),
    }
    if x_min > 0.0:
        certs[CertificateKind.OMP_TROPP] = check_omp_tropp(mu, k, d, inf_corr, x_min)
    else:
        # an exactly-zero effective entry makes the noise-to-signal ratio
        # unbounded; the condition cannot hold
        certs[CertificateKind.OMP_TROPP] = RecoveryCertificate(
            kind=CertificateKind.OMP_TROPP,
            condition_i_margin=1.0 - 2 * k * d * mu,
            condition_ii_lhs=-np.inf,
            condition_ii_rhs=np.inf,
            verdict=False,
            inputs={"mu": mu, "k": k, "d": d,
                    "inf_noise_corr": inf_corr, "x_min": x_min},
        )
    orth = nu <= 1e-10
    certs[CertificateKind.BOMP_ORTHONORMAL].inputs["orthonormal_blocks"] = orth
    metrics = {
        "mu": mu, "mu_block": mu_block, "nu": nu,
        "omega": dec.omega, "x_block_min": dec.x_block_min,
        "inf_noise_corr": inf_corr, "x_min": x_min, "k": k, "d": d,
    }
    return certs, dec, metrics
