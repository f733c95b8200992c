"""Coherence metrics of a block-partitioned dictionary.

Three scalars characterize a dictionary A = [A_1 ... A_L] with unit-norm
columns and block size d:

  mu        conventional coherence, max_{i != j} |a_i^T a_j|
  mu_block  block-coherence, max over distinct block pairs of rho(A_i^T A_j)/d
  nu        sub-coherence, max within-block |a_i^T a_j| (0 when d = 1)
"""

import numpy as np
from dataclasses import dataclass, field

from .linalg import BlockPartition, RankDeficiencyError, as_matrix, spectral_norm

UNIT_NORM_TOL = 1e-10


class DegenerateDictionaryError(ValueError):
    """Dictionary has too few columns/blocks for the requested metric."""


@dataclass(frozen=True)
class BlockDictionary:
    """Measurement matrix with a block partition over its columns.

    Columns must have unit l2 norm (validated, never silently fixed --
    normalization belongs to the dictionary generator).
    """

    A: np.ndarray
    part: BlockPartition

    def __post_init__(self):
        A = as_matrix(self.A, "A")
        object.__setattr__(self, "A", A)
        if A.shape[1] != self.part.n:
            raise ValueError(
                f"A has {A.shape[1]} columns but partition implies {self.part.n}"
            )
        col_norms = np.linalg.norm(A, axis=0)
        worst = np.abs(col_norms - 1.0).max()
        if worst > UNIT_NORM_TOL:
            bad = int(np.argmax(np.abs(col_norms - 1.0)))
            raise ValueError(
                f"column {bad} has norm {col_norms[bad]:.12g}; "
                f"columns must be unit-norm within {UNIT_NORM_TOL}"
            )

    @property
    def m(self):
        return self.A.shape[0]

    @property
    def n(self):
        return self.A.shape[1]

    @property
    def d(self):
        return self.part.d

    @property
    def L(self):
        return self.part.count

    def block(self, l):
        """The m x d column block A_l."""
        return self.A[:, self.part.block_slice(l)]

    def gram(self):
        """Full Gram matrix A^T A."""
        return self.A.T @ self.A


@dataclass(frozen=True)
class CoherenceProfile:
    """Coherence triple plus the maximizing index pairs and per-block Gram spectra."""

    mu: float
    mu_block: float
    nu: float
    gershgorin_floor: float
    mu_pair: tuple           # (column i, column j) attaining mu
    mu_block_pair: tuple     # (block i, block j) attaining mu_block
    nu_pair: tuple | None    # (block l, column i, column j) attaining nu; None if d = 1
    block_gram_lambda_min: np.ndarray = field(repr=False)  # smallest eigenvalue per block Gram

    def to_dict(self):
        return {
            "mu": self.mu,
            "mu_block": self.mu_block,
            "nu": self.nu,
            "gershgorin_floor": self.gershgorin_floor,
            "mu_pair": list(self.mu_pair),
            "mu_block_pair": list(self.mu_block_pair),
            "nu_pair": list(self.nu_pair) if self.nu_pair is not None else None,
            "block_gram_lambda_min": [float(v) for v in self.block_gram_lambda_min],
        }


def _offdiag_abs_max(G):
    """Max absolute off-diagonal entry of G and its (i, j) position."""
    H = np.abs(G).copy()
    np.fill_diagonal(H, -1.0)
    flat = int(np.argmax(H))
    i, j = divmod(flat, H.shape[1])
    return float(H[i, j]), (i, j)


def coherence(dic, _gram=None):
    """Conventional coherence mu = max_{i != j} |a_i^T a_j|."""
    if dic.n < 2:
        raise DegenerateDictionaryError("coherence needs at least 2 columns")
    G = dic.gram() if _gram is None else _gram
    val, _ = _offdiag_abs_max(G)
    return val


def _cross_block_pairs(G, L, d):
    """Distinct block pairs (i < j) of G as a (count, d, d) stack plus index arrays."""
    G4 = G.reshape(L, d, L, d).transpose(0, 2, 1, 3)
    iu, ju = np.triu_indices(L, 1)
    return np.ascontiguousarray(G4[iu, ju]), iu, ju


def _block_coherence_with_pair(dic, G):
    """(mu_block, (i, j)) by exact spectral norms over distinct block pairs.

    Scans pairs in descending Frobenius norm and stops once the remaining
    Frobenius norms cannot beat the best exact value (rho(B) <= ||B||_F),
    so the result is exact while evaluating only a handful of pairs.
    """
    L, d = dic.L, dic.d
    blocks, iu, ju = _cross_block_pairs(G, L, d)
    fro = np.sqrt(np.einsum("kij,kij->k", blocks, blocks))
    order = np.argsort(fro)[::-1]
    best = -1.0
    best_idx = 0
    for idx in order:
        if fro[idx] <= best:
            break
        rho = spectral_norm(blocks[idx])
        if rho > best:
            best = rho
            best_idx = idx
    return best / d, (int(iu[best_idx]), int(ju[best_idx]))


def block_coherence(dic, _gram=None):
    """Block-coherence mu_block = max_{i != j} rho(A_i^T A_j) / d.

    For d = 1 this coincides exactly with the conventional coherence.
    """
    if dic.L < 2:
        raise DegenerateDictionaryError("block coherence needs at least 2 blocks")
    G = dic.gram() if _gram is None else _gram
    if dic.d == 1:
        val, _ = _offdiag_abs_max(G)
        return val
    val, _ = _block_coherence_with_pair(dic, G)
    return val


def _sub_coherence_with_pair(dic, G):
    if dic.d == 1:
        return 0.0, None
    L, d = dic.L, dic.d
    diag_blocks = G.reshape(L, d, L, d)[np.arange(L), :, np.arange(L), :]  # (L, d, d)
    H = np.abs(diag_blocks)
    H[:, np.arange(d), np.arange(d)] = -1.0
    flat = int(np.argmax(H))
    l, rest = divmod(flat, d * d)
    i, j = divmod(rest, d)
    return float(H[l, i, j]), (int(l), int(l * d + i), int(l * d + j))


def sub_coherence(dic, _gram=None):
    """Sub-coherence nu: max |a_i^T a_j| over distinct columns within a block.

    Zero when d = 1 (no within-block pairs).
    """
    G = dic.gram() if _gram is None else _gram
    val, _ = _sub_coherence_with_pair(dic, G)
    return val


def gershgorin_gram_floor(dic):
    """Gershgorin lower bound 1 - (d-1)*nu on every block Gram's smallest eigenvalue."""
    return 1.0 - (dic.d - 1) * sub_coherence(dic)


def orthogonalize_blocks(dic):
    """Factor each block A_l = Atilde_l V_l with orthonormal Atilde_l columns.

    Uses per-block Householder QR with the positive-diagonal convention, so
    the factorization is unique and reproducible.  Returns the orthogonalized
    dictionary and the exactly block-diagonal n x n matrix V with invertible
    d x d blocks V_l.  Raises RankDeficiencyError naming a rank-deficient block.
    """
    m, d, L = dic.m, dic.d, dic.L
    if m < d:
        raise ValueError(f"m = {m} < d = {d}: blocks cannot have full column rank")
    At = np.empty_like(dic.A)
    V = np.zeros((dic.n, dic.n))
    for l in range(L):
        Q, R = np.linalg.qr(dic.block(l))
        diag = np.abs(np.diag(R))
        if diag.max() == 0.0 or diag.min() < 1e-12 * diag.max():
            raise RankDeficiencyError(f"block {l} is rank deficient", column=l)
        s = np.sign(np.diag(R))
        s[s == 0] = 1.0
        sl = dic.part.block_slice(l)
        At[:, sl] = Q * s
        V[sl, sl] = s[:, None] * R
    return BlockDictionary(At, dic.part), V


def coherence_profile(dic):
    """All coherence metrics of a dictionary, with maximizers and per-block spectra."""
    if dic.n < 2:
        raise DegenerateDictionaryError("profile needs at least 2 columns")
    G = dic.gram()
    mu, mu_pair = _offdiag_abs_max(G)
    if dic.L >= 2:
        if dic.d == 1:
            mu_block, mu_block_pair = mu, mu_pair
        else:
            mu_block, mu_block_pair = _block_coherence_with_pair(dic, G)
    else:
        mu_block, mu_block_pair = 0.0, (0, 0)
    nu, nu_pair = _sub_coherence_with_pair(dic, G)
    L, d = dic.L, dic.d
    diag_blocks = G.reshape(L, d, L, d)[np.arange(L), :, np.arange(L), :]
    lam_min = np.linalg.eigvalsh(diag_blocks)[:, 0]
    return CoherenceProfile(
        mu=mu,
        mu_block=mu_block,
        nu=nu,
        gershgorin_floor=1.0 - (d - 1) * nu,
        mu_pair=mu_pair,
        mu_block_pair=mu_block_pair,
        nu_pair=nu_pair,
        block_gram_lambda_min=lam_min,
    )
