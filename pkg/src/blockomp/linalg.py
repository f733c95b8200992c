"""Dense linear algebra primitives and block-structured mixed norms.

Everything here operates on plain numpy arrays.  Vectors and matrices are
real-valued and must be finite; block structure is described by a
BlockPartition rather than baked into the array type.
"""

import numpy as np
import scipy.linalg
from dataclasses import dataclass


class PartitionError(ValueError):
    """Array length/shape does not match the block partition."""


class RankDeficiencyError(ValueError):
    """Least-squares matrix is numerically rank deficient.

    The ``column`` attribute identifies the offending column (position of
    the smallest factor diagonal).
    """

    def __init__(self, message, column=None, iteration=None):
        super().__init__(message)
        self.column = column
        self.iteration = iteration


# relative threshold on the QR diagonal below which a column is declared
# linearly dependent
RANK_TOL = 1e-12


@dataclass(frozen=True)
class BlockPartition:
    """Partition of a dimension into `count` consecutive blocks of length `d`."""

    d: int
    count: int

    def __post_init__(self):
        if self.d < 1 or self.count < 1:
            raise PartitionError(f"invalid partition d={self.d}, count={self.count}")

    @property
    def n(self):
        """Total partitioned length."""
        return self.d * self.count

    @classmethod
    def for_length(cls, n, d):
        """Partition a length-n dimension into blocks of size d (must divide n)."""
        if d < 1 or n % d != 0:
            raise PartitionError(f"block size {d} does not divide length {n}")
        return cls(d=d, count=n // d)

    def block_slice(self, q):
        """Index slice of block q."""
        if not 0 <= q < self.count:
            raise IndexError(f"block index {q} out of range [0, {self.count})")
        return slice(q * self.d, (q + 1) * self.d)


def as_vector(z, name="vector"):
    """Validate and return z as a finite 1-d float array."""
    z = np.asarray(z, dtype=float)
    if z.ndim != 1 or z.size < 1:
        raise ValueError(f"{name} must be a nonempty 1-d array, got shape {z.shape}")
    if not np.all(np.isfinite(z)):
        raise ValueError(f"{name} contains non-finite entries")
    return z


def as_matrix(M, name="matrix"):
    """Validate and return M as a finite 2-d float array."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] < 1 or M.shape[1] < 1:
        raise ValueError(f"{name} must be a nonempty 2-d array, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} contains non-finite entries")
    return M


def block_norms(z, part):
    """Per-block Euclidean norms of z under the partition (length = part.count)."""
    z = np.asarray(z, dtype=float)
    if z.shape != (part.n,):
        raise PartitionError(
            f"vector of length {z.shape} incompatible with partition {part.count}x{part.d}"
        )
    return np.linalg.norm(z.reshape(part.count, part.d), axis=1)


def mixed_vector_norm(z, part, p):
    """Mixed l2/lp norm with block size part.d: the lp norm of per-block l2 norms.

    p must be 1, 2 or inf.  For p=2 this is the plain Euclidean norm of z;
    for d=1 it is the plain lp norm.
    """
    if p not in (1, 2, np.inf):
        raise ValueError(f"p must be 1, 2 or inf, got {p}")
    v = block_norms(z, part)
    if p == 1:
        return float(np.sum(v))
    if p == 2:
        return float(np.linalg.norm(v))
    return float(np.max(v))


def _block_view(M, row_part, col_part):
    """Reshape M into an (U, Q, dr, dc) array of blocks."""
    M = np.asarray(M, dtype=float)
    if M.shape != (row_part.n, col_part.n):
        raise PartitionError(
            f"matrix shape {M.shape} incompatible with partitions "
            f"{row_part.count}x{row_part.d} rows, {col_part.count}x{col_part.d} cols"
        )
    return M.reshape(row_part.count, row_part.d, col_part.count, col_part.d).transpose(0, 2, 1, 3)


def mixed_operator_norm_upper(M, row_part, col_part):
    """Upper bound on the mixed l2/l-inf operator norm of M.

    Returns max over block-rows i of sum_j rho(M_ij).  Always >= the exact
    operator norm: for any z with all block norms <= 1,
    ||(Mz)_i||_2 <= sum_j rho(M_ij) ||z_j||_2 <= sum_j rho(M_ij).
    """
    blocks = _block_view(M, row_part, col_part)
    U, Q = blocks.shape[:2]
    rho = np.empty((U, Q))
    for i in range(U):
        for j in range(Q):
            rho[i, j] = spectral_norm(blocks[i, j])
    return float(np.max(rho.sum(axis=1)))


def mixed_operator_norm_lower(M, row_part, col_part, trials, seed):
    """Sampled lower bound on the mixed l2/l-inf operator norm of M.

    Draws `trials` random vectors with every block on the unit l2 sphere
    (the extreme points of the feasible set, so each sample yields a valid
    lower bound) and returns the best ||Mz||_{2,inf} observed.
    Deterministic for a given seed.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    M = np.asarray(M, dtype=float)
    if M.shape != (row_part.n, col_part.n):
        raise PartitionError(
            f"matrix shape {M.shape} incompatible with partitions"
        )
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((col_part.count, col_part.d, trials))
    norms = np.linalg.norm(Z, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0  # zero block draw has probability zero
    Z /= norms
    MZ = M @ Z.reshape(col_part.n, trials)
    per_block = np.linalg.norm(MZ.reshape(row_part.count, row_part.d, trials), axis=1)
    return float(per_block.max(axis=0).max())


def spectral_norm(X):
    """Spectral norm rho(X) = sqrt of the largest eigenvalue of X^T X.

    Computed by symmetric eigendecomposition of the smaller Gram matrix
    (X^T X or X X^T), which gives ~1e-15 relative accuracy for the
    well-scaled small blocks used here.
    """
    X = as_matrix(X, "X")
    if X.shape[0] >= X.shape[1]:
        G = X.T @ X
    else:
        G = X @ X.T
    lam = np.linalg.eigvalsh(G)[-1]
    return float(np.sqrt(max(lam, 0.0)))


def least_squares(B, y):
    """Solve min_x ||y - Bx||_2 by Householder QR.

    B must have full column rank: a diagonal entry of R smaller than
    RANK_TOL times the largest raises RankDeficiencyError naming the
    offending column.  An empty B (zero columns) returns an empty solution.
    """
    B = np.asarray(B, dtype=float)
    y = as_vector(y, "y")
    if B.ndim != 2 or B.shape[0] != y.shape[0]:
        raise ValueError(f"B shape {B.shape} incompatible with y length {y.shape[0]}")
    if B.shape[1] == 0:
        return np.zeros(0)
    Q, R = np.linalg.qr(B)
    diag = np.abs(np.diag(R))
    dmax = diag.max()
    if dmax == 0.0 or diag.min() < RANK_TOL * dmax:
        col = int(np.argmin(diag))
        raise RankDeficiencyError(
            f"rank-deficient least-squares matrix (column {col}, "
            f"|R[{col},{col}]| = {diag[col]:.3e} vs max {dmax:.3e})",
            column=col,
        )
    return scipy.linalg.solve_triangular(R, Q.T @ y)


def project_onto_range(B, y):
    """Orthogonal projection of y onto the column space of B.

    An empty B (zero columns) projects to the zero vector.
    """
    B = np.asarray(B, dtype=float)
    y = as_vector(y, "y")
    if B.ndim != 2 or B.shape[0] != y.shape[0]:
        raise ValueError(f"B shape {B.shape} incompatible with y length {y.shape[0]}")
    if B.shape[1] == 0:
        return np.zeros_like(y)
    return B @ least_squares(B, y)


def project_onto_nullspace(B, y):
    """Orthogonal projection of y onto the orthogonal complement of range(B)."""
    y = as_vector(y, "y")
    return y - project_onto_range(B, y)


def load_matrix_csv(path):
    """Read a matrix from CSV text: one row per line, '.' decimal, no header."""
    M = np.loadtxt(path, delimiter=",", ndmin=2, dtype=float)
    return as_matrix(M, str(path))


def load_vector_csv(path):
    """Read a vector from CSV text (single row, single column, or flat values)."""
    v = np.loadtxt(path, delimiter=",", dtype=float)
    v = np.atleast_1d(v).ravel()
    return as_vector(v, str(path))


def save_matrix_csv(path, M):
    """Write a matrix as CSV with full round-trip precision."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    with open(path, "w") as fh:
        for row in M:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
