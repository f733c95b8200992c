"""Independent reference implementations used to check the library.

Everything here deliberately avoids the code paths under test: norms are
computed by scalar loops, least squares by explicit normal equations,
spectral norms by characteristic-polynomial roots or full SVD, and the
best block subset by exhaustive enumeration.
"""

import itertools
import math

import numpy as np


def per_block_norms_loop(z, d):
    """Per-block Euclidean norms via explicit scalar loops."""
    out = []
    for start in range(0, len(z), d):
        acc = 0.0
        for i in range(start, start + d):
            acc += float(z[i]) * float(z[i])
        out.append(math.sqrt(acc))
    return out


def mixed_norm_loop(z, d, p):
    v = per_block_norms_loop(z, d)
    if p == 1:
        return sum(v)
    if p == 2:
        return math.sqrt(sum(t * t for t in v))
    return max(v)


def spectral_norm_cubic(X):
    """Spectral norm via characteristic-polynomial roots of a 3x3 Gram matrix."""
    X = np.asarray(X, dtype=float)
    G = X.T @ X if X.shape[1] <= X.shape[0] else X @ X.T
    assert G.shape == (3, 3), "cubic oracle needs a 3x3 Gram"
    # det(G - lam I) = -lam^3 + tr lam^2 - c1 lam + det
    tr = G[0, 0] + G[1, 1] + G[2, 2]
    c1 = (G[0, 0] * G[1, 1] - G[0, 1] * G[1, 0]
          + G[0, 0] * G[2, 2] - G[0, 2] * G[2, 0]
          + G[1, 1] * G[2, 2] - G[1, 2] * G[2, 1])
    det = np.linalg.det(G)
    roots = np.roots([1.0, -tr, c1, -det])
    lam_max = max(float(np.real(r)) for r in roots)
    return math.sqrt(max(lam_max, 0.0))


def normal_equations_solve_3(B, y):
    """Least squares for a 3-column B by explicit 3x3 inversion."""
    B = np.asarray(B, dtype=float)
    assert B.shape[1] == 3
    G = B.T @ B
    b = B.T @ y
    # adjugate / determinant inverse
    adj = np.empty((3, 3))
    adj[0, 0] = G[1, 1] * G[2, 2] - G[1, 2] * G[2, 1]
    adj[0, 1] = -(G[0, 1] * G[2, 2] - G[0, 2] * G[2, 1])
    adj[0, 2] = G[0, 1] * G[1, 2] - G[0, 2] * G[1, 1]
    adj[1, 0] = -(G[1, 0] * G[2, 2] - G[1, 2] * G[2, 0])
    adj[1, 1] = G[0, 0] * G[2, 2] - G[0, 2] * G[2, 0]
    adj[1, 2] = -(G[0, 0] * G[1, 2] - G[0, 2] * G[1, 0])
    adj[2, 0] = G[1, 0] * G[2, 1] - G[1, 1] * G[2, 0]
    adj[2, 1] = -(G[0, 0] * G[2, 1] - G[0, 1] * G[2, 0])
    adj[2, 2] = G[0, 0] * G[1, 1] - G[0, 1] * G[1, 0]
    det = (G[0, 0] * adj[0, 0] + G[0, 1] * adj[1, 0] + G[0, 2] * adj[2, 0])
    return (adj @ b) / det


def coherence_loop(A):
    """Max |a_i^T a_j| over distinct columns by double loop."""
    n = A.shape[1]
    best = 0.0
    for i in range(n):
        for j in range(n):
            if i != j:
                best = max(best, abs(float(A[:, i] @ A[:, j])))
    return best


def sub_coherence_loop(A, d):
    """Max within-block |a_i^T a_j| by loops over blocks and column pairs."""
    n = A.shape[1]
    best = 0.0
    for start in range(0, n, d):
        for i in range(start, start + d):
            for j in range(start, start + d):
                if i != j:
                    best = max(best, abs(float(A[:, i] @ A[:, j])))
    return best


def block_coherence_loop(A, d):
    """Max_{i != j} rho(A_i^T A_j)/d via full pairwise SVD."""
    L = A.shape[1] // d
    best = 0.0
    for i in range(L):
        for j in range(L):
            if i != j:
                Bi = A[:, i * d:(i + 1) * d]
                Bj = A[:, j * d:(j + 1) * d]
                best = max(best, float(np.linalg.svd(Bi.T @ Bj, compute_uv=False)[0]))
    return best / d


def exhaustive_best_blocks(y, A, d, k):
    """Support of the best k-block least-squares fit, by full enumeration.

    Solves every C(L, k) normal-equation system in a batch and returns the
    block set with the smallest residual.  Independent of the QR-based
    solver path.
    """
    m, n = A.shape
    L = n // d
    G = A.T @ A
    c = A.T @ y
    subsets = list(itertools.combinations(range(L), k))
    cols = np.array([
        np.concatenate([np.arange(b * d, (b + 1) * d) for b in sub])
        for sub in subsets
    ])
    Gs = G[cols[:, :, None], cols[:, None, :]]
    cs = c[cols]
    coef = np.linalg.solve(Gs, cs[:, :, None])[:, :, 0]
    # ||y - Bx||^2 = ||y||^2 - c_s . x  at the normal-equations solution
    res2 = float(y @ y) - np.einsum("ki,ki->k", cs, coef)
    return set(subsets[int(np.argmin(res2))])
