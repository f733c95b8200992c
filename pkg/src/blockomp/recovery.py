"""Block orthogonal matching pursuit, the plain OMP baseline, and the
greedy selection ratio diagnostic.

BOMP iterates: correlate the residual against every block, pick the block
with the largest correlation norm, refit by least squares over all chosen
blocks, recompute the residual as the projection complement.
"""

import enum
import numpy as np
from dataclasses import dataclass

from .coherence import BlockDictionary
from .linalg import BlockPartition, RankDeficiencyError, as_vector, block_norms, least_squares

# residual correlations with all true blocks below this are treated as degenerate
DEGENERATE_CORR_TOL = 1e-14

# relative residual decrease below this counts as stagnation
STAGNATION_TOL = 1e-14


class DegenerateResidualError(ValueError):
    """Residual is (numerically) orthogonal to every true-support block."""


class StopReason(str, enum.Enum):
    K_REACHED = "k_reached"
    TOL_REACHED = "tol_reached"
    MAX_ITERS = "max_iters"
    STAGNATION = "stagnation"


@dataclass(frozen=True)
class BlockSupport:
    """Ordered, duplicate-free set of block indices."""

    indices: tuple

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if len(set(idx)) != len(idx):
            raise ValueError(f"duplicate block indices in support: {idx}")
        if any(i < 0 for i in idx):
            raise ValueError(f"negative block index in support: {idx}")
        object.__setattr__(self, "indices", idx)

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __contains__(self, i):
        return i in set(self.indices)

    def to_set(self):
        return set(self.indices)

    def validate(self, num_blocks):
        if self.indices and max(self.indices) >= num_blocks:
            raise ValueError(
                f"support index {max(self.indices)} out of range [0, {num_blocks})"
            )


@dataclass(frozen=True)
class BlockSparseSignal:
    """Length-n signal whose nonzero entries live in the declared support blocks."""

    x: np.ndarray
    part: BlockPartition
    support: BlockSupport

    def __post_init__(self):
        x = as_vector(self.x, "x")
        object.__setattr__(self, "x", x)
        if x.shape[0] != self.part.n:
            raise ValueError(f"x length {x.shape[0]} != partition length {self.part.n}")
        self.support.validate(self.part.count)
        norms = block_norms(x, self.part)
        on = np.zeros(self.part.count, dtype=bool)
        on[list(self.support.indices)] = True
        if np.any(norms[~on] != 0.0):
            bad = int(np.nonzero(norms * ~on)[0][0])
            raise ValueError(f"block {bad} outside declared support is nonzero")
        if np.any(norms[on] == 0.0):
            bad = [int(i) for i in self.support.indices if norms[i] == 0.0]
            raise ValueError(f"support blocks {bad} are exactly zero")

    @classmethod
    def from_dense(cls, x, part):
        """Derive the support from the nonzero blocks of x."""
        x = as_vector(x, "x")
        norms = block_norms(x, part)
        support = BlockSupport(tuple(int(i) for i in np.nonzero(norms)[0]))
        return cls(x=x, part=part, support=support)

    @property
    def k(self):
        return len(self.support)

    def nonzero_part(self):
        """Stack of the support blocks (in stored support order) as one vector."""
        d = self.part.d
        return np.concatenate(
            [self.x[self.part.block_slice(l)] for l in self.support.indices]
        ) if self.support.indices else np.zeros(0)


@dataclass(frozen=True)
class StoppingRule:
    """Stop after a known number of blocks or when the residual norm drops below epsilon."""

    mode: str                 # "known_k" | "residual_tol"
    k: int | None = None
    epsilon: float | None = None
    max_iters: int | None = None   # defaults to floor(m/d) at solve time

    @classmethod
    def known_k(cls, k, max_iters=None):
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        return cls(mode="known_k", k=int(k), max_iters=max_iters)

    @classmethod
    def residual_tol(cls, epsilon, max_iters=None):
        if epsilon < 0:
            raise ValueError(f"epsilon must be >= 0, got {epsilon}")
        return cls(mode="residual_tol", epsilon=float(epsilon), max_iters=max_iters)


@dataclass
class RecoveryTrace:
    """Per-iteration record of a pursuit run.

    residual_norms[t] is ||r_t||_2 with r_0 = y, so the list has
    iterations + 1 entries.  gammas (one per iteration, computed from the
    pre-selection residual) is only present when the true support was
    supplied.  estimate embeds the final least-squares coefficients into a
    length-n vector, zero off the chosen blocks.
    """

    chosen: list
    residual_norms: list
    gammas: list | None
    estimate: np.ndarray
    iterations: int
    stop_reason: StopReason

    def to_dict(self):
        return {
            "chosen": [int(i) for i in self.chosen],
            "residual_norms": [float(v) for v in self.residual_norms],
            "gammas": None if self.gammas is None else [float(g) for g in self.gammas],
            "estimate": [float(v) for v in self.estimate],
            "iterations": self.iterations,
            "stop_reason": self.stop_reason.value,
        }


def _block_corr_norms(dic, r):
    """Per-block l2 norms of A^T r."""
    return block_norms(dic.A.T @ r, dic.part)


def greedy_selection_ratio(dic, support, r):
    """Ratio of the best off-support to the best on-support block correlation.

    A value < 1 means the next greedy selection is guaranteed to pick a
    true-support block.  Raises DegenerateResidualError when the residual is
    numerically orthogonal to every true block (denominator ~ 0).
    """
    support.validate(dic.L)
    if len(support) == 0 or len(support) >= dic.L:
        raise ValueError("support must be a nonempty proper subset of the blocks")
    r = as_vector(r, "r")
    if r.shape[0] != dic.m:
        raise ValueError(f"residual length {r.shape[0]} != m = {dic.m}")
    bn = _block_corr_norms(dic, r)
    on = np.zeros(dic.L, dtype=bool)
    on[list(support.indices)] = True
    den = float(bn[on].max())
    num = float(bn[~on].max())
    if den < DEGENERATE_CORR_TOL:
        raise DegenerateResidualError(
            f"residual orthogonal to all true blocks (max correlation {den:.3e})"
        )
    return num / den


def bomp(y, dic, stop, oracle_support=None):
    """Run block orthogonal matching pursuit.

    Each iteration selects the not-yet-chosen block maximizing
    ||A_i^T r||_2 (ties broken toward the lowest index), refits y on all
    chosen blocks by least squares, and updates the residual.  With
    oracle_support given, the greedy selection ratio is recorded before
    each selection (inf when the on-support correlations are degenerate).
    """
    y = as_vector(y, "y")
    if y.shape[0] != dic.m:
        raise ValueError(f"y length {y.shape[0]} != m = {dic.m}")
    m, d, L = dic.m, dic.d, dic.L
    iter_cap = m // d
    if stop.mode == "known_k":
        if not 1 <= stop.k <= L:
            raise ValueError(f"known_k = {stop.k} outside [1, L = {L}]")
        if stop.k > iter_cap:
            raise ValueError(f"known_k = {stop.k} exceeds floor(m/d) = {iter_cap}")
        limit = stop.k
    elif stop.mode == "residual_tol":
        limit = iter_cap if stop.max_iters is None else min(stop.max_iters, iter_cap)
    else:
        raise ValueError(f"unknown stopping mode {stop.mode!r}")
    if stop.max_iters is not None and stop.max_iters > iter_cap:
        raise ValueError(f"max_iters = {stop.max_iters} exceeds floor(m/d) = {iter_cap}")

    on = None
    if oracle_support is not None:
        oracle_support.validate(L)
        if not 1 <= len(oracle_support) < L:
            raise ValueError("oracle support must be a nonempty proper subset of the blocks")
        on = np.zeros(L, dtype=bool)
        on[list(oracle_support.indices)] = True

    r = y.copy()
    rnorm = float(np.linalg.norm(r))
    ynorm = rnorm
    residual_norms = [rnorm]
    chosen = []
    chosen_mask = np.zeros(L, dtype=bool)
    gammas = [] if oracle_support is not None else None
    coef = np.zeros(0)
    cols = np.zeros(0, dtype=int)
    stop_reason = None
    stagnant = 0

    if stop.mode == "residual_tol" and rnorm < stop.epsilon:
        stop_reason = StopReason.TOL_REACHED

    t = 0
    while stop_reason is None:
        t += 1
        bn = _block_corr_norms(dic, r)
        if on is not None:
            den = float(bn[on].max())
            num = float(bn[~on].max())
            gammas.append(num / den if den >= DEGENERATE_CORR_TOL else np.inf)
        masked = np.where(chosen_mask, -1.0, bn)
        i_t = int(np.argmax(masked))  # argmax returns the lowest index on ties
        chosen.append(i_t)
        chosen_mask[i_t] = True
        cols = np.concatenate([cols, np.arange(i_t * d, (i_t + 1) * d)])
        Psi = dic.A[:, cols]
        try:
            coef = least_squares(Psi, y)
        except RankDeficiencyError as err:
            raise RankDeficiencyError(
                f"iteration {t}: {err}", column=err.column, iteration=t
            ) from err
        r = y - Psi @ coef
        new_rnorm = float(np.linalg.norm(r))
        residual_norms.append(new_rnorm)

        if stop.mode == "known_k":
            if t >= limit:
                stop_reason = StopReason.K_REACHED
        else:
            if new_rnorm < stop.epsilon:
                stop_reason = StopReason.TOL_REACHED
            else:
                # finite-precision guard: the decrease is measured against the
                # initial residual scale, since norms at the rounding floor
                # jitter by large relative amounts
                if rnorm - new_rnorm <= STAGNATION_TOL * ynorm:
                    stagnant += 1
                else:
                    stagnant = 0
                if stagnant >= 2:
                    stop_reason = StopReason.STAGNATION
                elif t >= limit:
                    stop_reason = StopReason.MAX_ITERS
        rnorm = new_rnorm

    estimate = np.zeros(dic.n)
    if len(cols):
        estimate[cols] = coef
    return RecoveryTrace(
        chosen=chosen,
        residual_norms=residual_norms,
        gammas=gammas,
        estimate=estimate,
        iterations=len(chosen),
        stop_reason=stop_reason,
    )


def omp(y, dic, stop):
    """Conventional OMP baseline: BOMP on the same matrix with block size 1.

    In known_k mode the budget is k*d atom selections, matching one block
    selection per d atoms.  max_iters, when given, is an atom count.
    """
    flat = BlockDictionary(dic.A, BlockPartition(d=1, count=dic.n))
    if stop.mode == "known_k":
        stop = StoppingRule.known_k(stop.k * dic.d, max_iters=stop.max_iters)
    return bomp(y, flat, stop)
