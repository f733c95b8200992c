"""Random instance generation, Monte Carlo success-rate sweeps, and result emission.

Instances follow the standard compressed-sensing recipe: i.i.d. Gaussian
dictionary with normalized columns, uniformly random block support with
i.i.d. Gaussian coefficients, i.i.d. Gaussian measurement noise.  Every
trial derives its own counter-based random stream from
(base_seed, solver, K, sigma_w, trial), so sweeps are reproducible cell by
cell regardless of execution order or worker count.
"""

import json
import logging
import struct
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .certificates import check_theorem1, decompose_noise
from .coherence import BlockDictionary, block_coherence, sub_coherence
from .linalg import BlockPartition
from .recovery import BlockSparseSignal, BlockSupport, StoppingRule, bomp, omp

log = logging.getLogger(__name__)

SOLVERS = ("bomp", "omp")
_SOLVER_CODE = {"bomp": 0, "omp": 1}

# noise grid used when a sweep does not specify its own levels
DEFAULT_SIGMA_GRID = (0.01, 0.05, 0.1, 0.2)

WILSON_Z = 1.959963984540054  # two-sided 95%


class SweepError(RuntimeError):
    """A solver failed inside a sweep; carries the replay seed entropy."""

    def __init__(self, message, entropy):
        super().__init__(message)
        self.entropy = entropy


def _sigma_bits(sigma_w):
    """Stable 64-bit encoding of a float noise level for seed derivation."""
    return struct.unpack("<Q", struct.pack("<d", float(sigma_w)))[0]


def trial_seed(base_seed, solver, k, sigma_w, trial):
    """Counter-based per-trial seed keyed on the full grid coordinates."""
    if solver not in _SOLVER_CODE:
        raise ValueError(f"unknown solver {solver!r}")
    entropy = (int(base_seed), _SOLVER_CODE[solver], int(k), _sigma_bits(sigma_w), int(trial))
    if any(v < 0 for v in entropy):
        raise ValueError("seed entropy components must be nonnegative")
    return np.random.SeedSequence(entropy)


def _rng(seed):
    """Counter-based generator from an int or SeedSequence."""
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(seed))


def _substreams(ss, n):
    """First n spawn children of ss, without mutating its spawn counter.

    Keeps repeated calls with the same SeedSequence object replayable.
    """
    return [
        np.random.SeedSequence(entropy=ss.entropy,
                               spawn_key=tuple(ss.spawn_key) + (i,),
                               pool_size=ss.pool_size)
        for i in range(n)
    ]


def normalize_columns(A):
    """Scale every column of A to unit l2 norm (columns must be nonzero)."""
    norms = np.linalg.norm(A, axis=0)
    if np.any(norms == 0.0):
        raise ValueError("cannot normalize a zero column")
    return A / norms


def gen_dictionary(m, n, d, seed):
    """Random dictionary: i.i.d. standard normal entries, columns normalized.

    Stream layout: one standard_normal draw of shape (m, n) in C order,
    then column normalization.  A zero column (probability zero) is redrawn
    and logged.  Deterministic per seed.
    """
    if n % d != 0:
        raise ValueError(f"block size {d} does not divide n = {n}")
    rng = _rng(seed)
    A = rng.standard_normal((m, n))
    norms = np.linalg.norm(A, axis=0)
    while np.any(norms == 0.0):
        bad = int(np.nonzero(norms == 0.0)[0][0])
        log.warning("regenerating zero column %d", bad)
        A[:, bad] = rng.standard_normal(m)
        norms = np.linalg.norm(A, axis=0)
    return BlockDictionary(A / norms, BlockPartition.for_length(n, d))


def gen_signal(L, d, K, seed):
    """Random block-sparse signal: uniform K-subset support, N(0,1) entries.

    The support is the first K entries of a Fisher-Yates shuffle of
    0..L-1 driven by the seeded stream (stored sorted); the K supported
    blocks are then filled in ascending order with standard normal entries.
    An all-zero block draw (probability zero) is redrawn and logged.
    """
    if not 1 <= K <= L:
        raise ValueError(f"K = {K} outside [1, L = {L}]")
    rng = _rng(seed)
    arr = np.arange(L)
    for i in range(K):
        j = int(rng.integers(i, L))
        arr[i], arr[j] = arr[j], arr[i]
    support = tuple(sorted(int(v) for v in arr[:K]))
    x = np.zeros(L * d)
    part = BlockPartition(d=d, count=L)
    for l in support:
        blk = rng.standard_normal(d)
        while not np.any(blk):
            log.warning("regenerating all-zero signal block %d", l)
            blk = rng.standard_normal(d)
        x[part.block_slice(l)] = blk
    return BlockSparseSignal(x=x, part=part, support=BlockSupport(support))


def gen_noise(m, sigma_w, seed):
    """I.i.d. N(0, sigma_w^2) noise; sigma_w = 0 gives the exact zero vector."""
    if sigma_w < 0:
        raise ValueError(f"sigma_w must be >= 0, got {sigma_w}")
    if sigma_w == 0.0:
        return np.zeros(m)
    return sigma_w * _rng(seed).standard_normal(m)


@dataclass
class TrialResult:
    success: bool
    trace: object
    certificate: object
    support: BlockSupport
    entropy: tuple


def run_trial(m, n, d, k, sigma_w, solver, seed, with_certificate=True):
    """Generate one random instance and run one solver on it.

    Success requires all true support found within the step budget: K block
    selections for bomp, K*d atom selections for omp (judged at the atom
    level).  The theorem-1 certificate is attached for diagnostics.
    """
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    dict_ss, sig_ss, noise_ss = _substreams(ss, 3)
    dic = gen_dictionary(m, n, d, dict_ss)
    signal = gen_signal(n // d, d, k, sig_ss)
    w = gen_noise(m, sigma_w, noise_ss)
    y = dic.A @ signal.x + w

    if solver == "bomp":
        trace = bomp(y, dic, StoppingRule.known_k(k), oracle_support=signal.support)
        success = set(trace.chosen) == signal.support.to_set()
    elif solver == "omp":
        trace = omp(y, dic, StoppingRule.known_k(k))
        true_atoms = set(int(i) for i in np.nonzero(signal.x)[0])
        success = true_atoms <= set(trace.chosen)
    else:
        raise ValueError(f"unknown solver {solver!r}")

    cert = None
    if with_certificate:
        G = dic.gram()
        dec = decompose_noise(dic, signal, w)
        cert = check_theorem1(
            block_coherence(dic, _gram=G), sub_coherence(dic, _gram=G),
            k, d, dec.omega, dec.x_block_min,
        )
    entropy = tuple(int(v) for v in np.atleast_1d(ss.entropy))
    return TrialResult(success=success, trace=trace, certificate=cert,
                       support=signal.support, entropy=entropy)


@dataclass(frozen=True)
class ExperimentConfig:
    """Grid specification for a Monte Carlo success-rate sweep."""

    m: int
    n: int
    d: int
    k_values: tuple
    sigma_w: tuple            # one or more noise standard deviations
    trials: int
    base_seed: int
    solvers: tuple = SOLVERS

    def __post_init__(self):
        object.__setattr__(self, "k_values", tuple(int(k) for k in np.atleast_1d(self.k_values)))
        object.__setattr__(self, "sigma_w", tuple(float(s) for s in np.atleast_1d(self.sigma_w)))
        object.__setattr__(self, "solvers", tuple(self.solvers))
        if self.n % self.d != 0:
            raise ValueError(f"d = {self.d} does not divide n = {self.n}")
        cap = self.m // self.d
        for k in self.k_values:
            if not 1 <= k <= cap:
                raise ValueError(f"K = {k} outside [1, floor(m/d) = {cap}]")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        for s in self.sigma_w:
            if s < 0:
                raise ValueError("sigma_w must be >= 0")
        for s in self.solvers:
            if s not in SOLVERS:
                raise ValueError(f"unknown solver {s!r}")

    def to_dict(self):
        return {
            "m": self.m, "n": self.n, "d": self.d,
            "k_values": list(self.k_values),
            "sigma_w": list(self.sigma_w),
            "trials": self.trials,
            "base_seed": self.base_seed,
            "solvers": list(self.solvers),
        }

    @classmethod
    def from_dict(cls, data):
        keys = {"m", "n", "d", "k_values", "sigma_w", "trials", "base_seed", "solvers"}
        extra = set(data) - keys
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        kwargs = {k: data[k] for k in keys & set(data)}
        return cls(**kwargs)


@dataclass(frozen=True)
class CellResult:
    """Aggregated outcome of one (solver, K, sigma_w) grid cell."""

    solver: str
    k: int
    sigma_w: float
    trials: int
    successes: int
    success_rate: float
    ci_halfwidth: float
    cert_true_recovery_failed: int
    cert_false_recovery_succeeded: int

    def to_dict(self):
        return {
            "solver": self.solver, "K": self.k, "sigma_w": self.sigma_w,
            "trials": self.trials, "successes": self.successes,
            "success_rate": self.success_rate, "ci_halfwidth": self.ci_halfwidth,
            "cert_true_recovery_failed": self.cert_true_recovery_failed,
            "cert_false_recovery_succeeded": self.cert_false_recovery_succeeded,
        }


@dataclass
class SweepResult:
    config: ExperimentConfig
    cells: list
    wall_time_s: float
    metadata: dict = field(default_factory=dict)

    def cell(self, solver, k, sigma_w):
        for c in self.cells:
            if c.solver == solver and c.k == k and c.sigma_w == float(sigma_w):
                return c
        raise KeyError((solver, k, sigma_w))

    def to_dict(self):
        return {
            "config": self.config.to_dict(),
            "cells": [c.to_dict() for c in self.cells],
            "wall_time_s": self.wall_time_s,
            "metadata": dict(self.metadata),
        }


def wilson_halfwidth(successes, trials, z=WILSON_Z):
    """Half-width of the Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    p = successes / trials
    z2n = z * z / trials
    return float(z * np.sqrt(p * (1.0 - p) / trials + z2n / (4.0 * trials)) / (1.0 + z2n))


def _run_chunk(args):
    """Worker task: run a contiguous range of trials for one grid cell."""
    m, n, d, k, sigma_w, solver, base_seed, start, stop = args
    succ = ctf = cfs = 0
    for trial in range(start, stop):
        ss = trial_seed(base_seed, solver, k, sigma_w, trial)
        try:
            res = run_trial(m, n, d, k, sigma_w, solver, ss)
        except Exception as err:
            raise SweepError(
                f"solver {solver} failed at K={k}, sigma_w={sigma_w}, trial={trial}: {err}",
                entropy=tuple(int(v) for v in np.atleast_1d(ss.entropy)),
            ) from err
        succ += res.success
        if res.certificate.verdict and not res.success:
            ctf += 1
        if not res.certificate.verdict and res.success:
            cfs += 1
    return succ, ctf, cfs


def run_sweep(config, workers=1):
    """Run the full (solver x K x sigma_w) grid of Monte Carlo trials.

    Per-trial seeds depend only on the grid coordinates and trial index, so
    the aggregated SweepResult is identical for any worker count.  The
    first solver error aborts the sweep with the replay seed.
    """
    t0 = time.perf_counter()
    grid = [(solver, k, sigma) for solver in config.solvers
            for k in config.k_values for sigma in config.sigma_w]
    chunk = max(1, min(100, config.trials // max(1, 2 * workers)))
    tasks = []
    for solver, k, sigma in grid:
        for start in range(0, config.trials, chunk):
            stop = min(start + chunk, config.trials)
            tasks.append((config.m, config.n, config.d, k, sigma, solver,
                          config.base_seed, start, stop))
    totals = {key: [0, 0, 0] for key in grid}
    if workers <= 1:
        outcomes = map(_run_chunk, tasks)
    else:
        pool = ProcessPoolExecutor(max_workers=workers)
        outcomes = pool.map(_run_chunk, tasks)
    try:
        for args, (succ, ctf, cfs) in zip(tasks, outcomes):
            key = (args[5], args[3], args[4])
            totals[key][0] += succ
            totals[key][1] += ctf
            totals[key][2] += cfs
    finally:
        if workers > 1:
            pool.shutdown()
    cells = []
    for solver, k, sigma in grid:
        succ, ctf, cfs = totals[(solver, k, sigma)]
        cells.append(CellResult(
            solver=solver, k=k, sigma_w=sigma, trials=config.trials,
            successes=succ, success_rate=succ / config.trials,
            ci_halfwidth=wilson_halfwidth(succ, config.trials),
            cert_true_recovery_failed=ctf,
            cert_false_recovery_succeeded=cfs,
        ))
    return SweepResult(
        config=config, cells=cells,
        wall_time_s=time.perf_counter() - t0,
        metadata={"workers": workers},
    )


CSV_HEADER = "solver,K,sigma_w,trials,successes,success_rate,ci_halfwidth"


def _csv_text(result):
    lines = [CSV_HEADER]
    for c in result.cells:
        lines.append(",".join([
            c.solver, str(c.k), repr(c.sigma_w), str(c.trials), str(c.successes),
            repr(c.success_rate), repr(c.ci_halfwidth),
        ]))
    return "\n".join(lines) + "\n"


def parse_csv_results(text):
    """Parse CSV emitted by emit_results back into row dicts (exact floats)."""
    lines = [ln for ln in text.strip().splitlines() if ln]
    if lines[0] != CSV_HEADER:
        raise ValueError(f"unexpected CSV header: {lines[0]!r}")
    rows = []
    for ln in lines[1:]:
        solver, k, sigma, trials, succ, rate, hw = ln.split(",")
        rows.append({
            "solver": solver, "K": int(k), "sigma_w": float(sigma),
            "trials": int(trials), "successes": int(succ),
            "success_rate": float(rate), "ci_halfwidth": float(hw),
        })
    return rows


_SVG_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
               "#e377c2", "#17becf")


def _svg_text(result):
    """Success rate vs K polylines, one per (solver, sigma_w), as standalone SVG."""
    width, height = 640, 440
    ml, mr, mt, mb = 60, 160, 20, 50
    pw, ph = width - ml - mr, height - mt - mb
    ks = sorted(set(c.k for c in result.cells))
    kmin, kmax = (min(ks), max(ks)) if ks else (0, 1)
    span = max(kmax - kmin, 1)

    def xpix(k):
        return ml + pw * (k - kmin) / span

    def ypix(rate):
        return mt + ph * (1.0 - rate)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{ml}" y1="{mt + ph}" x2="{ml + pw}" y2="{mt + ph}" stroke="black"/>',
        f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{mt + ph}" stroke="black"/>',
    ]
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        y = ypix(frac)
        parts.append(f'<line x1="{ml - 4}" y1="{y:.1f}" x2="{ml}" y2="{y:.1f}" stroke="black"/>')
        parts.append(f'<text x="{ml - 8}" y="{y + 4:.1f}" font-size="11" '
                     f'text-anchor="end">{frac:g}</text>')
    for k in ks:
        x = xpix(k)
        parts.append(f'<line x1="{x:.1f}" y1="{mt + ph}" x2="{x:.1f}" y2="{mt + ph + 4}" '
                     f'stroke="black"/>')
        parts.append(f'<text x="{x:.1f}" y="{mt + ph + 18}" font-size="11" '
                     f'text-anchor="middle">{k}</text>')
    parts.append(f'<text x="{ml + pw / 2:.1f}" y="{height - 12}" font-size="13" '
                 f'text-anchor="middle">block sparsity K</text>')
    parts.append(f'<text x="16" y="{mt + ph / 2:.1f}" font-size="13" text-anchor="middle" '
                 f'transform="rotate(-90 16 {mt + ph / 2:.1f})">success rate</text>')

    series = []
    for solver in dict.fromkeys(c.solver for c in result.cells):
        for sigma in dict.fromkeys(c.sigma_w for c in result.cells if c.solver == solver):
            pts = sorted((c.k, c.success_rate) for c in result.cells
                         if c.solver == solver and c.sigma_w == sigma)
            series.append((f"{solver}, sigma={sigma:g}", pts))
    for idx, (label, pts) in enumerate(series):
        color = _SVG_COLORS[idx % len(_SVG_COLORS)]
        coords = " ".join(f"{xpix(k):.1f},{ypix(r):.1f}" for k, r in pts)
        parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" '
                     f'stroke-width="1.8"/>')
        for k, r in pts:
            parts.append(f'<circle cx="{xpix(k):.1f}" cy="{ypix(r):.1f}" r="2.5" '
                         f'fill="{color}"/>')
        ly = mt + 16 + 18 * idx
        lx = ml + pw + 12
        parts.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}" '
                     f'stroke="{color}" stroke-width="1.8"/>')
        parts.append(f'<text x="{lx + 28}" y="{ly}" font-size="11">{label}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_results(result, fmt, path):
    """Write a SweepResult as csv, json, or svg.  Returns the path."""
    if fmt == "csv":
        text = _csv_text(result)
    elif fmt == "json":
        text = json.dumps(result.to_dict(), indent=2) + "\n"
    elif fmt == "svg":
        text = _svg_text(result)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    with open(path, "w") as fh:
        fh.write(text)
    return path
