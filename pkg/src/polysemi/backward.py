"""Backward iteration under the correspondence of a generator set.

Exhaustive pullbacks enumerate every multiplicity-counted preimage leaf;
stochastic walks draw leaves uniformly by choosing, at each level, one of
the D "slots" (generator i, root j) with equal probability, which weights
generator i by d_i / D and each of its roots by 1 / d_i.

Walk randomness is indexed from the leaf end: the step producing the leaf
consumes uniform column 0, the one before it column 1, and so on, and the
roots of each generator are labelled by angle about their centroid. Walks of
different depths drawn from the same seed therefore share their final
branch choices, which couples samples across depths (common random numbers)
without changing the law of any single sample.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from . import rng
from .exceptions import EnumerationCapError, SolverError
from .poly import cluster_rows, solve_batch
from .semigroup import WORD_CAP, GeneratorSet, escape_radius


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Weighted point cloud; weights are nonnegative."""

    locations: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        loc = np.asarray(self.locations, dtype=np.complex128).ravel()
        w = np.asarray(self.weights, dtype=float).ravel()
        if loc.shape != w.shape:
            raise ValueError("locations and weights differ in length")
        if (w < 0).any():
            raise ValueError("negative weight")
        object.__setattr__(self, "locations", loc)
        object.__setattr__(self, "weights", w)

    @classmethod
    def dirac(cls, a: complex) -> "EmpiricalMeasure":
        return cls(np.array([a], dtype=np.complex128), np.array([1.0]))

    @classmethod
    def uniform(cls, points) -> "EmpiricalMeasure":
        pts = np.asarray(points, dtype=np.complex128).ravel()
        return cls(pts, np.full(pts.size, 1.0 / pts.size))

    @property
    def total_mass(self) -> float:
        return float(math.fsum(self.weights))

    def __len__(self):
        return self.locations.size

    def normalized(self) -> "EmpiricalMeasure":
        return EmpiricalMeasure(self.locations, self.weights / self.total_mass)

    def merged(self) -> "EmpiricalMeasure":
        """Combine atoms at exactly equal locations, keeping first-seen order."""
        _, first, inv = np.unique(self.locations, return_index=True, return_inverse=True)
        w = np.zeros(first.size)
        np.add.at(w, inv, self.weights)
        order = np.argsort(first, kind="stable")
        return EmpiricalMeasure(self.locations[first[order]], w[order])

    def mass_in_disc(self, z: complex, r: float) -> float:
        return float(self.weights[np.abs(self.locations - z) < r].sum())


@dataclass(frozen=True)
class SampleConfig:
    base_point: complex
    depth: int
    mode: str = "stochastic"
    sample_count: int = 1000
    seed: int = 0
    tag: int = rng.TAG_WALK
    threads: int = 1
    exact_tail: int = 0
    exact_head: int = 0

    def __post_init__(self):
        if self.mode not in ("exhaustive", "stochastic"):
            raise ValueError(f"unknown sampling mode {self.mode!r}")
        if self.depth < 0:
            raise ValueError("depth must be nonnegative")
        if not np.isfinite(complex(self.base_point)):
            raise ValueError("base point must be finite")
        if self.mode == "stochastic" and self.sample_count < 1:
            raise ValueError("sample_count must be positive")
        if self.exact_tail < 0 or self.exact_head < 0:
            raise ValueError("exact_head and exact_tail must be nonnegative")


def default_base_point(G: GeneratorSet, seed: int) -> complex:
    """Uniform point on |z| = 2 R_esc drawn from the base-point stream."""
    R = escape_radius(G).R_esc
    theta = rng.stream(seed, rng.TAG_BASE_POINT).random() * 2 * np.pi
    return complex(2 * R * np.cos(theta), 2 * R * np.sin(theta))


def pullback_dirac(G: GeneratorSet, a: complex) -> EmpiricalMeasure:
    """Unnormalised pullback of δ_a: total mass D, multiplicities as weights."""
    return _pullback_level(G, np.array([a], dtype=np.complex128), np.array([1.0]))


def _pullback_level(G, locs, weights):
    out_l, out_w = [], []
    for g in G.gens:
        z = cluster_rows(solve_batch(g, locs))
        for row in range(z.shape[0]):
            vals, counts = _row_multiset(z[row])
            out_l.append(vals)
            out_w.append(weights[row] * counts)
    return EmpiricalMeasure(np.concatenate(out_l), np.concatenate(out_w))


def _row_multiset(row):
    vals, counts = [], []
    for v in row:
        for j, u in enumerate(vals):
            if u == v:
                counts[j] += 1
                break
        else:
            vals.append(v)
            counts.append(1)
    return np.asarray(vals, dtype=np.complex128), np.asarray(counts, dtype=float)


def exhaustive_leaves(G: GeneratorSet, a: complex, n: int, cap: int = WORD_CAP) -> EmpiricalMeasure:
    """All leaves of the n-fold pullback of δ_a, unnormalised (mass D^n)."""
    if G.D ** n > cap:
        raise EnumerationCapError(f"D^n = {G.D}^{n} leaves exceed the enumeration cap {cap}")
    mu = EmpiricalMeasure.dirac(a)
    for _ in range(n):
        mu = _pullback_level(G, mu.locations, mu.weights)
    return mu


def _walk_chunk(G: GeneratorSet, a: complex, n: int, seed: int, tag: int, start: int, stop: int,
                keep_from: Optional[int] = None):
    """Run walks start..stop-1; return leaves (and the trail past ``keep_from``).

    ``a`` is the common start point or an array holding one per walk.
    """
    u = rng.uniform_block(seed, tag, start, stop, max(n, 1))
    cum = np.concatenate([[0], np.cumsum(G.degrees)])
    D = G.D
    if np.ndim(a):
        w = np.asarray(a, dtype=np.complex128)[start:stop].copy()
    else:
        w = np.full(stop - start, a, dtype=np.complex128)
    trail = []
    for level in range(n):
        slot = np.minimum((u[:, n - 1 - level] * D).astype(np.int64), D - 1)
        gen = np.searchsorted(cum, slot, side="right") - 1
        col = slot - cum[gen]
        nxt = np.empty_like(w)
        for i, g in enumerate(G.gens):
            rows = np.flatnonzero(gen == i)
            if rows.size == 0:
                continue
            z = _label_roots(g, solve_batch(g, w[rows]))
            nxt[rows] = z[np.arange(rows.size), col[rows]]
        if not np.all(np.isfinite(nxt)):
            raise SolverError("backward walk produced a non-finite leaf", residual=float("inf"))
        w = nxt
        if keep_from is not None and level + 1 > keep_from:
            trail.append(w.copy())
    return w, trail


def _label_roots(g, z):
    """Order each row of roots by angle in [0, 2π) about the root centroid."""
    if z.shape[1] == 1:
        return z
    c = g.coeffs
    centroid = -c[-2] / (g.degree * c[-1])
    ang = np.mod(np.angle(z - centroid), 2 * np.pi)
    return np.take_along_axis(z, np.argsort(ang, axis=1, kind="stable"), axis=1)


def _run_walks(G, a, n, m, seed, tag, threads, keep_from=None):
    blocks = [(s, min(s + rng.BLOCK, m)) for s in range(0, m, rng.BLOCK)]
    job = lambda se: _walk_chunk(G, a, n, seed, tag, se[0], se[1], keep_from)
    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(job, blocks))
    else:
        parts = [job(b) for b in blocks]
    return parts


def iterate_pullback(G: GeneratorSet, cfg: SampleConfig) -> EmpiricalMeasure:
    """Normalised n-fold pullback of δ_a, exactly or by backward walks.

    Plain stochastic mode returns m i.i.d. leaves. Two variance reductions
    can be switched on; both keep the estimator unbiased.

    ``exact_tail = L`` stops the walks L levels short and enumerates every
    leaf below each walk end with weight D^-L.

    ``exact_head = K`` enumerates the first K levels from a and spreads the
    walks evenly over the D^K multiplicity-counted head leaves (stratified
    sampling). The early branch choices dominate the spread of U^μ inside
    bounded Fatou components, where later levels are damped.

    The walk count is ceil(m / D^(K+L)) per head leaf, so ``sample_count``
    still approximates the number of atoms.
    """
    if cfg.depth == 0:
        return EmpiricalMeasure.dirac(cfg.base_point)
    if cfg.mode == "exhaustive":
        mu = exhaustive_leaves(G, cfg.base_point, cfg.depth)
        return EmpiricalMeasure(mu.locations, mu.weights / float(G.D) ** cfg.depth)
    L = min(cfg.exact_tail, cfg.depth)
    K = min(cfg.exact_head, cfg.depth - L)
    if G.D ** L > WORD_CAP or G.D ** K > WORD_CAP:
        raise EnumerationCapError("exact head or tail exceeds the enumeration cap")
    per = -(-cfg.sample_count // G.D ** (K + L))
    if K:
        head = exhaustive_leaves(G, cfg.base_point, K)
        leaves = np.repeat(head.locations, np.rint(head.weights).astype(np.int64))
        start = np.tile(leaves, per)
    else:
        start = cfg.base_point
    parts = _run_walks(G, start, cfg.depth - L - K, per * G.D ** K, cfg.seed, cfg.tag, cfg.threads)
    mu = EmpiricalMeasure.uniform(np.concatenate([p[0] for p in parts]))
    # conditional expectation over the last L levels: every leaf below each walk end
    for _ in range(L):
        mu = _pullback_level(G, mu.locations, mu.weights)
    return EmpiricalMeasure(mu.locations, mu.weights / float(G.D) ** L)


def julia_sample(G: GeneratorSet, cfg: SampleConfig, burn_in: int = 0) -> np.ndarray:
    """Points visited by backward walks after the first ``burn_in`` levels."""
    if cfg.mode != "stochastic":
        raise ValueError("julia_sample needs stochastic mode")
    if burn_in >= cfg.depth:
        raise ValueError("burn_in must be smaller than the depth")
    parts = _run_walks(G, cfg.base_point, cfg.depth, cfg.sample_count, cfg.seed, cfg.tag, cfg.threads,
                       keep_from=burn_in)
    # walk-major order: each walk's kept levels are contiguous
    return np.concatenate([np.stack(p[1], axis=1).ravel() for p in parts])


# -- disc counts ------------------------------------------------------------

def disc_count(G: GeneratorSet, a: complex, n: int, z: complex, r: float,
               leaves: Optional[EmpiricalMeasure] = None) -> int:
    """Multiplicity-counted leaves of the n-fold pullback strictly inside D(z, r)."""
    mu = leaves if leaves is not None else exhaustive_leaves(G, a, n)
    return int(round(mu.weights[np.abs(mu.locations - z) < r].sum()))


def card_bound_rhs(D: int, N: int, kappa: int, n: int, nu: int) -> float:
    if min(D, N, kappa, nu) <= 0 or n < 0 or D <= N:
        raise ValueError("card bound needs positive parameters with D > N")
    first = D ** (n - nu / kappa + 1) * N ** (nu / kappa - 1)
    return max(first, (D - 0.5) ** n)


def nu_for_radius(r: float, r0: float, M_J: float) -> int:
    """The ν >= 1 with r in (r0 M^{-2ν}, r0 M^{-2(ν-1)}]; requires 0 < r <= r0."""
    if not 0 < r <= r0:
        raise ValueError("radius must lie in (0, r0]")
    nu = max(1, math.ceil(math.log(r0 / r) / (2 * math.log(M_J))))
    # guard the interval ends against rounding
    while r <= r0 * M_J ** (-2 * nu):
        nu += 1
    while nu > 1 and r > r0 * M_J ** (-2 * (nu - 1)):
        nu -= 1
    return nu


@dataclass(frozen=True)
class CardBoundReport:
    r0: Optional[float]
    kappa: int
    M_J: float
    checks: int
    violations: int
    per_r0: tuple = field(default_factory=tuple)
    worst: Optional[dict] = None

    @property
    def passed(self) -> bool:
        return self.r0 is not None and self.violations == 0


def calibrate_card_bound(G: GeneratorSet, a: complex, n_max: int, centers, radii, kappa: int, M_J: float,
                         r0_candidates: Sequence[float] = tuple(2.0 ** -k for k in range(11))) -> CardBoundReport:
    """Largest candidate r0 for which every tested disc count obeys the bound.

    Counts are checked for n = 1..n_max, every centre, and every radius
    r <= r0. Candidates are tried from largest to smallest; the first with
    zero violations is reported.
    """
    centers = np.asarray(centers, dtype=np.complex128).ravel()
    radii = np.asarray(sorted(radii, reverse=True), dtype=float)
    counts = {}
    for n in range(1, n_max + 1):
        mu = exhaustive_leaves(G, a, n)
        tree = cKDTree(np.c_[mu.locations.real, mu.locations.imag])
        c = np.empty((centers.size, radii.size))
        pts = np.c_[centers.real, centers.imag]
        for j, r in enumerate(radii):
            # open disc: shrink by one ulp-ish factor
            idx = tree.query_ball_point(pts, r * (1 - 1e-12))
            c[:, j] = [mu.weights[i].sum() for i in idx]
        counts[n] = np.rint(c)
    summary = []
    chosen = None
    worst = None
    checks_at_chosen = 0
    for r0 in sorted(r0_candidates, reverse=True):
        viol = 0
        checks = 0
        w_local = None
        for n, c in counts.items():
            for j, r in enumerate(radii):
                if r > r0:
                    continue
                nu = nu_for_radius(r, r0, M_J)
                rhs = card_bound_rhs(G.D, G.N, kappa, n, nu)
                bad = c[:, j] > rhs
                checks += c.shape[0]
                if bad.any():
                    viol += int(bad.sum())
                    k = int(np.argmax(c[:, j]))
                    w_local = {"n": n, "r": float(r), "z": complex(centers[k]), "count": float(c[k, j]),
                               "bound": float(rhs)}
        summary.append((float(r0), checks, viol))
        if viol == 0 and chosen is None:
            chosen, checks_at_chosen = r0, checks
        if worst is None and w_local is not None:
            worst = w_local
    if chosen is None:
        return CardBoundReport(None, kappa, M_J, summary[-1][1], summary[-1][2], tuple(summary), worst)
    return CardBoundReport(float(chosen), kappa, M_J, checks_at_chosen, 0, tuple(summary), worst)


# -- escape -----------------------------------------------------------------

def escapes(G: GeneratorSet, z: complex, max_depth: int = 32, max_active: int = 1 << 20) -> bool:
    """Whether every word of some length n <= max_depth sends z beyond R_esc.

    Branches that have left the escape disc are pruned since they cannot
    return. Exhausting the depth or the active-set budget returns False.
    """
    R = escape_radius(G).R_esc
    active = np.array([z], dtype=np.complex128)
    if abs(z) > R:
        return True
    for _ in range(max_depth):
        with np.errstate(over="ignore", invalid="ignore"):
            nxt = np.concatenate([g(active) for g in G.gens])
        active = nxt[np.isfinite(nxt) & (np.abs(nxt) <= R)]
        if active.size == 0:
            return True
        active = np.unique(np.round(active, 12))
        if active.size > max_active:
            return False
    return False
