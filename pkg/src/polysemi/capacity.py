"""Capacity, diameter and regularity diagnostics on sampled Julia sets."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial import ConvexHull, QhullError, cKDTree

from .backward import EmpiricalMeasure
from .exceptions import InsufficientDataError
from .potential import robin_constant
from .semigroup import GeneratorSet, Word, check_main_condition, escape_radius

DIAMETER_CAP = 1 << 14


def leja_points(points, m: int) -> np.ndarray:
    """Greedy Leja selection of m points from a finite cloud.

    Starts from the point of largest modulus; each later point maximises the
    sum of log distances to those already chosen. Ties go to the lowest index.
    """
    pts = np.asarray(points, dtype=np.complex128).ravel()
    if m < 2 or pts.size < m:
        raise InsufficientDataError(f"need at least m = {m} >= 2 points, got {pts.size}")
    chosen = np.empty(m, dtype=np.complex128)
    k = int(np.argmax(np.abs(pts)))
    chosen[0] = pts[k]
    score = np.zeros(pts.size)
    with np.errstate(divide="ignore"):
        for i in range(1, m):
            score += np.log(np.abs(pts - chosen[i - 1]))
            k = int(np.argmax(score))
            chosen[i] = pts[k]
    return chosen


def discrete_transfinite_diameter(x: np.ndarray) -> float:
    """(Π_{i<j} |x_i - x_j|)^(2 / (m(m-1))), accumulated in logs."""
    m = x.size
    d = np.abs(x[:, None] - x[None, :])
    iu = np.triu_indices(m, 1)
    with np.errstate(divide="ignore"):
        s = np.log(d[iu]).sum()
    return float(np.exp(2.0 * s / (m * (m - 1))))


def capacity_leja(points, m: int) -> float:
    return discrete_transfinite_diameter(leja_points(points, m))


def f_functional(points, q_values, m: int) -> float:
    """log cap(K) - mean of Q over the m Leja points of K."""
    q = np.asarray(q_values, dtype=float).ravel()
    if q.size != m:
        raise ValueError(f"{q.size} field values for {m} Leja points")
    return math.log(capacity_leja(points, m)) - float(q.mean())


def diameter(points, cap: int = DIAMETER_CAP, seed: int = 0) -> float:
    """Largest pairwise distance (exact, via the convex hull)."""
    pts = np.asarray(points, dtype=np.complex128).ravel()
    if pts.size < 2:
        return 0.0
    if pts.size > cap:
        pts = pts[np.random.default_rng(seed).choice(pts.size, cap, replace=False)]
    xy = np.c_[pts.real, pts.imag]
    try:
        xy = xy[ConvexHull(xy).vertices]
    except (QhullError, ValueError):
        pass
    z = xy[:, 0] + 1j * xy[:, 1]
    best = 0.0
    for s in range(0, z.size, 2048):
        best = max(best, float(np.abs(z[s:s + 2048, None] - z[None, :]).max()))
    return best


# -- orbit witnesses --------------------------------------------------------

def orbit_witness(G: GeneratorSet, z0: complex, max_len: int = 12, max_nodes: int = 1 << 18) -> Optional[Word]:
    """Shortest word sending z0 beyond the escape radius, if one exists within max_len."""
    R = escape_radius(G).R_esc
    if abs(z0) > R:
        return Word(())
    queue = deque([((), complex(z0))])
    seen = 0
    while queue:
        idx, w = queue.popleft()
        if len(idx) >= max_len:
            continue
        for i, g in enumerate(G.gens):
            v = g(w)
            word = (i,) + idx
            if not np.isfinite(v) or abs(v) > R:
                return Word(word)
            seen += 1
            if seen > max_nodes:
                return None
            queue.append((word, v))
    return None


def forward_orbit(G: GeneratorSet, z0: complex, budget: int, bound: float) -> np.ndarray:
    """Breadth-first forward orbit points with |w| <= bound, at most ``budget`` of them."""
    out = [complex(z0)]
    frontier = np.array([z0], dtype=np.complex128)
    while frontier.size and len(out) < budget:
        with np.errstate(over="ignore", invalid="ignore"):
            nxt = np.concatenate([g(frontier) for g in G.gens])
        nxt = nxt[np.isfinite(nxt) & (np.abs(nxt) <= bound)]
        nxt = np.unique(np.round(nxt, 10))
        out.extend(nxt[: budget - len(out)].tolist())
        frontier = nxt
    return np.asarray(out[:budget], dtype=np.complex128)


def largest_empty_disc(points, center: complex, half_width: float, resolution: int = 64):
    """Grid node in the box farthest from every point, with that distance."""
    pts = np.asarray(points, dtype=np.complex128).ravel()
    t = np.linspace(-half_width, half_width, resolution)
    xx, yy = np.meshgrid(t, t)
    cand = complex(center) + (xx + 1j * yy).ravel()
    tree = cKDTree(np.c_[pts.real, pts.imag])
    dist, _ = tree.query(np.c_[cand.real, cand.imag], k=1)
    k = int(np.argmax(dist))
    return complex(cand[k]), float(dist[k]), float(t[1] - t[0])


def nondense_witness(G: GeneratorSet, z0: complex, budget: int = 4096, resolution: int = 64):
    """A disc (centre, radius) missing every sampled orbit point, or None.

    The orbit is sampled breadth-first up to ``budget`` points inside twice
    the escape radius; the candidate is the grid node farthest from the
    sample, returned with half its clearance. A clearance below two grid
    steps is treated as no witness.
    """
    if budget <= 0:
        return None
    R = escape_radius(G).R_esc
    orbit = forward_orbit(G, z0, budget, 2 * R)
    c, dist, step = largest_empty_disc(orbit, 0j, 2 * R, resolution)
    if dist < 2 * step:
        return None
    return c, dist / 2


# -- regularity diagnostics ---------------------------------------------------

@dataclass(frozen=True)
class HolderFit:
    alpha: float
    slopes: np.ndarray
    radii: np.ndarray

    @property
    def continuity_ok(self) -> bool:
        return self.alpha > 0


def holder_mass_estimate(mu: EmpiricalMeasure, centers, radii=None, min_count: int = 10) -> HolderFit:
    """Least-squares slope of log μ(D(z, r)) against log r, minimised over centres.

    Radii where fewer than ``min_count`` atoms fall in the disc are ignored
    for that centre; centres with fewer than two usable radii are skipped.
    """
    if len(mu) < 1000:
        raise InsufficientDataError(f"holder fit needs >= 1000 atoms, got {len(mu)}")
    if radii is None:
        radii = 2.0 ** -np.arange(2, 13)
    radii = np.sort(np.asarray(radii, dtype=float))
    c = np.asarray(centers, dtype=np.complex128).ravel()
    tree = cKDTree(np.c_[mu.locations.real, mu.locations.imag])
    xy = np.c_[c.real, c.imag]
    mass = np.zeros((c.size, radii.size))
    count = np.zeros((c.size, radii.size), dtype=int)
    for j, r in enumerate(radii):
        for i, idx in enumerate(tree.query_ball_point(xy, r * (1 - 1e-12))):
            count[i, j] = len(idx)
            mass[i, j] = mu.weights[idx].sum()
    slopes = np.full(c.size, np.nan)
    for i in range(c.size):
        ok = count[i] >= min_count
        if ok.sum() >= 2:
            slopes[i] = np.polyfit(np.log(radii[ok]), np.log(mass[i, ok]), 1)[0]
    valid = slopes[np.isfinite(slopes)]
    alpha = float(valid.min()) if valid.size else 0.0
    return HolderFit(alpha, slopes, radii)


def uniform_perfectness_check(points, c: float = 0.5, sweeps: int = 24) -> bool:
    """Annulus test {c r <= |w - z| <= r} around every sample over a log sweep of r.

    The sweep runs from a resolution floor, set by the 99th percentile of
    nearest-neighbour distances, up to the sample diameter.
    """
    pts = np.asarray(points, dtype=np.complex128).ravel()
    if pts.size < 2:
        raise InsufficientDataError("need at least two points")
    if not 0 < c < 1:
        raise ValueError("c must lie in (0, 1)")
    xy = np.c_[pts.real, pts.imag]
    tree = cKDTree(xy)
    nn, _ = tree.query(xy, k=2)
    floor = 2 * np.quantile(nn[:, 1], 0.99) / (1 - c)
    diam = diameter(pts)
    if floor >= diam:
        return False
    for r in np.geomspace(floor, diam, sweeps):
        outer = tree.query_ball_point(xy, r, return_length=True)
        inner = tree.query_ball_point(xy, c * r * (1 - 1e-12), return_length=True)
        if (outer - inner <= 0).any():
            return False
    return True


# -- the capacity report ------------------------------------------------------

@dataclass(frozen=True)
class CapacityReport:
    robin_F: float
    lower_bound: float
    cap_estimate: float
    diam_estimate: float
    diam_lower: float
    orbit_unbounded: bool
    orbit_nondense: bool
    all_deg_ge_2: bool
    main_condition: bool
    cap_exceeds_bound: bool
    diam_exceeds_bound: bool
    hypotheses_hold: bool
    leja_count: int
    sample_size: int
    z0: complex
    orbit_word: Optional[tuple]
    nondense_disc: Optional[tuple]
    main_condition_explanation: str


def capacity_report(G: GeneratorSet, julia_points, z0: complex, leja_count: int = 256,
                    orbit_len: int = 12, orbit_budget: int = 4096, eps_J: float = 1e-3) -> CapacityReport:
    """Lower bounds from the Robin constant next to sampled capacity and diameter.

    The strict inequalities are evaluated and reported as observed values;
    ``hypotheses_hold`` records whether every flag needed for them is set.
    """
    pts = np.asarray(julia_points, dtype=np.complex128).ravel()
    F = robin_constant(G)
    lower = math.exp(-F)
    cap = capacity_leja(pts, min(leja_count, pts.size))
    diam = diameter(pts)
    word = orbit_witness(G, z0, orbit_len)
    disc = nondense_witness(G, z0, orbit_budget)
    all2 = all(d >= 2 for d in G.degrees)
    mc = check_main_condition(G, pts, eps_J)
    flags = word is not None and disc is not None and all2 and mc.holds
    return CapacityReport(
        robin_F=F,
        lower_bound=lower,
        cap_estimate=cap,
        diam_estimate=diam,
        diam_lower=2 * lower,
        orbit_unbounded=word is not None,
        orbit_nondense=disc is not None,
        all_deg_ge_2=all2,
        main_condition=mc.holds,
        cap_exceeds_bound=cap > lower,
        diam_exceeds_bound=diam > 2 * lower,
        hypotheses_hold=flags,
        leja_count=min(leja_count, pts.size),
        sample_size=pts.size,
        z0=complex(z0),
        orbit_word=None if word is None else tuple(word.indices),
        nondense_disc=None if disc is None else (disc[0], disc[1]),
        main_condition_explanation=mc.explanation,
    )
