"""Logarithmic potentials, the dynamical Green's function and the Robin constant.

Green's function values are computed pointwise over every word of length n
without materialising composed coefficients. Once an orbit value exceeds
1e20 in modulus it is carried as log|w| and advanced with
log|g(w)| ~ log|Λ(g)| + deg(g) log|w|; the neglected term is O(|w|^-1).
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from . import rng
from .backward import EmpiricalMeasure, SampleConfig, iterate_pullback
from .exceptions import EnumerationCapError
from .semigroup import LOG_ESCAPE, WORD_CAP, GeneratorSet, check_main_condition

BLOCK_ELEMENTS = 1 << 21


@dataclass(frozen=True)
class GridField:
    origin: complex
    spacing: float
    rows: int
    cols: int
    values: np.ndarray
    mask: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.spacing <= 0:
            raise ValueError("grid spacing must be positive")
        if self.rows < 1 or self.cols < 1:
            raise ValueError("grid needs at least one row and column")
        v = np.asarray(self.values, dtype=float).reshape(self.rows * self.cols)
        if v.size != self.rows * self.cols:
            raise ValueError("values do not match the grid shape")
        object.__setattr__(self, "values", v)
        m = np.zeros(v.size, dtype=bool) if self.mask is None else np.asarray(self.mask, bool).ravel()
        object.__setattr__(self, "mask", m)

    @staticmethod
    def nodes(origin: complex, spacing: float, rows: int, cols: int) -> np.ndarray:
        """Row-major node coordinates; row r has imaginary part origin.imag + r*spacing."""
        ii, jj = np.meshgrid(np.arange(rows), np.arange(cols), indexing="ij")
        return (complex(origin) + spacing * (jj + 1j * ii)).ravel()

    @property
    def points(self) -> np.ndarray:
        return self.nodes(self.origin, self.spacing, self.rows, self.cols)

    def as_array(self) -> np.ndarray:
        out = self.values.copy()
        out[self.mask] = np.nan
        return out.reshape(self.rows, self.cols)


@dataclass(frozen=True)
class GridSpec:
    origin: complex
    spacing: float
    rows: int
    cols: int

    @property
    def points(self) -> np.ndarray:
        return GridField.nodes(self.origin, self.spacing, self.rows, self.cols)

    @classmethod
    def square(cls, lo: float, hi: float, n: int) -> "GridSpec":
        """n x n nodes covering [lo, hi]^2 inclusive."""
        h = (hi - lo) / (n - 1)
        return cls(complex(lo, lo), h, n, n)


# -- potentials and energy --------------------------------------------------

def log_potential(mu: EmpiricalMeasure, z):
    """Σ w_i log(1/|z - t_i|); +inf where z hits an atom."""
    zs = np.atleast_1d(np.asarray(z, dtype=np.complex128))
    out = np.empty(zs.shape, dtype=float)
    chunk = max(1, BLOCK_ELEMENTS // max(1, len(mu)))
    with np.errstate(divide="ignore"):
        for s in range(0, zs.size, chunk):
            d = np.abs(zs.ravel()[s:s + chunk, None] - mu.locations[None, :])
            out.ravel()[s:s + chunk] = -(np.log(d) @ mu.weights)
    return out if np.ndim(z) else float(out[0])


def energy(mu: EmpiricalMeasure) -> float:
    """Discrete logarithmic energy with the diagonal omitted."""
    if len(mu) < 2:
        raise ValueError("energy needs at least two atoms")
    x, w = mu.locations, mu.weights
    total = 0.0
    chunk = max(1, BLOCK_ELEMENTS // x.size)
    with np.errstate(divide="ignore"):
        for s in range(0, x.size, chunk):
            d = np.abs(x[s:s + chunk, None] - x[None, :])
            idx = np.arange(s, min(s + chunk, x.size))
            d[idx - s, idx] = 1.0
            if (d == 0).any():
                return math.inf
            total += float(w[s:s + chunk] @ (-np.log(d)) @ w)
    return total


# -- Green's function -------------------------------------------------------

def _advance(g, w, lg):
    """Apply one generator to a (values, log-modulus) state."""
    lam = math.log(abs(g.leading))
    d = g.degree
    esc = np.isfinite(lg)
    new_lg = np.where(esc, lam + d * lg, -np.inf)
    live = ~esc
    new_w = np.zeros_like(w)
    if live.any():
        v = g(w[live])
        new_w[live] = v
        big = np.abs(v) > math.exp(LOG_ESCAPE)
        if big.any():
            tmp = new_lg[live]
            tmp[big] = np.log(np.abs(v[big]))
            new_lg[live] = tmp
    return new_w, new_lg


def _final_log(w, lg, a):
    with np.errstate(divide="ignore"):
        return np.where(np.isfinite(lg), lg, np.log(np.abs(w - a)))


def _word_log_sum(G: GeneratorSet, w, lg, a, remaining):
    """Sum over all continuations of length ``remaining`` of log|word(z) - a|.

    ``w``/``lg`` have shape (B, P); returns shape (P,). Splits the batch in
    halves when the next expansion would exceed the block budget, which also
    fixes the reduction tree.
    """
    if remaining == 0:
        return _final_log(w, lg, a).sum(axis=0)
    B, P = w.shape
    if B > 1 and B * G.N * P > BLOCK_ELEMENTS:
        h = B // 2
        return (_word_log_sum(G, w[:h], lg[:h], a, remaining)
                + _word_log_sum(G, w[h:], lg[h:], a, remaining))
    ws, ls = [], []
    for g in G.gens:
        nw, nl = _advance(g, w, lg)
        ws.append(nw)
        ls.append(nl)
    return _word_log_sum(G, np.concatenate(ws), np.concatenate(ls), a, remaining - 1)


def green_partial(G: GeneratorSet, a: complex, z, n: int, cap: int = WORD_CAP, threads: int = 1):
    """D^-n Σ_{l(g)=n} log|g(z) - a| over all words of length n; -inf at exact preimages."""
    if G.N ** n > cap:
        raise EnumerationCapError(f"{G.N}^{n} words exceed the enumeration cap {cap}")
    zs = np.atleast_1d(np.asarray(z, dtype=np.complex128)).ravel()
    lg0 = np.full(zs.size, -np.inf)
    big = np.abs(zs) > math.exp(LOG_ESCAPE)
    lg0[big] = np.log(np.abs(zs[big]))
    chunk = 1024
    spans = [(s, min(s + chunk, zs.size)) for s in range(0, zs.size, chunk)]

    def job(span):
        s, e = span
        with np.errstate(over="ignore", invalid="ignore"):
            return _word_log_sum(G, zs[None, s:e], lg0[None, s:e], a, n)

    if threads > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(job, spans))
    else:
        parts = [job(sp) for sp in spans]
    out = np.concatenate(parts) / float(G.D) ** n
    return out.reshape(np.shape(z)) if np.ndim(z) else float(out[0])


def robin_constant(G: GeneratorSet) -> float:
    """(D - N)^-1 log|Λ(g_1)...Λ(g_N)|."""
    return math.fsum(math.log(abs(g.leading)) for g in G.gens) / (G.D - G.N)


def robin_partial(G: GeneratorSet, n: int, method: str = "closed", cap: int = WORD_CAP) -> float:
    """D^-n log Π_{l(g)=n} |Λ(g)|, by enumerating all words or in closed form.

    The enumeration works with log|Λ| directly: prepending an outer factor h
    maps log|Λ(w)| to log|Λ(h)| + deg(h) log|Λ(w)|.
    """
    if method == "closed":
        return (1 - (G.N / G.D) ** n) * robin_constant(G)
    if method != "direct":
        raise ValueError(f"unknown method {method!r}")
    if G.N ** n > cap:
        raise EnumerationCapError(f"{G.N}^{n} words exceed the enumeration cap {cap}")
    logs = np.array([math.log(abs(g.leading)) for g in G.gens])
    degs = np.array(G.degrees, dtype=float)
    acc = np.zeros(1)
    for _ in range(n):
        acc = (logs[:, None] + degs[:, None] * acc[None, :]).ravel()
    return math.fsum(acc) / float(G.D) ** n


# -- identity check ---------------------------------------------------------

@dataclass(frozen=True)
class IdentityReport:
    depth: int
    sample_count: int
    grid: GridField
    robin_F: float
    max_residual: float
    mean_residual: float
    finite_fraction: float
    evaluated_nodes: int
    main_condition: bool
    main_condition_explanation: str
    base_point: complex
    measure_base_point: complex
    positive_fraction: float


def _independent_base(G, seed):
    from .semigroup import escape_radius

    R = escape_radius(G).R_esc
    theta = rng.stream(seed, rng.TAG_GREEN_BASE).random() * 2 * np.pi
    return complex(2 * R * np.cos(theta), 2 * R * np.sin(theta))


def verify_identity(G: GeneratorSet, cfg: SampleConfig, grid: GridSpec, region=None,
                    robin_offset: float = 0.0, julia_points=None, green_base: Optional[complex] = None,
                    eps_J: float = 1e-3) -> IdentityReport:
    """Residual |U^μ + G_n - F| over the grid.

    μ comes from ``cfg`` (stochastic walks); the Green's function uses a
    separately drawn base point. Nodes within one grid spacing of a sampled
    atom are masked, as are nodes rejected by ``region`` (a boolean
    callable on node coordinates).
    """
    mc = check_main_condition(G, julia_points if julia_points is not None else iterate_pullback(
        G, SampleConfig(cfg.base_point, min(cfg.depth, 12), "stochastic", 2000, cfg.seed, rng.TAG_JULIA)
    ).locations, eps_J)
    if not mc.holds:
        warnings.warn(f"main condition fails: {mc.explanation}", RuntimeWarning, stacklevel=2)
    mu = iterate_pullback(G, cfg)
    a_green = green_base if green_base is not None else _independent_base(G, cfg.seed)
    pts = grid.points
    tree = cKDTree(np.c_[mu.locations.real, mu.locations.imag])
    near, _ = tree.query(np.c_[pts.real, pts.imag], k=1)
    mask = near <= grid.spacing
    if region is not None:
        mask |= ~np.asarray(region(pts), dtype=bool)
    F = robin_constant(G) + robin_offset
    vals = np.full(pts.size, np.nan)
    live = ~mask
    U = log_potential(mu, pts[live])
    Gn = green_partial(G, a_green, pts[live], cfg.depth, threads=cfg.threads)
    signed = U + Gn - F
    vals[live] = np.abs(signed)
    finite = np.isfinite(vals[live])
    fin_vals = vals[live][finite]
    field = GridField(grid.origin, grid.spacing, grid.rows, grid.cols, vals, mask | ~np.isfinite(vals))
    return IdentityReport(
        depth=cfg.depth,
        sample_count=cfg.sample_count,
        grid=field,
        robin_F=F,
        max_residual=float(fin_vals.max()) if fin_vals.size else math.inf,
        mean_residual=float(fin_vals.mean()) if fin_vals.size else math.inf,
        finite_fraction=float(finite.mean()) if finite.size else 0.0,
        evaluated_nodes=int(live.sum()),
        main_condition=mc.holds,
        main_condition_explanation=mc.explanation,
        base_point=a_green,
        measure_base_point=complex(cfg.base_point),
        positive_fraction=float((signed[np.isfinite(signed)] > 0).mean()) if np.isfinite(signed).any() else 0.0,
    )
