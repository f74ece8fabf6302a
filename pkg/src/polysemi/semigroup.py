"""Finitely generated polynomial semigroups.

Validation of a generator list, word enumeration and pointwise word
evaluation, reduction to the minimal generating set, explicit escape radii,
critical-point bookkeeping and the hypothesis check used before any
potential-theoretic comparison.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np

from .exceptions import (
    DegenerateGeneratorError,
    EnumerationCapError,
    HypothesisViolationError,
    InadmissibleGeneratorError,
    MissingExpandingGeneratorError,
    UndecidedRedundancyError,
)
from .poly import ComplexPoly, compose, critical_points, derivative, local_order, roots

WORD_CAP = 10**7
LOG_ESCAPE = 46.0  # log(1e20): beyond this magnitude words are tracked as log|w|


@dataclass(frozen=True)
class GeneratorSet:
    gens: tuple

    @property
    def N(self) -> int:
        return len(self.gens)

    @property
    def degrees(self) -> tuple:
        return tuple(g.degree for g in self.gens)

    @property
    def D(self) -> int:
        return sum(self.degrees)

    @property
    def R(self) -> float:
        return self.D / self.N

    @property
    def leading(self) -> np.ndarray:
        return np.array([g.leading for g in self.gens])

    def __len__(self):
        return len(self.gens)

    def __iter__(self):
        return iter(self.gens)

    def __getitem__(self, i):
        return self.gens[i]


def validate(gens: Sequence) -> GeneratorSet:
    """Check the polynomial-semigroup conditions and freeze the list.

    Accepts ComplexPoly instances or raw ascending coefficient sequences.
    """
    if len(gens) == 0:
        raise InadmissibleGeneratorError("empty generator list")
    polys = tuple(g if isinstance(g, ComplexPoly) else ComplexPoly(g) for g in gens)
    for i, g in enumerate(polys):
        if g.degree < 1:
            raise DegenerateGeneratorError(f"generator {i} is constant")
        if g.degree == 1 and abs(g.leading) <= 1:
            raise InadmissibleGeneratorError(
                f"generator {i} is affine with |a| = {abs(g.leading):.6g} <= 1: "
                "infinity is not an attracting fixed point"
            )
    if max(g.degree for g in polys) < 2:
        raise MissingExpandingGeneratorError("no generator of degree >= 2")
    return GeneratorSet(polys)


@dataclass(frozen=True)
class Word:
    """Composition ``g[indices[0]] o ... o g[indices[-1]]``; the last index acts first."""

    indices: tuple = ()

    @property
    def length(self) -> int:
        return len(self.indices)

    def __len__(self):
        return len(self.indices)


def enumerate_words(G: GeneratorSet, n: int, cap: int = WORD_CAP) -> Iterator[Word]:
    if n < 0:
        raise ValueError("word length must be nonnegative")
    if G.N ** n > cap:
        raise EnumerationCapError(f"{G.N}^{n} words exceed the enumeration cap {cap}; use stochastic sampling")
    for idx in itertools.product(range(G.N), repeat=n):
        yield Word(idx)


def word_eval(G: GeneratorSet, w: Word, z):
    """Evaluate a word pointwise, innermost generator first.

    Overflow yields complex infinity rather than an exception.
    """
    out = np.asarray(z, dtype=np.complex128)
    with np.errstate(over="ignore", invalid="ignore"):
        for i in reversed(w.indices):
            out = G.gens[i](out)
            out = np.where(np.isfinite(out), out, complex(np.inf, np.inf))
    return out if np.ndim(out) else complex(out)


def word_poly(G: GeneratorSet, w: Word) -> ComplexPoly:
    """Materialised composition of a word (small degrees only)."""
    p = ComplexPoly([0, 1])
    for i in reversed(w.indices):
        p = compose(G.gens[i], p)
    return p


def word_leading(G: GeneratorSet, w: Word) -> complex:
    """Leading coefficient of a word from the generator data alone."""
    lam = 1.0 + 0j
    for i in reversed(w.indices):
        g = G.gens[i]
        lam = g.leading * lam ** g.degree
    return lam


# -- minimal generating set -------------------------------------------------

def representation_bound(G: GeneratorSet, target: ComplexPoly) -> int:
    """Word length n0 beyond which no word of G can equal ``target``.

    Every word of length >= n0 has a leading coefficient strictly larger in
    modulus than the target's, or uses more expanding factors than the
    target's degree allows.
    """
    degs = np.array(G.degrees)
    big = degs >= 2
    t_deg = target.degree
    t_lam = abs(target.leading)
    if big.any():
        dmin = int(degs[big].min())
        m = int(math.floor(math.log(t_deg) / math.log(dmin) + 1e-12)) if t_deg >= 1 else 0
    else:
        m = 0
    if not (~big).any():
        return m + 1
    lam1 = float(np.abs(G.leading[~big]).min())
    if big.any():
        lam2 = float(np.abs(G.leading[big]).min())
        d = int(degs.max())
        expo = sum(d ** k for k in range(m))
        base = lam2 ** expo if lam2 < 1 else 1.0
    else:
        base = 1.0
    # smallest n > m with lam1^(n-m) * base > |target lead|
    n = m + 1
    while lam1 ** (n - m) * base <= t_lam:
        n += 1
    return max(n, 2)


def _is_word_in(target: ComplexPoly, pool: Sequence[ComplexPoly], rtol: float, cap: int) -> bool:
    """Whether ``target`` equals some composition of length >= 2 over ``pool``."""
    if not pool:
        return False
    sub = GeneratorSet(tuple(pool))
    n0 = representation_bound(sub, target)
    budget = [0]

    def dfs(p: Optional[ComplexPoly], length: int) -> bool:
        # p is the composition built so far, innermost first
        for g in pool:
            q = g if p is None else compose(g, p)
            if q.degree > target.degree or target.degree % q.degree:
                continue
            budget[0] += 1
            if budget[0] > cap:
                raise UndecidedRedundancyError(
                    f"redundancy search for {target!r} exceeded {cap} words", generator=target)
            if length + 1 >= 2 and q.allclose(target, rtol):
                return True
            if length + 1 < n0 - 1 and dfs(q, length + 1):
                return True
        return False

    return dfs(None, 0)


def minimal_generating_set(G: GeneratorSet, rtol: float = 1e-9, cap: int = 10**6) -> GeneratorSet:
    """Unique minimal generating set of the semigroup generated by G.

    Duplicates collapse first; then any generator expressible as a word of
    length >= 2 in the others is dropped, one at a time, until none is.
    Survivors keep their input order.
    """
    kept: list = []
    for g in G.gens:
        if not any(g.allclose(h, rtol) for h in kept):
            kept.append(g)
    changed = True
    while changed:
        changed = False
        for i, g in enumerate(kept):
            others = kept[:i] + kept[i + 1:]
            if _is_word_in(g, others, rtol, cap):
                kept = others
                changed = True
                break
    return GeneratorSet(tuple(kept))


# -- escape data ------------------------------------------------------------

@dataclass(frozen=True)
class EscapeData:
    M: float
    R_esc: float
    M_J: Optional[float] = None
    lam: Optional[float] = None

    @property
    def lambda_(self):
        return self.lam


def _escape_root(g: ComplexPoly, M: float) -> float:
    """Largest positive R with |Λ|R^d - Σ|a_k|R^k - M R = 0 (one sign change)."""
    a = np.abs(g.coeffs).astype(float)
    c = -a.copy()
    c[-1] = a[-1]
    c[1] -= M
    r = np.roots(c[::-1])
    pos = [x.real for x in r if abs(x.imag) <= 1e-9 * max(1.0, abs(x)) and x.real > 0]
    return max(pos) if pos else 0.0


def escape_radius(G: GeneratorSet, julia_points=None) -> EscapeData:
    """Explicit (M, R) with |g_i(z)| > M|z| for all |z| > R and every i.

    M is 2 unless an affine generator has |a| <= 2, in which case it is the
    midpoint of (1, |a|). R is rounded up to an integer (at least 1). When a
    Julia sample is supplied, the derivative bound over it and the derived
    exponent λ = log(D/N) / log(M_J) are filled in as well.
    """
    affine = [abs(g.leading) for g in G.gens if g.degree == 1]
    M = min([2.0] + [(1 + a) / 2 for a in affine])
    R = max(_escape_root(g, M) for g in G.gens)
    R = float(max(1, math.ceil(R * (1 - 1e-12))))
    if julia_points is None:
        return EscapeData(M, R)
    MJ = julia_derivative_bound(G, julia_points)
    lam = math.log(G.R) / math.log(MJ) if MJ > 1 else math.inf
    return EscapeData(M, R, MJ, lam)


def julia_derivative_bound(G: GeneratorSet, points) -> float:
    pts = np.asarray(points, dtype=np.complex128).ravel()
    return float(max(np.abs(derivative(g)(pts)).max() for g in G.gens))


# -- critical data ----------------------------------------------------------

def _dedupe_points(pts, rtol=1e-6):
    out = []
    for p in pts:
        if not any(abs(p - q) <= rtol * (1 + abs(q)) for q in out):
            out.append(p)
    return out


def critical_star(G: GeneratorSet) -> list:
    """C*: the union of finite critical points of the generators."""
    pts = []
    for g in G.gens:
        if g.degree >= 2:
            pts.extend(critical_points(g).locations.tolist())
    pts = _dedupe_points(pts)
    return sorted(pts, key=lambda c: (round(c.real, 9), round(c.imag, 9)))


@dataclass(frozen=True)
class CriticalData:
    c_star: tuple
    c_julia: tuple
    kappa: Optional[int] = None


def critical_sets(G: GeneratorSet, julia_sample, eps_J: float = 1e-3) -> CriticalData:
    cs = critical_star(G)
    pts = np.asarray(julia_sample, dtype=np.complex128).ravel()
    if pts.size == 0:
        raise ValueError("julia_sample must be nonempty")
    cj = tuple(c for c in cs if np.abs(pts - c).min() <= eps_J)
    try:
        kappa = select_kappa(G)
    except HypothesisViolationError:
        kappa = None
    return CriticalData(tuple(cs), cj, kappa)


def choice_lhs(G: GeneratorSet, x: complex, kappa: int) -> float:
    """Left side of the κ-selection inequality at the critical point x."""
    R = G.D / G.N
    total = 0.0
    for g in G.gens:
        if abs(derivative(g)(x)) > 1e-9 * max(1.0, np.abs(derivative(g).coeffs).max()):
            total += R ** (1.0 / kappa)
        else:
            total += local_order(g, x)
    return total


def select_kappa(G: GeneratorSet, max_kappa: int = 10_000) -> int:
    cs = critical_star(G)
    if len(cs) <= 1:
        raise HypothesisViolationError(f"kappa needs more than one critical point; found {len(cs)}")
    bound = G.D - 0.5
    for k in range(1, max_kappa + 1):
        if all(choice_lhs(G, x, k) <= bound for x in cs):
            return k
    raise HypothesisViolationError(f"no kappa <= {max_kappa} satisfies the selection inequality")


# -- hypothesis check -------------------------------------------------------

@dataclass(frozen=True)
class MainCondition:
    holds: bool
    explanation: str
    exceptional: Optional[bool] = None

    def __bool__(self):
        return self.holds


def _common_center_form(G: GeneratorSet, a: complex, rtol: float = 1e-9) -> bool:
    """Every generator equals B(z - a)^m + a."""
    for g in G.gens:
        t = _shifted(g, a)
        if abs(t[0] - a) > rtol * max(1.0, abs(a)):
            return False
        if np.abs(t[1:-1]).max(initial=0.0) > rtol * np.abs(t).max():
            return False
    return True


def _shifted(g: ComplexPoly, a: complex) -> np.ndarray:
    from .poly import taylor_coefficients

    return taylor_coefficients(g, a)


def preimage_orbit_probe(G: GeneratorSet, a: complex, depth: int = 6, tol: float = 1e-7) -> Optional[bool]:
    """True if the backward orbit of a stays {a} through ``depth`` levels.

    Returns False as soon as a preimage distinct from a appears, and None
    when the tree grows past a size where the probe stops being informative.
    """
    frontier = [a]
    for _ in range(depth):
        nxt = []
        for x in frontier:
            for g in G.gens:
                for r, _m in roots(g, x):
                    if abs(r - a) > tol * (1 + abs(a)):
                        return False
                    nxt.append(r)
        frontier = _dedupe_points(nxt)
        if len(frontier) > 4096:
            return None
    return True


def check_main_condition(G: GeneratorSet, julia_sample, eps_J: float = 1e-3) -> MainCondition:
    """Decide the critical-point hypothesis for the semigroup generated by G.

    Works on the minimal generating set. Holds when C* has other than one
    point, when that point is not near the Julia sample, or when it is not
    exceptional. Exceptionality is certified by the common-centre normal form
    and probed through finite-depth backward orbits.
    """
    Gs = minimal_generating_set(G)
    cs = critical_star(Gs)
    if len(cs) != 1:
        return MainCondition(True, f"C* has {len(cs)} points")
    a = cs[0]
    cd = critical_sets(Gs, julia_sample, eps_J)
    if not cd.c_julia:
        return MainCondition(True, f"C* = {{{a:.6g}}} lies off the Julia sample (C empty)")
    if _common_center_form(Gs, a):
        return MainCondition(False, f"all generators have the form B(z-a)^m + a with a = {a:.6g}: a is exceptional",
                             exceptional=True)
    probe = preimage_orbit_probe(Gs, a)
    if probe is False:
        return MainCondition(True, f"backward orbit of {a:.6g} leaves the point: not exceptional", exceptional=False)
    if probe is True:
        return MainCondition(False, f"backward orbit of {a:.6g} is {{a}} to depth 6: treated as exceptional",
                             exceptional=True)
    return MainCondition(False, f"exceptionality of {a:.6g} undecided by the depth-6 probe")
