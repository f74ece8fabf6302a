"""Dense complex polynomials in ascending-coefficient form.

Everything here is double precision. Roots are found with a batched
Aberth-Ehrlich iteration so that one polynomial can be solved against many
right-hand sides ``p(z) = a_k`` in a single vectorised sweep; the backward
samplers depend on that.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .exceptions import DegreeCapError, IndeterminateOrderError, SolverError

DEFAULT_DEGREE_CAP = 4096
ABERTH_MAX_ITER = 500
CLUSTER_RTOL = 1e-6
ORDER_RTOL = 1e-9


class ComplexPoly:
    """Univariate polynomial with complex coefficients.

    ``coeffs[k]`` multiplies ``z**k``. Trailing zeros are stripped on
    construction, so the last stored coefficient is the leading one.
    """

    __slots__ = ("_c",)

    def __init__(self, coeffs: Iterable[complex]):
        c = np.atleast_1d(np.asarray(list(coeffs) if not isinstance(coeffs, np.ndarray) else coeffs,
                                     dtype=np.complex128)).copy()
        if c.ndim != 1:
            raise ValueError("coefficients must be a flat sequence")
        nz = np.flatnonzero(c)
        c = c[: nz[-1] + 1] if nz.size else np.zeros(1, dtype=np.complex128)
        c.setflags(write=False)
        self._c = c

    @classmethod
    def monomial(cls, degree: int, coeff: complex = 1.0) -> "ComplexPoly":
        c = np.zeros(degree + 1, dtype=np.complex128)
        c[degree] = coeff
        return cls(c)

    @classmethod
    def from_roots(cls, roots: Sequence[complex], leading: complex = 1.0) -> "ComplexPoly":
        c = np.array([leading], dtype=np.complex128)
        for r in roots:
            c = np.concatenate([[0], c]) - r * np.concatenate([c, [0]])
        return cls(c)

    @property
    def coeffs(self) -> np.ndarray:
        return self._c

    @property
    def degree(self) -> int:
        return len(self._c) - 1

    @property
    def leading(self) -> complex:
        return complex(self._c[-1])

    def is_zero(self) -> bool:
        return self.degree == 0 and self._c[0] == 0

    def __call__(self, z):
        return horner(self._c, z)

    def __eq__(self, other):
        if not isinstance(other, ComplexPoly):
            return NotImplemented
        return self.degree == other.degree and bool(np.all(self._c == other._c))

    def __hash__(self):
        return hash(self._c.tobytes())

    def __sub__(self, other):
        if isinstance(other, ComplexPoly):
            n = max(len(self._c), len(other._c))
            a = np.zeros(n, dtype=np.complex128)
            a[: len(self._c)] += self._c
            a[: len(other._c)] -= other._c
            return ComplexPoly(a)
        a = self._c.copy()
        a[0] -= other
        return ComplexPoly(a)

    def __repr__(self):
        terms = ", ".join(_fmt(c) for c in self._c)
        return f"ComplexPoly([{terms}])"

    def allclose(self, other: "ComplexPoly", rtol: float = 1e-9) -> bool:
        """Coefficientwise equality after a degree match."""
        if self.degree != other.degree:
            return False
        scale = max(np.abs(self._c).max(), np.abs(other._c).max(), 1e-300)
        return bool(np.all(np.abs(self._c - other._c) <= rtol * scale))

    def to_pairs(self) -> list:
        return [[float(c.real), float(c.imag)] for c in self._c]


def _fmt(c: complex) -> str:
    c = complex(c)
    return repr(c.real) if c.imag == 0 else repr(c)


def horner(coeffs: np.ndarray, z):
    z = np.asarray(z, dtype=np.complex128)
    out = np.full(z.shape, coeffs[-1], dtype=np.complex128)
    for c in coeffs[-2::-1]:
        out = out * z + c
    return out if out.ndim else complex(out)


def eval(p: ComplexPoly, z):  # noqa: A001 - mirrors the operation name
    return p(z)


def derivative(p: ComplexPoly) -> ComplexPoly:
    if p.degree == 0:
        return ComplexPoly([0])
    k = np.arange(1, p.degree + 1)
    return ComplexPoly(p.coeffs[1:] * k)


def compose(outer: ComplexPoly, inner: ComplexPoly, degree_cap: int = DEFAULT_DEGREE_CAP) -> ComplexPoly:
    """Return ``outer(inner(z))``."""
    deg = outer.degree * inner.degree
    if deg > degree_cap:
        raise DegreeCapError(f"composed degree {deg} exceeds cap {degree_cap}")
    out = np.array([outer.coeffs[-1]], dtype=np.complex128)
    ic = inner.coeffs
    for c in outer.coeffs[-2::-1]:
        out = np.convolve(out, ic)
        out[0] += c
    return ComplexPoly(out)


@dataclass(frozen=True)
class RootSet:
    """Distinct root locations with multiplicities."""

    locations: np.ndarray
    multiplicities: np.ndarray

    def __len__(self):
        return len(self.locations)

    def __iter__(self):
        return iter(zip(self.locations.tolist(), self.multiplicities.tolist()))

    @property
    def total(self) -> int:
        return int(self.multiplicities.sum())

    def expanded(self) -> np.ndarray:
        return np.repeat(self.locations, self.multiplicities)


def _aberth_batch(c: np.ndarray, targets: np.ndarray, max_iter: int = ABERTH_MAX_ITER):
    """Solve ``p(z) = t`` for every t in ``targets``; returns shape (m, d)."""
    d = len(c) - 1
    m = len(targets)
    lead = c[-1]
    C = np.broadcast_to(c, (m, d + 1)).copy()
    C[:, 0] -= targets
    mono = C / lead
    rho = 1.0 + np.abs(mono[:, :-1]).max(axis=1)
    center = -mono[:, -2] / d
    ang = 2 * np.pi * np.arange(d) / d + 0.4
    # radius scaled down a little; a slightly irregular start avoids symmetric stalls
    z = center[:, None] + (0.5 * rho)[:, None] * np.exp(1j * ang)[None, :] * (1 + 0.01 * np.arange(d))[None, :]
    dc = C[:, 1:] * np.arange(1, d + 1)
    active = np.arange(m)
    eye = np.eye(d, dtype=bool)
    scale = np.maximum(1.0, rho)
    for _ in range(max_iter):
        if active.size == 0:
            break
        za = z[active]
        Ca = C[active]
        pv = Ca[:, -1][:, None] * np.ones_like(za)
        for k in range(d - 1, -1, -1):
            pv = pv * za + Ca[:, k][:, None]
        dv = dc[active][:, -1][:, None] * np.ones_like(za)
        for k in range(d - 2, -1, -1):
            dv = dv * za + dc[active][:, k][:, None]
        diff = za[:, :, None] - za[:, None, :]
        diff[:, eye] = 1.0
        inv = 1.0 / diff
        inv[:, eye] = 0.0
        S = inv.sum(axis=2)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = pv / dv
            w = ratio / (1.0 - ratio * S)
        bad = ~np.isfinite(w)
        if bad.any():
            w = np.where(bad, 0.0, w)
            zero_p = pv == 0
            w = np.where(bad & ~zero_p, 1e-8 * scale[active][:, None], w)
        z[active] = za - w
        done = np.abs(w).max(axis=1) <= 4e-16 * scale[active] * np.maximum(1.0, np.abs(za).max(axis=1))
        active = active[~done]
    return z, C, active


def solve_batch(p: ComplexPoly, targets, max_iter: int = ABERTH_MAX_ITER) -> np.ndarray:
    """All ``deg p`` solutions of ``p(z) = t`` per target, multiplicity-expanded.

    Returns an (m, d) complex array. Raises :class:`SolverError` when a row
    fails to reach a backward-error residual of 1e-12 relative.
    """
    if p.degree < 1:
        raise ValueError("root finding needs a nonconstant polynomial")
    t = np.atleast_1d(np.asarray(targets, dtype=np.complex128))
    if not np.all(np.isfinite(t)):
        raise SolverError("non-finite target value", residual=float("inf"))
    if p.degree == 1:
        return ((t - p.coeffs[0]) / p.coeffs[1])[:, None]
    z, C, _ = _aberth_batch(p.coeffs, t, max_iter)
    resid, scale = _residuals(C, z)
    worst = float((resid / scale).max()) if resid.size else 0.0
    if not np.isfinite(worst) or worst > 1e-12:
        raise SolverError(f"root solver did not converge (relative residual {worst:.3g})", residual=worst)
    return z


def _residuals(C, z):
    d = C.shape[1] - 1
    pv = C[:, -1][:, None] * np.ones_like(z)
    az = np.abs(z)
    sc = np.abs(C[:, -1])[:, None] * np.ones(z.shape)
    for k in range(d - 1, -1, -1):
        pv = pv * z + C[:, k][:, None]
        sc = sc * az + np.abs(C[:, k])[:, None]
    # floor at the coefficient norm so exact multiple roots at 0 are not judged relative to 0
    return np.abs(pv), np.maximum(sc, np.abs(C).max(axis=1)[:, None])


def cluster_rows(z: np.ndarray, rtol: float = CLUSTER_RTOL) -> np.ndarray:
    """Snap near-coincident roots in each row to their cluster mean.

    Roots closer than ``rtol * (1 + |root|)`` are merged transitively. The
    output has the same shape with exactly repeated values per cluster.
    """
    m, d = z.shape
    if d == 1:
        return z.copy()
    dist = np.abs(z[:, :, None] - z[:, None, :])
    tol = rtol * (1 + np.maximum(np.abs(z)[:, :, None], np.abs(z)[:, None, :]))
    adj = dist <= tol
    reach = adj.copy()
    for _ in range(int(np.ceil(np.log2(d))) + 1):
        nxt = np.einsum("mij,mjk->mik", reach.astype(np.int32), reach.astype(np.int32)) > 0
        if np.array_equal(nxt, reach):
            break
        reach = nxt
    cnt = reach.sum(axis=2)
    mean = (reach * z[:, None, :]).sum(axis=2) / cnt
    return mean


MERGE_RTOL = 2e-2
MULTIPLE_ROOT_RTOL = 1e-10


def _distinct(values):
    locs, mult = [], []
    for v in values:
        for j, u in enumerate(locs):
            if u == v:
                mult[j] += 1
                break
        else:
            locs.append(v)
            mult.append(1)
    return locs, mult


def _derivatives(q: ComplexPoly, k: int) -> list:
    out = [q]
    for _ in range(k):
        out.append(derivative(out[-1]))
    return out


def _abs_scale(q: ComplexPoly, x: complex) -> float:
    return float(horner(np.abs(q.coeffs), abs(x)).real)


def _polish_multiple(q: ComplexPoly, x: complex, k: int):
    """Newton on q^(k-1), where a k-fold root of q is simple; None if it wanders off."""
    ders = _derivatives(q, k)
    f, df = ders[k - 1], ders[k]
    y = complex(x)
    for _ in range(30):
        d = df(y)
        if d == 0:
            break
        step = f(y) / d
        y -= step
        if abs(step) <= 1e-16 * (1 + abs(y)):
            break
    if not abs(y - x) <= MERGE_RTOL * (1 + abs(x)):
        return None
    # every lower derivative must vanish there, relative to its own magnitude scale
    for j in range(k):
        if abs(ders[j](y)) > MULTIPLE_ROOT_RTOL * max(_abs_scale(ders[j], y), 1e-300):
            return None
    return y


def roots(p: ComplexPoly, a: complex = 0.0) -> RootSet:
    """Solutions of ``p(z) = a`` with multiplicities.

    Roots within the cluster radius are merged first. A multiple root is
    only resolved to about eps^(1/k) by simultaneous iteration, so nearby
    groups are then merged too when Newton's method on the (k-1)-th
    derivative finds a point where p - a and its first k - 1 derivatives all
    vanish to working precision. Every multiple root is polished that way.
    """
    q = p - a
    z = solve_batch(p, [a])
    locs, mult = _distinct(cluster_rows(z)[0].tolist())
    changed = True
    while changed and len(locs) > 1:
        changed = False
        order = np.argsort(np.abs(locs))
        for i in order:
            near = [j for j in range(len(locs))
                    if j != i and abs(locs[j] - locs[i]) <= MERGE_RTOL * (1 + abs(locs[i]))]
            if not near:
                continue
            group = [i] + near
            k = sum(mult[g] for g in group)
            c = sum(locs[g] * mult[g] for g in group) / k
            y = _polish_multiple(q, c, k)
            if y is None:
                continue
            locs = [u for g, u in enumerate(locs) if g not in group] + [y]
            mult = [m for g, m in enumerate(mult) if g not in group] + [k]
            changed = True
            break
    for j, (x, k) in enumerate(zip(locs, mult)):
        if k > 1:
            y = _polish_multiple(q, x, k)
            if y is not None:
                locs[j] = y
    order = np.lexsort((np.imag(locs), np.real(locs)))
    return RootSet(np.asarray(locs, dtype=np.complex128)[order], np.asarray(mult, dtype=np.int64)[order])


def critical_points(p: ComplexPoly) -> RootSet:
    if p.degree < 2:
        return RootSet(np.zeros(0, dtype=np.complex128), np.zeros(0, dtype=np.int64))
    return roots(derivative(p), 0.0)


def taylor_coefficients(p: ComplexPoly, x: complex) -> np.ndarray:
    """Coefficients of ``p(x + h)`` in powers of h (Horner shift)."""
    c = p.coeffs.copy()
    d = p.degree
    out = c.astype(np.complex128)
    for i in range(d):
        for k in range(d - 1, i - 1, -1):
            out[k] += x * out[k + 1]
    return out


def local_order(p: ComplexPoly, x: complex, rtol: float = ORDER_RTOL) -> int:
    """Order of p at x: index of the first nonvanishing Taylor term past the constant."""
    if p.degree < 1:
        raise ValueError("local order needs a nonconstant polynomial")
    t = taylor_coefficients(p, x)
    thresh = rtol * np.abs(t).max()
    for m in range(1, len(t)):
        if abs(t[m]) > thresh:
            return m
    raise IndeterminateOrderError(f"all Taylor coefficients at {x} fall below {thresh:.3g}")
