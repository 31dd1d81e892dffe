"""Sites, sup-norm geometry, cubes, annuli and lattice tail sums on Z^d."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import DivergentSumError, UsageError

Site = tuple  # tuple[int, ...]


def as_site(x, d: int | None = None) -> tuple:
    """Normalize an int or sequence of ints into a site tuple."""
    if isinstance(x, (int, np.integer)):
        site = (int(x),)
    else:
        site = tuple(int(c) for c in x)
    if d is not None and len(site) != d:
        if len(site) == 1 and site[0] == 0:
            return (0,) * d
        raise UsageError(f"site {site} has dimension {len(site)}, expected {d}")
    return site


def as_sites(sites) -> np.ndarray:
    """Coerce to an (N, d) int64 array; a 1-D input is read as N sites in d=1."""
    arr = np.asarray(sites, dtype=np.int64)
    if arr.ndim == 1:
        return arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise UsageError(f"expected an (N, d) site array, got shape {arr.shape}")
    return arr


def sup_distance(m, n) -> int:
    """Return max_i |m_i - n_i|."""
    m, n = as_site(m), as_site(n)
    if len(m) != len(n):
        raise UsageError(f"dimension mismatch: {len(m)} vs {len(n)}")
    return max(abs(a - b) for a, b in zip(m, n))


def sup_norm(sites: np.ndarray) -> np.ndarray:
    """Row-wise sup norm of an (N, d) integer array."""
    sites = np.asarray(sites)
    if sites.ndim == 1:
        return np.abs(sites)
    return np.abs(sites).max(axis=1)


def pairwise_sup_distance(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix of sup distances between the rows of ``a`` and ``b``."""
    return np.abs(a[:, None, :] - b[None, :, :]).max(axis=2)


def cube_sites(center, L: int, d: int) -> np.ndarray:
    """Sites of the cube {k : |k - center| <= L} in lexicographic order, shape ((2L+1)^d, d)."""
    if L < 0:
        raise UsageError(f"cube radius must be nonnegative, got {L}")
    c = np.asarray(as_site(center, d), dtype=np.int64)
    axes = [np.arange(ci - L, ci + L + 1, dtype=np.int64) for ci in c]
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


@dataclass(frozen=True)
class Cube:
    center: tuple
    radius: int
    dim: int

    def __post_init__(self):
        if self.radius < 0:
            raise UsageError(f"cube radius must be nonnegative, got {self.radius}")
        object.__setattr__(self, "center", as_site(self.center, self.dim))

    @classmethod
    def around(cls, center, L: int, d: int | None = None) -> "Cube":
        site = as_site(center) if d is None else as_site(center, d)
        return cls(site, int(L), len(site))

    @cached_property
    def sites(self) -> np.ndarray:
        return cube_sites(self.center, self.radius, self.dim)

    @property
    def side(self) -> int:
        return 2 * self.radius + 1

    def __len__(self) -> int:
        return self.side**self.dim

    def contains(self, site) -> bool:
        return sup_distance(site, self.center) <= self.radius

    def contains_cube(self, other: "Cube") -> bool:
        return sup_distance(other.center, self.center) + other.radius <= self.radius

    def index_of(self, sites) -> np.ndarray:
        """Position(s) of ``sites`` in the lexicographic enumeration."""
        sites = np.atleast_2d(np.asarray(sites, dtype=np.int64))
        offs = sites - np.asarray(self.center) + self.radius
        if np.any(offs < 0) or np.any(offs >= self.side):
            raise UsageError("site outside cube")
        weights = self.side ** np.arange(self.dim - 1, -1, -1)
        return offs @ weights

    def label(self) -> str:
        return "c" + "_".join(str(c) for c in self.center) + f"_L{self.radius}"


class SiteSet:
    """An arbitrary finite region (explicit site list), for toy geometries."""

    def __init__(self, sites):
        self.sites = as_sites(sites)
        if len(np.unique(self.sites, axis=0)) != len(self.sites):
            raise UsageError("duplicate sites in region")
        self.dim = self.sites.shape[1]

    def __len__(self) -> int:
        return len(self.sites)

    def label(self) -> str:
        return f"sites{len(self)}"

    def index_of(self, sites) -> np.ndarray:
        pos = {tuple(s): i for i, s in enumerate(self.sites.tolist())}
        try:
            return np.array([pos[tuple(s)] for s in as_sites(sites).tolist()], dtype=np.int64)
        except KeyError as exc:
            raise UsageError(f"site {exc.args[0]} not in region") from None


@dataclass(frozen=True)
class Annulus:
    outer: Cube
    inner: Cube
    sites: np.ndarray = field(repr=False, compare=False)

    @classmethod
    def between(cls, outer: Cube, inner: Cube) -> "Annulus":
        if not outer.contains_cube(inner):
            raise UsageError("inner cube is not contained in outer cube")
        pts = outer.sites
        keep = np.abs(pts - np.asarray(inner.center)).max(axis=1) > inner.radius
        return cls(outer, inner, pts[keep])

    def __len__(self) -> int:
        return len(self.sites)


def annulus_sites(center, k: int, scales: Sequence[int], variant: str = "msa", d: int | None = None) -> Annulus:
    """Annulus around ``center`` between scales ``L_k`` and ``L_{k+1}``.

    ``msa``:  Λ_{2 L_{k+1}} minus Λ_{L_k}.
    ``sule``: Λ_{floor(8/5 L_{k+1})} minus Λ_{floor(4/3 L_k)}.
    """
    if k < 0 or k + 1 >= len(scales):
        raise UsageError(f"scale index {k + 1} beyond scale sequence of length {len(scales)}")
    lk, lk1 = int(scales[k]), int(scales[k + 1])
    if variant == "msa":
        r_out, r_in = 2 * lk1, lk
    elif variant == "sule":
        # exact rational floors, no float rounding
        r_out, r_in = (8 * lk1) // 5, (4 * lk) // 3
    else:
        raise UsageError(f"unknown annulus variant {variant!r}")
    site = as_site(center) if d is None else as_site(center, d)
    dim = len(site)
    return Annulus.between(Cube(site, r_out, dim), Cube(site, r_in, dim))


def shell_count(m, d: int):
    """Number of sites with |n| = m (m >= 1)."""
    m = np.asarray(m, dtype=float)
    return (2 * m + 1) ** d - (2 * m - 1) ** d


def _shell_poly(d: int) -> list[tuple[float, int]]:
    # (2x+1)^d - (2x-1)^d = sum over odd j of 2*C(d,j)*(2x)^(d-j)
    return [(2.0 * math.comb(d, j) * 2.0 ** (d - j), d - j) for j in range(1, d + 1, 2)]


def _tail_integral(theta: float, d: int, x0: float) -> float:
    """∫_{x0}^∞ shell_count(x, d) x^{-theta} dx in closed form."""
    total = 0.0
    for coef, power in _shell_poly(d):
        e = power - theta + 1.0
        total += coef * x0**e / (-e)
    return total


def lattice_power_sum(theta: float, d: int, L: int, kmax: int | None = None) -> tuple[float, float]:
    """Σ_{n in Z^d, |n| >= L} |n|^{-theta} with a rigorous absolute error bound.

    Shells L..K are summed exactly; the remainder f(K+1) + f(K+2) + ... with
    f(x) = shell_count(x) x^{-theta} (convex, decreasing) is bracketed by
    ∫_K^∞ f - f(K)/2  <=  rest  <=  ∫_{K+1/2}^∞ f.
    Returns (value, abs_error) with the value at the bracket midpoint.
    """
    if theta <= d:
        raise DivergentSumError(f"sum of |n|^-{theta} over Z^{d} diverges")
    if L < 1:
        raise UsageError(f"L must be >= 1, got {L}")
    K = max(L, 10_000) if kmax is None else max(L, kmax)
    while True:
        m = np.arange(L, K + 1, dtype=float)
        terms = shell_count(m, d) * m ** (-theta)
        head = float(np.sum(terms[::-1]))  # small terms first
        fK = float(terms[-1])
        lo = _tail_integral(theta, d, K) - fK / 2.0
        hi = _tail_integral(theta, d, K + 0.5)
        value = head + 0.5 * (lo + hi)
        err = 0.5 * (hi - lo) + 64 * np.finfo(float).eps * value
        if err <= 1e-11 * value or K >= 10**7:
            return value, err
        K *= 10


def tail_sum(theta: float, d: int, L: int) -> float:
    """Σ_{|n| >= L} |n|^{-theta}, valid for theta - d > 1 and L > 2."""
    if theta - d <= 1:
        raise DivergentSumError(f"tail sum requires theta - d > 1, got theta={theta}, d={d}")
    if L <= 2:
        raise UsageError(f"tail sum requires L > 2, got {L}")
    return lattice_power_sum(theta, d, L)[0]


def tail_sum_bounds(theta: float, d: int, L: int) -> tuple[float, float]:
    """Like :func:`tail_sum` but also returns the certified absolute error."""
    tail_sum(theta, d, L)  # argument checks
    return lattice_power_sum(theta, d, L)
