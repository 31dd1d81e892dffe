"""I.i.d. on-site potentials with order-independent seeding, and Hölder constants."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import IncompleteRealizationError, UsageError
from .lattice import as_sites

KINDS = ("uniform", "discrete-grid", "table-inverse-cdf")

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _mix64(z: np.ndarray) -> np.ndarray:
    # SplitMix64 finalizer; uint64 arithmetic wraps mod 2^64
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def encode_sites(sites: np.ndarray) -> np.ndarray:
    """Injective uint64 encoding of integer sites (zigzag coordinates, bit-packed)."""
    sites = as_sites(sites)
    d = sites.shape[1]
    bits = 64 // d
    zz = ((sites << 1) ^ (sites >> 63)).astype(np.uint64)
    if bits < 64 and np.any(zz >> np.uint64(bits)):
        raise UsageError(f"site coordinates too large to encode in {bits} bits per axis")
    code = np.zeros(len(sites), dtype=np.uint64)
    for i in range(d):
        code = (code << np.uint64(bits)) | zz[:, i] if bits < 64 else zz[:, i]
    return code


def site_uniforms(seed: int, sites: np.ndarray) -> np.ndarray:
    """Counter-based U[0,1) draws: one per site, a pure function of (seed, site)."""
    with np.errstate(over="ignore"):
        key = _mix64(np.array([seed & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64))[0]
        ctr = encode_sites(sites)
        h = _mix64(key + ctr * _GOLDEN)
        h = _mix64(h ^ ((key << np.uint64(32)) | (key >> np.uint64(32))))
    return (h >> np.uint64(11)).astype(np.float64) * 2.0**-53


@dataclass(frozen=True)
class DistributionSpec:
    """Common law of the on-site potential, supported in [-M, M]."""

    kind: str = "uniform"
    M: float = 1.0
    points: tuple = ()
    weights: tuple = ()
    table: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise UsageError(f"unknown distribution kind {self.kind!r}")
        if not self.M > 0:
            raise UsageError("M must be positive")
        if self.kind == "discrete-grid":
            pts, w = np.asarray(self.points, float), np.asarray(self.weights or [1.0] * len(self.points), float)
            if len(pts) != len(w) or np.any(w < 0) or w.sum() <= 0:
                raise UsageError("discrete-grid needs matching points and nonnegative weights")
            if np.count_nonzero(w > 0) < 2:
                raise UsageError("support must contain at least two points")
            if np.any(np.abs(pts) > self.M):
                raise UsageError("grid points must lie in [-M, M]")
        elif self.kind == "table-inverse-cdf":
            tab = np.asarray(self.table, float)
            if len(tab) < 2 or np.any(np.diff(tab) < 0):
                raise UsageError("inverse-CDF table must be nondecreasing with >= 2 entries")
            if tab[0] == tab[-1]:
                raise UsageError("support must contain at least two points")
            if np.any(np.abs(tab) > self.M):
                raise UsageError("table values must lie in [-M, M]")

    @classmethod
    def from_dict(cls, data: dict) -> "DistributionSpec":
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in data.items()})

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "M": self.M}
        if self.kind == "discrete-grid":
            out.update(points=list(self.points), weights=list(self.weights))
        elif self.kind == "table-inverse-cdf":
            out["table"] = list(self.table)
        return out

    def quantile(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, float)
        if self.kind == "uniform":
            return -self.M + 2.0 * self.M * u
        if self.kind == "discrete-grid":
            pts = np.asarray(self.points, float)
            w = np.asarray(self.weights or [1.0] * len(pts), float)
            cw = np.cumsum(w) / w.sum()
            idx = np.minimum(np.searchsorted(cw, u, side="right"), len(pts) - 1)
            return pts[idx]
        tab = np.asarray(self.table, float)
        return np.interp(u, np.linspace(0.0, 1.0, len(tab)), tab)

    def interval_measure(self, a, b) -> np.ndarray:
        """μ([a, b]) for arrays of endpoints a <= b."""
        a, b = np.asarray(a, float), np.asarray(b, float)
        if self.kind == "uniform":
            lo, hi = np.maximum(a, -self.M), np.minimum(b, self.M)
            return np.clip(hi - lo, 0.0, None) / (2.0 * self.M)
        if self.kind == "discrete-grid":
            pts = np.asarray(self.points, float)
            w = np.asarray(self.weights or [1.0] * len(pts), float)
            w = w / w.sum()
            inside = (pts[None, :] >= a.reshape(-1, 1)) & (pts[None, :] <= b.reshape(-1, 1))
            return (inside * w).sum(axis=1).reshape(a.shape)
        return _table_cdf(self.table, b, right=True) - _table_cdf(self.table, a, right=False)


def _table_cdf(table, x, right: bool) -> np.ndarray:
    """CDF of a piecewise-linear quantile table: F(x) if ``right`` else F(x^-)."""
    tab = np.asarray(table, float)
    n = len(tab)
    p = np.linspace(0.0, 1.0, n)
    x = np.asarray(x, float)
    idx = np.searchsorted(tab, x, side="right" if right else "left")
    out = np.where(idx <= 0, 0.0, 1.0)
    mid = (idx > 0) & (idx < n)
    i = np.clip(idx, 1, n - 1)
    x0, x1, p0, p1 = tab[i - 1], tab[i], p[i - 1], p[i]
    frac = np.where(x1 > x0, (x - x0) / np.where(x1 > x0, x1 - x0, 1.0), 0.0)
    return np.where(mid, p0 + frac * (p1 - p0), out)


@dataclass
class Realization:
    """Potential values V(n) on a finite set of sites."""

    spec: DistributionSpec
    seed: int
    sites: np.ndarray
    values: np.ndarray
    _lookup: dict = field(default=None, init=False, repr=False)

    def __getitem__(self, site) -> float:
        return float(self.on(np.atleast_2d(np.asarray(site, dtype=np.int64)))[0])

    def on(self, sites: np.ndarray) -> np.ndarray:
        if self._lookup is None:
            self._lookup = {tuple(s): v for s, v in zip(self.sites.tolist(), self.values.tolist())}
        try:
            return np.array([self._lookup[tuple(s)] for s in as_sites(sites).tolist()])
        except KeyError as exc:
            raise IncompleteRealizationError(f"no potential sampled at site {exc.args[0]}") from None


def sample_potential(spec: DistributionSpec, sites, seed: int) -> Realization:
    sites = as_sites(sites)
    values = spec.quantile(site_uniforms(seed, sites))
    return Realization(spec, int(seed), sites.copy(), values)


def _holder_numeric(spec: DistributionSpec, rho: float, levels: int = 31, placements: int = 10_000) -> float:
    M = spec.M
    rng_a = np.linspace(-M, M, placements)
    extra = np.asarray(spec.table if spec.kind == "table-inverse-cdf" else spec.points, float)
    g = np.empty(levels)
    for j in range(levels):
        kappa = 2.0 * M * 2.0**-j
        a = np.concatenate([rng_a - kappa / 2, extra, extra - kappa])
        g[j] = np.max(spec.interval_measure(a, a + kappa)) * kappa**-rho
    # sup over widths <= kappa_j is the running max over finer levels
    sup_k = np.maximum.accumulate(g[::-1])[::-1]
    tail = g[-11:]
    if tail[-1] > 1.5 * tail[0]:
        return 0.0
    if tail[-1] < tail[0] / 1.5:
        return math.inf
    return 1.0 / sup_k[-1]


def holder_constant(spec: DistributionSpec, rho: float) -> float:
    """Disorder constant K_rho(mu); 0 when mu is not Hölder of order rho, inf when the limit vanishes."""
    if not rho > 0:
        raise UsageError("rho must be positive")
    if spec.kind == "uniform":
        if rho < 1:
            return math.inf
        return 2.0 * spec.M if rho == 1 else 0.0
    if spec.kind == "discrete-grid":
        return 0.0
    return _holder_numeric(spec, rho)


def lag_correlation(values: Sequence[float], lag: int = 1) -> float:
    v = np.asarray(values, float)
    return float(np.corrcoef(v[:-lag], v[lag:])[0, 1])
