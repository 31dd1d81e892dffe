"""Diagonalization, localization centers, decay fits and eigenfunction bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.linalg as sla

from .errors import DiagonalizationError, InsufficientDataError, UsageError
from .hamiltonian import HamMatrix
from .lattice import Cube, as_site, sup_norm
from .params import Params
from .resolvent import CubeVerdict, classify_cube

DEGENERACY_GAP = 1e-10
FLOOR = 1e-14


@dataclass
class EigenSystem:
    ham: HamMatrix
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns
    centers: np.ndarray = field(repr=False)  # (N, d) sites

    @property
    def cube(self) -> Cube:
        return self.ham.cube

    def __len__(self) -> int:
        return len(self.eigenvalues)

    def residuals(self) -> np.ndarray:
        H, V = self.ham.matrix, self.eigenvectors
        return np.linalg.norm(H @ V - V * self.eigenvalues, axis=0)

    def reconstruction_error(self) -> float:
        V = self.eigenvectors
        return float(np.max(np.abs((V * self.eigenvalues) @ V.T - self.ham.matrix)))

    def completeness_error(self) -> float:
        return float(np.max(np.abs(np.sum(self.eigenvectors**2, axis=1) - 1.0)))


def _canonical_cluster_basis(V: np.ndarray) -> np.ndarray:
    """Basis-independent orthonormal basis of span(V): Gram-Schmidt on P e_i in site order."""
    P = V @ V.T
    k = V.shape[1]
    basis = []
    for i in range(P.shape[0]):
        w = P[:, i].copy()
        for b in basis:
            w -= (b @ w) * b
        nw = np.linalg.norm(w)
        if nw > 1e-6:
            basis.append(w / nw)
            if len(basis) == k:
                break
    if len(basis) < k:
        return V
    B = np.column_stack(basis)
    # one more projection pass for orthogonality to working precision
    q, _ = np.linalg.qr(B)
    return q * np.sign(np.sum(q * B, axis=0))


def _fix_signs(V: np.ndarray) -> np.ndarray:
    # largest-magnitude entry positive; argmax picks the first index on ties
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def diagonalize(H: HamMatrix) -> EigenSystem:
    M = H.matrix
    if not np.array_equal(M, M.T):
        raise UsageError("Hamiltonian is not symmetric")
    try:
        w, V = sla.eigh(M)
    except np.linalg.LinAlgError as exc:
        raise DiagonalizationError(f"eigh failed: {exc}") from exc
    # re-orthonormalize numerically degenerate clusters in a canonical way
    start = 0
    n = len(w)
    for i in range(1, n + 1):
        if i == n or w[i] - w[i - 1] >= DEGENERACY_GAP:
            if i - start > 1:
                V[:, start:i] = _canonical_cluster_basis(V[:, start:i])
            start = i
    V = _fix_signs(V)
    centers = H.cube.sites[_center_indices(V)]
    sys = EigenSystem(H, w, V, centers)
    scale = max(1.0, float(np.abs(M).max()))
    worst = float(sys.residuals().max()) if n else 0.0
    if worst > 1e-8 * scale:
        raise DiagonalizationError(f"eigen-residual {worst:.3g} above tolerance")
    return sys


def _center_indices(V: np.ndarray) -> np.ndarray:
    return np.argmax(np.abs(V), axis=0)


def localization_center(psi: np.ndarray, cube: Cube) -> tuple:
    """Site where |psi| is maximal; ties go to the lexicographically smallest site."""
    psi = np.asarray(psi)
    if not np.any(psi):
        raise UsageError("zero vector has no localization center")
    return tuple(cube.sites[int(np.argmax(np.abs(psi)))].tolist())


class DecayFit(NamedTuple):
    gamma: float
    quality: float
    n_shells: int


def shell_maxima(psi: np.ndarray, cube: Cube, center, margin: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Shell distance m and max |psi| over interior sites with |n - center| = m."""
    center = np.asarray(as_site(center, cube.dim))
    L = cube.radius
    margin = L // 8 if margin is None else margin
    sites = cube.sites
    interior = np.abs(sites - np.asarray(cube.center)).max(axis=1) <= L - margin
    dist = np.abs(sites - center).max(axis=1)
    dist, amp = dist[interior], np.abs(np.asarray(psi))[interior]
    if len(dist) == 0:
        return np.array([], dtype=int), np.array([])
    smax = np.zeros(dist.max() + 1)
    np.maximum.at(smax, dist, amp)
    present = np.zeros(dist.max() + 1, dtype=bool)
    present[dist] = True
    m = np.nonzero(present)[0]
    return m, smax[m]


def fit_decay_exponent(psi: np.ndarray, cube: Cube, center, margin: int | None = None) -> DecayFit:
    """Power-law fit of the shell-maximum envelope: gamma = -slope of log max|psi| vs log m."""
    m, smax = shell_maxima(psi, cube, center, margin)
    use = (m >= 2) & (smax > FLOOR)
    if np.count_nonzero(use) < 4:
        raise InsufficientDataError(f"only {np.count_nonzero(use)} usable shells")
    x, y = np.log(m[use]), np.log(smax[use])
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    quality = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return DecayFit(float(-slope), quality, int(np.count_nonzero(use)))


def decay_exponents(sys: EigenSystem, margin: int | None = None) -> np.ndarray:
    """Fitted exponent for each eigenfunction (nan where the fit has too few shells)."""
    out = np.full(len(sys), np.nan)
    for j in range(len(sys)):
        try:
            out[j] = fit_decay_exponent(sys.eigenvectors[:, j], sys.cube, sys.centers[j], margin).gamma
        except InsufficientDataError:
            pass
    return out


@dataclass
class SuleReport:
    gamma: float
    eps_prime: float
    D: float
    per_state: np.ndarray  # per-j maxima of the normalized amplitude
    worst_sites: np.ndarray  # per-j maximizing site


def sule_terms(sys: EigenSystem, gamma: float, eps_prime: float) -> tuple[np.ndarray, np.ndarray]:
    """log of |psi_j(n)| max(1,|n-n_j|)^gamma / max(1,|n_j|)^{eps' gamma}, shape (sites, states)."""
    sites = sys.cube.sites
    V = np.abs(sys.eigenvectors)
    centers = sys.centers
    dist = np.abs(sites[:, None, :] - centers[None, :, :]).max(axis=2)
    cnorm = sup_norm(centers)
    with np.errstate(divide="ignore"):
        logv = np.log(V)
    return logv + gamma * np.log(np.maximum(1, dist)) - eps_prime * gamma * np.log(np.maximum(1, cnorm))[None, :], sites


def sule_constant(sys: EigenSystem, gamma: float, eps_prime: float) -> SuleReport:
    if not gamma > 0:
        raise UsageError("gamma must be positive")
    logt, sites = sule_terms(sys, gamma, eps_prime)
    worst = np.argmax(logt, axis=0)
    per = np.exp(logt[worst, np.arange(logt.shape[1])])
    return SuleReport(gamma, eps_prime, float(per.max()), per, sites[worst])


def empirical_power_constants(sys: EigenSystem, exponent: float) -> np.ndarray:
    """sup_n |psi_j(n)| max(1,|n|)^exponent for each j."""
    w = np.log(np.maximum(1, sup_norm(sys.cube.sites)))
    with np.errstate(divide="ignore"):
        return np.exp(np.max(np.log(np.abs(sys.eigenvectors)) + exponent * w[:, None], axis=0))


def maximizer_cube_bad(sys: EigenSystem, j: int, L: int, params: Params) -> CubeVerdict:
    """Classify Λ_L(n_j) at E_j with delta = 1/2 (predicted: bad)."""
    box = sys.cube
    nj = sys.centers[j]
    if np.abs(nj - np.asarray(box.center)).max() + 2 * L > box.radius:
        raise UsageError(f"Λ_{L}({tuple(nj.tolist())}) with margin {L} does not fit in the box")
    sub = Cube(tuple(nj.tolist()), L, box.dim)
    return classify_cube(sys.ham.restrict(sub), float(sys.eigenvalues[j]), params, delta=0.5)


def maximizer_bad_fraction(sys: EigenSystem, L: int, params: Params) -> tuple[float, int]:
    """Fraction of eligible eigenfunctions whose maximizer cube is bad, and the eligible count."""
    box = sys.cube
    off = np.abs(sys.centers - np.asarray(box.center)).max(axis=1)
    eligible = np.nonzero(off + 2 * L <= box.radius)[0]
    if len(eligible) == 0:
        return math.nan, 0
    bad = sum(not maximizer_cube_bad(sys, int(j), L, params).good for j in eligible)
    return bad / len(eligible), len(eligible)


@dataclass
class CenterCount:
    count: int
    ordered_radii: np.ndarray
    c_lower: float


def center_counting(sys: EigenSystem, L: int) -> CenterCount:
    """#{j : |n_j| <= L}, the sorted |n_j|, and c in |n_(j)| >= c j^{1/d} (lower envelope)."""
    if L < 1:
        raise UsageError("L must be >= 1")
    radii = np.sort(sup_norm(sys.centers))
    count = int(np.count_nonzero(radii <= L))
    j = np.arange(1, len(radii) + 1)
    pos = radii > 0
    c = float(np.min(radii[pos] / j[pos] ** (1.0 / sys.cube.dim))) if np.any(pos) else 0.0
    return CenterCount(count, radii, c)
