"""Finite-volume Green's functions, matrix Sobolev norms and good/bad cube classification."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg as sla
from scipy.special import logsumexp

from .errors import ResolventSingularError, UsageError
from .hamiltonian import HamMatrix, hopping_matrix
from .lattice import Cube, as_sites, pairwise_sup_distance
from .params import Params

SINGULAR_GAP = 1e-12
RESIDUAL_TOL = 1e-8


@dataclass
class GreenMatrix:
    cube: Cube
    energy: float
    matrix: np.ndarray
    condition: float
    asymmetry: float
    residual: float


def green_function(H: HamMatrix, E: float) -> GreenMatrix:
    """G(E) = (H - E)^-1 with a spectral-gap pre-check and a residual post-check."""
    n = len(H)
    A = H.matrix - E * np.eye(n)
    w = sla.eigvalsh(A)
    gap = float(np.min(np.abs(w)))
    cond = float(np.max(np.abs(w)) / gap) if gap > 0 else math.inf
    if gap <= SINGULAR_GAP:
        raise ResolventSingularError(f"E={E!r} within {gap:.3g} of the spectrum", cond)
    G = sla.solve(A, np.eye(n), assume_a="sym")
    asym = float(np.max(np.abs(G - G.T))) if n else 0.0
    G = 0.5 * (G + G.T)
    resid = float(np.max(np.abs(A @ G - np.eye(n)))) if n else 0.0
    if resid > RESIDUAL_TOL:
        raise ResolventSingularError(f"resolvent residual {resid:.3g} exceeds {RESIDUAL_TOL}", cond)
    return GreenMatrix(H.cube, float(E), G, cond, asym, resid)


@lru_cache(maxsize=64)
def _displacement_index(rows_key: bytes, cols_key: bytes, d: int):
    rows = np.frombuffer(rows_key, dtype=np.int64).reshape(-1, d)
    cols = np.frombuffer(cols_key, dtype=np.int64).reshape(-1, d)
    disp = rows[:, None, :] - cols[None, :, :]
    lo = disp.reshape(-1, d).min(axis=0)
    span = disp.reshape(-1, d).max(axis=0) - lo + 1
    weights = np.cumprod(np.concatenate([[1], span[::-1][:-1]]))[::-1]
    keys = ((disp - lo) @ weights).ravel()
    uniq, inverse = np.unique(keys, return_inverse=True)
    # recover |k| for each distinct displacement
    offs = np.empty((len(uniq), d), dtype=np.int64)
    rem = uniq.copy()
    for i, w in enumerate(weights):
        offs[:, i], rem = np.divmod(rem, w)
    k = offs + lo
    bracket = np.maximum(1, np.abs(k).max(axis=1)).astype(float)
    return inverse.ravel(), len(uniq), np.log(bracket)


def displacement_sups(mtx: np.ndarray, rows, cols) -> tuple[np.ndarray, np.ndarray]:
    """For each displacement k in rows - cols: (log<k>, sup |M(k1,k2)| over k1 - k2 = k)."""
    rows, cols = as_sites(rows), as_sites(cols)
    mtx = np.asarray(mtx)
    if mtx.shape != (len(rows), len(cols)):
        raise UsageError(f"matrix shape {mtx.shape} does not match index sets ({len(rows)}, {len(cols)})")
    # translate so the cache key depends only on relative geometry
    shift = rows.min(axis=0)
    r_key = np.ascontiguousarray(rows - shift).tobytes()
    c_key = np.ascontiguousarray(cols - shift).tobytes()
    inverse, nk, log_bracket = _displacement_index(r_key, c_key, rows.shape[1])
    sups = np.zeros(nk)
    np.maximum.at(sups, inverse, np.abs(mtx).ravel())
    return log_bracket, sups


def log_sobolev_from_sups(log_bracket: np.ndarray, sups: np.ndarray, s, c0: float = 1.0):
    """log ||M||_s from a displacement table; vectorized over ``s``."""
    nz = sups > 0
    if not np.any(nz):
        return np.full(np.shape(s), -np.inf) if np.ndim(s) else -math.inf
    a = 2.0 * np.log(sups[nz])
    lb = log_bracket[nz]
    s_arr = np.atleast_1d(np.asarray(s, float))
    vals = 0.5 * (math.log(c0) + logsumexp(a[None, :] + 2.0 * s_arr[:, None] * lb[None, :], axis=1))
    return vals if np.ndim(s) else float(vals[0])


def log_sobolev_matrix_norm(mtx, rows, cols, s, c0: float = 1.0):
    return log_sobolev_from_sups(*displacement_sups(mtx, rows, cols), s, c0)


def sobolev_matrix_norm(mtx, rows, cols, s: float, c0: float = 1.0) -> float:
    """||M||_s^2 = c0 Σ_k (sup_{k1-k2=k} |M(k1,k2)|)^2 <k>^{2s}, with <k> = max(1, |k|)."""
    return math.exp(log_sobolev_matrix_norm(mtx, rows, cols, s, c0))


@dataclass(frozen=True)
class CubeVerdict:
    cube_id: str
    energy: float
    good: bool
    margin_s0: float
    margin_r1: float

    @property
    def verdict(self) -> str:
        return "good" if self.good else "bad"


def cube_margins(G: GreenMatrix, params: Params, svals, delta: float | None = None) -> np.ndarray:
    """log||G||_s - (tau' + delta s) log L at each s in ``svals``."""
    dl = params.delta if delta is None else delta
    L = G.cube.radius
    svals = np.asarray(svals, float)
    lognorm = log_sobolev_matrix_norm(G.matrix, G.cube.sites, G.cube.sites, svals, params.c0)
    return lognorm - (params.tau_prime + dl * svals) * math.log(L)


def classify_cube(H: HamMatrix, E: float, params: Params, delta: float | None = None) -> CubeVerdict:
    """(E, delta)-good iff the Sobolev bound holds at s0 and r1.

    log||G||_s is convex in s and the threshold is affine, so the two
    endpoints decide the whole window [s0, r1].
    """
    if H.cube.radius < 1:
        raise UsageError("classification needs L >= 1")
    try:
        G = green_function(H, E)
    except ResolventSingularError:
        return CubeVerdict(H.cube.label(), float(E), False, math.inf, math.inf)
    m0, m1 = cube_margins(G, params, [params.s0, params.r1], delta)
    return CubeVerdict(H.cube.label(), float(E), bool(m0 <= 0 and m1 <= 0), float(m0), float(m1))


def classify_cube_grid(H: HamMatrix, E: float, params: Params, n_s: int = 20, delta: float | None = None) -> bool:
    """Reference rule: check the bound on an s-grid over [s0, r1] (True = good)."""
    try:
        G = green_function(H, E)
    except ResolventSingularError:
        return False
    return bool(np.all(cube_margins(G, params, np.linspace(params.s0, params.r1, n_s), delta) <= 0))


@dataclass(frozen=True)
class DecayCheck:
    holds: bool
    witness: tuple | None
    value: float
    bound: float


def offdiag_decay_check(G: GreenMatrix, params: Params) -> DecayCheck:
    """Check |G(n', n'')| <= |n'-n''|^{-(1-zeta) r1} for all pairs with |n'-n''| >= L/2."""
    if not (params.delta < params.zeta < 1):
        raise UsageError("need delta < zeta < 1")
    if not params.tau_prime - (params.zeta - params.delta) * params.r1 < 0:
        raise UsageError("need tau' - (zeta - delta) r1 < 0")
    sites = G.cube.sites
    dist = pairwise_sup_distance(sites, sites).astype(float)
    mask = dist >= G.cube.radius / 2
    np.fill_diagonal(mask, False)
    if not np.any(mask):
        return DecayCheck(True, None, 0.0, math.inf)
    expo = -(1 - params.zeta) * params.r1
    log_ratio = np.full(dist.shape, -np.inf)
    with np.errstate(divide="ignore"):
        log_ratio[mask] = np.log(np.abs(G.matrix[mask])) - expo * np.log(dist[mask])
    flat = int(np.argmax(log_ratio))
    i, j = divmod(flat, dist.shape[1])
    if log_ratio[i, j] == -np.inf:
        return DecayCheck(True, None, 0.0, math.inf)
    bound = float(dist[i, j] ** expo)
    return DecayCheck(
        bool(log_ratio[i, j] <= 0),
        (tuple(sites[i].tolist()), tuple(sites[j].tolist())),
        float(abs(G.matrix[i, j])),
        bound,
    )


def poisson_residual(H_big: HamMatrix, E: float, psi: np.ndarray, sub: Cube) -> float:
    """max_{n in sub} |psi(n) + Σ_{n' in sub, n'' in B \\ sub} lam^-1 G_sub(E)(n,n') T(n',n'') psi(n'')|."""
    B = H_big.cube
    if not B.contains_cube(sub):
        raise UsageError("sub-cube must lie inside the big cube")
    if len(sub) == len(B):
        raise UsageError("sub-cube equals the big cube: exterior is empty")
    psi = np.asarray(psi)
    eig_res = float(np.linalg.norm(H_big.matrix @ psi - E * psi))
    if eig_res > 1e-10 * max(1.0, float(np.abs(H_big.matrix).max())):
        raise UsageError(f"(E, psi) is not an eigenpair (residual {eig_res:.3g})")
    inner = B.index_of(sub.sites)
    outer = np.setdiff1d(np.arange(len(B)), inner)
    G = green_function(H_big.restrict(sub), E)
    T = H_big.inv_lam * hopping_matrix(B.sites[inner], B.sites[outer], H_big.hopping.r)
    resid = psi[inner] + G.matrix @ (T @ psi[outer])
    return float(np.max(np.abs(resid)))
