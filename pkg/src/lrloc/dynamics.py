"""Unitary evolution e^{-iHt} on a box, position moments and Sobolev sequence norms."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import UsageError
from .hamiltonian import HamMatrix
from .lattice import Cube, as_site, sup_norm
from .spectral import EigenSystem


@dataclass
class State:
    cube: Cube
    amplitudes: np.ndarray
    initial_norm: float = field(default=math.nan)

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (len(self.cube),):
            raise UsageError("amplitude vector does not match cube size")
        if math.isnan(self.initial_norm):
            self.initial_norm = float(np.linalg.norm(self.amplitudes))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def delta_state(cube: Cube, site=0) -> State:
    amp = np.zeros(len(cube), dtype=complex)
    amp[int(cube.index_of(as_site(site, cube.dim))[0])] = 1.0
    return State(cube, amp)


def power_law_state(theta: float, cube: Cube, normalize: bool = True) -> State:
    """phi(n) = max(1, |n|)^-theta (``theta = inf`` gives the delta at the origin)."""
    if math.isinf(theta):
        return delta_state(cube)
    if theta <= cube.dim / 2:
        warnings.warn(f"theta={theta} <= d/2: not square-summable on the infinite lattice", stacklevel=2)
    amp = np.maximum(1, sup_norm(cube.sites)).astype(float) ** -theta
    if normalize:
        amp = amp / np.linalg.norm(amp)
    return State(cube, amp.astype(complex))


def _check_cube(sys: EigenSystem, phi: State):
    if phi.cube != sys.cube:
        raise UsageError(f"state lives on {phi.cube}, system on {sys.cube}")


def evolve(sys: EigenSystem, phi: State, t: float) -> State:
    """u(t) = Σ_j e^{-i E_j t} <psi_j, phi> psi_j."""
    _check_cube(sys, phi)
    V = sys.eigenvectors
    c = V.T @ phi.amplitudes
    return State(sys.cube, V @ (np.exp(-1j * sys.eigenvalues * t) * c), phi.initial_norm)


def _weights(cube: Cube, q: float) -> np.ndarray:
    r = sup_norm(cube.sites).astype(float)
    if q == 0:
        return np.ones_like(r)
    return r**q  # 0**q == 0 for q > 0


def moment(u: State, q: float) -> float:
    """Σ_n |n|^q |u(n)|^2 (identity weight at q = 0)."""
    if q < 0:
        raise UsageError("q must be nonnegative")
    return float(np.sum(_weights(u.cube, q) * np.abs(u.amplitudes) ** 2))


def sobolev_seq_norm(u: State, s: float) -> float:
    """(Σ_n (1 + |n|)^{2s} |u(n)|^2)^{1/2}."""
    if s < 0:
        raise UsageError("s must be nonnegative")
    w = (1.0 + sup_norm(u.cube.sites)) ** (2.0 * s)
    return float(np.sqrt(np.sum(w * np.abs(u.amplitudes) ** 2)))


@dataclass
class MomentSeries:
    q: float
    s: float
    times: np.ndarray
    moments: np.ndarray
    hs_norms: np.ndarray
    norm_drift: np.ndarray
    boundary_mass: np.ndarray

    @property
    def running_sup(self) -> np.ndarray:
        return np.maximum.accumulate(self.moments)

    @property
    def contaminated(self) -> np.ndarray:
        """True from the first time the boundary layer holds more than 1e-6 of the mass."""
        return np.maximum.accumulate(self.boundary_mass > 1e-6)

    def sup_up_to(self, t: float) -> float:
        return float(np.max(self.moments[self.times <= t]))


def moment_trajectory(sys: EigenSystem, phi: State, times, q: float, s: float) -> MomentSeries:
    _check_cube(sys, phi)
    if q < 0 or s < 0:
        raise UsageError("q and s must be nonnegative")
    times = np.asarray(times, float)
    if np.any(np.diff(times) < 0):
        raise UsageError("times must be ascending")
    V = sys.eigenvectors
    c = V.T @ phi.amplitudes
    U = V @ (np.exp(-1j * np.outer(sys.eigenvalues, times)) * c[:, None])  # (sites, times)
    prob = np.abs(U) ** 2
    cube = sys.cube
    wq = _weights(cube, q)
    ws = (1.0 + sup_norm(cube.sites)) ** (2.0 * s)
    edge = np.abs(cube.sites - np.asarray(cube.center)).max(axis=1) > cube.radius - max(1, cube.radius // 8)
    return MomentSeries(
        q, s, times,
        wq @ prob,
        np.sqrt(ws @ prob),
        np.abs(np.sqrt(prob.sum(axis=0)) - phi.initial_norm),
        prob[edge].sum(axis=0),
    )


def ode_propagate_oracle(H: HamMatrix, phi: State, t: float, dt: float) -> State:
    """Integrate i du/dt = H u with classical RK4 (cross-check only)."""
    A = H.matrix
    hnorm = float(np.abs(A).sum(axis=1).max())  # >= spectral norm
    if dt <= 0 or dt > 0.1 / max(hnorm, 1e-300):
        raise UsageError(f"dt={dt} exceeds 0.1/||H|| = {0.1 / hnorm:.3g}")
    if t == 0:
        return State(phi.cube, phi.amplitudes.copy(), phi.initial_norm)
    n = math.ceil(abs(t) / dt)
    h = t / n
    u = phi.amplitudes.copy()

    def f(v):
        return -1j * (A @ v)

    for _ in range(n):
        k1 = f(u)
        k2 = f(u + 0.5 * h * k1)
        k3 = f(u + 0.5 * h * k2)
        k4 = f(u + h * k3)
        u = u + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return State(phi.cube, u, phi.initial_norm)


def energy(H: HamMatrix, u: State) -> float:
    a = u.amplitudes
    return float(np.real(np.vdot(a, H.matrix @ a)))
