"""Long-range hopping kernel and finite-volume Hamiltonians H = T/lam + V on cubes."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .disorder import DistributionSpec, Realization, sample_potential
from .errors import DivergentSumError, UsageError
from .lattice import Cube, as_sites, lattice_power_sum, pairwise_sup_distance, sup_distance


@dataclass(frozen=True)
class HoppingSpec:
    r: float
    d: int = 1

    def __post_init__(self):
        if self.d < 1:
            raise UsageError("dimension must be >= 1")

    @property
    def bounded(self) -> bool:
        return self.r > self.d


@dataclass(frozen=True)
class OperatorSpec:
    """Everything that fixes one disorder realization's Hamiltonian."""

    d: int = 1
    r: float = 8.0
    lam: float = 50.0
    distribution: DistributionSpec = field(default_factory=DistributionSpec)
    seed: int = 0

    @property
    def hopping(self) -> HoppingSpec:
        return HoppingSpec(self.r, self.d)

    def realization(self, sites) -> Realization:
        return sample_potential(self.distribution, sites, self.seed)

    def with_seed(self, seed: int) -> "OperatorSpec":
        return OperatorSpec(self.d, self.r, self.lam, self.distribution, int(seed))

    def with_lam(self, lam: float) -> "OperatorSpec":
        return OperatorSpec(self.d, self.r, lam, self.distribution, self.seed)

    def hamiltonian(self, cube: Cube) -> "HamMatrix":
        return assemble_hamiltonian(cube, self.lam, self.realization(cube.sites), self.hopping)


def hopping_entry(m, n, spec: HoppingSpec) -> float:
    dist = sup_distance(m, n)
    return 0.0 if dist == 0 else float(dist) ** -spec.r


def hopping_matrix(rows: np.ndarray, cols: np.ndarray, r: float) -> np.ndarray:
    """Kernel block T(rows, cols) = |m-n|^-r off the diagonal, 0 on it."""
    dist = pairwise_sup_distance(as_sites(rows), as_sites(cols)).astype(float)
    out = np.zeros_like(dist)
    nz = dist > 0
    out[nz] = dist[nz] ** -r
    return out


@dataclass
class HamMatrix:
    cube: Cube
    lam: float
    potential: np.ndarray
    hopping: HoppingSpec
    matrix: np.ndarray = field(repr=False)
    seed: int | None = None

    @property
    def inv_lam(self) -> float:
        return 0.0 if math.isinf(self.lam) else 1.0 / self.lam

    @property
    def sites(self) -> np.ndarray:
        return self.cube.sites

    def __len__(self) -> int:
        return self.matrix.shape[0]

    def restrict(self, sub: Cube) -> "HamMatrix":
        """Exact principal submatrix on a cube contained in this one."""
        if not self.cube.contains_cube(sub):
            raise UsageError(f"cube {sub} not contained in {self.cube}")
        idx = self.cube.index_of(sub.sites)
        return HamMatrix(sub, self.lam, self.potential[idx], self.hopping, self.matrix[np.ix_(idx, idx)], self.seed)


def assemble_hamiltonian(cube: Cube, lam: float, realization: Realization, spec: HoppingSpec) -> HamMatrix:
    if lam < 1:
        warnings.warn(f"coupling lam={lam} < 1 is outside the strong-disorder convention", stacklevel=2)
    sites = cube.sites
    pot = realization.on(sites)
    inv_lam = 0.0 if math.isinf(lam) else 1.0 / lam
    n = len(sites)
    H = np.zeros((n, n))
    if inv_lam:
        iu = np.triu_indices(n, 1)
        dist = np.abs(sites[iu[0]] - sites[iu[1]]).max(axis=1).astype(float)
        upper = inv_lam * dist**-spec.r
        H[iu] = upper
        H[(iu[1], iu[0])] = upper
    H[np.diag_indices(n)] = pot
    return HamMatrix(cube, lam, pot, spec, H, realization.seed)


def schur_bound(spec: HoppingSpec) -> float:
    """Σ_{n != 0} |n|^-r, an upper bound for the operator norm of the kernel."""
    if spec.r <= spec.d:
        raise DivergentSumError(f"kernel is unbounded for r={spec.r} <= d={spec.d}")
    return lattice_power_sum(spec.r, spec.d, 1)[0]


def spectrum_bound(lam: float, spec: HoppingSpec, M: float) -> float:
    """Bound on |E| for every eigenvalue of any finite-volume Hamiltonian."""
    inv_lam = 0.0 if math.isinf(lam) else 1.0 / lam
    return inv_lam * schur_bound(spec) + M
