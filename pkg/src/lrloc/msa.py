"""Scale hierarchies, the bad-pair event, and Monte-Carlo probability estimates."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import norm

from .errors import ScaleError, UsageError
from .hamiltonian import OperatorSpec, assemble_hamiltonian, spectrum_bound
from .lattice import Cube, as_site, sup_distance
from .params import Params
from .resolvent import classify_cube

SCALE_CAP = 10**12


@dataclass(frozen=True)
class ScaleSequence:
    L0: int
    alpha: float
    scales: tuple

    def __len__(self):
        return len(self.scales)

    def __getitem__(self, k):
        return self.scales[k]

    def __iter__(self):
        return iter(self.scales)


def scale_sequence(L0: int, alpha: float, kmax: int, cap: int = SCALE_CAP) -> ScaleSequence:
    """L_0, L_1 = floor(L_0^alpha), ..., L_kmax."""
    if L0 < 2 or not alpha > 1:
        raise UsageError("need L0 >= 2 and alpha > 1")
    scales = [int(L0)]
    for k in range(kmax):
        nxt = math.floor(scales[-1] ** alpha)
        if nxt > cap:
            raise ScaleError(f"L_{k + 1} exceeds cap {cap}; last representable k = {k}", last_k=k)
        if nxt <= scales[-1]:
            raise ScaleError(f"degenerate scales: floor({scales[-1]}^{alpha}) = {nxt} is not larger", last_k=k)
        scales.append(nxt)
    return ScaleSequence(int(L0), float(alpha), tuple(scales))


@dataclass(frozen=True)
class EnergyGrid:
    E0: float
    eta: float
    n_points: int

    def __post_init__(self):
        if self.n_points < 1 or self.eta < 0:
            raise UsageError("energy grid needs n_points >= 1 and eta >= 0")

    @property
    def points(self) -> np.ndarray:
        if self.n_points == 1:
            return np.array([self.E0])
        return np.linspace(self.E0 - self.eta, self.E0 + self.eta, self.n_points)

    @property
    def spacing(self) -> float:
        return 0.0 if self.n_points == 1 else 2 * self.eta / (self.n_points - 1)

    def refined(self, factor: int = 2) -> "EnergyGrid":
        return EnergyGrid(self.E0, self.eta, factor * (self.n_points - 1) + 1)

    @classmethod
    def covering_spectrum(cls, op: OperatorSpec, n_points: int) -> "EnergyGrid":
        return cls(0.0, spectrum_bound(op.lam, op.hopping, op.distribution.M), n_points)


def bad_energies(op: OperatorSpec, center, L: int, energies, params: Params, realization=None) -> np.ndarray:
    """Boolean mask over ``energies``: is Λ_L(center) (E, delta)-bad?"""
    cube = Cube.around(as_site(center, op.d), L, op.d)
    real = realization if realization is not None else op.realization(cube.sites)
    H = assemble_hamiltonian(cube, op.lam, real, op.hopping)
    return np.array([not classify_cube(H, float(E), params).good for E in energies])


def event_bad_pair(op: OperatorSpec, m, n, L: int, grid: EnergyGrid, params: Params, realization=None) -> bool:
    """Is there a grid energy at which both Λ_L(m) and Λ_L(n) are bad?"""
    m, n = as_site(m, op.d), as_site(n, op.d)
    if sup_distance(m, n) <= 2 * L:
        raise UsageError(f"cubes overlap: |m - n| = {sup_distance(m, n)} <= 2L = {2 * L}")
    E = grid.points
    bad_m = bad_energies(op, m, L, E, params, realization)
    if not bad_m.any():
        return False
    bad_n = bad_energies(op, n, L, E[bad_m], params, realization)
    return bool(bad_n.any())


def wilson_interval(k: int, n: int, confidence: float = 0.95) -> tuple[float, float]:
    if n <= 0:
        return 0.0, 1.0
    z = norm.ppf(0.5 + confidence / 2)
    phat = k / n
    denom = 1 + z * z / n
    centre = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def pair_geometry(L: int, d: int) -> tuple[tuple, tuple]:
    """m at the origin, n on the first axis at the minimal allowed separation 2L + 2."""
    return (0,) * d, (2 * L + 2,) + (0,) * (d - 1)


def pair_event_for_seed(op: OperatorSpec, L: int, grid: EnergyGrid, params: Params) -> bool:
    m, n = pair_geometry(L, op.d)
    return event_bad_pair(op, m, n, L, grid, params)


@dataclass
class ProbabilityRow:
    L: int
    n_samples: int
    p_hat: float
    ci_lo: float
    ci_hi: float
    L_pow_minus2p: float


def summarize_events(L: int, events: Sequence[bool], p: float) -> ProbabilityRow:
    k, n = int(sum(bool(e) for e in events)), len(events)
    lo, hi = wilson_interval(k, n)
    return ProbabilityRow(L, n, k / n if n else math.nan, lo, hi, float(L) ** (-2 * p))


def estimate_bad_pair_probability(
    op: OperatorSpec,
    scales: Sequence[int],
    seeds: Sequence[int],
    grid: EnergyGrid,
    params: Params,
    executor=None,
) -> list[ProbabilityRow]:
    """p-hat with Wilson 95% intervals per scale; the same seeds are reused across scales (paired design)."""
    if len(seeds) < 30:
        raise UsageError("need at least 30 samples per scale")
    rows = []
    for L in scales:
        tasks = [(op.with_seed(s), int(L), grid, params) for s in seeds]
        if executor is None:
            events = [pair_event_for_seed(*t) for t in tasks]
        else:
            events = list(executor.map(_pair_task, tasks))
        rows.append(summarize_events(int(L), events, params.p))
    return rows


def _pair_task(args):
    return pair_event_for_seed(*args)


def loglog_slope(rows: Sequence[ProbabilityRow]) -> float:
    """Least-squares slope of log p-hat against log L over rows with p-hat > 0."""
    pts = [(math.log(r.L), math.log(r.p_hat)) for r in rows if r.p_hat > 0]
    if len(pts) < 2:
        return math.nan
    x, y = map(np.asarray, zip(*pts))
    return float(np.polyfit(x, y, 1)[0])


def k_hat(eps_prime: float, m, scales: Sequence[int]) -> int:
    """Smallest k >= 0 with |m|^eps' < L_{k+1}."""
    size = max(abs(c) for c in as_site(m))
    val = size**eps_prime if size > 0 else 0.0
    for k in range(len(scales) - 1):
        if val < scales[k + 1]:
            return k
    raise UsageError(f"|m|^eps' = {val:.6g} not below any available scale")
