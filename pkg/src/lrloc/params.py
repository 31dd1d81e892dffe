"""Multi-scale parameter pack, its consistency relations, and named presets."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace
from typing import NamedTuple


@dataclass(frozen=True)
class Params:
    # multi-scale induction
    alpha: float = 6.0
    delta: float = 0.5
    xi: float = 2.0
    zeta: float = 0.95
    p: float = 13.0
    tau: float = 30.0
    tau_prime: float = 94.0
    s0: float = 0.75
    r1: float = 1792.0
    J: int = 24
    # disorder
    rho: float = 1.0
    kappa: float = 1.0  # carried for completeness; drives no computation
    # operator
    r: float = 1800.0
    d: int = 1
    # dynamics / eigenfunction bounds
    q: float = 1.125
    theta: float = 11.25
    eps_prime: float = 1.0 / 3.0
    gamma: float = 11.25
    c0: float = 1.0  # Sobolev-norm prefactor

    @classmethod
    def from_dict(cls, data: dict) -> "Params":
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise KeyError(f"unknown params field(s): {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)

    def with_(self, **changes) -> "Params":
        return replace(self, **changes)


class Relation(NamedTuple):
    id: str
    satisfied: bool
    slack: float
    strict: bool


def _rel(rid: str, slack: float, strict: bool = True) -> Relation:
    ok = slack > 0 if strict else slack >= 0
    return Relation(rid, bool(ok), float(slack), strict)


def params_check(p: Params, disorder_constant: float | None = None) -> list[Relation]:
    """Evaluate every parameter relation; slack > 0 (or >= 0 when non-strict) means satisfied."""
    d = p.d
    a, dl, xi, s0, r1, tp, tau = p.alpha, p.delta, p.xi, p.s0, p.r1, p.tau_prime, p.tau
    rels = [
        # Green's-function induction inequalities
        _rel("green-decay", (1 - dl) * r1 - tp - 2 * s0),
        _rel("green-coupling", xi * r1 - tp - a * tau - (3 + dl + 4 * xi) * s0),
        _rel("green-iteration", tp - ((2 * tp + 2 * a * tau + (5 + 4 * xi + 2 * dl) * s0) / a + s0)),
        _rel("alpha>1", a - 1),
        _rel("tau>1", tau - 1),
        _rel("tau_prime>1", tp - 1),
        _rel("r1>1", r1 - 1),
        _rel("xi>0", xi),
        _rel("delta<1", 1 - dl),
        _rel("delta>0", dl),
        # probability exponent vs Hölder order
        _rel("tau-vs-p", tau - (2 * p.p + (2 + p.rho) * d) / p.rho),
        # scale hierarchy
        _rel("scale-ratio", dl - (1 + xi) / a, strict=False),
        _rel("p-vs-J", p.p - a * d - 2 * a * p.p / p.J),
        _rel("J-even", 0.0 if p.J >= 2 and p.J % 2 == 0 else -1.0, strict=False),
        # good-cube Sobolev window d/2 < s0 <= r1 < r - d/2
        _rel("s0>d/2", s0 - d / 2),
        _rel("s0<=r1", r1 - s0, strict=False),
        _rel("r1<r-d/2", p.r - d / 2 - r1),
        # off-diagonal decay of good cubes
        _rel("zeta>delta", p.zeta - dl),
        _rel("zeta<1", 1 - p.zeta),
        _rel("good-decay", (p.zeta - dl) * r1 - tp),
        # operator and main-result ranges
        _rel("r>d", p.r - d),
        _rel("r-power-law", p.r - max((100 * d + 23 * p.rho * d) / p.rho, 331 * d), strict=False),
        _rel("r-dynamical", p.r - max(200 * d / p.rho + 25 * d, 1800 * d), strict=False),
        _rel("q>0", p.q),
        _rel("q<=r/1600", p.r / 1600 - p.q, strict=False),
        _rel("q<=gamma/10", p.gamma / 10 - p.q, strict=False),
        _rel("theta>=r/160", p.theta - p.r / 160, strict=False),
        _rel("gamma>=0", p.gamma, strict=False),
        _rel("gamma<=r/160", p.r / 160 - p.gamma, strict=False),
        _rel("eps_prime>=1/3", p.eps_prime - 1 / 3, strict=False),
        _rel("eps_prime<1/2", 0.5 - p.eps_prime),
    ]
    if disorder_constant is not None:
        rels.append(_rel("kappa>0", p.kappa))
        rels.append(_rel("kappa<K", disorder_constant - p.kappa))
    return rels


def smallest_even_J(p: float, alpha: float, d: int) -> int:
    """Smallest even J with p > alpha*d + 2*alpha*p/J."""
    if p <= alpha * d:
        raise ValueError("no J works when p <= alpha*d")
    J = 2 * max(1, math.floor(alpha * p / (p - alpha * d)))
    while not p > alpha * d + 2 * alpha * p / J:
        J += 2
    while J > 2 and p > alpha * d + 2 * alpha * p / (J - 2):
        J -= 2
    return J


def theory_params(d: int = 1, rho: float = 1.0) -> Params:
    """Parameter choices that satisfy every relation for the given d and Hölder order."""
    r = max(200 * d / rho + 25 * d, 1800 * d)
    p = 13 * d
    gamma = r / 160
    return Params(
        alpha=6.0, delta=0.5, xi=2.0, zeta=19 / 20, p=p,
        tau=29 * d / rho + d, s0=0.75 * d, tau_prime=87 * d / rho + 7 * d,
        r1=r - 8 * d, J=smallest_even_J(p, 6.0, d), rho=rho, kappa=1.0,
        r=r, d=d, q=gamma / 10, theta=gamma, eps_prime=1 / 3, gamma=gamma,
    )


def desk_params(d: int = 1, r: float = 8.0) -> Params:
    """Moderate-r parameters where localization is visible in small boxes (relations violated)."""
    return Params(
        alpha=6.0, delta=0.5, xi=2.0, zeta=0.9, p=13 * d, tau=30.0,
        tau_prime=2.0, s0=0.75 * d, r1=r - 1.0, J=24, rho=1.0, kappa=1.0,
        r=r, d=d, q=2.0, theta=2.0, eps_prime=1 / 3, gamma=2.0,
    )


PRESETS = {
    "theory": {
        "description": "relation-satisfying choices (alpha=6, delta=1/2, xi=2, zeta=19/20, p=13d, r=1800d)",
        "lam": 50.0,
    },
    "desk": {
        "description": "strong disorder at moderate range: d=1, r=8, lambda=50 (theory relations violated)",
        "lam": 50.0,
    },
    "desk-weak": {
        "description": "weak disorder companion of 'desk': d=1, r=8, lambda=1",
        "lam": 1.0,
    },
}


def preset(name: str, d: int = 1) -> tuple[Params, dict]:
    """Return (params, operator fields) for a named preset."""
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    if name == "theory":
        prm = theory_params(d)
    else:
        prm = desk_params(d)
    op = {"d": d, "r": prm.r, "lam": PRESETS[name]["lam"], "distribution": {"kind": "uniform", "M": 1.0}}
    return prm, op
