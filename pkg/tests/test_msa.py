import math

import numpy as np
import pytest
from conftest import make_op

from lrloc.disorder import DistributionSpec
from lrloc.errors import ScaleError, UsageError
from lrloc.hamiltonian import OperatorSpec
from lrloc.msa import (
    EnergyGrid,
    estimate_bad_pair_probability,
    event_bad_pair,
    k_hat,
    loglog_slope,
    pair_geometry,
    scale_sequence,
    summarize_events,
    wilson_interval,
)
from lrloc.params import desk_params


def test_scale_sequences():
    assert scale_sequence(3, 2, 2).scales == (3, 9, 81)
    assert scale_sequence(3, 6, 1).scales == (3, 729)
    with pytest.raises(ScaleError):
        scale_sequence(2, 1.5, 3)


def test_scale_overflow_reports_last_k():
    with pytest.raises(ScaleError) as info:
        scale_sequence(3, 6, 5)
    assert info.value.last_k == 1  # 3, 729, then 729^6 ~ 1.5e17 > cap
    with pytest.raises(UsageError):
        scale_sequence(1, 2, 2)


def test_k_hat_examples():
    scales = (3, 9, 81)
    assert k_hat(1 / 3, (0,), scales) == 0
    assert k_hat(1 / 3, (700,), scales) == 0
    assert k_hat(0.5, (100,), scales) == 1
    with pytest.raises(UsageError):
        k_hat(0.5, (10**6,), scales)


def test_energy_grid():
    g = EnergyGrid(0.0, 1.0, 41)
    assert g.points[0] == -1 and g.points[-1] == 1 and g.spacing == pytest.approx(0.05)
    assert g.refined().n_points == 81
    assert np.all(np.isin(g.points, g.refined().points))
    assert EnergyGrid(0.3, 0.0, 1).points.tolist() == [0.3]
    with pytest.raises(UsageError):
        EnergyGrid(0.0, 1.0, 0)


def test_wilson_examples():
    lo, hi = wilson_interval(0, 10)
    assert lo == 0 and 0.25 < hi < 0.35
    lo, hi = wilson_interval(5, 10)
    assert lo + hi == pytest.approx(1.0)
    assert wilson_interval(0, 0) == (0.0, 1.0)


@pytest.mark.parametrize("p", [0.05, 0.2, 0.5])
def test_wilson_coverage(p):
    rng = np.random.default_rng(99)
    n, reps = 200, 2000
    ks = rng.binomial(n, p, size=reps)
    covered = sum(lo <= p <= hi for lo, hi in (wilson_interval(int(k), n) for k in ks))
    assert covered / reps >= 0.93


def test_event_requires_separation():
    op = make_op()
    with pytest.raises(UsageError):
        event_bad_pair(op, (0,), (8,), 4, EnergyGrid(0, 1, 5), desk_params())
    assert pair_geometry(4, 2) == ((0, 0), (10, 0))


def test_event_deterministic():
    op = make_op(seed=17)
    grid = EnergyGrid(0.0, 1.0, 41)
    a = [event_bad_pair(op, (0,), (10,), 4, grid, desk_params()) for _ in range(3)]
    assert len(set(a)) == 1


def test_diagonal_grid_outside_spectrum_never_bad():
    op = make_op(lam=math.inf, M=1.0)
    prm = desk_params()
    for grid in [EnergyGrid(3.0, 0.9, 11), EnergyGrid(-2.5, 0.4, 5)]:
        for seed in range(10):
            assert not event_bad_pair(op.with_seed(seed), (0,), (10,), 4, grid, prm)
    rows = estimate_bad_pair_probability(op, [4, 6], range(30), EnergyGrid(3.0, 0.9, 11), prm)
    assert [r.p_hat for r in rows] == [0.0, 0.0]


def test_shared_eigenvalue_is_bad_pair():
    spec = DistributionSpec("discrete-grid", 1.0, points=(-1.0, 1.0))
    op = OperatorSpec(1, 8.0, math.inf, spec, 0)
    assert event_bad_pair(op, (0,), (10,), 4, EnergyGrid(1.0, 0.0, 1), desk_params())


def test_probability_needs_samples():
    with pytest.raises(UsageError):
        estimate_bad_pair_probability(make_op(), [4], range(10), EnergyGrid(0, 1, 5), desk_params())


def test_weak_coupling_is_worse():
    grid = EnergyGrid(0.0, 1.0, 21)
    prm = desk_params()
    weak = estimate_bad_pair_probability(make_op(lam=1.0), [4], range(40), grid, prm)[0]
    strong = estimate_bad_pair_probability(make_op(lam=50.0), [4], range(40), grid, prm)[0]
    assert strong.p_hat <= weak.p_hat


def test_summaries():
    row = summarize_events(6, [True] * 3 + [False] * 7, p=2.0)
    assert (row.L, row.n_samples, row.p_hat) == (6, 10, 0.3)
    assert row.ci_lo < 0.3 < row.ci_hi
    assert row.L_pow_minus2p == 6.0**-4
    rows = [summarize_events(L, [True] * k + [False] * (100 - k), 1.0) for L, k in [(4, 64), (8, 16), (16, 4)]]
    assert loglog_slope(rows) == pytest.approx(-2.0)
