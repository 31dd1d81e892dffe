import math

import numpy as np
import pytest

from lrloc.disorder import (
    DistributionSpec,
    encode_sites,
    holder_constant,
    lag_correlation,
    sample_potential,
    site_uniforms,
)
from lrloc.errors import IncompleteRealizationError, UsageError
from lrloc.lattice import cube_sites


def test_uniform_moments_over_many_sites():
    sites = np.arange(-50_000, 50_000)[:, None]
    v = sample_potential(DistributionSpec("uniform", 1.0), sites, seed=7).values
    assert abs(v.mean()) < 0.01
    assert np.abs(v).max() <= 1.0
    assert np.var(v) == pytest.approx(1 / 3, abs=0.01)


def test_order_independence(rng):
    spec = DistributionSpec("uniform", 2.0)
    sites = cube_sites((0, 0), 6, 2)
    perm = rng.permutation(len(sites))
    a = sample_potential(spec, sites, 3)
    b = sample_potential(spec, sites[perm], 3)
    assert np.array_equal(a.values[perm], b.values)
    # a subset is consistent with the full realization
    sub = sites[::5]
    assert np.array_equal(sample_potential(spec, sub, 3).values, a.on(sub))


def test_reproducible_pairs():
    spec = DistributionSpec("uniform", 1.0)
    sites = cube_sites(0, 50, 1)
    for seed in range(100):
        a = sample_potential(spec, sites, seed).values
        b = sample_potential(spec, sites, seed).values
        assert a.tobytes() == b.tobytes()
    assert not np.array_equal(sample_potential(spec, sites, 0).values, sample_potential(spec, sites, 1).values)


def test_encoding_injective():
    sites = cube_sites((0, 0, 0), 6, 3)
    codes = encode_sites(sites)
    assert len(np.unique(codes)) == len(sites)
    codes1 = encode_sites(cube_sites(0, 1000, 1))
    assert len(np.unique(codes1)) == 2001


def test_lag_correlation_small():
    sites = np.arange(100_000)[:, None]
    u = site_uniforms(11, sites)
    assert abs(lag_correlation(u, 1)) < 0.01
    assert u.min() >= 0 and u.max() < 1


def test_discrete_support():
    spec = DistributionSpec("discrete-grid", 1.0, points=(-1.0, 0.0, 0.5), weights=(1, 2, 1))
    v = sample_potential(spec, np.arange(20_000)[:, None], 5).values
    assert set(np.unique(v).tolist()) == {-1.0, 0.0, 0.5}
    assert np.mean(v == 0.0) == pytest.approx(0.5, abs=0.02)


def test_table_distribution_within_support():
    spec = DistributionSpec("table-inverse-cdf", 1.0, table=(-1.0, -0.2, 0.3, 1.0))
    v = sample_potential(spec, np.arange(10_000)[:, None], 5).values
    assert v.min() >= -1 and v.max() <= 1


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(kind="nope"),
        dict(kind="uniform", M=0.0),
        dict(kind="discrete-grid", points=(0.0,), weights=(1.0,)),
        dict(kind="discrete-grid", M=1.0, points=(0.0, 2.0)),
        dict(kind="table-inverse-cdf", table=(0.5, 0.1)),
        dict(kind="table-inverse-cdf", table=(0.2, 0.2)),
    ],
)
def test_invalid_distribution(kwargs):
    with pytest.raises(UsageError):
        DistributionSpec(**kwargs)


def test_realization_missing_site():
    real = sample_potential(DistributionSpec(), cube_sites(0, 2, 1), 0)
    assert real[(1,)] == real.on(np.array([[1]]))[0]
    with pytest.raises(IncompleteRealizationError):
        real.on(np.array([[5]]))


def test_dict_roundtrip():
    spec = DistributionSpec("discrete-grid", 2.0, points=(-1.0, 1.0), weights=(0.3, 0.7))
    assert DistributionSpec.from_dict(spec.to_dict()) == spec


@pytest.mark.parametrize("M", [0.5, 1.0, 4.0])
def test_holder_uniform(M):
    spec = DistributionSpec("uniform", M)
    assert holder_constant(spec, 1.0) == 2 * M
    assert holder_constant(spec, 0.5) == math.inf
    assert holder_constant(spec, 1.5) == 0.0


def test_holder_discrete_is_zero():
    spec = DistributionSpec("discrete-grid", 1.0, points=(-1.0, 1.0))
    assert holder_constant(spec, 1.0) == 0.0
    assert holder_constant(spec, 0.3) == 0.0


def test_holder_table_matches_uniform():
    # a linear quantile table is the uniform law
    M = 1.0
    spec = DistributionSpec("table-inverse-cdf", M, table=tuple(np.linspace(-M, M, 9)))
    assert holder_constant(spec, 1.0) == pytest.approx(2 * M, rel=1e-6)
    assert holder_constant(spec, 0.5) == math.inf
    assert holder_constant(spec, 1.5) == 0.0


def test_holder_table_with_atom():
    # flat step in the quantile table is an atom
    spec = DistributionSpec("table-inverse-cdf", 1.0, table=(-1.0, 0.0, 0.0, 1.0))
    assert holder_constant(spec, 1.0) == 0.0


def test_holder_rejects_nonpositive_rho():
    with pytest.raises(UsageError):
        holder_constant(DistributionSpec(), 0.0)
