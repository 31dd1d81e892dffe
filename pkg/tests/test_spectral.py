import math

import numpy as np
import pytest
from conftest import box, make_op

from lrloc.disorder import DistributionSpec, Realization
from lrloc.errors import InsufficientDataError, UsageError
from lrloc.hamiltonian import HamMatrix, HoppingSpec, assemble_hamiltonian
from lrloc.lattice import Cube, SiteSet, sup_norm
from lrloc.params import desk_params
from lrloc.spectral import (
    EigenSystem,
    center_counting,
    decay_exponents,
    diagonalize,
    fit_decay_exponent,
    localization_center,
    maximizer_bad_fraction,
    maximizer_cube_bad,
    sule_constant,
)


def test_diagonal_limit():
    H = make_op(lam=math.inf, seed=3).hamiltonian(box(10))
    sys = diagonalize(H)
    assert np.array_equal(sys.eigenvalues, np.sort(H.potential))
    # permuted standard basis
    assert np.array_equal(np.abs(sys.eigenvectors).sum(axis=0), np.ones(len(H)))
    order = np.argsort(H.potential)
    assert np.array_equal(sys.centers, H.sites[order])


def test_two_by_two_closed_form():
    sites = SiteSet(np.array([[0], [1]]))
    H = HamMatrix(sites, 1.0, np.zeros(2), HoppingSpec(8), np.array([[0.0, 1.0], [1.0, 0.0]]))
    sys = diagonalize(H)
    assert sys.eigenvalues == pytest.approx([-1.0, 1.0], abs=1e-15)
    r = 1 / math.sqrt(2)
    assert np.allclose(sys.eigenvectors, [[r, r], [-r, r]], atol=1e-15)


def test_reconstruction_and_completeness():
    sys = diagonalize(make_op(lam=2.0, r=3.0, seed=1).hamiltonian(box(30)))
    assert sys.reconstruction_error() <= 1e-8 * np.abs(sys.ham.matrix).max()
    assert sys.completeness_error() <= 1e-8
    assert sys.residuals().max() < 1e-10


def test_sign_convention():
    sys = diagonalize(make_op(lam=5.0, seed=2).hamiltonian(box(8)))
    V = sys.eigenvectors
    idx = np.argmax(np.abs(V), axis=0)
    assert np.all(V[idx, np.arange(V.shape[1])] > 0)


def test_degenerate_cluster_canonical():
    # equal potentials with the hopping off give a degenerate pair; the basis must not depend on solver details
    cube = Cube.around((0,), 1)
    real = Realization(DistributionSpec(), 0, cube.sites, np.array([0.5, 0.5, -0.5]))
    sys = diagonalize(assemble_hamiltonian(cube, math.inf, real, HoppingSpec(8)))
    assert sys.eigenvalues.tolist() == [-0.5, 0.5, 0.5]
    assert np.allclose(sys.eigenvectors, np.array([[0, 1, 0], [0, 0, 1], [1, 0, 0]]))


def test_localization_center_examples():
    cube = box(4)
    psi = np.zeros(len(cube))
    psi[cube.index_of(np.array([[3]]))[0]] = 1.0
    assert localization_center(psi, cube) == (3,)
    psi = np.zeros(len(cube))
    psi[[3, 5]] = 0.7  # sites -1 and 1
    assert localization_center(psi, cube) == (-1,)
    with pytest.raises(UsageError):
        localization_center(np.zeros(len(cube)), cube)


@pytest.mark.parametrize("gamma", [2.0, 4.0, 8.0])
def test_planted_power_law(gamma):
    cube = box(32)
    psi = np.maximum(1, sup_norm(cube.sites)).astype(float) ** -gamma
    fit = fit_decay_exponent(psi / np.linalg.norm(psi), cube, (0,))
    assert fit.gamma == pytest.approx(gamma, abs=0.05)
    assert fit.quality > 0.999


def test_planted_power_law_off_center():
    cube = box(32)
    c = np.array([5])
    psi = np.maximum(1, np.abs(cube.sites - c).max(axis=1)).astype(float) ** -4.0
    assert fit_decay_exponent(psi, cube, (5,)).gamma == pytest.approx(4.0, abs=0.05)


def test_exponential_flags_quality():
    cube = box(32)
    power = np.maximum(1, sup_norm(cube.sites)).astype(float) ** -4.0
    expo = np.exp(-0.5 * sup_norm(cube.sites).astype(float))
    q_pow = fit_decay_exponent(power, cube, (0,)).quality
    q_exp = fit_decay_exponent(expo, cube, (0,)).quality
    assert q_exp < q_pow
    g_small = fit_decay_exponent(np.exp(-0.5 * sup_norm(box(16).sites).astype(float)), box(16), (0,)).gamma
    assert fit_decay_exponent(expo, cube, (0,)).gamma > g_small


def test_delta_insufficient():
    cube = box(16)
    psi = np.zeros(len(cube))
    psi[16] = 1.0
    with pytest.raises(InsufficientDataError):
        fit_decay_exponent(psi, cube, (0,))


def test_decay_exponents_vector():
    sys = diagonalize(make_op(lam=50.0, seed=0).hamiltonian(box(30)))
    g = decay_exponents(sys)
    assert g.shape == (len(sys),)
    assert np.nanmedian(g) > 2


def test_sule_diagonal_limit():
    sys = diagonalize(make_op(lam=math.inf, seed=4).hamiltonian(box(12)))
    rep = sule_constant(sys, gamma=2.0, eps_prime=1 / 3)
    assert rep.D <= 1.0
    assert rep.D == 1.0  # the delta at the origin contributes exactly 1


def test_sule_synthetic_equals_one():
    H = make_op(lam=50.0).hamiltonian(box(20))
    cube = H.cube
    c = np.array([1])
    gamma = 3.0
    psi = np.maximum(1, np.abs(cube.sites - c).max(axis=1)).astype(float) ** -gamma
    sys = EigenSystem(H, np.array([0.0]), psi[:, None], c[None, :])
    rep = sule_constant(sys, gamma, 1 / 3)
    assert rep.D == pytest.approx(1.0, rel=1e-12)


def test_sule_rejects_nonpositive_gamma():
    sys = diagonalize(make_op(lam=math.inf).hamiltonian(box(3)))
    with pytest.raises(UsageError):
        sule_constant(sys, 0.0, 1 / 3)


def test_maximizer_diagonal_always_bad():
    sys = diagonalize(make_op(lam=math.inf, seed=6).hamiltonian(box(20)))
    frac, n = maximizer_bad_fraction(sys, 4, desk_params())
    assert n > 0 and frac == 1.0


def test_maximizer_cube_must_fit():
    sys = diagonalize(make_op(lam=math.inf, seed=6).hamiltonian(box(10)))
    j = int(np.argmax(sup_norm(sys.centers)))
    with pytest.raises(UsageError):
        maximizer_cube_bad(sys, j, 4, desk_params())


@pytest.mark.parametrize("d, N", [(1, 15), (2, 4)])
def test_center_counting_diagonal(d, N):
    sys = diagonalize(make_op(lam=math.inf, d=d, seed=2).hamiltonian(box(N, d)))
    for L in range(1, N + 1):
        assert center_counting(sys, L).count == (2 * L + 1) ** d
    with pytest.raises(UsageError):
        center_counting(sys, 0)
