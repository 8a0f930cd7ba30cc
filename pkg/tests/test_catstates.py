import math

import numpy as np
import pytest

from bhvar import catstates as cats
from bhvar import cs_algebra, fock
from bhvar.cs_algebra import GlauberState


def test_epsilon_zero_is_identity():
    fam = cats.build_localized_family(4, 3, 0.0)
    assert np.array_equal(fam.xis, np.eye(4))
    assert fam.gram_residual() == 0.0


def test_lowdin_family_orthonormal_and_close():
    fam = cats.build_localized_family(3, 4, 0.05, seed=7)
    assert fam.gram_residual() <= 1e-12
    assert np.all(np.abs(np.diag(fam.xis)) ** 2 >= 1 - 2 * 0.05)
    rng = np.random.default_rng(7)
    phases = np.exp(2j * np.pi * rng.random((3, 3)))
    u = math.sqrt(0.05) * phases
    np.fill_diagonal(u, math.sqrt(0.9))
    # the input overlaps are O(sqrt(eps)), so is the symmetric correction of the amplitudes
    assert np.max(np.abs(fam.xis - u)) <= 2 * math.sqrt(0.05)
    # site weights move at O(eps)
    assert np.max(np.abs(np.abs(fam.xis) ** 2 - np.abs(u) ** 2)) <= 2 * 0.05


def test_family_overlaps_power_of_gram():
    fam = cats.build_localized_family(3, 4, 0.05, seed=2)
    for h in range(3):
        for l in range(3):
            ov = cs_algebra.sum_overlap(fam.member(h), fam.member(l))
            assert abs(ov - (h == l)) <= 1e-12


def test_epsilon_out_of_range():
    with pytest.raises(ValueError):
        cats.build_localized_family(3, 2, 0.5)
    with pytest.raises(ValueError):
        cats.build_localized_family(3, 2, -0.1)


def test_cat_single_site():
    fam = cats.build_localized_family(1, 3, 0.0)
    c = cats.build_cat(fam, 1)
    v = cats.cat_vector(c, fock.enumerate_sector(1, 3))
    assert abs(abs(v.amps[0]) - 1) <= 1e-15
    assert cats.cat_observables(c, fock.enumerate_sector(1, 3)).n_i[0] == pytest.approx(3)


def test_cat_coefficients_and_orthonormality():
    fam = cats.build_localized_family(3, 3, 0.0)
    basis = fock.enumerate_sector(3, 3)
    cs_ = [cats.build_cat(fam, k) for k in (1, 2, 3)]
    assert all(np.allclose(np.abs(c.coefficients), 1 / math.sqrt(3)) for c in cs_)
    vs = [cats.cat_vector(c, basis) for c in cs_]
    for q in range(3):
        for k in range(3):
            assert abs(vs[q].inner(vs[k]) - (q == k)) <= 1e-12


def test_cat_k_range_and_sector():
    fam = cats.build_localized_family(3, 3, 0.0)
    with pytest.raises(ValueError):
        cats.build_cat(fam, 0)
    with pytest.raises(ValueError, match="sector"):
        cats.cat_observables(cats.build_cat(fam, 1), fock.enumerate_sector(3, 2))


def test_non_orthogonal_family_rejected():
    xis = np.array([[1, 0.6], [0, 0.8]], dtype=complex)
    with pytest.raises(ValueError, match="norm"):
        cats.build_cat(cats.LocalizedFamily(N=2, xis=xis, epsilon=0.0), 1)


def test_cat_densities():
    fam = cats.build_localized_family(3, 6, 0.0)
    basis = fock.enumerate_sector(3, 6)
    assert basis.dim == 28
    for k in (1, 2, 3):
        obs = cats.cat_observables(cats.build_cat(fam, k), basis)
        assert np.max(np.abs(obs.n_i - 2)) <= 1e-12
        assert abs(obs.norm - 1) <= 1e-12


def test_cat_density_sum_with_leakage():
    fam = cats.build_localized_family(3, 4, 0.08, seed=1)
    basis = fock.enumerate_sector(3, 4)
    obs = cats.cat_observables(cats.build_cat(fam, 2), basis)
    assert obs.n_i.sum() == pytest.approx(4, abs=1e-12)


def test_momentum_selectivity_exact():
    fam = cats.build_localized_family(3, 3, 0.0)
    basis = fock.enumerate_sector(3, 3)
    for q in (1, 3):
        amps = cats.cat_momentum_amplitudes(cats.build_cat(fam, q), basis)
        assert len(amps) == 10
        for a in amps:
            if a.klass != q % 3:
                assert abs(a.amplitude) <= 1e-12
        w = cats.class_weights(amps, 3)
        assert w[q % 3] == pytest.approx(1.0, abs=1e-12)


def test_momentum_leakage_small():
    basis = fock.enumerate_sector(3, 3)
    out = []
    for eps in (0.01, 0.05):
        fam = cats.build_localized_family(3, 3, eps, seed=4)
        w = cats.class_weights(cats.cat_momentum_amplitudes(cats.build_cat(fam, 1), basis), 3)
        out.append(1 - w[1])
    # leakage is reported, not bounded tightly; it stays well below N * epsilon here
    assert all(0 <= x <= 3 * eps for x, eps in zip(out, (0.01, 0.05)))


def test_exact_family_duals_are_plane_waves():
    M = 4
    for l in range(M):
        alpha = cs_algebra.mode_fourier(np.eye(M)[l])
        k = np.arange(1, M + 1)
        assert np.allclose(alpha, np.exp(-2j * np.pi * k * (l + 1) / M) / math.sqrt(M), atol=1e-15)


def test_glauber_quasi_orthogonality():
    for M, N in ((3, 3.0), (5, 1.7)):
        X = [GlauberState(math.sqrt(N) * np.eye(M)[l]) for l in range(M)]
        for h in range(M):
            for l in range(M):
                if h != l:
                    ov = abs(cs_algebra.glauber_overlap(X[h], X[l]))
                    assert abs(ov - math.exp(-N)) <= 1e-12 * math.exp(-N)
