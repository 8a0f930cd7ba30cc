import math

import numpy as np
import pytest

from bhvar import cs_algebra, fock, mf_dynamics as mf, oracles
from bhvar.integrator import IntegratorConfig, integrate
from bhvar.model import BHParams, ring_params


def test_rhs_dnls_zero_and_single_site():
    assert np.all(mf.rhs_dnls(mf.DnlsState(np.zeros(3)), ring_params(3, 2.0)) == 0)
    params = BHParams(1.5, np.zeros((1, 1)))
    z0 = np.array([0.8 + 0.3j])
    traj = integrate(lambda y: mf.rhs_dnls(mf.DnlsState(y), params), z0, IntegratorConfig("rk4", 1e-3, 2.0))
    expected = z0 * np.exp(-1j * 1.5 * abs(z0[0]) ** 2 * 2.0)
    assert abs(abs(traj.final[0]) - abs(z0[0])) <= 1e-12
    assert abs(traj.final[0] - expected[0]) <= 1e-10


def test_plane_wave_quarter_mode():
    params = ring_params(4, 1.0, 1.0)
    pw = mf.plane_wave(4, 1, 1.0, params)
    assert pw.omega == pytest.approx(1.0)  # U|A|^2 - 2T cos(pi/2)
    for t in (0.0, 0.3, 5.0):
        z = pw.at(t)
        assert np.max(np.abs(mf.rhs_dnls(mf.DnlsState(z), params) + 1j * pw.omega * z)) <= 1e-12


def test_plane_wave_examples():
    params = ring_params(5, 0.0, 1.0)
    assert mf.plane_wave(5, 5, 0.7, params).omega == pytest.approx(-2.0)
    pw = mf.plane_wave(5, 2, 0.0, ring_params(5, 3.0, 1.0))
    assert pw.omega == pytest.approx(-2 * math.cos(4 * math.pi / 5))
    assert np.all(pw.z == 0)


def test_plane_wave_two_sites_single_bond():
    params = ring_params(2, 0.0, 1.0)
    assert mf.plane_wave(2, 2, 1.0, params).omega == pytest.approx(-1.0)
    assert mf.plane_wave(2, 1, 1.0, params).omega == pytest.approx(1.0)


def test_plane_wave_errors():
    with pytest.raises(ValueError, match="translation"):
        mf.plane_wave(4, 1, 1.0, ring_params(4, 1.0, periodic=False))
    with pytest.raises(ValueError, match="needs N"):
        mf.plane_wave(4, 1, 1.0, ring_params(4, 1.0), scheme="sum")


def test_plane_wave_sum_scheme():
    params = ring_params(3, 2.0, 1.0)
    N = 6
    pw = mf.plane_wave(3, 1, math.sqrt(2), params, scheme="sum", N=N)
    assert pw.omega == pytest.approx(2.0 * 5 / 6 * 2 - 2 * math.cos(2 * math.pi / 3))
    z = pw.at(0.7)
    assert np.max(np.abs(mf.rhs_sum(mf.PsiState(N, z), params) + 1j * pw.omega * z)) <= 1e-12


def test_energy_dnls_examples():
    assert mf.energy_dnls(mf.DnlsState([math.sqrt(2), 0]), ring_params(2, 1.3)) == pytest.approx(2 * 1.3)
    M, U, T = 5, 0.7, 1.1
    # each of the M bonds contributes -T (z_j* z_l + c.c.) = -2T
    assert mf.energy_dnls(mf.DnlsState(np.ones(M)), ring_params(M, U, T)) == pytest.approx(M * U / 2 - 2 * M * T)
    z = np.array([0.3, -1.2, 0.5])
    params = ring_params(3, 0.0, 0.9)
    assert mf.energy_dnls(mf.DnlsState(z), params) == pytest.approx(-z @ params.T @ z)


def test_rhs_sum_N1_has_no_interaction():
    params = ring_params(3, 5.0)
    psi = np.array([1.0, 0, 0], dtype=complex)
    assert np.allclose(mf.rhs_sum(mf.PsiState(1, psi), params), 1j * params.T @ psi)


def test_rhs_sum_large_N_limit():
    params = ring_params(3, 1.0)
    rng = np.random.default_rng(0)
    xi = oracles.random_unit(rng, 3)
    for N in (10, 100, 1000):
        psi = math.sqrt(N) * xi
        d = mf.rhs_sum(mf.PsiState(N, psi), params) - mf.rhs_dnls(mf.DnlsState(psi), params)
        assert np.allclose(d, 1j * np.abs(psi) ** 2 * psi / N)


def test_psi_state_validation():
    with pytest.raises(ValueError, match="N >= 1"):
        mf.PsiState(0, [0, 0])
    with pytest.raises(ValueError):
        mf.PsiState(2, [1, 0])
    with pytest.raises(ValueError):
        mf.u_eff_sum(1.0, 0)


def test_energy_sum_vs_exact():
    rng = np.random.default_rng(1)
    for M, N in ((2, 1), (2, 4), (3, 3), (3, 5)):
        params = ring_params(M, 1.9, 0.6)
        H = fock.build_bh_matrix(params, fock.enumerate_sector(M, N))
        for _ in range(5):
            xi = oracles.random_unit(rng, M)
            v = oracles.sum_state_by_ladders(xi, N)
            e = mf.energy_sum(mf.PsiState.from_xi(N, xi), params)
            assert abs(e - np.vdot(v, H @ v).real) <= 1e-12


def test_energy_sum_localized():
    N, U = 5, 1.3
    e = mf.energy_sum(mf.PsiState.from_xi(N, [1, 0, 0]), ring_params(3, U))
    assert e == pytest.approx(U * N * (N - 1) / 2)


def test_energy_sum_N1_is_hopping():
    xi = np.array([0.6, 0.8j, 0.0])
    params = ring_params(3, 4.0)
    assert mf.energy_sum(mf.PsiState.from_xi(1, xi), params) == pytest.approx(-np.vdot(xi, params.T @ xi).real)


def test_conservation_both_schemes():
    params = ring_params(4, 1.5)
    z0 = np.array([1.0, 0.2j, -0.4, 0.3 + 0.3j])
    for U_eff, y0 in ((1.5, z0), (mf.u_eff_sum(1.5, 3), math.sqrt(3) * z0 / np.linalg.norm(z0))):
        mon = {"E": lambda y, U=U_eff: mf.kernel_energy(y, U, params.T), "N": lambda y: np.vdot(y, y).real}
        traj = integrate(lambda y, U=U_eff: mf.kernel_rhs(y, U, params.T), y0, IntegratorConfig("rk4", 1e-3, 10.0, 50), mon)
        for k in ("E", "N"):
            s = traj.series(k)
            assert np.max(np.abs(s - s[0])) <= 1e-8


def test_gauge_covariance():
    params = ring_params(3, 2.0)
    z0 = np.array([1.0, 0.5j, -0.2])
    rhs = lambda y: mf.rhs_dnls(mf.DnlsState(y), params)  # noqa: E731
    cfg = IntegratorConfig("rk4", 1e-3, 3.0)
    a = integrate(rhs, z0, cfg).final
    b = integrate(rhs, np.exp(0.9j) * z0, cfg).final
    assert np.max(np.abs(np.exp(0.9j) * a - b)) <= 1e-12


def test_dnls_two_site_rabi():
    params = ring_params(2, 0.0, 1.0)
    traj = integrate(lambda y: mf.rhs_dnls(mf.DnlsState(y), params), np.array([1.0, 0.0]),
                     IntegratorConfig("rk4", 1e-3, 10.0, 100))
    for t, z in zip(traj.times, traj.snapshots):
        assert np.max(np.abs(z - [math.cos(t), 1j * math.sin(t)])) <= 1e-8
