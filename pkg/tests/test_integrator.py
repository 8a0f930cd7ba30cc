import numpy as np
import pytest

from bhvar.integrator import IntegrationError, IntegratorConfig, integrate


def test_config_validation():
    for kw in ({"method": "euler"}, {"dt": 0.0}, {"t_end": -1.0}, {"record_every": 0}):
        with pytest.raises(ValueError):
            IntegratorConfig(**kw)
    cfg = IntegratorConfig()
    assert cfg.method == "rk4" and cfg.dt == 1e-3


def test_zero_rhs_constant():
    y0 = np.array([1 + 2j, -0.5])
    traj = integrate(lambda y: np.zeros_like(y), y0, IntegratorConfig("rk4", 0.1, 1.0))
    assert all(np.array_equal(s, y0) for s in traj.snapshots)


def test_t_end_zero_single_record():
    traj = integrate(lambda y: 1j * y, np.array([1.0]), IntegratorConfig("rk4", 0.1, 0.0), {"r": lambda y: abs(y[0])})
    assert traj.times == [0.0] and traj.series("r").tolist() == [1.0]


def test_records_and_partial_last_step():
    traj = integrate(lambda y: 1j * y, np.array([1.0]), IntegratorConfig("rk4", 0.1, 1.05, 3))
    assert traj.times[0] == 0.0 and traj.times[-1] == pytest.approx(1.05)
    assert np.all(np.diff(traj.times) > 0)
    assert abs(traj.final[0] - np.exp(1.05j)) < 1e-5


@pytest.mark.parametrize("method,order", [("rk4", 16.0), ("midpoint", 4.0)])
def test_convergence_order(method, order):
    errs = []
    for dt in (0.1, 0.05):
        traj = integrate(lambda y: 1j * y, np.array([1.0 + 0j]), IntegratorConfig(method, dt, 10.0))
        errs.append(abs(traj.final[0] - np.exp(10j)))
    assert errs[0] / errs[1] == pytest.approx(order, rel=0.12)


def test_non_finite_aborts_with_time():
    rhs = lambda y: y**2  # noqa: E731  blows up at t = 1
    with pytest.raises(IntegrationError) as info:
        integrate(rhs, np.array([1.0]), IntegratorConfig("rk4", 0.01, 5.0))
    err = info.value
    assert 0.9 < err.last_good_time < 1.1
    assert len(err.trajectory.times) >= 1


def test_non_finite_initial_rhs():
    with pytest.raises(ValueError):
        integrate(lambda y: y / 0.0, np.array([1.0]), IntegratorConfig("rk4", 0.1, 1.0))


def test_deterministic():
    rhs = lambda y: -1j * (np.abs(y) ** 2 * y - np.roll(y, 1) - np.roll(y, -1))  # noqa: E731
    y0 = np.array([1.0, 0.3j, -0.5])
    a = integrate(rhs, y0, IntegratorConfig("rk4", 1e-2, 2.0))
    b = integrate(rhs, y0, IntegratorConfig("rk4", 1e-2, 2.0))
    assert all(np.array_equal(x, y) for x, y in zip(a.snapshots, b.snapshots))
