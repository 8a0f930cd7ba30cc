"""Identity suite: every algebraic and dynamical invariant, measured against an oracle.

Each check returns a residual that is compared with a fixed tolerance. The
suite is grouped in scopes so that a quick subset can be run from the CLI.
"""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from . import catstates, cs_algebra, fock, gutzwiller, mf_dynamics, oracles
from .cs_algebra import GlauberState, SuMState
from .integrator import IntegratorConfig, integrate
from .model import ring_params

SCOPES = ("algebra", "dynamics", "duality", "cats")


@dataclass(frozen=True)
class CheckResult:
    name: str
    scope: str
    anchor: str
    residual: float
    tolerance: float
    passed: bool
    seconds: float
    detail: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Check:
    name: str
    scope: str
    anchor: str
    tolerance: float
    fn: Callable[[], object]

    def run(self) -> CheckResult:
        start = time.perf_counter()
        out = self.fn()
        residual, detail = out if isinstance(out, tuple) else (out, {})
        residual = float(residual)
        return CheckResult(
            self.name, self.scope, self.anchor, residual, self.tolerance,
            bool(residual <= self.tolerance), time.perf_counter() - start, detail,
        )


REGISTRY: list[Check] = []


def check(scope: str, anchor: str, tolerance: float):
    def wrap(fn):
        REGISTRY.append(Check(fn.__name__, scope, anchor, tolerance, fn))
        return fn

    return wrap


def _rng(seed: int = 2024) -> np.random.Generator:
    return np.random.default_rng(seed)


# ---------------------------------------------------------------------------
# algebra


@check("algebra", "SU(M) overlap (eta* . xi)^N", 1e-12)
def suM_overlap():
    rng = _rng(1)
    worst = 0.0
    for M, N in ((2, 4), (3, 5), (4, 4)):
        for _ in range(10):
            eta, xi = oracles.random_unit(rng, M), oracles.random_unit(rng, M)
            brute = np.vdot(oracles.sum_state_by_ladders(eta, N), oracles.sum_state_by_ladders(xi, N))
            worst = max(worst, abs(cs_algebra.sum_overlap(SuMState(N, eta), SuMState(N, xi)) - brute))
    return worst


@check("algebra", "SU(M) one- and two-body expectation values", 1e-12)
def suM_expectations():
    rng = _rng(2)
    worst = 0.0
    for M, N in ((2, 4), (3, 5), (4, 4)):
        basis = fock.enumerate_sector(M, N)
        for _ in range(10):
            xi = oracles.random_unit(rng, M)
            v = oracles.sum_state_by_ladders(xi, N)
            i, m = rng.integers(M, size=2)
            e = cs_algebra.sum_expectations(SuMState(N, xi), int(i), int(m))
            n = oracles.dense_op(basis, "number", int(i))
            worst = max(
                worst,
                abs(e.n_i - np.vdot(v, n @ v)),
                abs(e.n_i_n_i_minus_1 - np.vdot(v, (n @ n - n) @ v)),
                abs(e.hop_mi - np.vdot(v, oracles.dense_op(basis, "hop", int(m), int(i)) @ v)),
            )
    return worst


@check("algebra", "generalized pair element N eta_m* xi_i (eta* . xi)^(N-1)", 1e-12)
def suM_pair_element():
    rng = _rng(3)
    worst = 0.0
    for M, N in ((2, 4), (3, 5), (4, 4)):
        basis = fock.enumerate_sector(M, N)
        for _ in range(10):
            eta, xi = oracles.random_unit(rng, M), oracles.random_unit(rng, M)
            m, i = (int(x) for x in rng.integers(M, size=2))
            brute = np.vdot(
                oracles.sum_state_by_ladders(eta, N),
                oracles.dense_op(basis, "hop", m, i) @ oracles.sum_state_by_ladders(xi, N),
            )
            worst = max(worst, abs(cs_algebra.sum_pair_element(SuMState(N, eta), SuMState(N, xi), m, i) - brute))
    return worst


@check("algebra", "Glauber state as weighted sum of SU(M) sector states", 1e-12)
def glauber_sector_decomposition():
    rng = _rng(4)
    worst = 0.0
    total_dev = 0.0
    for M in (2, 3):
        z = 1.2 * oracles.random_unit(rng, M)
        state = GlauberState(z)
        N_bar = state.N_bar
        xi = z / math.sqrt(N_bar)
        sectors = cs_algebra.glauber_fock_amplitudes(state)
        total = 0.0
        for sv in sectors:
            S = sv.N
            w = cs_algebra.glauber_sector_weight(state, xi, S)
            total += abs(w) ** 2
            ref = w * cs_algebra.sum_fock_amplitudes(SuMState(S, xi), sv.basis).amps
            worst = max(worst, float(np.max(np.abs(sv.amps - ref))))
            worst = max(worst, float(np.max(np.abs(sv.amps - oracles.glauber_sector_by_ladders(z, S)))))
        total_dev = max(total_dev, abs(total - 1.0))
    return max(worst, total_dev), {"sum_weights_deviation": total_dev}


@check("algebra", "group element E, T(zeta) and disentangled form on the extremal state", 1e-10)
def group_element_forms():
    rng = _rng(5)
    M, N = 3, 4
    basis = fock.enumerate_sector(M, N)
    worst = 0.0
    exps = set()
    for _ in range(20):
        st = SuMState(N, oracles.random_unit(rng, M))
        params = cs_algebra.parametrize_group_element(st)
        act = cs_algebra.disentangled_action(params, st, basis)
        ref = cs_algebra.sum_fock_amplitudes(st, basis).amps
        for vec in (act.E_applied, act.T_applied, act.disentangled):
            worst = max(worst, cs_algebra.phase_aligned_residual(vec.amps, ref)[0])
        rep = cs_algebra.normalization_exponent_report(N, params.theta, act.raising_norm)
        exps.add(rep["matching_exponent"])
    return worst, {"normalization_exponent": sorted(exps)}


@check("algebra", "normalization of exp(u J+)|N,0..> is (1+|u|^2)^(N/2)", 1e-10)
def normalization_exponent():
    rng = _rng(6)
    worst = 0.0
    for M, N in ((2, 5), (3, 4)):
        basis = fock.enumerate_sector(M, N)
        for _ in range(5):
            st = SuMState(N, oracles.random_unit(rng, M))
            params = cs_algebra.parametrize_group_element(st)
            act = cs_algebra.disentangled_action(params, st, basis)
            rep = cs_algebra.normalization_exponent_report(N, params.theta, act.raising_norm)
            worst = max(worst, rep["residual_N_over_2"])
    return worst, {"matching_exponent": "N/2"}


@check("algebra", "two-mode reduction to SU(2) spin coherent states", 1e-12)
def su2_reduction():
    rng = _rng(7)
    worst = 0.0
    N = 5
    basis = fock.enumerate_sector(2, N)
    for _ in range(10):
        st = SuMState(N, oracles.random_unit(rng, 2))
        red = cs_algebra.su2_reduce(st)
        # basis order (N,0), (N-1,1), ... matches spin index s
        ref = cs_algebra.sum_fock_amplitudes(st, basis).amps
        worst = max(worst, float(np.max(np.abs(red.phase * red.spin_amplitudes - ref))))
    return worst


@check("algebra", "Weyl-Heisenberg brackets {alpha_j, alpha_l*} = -i delta_jl, {alpha_j, N_l} = -i delta_jl alpha_j", 1e-8)
def weyl_heisenberg_brackets():
    rng = _rng(8)
    worst = 0.0
    for _ in range(4):
        st = gutzwiller.random_state(3, 12, rng, n_top_empty=1)
        alpha = gutzwiller.order_parameter_alpha(st)
        for j in range(3):
            for l in range(3):
                worst = max(worst, abs(gutzwiller.poisson_bracket_fd(st, j, l) - (-1j if j == l else 0)))
                target = -1j * alpha[j] if j == l else 0
                worst = max(worst, abs(gutzwiller.alpha_number_bracket_fd(st, j, l) - target))
    return worst


@check("algebra", "su(M) two-boson commutators close on the sector", 1e-12)
def suM_commutators():
    rng = _rng(9)
    basis = fock.enumerate_sector(3, 4)
    E = {(j, k): fock.hop_matrix(basis, j, k).toarray() for j in range(3) for k in range(3)}
    worst = 0.0
    for _ in range(20):
        j, k, m, n = (int(x) for x in rng.integers(3, size=4))
        lhs = E[j, k] @ E[m, n] - E[m, n] @ E[j, k]
        rhs = (k == m) * E[j, n] - (j == n) * E[m, k]
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst


@check("algebra", "Bose-Hubbard matrix is Hermitian", 1e-14)
def bh_hermitian():
    H = fock.build_bh_matrix(ring_params(4, 1.3, 0.7), fock.enumerate_sector(4, 4))
    return float(np.max(np.abs(H - H.conj().T)) / np.max(np.abs(H)))


# ---------------------------------------------------------------------------
# dynamics

T_END = 10.0
DT = 1e-3


def low_filling_gutzwiller(n_max: int = 30) -> gutzwiller.GutzwillerState:
    """Per-site superposition of 0, 1, 2 bosons with site-dependent phases; mean filling 1."""
    f = np.zeros((3, n_max + 1), dtype=complex)
    phases = np.array([0.0, 0.7, -1.1])
    f[:, 0] = math.sqrt(0.25)
    f[:, 1] = math.sqrt(0.5) * np.exp(1j * phases)
    f[:, 2] = math.sqrt(0.25)
    return gutzwiller.GutzwillerState(f)


def gutzwiller_drifts(U: float, state: gutzwiller.GutzwillerState, t_end: float = T_END, dt: float = DT) -> dict:
    params = ring_params(3, U, 1.0)
    n = np.arange(state.n_max + 1)
    monitors = {
        "energy": lambda f: gutzwiller.energy_F(gutzwiller.GutzwillerState(f), params),
        "N_bar": lambda f: float(np.sum(np.abs(f) ** 2 * n)),
        "I": lambda f: np.sum(np.abs(f) ** 2, axis=1),
    }
    traj = integrate(gutzwiller.make_rhs(params), state.f, IntegratorConfig("rk4", dt, t_end, 10), monitors)
    E, Nb, I = traj.series("energy"), traj.series("N_bar"), traj.series("I")
    return {
        "energy": float(np.max(np.abs(E - E[0]))),
        "N_bar": float(np.max(np.abs(Nb - Nb[0]))),
        "I": float(np.max(np.abs(I - 1.0))),
    }


@check("dynamics", "conservation of N, I_j and the Gutzwiller energy", 1e-8)
def gutzwiller_conservation():
    detail = {}
    for U in (0.0, 0.5, 2.0):
        detail[f"U={U}"] = gutzwiller_drifts(U, low_filling_gutzwiller())
    return max(max(d.values()) for d in detail.values()), detail


@check("dynamics", "norm and energy conservation of the DNLS and SU(M) flows", 1e-8)
def mean_field_conservation():
    params = ring_params(3, 2.0, 1.0)
    z0 = np.array([1.2, 0.8j, -0.5 + 0.3j])
    detail = {}
    for name, U_eff, y0 in (
        ("dnls", params.U, z0),
        ("sum", mf_dynamics.u_eff_sum(params.U, 4), 2 * z0 / np.linalg.norm(z0)),
    ):
        mon = {
            "E": lambda y, U_eff=U_eff: mf_dynamics.kernel_energy(y, U_eff, params.T),
            "N": lambda y: float(np.vdot(y, y).real),
        }
        traj = integrate(lambda y, U_eff=U_eff: mf_dynamics.kernel_rhs(y, U_eff, params.T), y0,
                         IntegratorConfig("rk4", DT, T_END, 10), mon)
        E, N = traj.series("E"), traj.series("N")
        detail[name] = {"energy": float(np.max(np.abs(E - E[0]))), "norm": float(np.max(np.abs(N - N[0])))}
    return max(max(d.values()) for d in detail.values()), detail


@check("dynamics", "plane-wave orbits of the DNLS and SU(M) flows", 1e-12)
def plane_wave_residuals():
    worst = 0.0
    for M, U in ((4, 1.0), (5, 2.5), (3, -1.0)):
        params = ring_params(M, U, 1.0)
        for k in range(1, M + 1):
            for scheme, N in (("dnls", None), ("sum", 5)):
                A = 0.8 * np.exp(0.3j) if scheme == "dnls" else math.sqrt(N / M)
                pw = mf_dynamics.plane_wave(M, k, A, params, scheme=scheme, N=N)
                U_eff = U if scheme == "dnls" else mf_dynamics.u_eff_sum(U, N)
                for t in (0.0, 0.37, 2.0):
                    zt = pw.at(t)
                    res = mf_dynamics.kernel_rhs(zt, U_eff, params.T) - (-1j * pw.omega * zt)
                    worst = max(worst, float(np.max(np.abs(res))))
    return worst


@check("dynamics", "SU(M) flow equals the DNLS flow with U -> U(N-1)/N", 1e-14)
def scheme_agreement():
    rng = _rng(11)
    params = ring_params(4, 1.7, 1.0)
    worst = 0.0
    for N in (1, 3, 7):
        psi = math.sqrt(N) * oracles.random_unit(rng, 4)
        a = mf_dynamics.rhs_sum(mf_dynamics.PsiState(N, psi), params)
        scaled = ring_params(4, mf_dynamics.u_eff_sum(1.7, N), 1.0)
        b = mf_dynamics.rhs_dnls(mf_dynamics.DnlsState(psi), scaled)
        worst = max(worst, float(np.max(np.abs(a - b))))
    return worst


@check("dynamics", "SU(M) effective energy equals <xi|H|xi>", 1e-12)
def suM_energy_vs_exact():
    rng = _rng(12)
    worst = 0.0
    for M, N in ((3, 5), (2, 4), (3, 2)):
        params = ring_params(M, 1.3, 0.8)
        H = fock.build_bh_matrix(params, fock.enumerate_sector(M, N))
        for _ in range(5):
            xi = oracles.random_unit(rng, M)
            v = oracles.sum_state_by_ladders(xi, N)
            e = mf_dynamics.energy_sum(mf_dynamics.PsiState.from_xi(N, xi), params)
            worst = max(worst, abs(e - np.vdot(v, H @ v).real))
    return worst


@check("dynamics", "coherent manifold is invariant at U = 0 (alpha_j = z_j)", 1e-8)
def coherent_reduction_U0():
    dev, _ = alpha_vs_dnls(0.0)
    return dev


def alpha_vs_dnls(U: float, t_end: float = T_END, dt: float = DT) -> tuple[float, np.ndarray]:
    """Max ``|alpha_j(t) - z_j(t)|`` from the same coherent start; also the time series."""
    params = ring_params(3, U, 1.0)
    z0 = np.array([1.0, 0.5j, -0.6 + 0.4j])
    z0 = z0 * math.sqrt(3.0) / np.linalg.norm(z0)
    state = gutzwiller.coherent_embed(GlauberState(z0))
    cfg = IntegratorConfig("rk4", dt, t_end, 10)
    tg = integrate(gutzwiller.make_rhs(params), state.f, cfg,
                   {"alpha": lambda f: gutzwiller.order_parameter_alpha(gutzwiller.GutzwillerState(f))})
    tz = integrate(lambda y: mf_dynamics.kernel_rhs(y, U, params.T), z0, cfg, {"z": lambda y: y.copy()})
    diff = np.max(np.abs(tg.series("alpha") - tz.series("z")), axis=1)
    return float(np.max(diff)), diff


def rk4_error_ratio() -> tuple[float, dict]:
    """Error ratio under step halving for ``dz/dt = i T z``."""
    Tn, t_end = 1.0, 10.0
    errs = []
    for dt in (0.1, 0.05):
        traj = integrate(lambda y: 1j * Tn * y, np.array([1.0 + 0j]), IntegratorConfig("rk4", dt, t_end))
        errs.append(abs(traj.final[0] - np.exp(1j * Tn * t_end)))
    return errs[0] / errs[1], {"errors": errs}


@check("dynamics", "RK4 global order 4 (error ratio 16 under step halving)", 2.0)
def rk4_order():
    ratio, detail = rk4_error_ratio()
    detail["ratio"] = ratio
    return abs(ratio - 16.0), detail


@check("dynamics", "exact propagation conserves norm and energy", 1e-10)
def exact_conservation():
    params = ring_params(3, 1.5, 1.0)
    basis = fock.enumerate_sector(3, 4)
    psi0 = cs_algebra.sum_fock_amplitudes(SuMState(4, np.array([0.8, 0.6j, 0.0])), basis)
    H = fock.build_bh_matrix(params, basis)
    states = fock.evolve_exact(psi0, params, np.linspace(0, 10, 21))
    E0 = np.vdot(psi0.amps, H @ psi0.amps).real
    return max(max(abs(s.norm() - 1), abs(np.vdot(s.amps, H @ s.amps).real - E0)) for s in states)


# ---------------------------------------------------------------------------
# duality


@check("duality", "SU(M) state in momentum modes has parameters alpha = DFT(xi)", 1e-12)
def suM_duality():
    rng = _rng(13)
    worst = 0.0
    M, N = 3, 4
    basis = fock.enumerate_sector(M, N)
    R = fock.momentum_transform(basis)
    for _ in range(10):
        st = SuMState(N, oracles.random_unit(rng, M))
        site = cs_algebra.sum_fock_amplitudes(st, basis).amps
        mom = cs_algebra.momentum_fock_amplitudes(st, basis).amps
        worst = max(worst, float(np.max(np.abs(R.conj().T @ site - mom))))
    return worst


@check("duality", "Glauber product state in momentum modes has amplitudes v = DFT(z)", 1e-12)
def glauber_duality():
    rng = _rng(14)
    z = 1.1 * oracles.random_unit(rng, 3)
    v = cs_algebra.mode_fourier(z)
    site = cs_algebra.glauber_fock_amplitudes(GlauberState(z))
    mom = cs_algebra.glauber_fock_amplitudes(GlauberState(v), S_max=site[-1].N)
    worst = 0.0
    for a, b in zip(site, mom):
        R = fock.momentum_transform(a.basis)
        worst = max(worst, float(np.max(np.abs(R.conj().T @ a.amps - b.amps))))
    return worst


@check("duality", "ring translation D a_l D+ = a_(l+1)", 1e-10)
def displacement_covariance():
    worst = 0.0
    for M, N in ((3, 4), (4, 3)):
        hi = fock.enumerate_sector(M, N)
        lo = fock.enumerate_sector(M, N - 1)
        D_hi, D_lo = fock.displacement_matrix(hi), fock.displacement_matrix(lo)
        for l in range(M):
            a_l = fock.ladder_matrix(hi, l, "lower").toarray()
            a_next = fock.ladder_matrix(hi, (l + 1) % M, "lower").toarray()
            worst = max(worst, float(np.max(np.abs(D_lo @ a_l @ D_hi.conj().T - a_next))))
    return worst


@check("duality", "mode Fourier transform round trip", 1e-14)
def fourier_round_trip():
    rng = _rng(15)
    z = oracles.random_unit(rng, 5) * 2
    back = cs_algebra.mode_fourier(cs_algebra.mode_fourier(z), "momentum_to_site")
    return float(np.max(np.abs(back - z)))


# ---------------------------------------------------------------------------
# cats


def _cat_set(M: int, N: int, epsilon: float = 0.0, seed: int = 0):
    fam = catstates.build_localized_family(M, N, epsilon, seed)
    basis = fock.enumerate_sector(M, N)
    cats = [catstates.build_cat(fam, k) for k in range(1, M + 1)]
    return fam, basis, cats


@check("cats", "cat states from an orthogonal localized family are orthonormal", 1e-12)
def cat_orthonormality():
    worst = 0.0
    for N, eps in ((3, 0.0), (6, 0.0), (4, 0.05)):
        _, basis, cats = _cat_set(3, N, eps, seed=3)
        vecs = [catstates.cat_vector(c, basis) for c in cats]
        for q, a in enumerate(vecs):
            for k, b in enumerate(vecs):
                worst = max(worst, abs(a.inner(b) - (q == k)))
    return worst


@check("cats", "exactly localized cats have uniform densities N/M", 1e-12)
def cat_densities():
    worst = 0.0
    for N in (3, 6):
        _, basis, cats = _cat_set(3, N)
        for c in cats:
            worst = max(worst, float(np.max(np.abs(catstates.cat_observables(c, basis).n_i - N / 3))))
    return worst


@check("cats", "exactly localized cats live in one quasi-momentum class", 1e-12)
def cat_selectivity():
    worst = 0.0
    for N in (3, 6):
        _, basis, cats = _cat_set(3, N)
        for c in cats:
            for a in catstates.cat_momentum_amplitudes(c, basis):
                if a.klass != c.k % 3:
                    worst = max(worst, abs(a.amplitude))
    return worst


@check("cats", "Glauber localized states overlap as exp(-N)", 1e-12)
def glauber_quasi_orthogonality():
    worst = 0.0
    for M, N in ((3, 3.0), (3, 6.0), (4, 2.5)):
        X = [GlauberState(math.sqrt(N) * np.eye(M)[l]) for l in range(M)]
        for h in range(M):
            for l in range(M):
                if h != l:
                    worst = max(worst, abs(abs(cs_algebra.glauber_overlap(X[h], X[l])) - math.exp(-N)) / math.exp(-N))
    return worst


# ---------------------------------------------------------------------------


def run_identity_suite(scope: str = "all") -> dict:
    """Run the checks of one scope (or all) and return a JSON-ready report."""
    if scope != "all" and scope not in SCOPES:
        raise ValueError(f"unknown scope {scope!r}; choose from all, {', '.join(SCOPES)}")
    selected = [c for c in REGISTRY if scope == "all" or c.scope == scope]
    results = [c.run() for c in selected]
    return {
        "scope": scope,
        "passed": all(r.passed for r in results),
        "n_checks": len(results),
        "n_failed": sum(not r.passed for r in results),
        "checks": [asdict(r) for r in results],
    }
