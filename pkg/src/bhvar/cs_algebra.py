"""SU(M) and Glauber coherent states on the Fock substrate.

An SU(M) coherent state ``|N, xi>`` is ``(N!)^{-1/2} (sum_i xi_i a_i^+)^N |0>``
with ``sum |xi_i|^2 = 1``; a Glauber product state ``|Z>`` has
``a_i |Z> = z_i |Z>``.  ``|Z>`` decomposes into sectors as

    |Z> = exp(-Nbar/2) sum_S Nbar^{S/2} / sqrt(S!) |S; xi>,   xi = z / sqrt(Nbar).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln
from scipy.stats import poisson

from . import fock
from .fock import FockBasis, SectorVector

NORM_TOL = 1e-12
TAIL_TARGET = 1e-12


class DegenerateStateWarning(UserWarning):
    """A quantity was evaluated at a degenerate point and its limit returned."""


def _as_complex_vector(v) -> np.ndarray:
    arr = np.asarray(v, dtype=complex).ravel()
    if not np.all(np.isfinite(arr)):
        raise ValueError("non-finite entries in coherent-state parameters")
    return arr


@dataclass(frozen=True)
class SuMState:
    N: int
    xi: np.ndarray

    def __post_init__(self):
        xi = _as_complex_vector(self.xi)
        if self.N < 0:
            raise ValueError(f"boson number must be non-negative, got {self.N}")
        if abs(np.vdot(xi, xi).real - 1.0) > NORM_TOL:
            raise ValueError(f"xi is not normalized: sum |xi|^2 = {np.vdot(xi, xi).real!r}")
        object.__setattr__(self, "xi", xi)

    @property
    def M(self) -> int:
        return self.xi.size

    @classmethod
    def normalized(cls, N: int, xi) -> "SuMState":
        xi = _as_complex_vector(xi)
        return cls(N, xi / np.linalg.norm(xi))

    def to_dict(self) -> dict:
        return {"type": "suM", "N": self.N, "xi": _pairs(self.xi)}


@dataclass(frozen=True)
class GlauberState:
    z: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "z", _as_complex_vector(self.z))

    @property
    def M(self) -> int:
        return self.z.size

    @property
    def N_bar(self) -> float:
        return float(np.vdot(self.z, self.z).real)

    def to_dict(self) -> dict:
        return {"type": "glauber", "z": _pairs(self.z)}


def _pairs(v):
    return [[float(c.real), float(c.imag)] for c in v]


def state_from_dict(data: dict):
    vec = lambda key: np.array([complex(re, im) for re, im in data[key]])
    if data.get("type") == "suM":
        return SuMState(int(data["N"]), vec("xi"))
    if data.get("type") == "glauber":
        return GlauberState(vec("z"))
    raise ValueError(f"unknown state type {data.get('type')!r}")


def _monomials(states: np.ndarray, x: np.ndarray) -> np.ndarray:
    # prod_i x_i^{m_i} with 0^0 = 1
    return np.prod(np.power(x[None, :], states), axis=1)


def sum_fock_amplitudes(state: SuMState, basis: FockBasis) -> SectorVector:
    """Fock expansion ``sqrt(N!/prod m_i!) prod xi_i^{m_i}``."""
    if basis.M != state.M or basis.N != state.N:
        raise ValueError(
            f"sector mismatch: state (M={state.M}, N={state.N}) vs basis (M={basis.M}, N={basis.N})"
        )
    m = basis.states
    log_c = 0.5 * (gammaln(state.N + 1) - np.sum(gammaln(m + 1), axis=1))
    return SectorVector(basis, np.exp(log_c) * _monomials(m, state.xi))


def _check_pair(eta: SuMState, xi: SuMState):
    if eta.N != xi.N or eta.M != xi.M:
        raise ValueError(f"sector mismatch: (M={eta.M}, N={eta.N}) vs (M={xi.M}, N={xi.N})")


def sum_overlap(eta: SuMState, xi: SuMState) -> complex:
    """``<eta|xi> = (sum_i conj(eta_i) xi_i)^N``."""
    _check_pair(eta, xi)
    return complex(np.vdot(eta.xi, xi.xi) ** eta.N)


def sum_pair_element(eta: SuMState, xi: SuMState, m: int, i: int) -> complex:
    """``<eta| a_m^+ a_i |xi> = N conj(eta_m) xi_i (eta . xi)^(N-1)``."""
    _check_pair(eta, xi)
    N = xi.N
    if N == 0:
        return 0j
    return complex(N * np.conj(eta.xi[m]) * xi.xi[i] * np.vdot(eta.xi, xi.xi) ** (N - 1))


@dataclass(frozen=True)
class SuMExpectations:
    n_i: float
    n_i_n_i_minus_1: float
    hop_mi: complex


def sum_expectations(state: SuMState, i: int, m: int) -> SuMExpectations:
    """Closed-form ``<n_i>``, ``<n_i (n_i - 1)>`` and ``<a_m^+ a_i>``."""
    if not (0 <= i < state.M and 0 <= m < state.M):
        raise IndexError(f"site index out of range for M={state.M}")
    N = state.N
    p = abs(state.xi[i]) ** 2
    return SuMExpectations(
        n_i=N * p,
        n_i_n_i_minus_1=N * (N - 1) * p * p,
        hop_mi=complex(N * np.conj(state.xi[m]) * state.xi[i]),
    )


def glauber_sector_weight(z: GlauberState, zeta, L: int) -> complex:
    """Weight ``<zeta; L | Z>`` of the ``L``-boson SU(M) state along ``zeta``.

    Evaluated as ``exp(-Nbar/2) (zeta^* . z)^L / sqrt(L!)``, which equals
    ``exp(-Nbar/2) Nbar^{L/2} / sqrt(L!) (zeta^* . xi)^L`` and stays finite at
    ``z = 0``.
    """
    if L < 0:
        raise ValueError(f"sector index must be non-negative, got {L}")
    zeta = zeta.xi if isinstance(zeta, SuMState) else _as_complex_vector(zeta)
    if zeta.size != z.M:
        raise ValueError(f"direction has {zeta.size} modes, state has {z.M}")
    if z.N_bar == 0.0 and L > 0:
        warnings.warn("Glauber state is the vacuum; weight of L > 0 is zero", DegenerateStateWarning)
        return 0j
    proj = np.vdot(zeta, z.z)
    log_mag = -0.5 * z.N_bar - 0.5 * gammaln(L + 1)
    if L == 0:
        return complex(math.exp(log_mag))
    return complex(math.exp(log_mag) * proj**L)


def poisson_tail(N_bar: float, S_max: int) -> float:
    """``sum_{S > S_max} exp(-Nbar) Nbar^S / S!``."""
    if N_bar == 0.0:
        return 0.0
    return float(poisson.sf(S_max, N_bar))


def sector_cutoff(N_bar: float, tail: float = TAIL_TARGET) -> int:
    """Smallest ``S_max`` whose Poisson tail is at most ``tail``."""
    S = int(N_bar)
    while poisson_tail(N_bar, S) > tail:
        S += 1
    return S


def glauber_fock_amplitudes(z: GlauberState, S_max: int | None = None) -> list[SectorVector]:
    """Fock amplitudes ``prod_i exp(-|z_i|^2/2) z_i^{m_i} / sqrt(m_i!)`` for sectors ``0..S_max``."""
    N_bar = z.N_bar
    if S_max is None:
        S_max = sector_cutoff(N_bar)
    tail = poisson_tail(N_bar, S_max)
    if tail > TAIL_TARGET:
        raise ValueError(f"S_max={S_max} leaves Poisson tail {tail:.3e} > {TAIL_TARGET:g}")
    try:
        fock.check_capacity(z.M, S_max)
    except fock.CapacityError as err:
        raise fock.CapacityError(f"tail bound {TAIL_TARGET:g} needs S_max={S_max}: {err}") from None
    out = []
    for S in range(S_max + 1):
        basis = fock.enumerate_sector(z.M, S)
        m = basis.states
        log_c = -0.5 * N_bar - 0.5 * np.sum(gammaln(m + 1), axis=1)
        out.append(SectorVector(basis, np.exp(log_c) * _monomials(m, z.z)))
    return out


def glauber_overlap(x: GlauberState, z: GlauberState) -> complex:
    """``<X|Z> = prod_j exp(conj(x_j) z_j - (|z_j|^2 + |x_j|^2)/2)``."""
    if x.M != z.M:
        raise ValueError("mode count mismatch")
    return complex(np.exp(np.vdot(x.z, z.z) - 0.5 * (x.N_bar + z.N_bar)))


# ---------------------------------------------------------------------------
# group-theoretic construction


@dataclass(frozen=True)
class GroupElementParams:
    """Parameters of ``E = exp(iS) exp(iD)`` and of the disentangled form.

    ``phi``: phases of ``S = sum phi_i n_i``; ``theta_vec``: mixing angles
    ``theta_2..theta_M`` of ``D = sum theta_k (a_1^+ a_k + a_k^+ a_1)``;
    ``theta``: their Euclidean norm; ``zeta``: ``theta_l exp(i(phi_l - phi_1))``;
    ``u = i tan(theta)``; ``eta = u zeta / theta``. At ``theta = pi/2`` the
    values of ``u`` and ``eta`` are infinite.
    """

    phi: np.ndarray
    theta_vec: np.ndarray
    theta: float
    u: complex
    eta: np.ndarray
    zeta: np.ndarray

    def forward(self) -> np.ndarray:
        """``xi_1 = e^{i phi_1} cos(theta)``, ``xi_k = i theta_k e^{i phi_k} sin(theta)/theta``."""
        xi = np.empty(self.phi.size, dtype=complex)
        xi[0] = np.exp(1j * self.phi[0]) * math.cos(self.theta)
        sinc = math.sin(self.theta) / self.theta if self.theta > 0 else 1.0
        xi[1:] = 1j * self.theta_vec * np.exp(1j * self.phi[1:]) * sinc
        return xi

    @property
    def at_pole(self) -> bool:
        return not np.isfinite(self.u)


def parametrize_group_element(state: SuMState) -> GroupElementParams:
    """Invert the forward map on the chart ``theta in [0, pi/2]``.

    ``phi_1 = arg xi_1`` (0 when ``xi_1 = 0``), ``theta = arccos |xi_1|``,
    ``theta_k = theta |xi_k| / sin(theta)`` and ``phi_k = arg xi_k - pi/2``.
    """
    xi = state.xi
    mag1 = min(abs(xi[0]), 1.0)
    phi = np.angle(xi)
    phi[1:] -= math.pi / 2
    if mag1 == 0.0:
        phi[0] = 0.0
    theta = math.acos(mag1)
    if theta > 0:
        theta_vec = theta * np.abs(xi[1:]) / math.sin(theta)
    else:
        theta_vec = np.zeros(xi.size - 1)
    zeta = theta_vec * np.exp(1j * (phi[1:] - phi[0]))
    if abs(theta - math.pi / 2) < 1e-15:
        u = complex(0.0, math.inf)
        eta = np.where(zeta != 0, complex(math.inf, math.inf), 0j)
    else:
        u = 1j * math.tan(theta)
        eta = u * zeta / theta if theta > 0 else np.zeros(xi.size - 1, dtype=complex)
    return GroupElementParams(phi=phi, theta_vec=theta_vec, theta=theta, u=u, eta=eta, zeta=zeta)


def _hermitian_expm_apply(G: np.ndarray, v: np.ndarray) -> np.ndarray:
    """``exp(iG) v`` for Hermitian ``G`` via eigendecomposition."""
    w, V = np.linalg.eigh(G)
    return V @ (np.exp(1j * w) * (V.conj().T @ v))


def _extremal(basis: FockBasis) -> np.ndarray:
    v = np.zeros(basis.dim, dtype=complex)
    v[0] = 1.0  # (N, 0, ..., 0) is first in descending order
    return v


@dataclass(frozen=True)
class DisentangledAction:
    E_applied: SectorVector
    T_applied: SectorVector
    disentangled: SectorVector
    raising_norm: float  # ||exp(sum eta_k a_k^+ a_1)|N,0,..>||, scaled by |u|^-N at the pole
    global_phase: complex  # exp(i phi_1 N)


def disentangled_action(params: GroupElementParams, state: SuMState, basis: FockBasis) -> DisentangledAction:
    """Build ``E|N,0..>``, ``T(zeta)|N,0..>`` and the normalized ``exp(sum eta_k a_k^+ a_1)|N,0..>``.

    ``E`` and ``T`` are exponentials of Hermitian sector matrices. The raising
    generator ``X = sum eta_k a_k^+ a_1`` is nilpotent in the sector
    (``X^{N+1} = 0``), so its exponential is the exact finite series.
    """
    if basis.M != state.M or basis.N != state.N:
        raise ValueError("sector mismatch")
    M, N = basis.M, basis.N
    ext = _extremal(basis)

    S = sum(params.phi[i] * fock.ladder_matrix(basis, i, "number") for i in range(M))
    D = sum(
        params.theta_vec[k - 1] * (fock.hop_matrix(basis, 0, k) + fock.hop_matrix(basis, k, 0))
        for k in range(1, M)
    )
    S = _dense(S, basis.dim)
    D = _dense(D, basis.dim)
    E_v = _hermitian_expm_apply(S, _hermitian_expm_apply(D, ext))

    G = sum(
        np.conj(params.zeta[l - 1]) * fock.hop_matrix(basis, 0, l)
        + params.zeta[l - 1] * fock.hop_matrix(basis, l, 0)
        for l in range(1, M)
    )
    T_v = _hermitian_expm_apply(_dense(G, basis.dim), ext)

    # direction and scale of the raising generator; at the pole only X^N survives
    if params.at_pole:
        direction = 1j * params.zeta / params.theta
        scale = math.inf
    else:
        mag = abs(params.u)
        direction = params.eta / mag if mag > 0 else np.zeros(M - 1, dtype=complex)
        scale = mag
    X = sum(direction[k - 1] * fock.hop_matrix(basis, k, 0) for k in range(1, M))
    X = _dense(X, basis.dim)
    terms = [ext]
    for s in range(1, N + 1):
        terms.append(X @ terms[-1] / s)
    if math.isinf(scale):
        raised = terms[N]
        raising_norm = float(np.linalg.norm(raised))  # normalized by |u|^N
    else:
        raised = sum(scale**s * t for s, t in enumerate(terms))
        raising_norm = float(np.linalg.norm(raised))
    disent = raised / np.linalg.norm(raised)

    for vec in (E_v, T_v):
        drift = abs(np.linalg.norm(vec) - 1.0)
        if drift > 1e-10:
            raise RuntimeError(f"unitary construction drifted from unit norm by {drift:.3e}")

    return DisentangledAction(
        E_applied=SectorVector(basis, E_v),
        T_applied=SectorVector(basis, T_v),
        disentangled=SectorVector(basis, disent),
        raising_norm=raising_norm,
        global_phase=complex(np.exp(1j * params.phi[0] * N)),
    )


def _dense(op, dim):
    if isinstance(op, (int, float)):  # empty sum for M = 1
        return np.zeros((dim, dim), dtype=complex)
    return op.toarray().astype(complex)


def normalization_exponent_report(N: int, theta: float, raising_norm: float) -> dict:
    """Compare the measured norm of ``exp(u J_+)|N,0..>`` against ``(1+|u|^2)^{N/2}`` and ``(1+|u|^2)^N``."""
    base = 1.0 + math.tan(theta) ** 2
    half = base ** (N / 2)
    full = base**N
    return {
        "measured_norm": raising_norm,
        "exponent_N_over_2": half,
        "exponent_N": full,
        "residual_N_over_2": abs(raising_norm - half) / half,
        "residual_N": abs(raising_norm - full) / full,
        "matching_exponent": "N/2" if abs(raising_norm - half) <= abs(raising_norm - full) else "N",
    }


def phase_aligned_residual(a: np.ndarray, b: np.ndarray) -> tuple[float, complex]:
    """Max ``|a - c b|`` with ``c`` the unit phase fitted on the largest entry of ``b``."""
    a = np.asarray(a)
    b = np.asarray(b)
    k = int(np.argmax(np.abs(b)))
    if abs(b[k]) == 0.0:
        return float(np.max(np.abs(a))), 1.0 + 0j
    ratio = a[k] / b[k]
    c = ratio / abs(ratio) if abs(ratio) > 0 else 1.0 + 0j
    return float(np.max(np.abs(a - c * b))), complex(c)


@dataclass(frozen=True)
class SU2Reduction:
    z: complex
    spin_amplitudes: np.ndarray  # index s <-> |N - s, s>
    phase: complex  # exp(i N phi_1)
    pole: bool


def su2_reduce(state: SuMState) -> SU2Reduction:
    """Two-mode state as an SU(2) coherent state ``|J; z>``, ``z = xi_2/xi_1``.

    When ``xi_1 = 0`` the stereographic coordinate sits at the pole; the
    returned amplitudes are then the localized limit ``delta_{s,N}`` and
    ``phase`` carries ``exp(i N arg xi_2)``.
    """
    if state.M != 2:
        raise ValueError(f"su2_reduce needs M = 2, got M = {state.M}")
    N = state.N
    xi1, xi2 = state.xi
    s = np.arange(N + 1)
    binom = np.exp(0.5 * (gammaln(N + 1) - gammaln(s + 1) - gammaln(N - s + 1)))
    if xi1 == 0:
        amps = np.zeros(N + 1, dtype=complex)
        amps[N] = 1.0
        return SU2Reduction(complex(math.inf), amps, complex(np.exp(1j * N * np.angle(xi2))), True)
    z = complex(xi2 / xi1)
    amps = binom * np.power(z, s) / (1 + abs(z) ** 2) ** (N / 2)
    return SU2Reduction(z, amps.astype(complex), complex(np.exp(1j * N * np.angle(xi1))), False)


def mode_fourier(vec, direction: str = "site_to_momentum") -> np.ndarray:
    """``v_k = sum_j exp(-2 pi i k j / M) z_j / sqrt(M)`` and its inverse."""
    vec = np.asarray(vec, dtype=complex)
    W = fock.dft_matrix(vec.size)
    if direction == "site_to_momentum":
        return W @ vec
    if direction == "momentum_to_site":
        return W.conj().T @ vec
    raise ValueError(f"unknown direction {direction!r}")


def momentum_fock_amplitudes(state: SuMState, basis: FockBasis) -> SectorVector:
    """Amplitudes of ``|N, xi>`` on momentum Fock states, via the dual parameters."""
    return sum_fock_amplitudes(SuMState(state.N, mode_fourier(state.xi)), basis)
