"""Site-factorized (Gutzwiller) variational dynamics.

The state is a table ``f[i, n]`` of local amplitudes, ``n = 0..n_max``. The
local space is closed by a hard wall, ``f[i, n_max + 1] = 0``, which keeps the
truncated flow Hamiltonian so that the local norms ``I_i`` and the energy are
exact invariants of the continuous-time equations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import poisson

from .cs_algebra import GlauberState, TAIL_TARGET
from .fock import FockBasis, SectorVector
from .model import BHParams


class TruncationError(ValueError):
    """Local cutoff ``n_max`` is too small for the requested state."""


@dataclass
class GutzwillerState:
    f: np.ndarray

    def __post_init__(self):
        f = np.array(self.f, dtype=complex)
        if f.ndim != 2 or f.shape[1] < 1:
            raise ValueError(f"coefficient table must be M x (n_max+1), got shape {f.shape}")
        if not np.all(np.isfinite(f)):
            raise ValueError("non-finite Gutzwiller coefficients")
        self.f = f

    @property
    def M(self) -> int:
        return self.f.shape[0]

    @property
    def n_max(self) -> int:
        return self.f.shape[1] - 1

    @classmethod
    def normalized(cls, f) -> "GutzwillerState":
        f = np.asarray(f, dtype=complex)
        return cls(f / np.linalg.norm(f, axis=1, keepdims=True))

    @classmethod
    def fock_product(cls, occupations, n_max: int) -> "GutzwillerState":
        f = np.zeros((len(occupations), n_max + 1), dtype=complex)
        f[np.arange(len(occupations)), occupations] = 1.0
        return cls(f)

    def check_normalized(self, tol: float = 1e-10) -> None:
        I = np.sum(np.abs(self.f) ** 2, axis=1)
        bad = np.flatnonzero(np.abs(I - 1.0) > tol)
        if bad.size:
            raise ValueError(f"local norms off by more than {tol:g} at sites {bad.tolist()}: {I[bad]}")

    def to_dict(self) -> dict:
        return {
            "M": self.M,
            "n_max": self.n_max,
            "f": [[[float(c.real), float(c.imag)] for c in row] for row in self.f],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GutzwillerState":
        f = np.array([[complex(re, im) for re, im in row] for row in data["f"]])
        state = cls(f)
        if state.M != int(data["M"]) or state.n_max != int(data["n_max"]):
            raise ValueError("table shape disagrees with M / n_max")
        return state


@dataclass(frozen=True)
class MeanFields:
    alpha: np.ndarray
    Phi: np.ndarray


def _sqrt_up(n_max: int) -> np.ndarray:
    return np.sqrt(np.arange(1, n_max + 1, dtype=float))


def order_parameter_alpha(state: GutzwillerState) -> np.ndarray:
    """``alpha_i = sum_m sqrt(m+1) conj(f_m) f_{m+1}``."""
    f = state.f
    return np.sum(_sqrt_up(state.n_max) * np.conj(f[:, :-1]) * f[:, 1:], axis=1)


def mean_fields(state: GutzwillerState, params: BHParams) -> MeanFields:
    alpha = order_parameter_alpha(state)
    # Phi_i = sum_l T[l, i] alpha_l
    return MeanFields(alpha, params.T.T @ alpha)


def _local_energy_weights(n_max: int) -> np.ndarray:
    n = np.arange(n_max + 1, dtype=float)
    return n * n - n


def energy_F(state: GutzwillerState, params: BHParams, with_residue: bool = False):
    """``(U/2) sum_j sum_n (n^2 - n)|f_n^j|^2 - sum_{l,j} T[l, j] alpha_l conj(alpha_j)``.

    Returns the real part; with ``with_residue=True`` also the imaginary residue.
    """
    _check_params(state, params)
    f = state.f
    onsite = 0.5 * params.U * np.sum(_local_energy_weights(state.n_max) * np.abs(f) ** 2)
    alpha = order_parameter_alpha(state)
    hop = -np.sum(params.T * np.outer(alpha, np.conj(alpha)))
    total = onsite + hop
    if with_residue:
        return float(total.real), float(total.imag)
    return float(total.real)


def rhs_gutzwiller(state: GutzwillerState, params: BHParams) -> np.ndarray:
    """Time derivative ``df/dt`` of the coefficient table."""
    _check_params(state, params)
    return _rhs_table(state.f, params.U, params.T)


def _rhs_table(f: np.ndarray, U: float, T: np.ndarray) -> np.ndarray:
    n_max = f.shape[1] - 1
    sq = _sqrt_up(n_max)
    alpha = np.sum(sq * np.conj(f[:, :-1]) * f[:, 1:], axis=1)
    Phi = T.T @ alpha
    out = 0.5 * U * _local_energy_weights(n_max) * f
    # -sqrt(m+1) f_{m+1} conj(Phi), hard wall at n_max
    out[:, :-1] -= sq * f[:, 1:] * np.conj(Phi)[:, None]
    # -sqrt(m) f_{m-1} Phi
    out[:, 1:] -= sq * f[:, :-1] * Phi[:, None]
    return -1j * out


def make_rhs(params: BHParams):
    """Closure ``f -> df/dt`` on raw coefficient tables, for the integrator."""
    U, T = params.U, params.T
    return lambda f: _rhs_table(f, U, T)


@dataclass(frozen=True)
class FInvariants:
    N_bar: float
    I: np.ndarray


def invariants_F(state: GutzwillerState) -> FInvariants:
    p = np.abs(state.f) ** 2
    n = np.arange(state.n_max + 1)
    return FInvariants(N_bar=float(np.sum(p * n)), I=np.sum(p, axis=1))


def site_densities(state: GutzwillerState) -> np.ndarray:
    return np.abs(state.f) ** 2 @ np.arange(state.n_max + 1)


def default_n_max(N_bar: float, M: int) -> int:
    return max(30, math.ceil(N_bar / M * 4))


def coherent_embed(z: GlauberState, n_max: int | None = None) -> GutzwillerState:
    """Local Glauber states ``f_m = exp(-|z|^2/2) z^m / sqrt(m!)``."""
    zz = z.z
    if n_max is None:
        n_max = default_n_max(z.N_bar, z.M)
    tails = np.array([poisson.sf(n_max, abs(c) ** 2) if c != 0 else 0.0 for c in zz])
    worst = int(np.argmax(tails))
    if tails[worst] > TAIL_TARGET:
        raise TruncationError(
            f"n_max={n_max} leaves Poisson tail {tails[worst]:.3e} at site {worst} (|z|^2={abs(zz[worst])**2:.4g})"
        )
    f = np.zeros((z.M, n_max + 1), dtype=complex)
    f[:, 0] = np.exp(-0.5 * np.abs(zz) ** 2)
    for m in range(1, n_max + 1):
        f[:, m] = f[:, m - 1] * zz / math.sqrt(m)
    return GutzwillerState(f)


def product_amplitudes(state: GutzwillerState, basis: FockBasis) -> SectorVector:
    """Projection of the product state onto a fixed-N sector: ``prod_i f^i_{m_i}``."""
    if basis.M != state.M:
        raise ValueError(f"basis has M={basis.M}, state has M={state.M}")
    m = basis.states
    inside = np.all(m <= state.n_max, axis=1)
    amps = np.zeros(basis.dim, dtype=complex)
    mi = m[inside]
    amps[inside] = np.prod(state.f[np.arange(state.M)[None, :], mi], axis=1)
    return SectorVector(basis, amps)


# ---------------------------------------------------------------------------
# Poisson brackets by finite differences


def _wirtinger(func, f: np.ndarray, step: float):
    """Central-difference Wirtinger derivatives of ``func`` at every table entry.

    Returns ``(d/df, d/dconj(f))`` tables.
    """
    d_re = np.zeros(f.shape, dtype=complex)
    d_im = np.zeros(f.shape, dtype=complex)
    for idx in np.ndindex(f.shape):
        g = f.copy()
        g[idx] = f[idx] + step
        fp = func(g)
        g[idx] = f[idx] - step
        fm = func(g)
        d_re[idx] = (fp - fm) / (2 * step)
        g[idx] = f[idx] + 1j * step
        fp = func(g)
        g[idx] = f[idx] - 1j * step
        fm = func(g)
        d_im[idx] = (fp - fm) / (2 * step)
    return 0.5 * (d_re - 1j * d_im), 0.5 * (d_re + 1j * d_im)


def poisson_bracket(A, B, f: np.ndarray, step: float = 1e-6) -> complex:
    """``{A, B} = -i sum [dA/df dB/dconj(f) - dB/df dA/dconj(f)]`` by central differences.

    ``A`` and ``B`` are callables on a raw coefficient table.
    """
    f = np.asarray(f, dtype=complex)
    scale = max(1.0, float(np.max(np.abs(f))))
    if not step > 0 or scale + step == scale:
        raise ValueError(f"finite-difference step {step!r} underflows at scale {scale:g}")
    dA, dAc = _wirtinger(A, f, step)
    dB, dBc = _wirtinger(B, f, step)
    return complex(-1j * np.sum(dA * dBc - dB * dAc))


def _alpha_of(j):
    def alpha(f):
        n_max = f.shape[1] - 1
        return np.sum(_sqrt_up(n_max) * np.conj(f[j, :-1]) * f[j, 1:])

    return alpha


def poisson_bracket_fd(state: GutzwillerState, j: int, l: int, step: float = 1e-6) -> complex:
    """``{alpha_j, conj(alpha_l)}``; equals ``-i delta_jl`` for normalized states.

    In the truncated space the exact value is
    ``-i delta_jl (sum_{m<n_max} |f_m|^2 - n_max |f_{n_max}|^2)``.
    """
    a = _alpha_of(j)
    b = _alpha_of(l)
    return poisson_bracket(a, lambda f: np.conj(b(f)), state.f, step)


def alpha_number_bracket_fd(state: GutzwillerState, j: int, l: int, step: float = 1e-6) -> complex:
    """``{alpha_j, N_l}`` with ``N_l = sum_n n |f^l_n|^2``; equals ``-i delta_jl alpha_j``."""
    n = np.arange(state.n_max + 1)
    return poisson_bracket(_alpha_of(j), lambda f: np.sum(n * np.abs(f[l]) ** 2), state.f, step)


def hamiltonian_flow_fd(state: GutzwillerState, params: BHParams, step: float = 1e-6) -> np.ndarray:
    """``{f, H} = -i dH/dconj(f)`` with the energy differentiated numerically."""
    U, T = params.U, params.T
    w = _local_energy_weights(state.n_max)

    def energy(f):
        n_max = f.shape[1] - 1
        alpha = np.sum(_sqrt_up(n_max) * np.conj(f[:, :-1]) * f[:, 1:], axis=1)
        return 0.5 * U * np.sum(w * np.abs(f) ** 2) - np.sum(T * np.outer(alpha, np.conj(alpha)))

    _, dHc = _wirtinger(energy, state.f, step)
    return -1j * dHc


def random_state(M: int, n_max: int, rng: np.random.Generator, n_top_empty: int = 0) -> GutzwillerState:
    """Random complex Gaussian table, normalized per site.

    ``n_top_empty`` highest levels are left unoccupied, e.g. to keep the
    truncated ladder algebra canonical.
    """
    f = rng.normal(size=(M, n_max + 1)) + 1j * rng.normal(size=(M, n_max + 1))
    if n_top_empty:
        f[:, n_max + 1 - n_top_empty :] = 0.0
    return GutzwillerState.normalized(f)


def _check_params(state: GutzwillerState, params: BHParams):
    if params.M != state.M:
        raise ValueError(f"params have M={params.M}, state has M={state.M}")
