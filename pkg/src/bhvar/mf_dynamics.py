"""Glauber (DNLS) and SU(M) mean-field flows.

Both schemes share one kernel

    i dz_j/dt = U_eff |z_j|^2 z_j - sum_l T[l, j] z_l

with ``U_eff = U`` for Glauber states and ``U_eff = U (N-1)/N`` for the
number-conserving SU(M) scheme, whose variables are ``psi_j = sqrt(N) xi_j``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import BHParams


@dataclass
class DnlsState:
    z: np.ndarray

    def __post_init__(self):
        self.z = np.asarray(self.z, dtype=complex).ravel()
        if not np.all(np.isfinite(self.z)):
            raise ValueError("non-finite DNLS amplitudes")

    @property
    def N_bar(self) -> float:
        return float(np.vdot(self.z, self.z).real)


@dataclass
class PsiState:
    N: int
    psi: np.ndarray

    def __post_init__(self):
        self.psi = np.asarray(self.psi, dtype=complex).ravel()
        if self.N < 1:
            raise ValueError(f"SU(M) scheme needs N >= 1, got N={self.N}")
        norm = np.vdot(self.psi, self.psi).real
        if abs(norm - self.N) > 1e-10 * max(1, self.N):
            raise ValueError(f"sum |psi|^2 = {norm!r} differs from N = {self.N}")

    @classmethod
    def from_xi(cls, N: int, xi) -> "PsiState":
        return cls(N, np.sqrt(N) * np.asarray(xi, dtype=complex))


def u_eff_sum(U: float, N: int) -> float:
    if N < 1:
        raise ValueError(f"(N-1)/N undefined for N={N}")
    return U * (N - 1) / N


def kernel_rhs(z: np.ndarray, U_eff: float, T: np.ndarray) -> np.ndarray:
    """``dz/dt`` of the shared cubic lattice flow."""
    return -1j * (U_eff * np.abs(z) ** 2 * z - T.T @ z)


def kernel_energy(z: np.ndarray, U_eff: float, T: np.ndarray) -> float:
    """``(U_eff/2) sum |z|^4 - sum_{j,l} T[j, l] conj(z_j) z_l`` (each bond in both orientations)."""
    quartic = 0.5 * U_eff * np.sum(np.abs(z) ** 4)
    hop = np.vdot(z, T @ z)
    return float(quartic - hop.real)


def kernel_energy_residue(z: np.ndarray, T: np.ndarray) -> float:
    return float(abs(np.vdot(z, T @ z).imag))


def rhs_dnls(state: DnlsState, params: BHParams) -> np.ndarray:
    return kernel_rhs(state.z, params.U, params.T)


def energy_dnls(state: DnlsState, params: BHParams) -> float:
    residue = kernel_energy_residue(state.z, params.T)
    scale = max(1.0, float(np.sum(np.abs(params.T))) * state.N_bar)
    if residue > 1e-12 * scale:
        raise RuntimeError(f"imaginary energy residue {residue:.3e}")
    return kernel_energy(state.z, params.U, params.T)


def rhs_sum(state: PsiState, params: BHParams) -> np.ndarray:
    return kernel_rhs(state.psi, u_eff_sum(params.U, state.N), params.T)


def energy_sum(state: PsiState, params: BHParams) -> float:
    """``U(N-1)/(2N) sum |psi|^4 - sum T psi_j^* psi_l``, the exact ``<xi|H|xi>``."""
    return kernel_energy(state.psi, u_eff_sum(params.U, state.N), params.T)


@dataclass(frozen=True)
class PlaneWave:
    z: np.ndarray
    omega: float
    k: int

    def at(self, t: float) -> np.ndarray:
        return self.z * np.exp(-1j * self.omega * t)


def plane_wave(M: int, k: int, A: complex, params: BHParams, scheme: str = "dnls", N: int | None = None) -> PlaneWave:
    """Exact orbit ``z_j(t) = A exp(i(k~ j - omega t))`` on a translation-invariant ring.

    ``omega = U_eff |A|^2 - lambda_k`` with ``lambda_k = sum_l T[1, l] exp(i k~ (l - 1))``,
    which is ``2 T cos(k~)`` on rings with ``M >= 3``.
    """
    if params.M != M:
        raise ValueError(f"params have M={params.M}, requested M={M}")
    row = params.hopping.circulant_row()
    if row is None:
        raise ValueError("plane waves need translation-invariant (ring) hopping")
    if scheme == "dnls":
        U_eff = params.U
    elif scheme == "sum":
        if N is None:
            raise ValueError("scheme 'sum' needs N")
        U_eff = u_eff_sum(params.U, N)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    kt = 2 * np.pi * k / M
    j = np.arange(1, M + 1)
    lam = float(np.real(np.sum(row * np.exp(1j * kt * (j - 1)))))
    z = A * np.exp(1j * kt * j)
    return PlaneWave(z=z.astype(complex), omega=U_eff * abs(A) ** 2 - lam, k=k)
