"""Orthogonal localized SU(M) families and the cat superpositions built from them."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import fock
from .cs_algebra import SuMState, sum_fock_amplitudes
from .fock import FockBasis, SectorVector, quasimomentum_class

GRAM_TOL = 1e-12


@dataclass(frozen=True)
class LocalizedFamily:
    """``M`` direction vectors; column ``l`` of ``xis`` is ``xi(l)``, dominated at site ``l``."""

    N: int
    xis: np.ndarray
    epsilon: float

    @property
    def M(self) -> int:
        return self.xis.shape[0]

    def gram(self) -> np.ndarray:
        return self.xis.conj().T @ self.xis

    def gram_residual(self) -> float:
        return float(np.max(np.abs(self.gram() - np.eye(self.M))))

    def diagonal_weights(self) -> np.ndarray:
        """``|xi_l(l)|^2`` for every member."""
        return np.abs(np.diag(self.xis)) ** 2

    def member(self, l: int) -> SuMState:
        return SuMState(self.N, self.xis[:, l])


def lowdin(vectors: np.ndarray) -> np.ndarray:
    """Symmetric orthogonalization ``V S^{-1/2}`` with ``S = V^+ V``."""
    S = vectors.conj().T @ vectors
    w, U = np.linalg.eigh(S)
    if np.min(w) <= 0:
        raise ValueError("vectors are linearly dependent")
    return vectors @ (U * w ** -0.5) @ U.conj().T


def build_localized_family(M: int, N: int, epsilon: float = 0.0, seed: int = 0) -> LocalizedFamily:
    """Near-localized vectors with random leakage phases, then Löwdin-orthogonalized.

    Input vectors are ``sqrt(1-(M-1)eps)`` on their own site and ``sqrt(eps)``
    times a random phase elsewhere. The symmetric orthogonalization moves the
    amplitudes by ``O(sqrt(eps))`` and the site weights by ``O(eps)``, in either
    direction, so ``|xi_l(l)|^2`` can end up slightly below ``1 - (M-1)eps``.
    A family is rejected only when some member is no longer largest on its
    own site.
    """
    if M > 1 and not 0 <= epsilon < 1.0 / (M - 1):
        raise ValueError(f"epsilon={epsilon} outside [0, 1/(M-1)) for M={M}")
    if epsilon < 0:
        raise ValueError(f"epsilon must be non-negative, got {epsilon}")
    rng = np.random.default_rng(seed)
    phases = np.exp(2j * np.pi * rng.random((M, M)))
    u = math.sqrt(epsilon) * phases
    np.fill_diagonal(u, math.sqrt(1.0 - (M - 1) * epsilon))
    xis = lowdin(u) if epsilon > 0 else u.astype(complex)
    mags = np.abs(xis) ** 2
    diag = np.diag(mags)
    off = np.max(np.where(np.eye(M, dtype=bool), -np.inf, mags), axis=0) if M > 1 else np.zeros(1)
    if np.any(diag <= off):
        raise ValueError(f"epsilon={epsilon} does not give localization-dominant vectors")
    return LocalizedFamily(N=N, xis=xis, epsilon=epsilon)


@dataclass(frozen=True)
class CatState:
    family: LocalizedFamily
    k: int
    coefficients: np.ndarray

    @property
    def M(self) -> int:
        return self.family.M

    @property
    def N(self) -> int:
        return self.family.N


def build_cat(family: LocalizedFamily, k: int) -> CatState:
    """``|S_k> = sum_l exp(i 2 pi k l / M) / sqrt(M) |xi(l)>`` with sites ``l = 1..M``."""
    M = family.M
    if not 1 <= k <= M:
        raise ValueError(f"k must lie in [1, {M}], got {k}")
    l = np.arange(1, M + 1)
    c = np.exp(2j * np.pi * k * l / M) / math.sqrt(M)
    overlaps = family.gram() ** family.N
    norm2 = float(np.real(np.conj(c) @ overlaps @ c))
    if abs(norm2 - 1.0) > 1e-10:
        raise ValueError(f"family is not orthogonal: cat norm^2 = {norm2:.12g}")
    return CatState(family=family, k=k, coefficients=c)


def cat_vector(cat: CatState, basis: FockBasis) -> SectorVector:
    if basis.M != cat.M or basis.N != cat.N:
        raise ValueError("sector mismatch")
    amps = sum(
        c * sum_fock_amplitudes(cat.family.member(l), basis).amps for l, c in enumerate(cat.coefficients)
    )
    return SectorVector(basis, amps)


@dataclass(frozen=True)
class CatObservables:
    n_i: np.ndarray
    norm: float


def cat_observables(cat: CatState, basis: FockBasis) -> CatObservables:
    v = cat_vector(cat, basis)
    p = np.abs(v.amps) ** 2
    return CatObservables(n_i=p @ basis.states, norm=float(np.sqrt(p.sum())))


@dataclass(frozen=True)
class MomentumAmplitude:
    p: tuple
    klass: int
    amplitude: complex


def cat_momentum_amplitudes(cat: CatState, basis: FockBasis) -> list[MomentumAmplitude]:
    """Amplitudes ``<p|S_q>`` on every momentum Fock state with its quasi-momentum class."""
    v = cat_vector(cat, basis)
    R = fock.momentum_transform(basis)
    amps = R.conj().T @ v.amps
    return [
        MomentumAmplitude(tuple(int(x) for x in p), quasimomentum_class(p), complex(a))
        for p, a in zip(basis.states, amps)
    ]


def class_weights(amplitudes: list[MomentumAmplitude], M: int) -> np.ndarray:
    w = np.zeros(M)
    for a in amplitudes:
        w[a.klass] += abs(a.amplitude) ** 2
    return w
