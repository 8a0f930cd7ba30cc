"""Fixed-particle-number Fock sectors and exact dynamics.

Basis states of the ``N``-boson sector on ``M`` modes are ordered
lexicographically descending, e.g. ``(2,0), (1,1), (0,2)``. The position of an
occupation tuple is computed combinatorially (:meth:`FockBasis.rank`), so
operator matrices are assembled without dictionary lookups.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .model import BHParams

DEFAULT_DIM_CAP = 20_000


class CapacityError(RuntimeError):
    """Requested Fock sector exceeds the configured dimension cap."""


def dimension_cap() -> int:
    """Dimension cap, overridable through ``BHVAR_DIM_CAP``."""
    return int(os.environ.get("BHVAR_DIM_CAP", DEFAULT_DIM_CAP))


def sector_dimension(M: int, N: int) -> int:
    if N < 0:
        return 0
    return math.comb(N + M - 1, M - 1)


def check_capacity(M: int, N: int, cap: int | None = None) -> int:
    dim = sector_dimension(M, N)
    cap = dimension_cap() if cap is None else cap
    if dim > cap:
        raise CapacityError(f"sector M={M}, N={N} has dimension {dim} > cap {cap}")
    return dim


def _compositions(M: int, N: int):
    if M == 1:
        yield (N,)
        return
    for first in range(N, -1, -1):
        for rest in _compositions(M - 1, N - first):
            yield (first,) + rest


class FockBasis:
    """Ordered occupation basis of the ``N``-boson sector on ``M`` modes.

    Attributes
    ----------
    states : ndarray of int, shape (dim, M)
    index : dict mapping occupation tuples to positions
    """

    def __init__(self, M: int, N: int):
        if M < 1:
            raise ValueError(f"need M >= 1, got {M}")
        self.M = M
        self.N = N
        occ = list(_compositions(M, N)) if N >= 0 else []
        self.states = np.array(occ, dtype=np.int64).reshape(len(occ), M)
        self.states.setflags(write=False)
        self.index = {s: i for i, s in enumerate(occ)}
        # binom[n, k] = C(n, k) for the ranking formula
        size = max(N, 0) + M + 1
        self._binom = np.array(
            [[math.comb(n, k) for k in range(M + 1)] for n in range(size)], dtype=np.int64
        )

    @property
    def dim(self) -> int:
        return self.states.shape[0]

    def __len__(self):
        return self.dim

    def __repr__(self):
        return f"FockBasis(M={self.M}, N={self.N}, dim={self.dim})"

    def index_of(self, occ: Sequence[int]) -> int:
        return self.index[tuple(int(x) for x in occ)]

    def rank(self, occ: np.ndarray) -> np.ndarray:
        """Positions of many occupation rows at once (rows must sum to N)."""
        occ = np.atleast_2d(np.asarray(occ, dtype=np.int64))
        M = self.M
        remaining = np.full(occ.shape[0], self.N, dtype=np.int64)
        pos = np.zeros(occ.shape[0], dtype=np.int64)
        for i in range(M - 1):
            m = occ[:, i]
            # states sharing the prefix but with a larger entry at site i
            n = remaining - m + M - i - 2
            k = M - i - 1
            valid = n >= k
            pos += np.where(valid, self._binom[np.clip(n, 0, None), k], 0)
            remaining = remaining - m
        return pos


@lru_cache(maxsize=64)
def _cached_basis(M: int, N: int) -> FockBasis:
    return FockBasis(M, N)


def enumerate_sector(M: int, N: int, cap: int | None = None) -> FockBasis:
    """Enumerate the ``N``-boson sector, refusing sectors above the cap."""
    if M < 1:
        raise ValueError(f"need M >= 1, got {M}")
    if N < 0:
        raise ValueError(f"need N >= 0, got {N}")
    check_capacity(M, N, cap)
    return _cached_basis(M, N)


def _sector(M: int, N: int) -> FockBasis:
    # internal: allows the empty N = -1 sector produced by lowering the vacuum
    return _cached_basis(M, N)


@dataclass
class SectorVector:
    basis: FockBasis
    amps: np.ndarray

    def __post_init__(self):
        self.amps = np.asarray(self.amps, dtype=complex)
        if self.amps.shape != (self.basis.dim,):
            raise ValueError(f"expected {self.basis.dim} amplitudes, got {self.amps.shape}")
        if not np.all(np.isfinite(self.amps)):
            raise ValueError("non-finite amplitudes")

    @property
    def M(self):
        return self.basis.M

    @property
    def N(self):
        return self.basis.N

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def inner(self, other: "SectorVector") -> complex:
        """``<self|other>``."""
        _check_same_sector(self.basis, other.basis)
        return complex(np.vdot(self.amps, other.amps))

    def amplitude(self, occ) -> complex:
        return complex(self.amps[self.basis.index_of(occ)])

    def to_dict(self) -> dict:
        return {
            "M": self.M,
            "N": self.N,
            "amps": [[float(a.real), float(a.imag)] for a in self.amps],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SectorVector":
        basis = enumerate_sector(int(data["M"]), int(data["N"]))
        amps = np.array([complex(re, im) for re, im in data["amps"]])
        if not np.all(np.isfinite(amps)):
            raise ValueError("non-finite amplitudes")
        return cls(basis, amps)


def _check_same_sector(a: FockBasis, b: FockBasis):
    if a.M != b.M or a.N != b.N:
        raise ValueError(f"sector mismatch: (M={a.M}, N={a.N}) vs (M={b.M}, N={b.N})")


def basis_vector(basis: FockBasis, occ) -> SectorVector:
    amps = np.zeros(basis.dim, dtype=complex)
    amps[basis.index_of(occ)] = 1.0
    return SectorVector(basis, amps)


def _check_site(M: int, site: int):
    if not 0 <= site < M:
        raise IndexError(f"site {site} out of range for M={M} (0-based)")


def ladder_matrix(basis: FockBasis, site: int, kind: str) -> sp.csr_matrix:
    """Sparse matrix of ``a_site^+``, ``a_site`` or ``n_site`` acting on ``basis``.

    ``raise`` maps sector N to N+1, ``lower`` maps N to N-1 and ``number``
    stays in sector N. Rows index the target sector.
    """
    _check_site(basis.M, site)
    states = basis.states
    cols = np.arange(basis.dim)
    if kind == "number":
        return sp.diags(states[:, site].astype(float), format="csr")
    if kind == "raise":
        target = _sector(basis.M, basis.N + 1)
        new = states.copy()
        new[:, site] += 1
        vals = np.sqrt(new[:, site].astype(float))
        rows = target.rank(new) if basis.dim else cols
        return sp.csr_matrix((vals, (rows, cols)), shape=(target.dim, basis.dim))
    if kind == "lower":
        target = _sector(basis.M, basis.N - 1)
        keep = states[:, site] > 0
        new = states[keep].copy()
        vals = np.sqrt(new[:, site].astype(float))
        new[:, site] -= 1
        rows = target.rank(new) if new.shape[0] else np.zeros(0, dtype=np.int64)
        return sp.csr_matrix((vals, (rows, cols[keep])), shape=(target.dim, basis.dim))
    raise ValueError(f"unknown ladder kind {kind!r}")


def hop_matrix(basis: FockBasis, j: int, k: int) -> sp.csr_matrix:
    """Sparse ``a_j^+ a_k`` within the sector."""
    _check_site(basis.M, j)
    _check_site(basis.M, k)
    if j == k:
        return ladder_matrix(basis, j, "number")
    states = basis.states
    keep = states[:, k] > 0
    new = states[keep].copy()
    vals = np.sqrt((new[:, k] * (new[:, j] + 1)).astype(float))
    new[:, k] -= 1
    new[:, j] += 1
    rows = basis.rank(new) if new.shape[0] else np.zeros(0, dtype=np.int64)
    cols = np.flatnonzero(keep)
    return sp.csr_matrix((vals, (rows, cols)), shape=(basis.dim, basis.dim))


def apply_ladder(state, site: int, kind: str) -> SectorVector:
    """Apply ``a^+``, ``a`` or ``n`` on one site.

    ``state`` may be a :class:`SectorVector` or an ``(basis, occupation)``
    pair. Lowering the vacuum sector yields the (empty) zero vector of the
    ``N = -1`` sector.
    """
    if not isinstance(state, SectorVector):
        basis, occ = state
        state = basis_vector(basis, occ)
    op = ladder_matrix(state.basis, site, kind)
    N = state.N + {"raise": 1, "lower": -1, "number": 0}[kind]
    if kind == "raise":
        check_capacity(state.M, N)
    return SectorVector(_sector(state.M, N), op @ state.amps)


def build_bh_matrix(params: BHParams, basis: FockBasis) -> np.ndarray:
    """Dense Bose-Hubbard Hamiltonian in the given sector (complex dtype)."""
    if params.M != basis.M:
        raise ValueError(f"params have M={params.M}, basis has M={basis.M}")
    check_capacity(basis.M, basis.N)
    n = basis.states.astype(float)
    H = sp.diags(0.5 * params.U * np.sum(n * n - n, axis=1), format="csr")
    T = params.T
    for j, l in zip(*np.nonzero(T)):
        H = H - T[j, l] * hop_matrix(basis, int(j), int(l))
    return H.toarray().astype(complex)


class Propagator:
    """Reusable ``exp(-i H t)`` from one Hermitian eigendecomposition."""

    def __init__(self, H: np.ndarray):
        self.energies, self.vectors = np.linalg.eigh(H)

    def __call__(self, amps: np.ndarray, t: float) -> np.ndarray:
        coeff = self.vectors.conj().T @ amps
        return self.vectors @ (np.exp(-1j * self.energies * t) * coeff)


def evolve_exact(psi0: SectorVector, params: BHParams, t_grid) -> list[SectorVector]:
    """Exact states ``exp(-iHt)|psi0>`` on ``t_grid`` (hbar = 1)."""
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(t_grid) < 0):
        raise ValueError("t_grid must be sorted")
    if not np.all(np.isfinite(psi0.amps)) or not np.all(np.isfinite(t_grid)):
        raise ValueError("non-finite input to evolve_exact")
    prop = Propagator(build_bh_matrix(params, psi0.basis))
    return [SectorVector(psi0.basis, prop(psi0.amps, t)) for t in t_grid]


def quasimomentum_class(p: Sequence[int]) -> int:
    """``(sum_k k p_k) mod M`` with momentum labels ``k = 1..M``."""
    M = len(p)
    return int(sum((k + 1) * int(pk) for k, pk in enumerate(p)) % M)


def dft_matrix(M: int) -> np.ndarray:
    """Unitary ``W[k, j] = exp(-2 pi i k j / M) / sqrt(M)`` with ``j, k = 1..M``.

    Momentum modes are ``b = W a``.
    """
    idx = np.arange(1, M + 1)
    return np.exp(-2j * np.pi * np.outer(idx, idx) / M) / np.sqrt(M)


def single_particle_transform(basis: FockBasis, u: np.ndarray) -> np.ndarray:
    """Sector matrix ``R[m, p] = <m| p>`` for new modes ``c_k^+ = sum_j u[j, k] a_j^+``.

    Column ``p`` holds the Fock state ``prod_k (c_k^+)^{p_k} / sqrt(p_k!) |0>``
    in the site basis. Built sector by sector: ``|p> = c_k^+ |p - e_k> / sqrt(p_k)``
    with ``k`` the first occupied mode of ``p``.
    """
    M = basis.M
    u = np.asarray(u, dtype=complex)
    check_capacity(M, basis.N)
    R = np.ones((1, 1), dtype=complex)
    for S in range(1, basis.N + 1):
        prev = _sector(M, S - 1)
        cur = _sector(M, S)
        raises = [ladder_matrix(prev, j, "raise") for j in range(M)]
        Rs = np.zeros((cur.dim, cur.dim), dtype=complex)
        first = np.argmax(cur.states > 0, axis=1)
        for k in range(M):
            cols = np.flatnonzero(first == k)
            if cols.size == 0:
                continue
            lowered = cur.states[cols].copy()
            pk = lowered[:, k].astype(float)
            lowered[:, k] -= 1
            src = prev.rank(lowered)
            ck = sum(u[j, k] * raises[j] for j in range(M))
            Rs[:, cols] = (ck @ R[:, src]) / np.sqrt(pk)
        R = Rs
    return R


def momentum_transform(basis: FockBasis) -> np.ndarray:
    """Columns are momentum Fock states ``|p>`` written in the site basis.

    Momentum amplitudes of a site-basis vector ``psi`` are ``R.conj().T @ psi``.
    """
    W = dft_matrix(basis.M)
    return single_particle_transform(basis, W.conj().T)


def displacement_matrix(basis: FockBasis) -> np.ndarray:
    """Ring translation ``exp(-i sigma sum_k k b_k^+ b_k)``, ``sigma = 2 pi / M``.

    Satisfies ``D a_l D^+ = a_{l+1}`` (indices mod M).
    """
    R = momentum_transform(basis)
    lam = np.array([quasimomentum_class(p) for p in basis.states])
    phases = np.exp(-2j * np.pi * lam / basis.M)
    return (R * phases) @ R.conj().T
