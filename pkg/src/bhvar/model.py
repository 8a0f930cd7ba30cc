"""Lattice geometry and Bose-Hubbard parameters.

The hopping term used throughout the package is

    H_hop = - sum_{j != l} T[j, l] a_j^+ a_l

i.e. every bond {j, l} contributes ``-T (a_j^+ a_l + a_l^+ a_j)`` exactly
once. A two-site ring therefore has the single-particle spectrum ``-T, +T``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class LatticeError(ValueError):
    """Invalid lattice geometry or hopping matrix."""


@dataclass(frozen=True)
class HoppingMatrix:
    """Dense real symmetric ``M x M`` hopping amplitudes ``T[j, l]``."""

    entries: np.ndarray

    def __post_init__(self):
        arr = np.array(self.entries, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise LatticeError(f"hopping matrix must be square, got shape {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @property
    def M(self) -> int:
        return self.entries.shape[0]

    def circulant_row(self):
        """First row if the matrix is translation invariant on a ring, else None."""
        T = self.entries
        M = self.M
        row = T[0]
        for j in range(1, M):
            if not np.array_equal(T[j], np.roll(row, j)):
                return None
        return row.copy()


@dataclass(frozen=True)
class BHParams:
    U: float
    hopping: HoppingMatrix
    M: int = field(init=False)

    def __post_init__(self):
        if not isinstance(self.hopping, HoppingMatrix):
            object.__setattr__(self, "hopping", HoppingMatrix(self.hopping))
        object.__setattr__(self, "U", float(self.U))
        object.__setattr__(self, "M", self.hopping.M)
        if self.M < 1:
            raise LatticeError("lattice needs at least one site")

    @property
    def T(self) -> np.ndarray:
        return self.hopping.entries


def build_ring_hopping(M: int, T: float, periodic: bool = True) -> HoppingMatrix:
    """Nearest-neighbour hopping on a 1D chain or ring.

    Parameters
    ----------
    M : int
        Number of sites, ``M >= 1``.
    T : float
        Hopping amplitude on every bond.
    periodic : bool
        Close the chain with the bond ``(M, 1)``. For ``M == 2`` this bond is
        the same pair as ``(1, 2)`` and is not added twice.
    """
    if M < 1:
        raise LatticeError(f"invalid lattice: M={M} (need M >= 1)")
    if not np.isfinite(T):
        raise LatticeError(f"hopping amplitude must be finite, got {T}")
    entries = np.zeros((M, M))
    for j in range(M - 1):
        entries[j, j + 1] = entries[j + 1, j] = T
    if periodic and M > 2:
        entries[0, M - 1] = entries[M - 1, 0] = T
    return HoppingMatrix(entries)


def validate(params: BHParams) -> None:
    """Raise :class:`LatticeError` listing every violating index pair.

    Indices in messages are 1-based, matching site labels.
    """
    T = params.T
    if T.shape != (params.M, params.M):
        raise LatticeError(f"hopping has shape {T.shape}, expected {(params.M, params.M)}")
    if not np.isfinite(params.U):
        raise LatticeError(f"non-finite interaction U={params.U}")
    bad = np.argwhere(~np.isfinite(T))
    if bad.size:
        pairs = [(int(j) + 1, int(l) + 1) for j, l in bad]
        raise LatticeError(f"non-finite hopping entries at {pairs}")
    diag = np.flatnonzero(np.diag(T))
    if diag.size:
        raise LatticeError(f"nonzero diagonal hopping at sites {[int(j) + 1 for j in diag]}")
    asym = np.argwhere(np.triu(T != T.T))
    if asym.size:
        pairs = [(int(j) + 1, int(l) + 1) for j, l in asym]
        raise LatticeError(f"asymmetric hopping at {pairs}")


def ring_params(M: int, U: float, T: float = 1.0, periodic: bool = True) -> BHParams:
    return BHParams(U=U, hopping=build_ring_hopping(M, T, periodic))
