"""Brute-force reference constructions built only from ladder-operator matrices.

These deliberately avoid the closed-form amplitude formulas so that they can
serve as independent checks of them.
"""
from __future__ import annotations

import math

import numpy as np

from . import fock
from .fock import FockBasis


def vacuum(M: int) -> np.ndarray:
    return np.ones(1, dtype=complex)


def raise_along(vec: np.ndarray, M: int, S: int, coeffs: np.ndarray) -> np.ndarray:
    """``(sum_j coeffs_j a_j^+) vec`` for ``vec`` in sector ``S``; result in ``S + 1``."""
    basis = fock.enumerate_sector(M, S)
    out = None
    for j in range(M):
        if coeffs[j] == 0:
            continue
        term = coeffs[j] * (fock.ladder_matrix(basis, j, "raise") @ vec)
        out = term if out is None else out + term
    if out is None:
        out = np.zeros(fock.sector_dimension(M, S + 1), dtype=complex)
    return out


def sum_state_by_ladders(xi, N: int) -> np.ndarray:
    """``(sum_i xi_i a_i^+)^N |0> / sqrt(N!)`` by repeated raising."""
    xi = np.asarray(xi, dtype=complex)
    M = xi.size
    v = vacuum(M)
    for S in range(N):
        v = raise_along(v, M, S, xi)
    return v / math.sqrt(math.factorial(N))


def glauber_sector_by_ladders(z, S: int) -> np.ndarray:
    """Sector-``S`` part of ``prod_j exp(-|z_j|^2/2) exp(z_j a_j^+)|0>``.

    ``exp(sum z_j a_j^+)`` restricted to sector ``S`` is ``(sum z_j a_j^+)^S / S!``.
    """
    z = np.asarray(z, dtype=complex)
    M = z.size
    v = vacuum(M)
    for s in range(S):
        v = raise_along(v, M, s, z)
    return math.exp(-0.5 * float(np.vdot(z, z).real)) * v / math.factorial(S)


def dense_op(basis: FockBasis, name: str, *sites) -> np.ndarray:
    if name == "number":
        return fock.ladder_matrix(basis, sites[0], "number").toarray()
    if name == "hop":
        return fock.hop_matrix(basis, sites[0], sites[1]).toarray()
    raise ValueError(name)


def random_unit(rng: np.random.Generator, M: int) -> np.ndarray:
    v = rng.normal(size=M) + 1j * rng.normal(size=M)
    return v / np.linalg.norm(v)
