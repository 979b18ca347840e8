"""Brute-force observables on the full ``D^2``-dimensional density-matrix space.

Nothing here uses the sector decomposition; these routines exist to check it
at small ``D``.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as la

from .sectors import dense_liouvillian, ladder_operators
from .model import ModelSpec


def _vec(matrix: np.ndarray) -> np.ndarray:
    return np.asarray(matrix).reshape(-1, order="F")


def _unvec(vector: np.ndarray, dim: int) -> np.ndarray:
    return np.asarray(vector).reshape(dim, dim, order="F")


class DenseLaser:
    """Dense superoperators for one model."""

    def __init__(self, model: ModelSpec):
        self.model = model
        self.dim = model.dim
        self.liouvillian = dense_liouvillian(model)
        _, self.L = ladder_operators(model)
        self.jump = np.kron(self.L.conj(), self.L)
        self.rho = self._steady_state()
        self.flux = float(np.trace(self.L.T @ self.L @ self.rho).real)

    def _steady_state(self) -> np.ndarray:
        _, _, vh = la.svd(self.liouvillian)
        rho = _unvec(vh[-1].conj(), self.dim)
        return (rho / np.trace(rho)).real

    def _solve(self, rhs: np.ndarray, shift: complex = 0.0) -> np.ndarray:
        A = self.liouvillian + shift * np.eye(self.dim ** 2)
        return la.lstsq(A, rhs)[0]

    def coherence_at(self, omega: float = 0.0) -> float:
        seed = _vec(self.L @ self.rho)
        z = self._solve(-seed.astype(complex), 1j * omega)
        return float(2.0 * np.real(np.trace(self.L.conj().T @ _unvec(z, self.dim))))

    def mandel_q(self) -> float:
        rho = _vec(self.rho)
        b = self.jump @ rho - self.flux * rho
        z = self._solve(-b)
        z = z - np.trace(_unvec(z, self.dim)) * rho
        return float(2.0 / self.flux * np.trace(_unvec(self.jump @ z, self.dim)).real)

    def g1(self, taus) -> np.ndarray:
        seed = _vec(self.L @ self.rho)
        out = [np.trace(self.L.conj().T @ _unvec(la.expm(self.liouvillian * t) @ seed, self.dim))
               for t in taus]
        return np.real(np.array(out)) / self.flux

    def g2(self, taus) -> np.ndarray:
        seed = self.jump @ _vec(self.rho)
        out = [np.trace(_unvec(self.jump @ (la.expm(self.liouvillian * t) @ seed), self.dim))
               for t in taus]
        return np.real(np.array(out)) / self.flux ** 2


def dense_steady_state(model: ModelSpec) -> np.ndarray:
    return DenseLaser(model).rho
