"""Liouvillian restricted to fixed-offset diagonals of the density matrix.

Every jump operator of both families shifts the excitation number by exactly
one, so the generator maps the diagonal ``rho_{n+k, n}`` (sector ``k``) into
itself.  Each sector is a small-bandwidth real matrix of size ``D - k``; entry
``n`` of a sector vector holds ``rho_{n+k, n}``.

Amplitudes are real, so the upper diagonal ``rho_{n, n+k}`` evolves under the
same matrix and only ``k >= 0`` is ever built.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import InvalidDimensionError, InvalidParameterError
from .model import Family, LadderAmplitudes, ModelSpec, model_amplitudes

DENSE_MAX_DIM = 32


@dataclass(frozen=True, eq=False)
class SectorOperator:
    """Banded real (or complex) matrix acting on one sector.

    ``ab`` uses the layout of :func:`scipy.linalg.solve_banded`:
    ``ab[upper + i - j, j] == A[i, j]``.
    """

    k: int
    ab: np.ndarray
    lower: int
    upper: int

    @property
    def size(self) -> int:
        return self.ab.shape[1]

    @property
    def bandwidth(self) -> int:
        return max(self.lower, self.upper)

    def diagonal(self, offset: int = 0) -> np.ndarray:
        """Entries ``A[i, i + offset]``."""
        if offset > self.upper or -offset > self.lower:
            return np.zeros(max(self.size - abs(offset), 0), dtype=self.ab.dtype)
        row = self.upper - offset
        if offset >= 0:
            return self.ab[row, offset:].copy()
        return self.ab[row, :self.size + offset].copy()

    def matvec(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        n = self.size
        y = np.zeros(n, dtype=np.result_type(self.ab, x))
        for d in range(-self.lower, self.upper + 1):
            row = self.upper - d
            if d >= 0:
                y[:n - d] += self.ab[row, d:] * x[d:]
            else:
                y[-d:] += self.ab[row, :n + d] * x[:n + d]
        return y

    __matmul__ = matvec

    def todense(self) -> np.ndarray:
        n = self.size
        out = np.zeros((n, n), dtype=self.ab.dtype)
        for d in range(-self.lower, self.upper + 1):
            diag = self.diagonal(d)
            if len(diag):
                out += np.diag(diag, d)
        return out

    def to_sparse(self) -> sp.csr_matrix:
        offsets = list(range(-self.lower, self.upper + 1))
        diags = [self.diagonal(d) for d in offsets]
        keep = [(d, v) for d, v in zip(offsets, diags) if len(v)]
        if not keep:
            return sp.csr_matrix((self.size, self.size), dtype=self.ab.dtype)
        return sp.diags([v for _, v in keep], [d for d, _ in keep],
                        shape=(self.size, self.size), format="csr", dtype=self.ab.dtype)

    @classmethod
    def from_diagonals(cls, k: int, diagonals: dict[int, np.ndarray], size: int) -> "SectorOperator":
        lower = max([0] + [-d for d in diagonals if d < 0])
        upper = max([0] + [d for d in diagonals if d > 0])
        dtype = np.result_type(*[np.asarray(v) for v in diagonals.values()]) if diagonals else float
        ab = np.zeros((lower + upper + 1, size), dtype=dtype)
        for d, values in diagonals.items():
            values = np.asarray(values)
            if len(values) != max(size - abs(d), 0):
                raise ValueError(f"diagonal {d} has length {len(values)} for size {size}")
            if d >= 0:
                ab[upper - d, d:] = values
            else:
                ab[upper - d, :size + d] = values
        return cls(k, ab, lower, upper)

    @classmethod
    def from_dense(cls, k: int, matrix: np.ndarray, lower: int, upper: int) -> "SectorOperator":
        matrix = np.asarray(matrix)
        return cls.from_diagonals(k, {d: np.diagonal(matrix, d) for d in range(-lower, upper + 1)},
                                  matrix.shape[0])

    def _as_diagonals(self) -> dict[int, np.ndarray]:
        return {d: self.diagonal(d) for d in range(-self.lower, self.upper + 1)}

    def __add__(self, other: "SectorOperator") -> "SectorOperator":
        if other.k != self.k or other.size != self.size:
            raise ValueError("sector operators must share sector and size")
        diags = self._as_diagonals()
        for d, v in other._as_diagonals().items():
            diags[d] = diags[d] + v if d in diags else v
        return SectorOperator.from_diagonals(self.k, diags, self.size)

    def scale(self, factor) -> "SectorOperator":
        return SectorOperator(self.k, self.ab * factor, self.lower, self.upper)

    def square(self) -> "SectorOperator":
        """Matrix square, kept in banded storage with doubled bandwidths."""
        s = self.to_sparse()
        sq = s @ s
        diags = {d: sq.diagonal(d) for d in range(-2 * self.lower, 2 * self.upper + 1)
                 if self.size - abs(d) > 0}
        return SectorOperator.from_diagonals(self.k, diags, self.size)

    def shifted(self, shift) -> "SectorOperator":
        """``A + shift * I``; complex shifts promote the storage dtype."""
        ab = self.ab.astype(np.result_type(self.ab, np.asarray(shift)), copy=True)
        ab[self.upper] += shift
        return SectorOperator(self.k, ab, self.lower, self.upper)

    def column_sums(self) -> np.ndarray:
        return np.asarray(self.ab.sum(axis=0))

    def norm_inf(self) -> float:
        return float(abs(self.to_sparse()).sum(axis=1).max())


def _check_sector(k: int, dim: int) -> int:
    if int(k) != k or not 0 <= k <= dim - 1:
        raise InvalidParameterError(f"sector index must lie in [0, {dim - 1}], got {k}")
    return int(k)


def dissipator_sector(role: str, amps: LadderAmplitudes, k: int, dim: int) -> SectorOperator:
    """Sector-``k`` block of ``D[c]`` for a raising (``gain``) or lowering (``loss``) ladder."""
    k = _check_sector(k, dim)
    size = dim - k
    n = np.arange(size)
    if role == "gain":
        g = amps.padded("gain")
        decay = g[np.arange(dim) + 1] ** 2  # g_{m+1}^2, vanishing at the top level
        diag = -0.5 * (decay[n + k] + decay[n])
        sub = g[n[1:] + k] * g[n[1:]]
        return SectorOperator.from_diagonals(k, {0: diag, -1: sub}, size)
    if role == "loss":
        l = amps.padded("loss")  # noqa: E741
        diag = -0.5 * (l[n + k] ** 2 + l[n] ** 2)
        sup = l[n[:-1] + k + 1] * l[n[:-1] + 1]
        return SectorOperator.from_diagonals(k, {0: diag, 1: sup}, size)
    raise InvalidParameterError(f"role must be 'gain' or 'loss', got {role!r}")


def sector_generator(model: ModelSpec, k: int) -> SectorOperator:
    """Full generator of sector ``k``: bandwidth 1 for the lambda-family, 2 for the q-family."""
    k = _check_sector(k, model.dim)
    _, amps = model_amplitudes(model)
    gain = dissipator_sector("gain", amps, k, model.dim)
    loss = dissipator_sector("loss", amps, k, model.dim)
    if model.family is Family.LAMBDA:
        return gain + loss
    return gain + gain.square().scale(0.5 * model.param) + loss


def ladder_operators(model: ModelSpec) -> tuple[np.ndarray, np.ndarray]:
    """Dense gain and loss operators in the number basis."""
    _, amps = model_amplitudes(model)
    D = model.dim
    G = np.zeros((D, D))
    L = np.zeros((D, D))
    n = np.arange(1, D)
    G[n, n - 1] = amps.gain
    L[n - 1, n] = amps.loss
    return G, L


def _dense_dissipator(c: np.ndarray) -> np.ndarray:
    eye = np.eye(c.shape[0])
    cdc = c.conj().T @ c
    return np.kron(c.conj(), c) - 0.5 * np.kron(eye, cdc) - 0.5 * np.kron(cdc.T, eye)


def dense_liouvillian(model: ModelSpec) -> np.ndarray:
    """Superoperator on column-stacked density matrices, built without sectors.

    Index ``i + j * D`` holds ``rho_{i, j}``.
    """
    if model.dim > DENSE_MAX_DIM:
        raise InvalidDimensionError(
            f"dense Liouvillian limited to D <= {DENSE_MAX_DIM}, got {model.dim}")
    G, L = ladder_operators(model)
    gain = _dense_dissipator(G)
    out = gain + _dense_dissipator(L)
    if model.family is Family.REGULAR_PUMP:
        out = out + 0.5 * model.param * (gain @ gain)
    return out


def sector_positions(dim: int, k: int) -> np.ndarray:
    """Column-stacked indices of ``rho_{n+k, n}``, ``n = 0..D-k-1``."""
    n = np.arange(dim - k)
    return (n + k) + n * dim


def upper_positions(dim: int, k: int) -> np.ndarray:
    """Column-stacked indices of ``rho_{n, n+k}``."""
    n = np.arange(dim - k)
    return n + (n + k) * dim
