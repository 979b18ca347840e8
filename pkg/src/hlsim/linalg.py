"""Banded LU kernels: solves with iterative refinement, null vectors,
trace-deflated solves and the slowest eigenvalue of a stable sector.

Factorizations go through LAPACK ``?gbtrf``/``?gbtrs`` so they are
deterministic and reusable across right-hand sides.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import lapack
from scipy.sparse.linalg import LinearOperator, onenormest

from .errors import ContractViolation, ConvergenceError, SingularMatrixError
from .sectors import SectorOperator

log = logging.getLogger(__name__)

DEFAULT_REFINE = 2
MAX_ITER = 200
# relative to max |diagonal|; must sit far below the sector-0 gap (~1e-6 relative at D=1000)
NULL_SHIFT_SCALE = 1e-10
TRACE_TOL = 1e-10


class Solution(NamedTuple):
    x: np.ndarray
    residual: float


def _lapack(dtype):
    if np.issubdtype(dtype, np.complexfloating):
        return lapack.zgbtrf, lapack.zgbtrs
    return lapack.dgbtrf, lapack.dgbtrs


@dataclass(frozen=True, eq=False)
class BandedFactorization:
    """LU factors of a banded matrix with partial pivoting."""

    matrix: SectorOperator
    lu: np.ndarray
    piv: np.ndarray

    @property
    def size(self) -> int:
        return self.matrix.size

    @property
    def bandwidth(self) -> int:
        return self.matrix.bandwidth

    @property
    def pivots(self) -> np.ndarray:
        return self.lu[self.matrix.lower + self.matrix.upper]

    def _solve(self, b: np.ndarray, trans: int = 0) -> np.ndarray:
        _, gbtrs = _lapack(self.lu.dtype)
        rhs = np.asarray(b, dtype=np.result_type(self.lu.dtype, np.asarray(b).dtype))
        if rhs.dtype != self.lu.dtype:
            # real factors with a complex right-hand side: solve both parts
            return self._solve(rhs.real, trans) + 1j * self._solve(rhs.imag, trans)
        x, info = gbtrs(self.lu, self.matrix.lower, self.matrix.upper, rhs, self.piv, trans=trans)
        if info != 0:
            raise SingularMatrixError(f"?gbtrs failed with info={info}", float(np.min(np.abs(self.pivots))))
        return x

    def solve(self, b, refine: int = DEFAULT_REFINE) -> Solution:
        """Solve ``A x = b`` followed by ``refine`` rounds of mixed-precision refinement.

        The reported residual is the normwise backward error
        ``|b - A x| / (|A| |x| + |b|)`` in the infinity norm.
        """
        b = np.asarray(b)
        x = self._solve(b)
        for _ in range(refine):
            x = x + self._solve(wide_residual(self.matrix, x, b))
        return Solution(x, backward_error(self.matrix, x, b))

    def condition_estimate(self) -> float:
        """1-norm condition number estimate (deterministic Hager estimator)."""
        n = self.size
        dtype = self.lu.dtype
        inv = LinearOperator((n, n), dtype=dtype,
                             matvec=lambda v: self._solve(np.ravel(v)),
                             rmatvec=lambda v: self._solve(np.ravel(v), trans=2 if
                                                           np.iscomplexobj(self.lu) else 1))
        norm_a = float(abs(self.matrix.to_sparse()).sum(axis=0).max())
        return norm_a * float(onenormest(inv, t=1))


def wide_residual(A: SectorOperator, x, b) -> np.ndarray:
    """``b - A x`` accumulated in extended precision, rounded back to double."""
    complex_ = np.iscomplexobj(A.ab) or np.iscomplexobj(x) or np.iscomplexobj(b)
    wide = np.clongdouble if complex_ else np.longdouble
    Aw = SectorOperator(A.k, A.ab.astype(wide), A.lower, A.upper)
    r = np.asarray(b, dtype=wide) - Aw.matvec(np.asarray(x, dtype=wide))
    return r.astype(np.complex128 if complex_ else np.float64)


def backward_error(A: SectorOperator, x, b) -> float:
    """Normwise relative backward error of ``x`` as a solution of ``A x = b``."""
    x = np.asarray(x)
    b = np.asarray(b)
    r = float(np.max(np.abs(b - A.matvec(x)), initial=0.0))
    scale = A.norm_inf() * float(np.max(np.abs(x), initial=0.0)) + float(np.max(np.abs(b), initial=0.0))
    return r / scale if scale > 0 else r


def factorize(A: SectorOperator, check: bool = True) -> BandedFactorization:
    """LU-factor a banded sector operator.

    With ``check`` a pivot below ``n * eps * |A|_1`` raises
    :class:`SingularMatrixError`.
    """
    gbtrf, _ = _lapack(A.ab.dtype)
    kl, ku, n = A.lower, A.upper, A.size
    work = np.zeros((2 * kl + ku + 1, n), dtype=A.ab.dtype)
    work[kl:] = A.ab
    lu, piv, info = gbtrf(work, kl, ku)
    pivots = np.abs(lu[kl + ku])
    if info < 0:
        raise ValueError(f"?gbtrf argument {-info} invalid")
    if check:
        smallest = float(pivots.min())
        norm_a = float(np.abs(A.ab).sum(axis=0).max())
        if info > 0 or smallest <= n * np.finfo(float).eps * norm_a:
            raise SingularMatrixError("matrix singular to working precision", smallest)
    return BandedFactorization(A, lu, piv)


def banded_solve(A: SectorOperator, b, refine: int = DEFAULT_REFINE) -> Solution:
    return factorize(A).solve(b, refine)


def null_vector(A: SectorOperator, seed=None, shift_scale: float | None = None,
                tol: float = 1e-10, maxiter: int = MAX_ITER) -> np.ndarray:
    """Stationary vector of a trace-preserving sector-0 generator, normalized to unit sum.

    Inverse iteration on ``A - eps I`` with ``eps = shift_scale * max|diag A|``;
    moving the shift off the spectrum (which lies in ``Re <= 0``) keeps the
    null mode dominant for any ``eps`` below the gap.  ``shift_scale``
    defaults to the module constant ``NULL_SHIFT_SCALE`` read at call time.
    """
    n = A.size
    if shift_scale is None:
        shift_scale = NULL_SHIFT_SCALE
    eps = shift_scale * float(np.max(np.abs(A.diagonal())))
    fact = factorize(A.shifted(-eps), check=False)
    v = np.ones(n) / n if seed is None else np.asarray(seed, dtype=float).copy()
    norm_a = A.norm_inf()
    residual = np.inf
    for it in range(1, maxiter + 1):
        prev = v
        v = fact._solve(v)
        v = v / v.sum()
        scale = float(np.max(np.abs(v)))
        residual = float(np.max(np.abs(A.matvec(v)))) / (norm_a * scale)
        # the residual alone is blind to slow modes, so also wait for the iterates to settle
        step = float(np.max(np.abs(v - prev))) / scale
        if residual <= tol and step <= tol:
            log.debug("null vector: %d iterations, residual %.3e", it, residual)
            return v
    raise ConvergenceError("null vector did not converge", residual, maxiter)


def deflated_solve(A: SectorOperator, b, kernel, refine: int = DEFAULT_REFINE) -> Solution:
    """Solve ``A z = b`` on the traceless subspace, returning ``z`` with ``sum(z) == 0``.

    Since the columns of ``A`` sum to zero, one equation is redundant for a
    traceless ``b``; it is replaced by ``z_m = 0`` at the largest kernel entry
    (keeping the band), and the kernel component is projected out afterwards.
    """
    b = np.asarray(b, dtype=float)
    kernel = np.asarray(kernel, dtype=float)
    total = abs(float(b.sum()))
    if total > TRACE_TOL * max(1.0, float(np.abs(b).sum())):
        raise ContractViolation(f"right-hand side is not traceless (sum = {total:.3e})")
    if not np.any(b):
        return Solution(np.zeros_like(b), 0.0)
    kernel_unit = kernel / kernel.sum()
    b = b - b.sum() * kernel_unit
    m = int(np.argmax(kernel))
    ab = A.ab.copy()
    for d in range(-A.lower, A.upper + 1):
        j = m + d
        if 0 <= j < A.size:
            ab[A.upper - d, j] = 1.0 if d == 0 else 0.0
    pinned = SectorOperator(A.k, ab, A.lower, A.upper)
    rhs = b.copy()
    rhs[m] = 0.0
    fact = factorize(pinned)
    z = fact.solve(rhs, refine).x
    z = z - z.sum() * kernel_unit
    for _ in range(refine):
        r = wide_residual(A, z, b)
        r[m] = 0.0
        dz = fact._solve(r)
        z = z + dz - dz.sum() * kernel_unit
    return Solution(z, backward_error(A, z, b))


def slowest_eigenvalue(A: SectorOperator, tol: float = 1e-12, maxiter: int = MAX_ITER,
                       fact: BandedFactorization | None = None) -> complex:
    """Eigenvalue of largest real part of a stable, invertible sector.

    Shift-inverted power iteration about zero.  The dominant mode of ``A^-1``
    is the eigenvalue closest to the origin, which for these dissipative
    sectors is the slowest-decaying one.
    """
    fact = fact or factorize(A)
    n = A.size
    x = np.ones(n) / np.sqrt(n)
    theta = None
    delta = np.inf
    for it in range(1, maxiter + 1):
        y = fact._solve(x)
        new = float(np.dot(x, y))  # Rayleigh quotient of A^-1, x normalized
        x = y / np.linalg.norm(y)
        if theta is not None:
            delta = abs(new - theta) / abs(new)
            if delta <= tol:
                lam = 1.0 / new
                log.debug("slowest eigenvalue %.6e after %d iterations", lam, it)
                return complex(lam)
        theta = new
    raise ConvergenceError("shift-inverted power iteration did not converge", delta, maxiter)
