"""Beam observables from sector generators.

The beam is the loss channel: its field operator is ``L`` with unit rate.
Quantum regression then gives

* ``<b^†(t+tau) b(t)> = Tr[L^† e^{L_1 tau}(L rho)]``, carried by sector 1;
* ``<:n(t+tau) n(t):> = Tr[J e^{L_0 tau}(J rho)]`` with ``J x = L x L^†``,
  carried by sector 0.

Coherence is ``2 pi`` times the power-spectrum peak, obtained from the
sector-1 resolvent.  The long-time Mandel-Q comes from a trace-deflated
solve on sector 0.
"""

from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la

from .errors import ContractViolation, InvalidParameterError
from .linalg import (
    BandedFactorization,
    deflated_solve,
    factorize,
    null_vector,
    slowest_eigenvalue,
)
from .model import CavityDistribution, ModelSpec, model_amplitudes, photon_flux
from .sectors import SectorOperator, sector_generator

log = logging.getLogger(__name__)

EIGEN_MAX_DIM = 512
SOLVER_TOL = 1e-9
WINDOW_FACTOR = 1.0
KRYLOV_DIM = 40
# eigenvector bases beyond this condition number fall back to rational Krylov
EIGEN_COND_MAX = 1e10
# search bracket for the spectral peak, in units of the linewidth
PEAK_SEARCH_SPAN = 2.0


@dataclass(frozen=True)
class BeamObservables:
    flux: float
    coherence: float
    peak_omega: float
    linewidth_gap: float
    linewidth_flux: float
    mandel_q: float
    mu: float
    flags: tuple[str, ...] = ()
    ansatz_distance: float = 0.0

    @property
    def ok(self) -> bool:
        """No solver-quality problems (model notes such as ``approximate-generator`` are fine)."""
        return not any(f in QUALITY_FLAGS or f.startswith("residual") for f in self.flags)

    def as_row(self) -> dict:
        return {
            "flux": self.flux,
            "coherence": self.coherence,
            "peak_omega": self.peak_omega,
            "linewidth_gap": self.linewidth_gap,
            "linewidth_flux": self.linewidth_flux,
            "mandel_q": self.mandel_q,
            "mu": self.mu,
            "flags": list(self.flags),
        }


QUALITY_FLAGS = {"non-convergence", "solver-failure", "horizon-short"}


@dataclass(frozen=True, eq=False)
class CorrelationSeries:
    taus: np.ndarray
    values: np.ndarray
    kind: str
    method: str = "eigen"


@dataclass(frozen=True, eq=False)
class MandelIntegral:
    """Mandel-Q from the integrated intensity correlation."""

    value: float
    tail: float
    horizon: float
    flags: tuple[str, ...] = ()

    def __float__(self) -> float:
        return self.value


@dataclass(eq=False)
class StationaryLaser:
    """Precomputed stationary quantities for one model.

    ``rho`` is the sin^4 ansatz when it is exactly stationary and the
    numerically extracted null vector otherwise.
    """

    model: ModelSpec
    rho: np.ndarray
    loss: np.ndarray  # l_n padded over n = 0..D+1
    flux: float
    sector0: SectorOperator
    sector1: SectorOperator
    ansatz_distance: float
    flags: list[str] = field(default_factory=list)
    _fact1: BandedFactorization | None = None
    _slowest: complex | None = None

    @property
    def dim(self) -> int:
        return self.model.dim

    @property
    def mu(self) -> float:
        return float(np.dot(np.arange(self.dim), self.rho))

    @property
    def field_weights(self) -> np.ndarray:
        """``w_n = l_{n+1}``: ``Tr[L^† y] = w . y`` for a sector-1 vector ``y``."""
        return self.loss[1:self.dim]

    @property
    def field_seed(self) -> np.ndarray:
        """Sector-1 vector of ``L rho``: ``l_{n+1} rho_{n+1}``."""
        return self.loss[1:self.dim] * self.rho[1:]

    @property
    def jump_weights(self) -> np.ndarray:
        """``l_n^2``: ``Tr[J x] = jump_weights . x`` on sector 0."""
        return self.loss[:self.dim] ** 2

    def jump(self, x: np.ndarray) -> np.ndarray:
        """Sector-0 action of ``J``: ``(J x)_n = l_{n+1}^2 x_{n+1}``."""
        out = np.zeros(self.dim)
        out[:-1] = self.loss[1:self.dim] ** 2 * x[1:]
        return out

    @property
    def fact1(self) -> BandedFactorization:
        if self._fact1 is None:
            self._fact1 = factorize(self.sector1)
        return self._fact1

    @property
    def slowest(self) -> complex:
        if self._slowest is None:
            self._slowest = slowest_eigenvalue(self.sector1, fact=self.fact1)
        return self._slowest

    @property
    def linewidth_gap(self) -> float:
        return -2.0 * self.slowest.real

    def require_stable(self) -> None:
        """Raise unless sector 1 decays; a growing mode leaves the coherence undefined.

        Only reachable for the approximate q < 0 generators at small ``D``.
        """
        if not self.slowest.real < 0:
            raise ContractViolation(
                f"sector-1 generator of {self.model.label()} has a growing mode "
                f"(eigenvalue {self.slowest.real:.3e}); coherence is undefined")


@functools.lru_cache(maxsize=64)
def stationary(model: ModelSpec) -> StationaryLaser:
    dist, amps = model_amplitudes(model)
    sector0 = sector_generator(model, 0)
    sector1 = sector_generator(model, 1) if model.dim > 1 else None
    flags = ["approximate-generator"] if model.approximate_generator else []
    if model.exact_ansatz:
        rho = np.asarray(dist.probs)
        distance = 0.0
    else:
        rho = null_vector(sector0, seed=dist.probs)
        distance = float(np.abs(rho - dist.probs).sum())
    flux = photon_flux(amps, CavityDistribution.from_probs(rho))
    return StationaryLaser(model, rho, amps.padded("loss"), flux, sector0, sector1, distance, flags)


def _laser(model) -> StationaryLaser:
    return model if isinstance(model, StationaryLaser) else stationary(model)


# --- spectrum and coherence ------------------------------------------------

def coherence_at(model, omega: float) -> float:
    """``2 pi P(omega)`` from the sector-1 resolvent ``(L_1 + i omega) z = -v``."""
    laser = _laser(model)
    laser.require_stable()
    v = laser.field_seed
    if omega == 0.0:
        z = laser.fact1.solve(-v)
    else:
        z = factorize(laser.sector1.shifted(1j * omega)).solve(-v.astype(complex))
    if z.residual > SOLVER_TOL:
        log.warning("resolvent residual %.2e at omega=%g for %s", z.residual, omega,
                    laser.model.label())
    return float(2.0 * np.real(np.dot(laser.field_weights, z.x)))


def _golden_max(f, a: float, b: float, tol: float, maxiter: int = 200) -> tuple[float, float]:
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(maxiter):
        if b - a <= tol:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


def coherence(model, xtol: float = 1e-6) -> tuple[float, float]:
    """Peak of ``coherence_at`` over ``omega`` and its location.

    Golden-section search over ``|omega| <= 2 ell_gap``; the zero-frequency
    value is the seed and is kept unless the search finds a larger one.
    """
    laser = _laser(model)
    ell = laser.linewidth_gap
    c0 = coherence_at(laser, 0.0)
    u, best = _golden_max(lambda u: coherence_at(laser, u * ell), -PEAK_SEARCH_SPAN,
                          PEAK_SEARCH_SPAN, xtol)
    if best > c0:
        return float(best), float(u * ell)
    return float(c0), 0.0


# --- counting statistics ---------------------------------------------------

def _mandel(laser: StationaryLaser) -> tuple[float, float]:
    b = laser.jump(laser.rho) - laser.flux * laser.rho
    sol = deflated_solve(laser.sector0, -b, laser.rho)
    return float(2.0 / laser.flux * np.dot(laser.jump_weights, sol.x)), sol.residual


def mandel_q(model) -> float:
    """Long-time Mandel-Q of the beam, ``(2/N) Tr[J z]`` with ``L_0 z = -(J rho - N rho)``.

    Only loss (beam) jumps are counted; pump events go elsewhere.
    """
    laser = _laser(model)
    q, residual = _mandel(laser)
    if residual > SOLVER_TOL:
        log.warning("deflated solve residual %.2e for %s", residual, laser.model.label())
    return q


def _eigen(A: SectorOperator):
    if A.size > EIGEN_MAX_DIM:
        raise InvalidParameterError(
            f"eigen-series evaluation limited to size <= {EIGEN_MAX_DIM}, got {A.size}")
    w, V = la.eig(A.todense())
    return w, V


@functools.lru_cache(maxsize=32)
def _sector_modes(model: ModelSpec, k: int):
    laser = stationary(model)
    A = laser.sector0 if k == 0 else laser.sector1
    w, V = _eigen(A)
    return w, V, la.lu_factor(V, check_finite=False), float(np.linalg.cond(V))


def _modal(laser: StationaryLaser, k: int, left: np.ndarray, right: np.ndarray):
    """Rates ``w_j`` and weights ``c_j`` with ``left . e^{A tau} right = sum_j c_j e^{w_j tau}``."""
    w, V, lu, _ = _sector_modes(laser.model, k)
    coeffs = (left @ V) * la.lu_solve(lu, right.astype(complex))
    return w, coeffs


def _slowest_population_rate(laser: StationaryLaser) -> float:
    w = la.eigvals(laser.sector0.todense())
    w = w[np.abs(w) > 1e-9 * np.max(np.abs(w))]
    return float(np.min(-w.real))


def mandel_q_by_integral(model, horizon: float | None = None) -> MandelIntegral:
    """Mandel-Q as ``(2/N) int_0^T [G2(tau) - N^2] dtau``.

    ``G2(tau) - N^2 = w . e^{L_0 tau} (J rho - N rho)`` is integrated in
    closed form with one matrix exponential of the bordered generator
    ``[[L_0, b], [0, 0]] T``, whose last column holds ``int_0^T e^{L_0 tau} b``.
    This avoids eigenvector bases, which are badly conditioned for ``q > 0``.
    The tail estimate is the integrand at ``T`` divided by the slowest
    population rate; ``T`` defaults to 40 slowest relaxation times.
    """
    laser = _laser(model)
    n = laser.dim
    if n > EIGEN_MAX_DIM:
        raise InvalidParameterError(
            f"integral route limited to D <= {EIGEN_MAX_DIM}, got {n}")
    b = laser.jump(laser.rho) - laser.flux * laser.rho
    rate = _slowest_population_rate(laser)
    if horizon is None:
        horizon = 40.0 / rate
    bordered = np.zeros((n + 1, n + 1))
    bordered[:n, :n] = laser.sector0.todense() * horizon
    bordered[:n, n] = b * horizon
    prop = la.expm(bordered)
    w = laser.jump_weights
    value = float(2.0 / laser.flux * np.dot(w, prop[:n, n]))
    tail = float(2.0 / laser.flux * abs(np.dot(w, prop[:n, :n] @ b)) / rate)
    flags = ("horizon-short",) if tail > 0.01 * max(abs(value), 1e-12) else ()
    return MandelIntegral(value, tail, float(horizon), flags)


# --- correlation functions -------------------------------------------------



def _resolvent_krylov(A: SectorOperator, fact: BandedFactorization | None, v: np.ndarray,
                      m: int = KRYLOV_DIM):
    """Orthonormal basis of ``span{v, A^-1 v, ..., A^-(m-1) v}`` and the projection of ``A``.

    The slow modes that dominate long-time correlations are captured first.
    Sector 0 is singular, so it is factored with a tiny shift.
    """
    if fact is None:
        eps = 1e-12 * float(np.max(np.abs(A.diagonal())))
        fact = factorize(A.shifted(-eps), check=False)
    m = min(m, A.size)
    V = np.zeros((A.size, m))
    V[:, 0] = v / np.linalg.norm(v)
    cols = 1
    for j in range(1, m):
        u = fact._solve(V[:, j - 1])
        scale = np.linalg.norm(u)
        for _ in range(2):
            u -= V[:, :j] @ (V[:, :j].T @ u)
        norm = np.linalg.norm(u)
        if norm <= 1e-13 * scale:
            break
        V[:, j] = u / norm
        cols += 1
    V = V[:, :cols]
    AV = np.column_stack([A.matvec(V[:, j]) for j in range(cols)])
    return V, V.T @ AV


def _series(laser: StationaryLaser, k: int, left, right, taus, method: str | None):
    taus = np.asarray(taus, dtype=float)
    if np.any(taus < 0) or np.any(np.diff(taus) < 0):
        raise InvalidParameterError("tau grid must be non-negative and ascending")
    A = laser.sector0 if k == 0 else laser.sector1
    if method is None:
        method = "rational-krylov"
        if A.size <= EIGEN_MAX_DIM and _sector_modes(laser.model, k)[3] <= EIGEN_COND_MAX:
            method = "eigen"
    if method == "eigen":
        w, c = _modal(laser, k, left, right)
        return np.real(np.exp(np.outer(taus, w)) @ c), method
    if method == "rational-krylov":
        V, H = _resolvent_krylov(A, laser.fact1 if k == 1 else None, right)
        w, S = la.eig(H)
        coeffs = (left @ V @ S) * la.solve(S, V.T @ right)
        return np.real(np.exp(np.outer(taus, w)) @ coeffs), method
    raise InvalidParameterError(f"unknown series method {method!r}")


def g1_correlation(model, tau_grid, method: str | None = None) -> CorrelationSeries:
    """Normalized first-order correlation ``<b^†(t+tau) b(t)> / N``."""
    laser = _laser(model)
    vals, used = _series(laser, 1, laser.field_weights, laser.field_seed, tau_grid, method)
    return CorrelationSeries(np.asarray(tau_grid, float), vals / laser.flux, "g1", used)


def g2_correlation(model, tau_grid, method: str | None = None) -> CorrelationSeries:
    """Normalized two-time intensity correlation ``Tr[J e^{L_0 tau} J rho] / N^2``."""
    laser = _laser(model)
    vals, used = _series(laser, 0, laser.jump_weights, laser.jump(laser.rho), tau_grid, method)
    return CorrelationSeries(np.asarray(tau_grid, float), vals / laser.flux ** 2, "g2", used)


def g2_zero(model) -> float:
    """``g2(0)`` as the direct sum ``sum_n l_n^2 (J rho)_n / N^2``."""
    laser = _laser(model)
    return float(np.dot(laser.jump_weights, laser.jump(laser.rho)) / laser.flux ** 2)


def coherence_by_series(model, samples_per_width: int = 40, widths: float = 40.0) -> float:
    """``2 pi`` times the peak of the discrete Fourier transform of the sampled ``C(tau)``.

    Independent of the resolvent route: ``C`` comes from the sector-1
    eigen-series, is mirrored to negative times and transformed by FFT.
    """
    laser = _laser(model)
    laser.require_stable()
    ell = laser.linewidth_gap
    dt = 1.0 / (samples_per_width * ell)
    n = int(math.ceil(widths / (ell * dt)))
    taus = dt * np.arange(n)
    c = g1_correlation(laser, taus).values * laser.flux
    two_sided = np.concatenate([c, c[:0:-1]])
    spectrum = dt * np.real(np.fft.fft(two_sided))
    return float(spectrum.max())


def ideal_references(N: float, ell: float, tau: float, omega: float) -> tuple[float, float, float]:
    """Phase-diffusing coherent beam: ``g1 = exp(-ell |tau| / 2)``, ``g2 = 1``, Lorentzian ``P``."""
    if not ell > 0:
        raise InvalidParameterError(f"linewidth must be positive, got {ell}")
    coh = 4.0 * N / ell
    half = 0.5 * ell
    spectrum = coh / (2.0 * np.pi) * half ** 2 / (omega ** 2 + half ** 2)
    return float(np.exp(-half * abs(tau))), 1.0, float(spectrum)


def condition4_deltas(model, window_factor: float = WINDOW_FACTOR, points: int = 401):
    """Largest deviations of ``g1`` and ``g2`` from the ideal beam over ``tau <= window``.

    ``window = window_factor * sqrt(C) / N`` and the ideal ``g1`` uses
    ``ell = 4 N / C``.  Returns ``(delta_g1, delta_g2, window)``.
    """
    laser = _laser(model)
    coh = coherence_at(laser, 0.0)
    window = window_factor * math.sqrt(coh) / laser.flux
    ell = 4.0 * laser.flux / coh
    taus = np.linspace(0.0, window, points)
    g1 = g1_correlation(laser, taus).values
    g2 = g2_correlation(laser, taus).values
    delta_g1 = float(np.max(np.abs(g1 - np.exp(-0.5 * ell * taus))))
    delta_g2 = float(np.max(np.abs(g2 - 1.0)))
    return delta_g1, delta_g2, window


# --- bundle ----------------------------------------------------------------

def beam_observables(model: ModelSpec, search_peak: bool = True) -> BeamObservables:
    """Flux, coherence, linewidths and Mandel-Q, with solver-quality flags."""
    laser = stationary(model)
    laser.require_stable()
    flags = list(laser.flags)
    if search_peak:
        coh, peak = coherence(laser)
    else:
        coh, peak = coherence_at(laser, 0.0), 0.0
    res1 = laser.fact1.solve(-laser.field_seed).residual
    if res1 > SOLVER_TOL:
        flags.append(f"residual-sector1:{res1:.1e}")
    q, res0 = _mandel(laser)
    if res0 > SOLVER_TOL:
        flags.append(f"residual-sector0:{res0:.1e}")
    return BeamObservables(
        flux=laser.flux,
        coherence=coh,
        peak_omega=peak,
        linewidth_gap=laser.linewidth_gap,
        linewidth_flux=4.0 * laser.flux / coh,
        mandel_q=q,
        mu=laser.mu,
        flags=tuple(flags),
        ansatz_distance=laser.ansatz_distance,
    )
