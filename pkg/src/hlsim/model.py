"""Cavity distributions and ladder amplitudes for the two laser families.

The cavity is a ``D``-level ladder with states ``|0>, ..., |D-1>``.  Both
families share the stationary ansatz

    rho_n  ∝  sin^4(pi (n + 1) / (D + 1)),

and differ in how gain and loss amplitudes are derived from it.  Gain moves
``|n-1> -> |n>`` with amplitude ``g_n`` and loss moves ``|n> -> |n-1>`` with
amplitude ``l_n``, for ``n = 1..D-1``.  Both rate constants are set to one.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import InvalidDimensionError, InvalidParameterError


class Family(str, enum.Enum):
    LAMBDA = "lambda"
    REGULAR_PUMP = "q"

    @classmethod
    def parse(cls, value) -> "Family":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {"lambda": cls.LAMBDA, "l": cls.LAMBDA, "q": cls.REGULAR_PUMP,
                   "regular": cls.REGULAR_PUMP, "regularpump": cls.REGULAR_PUMP,
                   "regular_pump": cls.REGULAR_PUMP}
        try:
            return aliases[key]
        except KeyError:
            raise InvalidParameterError(f"unknown model family {value!r}") from None


def _check_dim(dim) -> int:
    if isinstance(dim, bool) or int(dim) != dim:
        raise InvalidDimensionError(f"cavity dimension must be an integer, got {dim!r}")
    dim = int(dim)
    if dim < 2:
        raise InvalidDimensionError(f"cavity dimension must be >= 2, got {dim}")
    return dim


def _check_q(q: float) -> float:
    q = float(q)
    if not np.isfinite(q) or q < -1.0:
        raise InvalidParameterError(f"pump Mandel-Q must lie in [-1, inf), got {q}")
    return q


@dataclass(frozen=True)
class ModelSpec:
    """One member of a laser family at a given cavity dimension."""

    family: Family
    param: float
    dim: int

    def __post_init__(self):
        object.__setattr__(self, "family", Family.parse(self.family))
        object.__setattr__(self, "dim", _check_dim(self.dim))
        param = float(self.param)
        if not np.isfinite(param):
            raise InvalidParameterError(f"model parameter must be finite, got {self.param!r}")
        if self.family is Family.REGULAR_PUMP:
            _check_q(param)
        object.__setattr__(self, "param", param)

    @classmethod
    def lam(cls, lam: float, dim: int) -> "ModelSpec":
        return cls(Family.LAMBDA, lam, dim)

    @classmethod
    def q(cls, q: float, dim: int) -> "ModelSpec":
        return cls(Family.REGULAR_PUMP, q, dim)

    @property
    def bandwidth(self) -> int:
        return 2 if self.family is Family.REGULAR_PUMP else 1

    @property
    def approximate_generator(self) -> bool:
        # negative weight on D[G]^2 breaks complete positivity
        return self.family is Family.REGULAR_PUMP and self.param < 0

    @property
    def exact_ansatz(self) -> bool:
        """True when the sin^4 distribution is exactly stationary at finite D."""
        return self.family is Family.LAMBDA or self.param == 0.0

    def label(self) -> str:
        sym = "lambda" if self.family is Family.LAMBDA else "q"
        return f"{sym}={self.param:g}, D={self.dim}"


@dataclass(frozen=True, eq=False)
class CavityDistribution:
    """Diagonal of a cavity state in the number basis."""

    probs: np.ndarray
    mu: float

    @property
    def dim(self) -> int:
        return len(self.probs)

    @classmethod
    def from_probs(cls, probs) -> "CavityDistribution":
        probs = np.asarray(probs, dtype=float)
        return cls(probs, float(np.dot(np.arange(len(probs)), probs)))


@dataclass(frozen=True, eq=False)
class LadderAmplitudes:
    """Gain and loss amplitudes; ``gain[n-1]`` holds ``g_n`` for ``n = 1..D-1``."""

    gain: np.ndarray
    loss: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.gain) + 1

    def g(self, n: int) -> float:
        return float(self.gain[n - 1]) if 1 <= n <= self.dim - 1 else 0.0

    def l(self, n: int) -> float:  # noqa: E743
        return float(self.loss[n - 1]) if 1 <= n <= self.dim - 1 else 0.0

    def padded(self, role: str) -> np.ndarray:
        """Amplitudes indexed directly by ``n`` over ``0..D+1``, zero outside ``1..D-1``."""
        out = np.zeros(self.dim + 2)
        out[1:self.dim] = self.gain if role == "gain" else self.loss
        return out


def steady_distribution(dim: int) -> CavityDistribution:
    """Normalized sin^4 populations of a ``dim``-level cavity.

    The first half is evaluated and mirrored so that ``probs[n] == probs[D-1-n]``
    holds bit for bit.
    """
    dim = _check_dim(dim)
    half = (dim + 1) // 2
    n = np.arange(half)
    left = np.sin(np.pi * (n + 1) / (dim + 1)) ** 4
    weights = np.empty(dim)
    weights[:half] = left
    weights[dim - half:] = left[::-1]
    probs = weights / weights.sum()
    return CavityDistribution.from_probs(probs)


def _log_ratios(dist: CavityDistribution) -> np.ndarray:
    """``ln(rho_n / rho_{n-1})`` for ``n = 1..D-1``."""
    probs = np.asarray(dist.probs, dtype=float)
    if np.any(probs <= 0):
        raise InvalidParameterError("ladder amplitudes need strictly positive populations")
    logs = np.log(probs)
    return logs[1:] - logs[:-1]


def lambda_amplitudes(dist: CavityDistribution, lam: float) -> LadderAmplitudes:
    """Gain ``(rho_n/rho_{n-1})^(lam/2)`` and loss ``(rho_{n-1}/rho_n)^((1-lam)/2)``."""
    lam = float(lam)
    if not np.isfinite(lam):
        raise InvalidParameterError(f"lambda must be finite, got {lam}")
    up = _log_ratios(dist)
    return LadderAmplitudes(np.exp(0.5 * lam * up), np.exp(-0.5 * (1.0 - lam) * up))


def q_amplitudes(dist: CavityDistribution, q: float) -> LadderAmplitudes:
    """Flat (quasi-isometric) gain with the loss of the lambda-family at ``lambda = -q/2``."""
    q = _check_q(q)
    up = _log_ratios(dist)
    return LadderAmplitudes(np.ones_like(up), np.exp(-0.5 * (1.0 + 0.5 * q) * up))


def model_amplitudes(model: ModelSpec) -> tuple[CavityDistribution, LadderAmplitudes]:
    dist = steady_distribution(model.dim)
    if model.family is Family.LAMBDA:
        return dist, lambda_amplitudes(dist, model.param)
    return dist, q_amplitudes(dist, model.param)


def photon_flux(amps: LadderAmplitudes, dist: CavityDistribution) -> float:
    """Beam flux ``Tr[L^† L rho] = sum_n l_n^2 rho_n``."""
    return float(np.dot(amps.loss ** 2, np.asarray(dist.probs)[1:]))


def gain_flux(amps: LadderAmplitudes, dist: CavityDistribution) -> float:
    """Pump-side flux ``sum_n g_n^2 rho_{n-1}``."""
    return float(np.dot(amps.gain ** 2, np.asarray(dist.probs)[:-1]))
