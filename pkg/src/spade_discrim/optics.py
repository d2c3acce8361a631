"""Hermite-Gauss overlaps, crosstalk models and SPADE detection probabilities.

Lengths are in units of the PSF width ``w``; the separation enters only through
the dimensionless half-separation ``x = d / 2w``.

Modes ``(n, m)`` with ``n, m < D`` are flattened row-major, ``n * D + m``.
That order is used for matrix rows/columns and for every file format.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .errors import DegenerateError, DomainError, InvalidStrengthError

CROSSTALK_MODELS = ("identity", "uniform", "unitary_random", "user_supplied")
UNITARITY_TOL = 1e-12


@dataclass(frozen=True)
class ModeIndex:
    n: int
    m: int

    def __post_init__(self):
        if self.n < 0 or self.m < 0:
            raise DomainError(f"mode indices must be non-negative, got ({self.n}, {self.m})")

    def flat(self, D: int) -> int:
        if self.n >= D or self.m >= D:
            raise DomainError(f"mode {self} outside cutoff D={D}")
        return self.n * D + self.m


def mode_index(n: int, m: int, D: int) -> int:
    """Position of mode ``(n, m)`` in the flattened D*D vector."""
    return ModeIndex(n, m).flat(D)


def iter_modes(D: int) -> Iterator[ModeIndex]:
    for n in range(D):
        for m in range(D):
            yield ModeIndex(n, m)


@dataclass(frozen=True)
class ImagingConfig:
    D: int = 2
    x: float = 0.0
    prior_h0: float = 0.5
    prior_h1: float = 0.5

    def __post_init__(self):
        if self.D < 2:
            raise DomainError(f"mode cutoff D must be >= 2, got {self.D}")
        if self.x < 0:
            raise DomainError(f"half-separation x must be >= 0, got {self.x}")
        if not (0 <= self.prior_h0 <= 1 and 0 <= self.prior_h1 <= 1):
            raise DomainError("priors must lie in [0, 1]")
        if abs(self.prior_h0 + self.prior_h1 - 1.0) > 1e-12:
            raise DomainError("priors must sum to 1")

    @property
    def priors(self) -> tuple[float, float]:
        return (self.prior_h0, self.prior_h1)


def crosstalk_strength(C) -> float:
    """Mean squared magnitude of the off-diagonal crosstalk entries."""
    entries = C.entries if isinstance(C, CrosstalkMatrix) else np.asarray(C)
    size = entries.shape[0]
    total = np.sum(np.abs(entries) ** 2) - np.sum(np.abs(np.diag(entries)) ** 2)
    return float(total / (size * (size - 1)))


@dataclass(frozen=True, eq=False)
class CrosstalkMatrix:
    """Complex ``D^2 x D^2`` crosstalk matrix plus the model that produced it.

    ``realized_epsilon2`` is always recomputed from the entries. Identity and
    random-unitary matrices are checked for unitarity; the uniform model is
    only required to have unit-norm rows.
    """

    entries: np.ndarray
    model: str = "user_supplied"
    mu: float | None = None
    target_epsilon2: float | None = None
    seed: int | None = None
    realized_epsilon2: float = field(init=False)

    def __post_init__(self):
        entries = np.array(self.entries, dtype=np.complex128)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise DomainError(f"crosstalk matrix must be square, got shape {entries.shape}")
        D = math.isqrt(entries.shape[0])
        if D * D != entries.shape[0] or D < 2:
            raise DomainError(f"matrix size {entries.shape[0]} is not D^2 for any D >= 2")
        if self.model not in CROSSTALK_MODELS:
            raise DomainError(f"unknown crosstalk model {self.model!r}")
        if self.model in ("identity", "unitary_random"):
            dev = unitarity_defect(entries)
            if dev > UNITARITY_TOL:
                raise DomainError(f"{self.model} crosstalk is not unitary (defect {dev:.3g})")
        elif self.model == "uniform":
            norms = np.linalg.norm(entries, axis=1)
            if np.max(np.abs(norms - 1.0)) > UNITARITY_TOL:
                raise DomainError("uniform crosstalk rows must have unit norm")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "realized_epsilon2", crosstalk_strength(entries))

    @property
    def D(self) -> int:
        return math.isqrt(self.entries.shape[0])

    def element(self, row: tuple[int, int], col: tuple[int, int]) -> complex:
        """Entry ``C_{nm,kl}``; zero when either mode lies beyond the cutoff."""
        D = self.D
        if max(row) >= D or max(col) >= D:
            return 0j
        return complex(self.entries[mode_index(*row, D), mode_index(*col, D)])

    def to_dict(self) -> dict:
        return {
            "d": self.D,
            "model": self.model,
            "seed": self.seed,
            "mu": self.mu,
            "target_epsilon2": self.target_epsilon2,
            "realized_epsilon2": self.realized_epsilon2,
            "entries": [[[float(z.real), float(z.imag)] for z in row] for row in self.entries],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: dict) -> "CrosstalkMatrix":
        raw = np.asarray(data["entries"], dtype=float)
        if raw.ndim != 3 or raw.shape[2] != 2:
            raise DomainError("entries must be a matrix of [re, im] pairs")
        C = cls(
            raw[..., 0] + 1j * raw[..., 1],
            model=data.get("model", "user_supplied"),
            mu=data.get("mu"),
            target_epsilon2=data.get("target_epsilon2"),
            seed=data.get("seed"),
        )
        if "d" in data and data["d"] != C.D:
            raise DomainError(f"declared d={data['d']} does not match matrix size (D={C.D})")
        stored = data.get("realized_epsilon2")
        if stored is not None and abs(stored - C.realized_epsilon2) > 1e-14:
            raise DomainError("stored realized_epsilon2 disagrees with the entries")
        return C

    @classmethod
    def from_json(cls, text: str) -> "CrosstalkMatrix":
        return cls.from_dict(json.loads(text))


def unitarity_defect(entries: np.ndarray) -> float:
    """``max |C^dagger C - I|`` over all entries."""
    entries = np.asarray(entries)
    gram = entries.conj().T @ entries
    return float(np.max(np.abs(gram - np.eye(entries.shape[0]))))


def identity_crosstalk(D: int = 2) -> CrosstalkMatrix:
    if D < 2:
        raise DomainError(f"D must be >= 2, got {D}")
    return CrosstalkMatrix(np.eye(D * D), model="identity", mu=0.0, target_epsilon2=0.0)


def uniform_crosstalk(D: int, epsilon2: float) -> CrosstalkMatrix:
    """Uniform crosstalk: every off-diagonal entry equals ``sqrt(epsilon2)``.

    Rows are normalized but the matrix is not unitary for ``epsilon2 > 0``.
    """
    if D < 2:
        raise DomainError(f"D must be >= 2, got {D}")
    leak = (D * D - 1) * epsilon2
    if epsilon2 < 0 or leak > 1.0:
        raise InvalidStrengthError(
            f"uniform crosstalk needs 0 <= (D^2-1)*epsilon2 <= 1, got {leak!r}"
        )
    size = D * D
    entries = np.full((size, size), math.sqrt(epsilon2))
    np.fill_diagonal(entries, math.sqrt(max(0.0, 1.0 - leak)))
    return CrosstalkMatrix(entries, model="uniform", target_epsilon2=epsilon2)


def hg_overlap_ideal(n: int, m: int, x: float, sign: int = 1) -> float:
    """Overlap of the ideal HG mode ``u_nm`` with a PSF displaced by ``sign * x``."""
    if n < 0 or m < 0:
        raise DomainError("mode indices must be non-negative")
    if sign not in (1, -1):
        raise DomainError("sign must be +1 or -1")
    if m != 0:
        return 0.0
    shift = sign * x
    if n == 0:
        return math.exp(-0.5 * x * x)
    if shift == 0.0:
        return 0.0
    # log-space factorial keeps large n finite
    mag = math.exp(n * math.log(abs(shift)) - 0.5 * math.lgamma(n + 1) - 0.5 * x * x)
    return mag if (shift > 0 or n % 2 == 0) else -mag


def ideal_overlaps(x: float, D: int) -> tuple[np.ndarray, np.ndarray]:
    """Flattened ideal overlaps ``(beta_plus, beta_minus)`` over the D*D modes."""
    plus = np.zeros(D * D)
    minus = np.zeros(D * D)
    for n in range(D):
        plus[n * D] = hg_overlap_ideal(n, 0, x, +1)
        minus[n * D] = hg_overlap_ideal(n, 0, x, -1)
    return plus, minus


@dataclass(frozen=True, eq=False)
class OverlapAmplitudes:
    f_plus: np.ndarray
    f_minus: np.ndarray
    D: int

    def __getitem__(self, mode: tuple[int, int]) -> tuple[complex, complex]:
        k = mode_index(*mode, self.D)
        return complex(self.f_plus[k]), complex(self.f_minus[k])


def crosstalk_overlaps(C: CrosstalkMatrix, x: float) -> OverlapAmplitudes:
    beta_plus, beta_minus = ideal_overlaps(x, C.D)
    return OverlapAmplitudes(C.entries @ beta_plus, C.entries @ beta_minus, C.D)


@dataclass(frozen=True, eq=False)
class ModeDistribution:
    """Renormalized detection probabilities over the D*D measured modes."""

    probabilities: np.ndarray
    D: int
    x: float

    def __post_init__(self):
        p = np.array(self.probabilities, dtype=float)
        if p.shape != (self.D * self.D,):
            raise DomainError(f"expected {self.D * self.D} probabilities, got shape {p.shape}")
        if np.any(p < 0) or np.any(p > 1) or abs(p.sum() - 1.0) > 1e-12:
            raise DomainError("probabilities must lie in [0, 1] and sum to 1")
        p.setflags(write=False)
        object.__setattr__(self, "probabilities", p)

    def __getitem__(self, mode: tuple[int, int]) -> float:
        return float(self.probabilities[mode_index(*mode, self.D)])

    @property
    def p10(self) -> float:
        """Probability of a click in the antisymmetric mode ``v_10``."""
        return self[1, 0]


def mode_probabilities(C: CrosstalkMatrix, x: float, D: int | None = None) -> ModeDistribution:
    if D is None:
        D = C.D
    if D != C.D:
        raise DomainError(f"D={D} does not match the crosstalk matrix (D={C.D})")
    f = crosstalk_overlaps(C, x)
    raw = 0.5 * (np.abs(f.f_plus) ** 2 + np.abs(f.f_minus) ** 2)
    total = raw.sum()
    if total < 1e-300:
        raise DegenerateError("detection probabilities vanish in every measured mode")
    return ModeDistribution(np.clip(raw / total, 0.0, 1.0), D, x)


def psf_intensity(rx, ry):
    """``|u_00(r)|^2`` for the Gaussian PSF with unit width."""
    return (2.0 / math.pi) * np.exp(-2.0 * (np.asarray(rx) ** 2 + np.asarray(ry) ** 2))


def direct_imaging_intensity(x: float, rx, ry):
    """Image-plane photon density for two sources at ``(+x, 0)`` and ``(-x, 0)``."""
    rx = np.asarray(rx, dtype=float)
    return 0.5 * (psf_intensity(rx - x, ry) + psf_intensity(rx + x, ry))
