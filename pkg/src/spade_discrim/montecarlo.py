"""Random crosstalk ensembles, photon-count sampling and empirical error rates.

All randomness comes from ``numpy.random.Generator(PCG64(seed))``. Per-item
streams use ``seed + index``, so results do not depend on evaluation order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .chernoff import chernoff_exponent
from .decision_rules import (
    CountsRecord,
    ErrorReport,
    FullLRT,
    _report,
    crosstalk_p0,
    gamma_coefficient,
    log_likelihood_ratio,
    threshold,
)
from .errors import DomainError
from .optics import CrosstalkMatrix, mode_index, mode_probabilities

RNG_ALGORITHM = "numpy PCG64"
ENSEMBLE_HEADER = "sample_index,seed,realized_epsilon2,p0,x,xi"


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def gell_mann_basis(dim: int) -> list[np.ndarray]:
    """Generalized Gell-Mann matrices: symmetric, antisymmetric, then diagonal.

    Each is Hermitian and traceless with ``Tr(G_i G_j) = 2 delta_ij``.
    """
    if dim < 2:
        raise DomainError(f"dim must be >= 2, got {dim}")
    sym, anti = [], []
    for j, k in combinations(range(dim), 2):
        g = np.zeros((dim, dim), dtype=np.complex128)
        g[j, k] = g[k, j] = 1.0
        sym.append(g)
        g = np.zeros((dim, dim), dtype=np.complex128)
        g[j, k], g[k, j] = -1j, 1j
        anti.append(g)
    diag = []
    for l in range(1, dim):
        d = np.zeros(dim, dtype=np.complex128)
        d[:l] = 1.0
        d[l] = -l
        diag.append(np.diag(d * math.sqrt(2.0 / (l * (l + 1)))))
    return sym + anti + diag


def random_crosstalk(D: int, epsilon2_target: float, seed: int) -> CrosstalkMatrix:
    """Random unitary ``exp(-i mu lambda.G)`` near the identity.

    ``lambda`` is uniform on the unit sphere in ``D^4 - 1`` dimensions and
    ``mu`` comes from inverting the weak-crosstalk average
    ``eps^2 ~ 2 mu^2 / (D^4 - 1)``; the realized strength is stored.
    """
    if epsilon2_target < 0:
        raise DomainError("epsilon2_target must be >= 0")
    size = D * D
    basis = np.array(gell_mann_basis(size))
    rng = make_rng(seed)
    direction = rng.standard_normal(len(basis))
    direction /= np.linalg.norm(direction)
    mu = math.sqrt(epsilon2_target * (size * size - 1) / 2.0)
    if mu == 0.0:
        entries = np.eye(size, dtype=np.complex128)
    else:
        generator = np.tensordot(direction, basis, axes=1)
        w, v = np.linalg.eigh(generator)
        entries = (v * np.exp(-1j * mu * w)) @ v.conj().T
    return CrosstalkMatrix(entries, model="unitary_random", mu=mu, target_epsilon2=epsilon2_target, seed=seed)


def sample_counts(dist, n: int, seed: int):
    """Multinomial draw of ``n`` photons over the measured modes."""
    if n < 0:
        raise DomainError("n must be >= 0")
    counts = make_rng(seed).multinomial(n, dist.probabilities)
    return CountsRecord(counts, dist.D)


def simulate_decisions(spec, C: CrosstalkMatrix, x: float, n: int, trials: int, seed: int):
    """Per-trial outcomes ``(false_alarm, miss)`` as boolean arrays.

    Trial ``i`` draws one record under H0 then one under H1 from stream
    ``seed + i``.
    """
    if trials < 1:
        raise DomainError("trials must be >= 1")
    if n < 0:
        raise DomainError("n must be >= 0")
    probs0 = mode_probabilities(C, 0.0).probabilities
    probs1 = mode_probabilities(C, x).probabilities
    if isinstance(spec, FullLRT):
        assumed = mode_probabilities(C, spec.x).probabilities

        def says_h1(counts):
            return log_likelihood_ratio(counts, assumed, probs0) > 0
    else:
        tau = threshold(spec, n, crosstalk_p0(C), gamma_coefficient(C))
        k10 = mode_index(1, 0, C.D)

        def says_h1(counts):
            return counts[k10] > tau

    false_alarm = np.empty(trials, dtype=bool)
    miss = np.empty(trials, dtype=bool)
    for i in range(trials):
        rng = make_rng(seed + i)
        false_alarm[i] = says_h1(rng.multinomial(n, probs0))
        miss[i] = not says_h1(rng.multinomial(n, probs1))
    return false_alarm, miss


def empirical_error_rates(
    spec, C: CrosstalkMatrix, x: float, n: int, trials: int, seed: int, priors=(0.5, 0.5)
) -> ErrorReport:
    false_alarm, miss = simulate_decisions(spec, C, x, n, trials, seed)
    return _report(spec, n, false_alarm.mean(), miss.mean(), priors, "monte_carlo")


def binomial_stderr(p: float, trials: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / trials)


@dataclass(frozen=True)
class SampleStats:
    median: float
    q25: float
    q75: float
    n_samples: int


def summarize(values) -> SampleStats:
    """Median and linearly interpolated quartiles."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise DomainError("cannot summarize an empty sample")
    q25, med, q75 = np.percentile(arr, [25, 50, 75])
    return SampleStats(float(med), float(q25), float(q75), int(arr.size))


@dataclass(frozen=True)
class EnsembleRow:
    sample_index: int
    seed: int
    realized_epsilon2: float
    p0: float
    x: float
    xi: float

    def csv_row(self) -> str:
        return ",".join(
            [str(self.sample_index), str(self.seed)]
            + [f"{v:.17g}" for v in (self.realized_epsilon2, self.p0, self.x, self.xi)]
        )


def chernoff_ensemble(D: int, epsilon2: float, x_values, samples: int, seed: int) -> list[EnsembleRow]:
    """Exact Chernoff exponents for ``samples`` random crosstalks (seeds ``seed + i``)."""
    if samples < 1:
        raise DomainError("samples must be >= 1")
    rows = []
    for i in range(samples):
        C = random_crosstalk(D, epsilon2, seed + i)
        dist0 = mode_probabilities(C, 0.0)
        for x in x_values:
            xi = chernoff_exponent(dist0, mode_probabilities(C, x)).xi
            rows.append(EnsembleRow(i, seed + i, C.realized_epsilon2, dist0.p10, float(x), xi))
    return rows
