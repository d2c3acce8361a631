"""Decision rules on the photon count in mode ``v_10`` and their error rates.

Every thresholded rule accepts H1 iff ``N_10 > tau(N)``; a tie goes to H0.
Exact error probabilities use the binomial CDF at ``floor(tau)``; the
Gaussian approximation uses the un-floored threshold.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

import numpy as np
from scipy import special

from .errors import (
    DegenerateError,
    DomainError,
    ModelInconsistencyError,
    NumericalFailure,
)
from .optics import CrosstalkMatrix, mode_index, mode_probabilities

H0 = "H0"
H1 = "H1"
ERROR_METHODS = ("exact_binomial", "gaussian", "monte_carlo")
CSV_HEADER = "N,alpha,beta,pe,method,test,params"


def _fmt(value: float) -> str:
    return f"{value:.17g}"


# -- rules -------------------------------------------------------------------

@dataclass(frozen=True)
class Original:
    """``N_10 > 0``: optimal without crosstalk, a coin flip with it."""

    name = "original"

    @property
    def params(self) -> dict:
        return {}


@dataclass(frozen=True)
class NaiveMean:
    """``N_10 > N p0``: Pe tends to 1/4."""

    name = "naive"

    @property
    def params(self) -> dict:
        return {}


@dataclass(frozen=True)
class ZetaFamily:
    """``N_10 > N p0 + c N^a``; vanishing Pe for every x iff c > 0 and 1/2 < a < 1."""

    c: float
    a: float
    name = "zeta"

    @property
    def params(self) -> dict:
        return {"c": self.c, "a": self.a}

    @property
    def separation_independent(self) -> bool:
        return self.c > 0 and 0.5 < self.a < 1.0


@dataclass(frozen=True)
class SemiSeparation:
    """``N_10 > N (p0 + gamma x_min^2 / 2)``; Pe at x_min bounds Pe for x >= x_min."""

    x_min: float
    name = "semi"

    def __post_init__(self):
        if not self.x_min > 0:
            raise DomainError(f"x_min must be positive, got {self.x_min}")

    @property
    def params(self) -> dict:
        return {"x_min": self.x_min}


@dataclass(frozen=True)
class BinaryLRT:
    """Likelihood-ratio test on the two outcomes "mode 10" / "anything else"."""

    x: float
    name = "binary_lrt"

    def __post_init__(self):
        if not self.x > 0:
            raise DomainError(f"x must be positive, got {self.x}")

    @property
    def params(self) -> dict:
        return {"x": self.x}


@dataclass(frozen=True)
class FullLRT:
    """Likelihood-ratio test over all measured modes at an assumed separation."""

    x: float
    name = "full_lrt"

    def __post_init__(self):
        if not self.x > 0:
            raise DomainError(f"x must be positive, got {self.x}")

    @property
    def params(self) -> dict:
        return {"x": self.x}


TestSpec = Union[Original, NaiveMean, ZetaFamily, SemiSeparation, BinaryLRT, FullLRT]
_RULES = {cls.name: cls for cls in (Original, NaiveMean, ZetaFamily, SemiSeparation, BinaryLRT, FullLRT)}


def rule_label(spec) -> str:
    """Canonical text form, e.g. ``zeta(0.01,0.8)``; inverse of :func:`parse_rule`."""
    params = spec.params
    if not params:
        return spec.name
    return f"{spec.name}({','.join(repr(float(v)) for v in params.values())})"


def rule_params(spec) -> str:
    return ";".join(f"{k}={float(v)!r}" for k, v in spec.params.items())


def parse_rule(text: str):
    """Parse ``name`` or ``name(p1,p2)``; numbers may be fractions like ``4/5``."""
    text = text.strip()
    if "(" in text:
        if not text.endswith(")"):
            raise DomainError(f"malformed test spec {text!r}")
        name, _, arg_text = text[:-1].partition("(")
        try:
            args = [float(Fraction(a.strip())) for a in arg_text.split(",") if a.strip()]
        except ValueError as exc:
            raise DomainError(f"bad numeric parameter in {text!r}") from exc
    else:
        name, args = text, []
    name = name.strip().lower()
    if name not in _RULES:
        raise DomainError(f"unknown test {name!r}; choose from {sorted(_RULES)}")
    try:
        return _RULES[name](*args)
    except TypeError as exc:
        raise DomainError(f"wrong number of parameters for {name!r}") from exc


# -- crosstalk-derived constants ---------------------------------------------

def crosstalk_p0(C: CrosstalkMatrix) -> float:
    """Probability of a click in ``v_10`` for a single centred source."""
    return mode_probabilities(C, 0.0).p10


def gamma_coefficient(C: CrosstalkMatrix) -> float:
    """Small-separation slope: ``p(10|x) ~ p0 + gamma x^2``."""
    c10_00 = C.element((1, 0), (0, 0))
    cross = math.sqrt(2.0) * (c10_00 * C.element((1, 0), (2, 0)).conjugate()).real
    return abs(C.element((1, 0), (1, 0))) ** 2 - abs(c10_00) ** 2 + cross


def small_sep_prob(p0: float, gamma: float, x: float) -> float:
    if x < 0:
        raise DomainError("x must be >= 0")
    p = p0 + gamma * x * x
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p0 + gamma x^2 = {p} is not a probability")
    return p


# -- thresholds and decisions -------------------------------------------------

def threshold(spec, n, p0: float, gamma: float):
    """Decision threshold ``tau(N)``; ``n`` may be an integer or an array."""
    n_arr = np.asarray(n, dtype=float)
    if np.any(n_arr < 0):
        raise DomainError("N must be non-negative")
    if isinstance(spec, Original):
        tau = np.zeros_like(n_arr)
    elif isinstance(spec, NaiveMean):
        tau = n_arr * p0
    elif isinstance(spec, ZetaFamily):
        tau = n_arr * p0 + spec.c * n_arr**spec.a
    elif isinstance(spec, SemiSeparation):
        tau = n_arr * (p0 + 0.5 * gamma * spec.x_min**2)
    elif isinstance(spec, BinaryLRT):
        tau = n_arr * _binary_lrt_slope(p0, small_sep_prob(p0, gamma, spec.x))
    else:
        raise DomainError(f"{type(spec).__name__} has no count threshold; use full_lrt_decide")
    return float(tau) if tau.ndim == 0 else tau


def _binary_lrt_slope(p0: float, p_x: float) -> float:
    if p0 == 0.0:
        # ideal demultiplexer: the likelihood ratio is infinite for any click
        return 0.0
    if p_x <= p0:
        raise DegenerateError(f"binary LRT needs p_x > p0 (p0={p0}, p_x={p_x})")
    if p_x >= 1.0:
        raise DegenerateError("binary LRT needs p_x < 1")
    miss = math.log1p(-p0) - math.log1p(-p_x)
    return miss / (math.log(p_x / p0) + miss)


@dataclass(frozen=True, eq=False)
class CountsRecord:
    counts: np.ndarray
    D: int

    def __post_init__(self):
        counts = np.array(self.counts, dtype=np.int64)
        if counts.shape != (self.D * self.D,):
            raise DomainError(f"expected {self.D * self.D} counts, got shape {counts.shape}")
        if np.any(counts < 0):
            raise DomainError("counts must be non-negative")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @property
    def total_n(self) -> int:
        return int(self.counts.sum())

    @property
    def n10(self) -> int:
        return int(self.counts[mode_index(1, 0, self.D)])

    @classmethod
    def from_n10(cls, n10: int, total_n: int, D: int = 2) -> "CountsRecord":
        """Record with ``n10`` clicks in mode 10 and the rest in mode 00."""
        if not 0 <= n10 <= total_n:
            raise DomainError("need 0 <= n10 <= total_n")
        counts = np.zeros(D * D, dtype=np.int64)
        counts[0] = total_n - n10
        counts[mode_index(1, 0, D)] = n10
        return cls(counts, D)


def decide(spec, record: CountsRecord, p0: float, gamma: float) -> str:
    if record.n10 > threshold(spec, record.total_n, p0, gamma):
        return H1
    return H0


def log_likelihood_ratio(counts, p_h1, p_h0) -> float:
    """``sum_k N_k ln(p_h1(k) / p_h0(k))``, possibly +-inf."""
    counts = np.asarray(counts)
    p_h1 = np.asarray(p_h1, dtype=float)
    p_h0 = np.asarray(p_h0, dtype=float)
    seen = counts > 0
    both_zero = seen & (p_h0 == 0) & (p_h1 == 0)
    if np.any(both_zero):
        raise ModelInconsistencyError("photons observed in a mode with zero probability under both hypotheses")
    if np.any(seen & (p_h0 == 0)):
        return math.inf
    if np.any(seen & (p_h1 == 0)):
        return -math.inf
    k = seen
    return float(np.sum(counts[k] * (np.log(p_h1[k]) - np.log(p_h0[k]))))


def full_lrt_decide(record: CountsRecord, x_assumed: float, C: CrosstalkMatrix, D: int | None = None) -> str:
    if not x_assumed > 0:
        raise DomainError("x_assumed must be positive")
    D = C.D if D is None else D
    if record.D != D:
        raise DomainError("record and crosstalk matrix use different mode cutoffs")
    llr = log_likelihood_ratio(
        record.counts,
        mode_probabilities(C, x_assumed, D).probabilities,
        mode_probabilities(C, 0.0, D).probabilities,
    )
    return H1 if llr > 0 else H0


# -- error probabilities ------------------------------------------------------

@dataclass(frozen=True)
class ErrorReport:
    alpha: float
    beta: float
    pe: float
    n: int
    method: str
    test: str = ""
    params: str = ""
    priors: tuple[float, float] = field(default=(0.5, 0.5), repr=False)

    def csv_row(self) -> str:
        return ",".join(
            [str(self.n), _fmt(self.alpha), _fmt(self.beta), _fmt(self.pe), self.method, self.test, self.params]
        )


def _check_priors(priors) -> tuple[float, float]:
    h0, h1 = float(priors[0]), float(priors[1])
    if h0 < 0 or h1 < 0 or abs(h0 + h1 - 1.0) > 1e-12:
        raise DomainError("priors must be non-negative and sum to 1")
    return h0, h1


def binomial_cdf(k, n, p):
    """``P(K <= k)`` for ``K ~ Bin(n, p)``, via ``I_{1-p}(n-k, k+1)``."""
    k_arr, n_arr = np.asarray(k), np.asarray(n)
    if np.any(k_arr < 0) or np.any(k_arr > n_arr) or not 0.0 <= p <= 1.0:
        raise DomainError("binomial_cdf needs 0 <= k <= n and p in [0, 1]")
    out = _cdf_clipped(k_arr, n_arr, p)
    return float(out) if np.ndim(out) == 0 else out


def _cdf_clipped(c, n, p):
    """Binomial CDF at ``c``, defined for any integer ``c`` (0 below, 1 above)."""
    c, n = np.broadcast_arrays(np.asarray(c, dtype=float), np.asarray(n, dtype=float))
    out = np.where(c >= n, 1.0, 0.0)
    inside = (c >= 0) & (c < n)
    if np.any(inside):
        ci, ni = c[inside], n[inside]
        if p == 0.0:
            vals = np.ones_like(ci)
        elif p == 1.0:
            vals = np.zeros_like(ci)
        else:
            vals = special.betainc(ni - ci, ci + 1.0, 1.0 - p)
        out = out.astype(float)
        out[inside] = vals
    return out


def _sf_clipped(c, n, p):
    """``P(K > c)``, computed directly so small tails keep their precision."""
    c, n = np.broadcast_arrays(np.asarray(c, dtype=float), np.asarray(n, dtype=float))
    out = np.where(c < 0, 1.0, 0.0)
    inside = (c >= 0) & (c < n)
    if np.any(inside):
        ci, ni = c[inside], n[inside]
        if p == 0.0:
            vals = np.zeros_like(ci)
        elif p == 1.0:
            vals = np.ones_like(ci)
        else:
            vals = special.betainc(ci + 1.0, ni - ci, p)
        out = out.astype(float)
        out[inside] = vals
    return out


def _exact_alpha_beta(spec, n, p0, p_x, gamma):
    n = np.asarray(n, dtype=float)
    c = np.floor(threshold(spec, n, p0, gamma))
    return _sf_clipped(c, n, p0), _cdf_clipped(c, n, p_x)


def _gaussian_alpha_beta(spec, n, p0, p_x, gamma):
    for name, p in (("p0", p0), ("p_x", p_x)):
        if p <= 0.0 or p >= 1.0:
            raise DegenerateError(f"Gaussian approximation needs 0 < {name} < 1, got {p}")
    n = np.asarray(n, dtype=float)
    if np.any(n < 1):
        raise DomainError("Gaussian approximation needs N >= 1")
    tau = threshold(spec, n, p0, gamma)
    alpha = special.ndtr(-(tau - n * p0) / np.sqrt(n * p0 * (1.0 - p0)))
    beta = special.ndtr((tau - n * p_x) / np.sqrt(n * p_x * (1.0 - p_x)))
    return alpha, beta


def _report(spec, n, alpha, beta, priors, method) -> ErrorReport:
    h0, h1 = _check_priors(priors)
    alpha, beta = float(alpha), float(beta)
    return ErrorReport(alpha, beta, h0 * alpha + h1 * beta, int(n), method, rule_label(spec), rule_params(spec), (h0, h1))


def error_probs_exact(spec, n: int, p0: float, p_x: float, gamma: float, priors=(0.5, 0.5)) -> ErrorReport:
    for p in (p0, p_x):
        if not 0.0 <= p <= 1.0:
            raise DomainError("p0 and p_x must be probabilities")
    alpha, beta = _exact_alpha_beta(spec, n, p0, p_x, gamma)
    return _report(spec, n, alpha, beta, priors, "exact_binomial")


def error_probs_gaussian(spec, n: int, p0: float, p_x: float, gamma: float, priors=(0.5, 0.5)) -> ErrorReport:
    alpha, beta = _gaussian_alpha_beta(spec, n, p0, p_x, gamma)
    return _report(spec, n, alpha, beta, priors, "gaussian")


def error_curve(spec, n_values, p0, p_x, gamma, method="exact_binomial", priors=(0.5, 0.5)):
    """Vectorized ``(alpha, beta, pe)`` arrays over a grid of sample sizes."""
    h0, h1 = _check_priors(priors)
    if method == "exact_binomial":
        alpha, beta = _exact_alpha_beta(spec, n_values, p0, p_x, gamma)
    elif method == "gaussian":
        alpha, beta = _gaussian_alpha_beta(spec, n_values, p0, p_x, gamma)
    else:
        raise DomainError(f"unknown method {method!r}")
    alpha, beta = np.atleast_1d(alpha), np.atleast_1d(beta)
    return alpha, beta, h0 * alpha + h1 * beta


# -- large-N behaviour --------------------------------------------------------

LIMIT_TAGS = ("zero", "quarter", "half", "one", "x_dependent", "intermediate")


@dataclass(frozen=True)
class AsymptoticLimit:
    """Limits of alpha, beta and Pe (equal priors) as N grows.

    ``tag`` names the Pe limit; ``x_dependent`` means the outcome hinges on
    the unknown separation (beta and pe are then ``None``).
    """

    tag: str
    alpha: float
    beta: float | None
    pe: float | None


def _excess_power_law(spec, p0, gamma):
    """Write ``tau(N) - N p0`` as ``c N^a``."""
    if isinstance(spec, Original):
        return -p0, 1.0
    if isinstance(spec, NaiveMean):
        return 0.0, 1.0
    if isinstance(spec, ZetaFamily):
        return spec.c, spec.a
    if isinstance(spec, SemiSeparation):
        return 0.5 * gamma * spec.x_min**2, 1.0
    if isinstance(spec, BinaryLRT):
        return _binary_lrt_slope(p0, small_sep_prob(p0, gamma, spec.x)) - p0, 1.0
    raise DomainError(f"{type(spec).__name__} is not a thresholded rule")


def asymptotic_classification(spec, p0: float, gamma: float, x: float | None = None) -> AsymptoticLimit:
    """Where alpha, beta and Pe go as N -> infinity.

    Uses the CLT picture with ``p_x - p0 ~ gamma x^2``. Without ``x`` a rule
    whose threshold grows linearly above ``N p0`` is reported ``x_dependent``.
    """
    c, a = _excess_power_law(spec, p0, gamma)
    if c == 0.0:
        a = 0.0
    if p0 == 0.0:
        alpha = 0.0 if c >= 0 or a < 1 else 1.0
    elif c == 0.0 or a < 0.5:
        alpha = 0.5
    elif a == 0.5:
        alpha = float(special.ndtr(-c / math.sqrt(p0 * (1.0 - p0))))
    else:
        alpha = 0.0 if c > 0 else 1.0

    if x is None:
        if a >= 1.0 and c > 0:
            return AsymptoticLimit("x_dependent", alpha, None, None)
        gap = math.inf
    else:
        gap = gamma * x * x
        if gap <= 0:
            raise DegenerateError("gamma x^2 must be positive to separate the hypotheses")

    if a < 1.0 or c < 0:
        beta = 0.0
    elif a > 1.0:
        beta = 1.0
    elif math.isclose(c, gap, rel_tol=1e-12):
        beta = 0.5
    else:
        beta = 0.0 if c < gap else 1.0

    pe = 0.5 * (alpha + beta)
    tag = {0.0: "zero", 0.25: "quarter", 0.5: "half", 1.0: "one"}.get(pe, "intermediate")
    return AsymptoticLimit(tag, alpha, beta, pe)


# -- experiment planning ------------------------------------------------------

def plan_experiment(
    x_min: float,
    p0: float,
    gamma: float,
    pe_target: float,
    p_x: float | None = None,
    priors=(0.5, 0.5),
    max_n: int = 2**50,
) -> int:
    """Photons needed so the semi-separation-independent rule keeps Pe <= target.

    The Gaussian error curve is bracketed by doubling and bisected, then the
    answer is moved to where the exact binomial Pe crosses the target. Since
    Pe(N, x) <= Pe(N, x_min) for x >= x_min, the result holds for every
    separation at least ``x_min``. ``p_x`` defaults to ``p0 + gamma x_min^2``.
    """
    if not 0.0 < pe_target < 0.5:
        raise DomainError(f"pe_target must lie in (0, 1/2), got {pe_target}")
    if not gamma * x_min * x_min > 0 or gamma <= 0:
        raise DomainError(f"need gamma > 0 and x_min > 0 (gamma={gamma}, x_min={x_min})")
    spec = SemiSeparation(x_min)
    if p_x is None:
        p_x = small_sep_prob(p0, gamma, x_min)

    def exact_pe(n):
        return error_curve(spec, n, p0, p_x, gamma, "exact_binomial", priors)[2]

    if 0.0 < p0 and p_x < 1.0:
        def rough_pe(n):
            return float(error_curve(spec, n, p0, p_x, gamma, "gaussian", priors)[2][0])
    else:
        def rough_pe(n):
            return float(exact_pe(n)[0])

    hi = 1
    while rough_pe(hi) > pe_target:
        hi *= 2
        if hi > max_n:
            raise NumericalFailure(f"no N <= {max_n} reaches Pe <= {pe_target}")
    lo = hi // 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if rough_pe(mid) > pe_target:
            lo = mid
        else:
            hi = mid
    n_req = max(hi, 1)

    chunk = 4096
    if exact_pe(n_req)[0] > pe_target:
        start = n_req + 1
        limit = 4 * n_req + 10 * chunk
        while True:
            ns = np.arange(start, start + chunk)
            ok = np.nonzero(exact_pe(ns) <= pe_target)[0]
            if ok.size:
                n_req = int(ns[ok[0]])
                break
            start += chunk
            if start > limit:
                raise NumericalFailure("exact Pe stays above target far beyond the Gaussian estimate")
    else:
        while n_req > 1:
            ns = np.arange(n_req - 1, max(n_req - 1 - chunk, 0), -1)
            bad = np.nonzero(exact_pe(ns) > pe_target)[0]
            if bad.size:
                n_req = int(ns[bad[0]]) + 1
                break
            n_req = int(ns[-1])

    tail = np.array([2 * n_req, 4 * n_req, 8 * n_req])
    if np.any(exact_pe(tail) > pe_target):
        raise NumericalFailure("exact Pe rises back above target at larger N")
    return n_req
