"""
Dispersion Relation Service

Characteristic values growth * e^{-lam*c} * M(lam), minimal wave speeds,
characteristic roots and the constants (eta, Q, mu) that the explicit
upper/lower solutions are built from.
"""

import logging
import math
from dataclasses import asdict, dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from ..exceptions import DispersionError
from .kernels import KernelSpec, log_mgf, per_species

logger = logging.getLogger(__name__)

INV_PHI = (math.sqrt(5) - 1) / 2  # 1 / phi
INV_PHI_SQUARE = (3 - math.sqrt(5)) / 2  # 1 / phi^2

# Roots closer than this to the tangency speed are refused.
TANGENCY_GAP = 1e-8
ETA_MARGIN = 1e-6
ETA_HALVINGS = 60
# Beyond this exponent a compact kernel is taken to have no second root.
MAX_ROOT_EXPONENT = 1e6


@dataclass(frozen=True)
class SpeedResult:
    cmin: float
    lambda_star: float


@dataclass(frozen=True)
class DispersionResult:
    """Everything the bounds and profile solvers need at one wave speed."""
    c: float
    lambda1: Tuple[float, ...]
    lambda2: Tuple[float, ...]
    eta: float
    q: float
    mu: float
    cmin: float
    lambda_star: Tuple[float, ...]
    species_cmin: Tuple[float, ...]
    growths: Tuple[float, ...]

    @property
    def m(self) -> int:
        return len(self.lambda1)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['q_or_N'] = data['q']
        return data


@dataclass(frozen=True)
class CharacteristicCurves:
    """Characteristic values of every species on a grid of exponents."""
    c: float
    lambdas: np.ndarray
    values: np.ndarray
    above_one: Tuple[bool, ...]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'c': self.c,
            'lambdas': self.lambdas,
            'values': self.values,
            'min_value': self.values.min(axis=1),
            'above_one': list(self.above_one),
        }


def golden_section(f: Callable[[float], float], a: float, b: float,
                   tol: float = 1e-10) -> Tuple[float, float]:
    """
    Golden-section search for the minimizer of a unimodal f on [a, b].

    Returns (x, f(x)) with the bracket shrunk below tol.
    """
    a, b = min(a, b), max(a, b)
    h = b - a
    c = a + INV_PHI_SQUARE * h
    d = a + INV_PHI * h
    yc, yd = f(c), f(d)

    while h > tol:
        if yc < yd:
            b, d, yd = d, c, yc
            h = INV_PHI * h
            c = a + INV_PHI_SQUARE * h
            yc = f(c)
        else:
            a, c, yc = c, d, yd
            h = INV_PHI * h
            d = a + INV_PHI * h
            yd = f(d)

    x = c if yc < yd else d
    return x, min(yc, yd)


def log_char_value(growth: float, kernel: KernelSpec, lam: float, c: float) -> float:
    return math.log(growth) - lam * c + log_mgf(kernel, lam)


def char_value(growth: float, kernel: KernelSpec, lam: float, c: float) -> float:
    """growth * e^{-lam*c} * M(lam)."""
    if growth <= 0:
        raise DispersionError(f"growth must be positive, got {growth}")
    value = log_char_value(growth, kernel, lam, c)
    return math.exp(value) if value < 709.0 else math.inf


def rate_function(growth: float, kernel: KernelSpec, lam: float) -> float:
    """g(lam) = ln(growth * M(lam)) / lam, the speed of an e^{lam x} tail."""
    return (math.log(growth) + log_mgf(kernel, lam)) / lam


def minimal_speed(growth: float, kernel: KernelSpec) -> SpeedResult:
    """
    Minimum of g(lam) over lam > 0 by golden-section search.

    The bracket starts at [0, 1] and doubles its right end while g keeps
    decreasing there.
    """
    if not growth > 1:
        raise DispersionError("no linear spreading speed (b′(0) ≤ 1)")

    def g(lam):
        return rate_function(growth, kernel, lam)

    hi = 1.0
    while g(2.0 * hi) < g(hi):
        hi *= 2.0
        if hi > MAX_ROOT_EXPONENT:
            raise DispersionError("rate function has no minimizer in range")
    lam_star, cmin = golden_section(g, 1e-9 * hi, 2.0 * hi, tol=1e-10)
    logger.debug("minimal speed: growth=%.6g cmin=%.12g lambda*=%.12g",
                 growth, cmin, lam_star)
    return SpeedResult(cmin=cmin, lambda_star=lam_star)


def system_minimal_speed(growths: Sequence[float],
                         kernels) -> Tuple[float, List[SpeedResult]]:
    """Largest species speed and the per-species results."""
    kernels = per_species(kernels, len(growths))
    speeds = [minimal_speed(g, k) for g, k in zip(growths, kernels)]
    return max(s.cmin for s in speeds), speeds


def char_roots(growth: float, kernel: KernelSpec, c: float,
               speed: Optional[SpeedResult] = None) -> Tuple[float, float]:
    """
    The two positive roots lambda1 < lambda2 of char_value = 1.

    For compactly supported kernels at large c the characteristic value
    stays below one for every lam > lambda1; lambda2 is then +inf.
    """
    speed = speed or minimal_speed(growth, kernel)
    if not c > speed.cmin + TANGENCY_GAP:
        raise DispersionError(
            f"no real roots: c below minimal speed (c={c:.10g}, cmin={speed.cmin:.10g})"
        )

    def h(lam):
        return log_char_value(growth, kernel, lam, c)

    lam_star = speed.lambda_star
    lam1 = optimize.bisect(h, 0.0, lam_star, xtol=1e-12)

    hi = 2.0 * lam_star
    while h(hi) < 0:
        hi *= 2.0
        if hi > MAX_ROOT_EXPONENT:
            logger.debug("no second characteristic root below %.3g at c=%.6g", hi, c)
            return lam1, math.inf
    lam2 = optimize.bisect(h, lam_star, hi, xtol=1e-12)
    return lam1, lam2


def characteristic_curves(growths: Sequence[float], kernels, c: float,
                          lambdas: Optional[np.ndarray] = None) -> CharacteristicCurves:
    """
    Characteristic values of each species over a log grid of exponents.

    Below the minimal speed at least one curve stays above 1; every species
    for which that happens is flagged, no single blocking species is chosen.
    """
    if lambdas is None:
        lambdas = np.geomspace(1e-3, 20.0, 100)
    kernels = per_species(kernels, len(growths))
    values = np.array([
        [char_value(g, k, lam, c) for lam in lambdas]
        for g, k in zip(growths, kernels)
    ])
    above = tuple(bool(np.all(row > 1.0)) for row in values)
    return CharacteristicCurves(c=c, lambdas=np.asarray(lambdas), values=values,
                                above_one=above)


def select_eta(lambda1: Sequence[float], lambda2: Sequence[float],
               growths: Sequence[float], kernels, c: float,
               coupling: Optional[np.ndarray] = None) -> float:
    """
    Deterministic eta in (1, 2).

    Starts at the midpoint of (1, U), U = min(2, lambda2/lambda1) over
    species and, for coupled species pairs (i, l), 1 + lambda1_l/lambda1_i;
    then halves toward 1 until every inequality holds with margin 1e-6 and
    each char_value(eta*lambda1_i) < 1.
    """
    l1 = np.asarray(lambda1, dtype=float)
    l2 = np.asarray(lambda2, dtype=float)
    m = len(l1)
    kernels = per_species(kernels, m)
    if coupling is None:
        coupling = np.zeros((m, m), dtype=bool)

    pairs = [(i, l) for i in range(m) for l in range(m) if i != l and coupling[i, l]]
    upper = min(2.0, float(np.min(l2 / l1)))
    for i, l in pairs:
        upper = min(upper, 1.0 + l1[l] / l1[i])

    def admissible(eta):
        if eta - 1.0 <= ETA_MARGIN or eta >= 2.0 - ETA_MARGIN:
            return False
        for i in range(m):
            if math.isfinite(l2[i]) and eta * l1[i] >= l2[i] - ETA_MARGIN:
                return False
            if char_value(growths[i], kernels[i], eta * l1[i], c) >= 1.0 - ETA_MARGIN:
                return False
        return all(eta * l1[i] < l1[i] + l1[l] - ETA_MARGIN for i, l in pairs)

    eta = 0.5 * (1.0 + upper)
    for _ in range(ETA_HALVINGS):
        if admissible(eta):
            return eta
        eta = 1.0 + 0.5 * (eta - 1.0)
    raise DispersionError("η window numerically empty")


def lower_coeff(model, kernels, lambdas: Sequence[float], eta: float,
                c: float) -> float:
    """
    The lower-solution coefficient (q for scalar maps, N for systems).

    Per species: 1 + sum_k coef_k * char_i(mu_k) / (1 - char_i(eta*lambda_i)),
    where (coef_k, mu_k) are the model's quadratic remainder terms; the
    result is the maximum over species.
    """
    kernels = per_species(kernels, model.m)
    best = 1.0
    for i in range(model.m):
        growth = float(model.growth[i])
        denom = 1.0 - char_value(growth, kernels[i], eta * lambdas[i], c)
        if not denom > 0:
            raise DispersionError(
                "internal error: 1 - char(eta*lambda) is not positive; "
                "eta selection contract violated"
            )
        numerator = sum(
            coef * char_value(growth, kernels[i], mu, c)
            for coef, mu in model.remainder_terms(i, lambdas)
            if coef != 0
        )
        best = max(best, 1.0 + numerator / denom)
    return best


def dispersion_for(model, kernels, c: float) -> DispersionResult:
    """Speeds, roots, eta, Q and mu of a model at wave speed c."""
    kernels = per_species(kernels, model.m)
    growths = [float(g) for g in model.growth]
    cmin, speeds = system_minimal_speed(growths, kernels)

    roots = [char_roots(g, k, c, speed=s) for g, k, s in zip(growths, kernels, speeds)]
    lambda1 = [r[0] for r in roots]
    lambda2 = [r[1] for r in roots]
    eta = select_eta(lambda1, lambda2, growths, kernels, c, coupling=model.coupling)
    q = lower_coeff(model, kernels, lambda1, eta, c)
    mu = min(lambda1) / 2.0

    logger.info(
        "Dispersion for %s at c=%.6g: cmin=%.8g lambda1=%s eta=%.6g Q=%.6g",
        model.name, c, cmin, ', '.join(f'{v:.6g}' for v in lambda1), eta, q,
    )
    return DispersionResult(
        c=float(c),
        lambda1=tuple(lambda1),
        lambda2=tuple(lambda2),
        eta=eta,
        q=q,
        mu=mu,
        cmin=cmin,
        lambda_star=tuple(s.lambda_star for s in speeds),
        species_cmin=tuple(s.cmin for s in speeds),
        growths=tuple(growths),
    )
