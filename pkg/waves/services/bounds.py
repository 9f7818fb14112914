"""
Upper/Lower Solution Service

Closed-form upper solutions min{e^{lambda_i xi}, cap_i} and lower
solutions max{e^{lambda_i xi} - Q e^{eta lambda_i xi}, 0}, and a numerical
check of the inequalities they must satisfy under the wave operator.

The check substitutes, slot by slot, the end of [lower, upper] that
pushes P_i up (upper inequality) or down (lower inequality). For maps
that are monotone in every slot this is exact. A sampled mode that draws
random profiles between the bounds is kept for debugging and is labelled
non-certifying.
"""

import logging
import math
from dataclasses import asdict, dataclass, replace
from typing import Any, Dict, Optional

import numpy as np
from django.conf import settings
from scipy import signal

from ..exceptions import BoundsError, ModelError
from .dispersion import DispersionResult, char_value
from .kernels import discretize, per_species
from .population import ScalarBirth, SystemModel

logger = logging.getLogger(__name__)

VIOLATION_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class BoundPair:
    lambdas: np.ndarray
    eta: float
    Q: float
    caps: np.ndarray

    @property
    def m(self) -> int:
        return len(self.lambdas)

    @property
    def xi0(self) -> np.ndarray:
        """Where each lower solution reaches zero."""
        return -math.log(self.Q) / ((self.eta - 1.0) * self.lambdas)

    def upper(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        z = np.multiply.outer(self.lambdas, xi)
        caps = self.caps.reshape((self.m,) + (1,) * xi.ndim)
        return np.minimum(np.exp(np.minimum(z, np.log(caps) + 1.0)), caps)

    def lower(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        z = np.multiply.outer(self.lambdas, xi)
        factor = 1.0 - np.exp(np.minimum((self.eta - 1.0) * z + math.log(self.Q), 50.0))
        value = np.exp(np.minimum(z, 0.0)) * factor
        xi0 = self.xi0.reshape((self.m,) + (1,) * xi.ndim)
        return np.where((xi < xi0) & (factor > 0), value, 0.0)

    def with_q(self, q: float) -> 'BoundPair':
        return replace(self, Q=float(q))

    def to_dict(self) -> Dict[str, Any]:
        return {'lambdas': self.lambdas, 'eta': self.eta, 'Q': self.Q,
                'caps': self.caps, 'xi0': self.xi0}


@dataclass
class BoundsReport:
    max_violation_upper: float
    max_violation_lower: float
    max_violation_lower_direct: float
    max_violation_certificate: float
    xi_worst_upper: float
    xi_worst_lower: float
    passed: bool
    mode: str
    certifying: bool
    tol: float
    grid_start: float
    grid_end: float
    h: float
    n_points: int

    @property
    def xi_worst(self) -> float:
        if self.max_violation_upper >= self.max_violation_lower:
            return self.xi_worst_upper
        return self.xi_worst_lower

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['xi_worst'] = self.xi_worst
        data['pass'] = self.passed
        return data


def _as_model(model) -> SystemModel:
    return model.as_system() if isinstance(model, ScalarBirth) else model


def build_bounds(model, disp: DispersionResult) -> BoundPair:
    """Upper/lower pair at the wave speed of disp."""
    model = _as_model(model)
    if not disp.c > disp.cmin:
        raise BoundsError(f"c={disp.c} must exceed the minimal speed {disp.cmin}")
    if len(disp.lambda1) != model.m:
        raise BoundsError("dispersion result does not match the model's species count")
    return BoundPair(
        lambdas=np.array(disp.lambda1, dtype=float),
        eta=disp.eta,
        Q=disp.q,
        caps=np.array(model.bound_caps, dtype=float),
    )


def _slot_values(pair: BoundPair, points: np.ndarray, tau: int, c: float,
                 which: str) -> np.ndarray:
    """(m, tau, len) block of bound values; slot j sits (tau-1-j)*c behind."""
    evaluate = pair.upper if which == 'upper' else pair.lower
    return np.stack([evaluate(points - (tau - 1 - j) * c) for j in range(tau)], axis=1)


def _certificate(pair: BoundPair, model: SystemModel, kernels, c: float,
                 xi: np.ndarray) -> np.ndarray:
    """
    Linearized inequality behind the lower solution, per species and node:

        sum_k coef_k char_i(mu_k) e^{mu_k xi} - Q (1 - char_i(eta lambda_i)) e^{eta lambda_i xi}

    where the lower solution is positive; positive entries are breaches.
    """
    out = np.full((model.m, len(xi)), -np.inf)
    lambdas = list(pair.lambdas)
    for i in range(model.m):
        growth = float(model.growth[i])
        active = xi < pair.xi0[i]
        x = xi[active]
        lam = pair.lambdas[i]
        rhs = pair.Q * (1.0 - char_value(growth, kernels[i], pair.eta * lam, c)) \
            * np.exp(pair.eta * lam * x)
        lhs = np.zeros_like(x)
        for coef, mu in model.remainder_terms(i, lambdas):
            if coef:
                lhs += coef * char_value(growth, kernels[i], mu, c) * np.exp(mu * x)
        out[i, active] = (lhs - rhs) / (1.0 + np.abs(rhs))
    return out


def verify_bounds(pair: BoundPair, model, kernels, c: float,
                  h: Optional[float] = None, mass_tol: Optional[float] = None,
                  mode: str = 'extremal', n_samples: int = 200,
                  seed: Optional[int] = None) -> BoundsReport:
    """
    Check upper >= F(psi) >= lower for psi between the bounds.

    The xi grid covers [min xi0 - 20/lambda, 40/lambda] with spacing h; the
    right-hand sides are discrete convolutions against the kernels'
    weights on the same mesh, with the bounds evaluated exactly at the
    shifted nodes.
    """
    model = _as_model(model)
    kernels = per_species(kernels, model.m)
    if mode not in ('extremal', 'sampled'):
        raise BoundsError(f"unknown verification mode '{mode}'")

    lam_min = float(pair.lambdas.min())
    if h is None:
        scale = min(k.scale for k in kernels)
        h = min(scale / 20.0, 0.05 / float(pair.lambdas.max()))
    start = float(pair.xi0.min()) - 20.0 / lam_min
    end = 40.0 / lam_min
    n = int(math.ceil((end - start) / h)) + 1
    xi = start + h * np.arange(n)

    discrete = [discretize(k, h, mass_tol) for k in kernels]
    half = max(dk.half_count for dk in discrete)
    weights = [np.pad(dk.weights, half - dk.half_count) for dk in discrete]
    zeta = xi[0] - c - half * h + h * np.arange(n + 2 * half)

    def convolve_rows(values):
        return np.array([signal.convolve(values[i], weights[i], mode='valid')
                         for i in range(model.m)])

    upper_xi, lower_xi = pair.upper(xi), pair.lower(xi)

    if mode == 'extremal':
        lo_block = _slot_values(pair, zeta, model.tau, c, 'lower')
        hi_block = _slot_values(pair, zeta, model.tau, c, 'upper')
        try:
            pmin, pmax = model.extremes(lo_block, hi_block)
        except ModelError as exc:
            raise BoundsError(str(exc))
        rhs_upper, rhs_lower = convolve_rows(pmax), convolve_rows(pmin)
        upper_gap = (rhs_upper - upper_xi) / (1.0 + np.abs(rhs_upper))
        lower_gap = (lower_xi - rhs_lower) / (1.0 + np.abs(rhs_lower))
    else:
        logger.warning("Sampled bound verification is not a certificate")
        rng = np.random.default_rng(settings.IDEWAVE_SEED if seed is None else seed)
        knots = np.linspace(zeta[0] - model.tau * c, zeta[-1], 64)
        upper_gap = np.full((model.m, n), -np.inf)
        lower_gap = np.full((model.m, n), -np.inf)
        for _ in range(n_samples):
            theta = rng.random((model.m, len(knots)))
            block = np.empty((model.m, model.tau, len(zeta)))
            for j in range(model.tau):
                points = zeta - (model.tau - 1 - j) * c
                mix = np.array([np.interp(points, knots, theta[l]) for l in range(model.m)])
                lo, hi = pair.lower(points), pair.upper(points)
                block[:, j] = lo + mix * (hi - lo)
            rhs = convolve_rows(model(block))
            upper_gap = np.maximum(upper_gap, (rhs - upper_xi) / (1.0 + np.abs(rhs)))
            lower_gap = np.maximum(lower_gap, (lower_xi - rhs) / (1.0 + np.abs(rhs)))

    certificate = _certificate(pair, model, kernels, c, xi)

    def worst(gap):
        flat = np.max(gap, axis=0)
        index = int(np.argmax(flat))
        return max(0.0, float(flat[index])), float(xi[index])

    upper_violation, xi_upper = worst(upper_gap)
    direct_violation, xi_direct = worst(lower_gap)
    cert_violation, xi_cert = worst(certificate)
    if cert_violation > direct_violation:
        lower_violation, xi_lower = cert_violation, xi_cert
    else:
        lower_violation, xi_lower = direct_violation, xi_direct

    passed = upper_violation <= VIOLATION_TOL and lower_violation <= VIOLATION_TOL
    report = BoundsReport(
        max_violation_upper=upper_violation,
        max_violation_lower=lower_violation,
        max_violation_lower_direct=direct_violation,
        max_violation_certificate=cert_violation,
        xi_worst_upper=xi_upper,
        xi_worst_lower=xi_lower,
        passed=passed,
        mode=mode,
        certifying=(mode == 'extremal'),
        tol=VIOLATION_TOL,
        grid_start=float(xi[0]),
        grid_end=float(xi[-1]),
        h=float(h),
        n_points=n,
    )
    log = logger.info if passed else logger.warning
    log("Bounds for %s at c=%.6g (Q=%.6g): upper %.3g, lower %.3g -> %s",
        model.name, c, pair.Q, upper_violation, lower_violation,
        'pass' if passed else 'FAIL')
    return report
