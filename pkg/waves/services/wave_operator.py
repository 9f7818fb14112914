"""
Wave Profile Service

Discretization of the traveling-wave operator

    F_i(Phi)(xi) = sum_s w_i(s) P_i[phi(xi - s - tau c), ..., phi(xi - s - c)]

on a uniform mesh shared by profile and kernel, Picard iteration of F
clamped into the band between the lower and upper solutions, and the
weighted residual sup |F(Phi) - Phi| e^{-mu |xi|}.

Off-grid reads use the analytic left tail e^{lambda_i xi} and constant
continuation on the right; shifts by multiples of c use linear
interpolation.
"""

import logging
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from scipy import signal

from ..exceptions import WaveOperatorError
from .bounds import BoundPair, build_bounds
from .dispersion import DispersionResult, char_roots, dispersion_for, system_minimal_speed
from .kernels import discretize, per_species
from .population import ScalarBirth, SystemModel

logger = logging.getLogger(__name__)

# Left end of the default grid: lower and upper agree there to this relative gap.
TAIL_GAP = 1e-7
# Unweighted residual required over xi >= 0 before an iteration counts as converged.
SETTLE_TOL = 1e-9
EXP_CAP = 700.0


@dataclass(frozen=True)
class WaveGrid:
    start: float
    h: float
    count: int

    @property
    def nodes(self) -> np.ndarray:
        return self.start + self.h * np.arange(self.count)

    @property
    def end(self) -> float:
        return self.start + self.h * (self.count - 1)

    def refined(self, factor: int = 2) -> 'WaveGrid':
        return WaveGrid(self.start, self.h / factor, (self.count - 1) * factor + 1)


@dataclass(eq=False)
class WaveProfile:
    grid: WaveGrid
    values: np.ndarray
    c: float
    left_tail: np.ndarray
    left_coeff: np.ndarray
    right_value: np.ndarray

    @property
    def m(self) -> int:
        return self.values.shape[0]

    def with_values(self, values: np.ndarray) -> 'WaveProfile':
        return replace(self, values=values, right_value=values[:, -1].copy())

    def sample(self, points) -> np.ndarray:
        """Values at arbitrary points, (m, len(points))."""
        points = np.asarray(points, dtype=float)
        nodes = self.grid.nodes
        out = np.empty((self.m,) + points.shape)
        left = points < self.grid.start
        for i in range(self.m):
            row = np.interp(points, nodes, self.values[i], right=self.right_value[i])
            tail = self.left_coeff[i] * np.exp(self.left_tail[i] * np.minimum(points, 0.0))
            out[i] = np.where(left, tail, row)
        return out

    def shifted(self, offset: float) -> 'WaveProfile':
        """The profile xi -> phi(xi + offset)."""
        grid = replace(self.grid, start=self.grid.start - offset)
        coeff = self.left_coeff * np.exp(self.left_tail * offset)
        return replace(self, grid=grid, left_coeff=coeff)

    def resampled(self, grid: WaveGrid) -> 'WaveProfile':
        values = self.sample(grid.nodes)
        return replace(self, grid=grid, values=values, right_value=values[:, -1].copy())

    def crossing(self, level: float, species: int = 0) -> float:
        """Leftmost xi where phi_species reaches level (linear interpolation)."""
        row = self.values[species]
        above = np.flatnonzero(row >= level)
        if len(above) == 0:
            raise WaveOperatorError(f"profile never reaches level {level:.6g}")
        k = int(above[0])
        nodes = self.grid.nodes
        if k == 0:
            return float(nodes[0])
        lo, hi = row[k - 1], row[k]
        return float(nodes[k - 1] + (level - lo) / (hi - lo) * self.grid.h)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'c': self.c,
            'grid': asdict(self.grid),
            'left_tail': self.left_tail,
            'left_coeff': self.left_coeff,
            'right_value': self.right_value,
            'min_value': self.values.min(axis=1),
            'max_value': self.values.max(axis=1),
        }


@dataclass
class IterationReport:
    iterations: int
    residual_mu: float
    residual_sup: float
    converged: bool
    tol: float
    mu: float
    settle_tol: float = SETTLE_TOL
    residual_right: float = math.inf
    right_gap: float = math.inf
    max_clamp: float = 0.0
    last_clamp: float = 0.0
    clamp_after_warmup: float = 0.0
    history: List[float] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data.pop('history')
        return data


@dataclass(eq=False)
class ProfileSolution:
    profile: WaveProfile
    report: IterationReport
    disp: DispersionResult
    pair: BoundPair


@dataclass(eq=False)
class NearCriticalResult:
    profiles: List[WaveProfile]
    speeds: List[float]
    lambda1: List[float]
    drifts: List[float]
    reports: List[IterationReport]
    level: float
    converged: bool

    @property
    def profile(self) -> WaveProfile:
        return self.profiles[-1]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'speeds': self.speeds,
            'lambda1': self.lambda1,
            'drifts': self.drifts,
            'level': self.level,
            'converged': self.converged,
            'reports': [r.to_dict() for r in self.reports],
        }


def _as_model(model) -> SystemModel:
    return model.as_system() if isinstance(model, ScalarBirth) else model


class WaveOperator:
    """
    F on a fixed grid, with kernel weights precomputed at the grid spacing.

    The part of the convolution fed by xi < 0 runs in tilted coordinates
    g e^{-lambda_i xi}, so round-off stays relative to the exponentially
    small values of the left tail.
    """

    def __init__(self, model: SystemModel, kernels, c: float, grid: WaveGrid,
                 mass_tol: Optional[float] = None):
        self.model = _as_model(model)
        self.c = float(c)
        self.grid = grid
        kernels = per_species(kernels, self.model.m)
        discrete = [discretize(k, grid.h, mass_tol) for k in kernels]

        radius = max(dk.radius for dk in discrete)
        reach = radius + self.model.tau * self.c
        if grid.end - grid.start <= 2.0 * reach:
            raise WaveOperatorError(
                f"domain too small: grid length {grid.end - grid.start:.4g} "
                f"must exceed 2*(kernel radius + tau*c) = {2.0 * reach:.4g}"
            )

        half = max(dk.half_count for dk in discrete)
        self.weights = [np.pad(dk.weights, half - dk.half_count) for dk in discrete]
        self.zeta = grid.start - self.c - half * grid.h + grid.h * np.arange(grid.count + 2 * half)
        self.split = int(np.searchsorted(self.zeta, 0.0))
        self.offsets = grid.h * np.arange(2 * half + 1)
        tau = self.model.tau
        self.slot_points = [self.zeta - (tau - 1 - j) * self.c for j in range(tau)]

    def convolve(self, row: np.ndarray, species: int, tilt: float = 0.0) -> np.ndarray:
        """Valid-mode convolution of row with the weights of one species."""
        weights = self.weights[species]
        n = len(weights) - 1
        count = self.grid.count
        p = self.split
        out = np.zeros(count)
        if p > 0:
            # nodes past the cap carry underflowed values
            left = row[:p] * np.exp(np.minimum(-tilt * self.zeta[:p], EXP_CAP))
            full = signal.convolve(left, weights * np.exp(-tilt * self.offsets))
            k = min(p, count)
            out[:k] = full[n:n + k] * np.exp(tilt * self.zeta[n:n + k])
        if p < len(row):
            full = signal.convolve(row[p:], weights)
            lo = max(p - n, 0)
            out[lo:] += full[lo + n - p:count + n - p]
        return out

    def apply_values(self, profile: WaveProfile) -> np.ndarray:
        block = np.stack([profile.sample(points) for points in self.slot_points], axis=1)
        g = self.model(block)
        return np.array([
            self.convolve(g[i], i, tilt=float(profile.left_tail[i]))
            for i in range(self.model.m)
        ])

    def apply(self, profile: WaveProfile) -> WaveProfile:
        return profile.with_values(self.apply_values(profile))


def _weights(grid: WaveGrid, mu: float) -> np.ndarray:
    return np.exp(-mu * np.abs(grid.nodes))


def apply_F(profile: WaveProfile, model, kernels, disp: DispersionResult) -> WaveProfile:
    """One application of the wave operator at the profile's grid."""
    return WaveOperator(model, kernels, disp.c, profile.grid).apply(profile)


def residual_mu(profile: WaveProfile, model, kernels, disp: DispersionResult,
                mu: Optional[float] = None) -> float:
    """sup over the grid of max_i |F_i(Phi) - phi_i| e^{-mu |xi|}."""
    mu = disp.mu if mu is None else mu
    image = WaveOperator(model, kernels, disp.c, profile.grid).apply_values(profile)
    diff = np.max(np.abs(image - profile.values), axis=0)
    return float(np.max(diff * _weights(profile.grid, mu)))


def refinement_residual(profile: WaveProfile, model, kernels, disp: DispersionResult,
                        factor: int = 2) -> float:
    """Weighted residual of the profile, interpolated onto a grid factor times finer."""
    fine = profile.resampled(profile.grid.refined(factor))
    return residual_mu(fine, model, kernels, disp)


def default_grid(pair: BoundPair, disp: DispersionResult, kernels,
                 span: Optional[float] = None, h: Optional[float] = None) -> WaveGrid:
    """
    Grid starting where lower and upper agree to TAIL_GAP relative.

    h defaults to min(0.02/lambda2, scale/10), floored at scale/400; the
    span defaults to at least 80/lambda1 and always reaches 40/lambda1.
    """
    kernels = per_species(kernels, pair.m)
    lam_min = float(pair.lambdas.min())
    scale = min(k.scale for k in kernels)
    if h is None:
        finite = [l2 for l2 in disp.lambda2 if math.isfinite(l2)]
        h = scale / 10.0
        if finite:
            h = min(h, 0.02 / max(finite))
        h = max(h, scale / 400.0)
    start = float(np.min(
        pair.xi0 - math.log(1.0 / TAIL_GAP) / ((pair.eta - 1.0) * pair.lambdas)
    ))
    if span is None:
        span = max(80.0 / lam_min, 40.0 / lam_min - start)
    if start + span < 10.0 / lam_min:
        raise WaveOperatorError(
            f"domain too small: grid ends at {start + span:.4g}, before the front settles"
        )
    count = int(math.ceil(span / h)) + 1
    return WaveGrid(start=start, h=float(h), count=count)


def profile_from_bounds(pair: BoundPair, grid: WaveGrid, c: float,
                        which: str = 'lower') -> WaveProfile:
    if which not in ('lower', 'upper'):
        raise WaveOperatorError(f"start must be 'lower' or 'upper', got '{which}'")
    values = pair.lower(grid.nodes) if which == 'lower' else pair.upper(grid.nodes)
    return WaveProfile(
        grid=grid,
        values=values,
        c=float(c),
        left_tail=pair.lambdas.copy(),
        left_coeff=np.ones(pair.m),
        right_value=values[:, -1].copy(),
    )


def iterate(start: WaveProfile, pair: BoundPair, model, kernels,
            disp: DispersionResult, tol: float = 1e-10, max_iter: int = 10_000,
            warmup: int = 100, log_every: int = 500,
            settle_tol: float = SETTLE_TOL):
    """
    Picard iteration of F clamped into [lower, upper].

    Stops when the weighted residual of the current iterate drops below
    tol and the unweighted residual over xi >= 0 drops below
    max(settle_tol, tol); the weight alone hides an unsettled plateau far
    to the right. Returns that iterate and its report. Hitting max_iter is
    reported with converged=False.
    """
    model = _as_model(model)
    operator = WaveOperator(model, kernels, disp.c, start.grid)
    nodes = start.grid.nodes
    lower, upper = pair.lower(nodes), pair.upper(nodes)
    weight = _weights(start.grid, disp.mu)
    right = nodes >= min(0.0, float(nodes[-1]))
    settle_tol = max(settle_tol, tol)

    outside = max(float(np.max(lower - start.values)), float(np.max(start.values - upper)))
    if outside > 1e-12:
        logger.warning("Start profile leaves the band by %.3g; clamping", outside)
    profile = start.with_values(np.clip(start.values, lower, upper))

    report = IterationReport(iterations=0, residual_mu=math.inf, residual_sup=math.inf,
                             converged=False, tol=tol, mu=disp.mu, settle_tol=settle_tol)
    for iteration in range(1, max_iter + 1):
        image = operator.apply_values(profile)
        diff = np.max(np.abs(image - profile.values), axis=0)
        report.iterations = iteration
        report.residual_sup = float(diff.max())
        report.residual_mu = float(np.max(diff * weight))
        report.residual_right = float(diff[right].max())
        report.history.append(report.residual_mu)
        if report.residual_mu < tol and report.residual_right < settle_tol:
            report.converged = True
            break

        clamped = np.clip(image, lower, upper)
        clamp = float(np.max(np.abs(clamped - image)))
        report.last_clamp = clamp
        report.max_clamp = max(report.max_clamp, clamp)
        if iteration > warmup:
            report.clamp_after_warmup = max(report.clamp_after_warmup, clamp)
        profile = profile.with_values(clamped)

        if log_every and iteration % log_every == 0:
            logger.debug("iteration %d: residual_mu=%.3e right=%.3e clamp=%.3e",
                         iteration, report.residual_mu, report.residual_right, clamp)

    report.right_gap = float(np.max(np.abs(profile.right_value - model.steady)))
    if report.converged:
        logger.info("Profile at c=%.6g converged in %d iterations (residual %.3e, "
                    "right end %.3e from E)", disp.c, report.iterations,
                    report.residual_mu, report.right_gap)
    else:
        logger.warning("Profile at c=%.6g did not converge in %d iterations "
                       "(residual %.3e, right block %.3e)", disp.c, max_iter,
                       report.residual_mu, report.residual_right)
    return profile, report


def solve_profile(model, kernels, c: float, tol: float = 1e-10,
                  max_iter: int = 10_000, h: Optional[float] = None,
                  span: Optional[float] = None, grid: Optional[WaveGrid] = None,
                  start: str = 'lower',
                  settle_tol: float = SETTLE_TOL) -> ProfileSolution:
    """Dispersion, bounds, grid and iteration in one call."""
    model = _as_model(model)
    kernels = per_species(kernels, model.m)
    disp = dispersion_for(model, kernels, c)
    pair = build_bounds(model, disp)
    grid = grid or default_grid(pair, disp, kernels, span=span, h=h)
    initial = profile_from_bounds(pair, grid, c, which=start)
    profile, report = iterate(initial, pair, model, kernels, disp, tol=tol,
                              max_iter=max_iter, settle_tol=settle_tol)
    return ProfileSolution(profile=profile, report=report, disp=disp, pair=pair)


def positivity_report(profile: WaveProfile, caps) -> Dict[str, Any]:
    """Whether every profile value lies in (0, cap] and the left-tail ratios."""
    caps = np.asarray(caps, dtype=float).reshape(profile.m, 1)
    nodes = profile.grid.nodes[:5]
    ratios = profile.values[:, :5] * np.exp(-np.outer(profile.left_tail, nodes))
    return {
        'positive': bool(np.all(profile.values > 0)),
        'bounded': bool(np.all(profile.values <= caps + 1e-12)),
        'min_value': profile.values.min(axis=1),
        'right_value': profile.right_value,
        'left_tail_ratio': ratios,
    }


def _normalization_level(model: SystemModel) -> float:
    if model.birth is not None:
        return model.birth.v1 / 2.0
    return float(model.steady[0]) / 2.0


def near_critical_profile(model, kernels, eps_sequence: Sequence[float] = (0.5, 0.25, 0.1),
                          tol: float = 1e-10, max_iter: int = 10_000,
                          h: Optional[float] = None) -> NearCriticalResult:
    """
    Profiles at c = cmin + eps for a decreasing eps sequence.

    Each profile is shifted so that phi_1(0) equals v1/2 (scalar births) or
    E_1/2 (systems). Drifts are sup distances between successive shifted
    profiles over their common grid range. Stops at the first profile that
    fails to converge.
    """
    eps_sequence = [float(e) for e in eps_sequence]
    if not eps_sequence or any(e <= 0 for e in eps_sequence):
        raise WaveOperatorError("eps sequence must be positive")
    if any(b >= a for a, b in zip(eps_sequence, eps_sequence[1:])):
        raise WaveOperatorError("eps sequence must be strictly decreasing")

    model = _as_model(model)
    kernels = per_species(kernels, model.m)
    cmin, _ = system_minimal_speed(model.growth, kernels)
    level = _normalization_level(model)

    result = NearCriticalResult(profiles=[], speeds=[], lambda1=[], drifts=[],
                                reports=[], level=level, converged=True)
    for eps in eps_sequence:
        c = cmin + eps
        solution = solve_profile(model, kernels, c, tol=tol, max_iter=max_iter, h=h)
        result.reports.append(solution.report)
        result.speeds.append(c)
        result.lambda1.append(min(solution.disp.lambda1))
        if not solution.report.converged:
            result.converged = False
            logger.warning("near-critical sequence stopped at eps=%.4g", eps)
            break
        centred = solution.profile.shifted(solution.profile.crossing(level))
        if result.profiles:
            previous = result.profiles[-1]
            lo = max(previous.grid.start, centred.grid.start)
            hi = min(previous.grid.end, centred.grid.end)
            points = np.linspace(lo, hi, 2001)
            drift = float(np.max(np.abs(previous.sample(points) - centred.sample(points))))
            result.drifts.append(drift)
        result.profiles.append(centred)
    return result


def lambda1_scan(growth: float, kernel, cmin: float,
                 eps_values: Sequence[float]) -> List[float]:
    """lambda1 at c = cmin + eps for each eps."""
    return [char_roots(growth, kernel, cmin + eps)[0] for eps in eps_values]
