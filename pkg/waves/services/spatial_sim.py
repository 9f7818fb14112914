"""
Spatial Simulation Service

Direct simulation of

    u_{n+1}^i(x) = sum_y w_i(x - y) P_i[u_{n-tau+1}(y), ..., u_n(y)]

on a uniform mesh with a tau-deep history, front tracking at a fixed
level and least-squares spreading-speed estimates.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from django.conf import settings
from scipy import ndimage, signal

from ..exceptions import SimulationError
from .dispersion import system_minimal_speed
from .kernels import discretize, per_species, tail_radius
from .population import ScalarBirth, SystemModel

logger = logging.getLogger(__name__)

BOUNDARIES = ('zero_pad', 'periodic')
METHODS = ('direct', 'fft')
BOX_SLACK = 1e-12
EDGE_CELLS = 10
MIN_FIT_POINTS = 10
DEFAULT_CELLS = 2 ** 14


@dataclass(eq=False)
class SimState:
    """history has shape (tau, m, N), oldest generation first."""
    x: np.ndarray
    history: np.ndarray
    n: int = 0
    boundary: str = 'zero_pad'

    @property
    def current(self) -> np.ndarray:
        return self.history[-1]

    @property
    def h(self) -> float:
        return float(self.x[1] - self.x[0])


@dataclass
class FrontTrace:
    species: int
    level: float
    generations: List[int] = field(default_factory=list)
    positions: List[float] = field(default_factory=list)
    fitted_speed: float = math.nan
    fit_window: Tuple[int, int] = (0, 0)
    fit_residual: float = math.nan

    def to_dict(self) -> Dict[str, Any]:
        return {
            'species': self.species,
            'level': self.level,
            'fitted_speed': self.fitted_speed,
            'fit_window': list(self.fit_window),
            'fit_residual': self.fit_residual,
            'final_position': self.positions[-1] if self.positions else None,
        }


@dataclass(eq=False)
class SimulationResult:
    state: SimState
    traces: List[FrontTrace]
    cmin: float
    behind_front: np.ndarray
    plateau_band: Optional[Tuple[float, float]]

    @property
    def fitted_speed(self) -> float:
        return self.traces[0].fitted_speed

    def to_dict(self) -> Dict[str, Any]:
        speeds = [t.fitted_speed for t in self.traces]
        return {
            'fitted_speed': self.fitted_speed,
            'fitted_speeds': speeds,
            'cmin': self.cmin,
            'ratio': self.fitted_speed / self.cmin,
            'behind_front': self.behind_front,
            'plateau_band': self.plateau_band,
            'generations': self.state.n,
            'cells': len(self.state.x),
            'h': self.state.h,
            'boundary': self.state.boundary,
            'fronts': [t.to_dict() for t in self.traces],
        }


def _as_model(model) -> SystemModel:
    return model.as_system() if isinstance(model, ScalarBirth) else model


class Simulator:
    """One generation of the spatial recurrence at a fixed mesh spacing."""

    def __init__(self, model, kernels, h: float, boundary: str = 'zero_pad',
                 method: str = 'direct', mass_tol: Optional[float] = None):
        if boundary not in BOUNDARIES:
            raise SimulationError(f"unknown boundary '{boundary}'")
        if method not in METHODS:
            raise SimulationError(f"unknown convolution method '{method}'")
        self.model = _as_model(model)
        self.boundary = boundary
        self.method = method
        self.discrete = [discretize(k, h, mass_tol)
                         for k in per_species(kernels, self.model.m)]

    @property
    def half_count(self) -> int:
        return max(dk.half_count for dk in self.discrete)

    def convolve(self, row: np.ndarray, species: int) -> np.ndarray:
        weights = self.discrete[species].weights
        if self.method == 'direct':
            mode = 'constant' if self.boundary == 'zero_pad' else 'wrap'
            return ndimage.convolve1d(row, weights, mode=mode, cval=0.0)
        if self.boundary == 'zero_pad':
            return signal.fftconvolve(row, weights, mode='same')
        half = len(weights) // 2
        return signal.fftconvolve(np.pad(row, half, mode='wrap'), weights, mode='valid')

    def step(self, state: SimState) -> SimState:
        if len(state.x) <= 2 * self.half_count:
            raise SimulationError("domain too small for the kernel")
        block = np.transpose(state.history, (1, 0, 2))
        births = self.model(block)
        new = np.array([self.convolve(births[i], i) for i in range(self.model.m)])
        history = np.concatenate([state.history[1:], new[None]], axis=0)
        return replace(state, history=history, n=state.n + 1)


def step(state: SimState, model, kernels, method: str = 'direct') -> SimState:
    return Simulator(model, kernels, state.h, state.boundary, method).step(state)


def _rightmost_crossing(x: np.ndarray, row: np.ndarray, level: float) -> Optional[Tuple[int, float]]:
    above = np.flatnonzero(row >= level)
    if len(above) == 0:
        return None
    k = int(above[-1])
    if k == len(row) - 1:
        return k, float(x[k])
    frac = (row[k] - level) / (row[k] - row[k + 1])
    return k, float(x[k] + frac * (x[k + 1] - x[k]))


def fit_speed(trace: FrontTrace, n_steps: int) -> FrontTrace:
    """Least-squares slope of position against generation over the last half."""
    start = n_steps // 2
    gens = np.array(trace.generations)
    pos = np.array(trace.positions)
    keep = gens >= start
    if keep.sum() < MIN_FIT_POINTS:
        raise SimulationError(
            f"species {trace.species + 1}: {int(keep.sum())} front positions in the "
            f"fit window, need at least {MIN_FIT_POINTS}"
        )
    slope, intercept = np.polyfit(gens[keep], pos[keep], 1)
    residual = pos[keep] - (slope * gens[keep] + intercept)
    trace.fitted_speed = float(slope)
    trace.fit_window = (int(gens[keep][0]), int(gens[keep][-1]))
    trace.fit_residual = float(np.sqrt(np.mean(residual ** 2)))
    return trace


def run(initial: SimState, model, kernels, n_steps: int,
        track_level=None, method: str = 'direct',
        simulator: Optional[Simulator] = None) -> Tuple[SimState, List[FrontTrace]]:
    """
    Advance n_steps generations tracking every species' rightmost crossing.

    track_level defaults to E_i / 2 per species; a scalar applies to all.
    The front must stay EDGE_CELLS cells plus the kernel radius away from
    the right end of the grid, and every value must stay in the box.
    """
    model = _as_model(model)
    simulator = simulator or Simulator(model, kernels, initial.h, initial.boundary, method)
    if track_level is None:
        levels = model.steady / 2.0
    else:
        levels = np.broadcast_to(np.asarray(track_level, dtype=float), (model.m,))
    traces = [FrontTrace(species=i, level=float(levels[i])) for i in range(model.m)]
    guard = len(initial.x) - 1 - (simulator.half_count + EDGE_CELLS)
    caps = model.caps[:, None]

    def record(state):
        for trace in traces:
            found = _rightmost_crossing(state.x, state.current[trace.species], trace.level)
            if found is None:
                continue
            k, position = found
            if k >= guard:
                raise SimulationError(
                    f"front reached domain edge at generation {state.n} "
                    f"(species {trace.species + 1}, x={position:.4g})"
                )
            trace.generations.append(state.n)
            trace.positions.append(position)

    state = initial
    record(state)
    for _ in range(n_steps):
        state = simulator.step(state)
        current = state.current
        if np.any(current < -BOX_SLACK) or np.any(current > caps + BOX_SLACK):
            raise SimulationError(f"values left the box [0, M] at generation {state.n}")
        record(state)
        if state.n % 50 == 0:
            logger.debug("generation %d: fronts at %s", state.n,
                         [t.positions[-1] if t.positions else None for t in traces])

    for trace in traces:
        if not trace.positions:
            raise SimulationError(
                f"level never attained: species {trace.species + 1} stays below "
                f"{trace.level:.6g}"
            )
        fit_speed(trace, n_steps)
    logger.info("Simulated %s for %d generations: speeds %s", model.name, n_steps,
                ', '.join(f'{t.fitted_speed:.6g}' for t in traces))
    return state, traces


def behind_front_state(state: SimState, traces, margin: float = 0.0) -> np.ndarray:
    """Average of each species over [x_f/4, x_f/2] behind the species-1 front."""
    trace = traces[0] if isinstance(traces, (list, tuple)) else traces
    x_front = trace.positions[-1]
    if x_front - margin <= state.x[0]:
        raise SimulationError("front has not moved past the margin; window is empty")
    window = (state.x >= x_front / 4.0) & (state.x <= x_front / 2.0)
    if not np.any(window):
        raise SimulationError("behind-front window is empty")
    return state.current[:, window].mean(axis=1)


def make_domain(model, kernels, n_steps: int, support: float = 5.0,
                cells: int = DEFAULT_CELLS, mass_tol: Optional[float] = None) -> np.ndarray:
    """
    Symmetric mesh with room for a front moving at the minimal speed.

    Half-length 1.2 (cmin n + support) + 2 R, R the largest kernel
    truncation radius, which exceeds the required cmin n + R + support.
    """
    model = _as_model(model)
    kernels = per_species(kernels, model.m)
    cmin, _ = system_minimal_speed(model.growth, kernels)
    mass_tol = settings.IDEWAVE_MASS_TOL if mass_tol is None else mass_tol
    radius = max(tail_radius(k, mass_tol) for k in kernels)
    half = 1.2 * (cmin * n_steps + support) + 2.0 * radius
    return np.linspace(-half, half, int(cells))


def seed_state(model, x: np.ndarray, amplitude=None, support: float = 5.0,
               boundary: str = 'zero_pad') -> SimState:
    """Every history generation equal to amplitude_i on |x| < support."""
    model = _as_model(model)
    if amplitude is None:
        amplitude = 0.9 * model.steady
    amplitude = np.broadcast_to(np.asarray(amplitude, dtype=float), (model.m,))
    if np.any(amplitude < 0) or np.any(amplitude > model.caps):
        raise SimulationError("initial amplitude must lie in [0, M]")
    bump = (np.abs(x) < support).astype(float)
    snapshot = amplitude[:, None] * bump[None, :]
    history = np.repeat(snapshot[None], model.tau, axis=0)
    return SimState(x=np.asarray(x, dtype=float), history=history, n=0, boundary=boundary)


def plateau_band(model) -> Optional[Tuple[float, float]]:
    """[v1, v2] for a non-monotone scalar birth without a certifying rectangle."""
    model = _as_model(model)
    birth = model.birth
    if birth is None or not birth.v1 < birth.v2 or model.rectangle_ready:
        return None
    return (birth.v1, birth.v2)


def simulate(model, kernels, n_steps: int = 200, cells: int = DEFAULT_CELLS,
             support: float = 5.0, amplitude=None, track_level=None,
             boundary: str = 'zero_pad', method: str = 'direct') -> SimulationResult:
    """Domain, seed, run and behind-front averages in one call."""
    model = _as_model(model)
    kernels = per_species(kernels, model.m)
    x = make_domain(model, kernels, n_steps, support=support, cells=cells)
    initial = seed_state(model, x, amplitude=amplitude, support=support, boundary=boundary)
    state, traces = run(initial, model, kernels, n_steps, track_level=track_level,
                        method=method)
    cmin, _ = system_minimal_speed(model.growth, kernels)
    return SimulationResult(
        state=state,
        traces=traces,
        cmin=cmin,
        behind_front=behind_front_state(state, traces),
        plateau_band=plateau_band(model),
    )
