"""
Contracting Rectangle Service

Nested families of boxes [R(s), T(s)], s in [0, 1], shrinking to the
coexistence state E, that the recurrence maps strictly into themselves:

    r_i(s) < P_i[state] < t_i(s)   for every state in the slice at s in (0, 1).

A verified rectangle certifies that the non-spatial recurrence started
inside a slice converges to E. This module builds the rectangles of the
logistic map and of the competitive family, checks their shape and the
strict inclusion, iterates the recurrence and checks profile tails.
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from django.conf import settings

from ..exceptions import RectangleError
from .parallel import thread_map
from .population import CompetitionSystem, ScalarSystem, SystemModel, logistic_b, slot_signs

logger = logging.getLogger(__name__)

MARGIN_REL = 1e-12
SLICE_SLACK = 1e-12
SHAPE_SAMPLES = 1000
SAMPLED_POINTS = 10_000
MAX_CORNER_DIM = 16
LEVEL_BISECTIONS = 50


@dataclass(eq=False)
class Rectangle:
    """r and t map s in [0, 1] to m-vectors."""
    name: str
    r: Callable[[float], np.ndarray]
    t: Callable[[float], np.ndarray]
    steady: np.ndarray
    caps: np.ndarray
    tau: int
    eps: Optional[float] = None

    @property
    def m(self) -> int:
        return len(self.steady)

    def bounds(self, s: float) -> Tuple[np.ndarray, np.ndarray]:
        return (np.asarray(self.r(s), dtype=float).reshape(self.m),
                np.asarray(self.t(s), dtype=float).reshape(self.m))

    def slice(self, s: float) -> Tuple[np.ndarray, np.ndarray]:
        """(lo, hi) state blocks of shape (m, tau) bounding the slice at s."""
        lo, hi = self.bounds(s)
        return (np.repeat(lo[:, None], self.tau, axis=1),
                np.repeat(hi[:, None], self.tau, axis=1))

    def contains(self, s: float, block, slack: float = SLICE_SLACK) -> bool:
        lo, hi = self.slice(s)
        block = np.asarray(block, dtype=float).reshape(lo.shape)
        return bool(np.all(block >= lo - slack) and np.all(block <= hi + slack))

    def to_dict(self) -> Dict[str, Any]:
        r0, t0 = self.bounds(0.0)
        return {'name': self.name, 'eps': self.eps, 'steady': self.steady,
                'r0': r0, 't0': t0, 'tau': self.tau}


@dataclass
class RectangleReport:
    name: str
    passed: bool
    certifying: bool
    mode: str
    n_s: int
    n_box: int
    n_corners: int
    min_margin_lower: float
    min_margin_upper: float
    worst_s: float
    witness: Optional[Dict[str, Any]] = None

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['pass'] = self.passed
        return data


@dataclass
class Trajectory:
    states: np.ndarray
    levels: List[float]
    start_level: Optional[float]
    distance: float
    converged: bool
    steps: int
    steps_to_tol: Optional[int]
    certified: bool

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'final': self.final,
            'start_level': self.start_level,
            'min_level': min(self.levels) if self.levels else None,
            'max_level': max(self.levels) if self.levels else None,
            'distance': self.distance,
            'converged': self.converged,
            'steps': self.steps,
            'steps_to_tol': self.steps_to_tol,
            'certified': self.certified,
        }


@dataclass
class ConvergenceSummary:
    n_histories: int
    n_converged: int
    s0: float
    tol: float
    max_distance: float
    max_steps_to_tol: Optional[int]
    certified: bool
    trajectories: List[Trajectory] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.n_converged == self.n_histories

    def to_dict(self) -> Dict[str, Any]:
        return {
            'n_histories': self.n_histories,
            'n_converged': self.n_converged,
            's0': self.s0,
            'tol': self.tol,
            'max_distance': self.max_distance,
            'max_steps_to_tol': self.max_steps_to_tol,
            'certified': self.certified,
            'pass': self.passed,
        }


# ---------------------------------------------------------------------------
# Construction

def logistic_rectangle(eps: float = 0.1) -> Rectangle:
    """
    r(s) = 9/16 + 5s/48, t(s) = b(r(s)) + eps (b(b(r(s))) - r(s)) for
    b(v) = 3v(1 - v); E = 2/3.
    """
    eps = float(eps)

    def r(s):
        return np.array([9.0 / 16.0 + 5.0 * s / 48.0])

    def t(s):
        v = r(s)
        bv = logistic_b(v)
        return bv + eps * (logistic_b(bv) - v)

    s = np.linspace(0.0, 1.0, SHAPE_SAMPLES + 1)[:-1]
    values = np.array([t(x)[0] for x in s])
    if np.any(values <= 2.0 / 3.0) or np.any(values >= 0.75):
        raise RectangleError(
            f"t(s) exits (2/3,3/4): max t = {values.max():.6g} for eps={eps}"
        )
    if not 0 < eps < 0.5:
        raise RectangleError(f"eps must lie in (0, 1/2), got {eps}")

    return Rectangle(name='logistic', r=r, t=t, steady=np.array([2.0 / 3.0]),
                     caps=np.array([0.75]), tau=1, eps=eps)


def max_competition_eps(model: CompetitionSystem) -> float:
    """Supremum of eps with pressure_i (1 + eps) < 1 for every species."""
    worst = float(model.pressure.max())
    return math.inf if worst <= 0 else 1.0 / worst - 1.0


def competition_rectangle(model: SystemModel, eps: Optional[float] = None) -> Rectangle:
    """
    r_i(s) = s E_i, t_i(s) = s E_i + (1 + eps)(1 - s).

    Needs pressure_i = sum_j e_j^i + sum f^i < 1 and pressure_i (1 + eps) < 1.
    eps defaults to half the admissible maximum (capped at 1).
    """
    if not isinstance(model, CompetitionSystem) or not model.rectangle_ready:
        raise RectangleError("no contracting rectangle available for these coefficients")
    limit = max_competition_eps(model)
    if eps is None:
        eps = min(0.5 * limit, 1.0)
    eps = float(eps)
    if not 0 < eps < limit:
        raise RectangleError(
            f"eps={eps} outside the admissible range (0, {limit:.6g}) for these coefficients"
        )
    steady = model.steady.copy()

    def r(s):
        return s * steady

    def t(s):
        return s * steady + (1.0 + eps) * (1.0 - s)

    return Rectangle(name=f'{model.name}_rectangle', r=r, t=t, steady=steady,
                     caps=model.caps.copy(), tau=model.tau, eps=eps)


def rectangle_for(model: SystemModel, eps: Optional[float] = None) -> Rectangle:
    if isinstance(model, ScalarSystem):
        if not model.rectangle_ready:
            raise RectangleError("no contracting rectangle available for these coefficients")
        return logistic_rectangle(0.1 if eps is None else eps)
    return competition_rectangle(model, eps)


# ---------------------------------------------------------------------------
# Checks

def _rng(seed):
    return np.random.default_rng(settings.IDEWAVE_SEED if seed is None else seed)


def check_rectangle_shape(rect: Rectangle, model: SystemModel,
                          n: int = SHAPE_SAMPLES, seed=None) -> Dict[str, Any]:
    """
    Continuity, strict monotonicity in s and the endpoint ordering
    0 <= R(0) < R(1) = E = T(1) < T(0) <= M. T(0) above the caps is
    accepted when the box [0, T(0)] is mapped into itself.
    """
    s = np.linspace(0.0, 1.0, n)
    R = np.array([rect.bounds(x)[0] for x in s])
    T = np.array([rect.bounds(x)[1] for x in s])

    fine = np.linspace(0.0, 1.0, 2 * n - 1)
    for name, coarse, fn in (('r', R, rect.r), ('t', T, rect.t)):
        values = np.array([np.asarray(fn(x), dtype=float).reshape(rect.m) for x in fine])
        bound = np.max(np.abs(np.diff(coarse, axis=0))) / (s[1] - s[0])
        jump = np.max(np.abs(np.diff(values, axis=0)))
        if jump > 1.5 * bound * (fine[1] - fine[0]) + 1e-12:
            raise RectangleError(f"(C1) violated: {name}(s) jumps by {jump:.3g}")

    if np.any(np.diff(R, axis=0) <= 0) or np.any(np.diff(T, axis=0) >= 0):
        raise RectangleError("(C2) violated: r must increase and t decrease strictly in s")

    steady = rect.steady
    if np.any(R[0] < 0) or np.any(R[0] >= R[-1]):
        raise RectangleError("(C3) violated: need 0 <= R(0) < R(1)")
    if np.max(np.abs(R[-1] - steady)) > 1e-12 or np.max(np.abs(T[-1] - steady)) > 1e-12:
        raise RectangleError("(C3) violated: R(1) and T(1) must equal E")
    if np.any(T[-1] >= T[0]):
        raise RectangleError("(C3) violated: need T(1) < T(0)")

    box_invariant = None
    if np.any(T[0] > model.caps + SLICE_SLACK):
        rng = _rng(seed)
        states = rng.random((model.m, model.tau, SAMPLED_POINTS)) * T[0][:, None, None]
        image = model(states)
        box_invariant = bool(np.all(image >= -SLICE_SLACK)
                             and np.all(image <= T[0][:, None] + SLICE_SLACK))
        if not box_invariant:
            raise RectangleError("(C3) violated: T(0) exceeds M and [0, T(0)] is not invariant")

    return {'c1': True, 'c2': True, 'c3': True, 'box_invariant': box_invariant}


def _certified_signs(model: SystemModel, lo: np.ndarray,
                     hi: np.ndarray, seed=None) -> Tuple[Optional[np.ndarray], bool]:
    """Slot signs on the box and whether they come from the model's structure."""
    if model.slot_pattern is not None:
        return model.slot_pattern, True
    if isinstance(model, ScalarSystem):
        inside = [p for p in model.birth.critical_points if lo.min() < p < hi.max()]
        if not inside:
            sign = np.sign(float(model.birth.b(hi.max())) - float(model.birth.b(lo.min())))
            return np.full((1, 1, 1), sign), True
    signs = slot_signs(model, lo, hi, seed=seed)
    return (None if np.any(np.isnan(signs)) else signs), False


def _corners(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    m, tau = lo.shape
    n = m * tau
    choose = (np.arange(2 ** n)[:, None] >> np.arange(n)) & 1
    choose = choose.T.reshape(m, tau, 2 ** n).astype(float)
    return lo[..., None] + choose * (hi - lo)[..., None]


def verify_rectangle(model: SystemModel, rect: Rectangle, n_s: int = 99,
                     n_box: int = 100, seed=None) -> RectangleReport:
    """
    Strict inclusion r(s) < P < t(s) over n_s interior values of s.

    With monotone slots the two extremal states, every box corner (when
    m*tau <= 16) and n_box random states are checked per s. Otherwise
    10^4 random states per s are checked and the report is non-certifying.
    """
    check_rectangle_shape(rect, model, seed=seed)
    base_seed = settings.IDEWAVE_SEED if seed is None else seed

    lo0, hi0 = rect.slice(0.0)
    signs, structural = _certified_signs(model, lo0, hi0, seed=base_seed)
    monotone = signs is not None
    certifying = monotone and structural
    use_corners = monotone and model.m * model.tau <= MAX_CORNER_DIM
    n_random = n_box if monotone else SAMPLED_POINTS
    if not certifying:
        logger.warning("Rectangle %s: monotonicity not certified, sampled check only",
                       rect.name)

    s_values = np.arange(1, n_s + 1) / (n_s + 1)

    def check(index):
        s = float(s_values[index])
        lo, hi = rect.slice(s)
        r, t = rect.bounds(s)
        states = [np.random.default_rng([base_seed, index]).random(
            (model.m, model.tau, n_random)) * (hi - lo)[..., None] + lo[..., None]]
        if use_corners:
            states.append(_corners(lo, hi))
        states = np.concatenate(states, axis=2)
        image = model(states)
        lower = image - r[:, None]
        upper = t[:, None] - image
        if monotone:
            pmin, pmax = model.extremes(lo[..., None], hi[..., None])
            lower = np.concatenate([lower, pmin - r[:, None]], axis=1)
            upper = np.concatenate([upper, t[:, None] - pmax], axis=1)
            states = np.concatenate([states, lo[..., None], hi[..., None]], axis=2)
        threshold = MARGIN_REL * (1.0 + np.abs(t))[:, None]
        bad = (lower <= threshold) | (upper <= threshold)
        witness = None
        if np.any(bad):
            k = int(np.flatnonzero(np.any(bad, axis=0))[0])
            witness = {'s': s, 'state': states[..., k]}
        return s, float(lower.min()), float(upper.min()), witness

    results = thread_map(check, range(n_s))
    witness = next((w for _, _, _, w in results if w is not None), None)
    lower_margins = [low for _, low, _, _ in results]
    upper_margins = [up for _, _, up, _ in results]
    worst = int(np.argmin(np.minimum(lower_margins, upper_margins)))

    report = RectangleReport(
        name=rect.name,
        passed=witness is None,
        certifying=certifying,
        mode='extremal' if monotone else 'sampled',
        n_s=n_s,
        n_box=n_random,
        n_corners=2 ** (model.m * model.tau) if use_corners else 0,
        min_margin_lower=min(lower_margins),
        min_margin_upper=min(upper_margins),
        worst_s=float(results[worst][0]),
        witness=witness,
    )
    log = logger.info if report.passed else logger.warning
    log("Rectangle %s (eps=%s): margins %.3g / %.3g -> %s", rect.name, rect.eps,
        report.min_margin_lower, report.min_margin_upper,
        'pass' if report.passed else 'FAIL')
    return report


# ---------------------------------------------------------------------------
# Recurrence

def containing_level(rect: Rectangle, block) -> Optional[float]:
    """Largest s whose slice contains the block, or None if even s = 0 fails."""
    if not rect.contains(0.0, block):
        return None
    if rect.contains(1.0, block):
        return 1.0
    lo, hi = 0.0, 1.0
    for _ in range(LEVEL_BISECTIONS):
        mid = 0.5 * (lo + hi)
        if rect.contains(mid, block):
            lo = mid
        else:
            hi = mid
    return lo


def iterate_difference(model: SystemModel, init_history, n_steps: int,
                       rect: Optional[Rectangle] = None, tol: float = 1e-8,
                       stop_at_tol: bool = False) -> Trajectory:
    """
    Run u_{n+1} = P[u_{n-tau+1}, ..., u_n] from an (m, tau) history.

    With a rectangle, a history inside the slice at s0 > 0 must keep every
    later state inside that slice; leaving it raises RectangleError. A
    history outside every slice runs uncertified.
    """
    history = np.array(init_history, dtype=float).reshape(model.m, model.tau)
    start_level = containing_level(rect, history) if rect is not None else None
    certified = start_level is not None and start_level > 0
    if rect is not None and not certified:
        logger.warning("Initial history lies outside every rectangle slice; "
                       "convergence is empirical only")
    if certified:
        slice_lo, slice_hi = rect.bounds(start_level)

    states = [history[:, -1].copy()]
    levels = [start_level] if certified else []
    steps_to_tol = None
    distance = float(np.max(np.abs(history[:, -1] - model.steady)))
    if distance < tol:
        steps_to_tol = 0

    for n in range(1, n_steps + 1):
        new = model(history[..., None])[:, 0]
        history = np.concatenate([history[:, 1:], new[:, None]], axis=1)
        states.append(new)
        if certified:
            if np.any(new < slice_lo - SLICE_SLACK) or np.any(new > slice_hi + SLICE_SLACK):
                raise RectangleError(
                    f"state left the rectangle slice s={start_level:.6g} at step {n}",
                    witness={'step': n, 'state': new, 's': start_level},
                )
            levels.append(containing_level(rect, history))
        distance = float(np.max(np.abs(new - model.steady)))
        if steps_to_tol is None and distance < tol:
            steps_to_tol = n
            if stop_at_tol:
                break

    return Trajectory(
        states=np.array(states),
        levels=levels,
        start_level=start_level,
        distance=distance,
        converged=distance < tol,
        steps=len(states) - 1,
        steps_to_tol=steps_to_tol,
        certified=certified,
    )


def random_histories(rect: Rectangle, model: SystemModel, n: int, s0: float,
                     seed=None) -> List[np.ndarray]:
    """n histories drawn uniformly from the slice at s0."""
    if not 0 < s0 < 1:
        raise RectangleError(f"s0 must lie in (0, 1), got {s0}")
    rng = _rng(seed)
    lo, hi = rect.slice(s0)
    return [lo + rng.random(lo.shape) * (hi - lo) for _ in range(n)]


def converge_many(model: SystemModel, rect: Rectangle, n_histories: int = 50,
                  s0: float = 0.2, n_steps: int = 10_000, tol: float = 1e-8,
                  seed=None) -> ConvergenceSummary:
    """Iterate the recurrence from random slice histories, in parallel."""
    histories = random_histories(rect, model, n_histories, s0, seed=seed)

    def run(history):
        return iterate_difference(model, history, n_steps, rect=rect, tol=tol,
                                  stop_at_tol=True)

    trajectories = thread_map(run, histories)
    reached = [t.steps_to_tol for t in trajectories if t.steps_to_tol is not None]
    summary = ConvergenceSummary(
        n_histories=n_histories,
        n_converged=sum(t.converged for t in trajectories),
        s0=s0,
        tol=tol,
        max_distance=max(t.distance for t in trajectories),
        max_steps_to_tol=max(reached) if reached else None,
        certified=all(t.certified for t in trajectories),
        trajectories=trajectories,
    )
    log = logger.info if summary.passed else logger.warning
    log("Recurrence %s: %d/%d histories within %.1e of E", model.name,
        summary.n_converged, n_histories, tol)
    return summary


def profile_tail_check(profile, rect: Rectangle, model: SystemModel,
                       tol: float = 1e-3) -> Dict[str, Any]:
    """
    Right-end behaviour of a converged wave profile.

    When the right-end value sits in a slice with s1 > 0, the max-norm
    distance to E at the right end must be below tol and no larger than
    at the 90% grid quantile.
    """
    right = np.asarray(profile.right_value, dtype=float)
    s1 = containing_level(rect, model.constant_block(right))
    values = profile.values
    q90 = int(0.9 * (values.shape[1] - 1))
    distance_right = float(np.max(np.abs(values[:, -1] - model.steady)))
    distance_q90 = float(np.max(np.abs(values[:, q90] - model.steady)))
    applicable = s1 is not None and s1 > 0
    passed = applicable and distance_right < tol and distance_right <= distance_q90 + 1e-12
    return {
        'applicable': applicable,
        's1': s1,
        'distance_right': distance_right,
        'distance_q90': distance_q90,
        'passed': bool(passed),
    }
