"""
Population Model Service

The recurrence maps P that drive the delayed integro-difference systems:
scalar birth functions (logistic, Beverton-Holt) and the delayed
competitive family

    P_i = (1+d_i) u_n^i / (1 + d_i (u_n^i + sum_j e_j^i u_{n-j}^i
                                      + sum_{l != i, j} f_lj^i u_{n-j+1}^l)),

of which the delayed Beverton-Holt map and the two-species competition
map are special cases.

State blocks have shape (m, tau, ...): species first, then generations
from oldest (index 0) to current (index tau - 1).
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from django.conf import settings
from scipy import linalg, optimize

from ..exceptions import ModelError

logger = logging.getLogger(__name__)

BOX_SLACK = 1e-12
ENVELOPE_POINTS = 10_000


@dataclass(frozen=True, eq=False)
class ScalarBirth:
    """A scalar birth function b with its admissibility constants."""
    name: str
    b: Callable
    bprime0: float
    vstar: float
    vbar: float
    v1: float
    v2: float
    L1: float
    critical_points: Tuple[float, ...] = ()
    exact: Optional[Dict[str, Any]] = None

    def __call__(self, v):
        return self.b(v)

    def interval_extremes(self, lo, hi) -> Tuple[np.ndarray, np.ndarray]:
        """Elementwise min and max of b over [lo, hi]."""
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        b_lo, b_hi = self.b(lo), self.b(hi)
        low, high = np.minimum(b_lo, b_hi), np.maximum(b_lo, b_hi)
        for point in self.critical_points:
            inside = (lo <= point) & (point <= hi)
            value = self.b(point)
            low = np.where(inside, np.minimum(low, value), low)
            high = np.where(inside, np.maximum(high, value), high)
        return low, high

    def as_system(self) -> 'ScalarSystem':
        return ScalarSystem(self)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'name': self.name, 'bprime0': self.bprime0, 'vstar': self.vstar,
            'vbar': self.vbar, 'v1': self.v1, 'v2': self.v2, 'L1': self.L1,
        }


@dataclass(frozen=True, eq=False)
class Envelopes:
    grid: np.ndarray
    bbar: np.ndarray
    bunder: np.ndarray
    v1: float
    v2: float


class SystemModel:
    """
    Base class for recurrence maps on m species with delay depth tau.

    Subclasses implement __call__ on blocks of shape (m, tau, ...).
    """
    kind = 'system'

    def __init__(self, name: str, m: int, tau: int, caps, steady, growth,
                 params: Optional[Dict[str, Any]] = None):
        self.name = name
        self.m = int(m)
        self.tau = int(tau)
        self.caps = np.asarray(caps, dtype=float).reshape(self.m)
        self.steady = np.asarray(steady, dtype=float).reshape(self.m)
        self.growth = np.asarray(growth, dtype=float).reshape(self.m)
        self.params = dict(params or {})
        self.lipschitz: Optional[float] = None
        self.birth: Optional[ScalarBirth] = None

    def __call__(self, block: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __repr__(self):
        return f"<{type(self).__name__} {self.name} m={self.m} tau={self.tau}>"

    @property
    def coupling(self) -> np.ndarray:
        """coupling[i, l] is True when P_i depends on species l != i."""
        return np.zeros((self.m, self.m), dtype=bool)

    @property
    def bound_caps(self) -> np.ndarray:
        """Plateau level of the upper solution of each species."""
        return self.caps

    @property
    def slot_pattern(self) -> Optional[np.ndarray]:
        """Known monotonicity signs (m, m, tau) of every P_i, if any."""
        return None

    @property
    def rectangle_ready(self) -> bool:
        return False

    def remainder_terms(self, i: int, lambdas: Sequence[float]) -> List[Tuple[float, float]]:
        """(coefficient, exponent) pairs bounding the nonlinear remainder of P_i."""
        return []

    def constant_block(self, state) -> np.ndarray:
        """Block whose every generation equals the given m-vector."""
        state = np.asarray(state, dtype=float).reshape(self.m, 1)
        return np.repeat(state, self.tau, axis=1)

    def extremes(self, lo_block: np.ndarray,
                 hi_block: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        Exact (min, max) of each P_i over the box [lo_block, hi_block].

        Requires every slot of P_i to be monotone on the box; each slot is
        set to the end that pushes P_i up (or down).
        """
        signs = self.slot_pattern
        if signs is None:
            lo_state = np.min(lo_block.reshape(self.m, self.tau, -1), axis=2)
            hi_state = np.max(hi_block.reshape(self.m, self.tau, -1), axis=2)
            signs = slot_signs(self, lo_state, hi_state)
        if np.any(np.isnan(signs)):
            raise ModelError(
                f"{self.name}: mixed monotonicity, extremal substitution is not exact"
            )
        pmin = np.empty((self.m,) + lo_block.shape[2:])
        pmax = np.empty_like(pmin)
        extra = (1,) * (lo_block.ndim - 2)
        for i in range(self.m):
            up = (signs[i] >= 0).reshape(self.m, self.tau, *extra)
            pmax[i] = self(np.where(up, hi_block, lo_block))[i]
            pmin[i] = self(np.where(up, lo_block, hi_block))[i]
        return pmin, pmax

    def to_dict(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'kind': self.kind,
            'm': self.m,
            'tau': self.tau,
            'caps': self.caps,
            'steady': self.steady,
            'growth': self.growth,
            'lipschitz': self.lipschitz,
            'rectangle_ready': self.rectangle_ready,
            'params': self.params,
        }


class ScalarSystem(SystemModel):
    """A scalar birth function seen as a system with m = tau = 1."""
    kind = 'scalar'

    def __init__(self, birth: ScalarBirth):
        super().__init__(
            birth.name, 1, 1,
            caps=[birth.vbar], steady=[birth.vstar], growth=[birth.bprime0],
            params={'L1': birth.L1},
        )
        self.birth = birth

    def __call__(self, block):
        block = np.asarray(block, dtype=float)
        return self.birth.b(block[:, 0])

    @property
    def bound_caps(self):
        return np.array([self.birth.v2])

    @property
    def rectangle_ready(self):
        return self.birth.name == 'logistic'

    def remainder_terms(self, i, lambdas):
        return [(self.birth.L1, 2.0 * lambdas[i])]

    def extremes(self, lo_block, hi_block):
        lo = np.asarray(lo_block, dtype=float)[:, 0]
        hi = np.asarray(hi_block, dtype=float)[:, 0]
        return self.birth.interval_extremes(lo, hi)


class CompetitionSystem(SystemModel):
    """
    The delayed competitive family.

    e has shape (m, tau - 1) with e[i, j - 1] = e_j^i; f has shape
    (m, m, tau) with f[i, l, j - 1] = f_lj^i and a zero diagonal.
    """

    def __init__(self, name: str, kind: str, d, e, f, steady,
                 params: Optional[Dict[str, Any]] = None):
        d = np.asarray(d, dtype=float)
        m = len(d)
        e = np.asarray(e, dtype=float)
        f = np.asarray(f, dtype=float)
        tau = f.shape[2]
        super().__init__(name, m, tau, caps=np.ones(m), steady=steady,
                         growth=1.0 + d, params=params)
        self.kind = kind
        self.d = d
        self.e = e
        self.f = f

    def __call__(self, block):
        u = np.asarray(block, dtype=float)
        newest_first = u[:, ::-1]
        current = newest_first[:, 0]
        delayed = np.einsum('ij,ij...->i...', self.e, newest_first[:, 1:])
        cross = np.einsum('ilj,lj...->i...', self.f, newest_first)
        d = self.d.reshape((self.m,) + (1,) * (current.ndim - 1))
        return (1.0 + d) * current / (1.0 + d * (current + delayed + cross))

    @property
    def coupling(self):
        return self.f.sum(axis=2) > 0

    @property
    def pressure(self) -> np.ndarray:
        """sum_j e_j^i + sum_{l, j} f_lj^i for each species."""
        return self.e.sum(axis=1) + self.f.sum(axis=(1, 2))

    @property
    def rectangle_ready(self):
        return bool(np.all(self.pressure < 1.0))

    @property
    def slot_pattern(self):
        signs = np.zeros((self.m, self.m, self.tau))
        for i in range(self.m):
            signs[i, i, :-1] = -(self.e[i, ::-1] > 0).astype(float)
            signs[i, :, :] -= (self.f[i, :, ::-1] > 0).astype(float)
            signs[i, i, -1] = 1.0
        return signs

    def remainder_terms(self, i, lambdas):
        terms = [(self.d[i] * (1.0 + self.e[i].sum()), 2.0 * lambdas[i])]
        for l in range(self.m):
            weight = self.f[i, l].sum()
            if l != i and weight > 0:
                terms.append((self.d[i] * weight, lambdas[l] + lambdas[i]))
        return terms


class CallableSystem(SystemModel):
    """Wraps an arbitrary vectorized map; no admissibility checks are run."""
    kind = 'callable'

    def __init__(self, name, fn, m, tau, caps, steady=None, growth=None):
        steady = np.ones(m) if steady is None else steady
        growth = np.ones(m) if growth is None else growth
        super().__init__(name, m, tau, caps, steady, growth)
        self.fn = fn

    def __call__(self, block):
        return np.asarray(self.fn(np.asarray(block, dtype=float)), dtype=float)


# ---------------------------------------------------------------------------
# Scalar births

def logistic_b(v):
    return 3 * v * (1 - v)


def beverton_holt_b(d):
    def b(v):
        return (1 + d) * v / (1 + d * v)
    return b


def envelopes(birth: ScalarBirth, n: int = ENVELOPE_POINTS) -> Envelopes:
    """
    Sup/inf envelopes of b on [0, vbar] and their fixed points.

    bbar(v) = max of b on [0, v] (running max), bunder(v) = min of b on
    [v, vbar] (reverse running min); v2 is the largest fixed point of bbar,
    v1 the first fixed point of bunder, each refined by bisection on the
    piecewise-linear envelope.
    """
    extra = [p for p in birth.critical_points if 0 < p < birth.vbar] + [birth.vstar]
    grid = np.union1d(np.linspace(0.0, birth.vbar, n), extra)
    values = np.asarray(birth.b(grid), dtype=float)
    bbar = np.maximum.accumulate(values)
    bunder = np.minimum.accumulate(values[::-1])[::-1]

    def crossing(envelope, index):
        def gap(v):
            return np.interp(v, grid, envelope) - v
        if gap(grid[index]) == 0:
            return float(grid[index])
        return optimize.bisect(gap, grid[index - 1], grid[index], xtol=1e-14)

    above = np.flatnonzero(bbar[1:] - grid[1:] >= 0) + 1
    if len(above) == 0:
        raise ModelError("(b1)–(b3) violated numerically")
    last = above[-1]
    if last == len(grid) - 1:
        v2 = float(grid[-1])
    else:
        v2 = crossing(bbar, last + 1)

    below = np.flatnonzero(bunder[1:] - grid[1:] <= 0) + 1
    if len(below) == 0:
        raise ModelError("(b1)–(b3) violated numerically")
    v1 = crossing(bunder, below[0])

    return Envelopes(grid=grid, bbar=bbar, bunder=bunder, v1=v1, v2=v2)


def _check_birth(birth: ScalarBirth) -> None:
    if abs(float(birth.b(0.0))) > 0:
        raise ModelError(f"{birth.name}: b(0) must be 0")
    if abs(float(birth.b(birth.vstar)) - birth.vstar) > 1e-12:
        raise ModelError(f"{birth.name}: b(v*) != v*")
    v = np.linspace(0.0, birth.vbar, 1001)[1:]
    values = np.asarray(birth.b(v), dtype=float)
    gap = birth.bprime0 * v - values
    if np.any(values < -BOX_SLACK) or np.any(gap < -1e-12):
        raise ModelError(f"{birth.name}: 0 <= b(v) <= b'(0) v fails")
    if np.any(gap > birth.L1 * v * v * (1 + 1e-12) + 1e-15):
        raise ModelError(f"{birth.name}: b'(0) v - b(v) <= L1 v^2 fails")


def scalar_birth(name: str, b: Callable, bprime0: float, vstar: float,
                 vbar: float, critical_points: Sequence[float] = (),
                 L1: Optional[float] = None) -> ScalarBirth:
    """
    Build and check a ScalarBirth.

    L1 defaults to the largest (b'(0) v - b(v)) / v^2 on a 1000-point grid,
    inflated by 10%; v1 and v2 come from the envelopes.
    """
    if L1 is None:
        v = np.linspace(0.0, vbar, 1001)[1:]
        L1 = 1.1 * float(np.max((bprime0 * v - np.asarray(b(v), dtype=float)) / v ** 2))
        L1 = max(L1, 0.0)
    draft = ScalarBirth(name=name, b=b, bprime0=float(bprime0), vstar=float(vstar),
                        vbar=float(vbar), v1=float(vstar), v2=float(vbar),
                        L1=float(L1), critical_points=tuple(critical_points))
    env = envelopes(draft)
    birth = ScalarBirth(name=name, b=b, bprime0=float(bprime0), vstar=float(vstar),
                        vbar=float(vbar), v1=env.v1, v2=env.v2, L1=float(L1),
                        critical_points=tuple(critical_points))
    _check_birth(birth)
    return birth


def logistic_model() -> ScalarBirth:
    """b(v) = 3v(1 - v) with its exact constants."""
    exact = {
        'vstar': Fraction(2, 3),
        'vbar': Fraction(3, 4),
        'v1': Fraction(9, 16),
        'v2': Fraction(3, 4),
        'critical_points': (Fraction(1, 2),),
    }
    birth = ScalarBirth(
        name='logistic', b=logistic_b, bprime0=3.0, vstar=2.0 / 3.0,
        vbar=0.75, v1=9.0 / 16.0, v2=0.75, L1=3.0,
        critical_points=(0.5,), exact=exact,
    )
    _check_birth(birth)
    return birth


def beverton_holt_birth(d: float) -> ScalarBirth:
    """b(v) = (1+d) v / (1 + d v); monotone, so v1 = v2 = v* = 1."""
    if not d > 0:
        raise ModelError(f"d must be positive, got {d}")
    d = float(d)
    birth = ScalarBirth(
        name='beverton_holt', b=beverton_holt_b(d), bprime0=1.0 + d,
        vstar=1.0, vbar=1.0, v1=1.0, v2=1.0, L1=d * (1.0 + d),
        exact={'vstar': Fraction(1), 'vbar': Fraction(1), 'v1': Fraction(1),
               'v2': Fraction(1), 'critical_points': ()},
    )
    _check_birth(birth)
    return birth


def band_refinement(birth: ScalarBirth, lo=None, hi=None, steps: int = 1,
                    exact: bool = False) -> List[Tuple[Any, Any]]:
    """
    Shrink the plateau bracket [lo, hi] of a scalar birth.

    Each step sets hi to the max of b on [lo, hi], then lo to the min of b
    on [lo, hi]. With exact=True the bracket is carried in Fractions.
    """
    if exact:
        if not birth.exact:
            raise ModelError(f"{birth.name} has no exact constants")
        lo = birth.exact['v1'] if lo is None else Fraction(lo)
        hi = birth.exact['v2'] if hi is None else Fraction(hi)
        points = birth.exact['critical_points']
    else:
        lo = birth.v1 if lo is None else float(lo)
        hi = birth.v2 if hi is None else float(hi)
        points = birth.critical_points

    def extremes(a, z):
        values = [birth.b(v) for v in [a, z] + [p for p in points if a <= p <= z]]
        return min(values), max(values)

    bands = [(lo, hi)]
    for _ in range(steps):
        hi = extremes(lo, hi)[1]
        lo = extremes(lo, hi)[0]
        bands.append((lo, hi))
    return bands


def second_iterate_gap(birth: ScalarBirth, lo: float, hi: float,
                       n: int = 1001) -> Tuple[np.ndarray, np.ndarray]:
    """Grid on [lo, hi] and b(b(v)) - v on it."""
    v = np.linspace(lo, hi, n)
    return v, birth.b(birth.b(v)) - v


# ---------------------------------------------------------------------------
# Systems

def _rng(seed):
    return np.random.default_rng(settings.IDEWAVE_SEED if seed is None else seed)


def validate_model(model: SystemModel, n_points: int = 10_000, seed=None) -> None:
    """Box invariance, fixed points at 0 and E, and 0 << E <= M."""
    rng = _rng(seed)
    shape = (model.m, model.tau, n_points)
    box = rng.random(shape) * model.caps[:, None, None]
    image = model(box)
    if np.any(image < -BOX_SLACK) or np.any(image > model.caps[:, None] + BOX_SLACK):
        raise ModelError(f"{model.name}: P does not map the box [0, M] into itself")

    if np.any(model.steady <= 0) or np.any(model.steady > model.caps + BOX_SLACK):
        raise ModelError(f"{model.name}: coexistence state not positive")
    at_steady = model(model.constant_block(model.steady))
    if np.max(np.abs(at_steady - model.steady)) > 1e-12:
        raise ModelError(f"{model.name}: P(E, ..., E) != E")
    at_zero = model(np.zeros((model.m, model.tau)))
    if np.max(np.abs(at_zero)) > 0:
        raise ModelError(f"{model.name}: P(0) != 0")


def lipschitz_bound(model: SystemModel, n_pairs: int = 100_000, seed=None,
                    inflate: float = 1.5) -> float:
    """
    Sampled Lipschitz constant of P on its box.

    max |P(x) - P(y)|_inf / sum |x - y| over random pairs, times inflate.
    """
    rng = _rng(seed)
    shape = (model.m, model.tau, n_pairs)
    caps = model.caps[:, None, None]
    x = rng.random(shape) * caps
    y = rng.random(shape) * caps
    change = np.max(np.abs(model(x) - model(y)), axis=0)
    distance = np.sum(np.abs(x - y), axis=(0, 1))
    ratio = np.divide(change, distance, out=np.zeros_like(change), where=distance > 0)
    return inflate * float(ratio.max())


def slot_signs(model: SystemModel, lo=None, hi=None, n_samples: int = 2000,
               seed=None, delta: float = 1e-7) -> np.ndarray:
    """
    Sampled monotonicity of each P_i in each slot over the box [lo, hi].

    Entry [i, l, j] is +1 (nondecreasing), -1 (nonincreasing), 0 (no
    dependence) or nan (mixed).
    """
    rng = _rng(seed)
    lo = np.zeros((model.m, model.tau)) if lo is None else np.asarray(lo, dtype=float)
    hi = model.constant_block(model.caps) if hi is None else np.asarray(hi, dtype=float)
    lo = np.broadcast_to(lo.reshape(model.m, -1), (model.m, model.tau))
    hi = np.broadcast_to(hi.reshape(model.m, -1), (model.m, model.tau))
    base = lo[..., None] + rng.random((model.m, model.tau, n_samples)) * (hi - lo)[..., None]
    reference = model(base)

    signs = np.zeros((model.m, model.m, model.tau))
    for l in range(model.m):
        for j in range(model.tau):
            moved = base.copy()
            moved[l, j] += delta
            diff = model(moved) - reference
            for i in range(model.m):
                up = bool(np.any(diff[i] > 1e-15))
                down = bool(np.any(diff[i] < -1e-15))
                signs[i, l, j] = math.nan if up and down else (1.0 if up else (-1.0 if down else 0.0))
    return signs


def has_competitive_pattern(model: SystemModel, signs: Optional[np.ndarray] = None) -> bool:
    """Increasing in the own current slot, nonincreasing everywhere else."""
    signs = slot_signs(model) if signs is None else signs
    if np.any(np.isnan(signs)):
        return False
    for i in range(model.m):
        own = signs[i, i, -1]
        rest = np.delete(signs[i].reshape(-1), i * model.tau + model.tau - 1)
        if own != 1.0 or np.any(rest > 0):
            return False
    return True


def persistence_floor(model: SystemModel) -> np.ndarray:
    """Lower bound on the plateau each species keeps behind a front."""
    if isinstance(model, CompetitionSystem):
        return np.maximum(1.0 - model.pressure, 0.0)
    if isinstance(model, ScalarSystem):
        return np.array([model.birth.v1])
    return np.zeros(model.m)


def _finish(model: SystemModel, seed=None) -> SystemModel:
    validate_model(model, seed=seed)
    model.lipschitz = lipschitz_bound(model, seed=seed)
    logger.debug("Built %r: E=%s L=%.4g", model, model.steady, model.lipschitz)
    return model


def _nonnegative(name, value):
    value = float(value)
    if not math.isfinite(value) or value < 0:
        raise ModelError(f"{name} must be a nonnegative number, got {value}")
    return value


def _positive(name, value):
    value = float(value)
    if not math.isfinite(value) or value <= 0:
        raise ModelError(f"{name} must be positive, got {value}")
    return value


def delayed_bh_model(d: float, a: float, seed=None) -> CompetitionSystem:
    """(1+d) u_n / (1 + d (u_n + a u_{n-1})), steady state 1/(1+a)."""
    d = _positive('d', d)
    a = _nonnegative('a', a)
    if a >= 1:
        raise ModelError("steady state 1/(1+a) requires a<1")
    model = CompetitionSystem(
        'delayed_bh', 'delayed_bh', d=[d], e=[[a]], f=np.zeros((1, 1, 2)),
        steady=[1.0 / (1.0 + a)], params={'d': d, 'a': a},
    )
    return _finish(model, seed)


def competition2_model(d1: float, d2: float, a1: float, a2: float, b1: float,
                       b2: float, seed=None) -> CompetitionSystem:
    """
    Two competing species with one-generation self-delay.

    p_{n+1} = (1+d1) p_n / (1 + d1 (p_n + b1 p_{n-1} + a1 q_n)) and the
    mirror image for q.
    """
    d1, d2 = _positive('d1', d1), _positive('d2', d2)
    a1, a2 = _nonnegative('a1', a1), _nonnegative('a2', a2)
    b1, b2 = _nonnegative('b1', b1), _nonnegative('b2', b2)
    if not (1 + b1 > a2 and 1 + b2 > a1):
        raise ModelError("coexistence state not positive")

    det = (1 + b1) * (1 + b2) - a1 * a2
    steady = np.array([(1 + b2 - a1) / det, (1 + b1 - a2) / det])
    check = linalg.solve(np.array([[1 + b1, a1], [a2, 1 + b2]]), np.ones(2))
    if np.max(np.abs(check - steady)) > 1e-12:
        raise ModelError("closed-form coexistence state disagrees with the linear solve")

    f = np.zeros((2, 2, 2))
    f[0, 1, 0] = a1
    f[1, 0, 0] = a2
    model = CompetitionSystem(
        'competition2', 'competition2', d=[d1, d2], e=[[b1], [b2]], f=f,
        steady=steady,
        params={'d1': d1, 'd2': d2, 'a1': a1, 'a2': a2, 'b1': b1, 'b2': b2},
    )
    return _finish(model, seed)


def _coefficients(value, shape, name, zero_diagonal=False):
    if np.isscalar(value):
        array = np.full(shape, float(value))
        if zero_diagonal:
            for i in range(shape[0]):
                array[i, i] = 0.0
    else:
        array = np.asarray(value, dtype=float)
        if array.shape != shape:
            raise ModelError(f"{name} must have shape {shape}, got {array.shape}")
    if np.any(~np.isfinite(array)) or np.any(array < 0):
        raise ModelError(f"{name} coefficients must be nonnegative")
    return array


def mspecies_model(m: int, tau: int, d, e, f, seed=None) -> CompetitionSystem:
    """
    m competing species with delay depth tau.

    e: (m, tau - 1) own-delay coefficients, f: (m, m, tau) cross
    coefficients (zero diagonal); scalars fill every admissible entry.
    The coexistence state solves E_i (1 + sum_j e_j^i) + sum_{l != i}
    (sum_j f_lj^i) E_l = 1.
    """
    m, tau = int(m), int(tau)
    if m < 1 or tau < 1:
        raise ModelError("m and tau must be at least 1")
    d = np.full(m, float(d)) if np.isscalar(d) else np.asarray(d, dtype=float)
    if d.shape != (m,) or np.any(~(d > 0)):
        raise ModelError("d must hold m positive values")
    e = _coefficients(e, (m, tau - 1), 'e')
    f = _coefficients(f, (m, m, tau), 'f', zero_diagonal=True)
    if any(np.any(f[i, i] != 0) for i in range(m)):
        raise ModelError("f[i][i] must be zero; own-species delays belong in e")

    matrix = np.diag(1.0 + e.sum(axis=1)) + f.sum(axis=2)
    try:
        if np.linalg.cond(matrix) > 1e12:
            raise linalg.LinAlgError('ill-conditioned')
        steady = linalg.solve(matrix, np.ones(m))
    except linalg.LinAlgError:
        raise ModelError("no unique steady state")
    if np.max(np.abs(matrix @ steady - 1.0)) > 1e-12:
        raise ModelError("no unique steady state")
    if np.any(steady <= 0):
        raise ModelError("coexistence state not positive")

    model = CompetitionSystem(
        'mspecies', 'mspecies', d=d, e=e, f=f, steady=steady,
        params={'m': m, 'tau': tau, 'd': d, 'e': e, 'f': f},
    )
    if not model.rectangle_ready:
        logger.info("mspecies model: pressure %s >= 1, rectangle path disabled",
                    model.pressure)
    return _finish(model, seed)


def scalar_system(birth: ScalarBirth, seed=None) -> ScalarSystem:
    return _finish(ScalarSystem(birth), seed)
