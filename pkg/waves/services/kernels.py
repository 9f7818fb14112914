"""
Dispersal Kernel Service

Symmetric probability kernels with a moment-generating function that is
finite for every nonnegative exponent, their MGFs (closed forms where the
family has one, adaptive quadrature otherwise) and their realization as
symmetric weight vectors on a uniform mesh.

Admitted families: gaussian(sigma), uniform(halfwidth),
triangular(halfwidth) and table(samples, spacing). Fat-tailed families
are refused outright because every speed computation evaluates the MGF
at arbitrary exponents.
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
from django.conf import settings
from scipy import integrate, special

from ..exceptions import KernelError

logger = logging.getLogger(__name__)

ADMITTED_FAMILIES = ('gaussian', 'uniform', 'triangular', 'table')

# Families people ask for whose MGF blows up at some finite exponent.
HEAVY_TAILED_FAMILIES = (
    'laplace', 'exponential', 'cauchy', 'student_t', 'lognormal', 'pareto',
)

_FAMILY_PARAMS = {
    'gaussian': ('sigma',),
    'uniform': ('halfwidth',),
    'triangular': ('halfwidth',),
    'table': ('samples', 'spacing'),
}


@dataclass(frozen=True, eq=False)
class KernelSpec:
    """A validated dispersal kernel."""
    family: str
    sigma: Optional[float] = None
    halfwidth: Optional[float] = None
    samples: Optional[np.ndarray] = None
    spacing: Optional[float] = None

    @property
    def nodes(self) -> np.ndarray:
        """Abscissae of a table kernel, centred on zero."""
        n = len(self.samples)
        return (np.arange(n) - (n - 1) / 2.0) * self.spacing

    @property
    def support_radius(self) -> float:
        if self.family == 'gaussian':
            return math.inf
        if self.family == 'table':
            return (len(self.samples) - 1) / 2.0 * self.spacing
        return self.halfwidth

    @property
    def scale(self) -> float:
        """Standard deviation of the kernel."""
        return math.sqrt(variance(self))

    def describe(self) -> Dict[str, Any]:
        if self.family == 'gaussian':
            return {'family': 'gaussian', 'sigma': self.sigma}
        if self.family == 'table':
            return {'family': 'table', 'spacing': self.spacing,
                    'samples': len(self.samples)}
        return {'family': self.family, 'halfwidth': self.halfwidth}


@dataclass(frozen=True, eq=False)
class DiscreteKernel:
    """Kernel weights on the mesh offsets k*spacing, k = -K..K."""
    weights: np.ndarray
    spacing: float
    radius: float

    @property
    def half_count(self) -> int:
        return (len(self.weights) - 1) // 2

    @property
    def offsets(self) -> np.ndarray:
        return (np.arange(len(self.weights)) - self.half_count) * self.spacing

    def mgf(self, lam: float) -> float:
        """Discrete moment sum of e^{lam*s} against the weights."""
        return float(np.sum(self.weights * np.exp(lam * self.offsets)))


def _positive(params: Dict[str, Any], name: str, family: str) -> float:
    if name not in params:
        raise KernelError(f"{family} kernel requires parameter '{name}'")
    try:
        value = float(params[name])
    except (TypeError, ValueError):
        raise KernelError(f"{family} kernel: '{name}' must be a number")
    if not math.isfinite(value) or value <= 0:
        raise KernelError(f"{family} kernel: '{name}' must be positive, got {value}")
    return value


def make_kernel(family: str, params: Optional[Dict[str, Any]] = None,
                **kwargs) -> KernelSpec:
    """
    Build a validated KernelSpec.

    Parameters may be passed as a dict, as keyword arguments, or both.
    Table kernels are renormalized so their piecewise-linear interpolant
    integrates to one.
    """
    params = dict(params or {}, **kwargs)
    family = str(family).lower()

    if family in HEAVY_TAILED_FAMILIES:
        raise KernelError(
            f"{family} kernel: MGF not finite for all λ≥0, violates (k3)"
        )
    if family not in ADMITTED_FAMILIES:
        raise KernelError(
            f"unknown kernel family '{family}' "
            f"(expected one of {', '.join(ADMITTED_FAMILIES)})"
        )

    unknown = sorted(set(params) - set(_FAMILY_PARAMS[family]))
    if unknown:
        raise KernelError(
            f"unknown parameter(s) for {family} kernel: {', '.join(unknown)}"
        )

    if family == 'gaussian':
        return KernelSpec('gaussian', sigma=_positive(params, 'sigma', family))
    if family in ('uniform', 'triangular'):
        return KernelSpec(family, halfwidth=_positive(params, 'halfwidth', family))

    spacing = _positive(params, 'spacing', family)
    if 'samples' not in params:
        raise KernelError("table kernel requires parameter 'samples'")
    try:
        samples = np.array(params['samples'], dtype=float)
    except (TypeError, ValueError):
        raise KernelError("table kernel samples must be numbers")
    if samples.ndim != 1 or len(samples) < 2:
        raise KernelError("table kernel needs a one-dimensional sequence of samples")
    if not np.all(np.isfinite(samples)):
        raise KernelError("table kernel samples must be finite")
    if np.any(samples < 0):
        raise KernelError("table kernel samples must be nonnegative")
    peak = float(samples.max())
    if peak <= 0:
        raise KernelError("table kernel has zero mass")
    if np.max(np.abs(samples - samples[::-1])) > 1e-12 * peak:
        raise KernelError("table kernel is not symmetric: k(x) != k(-x)")

    samples = 0.5 * (samples + samples[::-1])
    mass = spacing * (samples.sum() - 0.5 * (samples[0] + samples[-1]))
    samples = samples / mass
    samples.setflags(write=False)
    return KernelSpec('table', samples=samples, spacing=spacing)


def load_table_kernel(path: Union[str, Path]) -> KernelSpec:
    """
    Load a table kernel from a two-column CSV file (x, density).

    A non-numeric first row is treated as a header. The x column must be a
    uniform mesh symmetric about zero.
    """
    path = Path(path)
    try:
        first = path.read_text().splitlines()[0] if path.stat().st_size else ''
    except OSError as exc:
        raise KernelError(f"cannot read kernel table {path}: {exc}")
    skip = 0
    try:
        [float(cell) for cell in first.split(',')]
    except ValueError:
        skip = 1
    try:
        data = np.loadtxt(path, delimiter=',', skiprows=skip, ndmin=2)
    except ValueError as exc:
        raise KernelError(f"malformed kernel table {path}: {exc}")
    if data.shape[1] != 2 or data.shape[0] < 2:
        raise KernelError(f"kernel table {path} must have two columns and 2+ rows")

    x, density_values = data[:, 0], data[:, 1]
    steps = np.diff(x)
    spacing = float(steps.mean())
    if spacing <= 0 or not np.allclose(steps, spacing, rtol=1e-9, atol=0):
        raise KernelError(f"kernel table {path}: x column is not a uniform mesh")
    if np.max(np.abs(x + x[::-1])) > 1e-9 * spacing:
        raise KernelError(f"kernel table {path}: x column is not symmetric about 0")
    logger.debug("Loaded table kernel %s with %d samples", path, len(x))
    return make_kernel('table', samples=density_values, spacing=spacing)


def kernel_from_config(config: Dict[str, Any],
                       base_dir: Optional[Path] = None) -> KernelSpec:
    """Build a kernel from a config entry such as {"family": "gaussian", "sigma": 1}."""
    if not isinstance(config, dict) or 'family' not in config:
        raise KernelError("kernel entry must be an object with a 'family' key")
    params = dict(config)
    family = params.pop('family')
    if family == 'table' and 'path' in params:
        if set(params) != {'path'}:
            raise KernelError("table kernel from a file takes only 'path'")
        table_path = Path(params['path'])
        if base_dir is not None and not table_path.is_absolute():
            table_path = base_dir / table_path
        return load_table_kernel(table_path)
    return make_kernel(family, params)


def per_species(kernels: Union[KernelSpec, Sequence[KernelSpec]],
                m: int) -> List[KernelSpec]:
    """One kernel per species, expanding a shared kernel."""
    if isinstance(kernels, KernelSpec):
        return [kernels] * m
    kernels = list(kernels)
    if len(kernels) == 1:
        return kernels * m
    if len(kernels) != m:
        raise KernelError(
            f"need one kernel per species or one shared kernel, got {len(kernels)} for {m}"
        )
    return kernels


def density(kernel: KernelSpec, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if kernel.family == 'gaussian':
        s = kernel.sigma
        return np.exp(-0.5 * (x / s) ** 2) / (s * math.sqrt(2.0 * math.pi))
    if kernel.family == 'uniform':
        a = kernel.halfwidth
        return np.where(np.abs(x) <= a, 0.5 / a, 0.0)
    if kernel.family == 'triangular':
        a = kernel.halfwidth
        return np.maximum(0.0, (a - np.abs(x)) / (a * a))
    return np.interp(x, kernel.nodes, kernel.samples, left=0.0, right=0.0)


def cdf(kernel: KernelSpec, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if kernel.family == 'gaussian':
        return special.ndtr(x / kernel.sigma)
    if kernel.family == 'uniform':
        a = kernel.halfwidth
        return np.clip((x + a) / (2.0 * a), 0.0, 1.0)
    if kernel.family == 'triangular':
        a = kernel.halfwidth
        z = np.clip(x, -a, a)
        left = (a + z) ** 2 / (2.0 * a * a)
        right = 1.0 - (a - z) ** 2 / (2.0 * a * a)
        return np.where(z <= 0, left, right)

    nodes, s, h = kernel.nodes, kernel.samples, kernel.spacing
    cumulative = np.concatenate([[0.0], np.cumsum(0.5 * h * (s[:-1] + s[1:]))])
    z = np.clip(x, nodes[0], nodes[-1])
    k = np.clip(np.searchsorted(nodes, z, side='right') - 1, 0, len(nodes) - 2)
    t = z - nodes[k]
    value = cumulative[k] + s[k] * t + (s[k + 1] - s[k]) * t * t / (2.0 * h)
    return np.clip(value, 0.0, 1.0)


def variance(kernel: KernelSpec) -> float:
    if kernel.family == 'gaussian':
        return kernel.sigma ** 2
    if kernel.family == 'uniform':
        return kernel.halfwidth ** 2 / 3.0
    if kernel.family == 'triangular':
        return kernel.halfwidth ** 2 / 6.0
    r = kernel.support_radius
    value, _ = integrate.quad(lambda y: y * y * float(density(kernel, y)), -r, r,
                              points=kernel.nodes[1:-1],
                              limit=max(50, 2 * len(kernel.samples)))
    return value


def log_mgf(kernel: KernelSpec, lam: float) -> float:
    """Natural log of M(lam) = ∫ e^{lam*y} k(y) dy, free of overflow."""
    lam = float(lam)
    if lam < 0 or not math.isfinite(lam):
        raise KernelError(f"MGF exponent must be finite and nonnegative, got {lam}")
    if lam == 0:
        return 0.0

    if kernel.family == 'gaussian':
        return 0.5 * (kernel.sigma * lam) ** 2

    if kernel.family == 'uniform':
        x = lam * kernel.halfwidth
        if x < 1e-4:
            return math.log1p(x * x / 6.0 + x ** 4 / 120.0)
        # sinh(x)/x = e^x (1 - e^{-2x}) / (2x)
        return x + math.log1p(-math.exp(-2.0 * x)) - math.log(2.0 * x)

    if kernel.family == 'triangular':
        x = lam * kernel.halfwidth
        if x < 1e-4:
            return math.log1p(x * x / 12.0 + x ** 4 / 360.0)
        # (2 cosh x - 2)/x^2 = e^x (1 - e^{-x})^2 / x^2
        return x + 2.0 * math.log1p(-math.exp(-x)) - 2.0 * math.log(x)

    r = kernel.support_radius
    value, _ = integrate.quad(
        lambda y: float(density(kernel, y)) * math.exp(lam * (y - r)),
        -r, r,
        points=kernel.nodes[1:-1],
        epsabs=0.0, epsrel=1e-12,
        limit=max(50, 2 * len(kernel.samples)),
    )
    return math.log(value) + lam * r


def mgf(kernel: KernelSpec, lam: float) -> float:
    """M(lam); +inf when it exceeds the float range."""
    value = log_mgf(kernel, lam)
    return math.exp(value) if value < 709.0 else math.inf


def tail_radius(kernel: KernelSpec, mass_tol: float) -> float:
    """Smallest r with kernel mass outside [-r, r] below mass_tol."""
    if kernel.family == 'gaussian':
        return kernel.sigma * math.sqrt(2.0) * float(special.erfcinv(mass_tol))
    return kernel.support_radius


def discretize(kernel: KernelSpec, h: float,
               mass_tol: Optional[float] = None) -> DiscreteKernel:
    """
    Weights of the kernel on the mesh offsets k*h.

    The Gaussian is point-sampled and renormalized (trapezoid rule, which is
    spectrally accurate for it). Families with kinks or jumps use exact cell
    masses CDF(kh + h/2) - CDF(kh - h/2), which keeps mass on coarse grids.
    A table kernel whose spacing equals h keeps its samples as weights.
    """
    if mass_tol is None:
        mass_tol = settings.IDEWAVE_MASS_TOL
    if not (h > 0 and math.isfinite(h)):
        raise KernelError(f"mesh spacing must be positive, got {h}")
    if not 0 < mass_tol < 1e-3:
        raise KernelError(f"mass_tol must lie in (0, 1e-3), got {mass_tol}")

    radius = tail_radius(kernel, mass_tol)
    cap = settings.IDEWAVE_KERNEL_RADIUS_CAP
    if radius > cap:
        raise KernelError(
            f"kernel too heavy-tailed for grid: radius {radius:.4g} exceeds cap {cap:.4g}"
        )

    if kernel.family == 'gaussian':
        half = int(math.floor(radius / h))
        offsets = np.arange(-half, half + 1) * h
        weights = density(kernel, offsets) * h
    elif (kernel.family == 'table'
          and len(kernel.samples) % 2 == 1
          and math.isclose(h, kernel.spacing, rel_tol=1e-12)):
        weights = np.array(kernel.samples, dtype=float)
    else:
        half = max(0, int(math.ceil(radius / h - 0.5)))
        offsets = np.arange(-half, half + 1) * h
        weights = cdf(kernel, offsets + 0.5 * h) - cdf(kernel, offsets - 0.5 * h)

    weights = 0.5 * (weights + weights[::-1])
    total = weights.sum()
    if total <= 0:
        raise KernelError("kernel discretization produced zero mass")
    weights = weights / total
    weights.setflags(write=False)

    logger.debug(
        "Discretized %s kernel: h=%.4g radius=%.4g weights=%d",
        kernel.family, h, radius, len(weights),
    )
    return DiscreteKernel(weights=weights, spacing=float(h), radius=float(radius))
