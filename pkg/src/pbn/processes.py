"""
Canonical homogeneous processes: Poisson counting, Wiener-Levy and Brownian
motion with drift.

Closed-form pmfs, densities and transition kernels sit next to a seeded path
simulator and an explicit finite-difference solver for the drift-diffusion
equation ``∂ₜP = −μ∂ₓP + D∂ₓₓP``.  With ``D = σ²/2`` the solver reproduces
the Brownian density ``N(μt, σ²t)``.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, PBNError, TimeOrderingError

__all__ = [
    "PoissonSpec",
    "WienerSpec",
    "BrownianSpec",
    "Grid1D",
    "SamplePath",
    "poisson_pmf",
    "poisson_transition",
    "poisson_row",
    "poisson_moments",
    "poisson_generator",
    "gaussian_density",
    "wiener_density",
    "wiener_kernel",
    "brownian_density",
    "brownian_kernel",
    "trapezoid_weights",
    "diffusion_coefficient",
    "diffusion_solve",
    "simulate",
    "write_paths_csv",
]

PMF_FLOOR = 1e-16
STABILITY_LIMIT = 0.5


@dataclass(frozen=True)
class PoissonSpec:
    rate: float

    def __post_init__(self):
        if not self.rate > 0:
            raise PBNError(f"Poisson rate must be positive, got {self.rate!r}")


@dataclass(frozen=True)
class WienerSpec:
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise PBNError(f"volatility must be positive, got {self.sigma!r}")


@dataclass(frozen=True)
class BrownianSpec:
    mu: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise PBNError(f"volatility must be positive, got {self.sigma!r}")


@dataclass(frozen=True, eq=False)
class Grid1D:
    """Uniform 1-D grid with one value per node."""

    x_min: float
    x_max: float
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        if v.size < 3:
            raise ConfigurationError(f"grid needs at least 3 points, got {v.size}")
        if not self.x_max > self.x_min:
            raise ConfigurationError("grid needs x_max > x_min")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, x_min, x_max, n, f):
        x = np.linspace(x_min, x_max, n)
        return cls(x_min, x_max, f(x))

    @property
    def n(self):
        return self.values.size

    @property
    def dx(self):
        return (self.x_max - self.x_min) / (self.n - 1)

    @property
    def x(self):
        return np.linspace(self.x_min, self.x_max, self.n)

    def mass(self):
        """Rectangle-rule integral ``Δx Σ values``."""
        return self.dx * float(self.values.sum())

    def mean(self):
        return self.dx * float(self.x @ self.values) / self.mass()

    def l1_distance(self, other):
        other = np.asarray(getattr(other, "values", other), dtype=float)
        return self.dx * float(np.abs(self.values - other).sum())


@dataclass(frozen=True, eq=False)
class SamplePath:
    times: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    seed: tuple = ()


# ---------------------------------------------------------------------------
# Poisson
# ---------------------------------------------------------------------------


def _check_positive_time(t):
    if not t > 0:
        raise TimeOrderingError(f"time must be positive, got {t!r}")


def _poisson_term(lt, k):
    if k == 0:
        return math.exp(-lt)
    return math.exp(k * math.log(lt) - lt - math.lgamma(k + 1))


def poisson_pmf(spec, k, t):
    """``P(N(t) = k) = (λt)ᵏ e^{−λt} / k!``."""
    if int(k) != k or k < 0:
        raise PBNError(f"count must be a nonnegative integer, got {k!r}")
    _check_positive_time(t)
    return _poisson_term(spec.rate * t, int(k))


def poisson_transition(spec, i, j, t):
    """``p_ij(t)``: ``j − i`` arrivals in time ``t``; zero when ``j < i``."""
    if int(i) != i or int(j) != j or i < 0 or j < 0:
        raise PBNError("states must be nonnegative integers")
    _check_positive_time(t)
    if j < i:
        return 0.0
    return _poisson_term(spec.rate * t, int(j - i))


def _truncation_point(lt):
    """First ``k`` past the mode where the pmf drops below ``PMF_FLOOR``."""
    k = int(math.floor(lt)) + 1
    while _poisson_term(lt, k) >= PMF_FLOOR:
        k += 1
    return k


def poisson_row(spec, i, t):
    """Row ``p_{i,·}(t)`` truncated where terms fall below ``1e-16``.

    Returns ``(j_values, probabilities)``.
    """
    _check_positive_time(t)
    kmax = _truncation_point(spec.rate * t)
    j = np.arange(i, i + kmax + 1)
    p = np.array([poisson_transition(spec, i, jj, t) for jj in j])
    return j, p


def poisson_moments(spec, t):
    """Total mass, mean and variance of the truncated pmf series."""
    _check_positive_time(t)
    lt = spec.rate * t
    k = np.arange(_truncation_point(lt) + 1)
    p = np.array([_poisson_term(lt, int(kk)) for kk in k])
    total = math.fsum(p)
    mean = math.fsum(k * p)
    var = math.fsum((k - mean) ** 2 * p)
    return total, mean, var


def poisson_generator(spec, n_states):
    """Pure-birth rate matrix on ``0..n_states-1`` (top state absorbing)."""
    Q = np.zeros((n_states, n_states))
    for i in range(n_states - 1):
        Q[i, i] = -spec.rate
        Q[i, i + 1] = spec.rate
    return Q


# ---------------------------------------------------------------------------
# Gaussian kernels
# ---------------------------------------------------------------------------


def gaussian_density(x, mean, var):
    x = np.asarray(x, dtype=float)
    out = np.exp(-((x - mean) ** 2) / (2.0 * var)) / np.sqrt(2.0 * np.pi * var)
    return out if out.ndim else float(out)


def wiener_density(spec, x, t):
    """Density of ``W(t)``, ``N(0, tσ²)``."""
    _check_positive_time(t)
    return gaussian_density(x, 0.0, t * spec.sigma**2)


def wiener_kernel(spec, x1, t1, x2, t2):
    """Transition density ``P(x2, t2 | x1, t1)``; depends only on differences."""
    if not t2 > t1:
        raise TimeOrderingError(f"need t2 > t1, got t1={t1!r}, t2={t2!r}")
    dt = t2 - t1
    dx = np.asarray(x2, dtype=float) - x1
    return gaussian_density(dx, 0.0, dt * spec.sigma**2)


def brownian_density(spec, x, t):
    """Density of ``X(t)``, ``N(μt, σ²t)``."""
    _check_positive_time(t)
    return gaussian_density(x, spec.mu * t, t * spec.sigma**2)


def brownian_kernel(spec, x1, t1, x2, t2):
    if not t2 > t1:
        raise TimeOrderingError(f"need t2 > t1, got t1={t1!r}, t2={t2!r}")
    dt = t2 - t1
    dx = np.asarray(x2, dtype=float) - x1
    return gaussian_density(dx, spec.mu * dt, dt * spec.sigma**2)


def trapezoid_weights(n, h):
    w = np.full(n, h)
    w[0] = w[-1] = 0.5 * h
    return w


# ---------------------------------------------------------------------------
# Drift-diffusion PDE
# ---------------------------------------------------------------------------


def diffusion_coefficient(sigma):
    """``D = σ²/2``, the value for which the PDE reproduces ``N(μt, σ²t)``."""
    return 0.5 * sigma**2


def diffusion_solve(init, D, mu=0.0, T=1.0, steps=None):
    """Explicit FTCS solution of ``∂ₜP = −μ∂ₓP + D∂ₓₓP``.

    Parameters
    ----------
    init : Grid1D
        Initial density.  End nodes are held at zero (absorbing).
    D : float
        Diffusion coefficient, must be positive.
    mu : float
        Drift speed.
    T : float
        Final time.
    steps : int, optional
        Number of time steps.  Defaults to the smallest count with
        ``DΔt/Δx² ≤ 0.4``.

    Raises
    ------
    ConfigurationError
        If the step violates ``DΔt/Δx² ≤ 1/2`` or ``μ²Δt ≤ 2D``; the message
        carries a usable step size.
    """
    if not D > 0:
        raise ConfigurationError(f"diffusion coefficient must be positive, got {D!r}")
    if T < 0:
        raise TimeOrderingError(f"final time must be nonnegative, got {T!r}")
    if T == 0:
        return Grid1D(init.x_min, init.x_max, init.values)
    dx = init.dx
    dt_max = STABILITY_LIMIT * dx**2 / D
    if mu != 0:
        dt_max = min(dt_max, 2.0 * D / mu**2)
    if steps is None:
        steps = int(math.ceil(T / (0.8 * dt_max)))
    if steps < 1:
        raise ConfigurationError("need at least one time step")
    dt = T / steps
    if dt > dt_max * (1 + 1e-12):
        raise ConfigurationError(
            f"unstable step dt={dt:.3e}: need dt <= {dt_max:.3e} "
            f"(at least {int(math.ceil(T / dt_max))} steps)"
        )
    r = D * dt / dx**2
    c = mu * dt / (2.0 * dx)
    p = np.array(init.values, dtype=float)
    p[0] = p[-1] = 0.0
    for _ in range(steps):
        left, mid, right = p[:-2], p[1:-1], p[2:]
        p[1:-1] = mid + r * (right - 2.0 * mid + left) - c * (right - left)
    return Grid1D(init.x_min, init.x_max, p)


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------


def _path_rng(seed, index):
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


def _poisson_path(rate, T, rng):
    times = [0.0]
    t = rng.exponential(1.0 / rate)
    while t < T:
        times.append(t)
        t += rng.exponential(1.0 / rate)
    times.append(T)
    counts = np.arange(len(times), dtype=float)
    counts[-1] = counts[-2]
    return np.array(times), counts


def simulate(spec, T, n_paths, seed=42, n_steps=100):
    """Sample paths on ``[0, T]``, reproducible from ``seed``.

    Path ``i`` draws from its own stream seeded by ``(seed, i)``, so any
    subset of paths can be regenerated independently.  Poisson paths record
    every arrival plus the endpoint ``T``; Gaussian paths use ``n_steps``
    uniform increments.
    """
    if not T > 0:
        raise TimeOrderingError(f"horizon must be positive, got {T!r}")
    if n_paths < 1:
        raise PBNError("need at least one path")
    paths = []
    if isinstance(spec, PoissonSpec):
        for i in range(n_paths):
            times, counts = _poisson_path(spec.rate, T, _path_rng(seed, i))
            paths.append(SamplePath(times, counts, (seed, i)))
        return paths
    if isinstance(spec, BrownianSpec):
        mu, sigma = spec.mu, spec.sigma
    elif isinstance(spec, WienerSpec):
        mu, sigma = 0.0, spec.sigma
    else:
        raise TypeError(f"unsupported process spec {type(spec).__name__}")
    if n_steps < 1:
        raise PBNError("need at least one time step")
    times = np.linspace(0.0, T, n_steps + 1)
    dt = T / n_steps
    for i in range(n_paths):
        rng = _path_rng(seed, i)
        inc = rng.normal(mu * dt, sigma * math.sqrt(dt), n_steps)
        values = np.concatenate(([0.0], np.cumsum(inc)))
        paths.append(SamplePath(times, values, (seed, i)))
    return paths


def write_paths_csv(paths, fh):
    """One row per sampled point: ``path_id,t,value``."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["path_id", "t", "value"])
    for i, path in enumerate(paths):
        for t, v in zip(path.times, path.values):
            w.writerow([i, repr(float(t)), repr(float(v))])
