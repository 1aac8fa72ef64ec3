"""
Induced diffusion from Wick-rotated Schrödinger dynamics.

Replacing ``it → t`` turns ``−H/ħ`` for a particle of mass ``m`` in a
potential ``V = ħ u`` into the generator

    G = ∂ₓ² / (2 μ_h) − μ_h u(x),    μ_h = m / ħ,

whose free transition density is a Gaussian with diffusion coefficient
``D_h = ħ / (2m)``.  This module builds ``G`` on a grid, evaluates the free
kernel in closed form and by sliced path-integral quadrature, and evolves a
non-Hermitian ``H = H₁ − iH₂`` with commuting symmetric parts.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.special import erfc

from .errors import ConfigurationError, ModelError, NormalizationError, PBNError, TimeOrderingError, TruncationWarning
from .processes import Grid1D, gaussian_density, trapezoid_weights

__all__ = [
    "InducedDiffusion",
    "GridGenerator",
    "KernelSlice",
    "SplitHamiltonian",
    "SplitState",
    "wick_generator",
    "evolve_on_grid",
    "free_kernel",
    "compose_kernels",
    "split_evolve",
    "split_expectation",
]

HALF_WIDTH_SD = 8.0
LOST_MASS_WARN = 1e-10
SYMMETRY_TOL = 1e-12
COMMUTATOR_TOL = 1e-10


@dataclass(frozen=True)
class InducedDiffusion:
    m: float
    hbar: float

    def __post_init__(self):
        if not (self.m > 0 and self.hbar > 0):
            raise PBNError("mass and hbar must both be positive")

    @property
    def mu_h(self):
        return self.m / self.hbar

    @property
    def D_h(self):
        return self.hbar / (2.0 * self.m)


@dataclass(frozen=True, eq=False)
class GridGenerator:
    """Dense matrix form of ``G`` on a grid with absorbing ends."""

    matrix: np.ndarray = field(repr=False)
    grid: Grid1D = field(repr=False)
    params: InducedDiffusion

    @property
    def n(self):
        return self.matrix.shape[0]


def wick_generator(m, hbar, u):
    """Discretize ``G = ∂ₓ²/(2μ_h) − μ_h u(x)`` with a 3-point Laplacian.

    ``u`` is a :class:`Grid1D` of potential values.  Nodes outside the grid
    are treated as zero (Dirichlet), so only the first and last rows lose
    mass.
    """
    params = InducedDiffusion(m, hbar)
    if u.n < 3:
        raise ConfigurationError("grid needs at least 3 points")
    n, dx = u.n, u.dx
    lap = (np.diag(np.full(n - 1, 1.0), -1) + np.diag(np.full(n, -2.0)) + np.diag(np.full(n - 1, 1.0), 1)) / dx**2
    G = lap / (2.0 * params.mu_h) - np.diag(params.mu_h * u.values)
    G.setflags(write=False)
    return GridGenerator(G, u, params)


def evolve_on_grid(gen, values, t):
    """``exp(G t) p`` for a density ``p`` sampled on the generator's grid."""
    if t < 0:
        raise TimeOrderingError(f"time must be nonnegative, got {t!r}")
    p = np.asarray(getattr(values, "values", values), dtype=float)
    if p.size != gen.n:
        raise ConfigurationError(f"state has {p.size} nodes, generator has {gen.n}")
    out = scipy.linalg.expm(gen.matrix * t) @ p
    return Grid1D(gen.grid.x_min, gen.grid.x_max, out)


def free_kernel(m, hbar, x_a, t_a, x_b, t_b):
    """Induced free-particle transition density ``P(x_b, t_b | x_a, t_a)``."""
    if not t_b > t_a:
        raise TimeOrderingError(f"need t_b > t_a, got t_a={t_a!r}, t_b={t_b!r}")
    D = InducedDiffusion(m, hbar).D_h
    return gaussian_density(np.asarray(x_b, dtype=float) - x_a, 0.0, 2.0 * D * (t_b - t_a))


@dataclass(frozen=True)
class KernelSlice:
    """``N`` intermediate integrations splitting ``[t_a, t_b]`` into ``N+1`` steps."""

    n: int
    t_a: float
    t_b: float
    grid_points: int = 200

    def __post_init__(self):
        if self.n < 0:
            raise PBNError("slice count must be nonnegative")
        if not self.t_b > self.t_a:
            raise TimeOrderingError("need t_b > t_a")
        if self.grid_points < 3:
            raise ConfigurationError("quadrature grid needs at least 3 points")

    @property
    def dt(self):
        return (self.t_b - self.t_a) / (self.n + 1)

    @property
    def times(self):
        return self.t_a + self.dt * np.arange(self.n + 2)


def _lost_mass(lo, hi, x, sd):
    """Gaussian tail mass centred at ``x`` that falls outside ``[lo, hi]``."""
    s = math.sqrt(2.0) * sd
    return 0.5 * (erfc((x - lo) / s) + erfc((hi - x) / s))


def compose_kernels(m, hbar, x_a, t_a, x_b, t_b, slices, grid=200, bounds=None):
    """Free kernel rebuilt from ``N+1`` short-time kernels.

    Each of the ``N`` intermediate positions is integrated by the trapezoidal
    rule on a shared uniform grid.  The default grid spans 8 standard
    deviations of the total-time kernel beyond both endpoints.

    Parameters
    ----------
    slices : int or KernelSlice
        Number ``N`` of intermediate integrations.  ``N = 0`` is the closed
        form itself.
    grid : int
        Quadrature nodes (ignored when ``slices`` is a :class:`KernelSlice`).
    bounds : (float, float), optional
        Override the integration window.  A warning reports the estimated
        probability mass lost outside it.
    """
    if isinstance(slices, KernelSlice):
        ks = slices
    else:
        ks = KernelSlice(int(slices), t_a, t_b, grid)
    D = InducedDiffusion(m, hbar).D_h
    if ks.n == 0:
        return float(free_kernel(m, hbar, x_a, t_a, x_b, t_b))
    total_sd = math.sqrt(2.0 * D * (t_b - t_a))
    if bounds is None:
        lo = min(x_a, x_b) - HALF_WIDTH_SD * total_sd
        hi = max(x_a, x_b) + HALF_WIDTH_SD * total_sd
    else:
        lo, hi = bounds
        lost = max(_lost_mass(lo, hi, x_a, total_sd), _lost_mass(lo, hi, x_b, total_sd))
        if lost > LOST_MASS_WARN:
            warnings.warn(
                f"integration window [{lo}, {hi}] is too narrow; estimated lost mass {lost:.3e}",
                TruncationWarning,
                stacklevel=2,
            )
    x = np.linspace(lo, hi, ks.grid_points)
    w = trapezoid_weights(ks.grid_points, (hi - lo) / (ks.grid_points - 1))
    var = 2.0 * D * ks.dt
    v = gaussian_density(x - x_a, 0.0, var)
    if ks.n > 1:
        K = gaussian_density(x[:, None] - x[None, :], 0.0, var)
        for _ in range(ks.n - 1):
            v = K @ (w * v)
    last = gaussian_density(x_b - x, 0.0, var)
    return float(np.dot(last * w, v))


# ---------------------------------------------------------------------------
# Split non-Hermitian Hamiltonian
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SplitHamiltonian:
    """``H = H₁ − iH₂`` with real symmetric, commuting ``H₁`` and ``H₂``.

    Eigenvalues are sorted ascending; eigenvectors are the orthonormal
    columns of ``psi`` (for ``H₁``) and ``phi`` (for ``H₂``).
    """

    H1: np.ndarray = field(repr=False)
    H2: np.ndarray = field(repr=False)
    eps: np.ndarray = field(init=False, repr=False)
    psi: np.ndarray = field(init=False, repr=False)
    lam: np.ndarray = field(init=False, repr=False)
    phi: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        H1 = np.array(self.H1, dtype=float)
        H2 = np.array(self.H2, dtype=float)
        if H1.ndim != 2 or H1.shape[0] != H1.shape[1] or H1.shape != H2.shape:
            raise ModelError(f"H1 {H1.shape} and H2 {H2.shape} must be equal square matrices")
        for name, H in (("H1", H1), ("H2", H2)):
            if np.max(np.abs(H - H.T)) > SYMMETRY_TOL:
                raise ModelError(f"{name} is not symmetric")
        comm = np.linalg.norm(H1 @ H2 - H2 @ H1, np.inf)
        if comm > COMMUTATOR_TOL:
            raise ModelError(f"H1 and H2 do not commute (‖[H1, H2]‖∞ = {comm:.3e})")
        eps, psi = np.linalg.eigh(H1)
        lam, phi = np.linalg.eigh(H2)
        for name, a in (("H1", H1), ("H2", H2), ("eps", eps), ("psi", psi), ("lam", lam), ("phi", phi)):
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def n(self):
        return self.H1.shape[0]


@dataclass(frozen=True, eq=False)
class SplitState:
    """Result of :func:`split_evolve`.

    ``mass_factor`` is the raw ratio ``Σ Ω_t / Σ Ω_0`` before any
    renormalization (``nan`` when the initial sum vanishes).
    """

    psi: np.ndarray = field(repr=False)
    omega: np.ndarray = field(repr=False)
    mass_factor: float
    t: float


def split_evolve(H, hbar, psi0, omega0, t, renormalize=False):
    """Evolve the unitary part and the diffusive part separately.

    ``Ψ_t = exp(−iH₁t/ħ) Ψ_0`` and ``Ω_t = exp(−H₂t/ħ) Ω_0``, both through
    the eigenbases, so an eigenmode ``φ_μ`` of ``H₂`` is scaled by exactly
    ``exp(−λ_μ t/ħ)``.  With ``renormalize=True`` the diffusive part is
    divided by its total mass.
    """
    if not hbar > 0:
        raise PBNError("hbar must be positive")
    if t < 0:
        raise TimeOrderingError(f"time must be nonnegative, got {t!r}")
    psi0 = np.asarray(psi0, dtype=complex).reshape(-1)
    omega0 = np.asarray(omega0, dtype=float).reshape(-1)
    if psi0.size != H.n or omega0.size != H.n:
        raise ModelError("state sizes do not match the Hamiltonian")
    norm = np.vdot(psi0, psi0).real
    if abs(norm - 1.0) > 1e-8:
        raise NormalizationError(f"initial amplitude has squared norm {norm!r}")

    psi_t = H.psi @ (np.exp(-1j * H.eps * t / hbar) * (H.psi.T @ psi0))
    omega_t = H.phi @ (np.exp(-H.lam * t / hbar) * (H.phi.T @ omega0))

    s0 = omega0.sum()
    factor = float(omega_t.sum() / s0) if s0 != 0 else float("nan")
    if renormalize:
        total = omega_t.sum()
        if not total > 0:
            raise ModelError("evolved diffusive state has no positive total mass to renormalize")
        omega_t = omega_t / total
    return SplitState(psi_t, omega_t, factor, float(t))


def split_expectation(H, k, mu):
    """``(ε_k − iλ_μ, √(ε_k² + λ_μ²))`` for eigen-indices ``k`` and ``μ``."""
    if not (0 <= k < H.n and 0 <= mu < H.n):
        raise IndexError(f"eigen-index out of range for a {H.n}-level system")
    e, l = float(H.eps[k]), float(H.lam[mu])
    return complex(e, -l), math.hypot(e, l)
