r"""
Homogeneous Markov chains in discrete and continuous time.

Conventions
-----------
Discrete time uses row vectors: ``u_k = u_0 · P^k``.  Continuous time uses
column masses driven by ``L = Qᵀ``: ``|Ω_t⟩ = exp(L t) |Ω_0⟩``.  The two are
transposes of each other; for a row vector ``u`` the continuous update is
equally ``u · exp(Q t)``, which is what :func:`transition_matrix` returns.

The propagator ``U(t)`` used for the Heisenberg picture is always the
column-convention operator, ``(Pᵀ)^k`` or ``exp(Qᵀ t)``.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (
    DimensionError,
    NegativeMassWarning,
    NonInvertiblePropagatorError,
    NormalizationError,
    PBNError,
    TimeOrderingError,
)

__all__ = [
    "StochasticMatrix",
    "Generator",
    "SystemPKet",
    "dtmc_evolve",
    "ctmc_evolve",
    "transition_matrix",
    "propagator",
    "kolmogorov_forward_residual",
    "kolmogorov_backward_residual",
    "chapman_kolmogorov_check",
    "apd_evolution",
    "heisenberg_observable",
    "heisenberg_expectation",
    "schrodinger_expectation",
    "amplitude_to_mass",
    "row_to_column",
    "column_to_row",
    "fd_step",
]

ROW_TOL = 1e-12
KET_TOL = 1e-10
AMPLITUDE_TOL = 1e-8
CLAMP_TOL = 1e-12


def _square(entries, name):
    a = np.array(entries, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise DimensionError(f"{name} must be a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise PBNError(f"{name} has non-finite entries")
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class StochasticMatrix:
    """Row-stochastic transition matrix, ``p_ij`` = probability of i → j."""

    entries: np.ndarray = field(repr=False)

    def __init__(self, entries, tol=ROW_TOL):
        a = _square(entries, "transition matrix")
        if np.any(a < 0):
            raise PBNError("transition matrix has negative entries")
        dev = np.max(np.abs(a.sum(axis=1) - 1.0))
        if dev > tol:
            raise NormalizationError(f"transition matrix rows deviate from 1 by {dev:.3e}")
        object.__setattr__(self, "entries", a)

    @property
    def n(self):
        return self.entries.shape[0]

    def power(self, k):
        return np.linalg.matrix_power(self.entries, int(k))


@dataclass(frozen=True, eq=False)
class Generator:
    """Rate matrix with nonnegative off-diagonal entries and zero row sums."""

    entries: np.ndarray = field(repr=False)

    def __init__(self, entries, tol=ROW_TOL):
        a = _square(entries, "generator")
        off = a[~np.eye(a.shape[0], dtype=bool)]
        if np.any(off < 0):
            raise PBNError("generator has negative off-diagonal rates")
        dev = np.max(np.abs(a.sum(axis=1)))
        if dev > tol * max(1.0, np.max(np.abs(a))):
            raise NormalizationError(f"generator rows deviate from 0 by {dev:.3e}")
        object.__setattr__(self, "entries", a)

    @property
    def n(self):
        return self.entries.shape[0]

    @property
    def L(self):
        """Column-convention operator ``Qᵀ``."""
        return self.entries.T


@dataclass(frozen=True, eq=False)
class SystemPKet:
    """Probability vector ``m(i, t)`` at time ``t``."""

    masses: np.ndarray = field(repr=False)
    t: float = 0.0

    def __init__(self, masses, t=0.0, tol=KET_TOL):
        m = np.array(masses, dtype=float).reshape(-1)
        if m.size == 0:
            raise DimensionError("empty P-ket")
        if not np.all(np.isfinite(m)):
            raise NormalizationError("P-ket has non-finite masses")
        if np.any(m < -CLAMP_TOL):
            raise NormalizationError(f"P-ket has negative mass {m.min():.3e}")
        m = np.clip(m, 0.0, None)
        total = m.sum()
        if abs(total - 1.0) > tol:
            raise NormalizationError(f"P-ket masses sum to {total!r}, not 1")
        m = m / total
        m.setflags(write=False)
        object.__setattr__(self, "masses", m)
        object.__setattr__(self, "t", float(t))

    @property
    def n(self):
        return self.masses.size

    @classmethod
    def point(cls, n, k, t=0.0):
        m = np.zeros(n)
        m[k] = 1.0
        return cls(m, t)

    @classmethod
    def uniform(cls, n, t=0.0):
        return cls(np.full(n, 1.0 / n), t)


def row_to_column(u):
    """Row-convention distribution as a column ket (same numbers, new shape)."""
    return np.asarray(u, dtype=float).reshape(-1, 1)


def column_to_row(v):
    return np.asarray(v, dtype=float).reshape(1, -1)


def _as_ket(state):
    return state if isinstance(state, SystemPKet) else SystemPKet(state)


def _settle(raw, t):
    """Clamp round-off negatives and renormalize an evolved mass vector."""
    low = raw.min()
    if low < -CLAMP_TOL:
        warnings.warn(
            f"evolved mass {low:.3e} below zero; clamped", NegativeMassWarning, stacklevel=3
        )
    raw = np.clip(raw, 0.0, None)
    return SystemPKet(raw / raw.sum(), t)


def _check_dims(ket, n):
    if ket.n != n:
        raise DimensionError(f"state has {ket.n} entries, chain has {n} states")


def _check_time(t):
    if not np.isfinite(t) or t < 0:
        raise TimeOrderingError(f"time must be nonnegative, got {t!r}")


def dtmc_evolve(u0, P, k):
    """``u_k = u_0 · P^k`` for a discrete-time chain."""
    u0 = _as_ket(u0)
    if not isinstance(P, StochasticMatrix):
        P = StochasticMatrix(P)
    if int(k) != k or k < 0:
        raise TimeOrderingError(f"step count must be a nonnegative integer, got {k!r}")
    _check_dims(u0, P.n)
    u = u0.masses.copy()
    for _ in range(int(k)):
        u = u @ P.entries
    return _settle(u, u0.t + k)


def transition_matrix(Q, t):
    """``P(t) = exp(Q t)``, row-stochastic with ``P(0) = I``."""
    if not isinstance(Q, Generator):
        Q = Generator(Q)
    _check_time(t)
    if t == 0:
        return StochasticMatrix(np.eye(Q.n))
    Pt = _expm(Q.entries, t)
    Pt = np.clip(Pt, 0.0, None)
    Pt /= Pt.sum(axis=1, keepdims=True)
    return StochasticMatrix(Pt)


def _expm(A, t):
    # scipy's expm: Pade-13 with scaling and squaring.
    return scipy.linalg.expm(np.asarray(A, dtype=float) * t)


def ctmc_evolve(omega0, Q, t):
    """Solve the master equation ``d|Ω_t⟩/dt = Qᵀ |Ω_t⟩`` from ``omega0``."""
    omega0 = _as_ket(omega0)
    if not isinstance(Q, Generator):
        Q = Generator(Q)
    _check_time(t)
    _check_dims(omega0, Q.n)
    if t == 0:
        return SystemPKet(omega0.masses, omega0.t)
    out = _expm(Q.L, t) @ omega0.masses
    return _settle(out, omega0.t + t)


def propagator(chain, t):
    """Column-convention evolution operator ``U(t)``.

    ``(Pᵀ)^k`` for a :class:`StochasticMatrix` (``t`` an integer step count)
    and ``exp(Qᵀ t)`` for a :class:`Generator`.
    """
    if isinstance(chain, StochasticMatrix):
        if int(t) != t or t < 0:
            raise TimeOrderingError("discrete-time propagator needs an integer step count")
        return np.linalg.matrix_power(chain.entries.T, int(t))
    if isinstance(chain, Generator):
        _check_time(t)
        return _expm(chain.L, t)
    raise TypeError(f"expected StochasticMatrix or Generator, got {type(chain).__name__}")


def fd_step(t):
    """Finite-difference step used by the derivative checks."""
    return 1e-5 * max(1.0, abs(t))


def _central_derivative(Q, t, h):
    return (_expm(Q, t + h) - _expm(Q, t - h)) / (2.0 * h)


def kolmogorov_forward_residual(Q, t, h=None):
    """``‖P'(t) − P(t) Q‖∞`` with ``P'`` from a central difference."""
    Qa = Q.entries if isinstance(Q, Generator) else Generator(Q).entries
    _check_time(t)
    h = fd_step(t) if h is None else h
    dP = _central_derivative(Qa, t, h)
    return float(np.linalg.norm(dP - _expm(Qa, t) @ Qa, np.inf))


def kolmogorov_backward_residual(Q, t, h=None):
    """``‖P'(t) − Q P(t)‖∞`` with ``P'`` from a central difference."""
    Qa = Q.entries if isinstance(Q, Generator) else Generator(Q).entries
    _check_time(t)
    h = fd_step(t) if h is None else h
    dP = _central_derivative(Qa, t, h)
    return float(np.linalg.norm(dP - Qa @ _expm(Qa, t), np.inf))


def chapman_kolmogorov_check(chain, a, b):
    """Largest deviation from the semigroup law.

    For a :class:`StochasticMatrix` with step counts ``a = m``, ``b = n``:
    ``‖P^{m+n} − P^m P^n‖∞``.  For a :class:`Generator` with times
    ``a = s``, ``b = t``: ``‖P(t+s) − P(s) P(t)‖∞``.
    """
    if isinstance(chain, StochasticMatrix):
        m, n = int(a), int(b)
        if m < 0 or n < 0 or m != a or n != b:
            raise TimeOrderingError("step counts must be nonnegative integers")
        lhs = chain.power(m + n)
        rhs = chain.power(m) @ chain.power(n)
    elif isinstance(chain, Generator):
        _check_time(a)
        _check_time(b)
        lhs = _expm(chain.entries, a + b)
        rhs = _expm(chain.entries, a) @ _expm(chain.entries, b)
    else:
        raise TypeError(f"expected StochasticMatrix or Generator, got {type(chain).__name__}")
    return float(np.linalg.norm(lhs - rhs, np.inf))


def apd_evolution(p0, chain, t):
    """Absolute distribution ``P(i, t) = Σ_k p₀(k) P_{ki}(t)``.

    Built from the transition matrix rather than by stepping the state, so it
    is an independent route to the same answer as the evolve functions.
    """
    p0 = _as_ket(p0)
    if isinstance(chain, StochasticMatrix):
        _check_dims(p0, chain.n)
        if int(t) != t or t < 0:
            raise TimeOrderingError("discrete-time chain needs an integer step count")
        Pt = chain.power(int(t))
    elif isinstance(chain, Generator):
        _check_dims(p0, chain.n)
        _check_time(t)
        Pt = transition_matrix(chain, t).entries
    else:
        raise TypeError(f"expected StochasticMatrix or Generator, got {type(chain).__name__}")
    out = np.zeros(p0.n)
    for k in range(p0.n):
        out += p0.masses[k] * Pt[k]
    return _settle(out, p0.t + t)


def _diag_values(X, n):
    x = np.asarray(getattr(X, "values", X), dtype=float).reshape(-1)
    if x.size != n:
        raise DimensionError(f"observable has {x.size} values for {n} states")
    return x


def heisenberg_observable(X, chain, t):
    """``X(t) = U⁻¹(t) X U(t)`` as a dense matrix."""
    U = propagator(chain, t)
    x = _diag_values(X, U.shape[0])
    if isinstance(chain, StochasticMatrix):
        cond = np.linalg.cond(U)
        if not np.isfinite(cond) or cond > 1e12:
            raise NonInvertiblePropagatorError(
                f"propagator is singular (condition number {cond:.3e})"
            )
        Uinv = np.linalg.inv(U)
    else:
        # exp(Lt) is invertible with inverse exp(-Lt)
        Uinv = _expm(chain.L, -t)
    return Uinv @ (x[:, None] * U)


def heisenberg_expectation(X, chain, t, omega0):
    """``P(Ω| X(t) |Ω_0)`` with the time dependence carried by the observable.

    Conservation of mass gives ``P(Ω|U⁻¹ = P(Ω|``, so the bra ``P(Ω|X(t)`` is
    the observable evolved by the backward equation, ``x(t) = Uᵀx``.  This
    avoids forming ``U⁻¹``, whose entries grow like ``exp(|λ|t)`` and would
    cancel catastrophically in the full product.
    """
    omega0 = _as_ket(omega0)
    U = propagator(chain, t)
    x = _diag_values(X, U.shape[0])
    _check_dims(omega0, U.shape[0])
    if isinstance(chain, StochasticMatrix):
        heisenberg_observable(X, chain, t)  # same invertibility contract
    return float((U.T @ x) @ omega0.masses)


def schrodinger_expectation(X, chain, t, omega0):
    """``P(Ω| X |Ω_t)`` with the state evolved forward."""
    omega0 = _as_ket(omega0)
    if isinstance(chain, StochasticMatrix):
        state = dtmc_evolve(omega0, chain, t)
    else:
        state = ctmc_evolve(omega0, chain, t)
    x = _diag_values(X, state.n)
    return float(x @ state.masses)


def amplitude_to_mass(c, tol=AMPLITUDE_TOL):
    """Map amplitudes ``c(i, t)`` to masses ``|c(i, t)|²``; phases drop out."""
    c = np.asarray(c, dtype=complex).reshape(-1)
    m = c.real**2 + c.imag**2
    total = m.sum()
    if abs(total - 1.0) > tol:
        raise NormalizationError(f"amplitudes have squared norm {total!r}, not 1")
    return SystemPKet(m / total)
