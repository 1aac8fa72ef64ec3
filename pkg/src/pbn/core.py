r"""
Finite sample spaces and the conditional-probability algebra on them.

A :class:`SampleSpace` plays the role of the system P-ket: an ordered set of
outcomes with nonnegative masses summing to one.  Events are plain label
sets, so they keep their meaning when a space is reordered or conditioned.

The central quantity is the P-bracket ``P(A|B) = P(A ∩ B) / P(B)``; every
other operation here (conditioning, Bayes, conditional expectation) is a
rearrangement of it.

Example
-------
>>> die = fair_die()
>>> p_bracket({2, 4, 6}, die.labels, die)
0.5
>>> expectation(Observable.identity(die), die)
3.5
"""

import itertools
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConditioningOnNullError,
    DimensionError,
    NormalizationError,
    PBNError,
    TruncationWarning,
    UnknownIdError,
)

__all__ = [
    "SampleSpace",
    "Observable",
    "ProductSpace",
    "fair_die",
    "probability",
    "p_bracket",
    "condition",
    "bayes",
    "expectation",
    "variance",
    "conditional_expectation",
    "joint_expectation",
    "are_independent",
    "occupation_space",
]

NORMALIZE_TOL = 1e-9
MASS_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SampleSpace:
    """Ordered finite outcome set with probability masses.

    Weights are accepted if they sum to one within ``1e-9`` and are then
    renormalized exactly; anything further off is rejected.
    """

    labels: tuple
    masses: np.ndarray = field(repr=False)

    def __init__(self, labels, masses):
        labels = tuple(labels)
        m = np.array(masses, dtype=float).reshape(-1)
        if len(labels) != m.size:
            raise DimensionError(f"{len(labels)} labels but {m.size} masses")
        if len(set(labels)) != len(labels):
            raise PBNError("sample space labels must be unique")
        if m.size == 0:
            raise PBNError("sample space must have at least one outcome")
        if not np.all(np.isfinite(m)) or np.any(m < 0):
            raise NormalizationError("masses must be finite and nonnegative")
        total = m.sum()
        if abs(total - 1.0) > NORMALIZE_TOL:
            raise NormalizationError(f"masses sum to {total!r}, not 1")
        m = m / total
        m.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "masses", m)
        object.__setattr__(self, "_index", {lab: i for i, lab in enumerate(labels)})

    @classmethod
    def uniform(cls, labels):
        labels = tuple(labels)
        return cls(labels, np.full(len(labels), 1.0 / len(labels)))

    def __len__(self):
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)

    def __contains__(self, label):
        return label in self._index

    def index(self, label):
        try:
            return self._index[label]
        except KeyError:
            raise UnknownIdError(f"unknown outcome {label!r}") from None

    def mass(self, label):
        """Point mass ``P(x|Ω)``."""
        return float(self.masses[self.index(label)])

    def mask(self, event):
        """Boolean mask over outcomes for a label set."""
        out = np.zeros(len(self.labels), dtype=bool)
        for lab in event:
            out[self.index(lab)] = True
        return out

    def to_dict(self):
        return {"labels": list(self.labels), "masses": [float(x) for x in self.masses]}

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(d["labels"], d["masses"])
        except KeyError as exc:
            raise PBNError(f"sample space JSON missing key {exc.args[0]!r}") from None

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True, eq=False)
class Observable:
    """Real-valued random variable, one value per outcome of ``space``."""

    space: SampleSpace
    values: np.ndarray = field(repr=False)

    def __init__(self, space, values):
        v = np.array(values, dtype=float).reshape(-1)
        if v.size != len(space):
            raise DimensionError(
                f"observable has {v.size} values for a space of {len(space)} outcomes"
            )
        v.setflags(write=False)
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, space, f):
        return cls(space, [f(lab) for lab in space.labels])

    @classmethod
    def identity(cls, space):
        """``X|x) = x|x)`` for numeric labels."""
        return cls(space, [float(lab) for lab in space.labels])

    @classmethod
    def constant(cls, space, c):
        return cls(space, np.full(len(space), float(c)))

    def apply(self, f):
        """``f(X)`` as a new observable."""
        return Observable(self.space, [f(v) for v in self.values])


@dataclass(frozen=True, eq=False)
class ProductSpace:
    """Independent product of finite sample spaces.

    Outcomes of the joint space are label tuples; the joint mass of a tuple
    is the product of factor masses.
    """

    factors: tuple

    def __init__(self, factors):
        factors = tuple(factors)
        if not factors:
            raise PBNError("product space needs at least one factor")
        object.__setattr__(self, "factors", factors)

    def __len__(self):
        return len(self.factors)

    def joint(self):
        """Flatten to a single :class:`SampleSpace` over label tuples."""
        labels = list(itertools.product(*(f.labels for f in self.factors)))
        masses = np.ones(1)
        for f in self.factors:
            masses = np.multiply.outer(masses, f.masses).reshape(-1)
        return SampleSpace(labels, masses)

    def lift_event(self, i, event):
        """Cylinder event: outcomes whose ``i``-th coordinate lies in ``event``."""
        event = set(event)
        for lab in event:
            self.factors[i].index(lab)
        return {
            t for t in itertools.product(*(f.labels for f in self.factors)) if t[i] in event
        }

    def lift_observable(self, i, obs, joint=None):
        """Observable on the joint space that reads factor ``i`` only."""
        joint = joint if joint is not None else self.joint()
        fac = self.factors[i]
        return Observable(joint, [obs.values[fac.index(t[i])] for t in joint.labels])


def fair_die(sides=6):
    """Uniform die with faces ``1..sides``."""
    return SampleSpace.uniform(range(1, sides + 1))


def _event_mass(space, event):
    return float(space.masses[space.mask(event)].sum())


def probability(event, space):
    """Absolute probability ``P(A|Ω)``."""
    return _event_mass(space, event)


def p_bracket(a, b, space):
    """Conditional probability ``P(A|B) = P(A ∩ B) / P(B)``.

    Raises
    ------
    ConditioningOnNullError
        If ``B`` carries zero mass.
    """
    mb = space.mask(b)
    pb = float(space.masses[mb].sum())
    if pb <= 0.0:
        raise ConditioningOnNullError(f"P(B) = 0 for B = {sorted(map(str, b))}")
    pab = float(space.masses[space.mask(a) & mb].sum())
    return pab / pb


def condition(space, b):
    """Restrict ``space`` to the members of ``b`` with masses ``P(x|B)``.

    Outcome order of the original space is preserved.
    """
    mb = space.mask(b)
    pb = float(space.masses[mb].sum())
    if pb <= 0.0:
        raise ConditioningOnNullError("cannot condition on a zero-mass event")
    labels = [lab for lab, keep in zip(space.labels, mb) if keep]
    return SampleSpace(labels, space.masses[mb] / pb)


def bayes(a, b, space):
    """``P(A|B)`` via Bayes' rule ``P(B|A) P(A|Ω) / P(B|Ω)``."""
    pa = probability(a, space)
    pb = probability(b, space)
    if pa <= 0.0 or pb <= 0.0:
        raise ConditioningOnNullError("Bayes' rule needs P(A) > 0 and P(B) > 0")
    return p_bracket(b, a, space) * pa / pb


def _values(f, space):
    if isinstance(f, Observable):
        if len(f.values) != len(space):
            raise DimensionError("observable and space sizes differ")
        if f.space is not space and tuple(f.space.labels) != tuple(space.labels):
            raise DimensionError("observable is defined on a different outcome set")
        return f.values
    v = np.asarray(f, dtype=float).reshape(-1)
    if v.size != len(space):
        raise DimensionError(f"{v.size} values for {len(space)} outcomes")
    return v


def expectation(f, space):
    """``P(Ω|f(X)|Ω) = Σ f(x) m(x)``."""
    return float(np.dot(_values(f, space), space.masses))


def variance(f, space):
    v = _values(f, space)
    mean = float(np.dot(v, space.masses))
    return float(np.dot((v - mean) ** 2, space.masses))


def conditional_expectation(f, h, space):
    """``E[f|H] = Σ f(x) P(x|H)``."""
    v = _values(f, space)
    mh = space.mask(h)
    ph = float(space.masses[mh].sum())
    if ph <= 0.0:
        raise ConditioningOnNullError("cannot condition on a zero-mass event")
    return float(np.dot(v[mh], space.masses[mh]) / ph)


def joint_expectation(fs, ps):
    """``E[X₁ ⋯ Xₙ]`` on an independent product, one observable per factor."""
    fs = list(fs)
    if len(fs) != len(ps.factors):
        raise DimensionError(f"{len(fs)} observables for {len(ps.factors)} factors")
    out = 1.0
    for f, space in zip(fs, ps.factors):
        out *= expectation(f, space)
    return out


def are_independent(a, b, space, tol=1e-12):
    """Check ``P(A ∩ B) = P(A) P(B)`` within ``tol``."""
    pab = float(space.masses[space.mask(a) & space.mask(b)].sum())
    return abs(pab - probability(a, space) * probability(b, space)) <= tol


def occupation_space(pmfs, n_max):
    """Multi-mode occupation basis truncated to ``0..n_max`` per mode.

    Parameters
    ----------
    pmfs : sequence of callables
        ``pmf(n)`` giving the occupation distribution of each mode.
    n_max : int
        Largest retained occupation number.

    Returns
    -------
    (ProductSpace, float)
        The truncated product space (each factor renormalized) and the
        probability mass lost to truncation on the joint space.
    """
    if n_max < 0:
        raise PBNError("n_max must be nonnegative")
    factors = []
    kept = 1.0
    for pmf in pmfs:
        w = np.array([pmf(n) for n in range(n_max + 1)], dtype=float)
        s = float(w.sum())
        if s <= 0.0:
            raise NormalizationError("truncated mode carries no mass")
        kept *= min(s, 1.0)
        factors.append(SampleSpace(range(n_max + 1), w / s))
    lost = 1.0 - kept
    if lost > 1e-10:
        warnings.warn(
            f"occupation truncation at n_max={n_max} drops mass {lost:.3e}",
            TruncationWarning,
            stacklevel=2,
        )
    return ProductSpace(factors), lost
