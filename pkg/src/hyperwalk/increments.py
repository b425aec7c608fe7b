"""Step-length laws for geodesic random walks.

Each law describes the distribution of the tangent step at a point, in the
orthonormal radial frame: a signed outward radial component plus a transverse
component in the remaining d-1 directions.  Laws are radially symmetric (the
distribution depends on the walker's position only through its radius), so a
law is fully specified by radial parameter profiles plus the dimension.

Two sampling entry points exist per law and are deliberately distinct:

* ``sample_components(r, rng)`` draws one step; the simulator calls this in
  sequence, so ambient and radial-only walks driven by the same stream see
  identical draws.
* ``sample_components_batch(r, n, rng)`` draws n steps with vectorised numpy
  calls for the Monte Carlo estimators.  It consumes the stream differently
  from n scalar calls, but is bit-reproducible for a fixed stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, UsageError
from .geometry import RadialFrame, make_decomposition, IncrementDecomposition, TangentVector

_SQRT3 = math.sqrt(3.0)


# ---------------------------------------------------------------------------
# Radial parameter profiles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RadialProfile:
    """Nonnegative function of the radius.

    Kinds:
      constant   -- c
      powerdecay -- c * min(1, r**-p)
      table      -- linear interpolation through (r, value) pairs, clamped to
                    the end values outside the tabulated range
    """

    kind: str
    c: float = 0.0
    exponent: float = 0.0
    radii: Optional[np.ndarray] = None
    values: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind in ("constant", "powerdecay"):
            if self.c < 0.0:
                raise DomainError(f"profile values must be >= 0, got c = {self.c}")
        elif self.kind == "table":
            r = np.asarray(self.radii, dtype=float)
            v = np.asarray(self.values, dtype=float)
            if r.ndim != 1 or r.shape != v.shape or r.size < 1:
                raise DomainError("table profile needs matching 1-d radii and values")
            if np.any(np.diff(r) <= 0.0):
                raise DomainError("table radii must be strictly increasing")
            if np.any(r < 0.0) or np.any(v < 0.0):
                raise DomainError("table radii and values must be >= 0")
            r, v = r.copy(), v.copy()
            r.flags.writeable = False
            v.flags.writeable = False
            object.__setattr__(self, "radii", r)
            object.__setattr__(self, "values", v)
        else:
            raise DomainError(f"unknown profile kind {self.kind!r}")

    @classmethod
    def constant(cls, c: float) -> "RadialProfile":
        return cls("constant", c=c)

    @classmethod
    def power_decay(cls, c: float, exponent: float) -> "RadialProfile":
        return cls("powerdecay", c=c, exponent=exponent)

    @classmethod
    def table(cls, radii, values) -> "RadialProfile":
        return cls("table", radii=np.asarray(radii, float), values=np.asarray(values, float))

    def __call__(self, r: float) -> float:
        if self.kind == "constant":
            return self.c
        if self.kind == "powerdecay":
            if r <= 0.0:
                return self.c if self.exponent >= 0.0 else 0.0
            return self.c * min(1.0, r ** -self.exponent)
        return float(np.interp(r, self.radii, self.values))

    def sup(self) -> float:
        """Supremum over r >= 0."""
        if self.kind == "constant":
            return self.c
        if self.kind == "powerdecay":
            return self.c  # min(1, r**-p) <= 1 with equality attained
        return float(np.max(self.values))

    def inf(self) -> float:
        """Infimum over r >= 0 (table profiles extend by their end values)."""
        if self.kind == "constant":
            return self.c
        if self.kind == "powerdecay":
            return self.c if self.exponent == 0.0 else 0.0
        return float(np.min(self.values))

    def describe(self) -> str:
        if self.kind == "constant":
            return f"const:{self.c!r}"
        if self.kind == "powerdecay":
            return f"powerdecay:{self.c!r},{self.exponent!r}"
        return "table:<{} points>".format(self.values.size)


# ---------------------------------------------------------------------------
# Law classes
# ---------------------------------------------------------------------------

def _sphere_point(d: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform point on the unit sphere in R^d via normalised Gaussians."""
    while True:
        g = rng.standard_normal(d)
        n = math.sqrt(float(g @ g))
        if n > 1e-12:
            return g / n


def _sphere_batch(d: int, n: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((n, d))
    norms = np.linalg.norm(g, axis=1)
    # a zero draw has probability 0; resample any that still occur
    bad = norms <= 1e-12
    while np.any(bad):
        g[bad] = rng.standard_normal((int(bad.sum()), d))
        norms[bad] = np.linalg.norm(g[bad], axis=1)
        bad = norms <= 1e-12
    return g / norms[:, None]


class IncrementLaw:
    """Base class; concrete laws fill in the sampling and bound methods."""

    kind: str = "abstract"
    d: int
    symmetric: bool = False     # invariant under v -> -v (enables pairing tricks)

    def sample_components(self, r: float, rng: np.random.Generator):
        raise NotImplementedError

    def sample_components_batch(self, r: float, n: int, rng: np.random.Generator):
        raise NotImplementedError

    def step_bound(self) -> float:
        """Almost-sure bound on the step length; inf when unbounded."""
        raise NotImplementedError

    def describe(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class EllipticLaw(IncrementLaw):
    """Uniform measure on an ellipsoid shell with radial semi-axis a(r)*sqrt(d)
    and transverse semi-axes b(r)*sqrt(d).

    Second moments: E[d_tot^2] = a^2 + (d-1) b^2 and E[d_rad^2] = a^2.
    """

    a: RadialProfile
    b: RadialProfile
    d: int
    kind: str = field(default="elliptic", init=False)
    symmetric: bool = field(default=True, init=False)

    def __post_init__(self):
        if self.d < 2:
            raise DomainError(f"dimension must be >= 2, got {self.d}")

    def sample_components(self, r, rng):
        u = _sphere_point(self.d, rng)
        s = math.sqrt(self.d)
        return self.a(r) * s * u[0], self.b(r) * s * u[1:]

    def sample_components_batch(self, r, n, rng):
        u = _sphere_batch(self.d, n, rng)
        s = math.sqrt(self.d)
        return self.a(r) * s * u[:, 0], self.b(r) * s * u[:, 1:]

    def step_bound(self):
        return math.sqrt(self.d) * max(self.a.sup(), self.b.sup())

    def describe(self):
        return f"elliptic(a={self.a.describe()}, b={self.b.describe()}, d={self.d})"


@dataclass(frozen=True)
class BoxLaw(IncrementLaw):
    """Independent uniform components: sqrt(3)*U[-a, a] radially and
    sqrt(3)*U[-b, b] transversally, matching the elliptic second moments.

    Unlike the elliptic shell its support is a solid box, which makes it the
    right law for dense-support hitting experiments.
    """

    a: RadialProfile
    b: RadialProfile
    d: int
    kind: str = field(default="box", init=False)
    symmetric: bool = field(default=True, init=False)

    def __post_init__(self):
        if self.d < 2:
            raise DomainError(f"dimension must be >= 2, got {self.d}")

    def sample_components(self, r, rng):
        h = rng.uniform(-1.0, 1.0, self.d)
        return _SQRT3 * self.a(r) * h[0], _SQRT3 * self.b(r) * h[1:]

    def sample_components_batch(self, r, n, rng):
        h = rng.uniform(-1.0, 1.0, (n, self.d))
        return _SQRT3 * self.a(r) * h[:, 0], _SQRT3 * self.b(r) * h[:, 1:]

    def step_bound(self):
        # circumscribed radius of the box, attained at the corners
        return _SQRT3 * math.sqrt(self.a.sup() ** 2 + (self.d - 1) * self.b.sup() ** 2)

    def describe(self):
        return f"box(a={self.a.describe()}, b={self.b.describe()}, d={self.d})"


def heavytail_inward_offset(y: float, lambda_r: float) -> float:
    """Offset of the inward branch: phi = -1 + offset for steps of length y.

    Zero below the activation length lambda_r; above it equals
    (1 - cosh y + sinh y)/sinh y, computed in the stable form 2q/(1+q) with
    q = e^(-y).
    """
    if y < 1.0 or lambda_r < 1.0:
        raise DomainError(f"need y >= 1 and lambda >= 1, got y={y}, lambda={lambda_r}")
    if y < lambda_r:
        return 0.0
    q = math.exp(-y)
    return 2.0 * q / (1.0 + q)


def heavytail_outward_prob(y: float, lambda_r: float) -> float:
    """Probability of a straight-outward step (phi = 1) for length y.

    Equals (1 - e^-y)/2 above the activation length, else 1/2; the pairing
    with the inward branch makes E[phi | d_tot = y] vanish identically.
    """
    if y < 1.0 or lambda_r < 1.0:
        raise DomainError(f"need y >= 1 and lambda >= 1, got y={y}, lambda={lambda_r}")
    if y < lambda_r:
        return 0.5
    return 0.5 * -math.expm1(-y)


@dataclass(frozen=True)
class HeavyTailLaw(IncrementLaw):
    """Zero-drift law with Pareto step lengths, density (m-1) y^-m on [1, inf).

    Requires m > 3 so that some moment of order p > 2 is finite.  Conditional
    on the length y the walk steps straight outward with probability
    heavytail_outward_prob(y) and otherwise at phi = -1 + offset; the offset
    activates for y >= lambda(r).  Default activation length:
    lambda(r) = max(1, r^(1/(m-1))).
    """

    m: float
    d: int
    lam: Optional[RadialProfile] = None
    kind: str = field(default="heavytail", init=False)
    symmetric: bool = field(default=False, init=False)

    def __post_init__(self):
        if not self.m > 3.0:
            raise DomainError(
                f"heavy-tail exponent m must exceed 3 (finite p > 2 moments), got {self.m}"
            )
        if self.d < 2:
            raise DomainError(f"dimension must be >= 2, got {self.d}")

    def lambda_at(self, r: float) -> float:
        if self.lam is None:
            return max(1.0, r ** (1.0 / (self.m - 1.0))) if r > 0.0 else 1.0
        return max(1.0, self.lam(r))

    def sample_components(self, r, rng):
        u = 1.0 - rng.random()                      # in (0, 1]
        y = u ** (-1.0 / (self.m - 1.0))
        lam = self.lambda_at(r)
        alpha = heavytail_outward_prob(y, lam)
        if rng.random() < alpha:
            phi = 1.0
        else:
            phi = -1.0 + heavytail_inward_offset(y, lam)
        d_rad = phi * y
        t_sq = max(0.0, 1.0 - phi * phi)
        if t_sq == 0.0:
            return d_rad, np.zeros(self.d - 1)
        return d_rad, (y * math.sqrt(t_sq)) * _sphere_point(self.d - 1, rng)

    def sample_components_batch(self, r, n, rng):
        u = 1.0 - rng.random(n)
        y = u ** (-1.0 / (self.m - 1.0))
        lam = self.lambda_at(r)
        q = np.exp(-y)
        active = y >= lam
        offset = np.where(active, 2.0 * q / (1.0 + q), 0.0)
        alpha = np.where(active, 0.5 * (1.0 - q), 0.5)
        outward = rng.random(n) < alpha
        phi = np.where(outward, 1.0, -1.0 + offset)
        d_rad = phi * y
        t_sq = np.where(outward, 0.0, offset * (2.0 - offset))  # 1 - phi^2, stably
        t_mag = y * np.sqrt(t_sq)
        t = t_mag[:, None] * _sphere_batch(self.d - 1, n, rng)
        return d_rad, t

    def step_bound(self):
        return math.inf

    def describe(self):
        lam = "auto" if self.lam is None else self.lam.describe()
        return f"heavytail(m={self.m!r}, lambda={lam}, d={self.d})"


@dataclass(frozen=True)
class InwardBiasedLaw(IncrementLaw):
    """Constant step length 4N with mean radial component -N.

    d_rad is -2N or 0 with equal probability, the rest of the step is
    transverse; despite the inward bias the law is transient in negative
    curvature for large N.
    """

    strength: float
    d: int
    kind: str = field(default="inwardbiased", init=False)
    symmetric: bool = field(default=False, init=False)

    def __post_init__(self):
        if not self.strength > 0:
            raise DomainError(f"bias strength must be > 0, got {self.strength}")
        if self.d < 2:
            raise DomainError(f"dimension must be >= 2, got {self.d}")

    def sample_components(self, r, rng):
        N = self.strength
        d_rad = -2.0 * N if rng.random() < 0.5 else 0.0
        t_mag = math.sqrt(16.0 * N * N - d_rad * d_rad)
        return d_rad, t_mag * _sphere_point(self.d - 1, rng)

    def sample_components_batch(self, r, n, rng):
        N = self.strength
        d_rad = np.where(rng.random(n) < 0.5, -2.0 * N, 0.0)
        t_mag = np.sqrt(16.0 * N * N - d_rad * d_rad)
        t = t_mag[:, None] * _sphere_batch(self.d - 1, n, rng)
        return d_rad, t

    def step_bound(self):
        return 4.0 * self.strength

    def describe(self):
        return f"inwardbiased(N={self.strength!r}, d={self.d})"


@dataclass(frozen=True)
class CustomLaw(IncrementLaw):
    """User-supplied component sampler.

    `sampler(r, d, rng)` must return (d_rad, transverse) like the built-in
    laws.  Declare `radially_symmetric=False` if the sampler depends on more
    than the radius; such laws are rejected by the radial-only simulator.
    """

    sampler: Callable
    d: int
    bound: float = math.inf
    symmetric: bool = False
    radially_symmetric: bool = True
    name: str = "custom"
    kind: str = field(default="custom", init=False)

    def sample_components(self, r, rng):
        return self.sampler(r, self.d, rng)

    def sample_components_batch(self, r, n, rng):
        d_rads = np.empty(n)
        ts = np.empty((n, self.d - 1))
        for i in range(n):
            d_rads[i], ts[i] = self.sampler(r, self.d, rng)
        return d_rads, ts

    def step_bound(self):
        return self.bound

    def describe(self):
        return f"custom({self.name}, d={self.d})"


# ---------------------------------------------------------------------------
# Analytic moments and bounds
# ---------------------------------------------------------------------------

def elliptic_moments(a_val: float, b_val: float, d: int) -> tuple[float, float]:
    """(E[d_tot^2], E[d_rad^2]) = (a^2 + (d-1) b^2, a^2) for elliptic/box laws."""
    if a_val < 0.0 or b_val < 0.0:
        raise DomainError("semi-axes must be >= 0")
    return a_val * a_val + (d - 1) * b_val * b_val, a_val * a_val


def step_length_bound(law: IncrementLaw) -> float:
    """Almost-sure upper bound on d_tot for the law; math.inf when unbounded."""
    return law.step_bound()


# ---------------------------------------------------------------------------
# Frame-attached sampling (TangentSample builders)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TangentSample:
    """A sampled tangent step: the ambient vector plus its decomposition."""

    vector: TangentVector
    decomposition: IncrementDecomposition


def _attach(frame: RadialFrame, d_rad: float, t: np.ndarray) -> TangentSample:
    vec = frame.vector(d_rad, t)
    d_tot = math.sqrt(d_rad * d_rad + float(t @ t))
    if frame.at_origin:
        dec = make_decomposition(d_tot, d_tot)
    else:
        dec = make_decomposition(d_tot, d_rad)
    return TangentSample(vec, dec)


def sample_elliptic(r, frame, a_val, b_val, d, rng) -> TangentSample:
    """One elliptic-law step attached to a radial frame."""
    if a_val < 0.0 or b_val < 0.0:
        raise DomainError("semi-axes must be >= 0")
    law = EllipticLaw(RadialProfile.constant(a_val), RadialProfile.constant(b_val), d)
    d_rad, t = law.sample_components(r, rng)
    return _attach(frame, d_rad, t)


def sample_box(r, frame, a_val, b_val, d, rng) -> TangentSample:
    """One box-law step attached to a radial frame."""
    if a_val < 0.0 or b_val < 0.0:
        raise DomainError("semi-axes must be >= 0")
    law = BoxLaw(RadialProfile.constant(a_val), RadialProfile.constant(b_val), d)
    d_rad, t = law.sample_components(r, rng)
    return _attach(frame, d_rad, t)


def sample_heavytail(r, frame, m, lambda_r, d, rng) -> TangentSample:
    """One heavy-tail step with explicit activation length lambda_r."""
    law = HeavyTailLaw(m, d, RadialProfile.constant(lambda_r))
    d_rad, t = law.sample_components(r, rng)
    return _attach(frame, d_rad, t)


def sample_inward_biased(r, frame, strength, d, rng) -> TangentSample:
    """One inward-biased step of constant length 4*strength."""
    law = InwardBiasedLaw(strength, d)
    d_rad, t = law.sample_components(r, rng)
    return _attach(frame, d_rad, t)


# ---------------------------------------------------------------------------
# Drift diagnostics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ZeroDriftResult:
    """Component-wise mean of sampled steps in the radial frame basis.

    Component 0 is the outward radial coefficient (so an inward-biased law
    shows a negative first component); the rest are transverse.
    """

    mean: np.ndarray
    standard_error: np.ndarray
    n_samples: int

    @property
    def max_abs_z(self) -> float:
        z = 0.0
        for m, s in zip(self.mean, self.standard_error):
            if s > 0.0:
                z = max(z, abs(m) / s)
            elif m != 0.0:
                return math.inf
        return z

    def within_band(self, n_sigma: float = 4.0) -> bool:
        return self.max_abs_z <= n_sigma


def zero_drift_check(law: IncrementLaw, r: float, n_samples: int,
                     rng: np.random.Generator) -> ZeroDriftResult:
    """Sample mean of the step vector at radius r, with standard errors.

    The caller judges the result, conventionally against a 4-sigma band.
    """
    if n_samples < 1000:
        raise UsageError(f"zero_drift_check needs at least 1000 samples, got {n_samples}")
    d_rad, t = law.sample_components_batch(r, n_samples, rng)
    comps = np.column_stack([d_rad, t])
    mean = comps.mean(axis=0)
    sd = comps.std(axis=0, ddof=1)
    return ZeroDriftResult(mean, sd / math.sqrt(n_samples), n_samples)
