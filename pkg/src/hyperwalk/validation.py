"""Self-check suites: independent oracles for the numerical kernels.

Each suite checks one closed-form code path against a different route to the
same number (coordinate-level geometry, high-resolution grids, Monte Carlo
moments, coupled simulations).  The CLI `validate` command runs them all and
reports pass/fail per suite; the test suite reuses them at larger sizes.

`fault` injects a deliberate error ("flip-phi-sign") into the formula side of
the radial-increment suite, as a negative control that the oracle actually
bites.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import geometry, increments, lamperti
from .simulator import MODE_AMBIENT, MODE_RADIAL_ONLY, WalkConfig, run_walk, walk_rng


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    checked: int
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        msg = f"{self.name}: {status} ({self.checked} checks)"
        if self.detail:
            msg += f" -- {self.detail}"
        return msg


def _rel_err(a: float, b: float) -> float:
    return abs(a - b) / max(1.0, abs(a), abs(b))


def suite_exact_radial_increment(seed: int = 0, n: int = 10_000,
                                 tol: float = 1e-9,
                                 fault: Optional[str] = None) -> SuiteResult:
    """Radial-increment formula against the coordinate-level oracle.

    Draws random tuples (k in [0.25, 4], R in [0, 20], d_tot in [0, 10],
    phi in [-1, 1]), realises each as an actual point and tangent vector in
    ambient coordinates at a random position, steps through the exponential
    map, and measures the new distance from the origin via the time
    coordinate (which is cancellation-free at any radius).
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    worst_tuple = None
    for i in range(n):
        d = int(rng.integers(2, 5))
        k = rng.uniform(0.25, 4.0)
        R = rng.uniform(0.0, 20.0)
        d_tot = rng.uniform(0.0, 10.0)
        phi = rng.uniform(-1.0, 1.0)

        O = geometry.origin(k, d)
        direction = increments._sphere_point(d, rng)
        u = np.zeros(d + 1)
        u[1:] = direction
        x = geometry.exp_map(O, geometry.TangentVector(O, R * u), k)
        frame = geometry.radial_frame(O, x, k)
        d_rad = phi * d_tot
        t_mag = d_tot * math.sqrt(max(0.0, 1.0 - phi * phi))
        t = t_mag * increments._sphere_point(d - 1, rng)
        v = frame.vector(d_rad, t)
        # exp step with the step length carried through, not re-derived from
        # the (ill-conditioned at large kR) ambient Minkowski square
        if d_tot > 0.0:
            kn = k * d_tot
            y = math.cosh(kn) * x.coords + (math.sinh(kn) / kn) * v.components
        else:
            y = x.coords
        arg = max(k * y[0], 1.0)
        oracle = math.acosh(arg) / k - R

        phi_used = -phi if fault == "flip-phi-sign" else phi
        formula = geometry.radial_increment_exact(R, d_tot, phi_used, k)
        err = _rel_err(formula, oracle)
        if err > worst:
            worst = err
            worst_tuple = (k, R, d_tot, phi)
    passed = worst <= tol
    detail = f"worst rel err {worst:.3e}"
    if not passed:
        detail += f" at (k, R, d_tot, phi) = {worst_tuple}"
    return SuiteResult("exact-radial-increment", passed, n, detail)


def suite_sandwich_bounds(n_lengths: int = 200, n_phis: int = 170,
                          slack: float = 1e-12) -> SuiteResult:
    """Sandwich inequality and ratio monotonicity on a dense grid.

    Checks d_rad + Jmin (d_tot^2 - d_rad^2) <= F <= d_rad + Jmax (...) with
    slack >= -1e-12, and that the ratio function is nonincreasing along every
    phi grid line.
    """
    ks = (0.5, 1.0, 2.0)
    lengths = np.geomspace(1e-3, 20.0, n_lengths)
    phis = np.linspace(-0.999, 0.999, n_phis)
    checked = 0
    worst = 0.0
    worst_where = ""
    mono_ok = True
    for k in ks:
        for d_tot in lengths:
            jmin = lamperti.sandwich_coeff_min(k, d_tot)
            jmax = lamperti.sandwich_coeff_max(k, d_tot)
            d_rad = phis * d_tot
            f = lamperti.asymptotic_increment_batch(k, d_rad, np.full_like(d_rad, d_tot))
            spread = d_tot * d_tot - d_rad * d_rad
            low_gap = float(np.min(f - (d_rad + jmin * spread)))
            high_gap = float(np.min((d_rad + jmax * spread) - f))
            gap = min(low_gap, high_gap)
            if -gap > worst:
                worst = -gap
                worst_where = f"(k={k}, d_tot={d_tot:.4g})"
            g = (f - phis * d_tot) / (1.0 - phis ** 2)
            if np.any(np.diff(g) > 1e-12 * np.maximum(1.0, np.abs(g[:-1]))):
                mono_ok = False
                worst_where = f"ratio not decreasing at (k={k}, d_tot={d_tot:.4g})"
            checked += phis.size
    passed = worst <= slack and mono_ok
    return SuiteResult("sandwich-bounds", passed, checked,
                       f"worst violation {worst:.3e} {worst_where}")


def suite_exp_log_round_trip(seed: int = 1, n: int = 2000, tol: float = 1e-8) -> SuiteResult:
    """exp(x, log(x, y)) = y within relative coordinate error, plus the
    norm-equals-distance identity.

    Pairs are drawn with k*(R_x + R_y) <= 16: the ambient Minkowski pairing
    of two points loses e^(k(R_x+R_y)) * eps of absolute precision, so
    beyond that envelope no double-precision implementation can meet the
    tolerance (a representation limit, not an algorithmic one).
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        d = int(rng.integers(2, 5))
        k = rng.uniform(0.25, 4.0)
        O = geometry.origin(k, d)

        u = np.zeros(d + 1)
        u[1:] = increments._sphere_point(d, rng)
        x = geometry.exp_map(O, geometry.TangentVector(O, rng.uniform(0.0, 4.0 / k) * u), k)
        frame = geometry.radial_frame(O, x, k)
        step = rng.uniform(0.0, min(20.0, 8.0 / k))
        w_dir = increments._sphere_point(d, rng)
        y = geometry.exp_map(x, frame.vector(step * w_dir[0], step * w_dir[1:]), k)

        v = geometry.log_map(x, y, k)
        back = geometry.exp_map(x, v, k)
        scale = max(1.0, float(np.max(np.abs(y.coords))))
        err = float(np.max(np.abs(back.coords - y.coords))) / scale
        err = max(err, _rel_err(v.norm, geometry.distance(x, y, k)))
        worst = max(worst, err)
    return SuiteResult("exp-log-round-trip", worst <= tol, n, f"worst rel err {worst:.3e}")


def suite_mode_coupling(seed: int = 2, steps: int = 100, tol: float = 1e-8) -> SuiteResult:
    """Ambient and radial-only walks driven by the same draws agree step by step."""
    law = increments.EllipticLaw(increments.RadialProfile.constant(0.7),
                                 increments.RadialProfile.constant(0.7), 2)
    model = geometry.CurvatureModel.hyperbolic(1.0, 2)
    base = dict(model=model, law=law, steps=steps, walks=1, seed=seed)
    cfg_a = WalkConfig(mode=MODE_AMBIENT, **base)
    cfg_r = WalkConfig(mode=MODE_RADIAL_ONLY, **base)
    rec_a = run_walk(cfg_a, 0, rng=walk_rng(seed, 0))
    rec_r = run_walk(cfg_r, 0, rng=walk_rng(seed, 0))
    ra = np.array([R for _, R in rec_a.radii])
    rr = np.array([R for _, R in rec_r.radii])
    worst = float(np.max(np.abs(ra - rr) / np.maximum(1.0, np.abs(rr))))
    return SuiteResult("mode-coupling", worst <= tol, steps, f"worst rel err {worst:.3e}")


def suite_moment_identities(seed: int = 3, n: int = 200_000) -> SuiteResult:
    """Monte Carlo second moments of the shell and box laws against the
    closed forms, and the inward-biased radial mean against -N."""
    rng = np.random.default_rng(seed)
    failures = []
    for a, b, d in ((2.0, 1.0, 3), (1.0, 0.5, 2)):
        for cls in (increments.EllipticLaw, increments.BoxLaw):
            law = cls(increments.RadialProfile.constant(a),
                      increments.RadialProfile.constant(b), d)
            d_rad, t = law.sample_components_batch(1.0, n, rng)
            d_tot_sq = d_rad ** 2 + np.einsum("ij,ij->i", t, t)
            want_tot, want_rad = increments.elliptic_moments(a, b, d)
            for got_arr, want, name in ((d_tot_sq, want_tot, "E[d_tot^2]"),
                                        (d_rad ** 2, want_rad, "E[d_rad^2]")):
                se = float(got_arr.std(ddof=1)) / math.sqrt(n)
                if abs(float(got_arr.mean()) - want) > 3.0 * se:
                    failures.append(f"{law.kind} {name} off by > 3 SE")
    law = increments.InwardBiasedLaw(1.5, 3)
    d_rad, _ = law.sample_components_batch(1.0, n, rng)
    se = float(d_rad.std(ddof=1)) / math.sqrt(n)
    if abs(float(d_rad.mean()) + 1.5) > 4.0 * se:
        failures.append("inward-biased mean d_rad not within 4 SE of -N")
    return SuiteResult("moment-identities", not failures, n,
                       "; ".join(failures) if failures else "all within tolerance")


def run_suites(seed: int = 0, fault: Optional[str] = None) -> list:
    """Run every suite; `fault` is forwarded to the radial-increment suite."""
    return [
        suite_exact_radial_increment(seed=seed, fault=fault),
        suite_sandwich_bounds(),
        suite_exp_log_round_trip(seed=seed + 1),
        suite_mode_coupling(seed=seed + 2),
        suite_moment_identities(seed=seed + 3),
    ]
