"""Command-line front end.

Four commands, all driven by a flat key-value config file with dotted
sections::

    hyperwalk simulate --config run.cfg [--seed S] [--out DIR] [--workers W]
    hyperwalk classify --config run.cfg ...
    hyperwalk validate --config run.cfg ...
    hyperwalk moments  --config run.cfg ...

Config keys (defaults in parentheses; profiles use the mini-language
`const:c`, `powerdecay:c,p` meaning c*min(1, r^-p), or `table:path` with a
two-column r,value CSV relative to the config file):

    command             optional; must match the subcommand when present
    curvature.kind      hyperbolic | euclidean (hyperbolic)
    curvature.k         constant curvature parameter, > 0
    curvature.k_min     pinched lower profile (classify; default const:k)
    curvature.k_max     pinched upper profile (classify; default const:k)
    curvature.d         dimension, integer >= 2
    law.kind            elliptic | box | heavytail | inwardbiased
    law.a, law.b        profiles for elliptic/box
    law.m               heavy-tail exponent, > 3
    law.lambda          heavy-tail activation profile or `auto` (auto)
    law.n               inward-biased strength, > 0
    sim.steps           steps per walk
    sim.walks           number of walks
    sim.seed            master seed (env HYPERWALK_SEED, then --seed override)
    sim.mode            ambient | radialonly (radialonly)
    sim.stride          record stride (max(1, steps // 1000))
    sim.ball_radius     return-ball radius (5.0)
    sim.burn_in         steps ignored before counting returns (steps // 10)
    sim.start_radius    initial radius (0.0)
    sim.escape_radius   escape threshold (100.0)
    grid.start/stop     radius grid range (classify/moments)
    grid.count          number of grid points
    grid.spacing        linear | log (linear)
    classify.theta      slack in the recurrence inequality (0.5)
    classify.epsilon    floor for second-moment screens (0.5)
    classify.r0         tail threshold radius (grid midpoint)
    classify.samples    Monte Carlo samples per grid radius (200000)
    classify.d_min      minimal radius for the ellipticity screen (grid.start)
    out.dir             output directory (`.`; --out overrides)

Exit codes: classify encodes its verdict (0 recurrent, 1 transient,
2 inconclusive); other commands exit 0 on success.  Config/usage errors
exit 3, validation-suite failures exit 4, unexpected errors exit 5.

Every output file starts with a `# key = value` header holding the full
resolved config including the seed; re-running with exactly that config
reproduces the file byte for byte.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .errors import ConfigError, HyperwalkError
from .geometry import CurvatureModel
from .increments import (
    BoxLaw,
    EllipticLaw,
    HeavyTailLaw,
    IncrementLaw,
    InwardBiasedLaw,
    RadialProfile,
    elliptic_moments,
)
from .lamperti import (
    CRIT_EUCLIDEAN,
    ClassificationReport,
    MarginRow,
    Verdict,
    asymptotic_increment_batch,
    classify_constant_curvature,
    classify_elliptic_chain,
    classify_euclidean,
    classify_pinched,
    estimate_moment_functions,
    uniform_ellipticity_transience_check,
    _mc_estimate,
)
from .simulator import MODE_AMBIENT, MODE_RADIAL_ONLY, WalkConfig, run_ensemble
from .validation import run_suites

COMMANDS = ("simulate", "classify", "validate", "moments")

_KNOWN_KEYS = {
    "command",
    "curvature.kind", "curvature.k", "curvature.k_min", "curvature.k_max", "curvature.d",
    "law.kind", "law.a", "law.b", "law.m", "law.lambda", "law.n",
    "sim.steps", "sim.walks", "sim.seed", "sim.mode", "sim.stride",
    "sim.ball_radius", "sim.burn_in", "sim.start_radius", "sim.escape_radius",
    "grid.start", "grid.stop", "grid.count", "grid.spacing",
    "classify.theta", "classify.epsilon", "classify.r0", "classify.samples",
    "classify.d_min",
    "out.dir",
}


@dataclass
class RunConfig:
    """A fully validated run: every field resolved, defaults applied."""

    command: str
    model: CurvatureModel
    law: IncrementLaw
    k_min: Optional[RadialProfile]
    k_max: Optional[RadialProfile]
    pinched: bool
    steps: int
    walks: int
    seed: int
    mode: str
    stride: int
    ball_radius: float
    burn_in: int
    start_radius: float
    escape_radius: float
    grid: Optional[list]
    theta: float
    epsilon: float
    r0: Optional[float]
    samples: int
    d_min: Optional[float]
    out_dir: str
    resolved: list = field(default_factory=list)   # ordered (key, value-string)


def _parse_lines(text: str):
    """Yield (line_no, key, value) for every assignment in the config text."""
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", line=line_no)
        key, value = line.split("=", 1)
        yield line_no, key.strip().lower(), value.strip()


def _parse_float(value, key, line):
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"expected a number, got {value!r}", key=key, line=line) from None


def _parse_int(value, key, line):
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"expected an integer, got {value!r}", key=key, line=line) from None


def _parse_profile(value, base_dir, key, line) -> RadialProfile:
    if ":" not in value:
        raise ConfigError(
            f"expected a profile (const:c | powerdecay:c,p | table:path), got {value!r}",
            key=key, line=line,
        )
    kind, arg = value.split(":", 1)
    kind = kind.strip().lower()
    try:
        if kind == "const":
            return RadialProfile.constant(float(arg))
        if kind == "powerdecay":
            parts = [p.strip() for p in arg.split(",")]
            if len(parts) != 2:
                raise ValueError("powerdecay needs two parameters c,p")
            return RadialProfile.power_decay(float(parts[0]), float(parts[1]))
        if kind == "table":
            path = Path(base_dir) / arg.strip()
            radii, values = [], []
            for raw in path.read_text().splitlines():
                row = raw.split("#", 1)[0].strip()
                if not row:
                    continue
                r_s, v_s = row.split(",", 1)
                radii.append(float(r_s))
                values.append(float(v_s))
            return RadialProfile.table(radii, values)
        raise ValueError(f"unknown profile kind {kind!r}")
    except (ValueError, OSError, HyperwalkError) as exc:
        raise ConfigError(f"bad profile: {exc}", key=key, line=line) from None


def parse_config(text: str, command: str, base_dir: str = ".",
                 seed_override: Optional[int] = None,
                 out_override: Optional[str] = None) -> RunConfig:
    """Parse and validate a config for the given command.

    Unknown keys, duplicates, type mismatches and domain violations are all
    reported with the offending key and line.  Defaults are applied here and
    echoed into RunConfig.resolved so output headers document them.
    """
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    seen = {}
    lines = {}
    for line_no, key, value in _parse_lines(text):
        if key not in _KNOWN_KEYS:
            raise ConfigError("unknown key", key=key, line=line_no)
        if key in seen:
            raise ConfigError("duplicate key", key=key, line=line_no)
        seen[key] = value
        lines[key] = line_no

    def take(key, default=None, required=False):
        if key in seen:
            return seen[key], lines[key]
        if required:
            raise ConfigError(f"missing required key for {command}", key=key)
        return default, None

    cfg_cmd, _ = take("command")
    if cfg_cmd is not None and cfg_cmd.lower() != command:
        raise ConfigError(
            f"config declares command {cfg_cmd!r} but {command!r} was invoked",
            key="command", line=lines["command"],
        )

    # --- curvature ---------------------------------------------------------
    kind_v, kind_l = take("curvature.kind", default="hyperbolic")
    kind = kind_v.lower()
    if kind not in ("hyperbolic", "euclidean"):
        raise ConfigError(f"expected hyperbolic or euclidean, got {kind_v!r}",
                          key="curvature.kind", line=kind_l)
    needs_model = command != "validate"
    d_v, d_l = take("curvature.d", required=needs_model, default="2")
    d = _parse_int(d_v, "curvature.d", d_l)
    if d < 2:
        raise ConfigError(f"dimension must be >= 2, got {d}", key="curvature.d", line=d_l)

    k = None
    k_min = k_max = None
    pinched = False
    if kind == "hyperbolic" and needs_model:
        k_v, k_l = take("curvature.k", required="curvature.k_min" not in seen)
        if k_v is not None:
            k = _parse_float(k_v, "curvature.k", k_l)
            if not k > 0:
                raise ConfigError(f"curvature parameter must be > 0, got {k}",
                                  key="curvature.k", line=k_l)
        kmin_v, kmin_l = take("curvature.k_min")
        kmax_v, kmax_l = take("curvature.k_max")
        if (kmin_v is None) != (kmax_v is None):
            missing = "curvature.k_max" if kmax_v is None else "curvature.k_min"
            raise ConfigError("k_min and k_max must be given together", key=missing)
        if kmin_v is not None:
            k_min = _parse_profile(kmin_v, base_dir, "curvature.k_min", kmin_l)
            k_max = _parse_profile(kmax_v, base_dir, "curvature.k_max", kmax_l)
            pinched = True
            if k is None:
                k = max(k_min.inf(), 1e-12)  # scalar fallback for moment scaling
        else:
            k_min = RadialProfile.constant(k)
            k_max = RadialProfile.constant(k)
    model = (CurvatureModel.hyperbolic(k, d) if kind == "hyperbolic" and k is not None
             else CurvatureModel.euclidean(d))

    # --- law ---------------------------------------------------------------
    law = None
    if needs_model:
        lk_v, lk_l = take("law.kind", required=True)
        law_kind = lk_v.lower()
        if law_kind in ("elliptic", "box"):
            a_v, a_l = take("law.a", required=True)
            b_v, b_l = take("law.b", required=True)
            a = _parse_profile(a_v, base_dir, "law.a", a_l)
            b = _parse_profile(b_v, base_dir, "law.b", b_l)
            cls = EllipticLaw if law_kind == "elliptic" else BoxLaw
            law = cls(a, b, d)
        elif law_kind == "heavytail":
            m_v, m_l = take("law.m", required=True)
            m = _parse_float(m_v, "law.m", m_l)
            if not m > 3.0:
                raise ConfigError(
                    f"heavy-tail exponent m must exceed 3 so that moments of order "
                    f"p > 2 are finite, got {m}", key="law.m", line=m_l,
                )
            lam_v, lam_l = take("law.lambda", default="auto")
            lam = None
            if lam_v.lower() != "auto":
                lam = _parse_profile(lam_v, base_dir, "law.lambda", lam_l)
            law = HeavyTailLaw(m, d, lam)
        elif law_kind == "inwardbiased":
            n_v, n_l = take("law.n", required=True)
            strength = _parse_float(n_v, "law.n", n_l)
            if not strength > 0:
                raise ConfigError(f"bias strength must be > 0, got {strength}",
                                  key="law.n", line=n_l)
            law = InwardBiasedLaw(strength, d)
        else:
            raise ConfigError(
                f"expected elliptic | box | heavytail | inwardbiased, got {lk_v!r}",
                key="law.kind", line=lk_l,
            )

    # --- simulation --------------------------------------------------------
    needs_sim = command == "simulate"
    steps_v, steps_l = take("sim.steps", required=needs_sim, default="0")
    steps = _parse_int(steps_v, "sim.steps", steps_l)
    walks_v, walks_l = take("sim.walks", required=needs_sim, default="1")
    walks = _parse_int(walks_v, "sim.walks", walks_l)
    seed_v, seed_l = take("sim.seed", required=seed_override is None
                          and "HYPERWALK_SEED" not in os.environ)
    seed = _parse_int(seed_v, "sim.seed", seed_l) if seed_v is not None else 0
    env_seed = os.environ.get("HYPERWALK_SEED")
    if env_seed is not None:
        seed = _parse_int(env_seed, "HYPERWALK_SEED (environment)", None)
    if seed_override is not None:
        seed = seed_override

    mode_v, mode_l = take("sim.mode", default=MODE_RADIAL_ONLY)
    mode = mode_v.lower()
    if mode not in (MODE_AMBIENT, MODE_RADIAL_ONLY):
        raise ConfigError(f"expected ambient or radialonly, got {mode_v!r}",
                          key="sim.mode", line=mode_l)
    stride_v, stride_l = take("sim.stride", default=str(max(1, steps // 1000)))
    stride = _parse_int(stride_v, "sim.stride", stride_l)
    ball_v, ball_l = take("sim.ball_radius", default="5.0")
    ball_radius = _parse_float(ball_v, "sim.ball_radius", ball_l)
    burn_v, burn_l = take("sim.burn_in", default=str(steps // 10))
    burn_in = _parse_int(burn_v, "sim.burn_in", burn_l)
    start_v, start_l = take("sim.start_radius", default="0.0")
    start_radius = _parse_float(start_v, "sim.start_radius", start_l)
    esc_v, esc_l = take("sim.escape_radius", default="100.0")
    escape_radius = _parse_float(esc_v, "sim.escape_radius", esc_l)

    # --- grid / classification --------------------------------------------
    needs_grid = command in ("classify", "moments")
    grid = None
    spacing = "linear"
    if needs_grid:
        gs_v, gs_l = take("grid.start", required=True)
        ge_v, ge_l = take("grid.stop", required=True)
        gc_v, gc_l = take("grid.count", required=True)
        sp_v, sp_l = take("grid.spacing", default="linear")
        g_start = _parse_float(gs_v, "grid.start", gs_l)
        g_stop = _parse_float(ge_v, "grid.stop", ge_l)
        g_count = _parse_int(gc_v, "grid.count", gc_l)
        spacing = sp_v.lower()
        if spacing not in ("linear", "log"):
            raise ConfigError(f"expected linear or log, got {sp_v!r}",
                              key="grid.spacing", line=sp_l)
        if g_count < 1 or g_stop < g_start or g_start < 0:
            raise ConfigError("need 0 <= start <= stop and count >= 1",
                              key="grid.count", line=gc_l)
        if spacing == "log":
            if g_start <= 0:
                raise ConfigError("log spacing needs start > 0", key="grid.start", line=gs_l)
            grid = [float(x) for x in np.geomspace(g_start, g_stop, g_count)]
        else:
            grid = [float(x) for x in np.linspace(g_start, g_stop, g_count)]

    theta_v, theta_l = take("classify.theta", default="0.5")
    theta = _parse_float(theta_v, "classify.theta", theta_l)
    if not theta > 0:
        raise ConfigError(f"theta must be > 0, got {theta}", key="classify.theta", line=theta_l)
    eps_v, eps_l = take("classify.epsilon", default="0.5")
    epsilon = _parse_float(eps_v, "classify.epsilon", eps_l)
    r0_v, r0_l = take("classify.r0")
    r0 = _parse_float(r0_v, "classify.r0", r0_l) if r0_v is not None else None
    samp_v, samp_l = take("classify.samples", default="200000")
    samples = _parse_int(samp_v, "classify.samples", samp_l)
    dmin_v, dmin_l = take("classify.d_min")
    d_min = _parse_float(dmin_v, "classify.d_min", dmin_l) if dmin_v is not None else None

    out_v, _ = take("out.dir", default=".")
    out_dir = out_override if out_override is not None else out_v

    cfg = RunConfig(
        command=command, model=model, law=law, k_min=k_min, k_max=k_max,
        pinched=pinched, steps=steps, walks=walks, seed=seed, mode=mode,
        stride=stride, ball_radius=ball_radius, burn_in=burn_in,
        start_radius=start_radius, escape_radius=escape_radius, grid=grid,
        theta=theta, epsilon=epsilon, r0=r0, samples=samples, d_min=d_min,
        out_dir=out_dir,
    )
    cfg.resolved = _resolve_items(cfg, kind, spacing)
    return cfg


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _resolve_items(cfg: RunConfig, curvature_kind: str, spacing: str) -> list:
    items = [("command", cfg.command)]
    items.append(("curvature.kind", curvature_kind))
    if cfg.model is not None and cfg.model.is_hyperbolic:
        items.append(("curvature.k", _fmt(cfg.model.k)))
    if cfg.k_min is not None and cfg.pinched:
        items.append(("curvature.k_min", cfg.k_min.describe()))
        items.append(("curvature.k_max", cfg.k_max.describe()))
    if cfg.model is not None:
        items.append(("curvature.d", str(cfg.model.d)))
    if cfg.law is not None:
        items.append(("law", cfg.law.describe()))
    items += [
        ("sim.steps", str(cfg.steps)),
        ("sim.walks", str(cfg.walks)),
        ("sim.seed", str(cfg.seed)),
        ("sim.mode", cfg.mode),
        ("sim.stride", str(cfg.stride)),
        ("sim.ball_radius", _fmt(cfg.ball_radius)),
        ("sim.burn_in", str(cfg.burn_in)),
        ("sim.start_radius", _fmt(cfg.start_radius)),
        ("sim.escape_radius", _fmt(cfg.escape_radius)),
    ]
    if cfg.grid is not None:
        items.append(("grid.spacing", spacing))
        items.append(("grid.points", ";".join(_fmt(r) for r in cfg.grid)))
        items += [
            ("classify.theta", _fmt(cfg.theta)),
            ("classify.epsilon", _fmt(cfg.epsilon)),
            ("classify.samples", str(cfg.samples)),
        ]
        if cfg.r0 is not None:
            items.append(("classify.r0", _fmt(cfg.r0)))
        if cfg.d_min is not None:
            items.append(("classify.d_min", _fmt(cfg.d_min)))
    return items


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------

def _header_lines(cfg: RunConfig) -> list:
    lines = [f"# hyperwalk {__version__}"]
    lines += [f"# {key} = {value}" for key, value in cfg.resolved]
    return lines


def _write_csv(path: Path, cfg: RunConfig, columns, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        for line in _header_lines(cfg):
            fh.write(line + "\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_simulate(cfg: RunConfig, workers: int = 1) -> int:
    walk_cfg = WalkConfig(
        model=cfg.model, law=cfg.law, steps=cfg.steps, walks=cfg.walks,
        seed=cfg.seed, mode=cfg.mode, record_stride=cfg.stride,
        ball_radius=cfg.ball_radius, burn_in=cfg.burn_in,
        start_radius=cfg.start_radius, escape_radius=cfg.escape_radius,
    )
    records, stats = run_ensemble(walk_cfg, workers=workers)
    out = Path(cfg.out_dir)
    _write_csv(out / "trajectories.csv", cfg, ("walk_id", "step", "R"),
               ((r.walk_id, step, R) for r in records for step, R in r.radii))
    q = stats.quantiles
    _write_csv(out / "summary.csv", cfg,
               ("walks", "steps", "q5", "q25", "q50", "q75", "q95", "mean_returns",
                "fraction_escaped", "fraction_escaped_hw", "fraction_returned",
                "fraction_returned_hw", "drift", "drift_hw"),
               [(stats.walks, stats.steps, q[5], q[25], q[50], q[75], q[95],
                 stats.mean_returns, stats.fraction_escaped, stats.fraction_escaped_hw,
                 stats.fraction_returned, stats.fraction_returned_hw,
                 stats.drift_estimate, stats.drift_half_width)])
    print(stats.as_text())
    return 0


_ZERO_DRIFT_KINDS = ("elliptic", "box", "heavytail")


def _euclidean_report(cfg: RunConfig) -> ClassificationReport:
    r_max = cfg.grid[-1]
    if cfg.law.kind in ("elliptic", "box"):
        V, U = elliptic_moments(cfg.law.a(r_max), cfg.law.b(r_max), cfg.model.d)
        hw_u = hw_v = 0.0
    else:
        rng = np.random.default_rng(np.random.SeedSequence(entropy=cfg.seed,
                                                           spawn_key=(10_001,)))
        d_rad, t = cfg.law.sample_components_batch(r_max, cfg.samples, rng)
        u_est = _mc_estimate(d_rad ** 2)
        v_est = _mc_estimate(d_rad ** 2 + np.einsum("ij,ij->i", t, t))
        U, hw_u = u_est.value, u_est.half_width
        V, hw_v = v_est.value, v_est.half_width
    # U <= V holds by construction: both come from the same samples (or the
    # same closed forms), and d_rad^2 <= d_tot^2 pointwise
    verdict = classify_euclidean(U, V)
    rows = [
        MarginRow(r_max, "radial-second-moment-U", U, hw_u, 2.0 * U - V, CRIT_EUCLIDEAN),
        MarginRow(r_max, "total-second-moment-V", V, hw_v, 2.0 * U - V, CRIT_EUCLIDEAN),
    ]
    return ClassificationReport(verdict, CRIT_EUCLIDEAN, [(r_max, 2.0 * U - V)],
                                cfg.theta, r_max, rows,
                                ["flat-space rule: recurrent iff 2U > V"])


def classification_report(cfg: RunConfig) -> ClassificationReport:
    """Criterion dispatch for `classify`.

    Euclidean models use the 2U-vs-V rule.  Elliptic laws in constant or
    pinched curvature get the closed-form criterion.  Everything else is
    Monte Carlo: zero-drift laws are screened by the uniform-ellipticity
    transience test first, then the moment criteria decide (pinched when the
    curvature profiles differ, constant-curvature otherwise).
    """
    if not cfg.model.is_hyperbolic:
        return _euclidean_report(cfg)
    rng = np.random.default_rng(np.random.SeedSequence(entropy=cfg.seed, spawn_key=(10_000,)))
    if cfg.law.kind == "elliptic":
        return classify_elliptic_chain(cfg.law.a, cfg.law.b, cfg.k_min, cfg.k_max,
                                       cfg.model.d, cfg.grid, cfg.theta, cfg.r0)
    if cfg.pinched:
        return classify_pinched(cfg.law, cfg.k_min, cfg.k_max, cfg.grid, cfg.samples,
                                rng, cfg.theta, cfg.r0)
    if cfg.law.kind in _ZERO_DRIFT_KINDS:
        d_min = cfg.d_min if cfg.d_min is not None else cfg.grid[0]
        screen = uniform_ellipticity_transience_check(
            cfg.law, cfg.model.k, cfg.epsilon, d_min, cfg.grid, cfg.samples, rng)
        if screen.verdict is Verdict.TRANSIENT:
            return screen
    moments = estimate_moment_functions(cfg.law, cfg.model.k, cfg.grid, cfg.samples, rng)
    return classify_constant_curvature(moments, cfg.grid, cfg.theta, cfg.r0)


def cmd_classify(cfg: RunConfig, workers: int = 1) -> int:
    report = classification_report(cfg)
    _write_csv(Path(cfg.out_dir) / "margins.csv", cfg,
               ("r", "quantity", "estimate", "half_width", "margin", "criterion"),
               ((row.r, row.quantity, row.estimate, row.half_width, row.margin,
                 row.criterion) for row in report.rows))
    print(report.as_text())
    return {Verdict.RECURRENT: 0, Verdict.TRANSIENT: 1, Verdict.INCONCLUSIVE: 2}[report.verdict]


def cmd_validate(cfg: RunConfig, workers: int = 1) -> int:
    results = run_suites(seed=cfg.seed)
    for res in results:
        print(res.line())
    return 0 if all(r.passed for r in results) else 4


def cmd_moments(cfg: RunConfig, workers: int = 1) -> int:
    rng = np.random.default_rng(np.random.SeedSequence(entropy=cfg.seed, spawn_key=(20_000,)))
    k = cfg.model.k if cfg.model.is_hyperbolic else None
    law = cfg.law
    rows = []
    for r in cfg.grid:
        d_rad, t = law.sample_components_batch(r, cfg.samples, rng)
        d_tot_sq = d_rad ** 2 + np.einsum("ij,ij->i", t, t)
        d_tot = np.sqrt(d_tot_sq)

        if law.kind in ("elliptic", "box"):
            ref_tot, ref_rad = elliptic_moments(law.a(r), law.b(r), cfg.model.d)
            ref_mean = 0.0
        elif law.kind == "heavytail":
            ref_tot = (law.m - 1.0) / (law.m - 3.0)
            ref_rad = None
            ref_mean = 0.0
        else:
            N = law.strength
            ref_tot, ref_rad, ref_mean = 16.0 * N * N, 2.0 * N * N, -N

        for arr, name, ref in ((d_tot_sq, "E[d_tot^2]", ref_tot),
                               (d_rad ** 2, "E[d_rad^2]", ref_rad),
                               (d_rad, "E[d_rad]", ref_mean)):
            est = _mc_estimate(arr)
            rows.append((r, name, est.value, est.half_width,
                         "" if ref is None else _fmt(float(ref)), "exact"))
        if k is not None:
            f = asymptotic_increment_batch(k, d_rad, d_tot)
            nu1, nu2 = _mc_estimate(f), _mc_estimate(f ** 2)
            rows.append((r, "nu1", nu1.value, nu1.half_width, "", ""))
            rows.append((r, "nu2", nu2.value, nu2.half_width, "", ""))
            if law.kind == "heavytail":
                lam = law.lambda_at(r)
                trans = _mc_estimate(d_tot_sq - d_rad ** 2)
                bound = 2.0 * law.m * math.exp(-lam)
                rows.append((r, "transverse-second-moment", trans.value,
                             trans.half_width, _fmt(bound), "upper"))
                if k == 1.0:
                    lower = (law.m - 1.0) / (4.0 * (law.m - 2.0) * lam ** (law.m - 2.0))
                    rows.append((r, "nu1-lower-bound", nu1.value, nu1.half_width,
                                 _fmt(lower), "lower"))
    _write_csv(Path(cfg.out_dir) / "moments.csv", cfg,
               ("r", "quantity", "estimate", "half_width", "reference", "bound_kind"),
               rows)
    for row in rows:
        ref = f"  ref {row[4]}" if row[4] else ""
        print(f"r = {row[0]:<10g} {row[1]:<26} {row[2]:.6g} (hw {row[3]:.3g}){ref}")
    return 0


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hyperwalk",
        description="Geodesic random walks on hyperbolic space: simulation and "
                    "recurrence/transience classification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("simulate", "run a walk ensemble and write trajectory/summary CSVs"),
        ("classify", "classify a chain; the exit code encodes the verdict"),
        ("validate", "run the numerical self-check suites"),
        ("moments", "tabulate analytic vs Monte Carlo step moments"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to the config file")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed (beats HYPERWALK_SEED)")
        p.add_argument("--out", default=None, help="output directory override")
        p.add_argument("--workers", type=int, default=1,
                       help="worker processes for ensembles")
    return parser


_DISPATCH = {
    "simulate": cmd_simulate,
    "classify": cmd_classify,
    "validate": cmd_validate,
    "moments": cmd_moments,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 3
    try:
        cfg = parse_config(text, args.command, base_dir=str(Path(args.config).parent),
                           seed_override=args.seed, out_override=args.out)
        return _DISPATCH[args.command](cfg, workers=args.workers)
    except HyperwalkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4
    except Exception as exc:  # pragma: no cover - safety net
        print(f"internal error: {exc!r}", file=sys.stderr)
        return 5


if __name__ == "__main__":
    sys.exit(main())
