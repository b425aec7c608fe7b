"""Acceptance criteria, one test per criterion.

Each test prints a single PASS line (with its runtime) on success; pytest -v
plus -s shows them.  Tolerances are pinned here and match the contract the
package ships with; nothing is deferred to later calibration.
"""

import math
import time
import warnings

import numpy as np
import pytest
from scipy import stats

import hyperwalk as hw
from hyperwalk.cli import classification_report, main, parse_config
from hyperwalk.lamperti import MonteCarloVarianceWarning, Verdict
from hyperwalk.simulator import MODE_AMBIENT, MODE_RADIAL_ONLY, WalkConfig
from hyperwalk.validation import (
    suite_exact_radial_increment,
    suite_mode_coupling,
    suite_sandwich_bounds,
)

C1 = hw.RadialProfile.constant(1.0)
B_DECAY = hw.RadialProfile.power_decay(1.0, 1.0)
HYP2 = hw.CurvatureModel.hyperbolic(1.0, 2)


class _Budget:
    def __init__(self, name, seconds):
        self.name = name
        self.seconds = seconds

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, *_):
        self.elapsed = time.perf_counter() - self.t0
        if exc_type is None:
            print(f"ACCEPTANCE {self.name}: PASS ({self.elapsed:.1f}s "
                  f"of {self.seconds:.0f}s budget)")
        else:
            print(f"ACCEPTANCE {self.name}: FAIL after {self.elapsed:.1f}s")
        return False


def test_criterion_1_exact_increment_oracle():
    with _Budget("1 exact-increment-oracle", 5.0) as b:
        res = suite_exact_radial_increment(seed=2026, n=10_000, tol=1e-9)
        assert res.passed, res.detail
        assert res.checked == 10_000
    assert b.elapsed < 5.0


def test_criterion_2_sandwich_and_ratio_monotonicity():
    with _Budget("2 sandwich-bounds", 10.0) as b:
        res = suite_sandwich_bounds(n_lengths=200, n_phis=170, slack=1e-12)
        assert res.passed, res.detail
        assert res.checked >= 100_000
    assert b.elapsed < 10.0


def test_criterion_3_elliptic_moments_at_one_million_samples():
    with _Budget("3 elliptic-moments", 30.0) as b:
        law = hw.EllipticLaw(hw.RadialProfile.constant(2.0), C1, 3)
        rng = np.random.default_rng(301)
        d_rad, t = law.sample_components_batch(1.0, 1_000_000, rng)
        d_tot_sq = d_rad ** 2 + np.einsum("ij,ij->i", t, t)
        for arr, want in ((d_tot_sq, 6.0), (d_rad ** 2, 4.0)):
            se = arr.std(ddof=1) / math.sqrt(arr.size)
            assert abs(arr.mean() - want) <= 3.0 * se, (arr.mean(), want, se)
    assert b.elapsed < 30.0


def test_criterion_4_heavytail_bounds_at_desk_scale():
    with _Budget("4 heavytail-bounds", 60.0) as b:
        m, k, r = 4.0, 1.0, 100.0
        lam = r ** (1.0 / (m - 1.0))
        law = hw.HeavyTailLaw(m, 2)
        assert law.lambda_at(r) == pytest.approx(lam)
        rng = np.random.default_rng(401)
        d_rad, t = law.sample_components_batch(r, 1_000_000, rng)
        d_tot = np.sqrt(d_rad ** 2 + np.einsum("ij,ij->i", t, t))

        trans = d_tot ** 2 - d_rad ** 2
        se_t = trans.std(ddof=1) / math.sqrt(trans.size)
        upper = 2.0 * m * math.exp(-lam)
        assert trans.mean() <= upper + 3.0 * se_t, (trans.mean(), upper)

        with warnings.catch_warnings():
            warnings.simplefilter("ignore", MonteCarloVarianceWarning)
            f = hw.lamperti.asymptotic_increment_batch(k, d_rad, d_tot)
        se_f = f.std(ddof=1) / math.sqrt(f.size)
        lower = (m - 1.0) / (4.0 * (m - 2.0) * lam ** (m - 2.0))
        assert lower == pytest.approx(3.0 / (8.0 * lam ** 2))
        assert f.mean() >= lower - 3.0 * se_f, (f.mean(), lower)

        zd = hw.zero_drift_check(law, r, 200_000, rng)
        assert zd.within_band(4.0), zd.max_abs_z
    assert b.elapsed < 60.0


def test_criterion_5_figure_style_panels():
    with _Budget("5 transient/recurrent/euclidean panels", 300.0) as b:
        # (a) transient panel: constant unit shell escapes and never returns
        cfg = WalkConfig(HYP2, hw.EllipticLaw(C1, C1, 2), steps=5000, walks=200,
                         seed=501, mode=MODE_RADIAL_ONLY, record_stride=500,
                         ball_radius=5.0, burn_in=500, escape_radius=100.0)
        records, _ = hw.run_ensemble(cfg)
        good = sum(1 for rec in records if rec.final_R > 100.0 and rec.returns == 0)
        assert good >= 0.95 * len(records), f"only {good}/200 clean transits"

        # (b) recurrent panel: decaying transverse axis keeps coming back
        cfg = WalkConfig(HYP2, hw.EllipticLaw(C1, B_DECAY, 2), steps=100_000,
                         walks=200, seed=502, mode=MODE_RADIAL_ONLY,
                         record_stride=10_000, ball_radius=5.0, burn_in=10_000,
                         escape_radius=1e18)
        records, _ = hw.run_ensemble(cfg)
        median_returns = float(np.median([rec.returns for rec in records]))
        # regression baseline on this seed: median 90 at first validated run
        assert median_returns >= 10.0, median_returns

        # (c) Euclidean control returns strictly more often than the same law
        # in curvature -1, beyond the combined 99% half-widths
        law = hw.EllipticLaw(hw.RadialProfile.constant(1.2), C1, 2)
        base = dict(law=law, steps=3000, walks=400, seed=503,
                    mode=MODE_RADIAL_ONLY, record_stride=300, ball_radius=5.0,
                    burn_in=300, escape_radius=1e18)
        _, st_euc = hw.run_ensemble(WalkConfig(model=hw.CurvatureModel.euclidean(2), **base))
        _, st_hyp = hw.run_ensemble(WalkConfig(model=HYP2, **base))
        gap = st_euc.fraction_returned - st_hyp.fraction_returned
        combined = st_euc.fraction_returned_hw + st_hyp.fraction_returned_hw
        assert gap > combined, (st_euc.fraction_returned, st_hyp.fraction_returned)
    assert b.elapsed < 300.0


def _cfg_text(law_lines, grid, samples=1_000_000, seed=601):
    start, stop, count = grid
    return (
        "curvature.kind = hyperbolic\ncurvature.k = 1.0\ncurvature.d = 2\n"
        + law_lines
        + f"sim.seed = {seed}\ngrid.start = {start}\ngrid.stop = {stop}\n"
        + f"grid.count = {count}\ngrid.spacing = log\nclassify.samples = {samples}\n"
    )


def test_criterion_6_classifier_agreement():
    with _Budget("6 classifier-agreement", 120.0) as b:
        # the three example chains and their expected conclusions
        cases = [
            (_cfg_text("law.kind = inwardbiased\nlaw.n = 1.0\n", (10, 200, 8),
                       samples=100_000), Verdict.TRANSIENT),
            (_cfg_text("law.kind = heavytail\nlaw.m = 4.0\n", (50, 500, 6)),
             Verdict.TRANSIENT),
            (_cfg_text("law.kind = elliptic\nlaw.a = const:1.0\n"
                       "law.b = powerdecay:1.0,1.0\n", (10, 200, 8)),
             Verdict.RECURRENT),
        ]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", MonteCarloVarianceWarning)
            for text, want in cases:
                rep = classification_report(parse_config(text, "classify"))
                assert rep.verdict is want, (text.splitlines()[3], rep.verdict)

            # pinched with constant profiles never contradicts the
            # constant-curvature criterion across the example suite
            grid = [float(x) for x in np.geomspace(10, 200, 6)]
            grid_ht = [float(x) for x in np.geomspace(50, 500, 6)]
            suite = [
                (hw.InwardBiasedLaw(1.0, 2), grid, 100_000),
                (hw.HeavyTailLaw(4.0, 2), grid_ht, 2_000_000),
                (hw.EllipticLaw(C1, B_DECAY, 2), grid, 200_000),
                (hw.EllipticLaw(C1, C1, 2), grid, 200_000),
                (hw.BoxLaw(C1, C1, 2), grid, 200_000),
            ]
            for law, g, n in suite:
                rng = np.random.default_rng(602)
                mom = hw.estimate_moment_functions(law, 1.0, g, n, rng)
                const_rep = hw.classify_constant_curvature(mom, g)
                rng = np.random.default_rng(603)
                pinched_rep = hw.classify_pinched(law, C1, C1, g, n, rng)
                agree = (const_rep.verdict is pinched_rep.verdict
                         or Verdict.INCONCLUSIVE in (const_rep.verdict,
                                                     pinched_rep.verdict))
                assert agree, (law.kind, const_rep.verdict, pinched_rep.verdict)
    assert b.elapsed < 120.0


def test_criterion_7_mode_equivalence():
    with _Budget("7 mode-equivalence", 60.0) as b:
        res = suite_mode_coupling(seed=701, steps=100, tol=1e-8)
        assert res.passed, res.detail

        base = dict(model=HYP2, law=hw.EllipticLaw(C1, C1, 2), steps=200,
                    walks=10_000, record_stride=200, escape_radius=1e9)
        rec_a, _ = hw.run_ensemble(WalkConfig(mode=MODE_AMBIENT, seed=702, **base),
                                   workers=2)
        rec_r, _ = hw.run_ensemble(WalkConfig(mode=MODE_RADIAL_ONLY, seed=703, **base),
                                   workers=2)
        final_a = [r.final_R for r in rec_a]
        final_r = [r.final_R for r in rec_r]
        ks = stats.ks_2samp(final_a, final_r)
        assert ks.pvalue > 0.01, (ks.statistic, ks.pvalue)
    assert b.elapsed < 60.0


SIM_TEXT = (
    "curvature.kind = hyperbolic\ncurvature.k = 1.0\ncurvature.d = 2\n"
    "law.kind = elliptic\nlaw.a = const:1.0\nlaw.b = const:1.0\n"
    "sim.steps = 500\nsim.walks = 16\nsim.seed = 801\n"
)


def test_criterion_8_byte_determinism(tmp_path, capsys):
    with _Budget("8 byte-determinism", 60.0):
        cfg = tmp_path / "det.cfg"
        cfg.write_text(SIM_TEXT)
        outs = []
        for sub, workers in (("a", "1"), ("b", "1"), ("c", "2")):
            out = tmp_path / sub
            code = main(["simulate", "--config", str(cfg), "--out", str(out),
                         "--workers", workers])
            assert code == 0
            outs.append(out)
        ref_t = (outs[0] / "trajectories.csv").read_bytes()
        ref_s = (outs[0] / "summary.csv").read_bytes()
        for out in outs[1:]:
            assert (out / "trajectories.csv").read_bytes() == ref_t
            assert (out / "summary.csv").read_bytes() == ref_s

        cls = tmp_path / "cls.cfg"
        cls.write_text(_cfg_text("law.kind = elliptic\nlaw.a = const:1.0\n"
                                 "law.b = const:1.0\n", (10, 200, 8)))
        m_bytes = []
        for sub in ("d", "e"):
            out = tmp_path / sub
            code = main(["classify", "--config", str(cls), "--out", str(out)])
            assert code == 1
            m_bytes.append((out / "margins.csv").read_bytes())
        assert m_bytes[0] == m_bytes[1]
        capsys.readouterr()
