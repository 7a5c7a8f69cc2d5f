import subprocess
import sys

import numpy as np
import pytest

from zklab.cli import main
from zklab.config import RunConfig
from zklab.evolution import EvolutionConfig, evolve
from zklab.experiments import (
    Report,
    initial_field,
    mollified_distances,
    pointwise_ladder_start,
    powerlaw_field,
    run_conservation,
    run_generic,
    run_groundstate,
    run_illposed,
    run_norms,
    run_threshold,
    soliton_distance,
    soliton_inner,
    time_derivative,
    traveling_wave_residual,
    witness_points,
    x_centre,
)
from zklab.ground_state import RadialProfile, translate_x
from zklab.io import read_csv, read_snapshot, read_summary, write_snapshot
from zklab.norms import Trajectory
from zklab.propagator import dispersion_symbol
from zklab.spectral import Grid3, RealField, forward_transform

SMALL = dict(n_x=16, n_y1=16, n_y2=16, L_x=4.0, L_y1=4.0, L_y2=4.0)


def small_cfg(**kw):
    base = dict(SMALL, amplitude=0.5, width=1.0, dt=2e-3, T=0.02, diag_every=5)
    base.update(kw)
    return RunConfig(**base)


def cfg_file(tmp_path, cfg):
    path = tmp_path / "run.cfg"
    path.write_text(cfg.echo())
    return path


class TestInitialData:
    def test_powerlaw_mean_free_and_seeded(self):
        g = Grid3.cube(16)
        a = powerlaw_field(g, np.random.default_rng(5), 0.8)
        b = powerlaw_field(g, np.random.default_rng(5), 0.8)
        assert np.array_equal(a.values, b.values)
        assert abs(a.values.mean()) < 1e-15
        c = forward_transform(a).coeffs
        for m in g.nyquist_mask:
            assert np.abs(np.where(m, c, 0.0)).max() < 1e-15 * np.abs(c).max()

    def test_powerlaw_spectrum_slope(self):
        # E|c_k|^2 ~ (1 + |k|)^{-2s-3}: shell averages follow the power law
        g = Grid3.cube(32, np.pi)
        s = 1.0
        c = forward_transform(powerlaw_field(g, np.random.default_rng(0), s)).coeffs
        k = g.kabs
        shells = [(4, 6), (8, 12)]
        means = [np.mean(np.abs(c[(k >= lo) & (k < hi)]) ** 2 * (1 + k[(k >= lo) & (k < hi)]) ** (2 * s + 3))
                 for lo, hi in shells]
        assert means[0] == pytest.approx(means[1], rel=0.2)

    def test_mass_fraction_and_amplitude(self):
        cfg = RunConfig(**SMALL, mass_fraction=0.3)
        u = initial_field(cfg, phi_l2=8.0)
        assert u.l2() == pytest.approx(2.4, rel=1e-13)
        u = initial_field(cfg.with_(amplitude=0.7))
        assert np.abs(u.values).max() == pytest.approx(0.7, rel=1e-14)

    def test_zero_snapshot_unknown(self, tmp_path, rng):
        cfg = RunConfig(**SMALL, initial="zero")
        assert not np.any(initial_field(cfg).values)
        g = cfg.grid()
        vals = rng.standard_normal(g.shape)
        write_snapshot(tmp_path / "u.zkf", RealField(g, vals))
        got = initial_field(cfg.with_(initial="snapshot", initial_path=str(tmp_path / "u.zkf")))
        assert np.array_equal(got.values, vals)
        with pytest.raises(ValueError):
            initial_field(cfg.with_(initial="square"))


class TestDiagnosticsHelpers:
    @pytest.mark.parametrize("shift", [0.0, 1.3, -3.7, 7.5])
    def test_x_centre_tracks_translation(self, shift):
        g = Grid3.cube(32, 8.0)
        x, y1, y2 = g.coords()
        u = RealField(g, np.exp(-(x**2 + y1**2 + y2**2)))
        got = x_centre(translate_x(u, shift))
        expect = (shift + 8.0) % 16.0 - 8.0
        # exact up to aliasing of u^2 on the grid
        assert got == pytest.approx(expect, abs=1e-7)

    def test_traveling_wave_residual(self, gs96):
        assert traveling_wave_residual(gs96.phi, 1.0) < 1e-8
        assert traveling_wave_residual(gs96.phi, 1.5) > 0.1

    def test_time_derivative_matches_short_step(self):
        g = Grid3.cube(16, 4.0)
        x, y1, y2 = g.coords()
        u0 = RealField(g, 0.6 * np.exp(-(x**2 + y1**2 + y2**2)))
        h = 1e-5
        u1 = evolve(u0, EvolutionConfig(dt=h, T=h, diag_every=1)).field_at(-1)
        fd = (u1.values - u0.values) / h
        ut = time_derivative(u0).values
        assert np.abs(fd - ut).max() < 1e-3 * np.abs(ut).max()

    def test_ladder_start(self):
        g = Grid3.cube(16)
        assert pointwise_ladder_start(g, 0.02) == 0.02
        assert pointwise_ladder_start(g) == pytest.approx(0.1 / np.abs(dispersion_symbol(g)).max())

    def test_witness_points(self):
        g = Grid3.cube(8)
        idx = witness_points(g, np.random.default_rng(1), 50)
        assert idx.size == 50 and np.all(np.diff(idx) > 0)
        assert witness_points(g, np.random.default_rng(1), 10**6).size == g.size

    def test_mollified_distances(self, rng):
        g = Grid3.cube(8)
        a, b = Trajectory(g), Trajectory(g)
        for t in (0.0, 0.1):
            v = rng.standard_normal(g.shape)
            a.append(t, v)
            b.append(t, v + 0.5)
        l2, l4 = mollified_distances(a, b)
        assert l2 == pytest.approx(0.5 * np.sqrt(g.volume), rel=1e-13)
        assert l4 == pytest.approx(0.5 * g.volume**0.25, rel=1e-13)
        assert mollified_distances(a, a) == (0.0, 0.0)
        c = Trajectory(g)
        c.append(0.0, np.zeros(g.shape))
        c.append(0.2, np.zeros(g.shape))
        with pytest.raises(ValueError):
            mollified_distances(a, c)


class TestSolitonInner:
    def test_norm_is_speed_independent(self, gs96):
        prof = RadialProfile(gs96)
        for c in (1.0, 3.0):
            assert soliton_inner(prof, c, c, 0.0) == pytest.approx(gs96.l2_norm**2, rel=1e-5)

    def test_symmetry_and_zero_distance(self, gs96):
        prof = RadialProfile(gs96)
        assert soliton_inner(prof, 2.0, 3.0, 0.7) == pytest.approx(soliton_inner(prof, 3.0, 2.0, -0.7), rel=1e-10)
        assert soliton_distance(prof, 2.0, 2.0, 1.0) < 1e-6

    def test_matches_grid_inner_product(self, gs96):
        # brute-force 3D sum on a fine box against the axisymmetric quadrature
        prof = RadialProfile(gs96)
        g = Grid3(128, 96, 96, 8.0, 6.0, 6.0)
        x, y1, y2 = g.coords()
        a, b, sep = 2.0, 3.0, 0.5
        fa = a**0.75 * prof(np.sqrt(a * (x**2 + y1**2 + y2**2)))
        fb = b**0.75 * prof(np.sqrt(b * ((x - sep) ** 2 + y1**2 + y2**2)))
        brute = float(np.sum(fa * fb) * g.cell_volume)
        assert soliton_inner(prof, a, b, sep) == pytest.approx(brute, rel=1e-6)


class TestScenarioRunners:
    def test_report_checks(self):
        rep = Report("x")
        assert rep.passed
        rep.check("a", True)
        rep.check("b", np.bool_(False))
        assert not rep.passed
        items = rep.summary_items()
        assert items["check_b"] is False and items["passed"] is False
        assert items["power_convention"] == "real_cube_root"

    def test_conservation_zero_data_exact(self):
        rep = run_conservation(small_cfg(initial="zero", amplitude=0.0))
        assert rep.summary["mass_drift"] == 0.0
        assert rep.summary["energy_drift"] == 0.0
        assert rep.summary["mean_drift"] == 0.0
        assert rep.passed

    def test_conservation_small_run(self):
        rep = run_conservation(small_cfg(dt=1e-3, T=0.02, mass_tol=1e-6))
        assert rep.summary["mass_drift"] < 1e-6
        header, rows = rep.tables["conservation"]
        assert header == ["t", "mass", "energy", "mean"] and len(rows) == 5

    def test_groundstate_report(self, gs48):
        rep = run_groundstate(RunConfig(gn_trials=12), gs=gs48)
        assert rep.checks["converged"] and rep.checks["gn_trials"] and rep.checks["smallness_identity"]
        assert rep.summary["gn_trials"] == 12
        assert len(rep.tables["gn_trials"][1]) == 12
        assert rep.summary["gn_trial_max"] <= gs48.c_opt * (1 + 1e-3)

    def test_illposed_trends(self, gs96):
        rep = run_illposed(RunConfig(n_values=(1, 2, 3)), gs=gs96)
        rows = rep.tables["illposed"][1]
        ratios = [r[3] for r in rows]
        assert rep.checks["data_distance_decreasing"]
        assert ratios[0] < ratios[1] < ratios[2] < 1

    def test_threshold_subcritical_bounded(self, gs48):
        rep = run_threshold(RunConfig(t_local=0.01, dt=2e-3, diag_every=5, mass_fractions=(0.5, 0.9)), gs=gs48)
        assert rep.checks == {"bounded_0.5": True, "bounded_0.9": True}
        assert rep.summary["T"] == pytest.approx(0.05)

    def test_norms_from_saved_fields(self, tmp_path):
        cfg = small_cfg(out_dir=str(tmp_path), save_fields=True, s_values=(1.0, 1.5))
        run_generic(cfg)
        rep = run_norms(cfg.with_(trajectory_dir=str(tmp_path / "fields")))
        assert rep.summary["n_times"] == 3
        assert [r[2] for r in rep.tables["xst"][1]] == [1.0, 1.5]
        assert len(rep.tables["xtilde"][1]) == 2


class TestCli:
    def test_conservation_outputs(self, tmp_path):
        cfg = small_cfg(scenario="conservation", initial="zero", amplitude=0.0)
        out = tmp_path / "out"
        assert main(["conservation", "--config", str(cfg_file(tmp_path, cfg)), "--out", str(out)]) == 0
        for name in ("config.cfg", "summary.txt", "conservation.csv", "final.zkf"):
            assert (out / name).exists()
        echoed = RunConfig.load(out / "config.cfg")
        assert echoed == cfg.with_(out_dir=str(out))
        summary = read_summary(out / "summary.txt")
        assert summary["passed"] == "true" and summary["duhamel_sign"] == "minus"

    def test_failed_check_exit_code(self, tmp_path):
        cfg = small_cfg(scenario="conservation", mass_tol=0.0)
        assert main(["conservation", "--config", str(cfg_file(tmp_path, cfg)), "--out", str(tmp_path / "o")]) == 1

    def test_config_errors_exit_code(self, tmp_path, capsys):
        bad = tmp_path / "bad.cfg"
        bad.write_text("no_such_key = 3\n")
        assert main(["run", "--config", str(bad)]) == 2
        assert main(["run", "--config", str(tmp_path / "missing.cfg")]) == 2
        assert main(["run", "--seed", "-1", "--out", str(tmp_path / "o")]) == 2
        assert "no_such_key" in capsys.readouterr().err

    def test_deterministic_outputs(self, tmp_path):
        cfg = small_cfg(initial="powerlaw", amplitude=0.3, seed=11)
        path = cfg_file(tmp_path, cfg)
        for d in ("a", "b"):
            assert main(["run", "--config", str(path), "--out", str(tmp_path / d)]) == 0
        for name in ("summary.txt", "diagnostics.csv", "final.zkf"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_seed_changes_data(self, tmp_path):
        cfg = small_cfg(initial="powerlaw", amplitude=0.3)
        path = cfg_file(tmp_path, cfg)
        main(["run", "--config", str(path), "--out", str(tmp_path / "a"), "--seed", "1"])
        main(["run", "--config", str(path), "--out", str(tmp_path / "b"), "--seed", "2"])
        assert (tmp_path / "a" / "final.zkf").read_bytes() != (tmp_path / "b" / "final.zkf").read_bytes()

    def test_resume_matches_uninterrupted_run(self, tmp_path):
        full = small_cfg(T=0.04, diag_every=5)
        assert main(["run", "--config", str(cfg_file(tmp_path, full)), "--out", str(tmp_path / "full")]) == 0
        part_dir = tmp_path / "part"
        part_dir.mkdir()
        assert main(["run", "--config", str(cfg_file(part_dir, full.with_(T=0.02))),
                     "--out", str(tmp_path / "half")]) == 0
        assert main(["run", "--config", str(cfg_file(tmp_path, full)), "--out", str(tmp_path / "resumed"),
                     "--resume", str(tmp_path / "half")]) == 0
        a, ta = read_snapshot(tmp_path / "full" / "final.zkf")
        b, tb = read_snapshot(tmp_path / "resumed" / "final.zkf")
        assert ta == tb and a.values.tobytes() == b.values.tobytes()
        _, rows = read_csv(tmp_path / "resumed" / "diagnostics.csv")
        assert float(rows[0][0]) == pytest.approx(0.02)

    def test_module_entry_point(self, tmp_path):
        proc = subprocess.run([sys.executable, "-m", "zklab.cli", "--help"], capture_output=True, text=True)
        assert proc.returncode == 0
        for name in ("groundstate", "conservation", "soliton", "illposed", "pointwise", "threshold", "norms"):
            assert name in proc.stdout
