"""Config parsing, experiment drivers, graymap I/O, and the CLI."""

import numpy as np
import pytest

from sparserec.cli import main
from sparserec.config import (
    EXPERIMENTS,
    ExperimentConfig,
    default_config,
    dump_config,
    load_config,
    parse_config,
)
from sparserec.harness import (
    read_pgm,
    run_constants,
    run_experiment,
    run_image,
    run_rip_scan,
    run_table1,
    run_table2,
    write_pgm,
)
from sparserec.noisemodel import epsilon_gaussian
from sparserec.rip import stability_constants
from sparserec.solvers import SolverOptions

# Desk-scale settings that keep each driver run well under a second.
MINI_SOLVER = SolverOptions(gap_tolerance=1e-6, barrier_increase=2.0)


def _mini_table_config(tmp_path, **overrides):
    base = dict(experiment="table1", m=64, n=24, k=4, sigmas=(0.01, 0.05),
                trials=2, master_seed=7, output_dir=str(tmp_path),
                solver=MINI_SOLVER)
    base.update(overrides)
    return ExperimentConfig(**base)


# ---------------------------------------------------------------------------
# Config files
# ---------------------------------------------------------------------------

def test_parse_config_minimal_and_lambda_alias():
    cfg = parse_config("[experiment]\nexperiment = table2\nlambda = 3.5\nk = 20\n")
    assert cfg.experiment == "table2"
    assert cfg.lam == 3.5
    assert cfg.k == 20
    assert cfg.m == 1024            # untouched fields keep their defaults
    assert cfg.solver == SolverOptions()


def test_parse_config_sections_routed_to_fields():
    text = """
[experiment]
experiment = rip-scan
m = 16
n = 8
deltas = 0.1, 0.2 0.3

[ensemble]
kind = gaussian_iid
normalize_columns = yes

[noise]
kind = quantize
num_levels = 6

[solver]
gap_tolerance = 1e-5
cg_max_iters = 0
"""
    cfg = parse_config(text)
    assert cfg.deltas == (0.1, 0.2, 0.3)
    assert cfg.ensemble_kind == "gaussian_iid"
    assert cfg.normalize_columns is True
    assert cfg.noise_kind == "quantize"
    assert cfg.num_levels == 6
    assert cfg.solver.gap_tolerance == 1e-5
    assert cfg.solver.cg_max_iters is None      # 0 in a file means automatic


def test_parse_config_rejects_unknown_names():
    with pytest.raises(ValueError, match="unknown config section"):
        parse_config("[mystery]\nx = 1\n")
    with pytest.raises(ValueError, match="unknown key"):
        parse_config("[experiment]\nwidth = 3\n")
    with pytest.raises(ValueError, match="bad value"):
        parse_config("[experiment]\nm = many\n")
    with pytest.raises(ValueError, match="syntax"):
        parse_config("no section header")


def test_config_validation():
    with pytest.raises(ValueError, match="unknown experiment"):
        ExperimentConfig(experiment="tableau")
    with pytest.raises(ValueError, match="trials"):
        ExperimentConfig(trials=0)
    with pytest.raises(ValueError, match="sigma"):
        ExperimentConfig(experiment="table1", sigmas=())
    ExperimentConfig(experiment="constants", sigmas=())   # fine off the tables


def test_dump_config_is_a_parse_fixed_point():
    for name in EXPERIMENTS:
        text = dump_config(default_config(name))
        assert dump_config(parse_config(text)) == text


def test_load_config_round_trip(tmp_path):
    cfg = default_config("image")
    path = tmp_path / "image.cfg"
    path.write_text(dump_config(cfg), encoding="utf-8")
    loaded = load_config(path)
    assert loaded.experiment == "image"
    assert loaded.m == 4096 and loaded.n == 1560
    assert loaded.ensemble_kind == "scrambled_fourier"


def test_default_config_presets():
    t1 = default_config("table1")
    assert (t1.m, t1.n, t1.k, t1.trials) == (1024, 300, 50, 10)
    assert t1.solver.gap_tolerance == 1e-6
    assert t1.solver.barrier_increase == 2.0
    assert default_config("table2").experiment == "table2"
    rs = default_config("rip-scan")
    assert rs.normalize_columns and (rs.n, rs.m) == (8, 16)
    with pytest.raises(ValueError):
        default_config("table3")


# ---------------------------------------------------------------------------
# Recovery tables
# ---------------------------------------------------------------------------

def test_table1_mini_run_artifacts(tmp_path):
    cfg = _mini_table_config(tmp_path)
    result = run_table1(cfg)
    assert len(result.rows) == 2
    assert len(result.records) == 4
    assert result.summary_path.exists() and result.trials_path.exists()
    for row, sigma in zip(result.rows, cfg.sigmas):
        assert row.sigma == sigma
        assert row.epsilon == pytest.approx(epsilon_gaussian(sigma, cfg.n, cfg.lam))
        assert row.trials_converged == row.trials_total == cfg.trials
        assert np.isfinite(row.mean_error) and row.mean_error > 0
    # noise streams must be distinct across (row, trial) pairs
    assert len({r.seed for r in result.records}) == 4
    lines = result.trials_path.read_text().splitlines()
    assert lines[0].startswith("trial,seed,sigma,epsilon")
    assert len(lines) == 5


def test_table1_outputs_deterministic_up_to_wall_time(tmp_path):
    def run(sub):
        cfg = _mini_table_config(tmp_path / sub)
        res = run_table1(cfg)
        summary = res.summary_path.read_text()
        trials = res.trials_path.read_text().splitlines()
        stripped = [trials[0]]
        for ln in trials[1:]:
            f = ln.split(",")
            f[8] = "WALL"
            stripped.append(",".join(f))
        return summary, stripped

    assert run("a") == run("b")


def test_table2_mini_run_uses_compressible_signals(tmp_path):
    cfg = _mini_table_config(tmp_path, experiment="table2", m=64, k=8,
                             sigmas=(0.02,), rate=1.2, const=1.0)
    result = run_table2(cfg)
    assert len(result.rows) == 1
    # a power-law signal is never exactly k-sparse, so the support
    # least-squares fit always leaves a tail error behind
    assert all(r.oracle_error > 1e-6 for r in result.records)
    assert all(r.converged for r in result.records)


# ---------------------------------------------------------------------------
# Graymap I/O
# ---------------------------------------------------------------------------

def test_pgm_round_trip_exact_quantization(tmp_path):
    rng = np.random.default_rng(0)
    img = rng.standard_normal((6, 9))
    path = tmp_path / "t.pgm"
    write_pgm(path, img)
    back = read_pgm(path)
    assert back.shape == (6, 9)
    lo, hi = img.min(), img.max()
    expected = np.clip(np.round((img - lo) * 255.0 / (hi - lo)), 0, 255) / 255.0
    assert np.array_equal(back, expected)


def test_pgm_header_comments_and_bounds(tmp_path):
    path = tmp_path / "c.pgm"
    path.write_bytes(b"P5\n# a comment\n4 2 # trailing\n255\n" + bytes(range(8)))
    img = read_pgm(path)
    assert img.shape == (2, 4)
    assert img[0, 0] == 0.0 and img[1, 3] == pytest.approx(7.0 / 255.0)


def test_pgm_error_cases(tmp_path):
    bad_magic = tmp_path / "p2.pgm"
    bad_magic.write_bytes(b"P2\n2 2\n255\n0 0 0 0\n")
    with pytest.raises(ValueError, match="P5"):
        read_pgm(bad_magic)
    short = tmp_path / "short.pgm"
    short.write_bytes(b"P5\n4 4\n255\n" + bytes(3))
    with pytest.raises(ValueError, match="shorter"):
        read_pgm(short)
    wide = tmp_path / "wide.pgm"
    wide.write_bytes(b"P5\n2 2\n65535\n" + bytes(8))
    with pytest.raises(ValueError, match="maxval"):
        read_pgm(wide)
    with pytest.raises(ValueError, match="2-d"):
        write_pgm(tmp_path / "flat.pgm", np.zeros(4))


def test_pgm_constant_image_writes_zeros(tmp_path):
    path = tmp_path / "flat.pgm"
    write_pgm(path, np.full((3, 3), 7.5))
    assert not read_pgm(path).any()


# ---------------------------------------------------------------------------
# Image experiment
# ---------------------------------------------------------------------------

def _mini_image_config(tmp_path, **overrides):
    base = dict(experiment="image", m=64, n=28, sigmas=(0.01,),
                ensemble_kind="scrambled_fourier", master_seed=5,
                output_dir=str(tmp_path), solver=MINI_SOLVER)
    base.update(overrides)
    return ExperimentConfig(**base)


def test_image_mini_run_artifacts(tmp_path):
    cfg = _mini_image_config(tmp_path)
    result = run_image(cfg)
    assert result.side == 8
    assert [r.noise_kind for r in result.records] == ["gaussian", "quantize"]
    for rec in result.records:
        assert rec.error_bound == pytest.approx(3.0 * (rec.s_term_error + rec.epsilon))
        assert rec.coeff_converged and rec.tv_converged
    for name in ("image_original.pgm", "image_l1_gaussian.pgm", "image_tv_quantize.pgm",
                 "image_pixels_gaussian.csv", "image_metrics.csv"):
        assert (tmp_path / name).exists()
    metrics = result.metrics_path.read_text().splitlines()
    assert metrics[0].startswith("noise,error_norm,epsilon")
    assert len(metrics) == 3
    pixel_lines = (tmp_path / "image_pixels_quantize.csv").read_text().splitlines()
    assert len(pixel_lines) == 1 + cfg.m


def test_image_requires_scrambled_rows(tmp_path):
    with pytest.raises(ValueError, match="scrambled_fourier"):
        run_image(_mini_image_config(tmp_path, ensemble_kind="gaussian_iid"))


def test_image_requires_power_of_two_square(tmp_path):
    with pytest.raises(ValueError, match="power-of-two"):
        run_image(_mini_image_config(tmp_path, m=100, n=30))
    with pytest.raises(ValueError, match="power-of-two"):
        run_image(_mini_image_config(tmp_path, m=36, n=20))


def test_image_path_shape_checks(tmp_path):
    square = tmp_path / "square.pgm"
    write_pgm(square, np.random.default_rng(1).random((8, 8)))
    rect = tmp_path / "rect.pgm"
    write_pgm(rect, np.random.default_rng(1).random((8, 4)))
    with pytest.raises(ValueError, match="does not match"):
        run_image(_mini_image_config(tmp_path, m=256, n=60, image_path=str(square)))
    with pytest.raises(ValueError, match="square"):
        run_image(_mini_image_config(tmp_path, image_path=str(rect)))


def test_image_accepts_custom_scene(tmp_path):
    scene = tmp_path / "scene.pgm"
    write_pgm(scene, np.random.default_rng(2).random((8, 8)))
    result = run_image(_mini_image_config(tmp_path, image_path=str(scene)))
    assert len(result.records) == 2


# ---------------------------------------------------------------------------
# Isometry scan and stability grid
# ---------------------------------------------------------------------------

def test_rip_scan_rows_and_condition_flags(tmp_path):
    cfg = ExperimentConfig(experiment="rip-scan", m=16, n=8, trials=2, s_max=3,
                           ensemble_kind="gaussian_iid", normalize_columns=True,
                           master_seed=3, output_dir=str(tmp_path))
    result = run_rip_scan(cfg)
    assert result.truncated_at is None
    assert len(result.rows) == 3
    first = result.rows[0].split(",")
    assert first[0] == "1" and first[2] == "exhaustive"
    assert first[4] in ("0", "1")      # s=1 has all three deltas it needs
    assert first[5] == ""              # delta_4 was not scanned
    for row in result.rows[1:]:
        f = row.split(",")
        assert f[4] == "" and f[5] == ""
    assert result.csv_path.read_text().splitlines()[0] == \
        "S,delta,method,subsets_examined,exact_condition,stable_condition"


def test_rip_scan_truncates_on_budget(tmp_path):
    cfg = ExperimentConfig(experiment="rip-scan", m=16, n=8, trials=1, s_max=3,
                           budget=20, ensemble_kind="gaussian_iid",
                           normalize_columns=True, output_dir=str(tmp_path))
    result = run_rip_scan(cfg)
    assert result.truncated_at == 2
    assert result.rows[-1] == "2,,budget_exceeded,0,,"
    assert sorted(result.report.entries) == [1]


def test_rip_scan_sampling_avoids_truncation(tmp_path):
    cfg = ExperimentConfig(experiment="rip-scan", m=16, n=8, trials=1, s_max=3,
                           budget=20, num_subsets=5, ensemble_kind="gaussian_iid",
                           normalize_columns=True, output_dir=str(tmp_path))
    result = run_rip_scan(cfg)
    assert result.truncated_at is None
    assert result.report.entries[2].method == "sampled"
    assert result.report.entries[2].subsets_examined == 5


def test_constants_grid_frozen_reference_row(tmp_path):
    cfg = ExperimentConfig(experiment="constants", deltas=(0.2,), ratios=(3,),
                           t0_size=1, output_dir=str(tmp_path))
    result = run_constants(cfg)
    assert result.rows == [
        "3,0.2,0.261971658966,8.81546151164,12.042144371,8.77082136336,1"]
    assert result.csv_path.read_text().splitlines()[0] == \
        "ratio,delta,c_t0_m,c_s,c1_s,c2_s,valid"


def test_constants_grid_matches_direct_evaluation(tmp_path):
    cfg = ExperimentConfig(experiment="constants", deltas=(0.1, 0.9), ratios=(2, 3),
                           t0_size=2, output_dir=str(tmp_path))
    result = run_constants(cfg)
    assert len(result.rows) == 4
    for row, (ratio, delta) in zip(result.rows,
                                   [(2, 0.1), (2, 0.9), (3, 0.1), (3, 0.9)]):
        f = row.split(",")
        sc = stability_constants(2, 2 * ratio, delta, delta)
        assert f[0] == str(ratio)
        assert float(f[1]) == pytest.approx(delta)
        assert int(f[6]) == int(sc.valid)
        if sc.valid:
            assert float(f[3]) == pytest.approx(sc.c_s, rel=1e-11)


def test_run_experiment_dispatch(tmp_path):
    cfg = ExperimentConfig(experiment="constants", output_dir=str(tmp_path))
    result = run_experiment(cfg)
    assert result.csv_path.exists()


# ---------------------------------------------------------------------------
# Command line
# ---------------------------------------------------------------------------

def test_cli_constants_verb(tmp_path, capsys):
    assert main(["constants", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "constants.csv").exists()
    assert "wrote" in capsys.readouterr().out


def test_cli_rip_verb(tmp_path):
    assert main(["rip", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "rip_scan.csv").exists()


def test_cli_experiment_with_config(tmp_path, capsys):
    cfg = ExperimentConfig(experiment="constants", output_dir=str(tmp_path))
    path = tmp_path / "c.cfg"
    path.write_text(dump_config(cfg), encoding="utf-8")
    assert main(["experiment", "constants", "--config", str(path)]) == 0
    assert "constants.csv" in capsys.readouterr().out


def test_cli_experiment_name_mismatch(tmp_path, capsys):
    path = tmp_path / "c.cfg"
    path.write_text(dump_config(ExperimentConfig(experiment="constants")),
                    encoding="utf-8")
    assert main(["experiment", "table1", "--config", str(path)]) == 1
    assert "error:" in capsys.readouterr().err


def test_cli_gen_and_recover_mini(tmp_path, capsys):
    cfg = _mini_table_config(tmp_path / "results", sigmas=(0.02,))
    path = tmp_path / "mini.cfg"
    path.write_text(dump_config(cfg), encoding="utf-8")
    assert main(["gen", "--config", str(path)]) == 0
    out = capsys.readouterr().out
    assert "signal_000.csv" in out and "operator.bin" in out
    assert main(["recover", "--config", str(path)]) == 0
    out = capsys.readouterr().out
    assert "recovery_error," in out
    assert (tmp_path / "results" / "recovered.csv").exists()
    header_line = "objective,residual,duality_gap,newton_iterations,barrier_stages,converged"
    assert header_line in out


def test_cli_recover_rejects_analysis_experiments(tmp_path, capsys):
    path = tmp_path / "c.cfg"
    path.write_text(dump_config(ExperimentConfig(experiment="constants",
                                                 output_dir=str(tmp_path))),
                    encoding="utf-8")
    assert main(["recover", "--config", str(path)]) == 1
    assert "nothing to recover" in capsys.readouterr().err


def test_cli_full_scale_limited_to_image(capsys):
    assert main(["rip", "--full-scale"]) == 1
    assert "image experiment only" in capsys.readouterr().err


def test_cli_seed_and_out_overrides(tmp_path):
    # Substream keys are seed XOR index, so master seeds that differ only
    # inside the column-index bit range yield column-permuted operators --
    # and identical permutation-invariant scans.  Use well-separated seeds.
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    assert main(["rip", "--out", str(out_a), "--seed", "1"]) == 0
    assert main(["rip", "--out", str(out_b), "--seed", "77777"]) == 0
    assert (out_a / "rip_scan.csv").read_text() != (out_b / "rip_scan.csv").read_text()
