import hashlib
import json
import os

import numpy as np
import pytest
import scipy.io

from deltasqueeze import cli
from deltasqueeze.fem import ResolutionError
from deltasqueeze.lab import (
    ConfigError,
    cusp_network,
    network_from_spec,
    run_convergence,
    run_cusp,
    run_spectrum,
    run_stargraph,
    run_wedge,
)


def small_convergence_cfg(**over):
    cfg = {
        "seed": 11,
        "mesh": {"box": [[-2.0, 2.0], [-2.0, 2.0]], "h": 1.0 / 16.0},
        "network": {
            "beta_cap": 1.0,
            "segments": [{"kind": "line", "p0": [-1.0, 0.0], "p1": [1.0, 0.0]}],
        },
        "alpha": -5.0,
        "eps_grid": [0.5, 0.35, 0.25],
    }
    cfg.update(over)
    return cfg


# ------------------------------------------------------------- convergence


def test_convergence_run_basic():
    report, status = run_convergence(small_convergence_cfg())
    assert report["lam_delta"] < 0.0
    assert all(n > 0 for n in report["res_norms"])
    assert report["self_check"]["pass"]
    assert report["shift"] < report["lam_delta"]
    assert report["shift_verified_below_all_pencils"]
    assert report["norm_fit"] is not None
    assert report["beta"] == 1.0
    assert "mesh" in report and report["mesh"]["h"] == 1.0 / 16.0


def test_convergence_single_eps_flagged_insufficient():
    report, status = run_convergence(
        small_convergence_cfg(eps_grid=[0.5], seed=3)
    )
    assert report["norm_fit"] is None
    assert report["flags"].get("insufficient_points_for_fit")
    assert status == 2


def test_convergence_validates_grid_and_resolution():
    with pytest.raises(ConfigError):
        run_convergence(small_convergence_cfg(eps_grid=[0.25, 0.35]))
    with pytest.raises(ConfigError):
        run_convergence(
            small_convergence_cfg(eps_grid=[0.5, 0.35, 0.2])  # h > eps/4
        )
    with pytest.raises(ConfigError):
        run_convergence(small_convergence_cfg(eps_grid=[1.5, 1.0, 0.5]))


def test_convergence_reports_are_bit_reproducible(tmp_path):
    cfg = small_convergence_cfg(out=str(tmp_path / "a"))
    rep_a, _ = run_convergence(cfg)
    cfg_b = small_convergence_cfg(out=str(tmp_path / "b"))
    rep_b, _ = run_convergence(cfg_b)
    csv_a = (tmp_path / "a" / "data.csv").read_bytes()
    csv_b = (tmp_path / "b" / "data.csv").read_bytes()
    assert csv_a == csv_b
    assert rep_a["csv_sha256"] == rep_b["csv_sha256"]
    assert hashlib.sha256(csv_a).hexdigest() == rep_a["csv_sha256"]
    assert (tmp_path / "a" / "strengths.csv").exists()


def test_convergence_threads_match_serial():
    rep1, _ = run_convergence(small_convergence_cfg())
    rep2, _ = run_convergence(small_convergence_cfg(threads=2))
    assert rep1["res_norms"] == rep2["res_norms"]
    assert rep1["lam_eps"] == rep2["lam_eps"]


# --------------------------------------------------------------- star graph


def star_cfg(**over):
    cfg = {
        "N": 3,
        "L": 1.0,
        "angles": [120.0, 120.0, 120.0],
        "alpha": -5.0,
        "mesh": {"box": [[-2.0, 2.0], [-2.0, 2.0]], "h": 1.0 / 32.0},
        "seed": 5,
    }
    cfg.update(over)
    return cfg


def test_stargraph_symmetric_case_has_no_flags():
    report, status = run_stargraph(star_cfg())
    assert report["inequality_holds"]
    assert abs(report["gap"]) <= report["mesh_error_estimate"]
    assert report["rotation_gap"] <= report["mesh_error_estimate"]
    assert status == 0


def test_stargraph_asymmetric_lowers_ground_state():
    report, _ = run_stargraph(star_cfg(angles=[150.0, 150.0, 60.0]))
    assert report["lam_sigma"] < report["lam_gamma"]


def test_stargraph_config_errors():
    with pytest.raises(ConfigError):
        run_stargraph(star_cfg(angles=[100.0, 100.0, 100.0]))
    with pytest.raises(ConfigError):
        run_stargraph(star_cfg(N=2, angles=[180.0, 180.0]))


# --------------------------------------------------------------------- cusp


def test_cusp_network_tangent_matching():
    net = cusp_network(2.0, 0.75)
    up, down, arc = net.segments
    t_branch = up.tangent(up.length)
    t_arc = arc.tangent(0.0)
    assert abs(float(t_branch @ t_arc)) == pytest.approx(1.0, abs=1e-12)
    t_branch2 = down.tangent(down.length)
    t_arc_end = arc.tangent(arc.length)
    assert abs(float(t_branch2 @ t_arc_end)) == pytest.approx(1.0, abs=1e-12)
    # junction points coincide
    assert np.allclose(up.point(up.length), arc.point(0.0), atol=1e-12)
    assert np.allclose(down.point(down.length), arc.point(arc.length), atol=1e-12)


def test_cusp_run_trend():
    cfg = {
        "d": 2.0,
        "alpha_list": [-6.0, -10.0],
        "x_max": 0.75,
        "mesh": {"box": [[-0.75, 3.0], [-1.75, 1.75]], "h": 1.0 / 48.0},
        "seed": 5,
    }
    report, status = run_cusp(cfg)
    assert report["trend_decreasing"]
    assert status == 0
    assert report["target_constant"] == pytest.approx(2.0**0.5 * 3.0, abs=1e-3)
    assert all(lam < 0 for lam in report["lam1"])


def test_cusp_weak_coupling_flagged():
    cfg = {
        "d": 2.0,
        "alpha_list": [-1e-3],
        "x_max": 0.5,
        "mesh": {"box": [[-1.0, 2.0], [-1.5, 1.5]], "h": 1.0 / 16.0},
    }
    report, status = run_cusp(cfg)
    assert status == 2
    assert any("outside_asymptotic_regime" in f for f in report["flags"])


def test_cusp_resolution_error():
    cfg = {
        "d": 2.0,
        "alpha_list": [-40.0],
        "mesh": {"box": [[-1.0, 3.0], [-2.0, 2.0]], "h": 1.0 / 16.0},
    }
    with pytest.raises(ResolutionError):
        run_cusp(cfg)


def test_cusp_config_errors():
    base = {"mesh": {"box": [[-1.0, 3.0], [-2.0, 2.0]], "h": 1.0 / 32.0}}
    with pytest.raises(ConfigError):
        run_cusp({"d": 2.0, "alpha_list": [-10.0, -6.0], **base})
    with pytest.raises(ConfigError):
        run_cusp({"d": 2.0, "alpha_list": [1.0], **base})


# -------------------------------------------------------------------- wedge


def wedge_cfg(**over):
    cfg = {
        "phi": np.pi / 3.0,
        "alpha": -1e-6,
        "theta": 1.5,
        "b": 1.0,
        "mesh": {"box": [[-1.5, 1.5], [-1.5, 1.5]], "h": 1.0 / 16.0},
        "seed": 5,
    }
    cfg.update(over)
    return cfg


def test_wedge_requires_field():
    with pytest.raises(ConfigError):
        run_wedge(wedge_cfg(b=0.0))


def test_wedge_criterion_and_assembly():
    report, status = run_wedge(wedge_cfg())
    assert report["criterion"]["inf_F"] == pytest.approx(-1.25, abs=1e-4)
    assert report["criterion"]["predicts_discrete_spectrum"]
    assert report["hermiticity_residual"] <= 1e-12
    assert status == 0


def test_wedge_without_theta_warns_and_still_solves():
    cfg = wedge_cfg()
    del cfg["theta"]
    with pytest.warns(UserWarning):
        report, _ = run_wedge(cfg)
    assert report["criterion"] is None
    assert "lam1" in report


# ----------------------------------------------------------------- spectrum


def test_spectrum_runner():
    cfg = {
        "network": {
            "beta_cap": 0.5,
            "segments": [{"kind": "line", "p0": [-1.0, 0.0], "p1": [1.0, 0.0]}],
        },
        "alpha": -4.0,
        "mesh": {"box": [[-2.0, 2.0], [-2.0, 2.0]], "h": 1.0 / 16.0},
        "k": 2,
    }
    report, status = run_spectrum(cfg)
    assert status == 0
    assert len(report["eigenvalues"]) == 2
    assert report["eigenvalues"][0] < report["eigenvalues"][1]
    assert max(report["solver"]["residuals"]) <= 1e-8


# ---------------------------------------------------------------------- cli


def write_cfg(tmp_path, name, cfg):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def test_cli_converge_roundtrip(tmp_path, capsys):
    cfg_path = write_cfg(tmp_path, "c.json", small_convergence_cfg())
    out_dir = str(tmp_path / "out")
    code = cli.main(["converge", "--config", cfg_path, "--out", out_dir])
    captured = capsys.readouterr()
    assert "converge:" in captured.out
    assert code in (0, 2)
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    csv_bytes = (tmp_path / "out" / "data.csv").read_bytes()
    assert report["csv_sha256"] == hashlib.sha256(csv_bytes).hexdigest()
    header = csv_bytes.decode().splitlines()[0]
    assert header == "eps,res_norm,eig_gap,converged"


def test_cli_dump_matrix_market(tmp_path):
    cfg_path = write_cfg(
        tmp_path, "s.json",
        {
            "network": {
                "beta_cap": 0.5,
                "segments": [{"kind": "line", "p0": [-1.0, 0.0], "p1": [1.0, 0.0]}],
            },
            "alpha": -4.0,
            "mesh": {"box": [[-2.0, 2.0], [-2.0, 2.0]], "h": 1.0 / 16.0},
            "k": 1,
        },
    )
    mm_dir = str(tmp_path / "mm")
    code = cli.main(["spectrum", "--config", cfg_path, "--dump-mm", mm_dir])
    assert code == 0
    S = scipy.io.mmread(os.path.join(mm_dir, "spectrum_S.mtx"))
    M = scipy.io.mmread(os.path.join(mm_dir, "spectrum_M.mtx"))
    assert S.shape == M.shape and S.shape[0] > 100


def test_cli_oracle_commands(tmp_path, capsys):
    p1 = write_cfg(tmp_path, "o.json", {"alpha": -5.0, "beta": 0.02, "eps": 0.01})
    assert cli.main(["oracle1d", "--config", p1]) == 0
    out = capsys.readouterr().out
    payload = json.loads(out[out.index("{"):])
    assert payload["oracle_cross_check"]["point_delta"] == -6.25

    p2 = write_cfg(tmp_path, "b.json", {"d": 2.0, "k": 3})
    assert cli.main(["cusp-b", "--config", p2]) == 0
    out = capsys.readouterr().out
    payload = json.loads(out[out.index("{"):])
    assert payload["oracle_cross_check"]["max_deviation"] < 1e-3

    p3 = write_cfg(tmp_path, "w.json", {"phi": 1.0, "alpha": -1e-6, "theta": 1.5})
    assert cli.main(["wedge-f", "--config", p3]) == 0
    out = capsys.readouterr().out
    payload = json.loads(out[out.index("{"):])
    assert payload["outputs"]["inf_F"] == pytest.approx(-1.25, abs=1e-4)


def test_cli_error_exit_code(tmp_path, capsys):
    cfg_path = write_cfg(tmp_path, "bad.json", small_convergence_cfg(eps_grid=[2.0, 1.0]))
    assert cli.main(["converge", "--config", cfg_path]) == 1
    assert "error:" in capsys.readouterr().err


def test_network_from_spec_errors():
    with pytest.raises(ConfigError):
        network_from_spec({"beta_cap": 0.5, "segments": [{"kind": "triangle"}]})
    with pytest.raises(ConfigError):
        network_from_spec({"segments": []})
