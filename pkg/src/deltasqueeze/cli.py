"""Command-line entry point: `delta-squeeze <scenario> --config file.json`.

Exit codes: 0 on success, 2 on flagged-but-complete runs, 1 on errors.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import lab, oracles


def _load_config(args):
    with open(args.config) as fh:
        cfg = json.load(fh)
    if args.out is not None:
        cfg["out"] = args.out
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.threads is not None:
        cfg["threads"] = args.threads
    return cfg


def _emit(report, status, out):
    if out is None:
        json.dump(report, sys.stdout, indent=2, sort_keys=True, default=float)
        sys.stdout.write("\n")
    return status


def _cmd_converge(args):
    cfg = _load_config(args)
    report, status = lab.run_convergence(cfg, dump_mm=args.dump_mm)
    fit = report.get("norm_fit")
    slope = fit["slope"] if fit else float("nan")
    print(
        f"converge: lam_delta={report['lam_delta']:.6f} "
        f"norm_slope={slope:.3f} flags={sorted(report['flags'])}"
    )
    return _emit(report, status, cfg.get("out"))


def _cmd_stargraph(args):
    cfg = _load_config(args)
    report, status = lab.run_stargraph(cfg, dump_mm=args.dump_mm)
    print(
        f"stargraph: lam(Sigma)={report['lam_sigma']:.6f} "
        f"lam(Gamma)={report['lam_gamma']:.6f} gap={report['gap']:.6f} "
        f"mesh_error={report['mesh_error_estimate']:.2e} flags={sorted(report['flags'])}"
    )
    return _emit(report, status, cfg.get("out"))


def _cmd_cusp(args):
    cfg = _load_config(args)
    report, status = lab.run_cusp(cfg, dump_mm=args.dump_mm)
    devs = ", ".join(f"{d:.4f}" for d in report["r_deviations"])
    print(
        f"cusp: target={report['target_constant']:.5f} |r-target|=[{devs}] "
        f"decreasing={report['trend_decreasing']} flags={sorted(report['flags'])}"
    )
    return _emit(report, status, cfg.get("out"))


def _cmd_wedge(args):
    cfg = _load_config(args)
    report, status = lab.run_wedge(cfg, dump_mm=args.dump_mm)
    crit = report["criterion"]
    crit_txt = f"infF={crit['inf_F']:.6f}" if crit else "no-criterion"
    print(
        f"wedge: {crit_txt} lam1={report['lam1']:.6f} "
        f"herm={report['hermiticity_residual']:.2e} flags={sorted(report['flags'])}"
    )
    return _emit(report, status, cfg.get("out"))


def _cmd_spectrum(args):
    cfg = _load_config(args)
    report, status = lab.run_spectrum(cfg, dump_mm=args.dump_mm)
    vals = ", ".join(f"{v:.6f}" for v in report["eigenvalues"])
    print(f"spectrum: [{vals}]")
    return _emit(report, status, cfg.get("out"))


def _cmd_wedge_f(args):
    cfg = _load_config(args)
    params = oracles.WedgeParams(
        phi=cfg["phi"], alpha=cfg["alpha"], theta=cfg["theta"]
    )
    out = oracles.wedge_F_infimum(params)
    # calculus cross-check: for |alpha| -> 0 the infimum is 1 - Theta^2
    quartic_min = 1.0 - cfg["theta"] ** 2
    report = {
        "scenario": "wedge-f",
        "inputs": dict(cfg),
        "outputs": {
            "inf_F": out.value,
            "argmin": list(out.argmin),
            "predicts_discrete_spectrum": out.negative,
            "refined": out.refined,
        },
        "oracle_cross_check": {
            "quartic_calculus_small_alpha": quartic_min,
            "consistent": bool(out.value <= quartic_min + 1e-8),
        },
    }
    print(f"wedge-f: inf={out.value:.8f} negative={out.negative}")
    json.dump(report, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return 0 if out.refined else 2


def _cmd_oracle1d(args):
    cfg = _load_config(args)
    alpha = cfg["alpha"]
    beta = cfg.get("beta", 0.02)
    eps = cfg.get("eps", beta)
    g = lambda t: np.full_like(t, alpha / (2.0 * beta))
    lam = oracles.squeezed_1d_eigenvalue(
        g, eps, beta, cells_per_eps=cfg.get("cells_per_eps", 8)
    )
    checks = {"point_delta": oracles.delta_point_eigenvalue(alpha)}
    checks["square_well_bisection"] = oracles.square_well_ground_state(
        depth=abs(alpha) / (2.0 * eps), halfwidth=eps
    )
    report = {
        "scenario": "oracle1d",
        "inputs": {"alpha": alpha, "beta": beta, "eps": eps},
        "outputs": {"lam_eps": lam},
        "oracle_cross_check": checks,
    }
    print(f"oracle1d: lam_eps={lam} point_delta={checks['point_delta']}")
    json.dump(report, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return 0


def _cmd_cusp_b(args):
    cfg = _load_config(args)
    d, k = cfg["d"], cfg.get("k", 3)
    eigs = oracles.cusp_operator_eigs(d, k=k, x_max=cfg.get("x_max"),
                                      n=cfg.get("n", 4000))
    cross = {}
    if d == 2.0:
        cross["odd_harmonic_levels"] = [4.0 * j - 1.0 for j in range(1, k + 1)]
        cross["max_deviation"] = float(
            np.max(np.abs(eigs - np.asarray(cross["odd_harmonic_levels"])))
        )
    report = {
        "scenario": "cusp-b",
        "inputs": {"d": d, "k": k},
        "outputs": {"eigenvalues": eigs.tolist()},
        "oracle_cross_check": cross,
    }
    print("cusp-b: " + ", ".join(f"{v:.6f}" for v in eigs))
    json.dump(report, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return 0


_COMMANDS = {
    "converge": _cmd_converge,
    "stargraph": _cmd_stargraph,
    "cusp": _cmd_cusp,
    "wedge-f": _cmd_wedge_f,
    "wedge": _cmd_wedge,
    "spectrum": _cmd_spectrum,
    "oracle1d": _cmd_oracle1d,
    "cusp-b": _cmd_cusp_b,
}


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="delta-squeeze",
        description="Concentrated interactions on curve networks and their "
        "squeezed-potential approximations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--dump-mm", default=None, help="Matrix Market dump directory")
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--seed", type=int, default=None)
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except Exception as err:  # noqa: BLE001 - report and signal failure
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
