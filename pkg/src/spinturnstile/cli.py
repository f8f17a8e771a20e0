"""Command-line front end.

Subcommands map one-to-one onto the library layers:

- ``rates``      device time scales and hierarchy check
- ``cycle``      a single measurement cycle on the configured gate state
- ``sweep``      shot statistics over a grid of settings
- ``calibrate``  detection-constant recovery at parallel magnetizations
- ``tomography`` design diagnostics plus gate-state reconstruction

All commands read one JSON configuration (``--config PATH`` or ``-`` for
stdin), write CSV or JSON-lines to ``--out`` (default stdout) and embed the
configuration digest and effective seed in the output metadata, making every
result reproducible from its own header. Warnings (e.g. a violated time-scale
hierarchy) go to stderr and never change the exit code.

Exit codes: 0 success, 2 configuration syntax error, 3 validation error,
4 I/O error, 1 internal error.
"""

import argparse
import dataclasses
import sys

import numpy as np

from . import __version__
from .config import (
    ConfigSyntaxError,
    ConfigValidationError,
    RunConfig,
    config_digest,
    parse_config,
    resolved_dict,
)
from .cycle import induced_instrument, run_cycle
from .experiment import (
    calibrate,
    derive_setting_seed,
    run_sweep,
    sample_cycles,
)
from .model import build_total_hamiltonian, characteristic_times
from .results import ResultTable, write_results
from .tomography import (
    build_design,
    density_to_theta,
    identifiability_report,
    parameter_labels,
    reconstruct,
)

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_IO = 4

COMMANDS = ("rates", "cycle", "sweep", "calibrate", "tomography")


def _base_metadata(command: str, digest: str, cfg: RunConfig) -> dict:
    return {
        "tool": "spinturnstile",
        "version": __version__,
        "command": command,
        "config_sha256": digest,
        "seed": cfg.experiment.seed,
        "resolved_config": resolved_dict(cfg),
    }


def _cmd_rates(cfg: RunConfig, meta: dict) -> ResultTable:
    report = characteristic_times(cfg.model, cfg.tunnel, threshold=cfg.hierarchy_threshold)
    columns = (
        "tau_res_s", "tau_dyn_s", "tau_non_s",
        "rate_res_per_s", "rate_dyn_per_s", "rate_non_per_s",
        "ratio_dyn_res", "ratio_non_dyn", "satisfied",
    )
    row = (
        report.tau_res, report.tau_dyn, report.tau_non,
        1.0 / report.tau_res, (1.0 / report.tau_dyn if report.tau_dyn_finite else 0.0),
        1.0 / report.tau_non,
        report.ratio_dyn_res, report.ratio_non_dyn, report.satisfied,
    )
    return ResultTable(columns=columns, rows=[row], metadata=meta)


def _cmd_cycle(cfg: RunConfig, meta: dict) -> ResultTable:
    outcome = run_cycle(
        cfg.model, cfg.tunnel, cfg.schedule,
        cfg.u_left.vector(), cfg.u_right.vector(),
        cfg.gate_state.density(), cfg.detection_c,
    )
    columns = (
        "t_interact_s", "kappa", "pr_pulse",
        "u_ancilla_x", "u_ancilla_y", "u_ancilla_z", "u_ancilla_norm",
    )
    u = outcome.u_ancilla
    row = (
        cfg.schedule.t_interact, outcome.kappa, outcome.pr_pulse,
        float(u[0]), float(u[1]), float(u[2]), float(np.linalg.norm(u)),
    )
    return ResultTable(columns=columns, rows=[row], metadata=meta)


def _cmd_sweep(cfg: RunConfig, meta: dict) -> ResultTable:
    settings = [s.to_setting() for s in cfg.sweep_settings]
    rows_out = run_sweep(
        settings,
        model=cfg.model,
        tunnel=cfg.tunnel,
        schedule=cfg.schedule,
        rho_gate=cfg.gate_state.density(),
        c=cfg.detection_c,
        n_cycles=cfg.experiment.n_cycles,
        seed=cfg.experiment.seed,
        mode=cfg.experiment.mode,
    )
    columns = (
        "row",
        "u_left_x", "u_left_y", "u_left_z",
        "u_right_x", "u_right_y", "u_right_z",
        "t_interact_s", "pr", "pr_hat", "std_err",
        "n_pulses", "n_cycles", "current_a", "current_std_err_a", "seed", "status",
    )
    rows = []
    for r in rows_out:
        ul, ur = r.setting.u_left, r.setting.u_right
        rec, cur = r.record, r.current
        rows.append((
            r.index, ul[0], ul[1], ul[2], ur[0], ur[1], ur[2],
            r.setting.t_interact, r.pr,
            rec.pr_hat if rec else None, rec.std_err if rec else None,
            rec.n_pulses if rec else None, rec.n_cycles if rec else None,
            cur.amperes if cur else None, cur.std_err_amperes if cur else None,
            rec.seed if rec else None, r.status,
        ))
    meta["mode"] = cfg.experiment.mode
    return ResultTable(columns=columns, rows=rows, metadata=meta)


def _cmd_calibrate(cfg: RunConfig, meta: dict) -> ResultTable:
    # Calibration geometry: both leads magnetized along the left-lead axis,
    # interaction off, so the pulse probability depends only on the (known)
    # magnitudes and the detection constant.
    mag_l = cfg.u_left.magnitude
    mag_r = cfg.u_right.magnitude
    if mag_l <= 0 or mag_r <= 0:
        raise ValueError("calibration requires nonzero lead magnetizations")
    t_sq = cfg.tunnel.gamma0
    tau = cfg.tunnel.tau_detect
    c_true = cfg.detection_c
    pr_true = c_true * tau * t_sq * (1.0 + mag_r * mag_l)
    if not 0.0 <= pr_true <= 1.0:
        raise ValueError(f"calibration pulse probability {pr_true} outside [0, 1]")

    rows = []
    exact = calibrate(pr_true, mag_l, mag_r, tau, t_sq)
    rows.append(("noiseless", pr_true, c_true, exact.c_hat, exact.residual,
                 abs(exact.c_hat - c_true) / c_true if c_true else 0.0, None))
    rec = sample_cycles(pr_true, cfg.experiment.n_cycles, cfg.experiment.seed)
    noisy = calibrate(rec.pr_hat, mag_l, mag_r, tau, t_sq)
    rows.append(("shot_noise", rec.pr_hat, c_true, noisy.c_hat, noisy.residual,
                 abs(noisy.c_hat - c_true) / c_true if c_true else 0.0, rec.n_cycles))
    columns = ("kind", "pr_measured", "c_true", "c_hat", "residual", "abs_rel_error", "n_cycles")
    return ResultTable(columns=columns, rows=rows, metadata=meta)


def _cmd_tomography(cfg: RunConfig, meta: dict) -> ResultTable:
    mode = cfg.tomography.mode
    settings = [s.to_setting() for s in cfg.tomography.settings]
    design = build_design(
        settings, cfg.model, cfg.detection_c, cfg.tunnel.tau_detect, cfg.tunnel.gamma0,
        mode=mode, include_gate_hamiltonian=cfg.schedule.include_gate_hamiltonian,
    )
    rho_true = cfg.gate_state.density()
    theta_true = density_to_theta(rho_true, mode)

    # Probabilities of the actual configured state (not its mode-truncated
    # representative), so single-spin reconstruction of a correlated state
    # honestly shows its model error.
    pr_exact = _exact_probabilities(settings, cfg, rho_true)
    counts = None
    pr_used = pr_exact
    if cfg.tomography.noise == "shot":
        n = cfg.experiment.n_cycles
        pr_used = np.empty_like(pr_exact)
        for i, setting in enumerate(settings):
            seed_i = derive_setting_seed(cfg.experiment.seed, setting)
            pr_used[i] = sample_cycles(float(np.clip(pr_exact[i], 0.0, 1.0)), n, seed_i).pr_hat
        counts = np.full(design.n_settings, n)

    result = reconstruct(design, pr_used, shot_counts=counts)
    report = identifiability_report(design)

    labels = parameter_labels(mode)
    std = (np.sqrt(np.clip(np.diag(result.covariance), 0.0, None))
           if result.covariance is not None else None)
    rows = []
    for j, label in enumerate(labels):
        rows.append((
            label, float(theta_true[j]), float(result.theta_hat[j]),
            abs(float(result.theta_hat[j] - theta_true[j])),
            float(std[j]) if std is not None else None,
        ))
    columns = ("parameter", "theta_true", "theta_hat", "abs_error", "std_pred")
    meta.update({
        "mode": mode,
        "noise": cfg.tomography.noise,
        "n_settings": design.n_settings,
        "rank": design.rank,
        "condition_number": design.condition_number,
        "identifiable": report.identifiable,
        "residual_norm": result.residual_norm,
        "estimate_physical": result.physical,
        "unidentifiable_directions": list(report.unidentifiable_directions),
    })
    return ResultTable(columns=columns, rows=rows, metadata=meta)


def _exact_probabilities(settings, cfg: RunConfig, rho_true: np.ndarray) -> np.ndarray:
    pr = np.empty(len(settings))
    for i, s in enumerate(settings):
        row_model = s.model if s.model is not None else cfg.model
        h = build_total_hamiltonian(row_model, cfg.schedule.include_gate_hamiltonian)
        inst = induced_instrument(
            s.u_left, s.u_right, h, s.t_interact,
            cfg.detection_c, cfg.tunnel.tau_detect, cfg.tunnel.gamma0,
        )
        pr[i] = inst.pulse_probability(rho_true)
    return pr


def execute(command: str, cfg: RunConfig, digest: str) -> ResultTable:
    """Run one subcommand against a validated configuration."""
    meta = _base_metadata(command, digest, cfg)
    if command == "rates":
        return _cmd_rates(cfg, meta)
    if command == "cycle":
        return _cmd_cycle(cfg, meta)
    if command == "sweep":
        return _cmd_sweep(cfg, meta)
    if command == "calibrate":
        return _cmd_calibrate(cfg, meta)
    if command == "tomography":
        return _cmd_tomography(cfg, meta)
    raise ValueError(f"unknown command {command!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spinturnstile",
        description="Turnstile readout simulator for donor spin gates.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("rates", "device time scales and hierarchy check"),
        ("cycle", "single measurement cycle"),
        ("sweep", "shot statistics over a setting grid"),
        ("calibrate", "detection-constant calibration"),
        ("tomography", "gate-state reconstruction"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True,
                       help="path to the JSON configuration, or '-' for stdin")
        p.add_argument("--out", default=None, help="output path (default: stdout)")
        p.add_argument("--format", default="csv", choices=("csv", "jsonl"),
                       help="output format (default: csv)")
        p.add_argument("--seed", type=int, default=None,
                       help="override experiment.seed from the configuration")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    try:
        if args.config == "-":
            raw = sys.stdin.buffer.read()
        else:
            with open(args.config, "rb") as fh:
                raw = fh.read()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO

    try:
        cfg = parse_config(raw)
    except ConfigSyntaxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ConfigValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    if args.seed is not None:
        if args.seed < 0:
            print("error: --seed must be nonnegative", file=sys.stderr)
            return EXIT_VALIDATION
        cfg = dataclasses.replace(
            cfg, experiment=dataclasses.replace(cfg.experiment, seed=args.seed)
        )

    try:
        table = execute(args.command, cfg, config_digest(raw))
    except (ValueError, ConfigValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL

    try:
        dest = args.out if args.out is not None else sys.stdout.buffer
        write_results(table, args.format, dest)
        if dest is sys.stdout.buffer:
            sys.stdout.buffer.flush()
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
