"""Command-line front end.

Usage: ``ionbell <command> --config <path> --out <dir> [--seed N]`` with
commands bell, tomo-ionphoton, tomo-ionion, calibrate, predict. Exit codes:
0 success, 1 runtime failure, 2 usage or configuration error. Outputs are
deterministic for a fixed config and seed: CSVs carry 6 significant digits,
JSON full double precision.
"""

import argparse
import csv
import json
import sys
from dataclasses import dataclass, replace
from pathlib import Path

from .bell import CHSH_SETTINGS_ION_ION, CHSH_SETTINGS_ION_PHOTON, chsh_predicted
from .measure import IDEAL_DETECTION, DetectionModel
from .runsim import (
    ConfigError,
    ExperimentConfig,
    InterferometerModel,
    NoiseBudget,
    calibrate_collection_prob,
    heralded_pair_states,
    ion_photon_states,
    per_attempt_herald_probability,
    predicted_fidelity,
    rate_report,
    run_bell_experiment,
    run_tomography_experiment,
    _mixed_state,
)

COMMANDS = ("bell", "tomo-ionphoton", "tomo-ionion", "calibrate", "predict")

ION_LABELS = ("p", "m")  # p = |1,1>, m = |1,-1>
PHOTON_LABELS = ("H", "V")


@dataclass(frozen=True)
class RunManifest:
    command: str
    config_path: Path
    output_dir: Path
    seed: int | None = None


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _write_json(path: Path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_manifest(args) -> RunManifest:
    return RunManifest(
        command=args.command,
        config_path=Path(args.config),
        output_dir=Path(args.out),
        seed=args.seed,
    )


def load_config(manifest: RunManifest) -> ExperimentConfig:
    cfg = ExperimentConfig.from_json(manifest.config_path)
    if manifest.seed is not None:
        cfg = replace(cfg, seed=manifest.seed)
    return cfg


def _chsh_json(result) -> dict:
    return {
        "s_value": result.s_value,
        "std_error": result.std_error,
        "settings": [
            {
                "theta_a": sa.theta,
                "phi_a": sa.phi,
                "theta_b": sb.theta,
                "phi_b": sb.phi,
            }
            for sa, sb in result.settings
        ],
        "correlations": [
            {"value": c.value, "std_error": c.std_error, "n_events": c.n_events}
            for c in result.correlations
        ],
    }


def cmd_bell(manifest: RunManifest) -> int:
    cfg = load_config(manifest)
    log, result = run_bell_experiment(cfg)
    out = manifest.output_dir
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "correlations.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("theta_a", "theta_b", "E", "std_error", "n_events"))
        for (sa, sb), c in zip(result.settings, result.correlations):
            writer.writerow(
                (_fmt(sa.theta), _fmt(sb.theta), _fmt(c.value), _fmt(c.std_error), c.n_events)
            )
    _write_json(out / "chsh.json", _chsh_json(result))
    log.to_csv(out / "events.csv")
    _write_json(out / "rates.json", rate_report(log))
    return 0


def _plot_rows(matrix, labels):
    rows = []
    for i in range(4):
        for j in range(4):
            rows.append((i, j, labels[i], labels[j], matrix[i, j].real, matrix[i, j].imag))
    return rows


def cmd_tomo(manifest: RunManifest, which: str) -> int:
    cfg = load_config(manifest)
    table, result = run_tomography_experiment(cfg, which)
    out = manifest.output_dir
    out.mkdir(parents=True, exist_ok=True)
    table.to_csv(out / "counts.csv")
    _write_json(out / "reconstruction.json", result.to_json_dict())
    if which == "ion_ion":
        labels = [a + b for a in ION_LABELS for b in ION_LABELS]
    else:
        labels = [a + b for a in ION_LABELS for b in PHOTON_LABELS]
    with open(out / "plotdata.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("row", "col", "row_label", "col_label", "real", "imag"))
        for i, j, li, lj, re, im in _plot_rows(result.rho.matrix, labels):
            writer.writerow((i, j, li, lj, _fmt(re), _fmt(im)))
    return 0


def cmd_calibrate(manifest: RunManifest, interval_s: float, mode: str) -> int:
    cfg = load_config(manifest)
    q = calibrate_collection_prob(cfg, interval_s, mode=mode)
    calibrated = replace(cfg, collection_detection_prob=q)
    p_h = per_attempt_herald_probability(calibrated, mode)
    out = manifest.output_dir
    out.mkdir(parents=True, exist_ok=True)
    _write_json(
        out / "calibration.json",
        {
            "mode": mode,
            "target_interval_s": interval_s,
            "collection_detection_prob": q,
            "per_attempt_herald_probability": p_h,
            "expected_interval_s": 1.0 / (p_h * cfg.excitation_rate_hz),
        },
    )
    return 0


_NOISE_OFF = NoiseBudget()


def _variant_predictions(cfg: ExperimentConfig) -> dict:
    det = cfg.detection
    s_ii = chsh_predicted(
        _mixed_state(*heralded_pair_states(cfg)), CHSH_SETTINGS_ION_ION, det
    )
    s_ip = chsh_predicted(
        _mixed_state(*ion_photon_states(cfg)), CHSH_SETTINGS_ION_PHOTON, det, IDEAL_DETECTION
    )
    return {
        "f_ionphoton": predicted_fidelity(cfg, "ion_photon", as_reconstructed=False),
        "f_ionphoton_reconstructed": predicted_fidelity(cfg, "ion_photon", as_reconstructed=True),
        "s_ionphoton": s_ip,
        "f_ionion": predicted_fidelity(cfg, "ion_ion", as_reconstructed=False),
        "f_ionion_reconstructed": predicted_fidelity(cfg, "ion_ion", as_reconstructed=True),
        "s_ionion": s_ii,
    }


def cmd_predict(manifest: RunManifest) -> int:
    cfg = load_config(manifest)
    ideal_ifm = replace(cfg.interferometer, mode_overlap=1.0, dark_rate_hz=0.0)
    base = replace(
        cfg, noise=_NOISE_OFF, detection=DetectionModel(1.0), interferometer=ideal_ifm
    )
    variants = {
        "all_off": base,
        "detection_only": replace(base, detection=cfg.detection),
        "dephasing_only": replace(base, noise=replace(_NOISE_OFF, p_dephase=cfg.noise.p_dephase)),
        "polarization_only": replace(
            base,
            noise=replace(
                _NOISE_OFF,
                polarization_error_rad=cfg.noise.polarization_error_rad,
                polarization_error_axis=cfg.noise.polarization_error_axis,
            ),
        ),
        "leakage_only": replace(base, noise=replace(_NOISE_OFF, p_leak=cfg.noise.p_leak)),
        "dark_counts_only": replace(
            base, interferometer=replace(ideal_ifm, dark_rate_hz=cfg.interferometer.dark_rate_hz)
        ),
        "mode_overlap_only": replace(
            base, interferometer=replace(ideal_ifm, mode_overlap=cfg.interferometer.mode_overlap)
        ),
        "full_budget": cfg,
    }
    payload = {name: _variant_predictions(v) for name, v in variants.items()}
    out = manifest.output_dir
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "predictions.json", payload)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ionbell",
        description="Simulate photon-heralded two-ion entanglement: Bell tests and tomography.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to the JSON run configuration")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        if name == "calibrate":
            p.add_argument(
                "--interval",
                type=float,
                default=39.0,
                help="target mean seconds between heralds",
            )
            p.add_argument(
                "--mode",
                choices=("coincidence", "single"),
                default="coincidence",
                help="herald on two-photon coincidences or single clicks",
            )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    manifest = load_manifest(args)
    try:
        if manifest.command == "bell":
            return cmd_bell(manifest)
        if manifest.command == "tomo-ionion":
            return cmd_tomo(manifest, "ion_ion")
        if manifest.command == "tomo-ionphoton":
            return cmd_tomo(manifest, "ion_photon")
        if manifest.command == "calibrate":
            return cmd_calibrate(manifest, args.interval, args.mode)
        if manifest.command == "predict":
            return cmd_predict(manifest)
        raise ValueError(f"unknown command {manifest.command!r}")
    except (ConfigError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"ionbell: config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"ionbell: {exc}", file=sys.stderr)
        return 1


def run() -> None:
    raise SystemExit(main())
