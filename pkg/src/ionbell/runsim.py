"""End-to-end Monte Carlo experiment driver.

A run loops excitation attempts at the configured rate; each attempt can
collect and detect a photon per trap with the calibrated probability. The
number of attempts to the next herald is sampled geometrically (the per
attempt herald probability is constant), so wall-clock bookkeeping stays
exact while runs with heralds tens of millions of attempts apart remain
cheap. Every herald is followed by an analysis rotation and a recorded
outcome pair; dark-count heralds are flagged in the ground-truth log but
never excluded from analysis.

The declared excitation rate is authoritative for rate calibration; the
cycle schedule (optical pumping cycles plus periodic cooling blocks) is kept
for wall-time bookkeeping even though the two disagree by a few percent.
"""

import csv
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .bell import CHSH_SETTINGS_ION_ION, ChshResult, chsh, correlation_from_counts
from .herald import (
    InterferometerModel,
    beamsplitter_coincidence,
    click_statistics,
    false_herald_probability,
    joint_source_state,
)
from .linalg import partial_trace
from .measure import (
    DetectionModel,
    IDEAL_DETECTION,
    RotationSetting,
    as_generator,
    outcome_probabilities,
)
from .states import (
    DensityMatrix,
    PureState,
    apply_channel,
    dephasing_channel,
    fidelity_with_pure,
    ion_ion_singlet,
    ion_photon_state,
    replacement_channel,
    rotation_channel,
)
from .tomo import CountsTable, ReconstructionResult, SETTINGS, mle_reconstruct
from .measure import BASIS_SETTINGS, sample_outcomes


class ConfigError(ValueError):
    """Configuration document malformed or inconsistent."""


@dataclass(frozen=True)
class NoiseBudget:
    """Per-run physical error mechanisms.

    ``p_dephase`` is the phase-flip probability per ion between herald and
    analysis; ``p_leak`` the probability per source that the pair leaks out
    of the qubit subspace and is replaced by the maximally mixed pair;
    ``polarization_error_rad`` a residual rotation of each photon's
    polarization (opposite signs on the two paths) about the given axis.
    """

    p_dephase: float = 0.0
    p_leak: float = 0.0
    polarization_error_rad: float = 0.0
    polarization_error_axis: str = "x"

    def __post_init__(self):
        if not 0.0 <= self.p_dephase <= 1.0:
            raise ConfigError(f"p_dephase must be in [0, 1], got {self.p_dephase}")
        if not 0.0 <= self.p_leak <= 1.0:
            raise ConfigError(f"p_leak must be in [0, 1], got {self.p_leak}")
        if self.polarization_error_axis not in ("x", "y", "z"):
            raise ConfigError(
                f"polarization_error_axis must be x, y or z, got {self.polarization_error_axis!r}"
            )


@dataclass(frozen=True)
class ExperimentConfig:
    """All physical and statistical parameters of a simulated run."""

    excitation_rate_hz: float = 0.52e6
    cycle_us: float = 1.4
    cycles_per_cooling: int = 107
    cooling_us: float = 40.0
    collection_detection_prob: float = 4.43e-4
    interferometer: InterferometerModel = field(default_factory=InterferometerModel)
    noise: NoiseBudget = field(default_factory=NoiseBudget)
    detection: DetectionModel = field(default_factory=DetectionModel)
    target_events: int = 1000
    seed: int = 0
    model_detection_in_fit: bool = True
    randomize_settings: bool = False

    def __post_init__(self):
        if self.excitation_rate_hz <= 0.0 or self.cycle_us <= 0.0 or self.cooling_us < 0.0:
            raise ConfigError("rates and times must be positive")
        if self.cycles_per_cooling <= 0:
            raise ConfigError("cycles_per_cooling must be positive")
        if not 0.0 <= self.collection_detection_prob <= 1.0:
            raise ConfigError(
                f"collection_detection_prob must be in [0, 1], got {self.collection_detection_prob}"
            )
        if self.target_events < 0:
            raise ConfigError("target_events must be nonnegative")

    def to_dict(self) -> dict:
        d = asdict(self)
        det = d["detection"]
        if det["p_correct_dark"] is None:
            del det["p_correct_dark"]
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config document must be a JSON object")
        data = dict(data)
        nested = {}
        for key, builder, allowed in (
            ("interferometer", InterferometerModel, {"mode_overlap", "pmt_efficiency", "dark_rate_hz", "coincidence_window_ns"}),
            ("noise", NoiseBudget, {"p_dephase", "p_leak", "polarization_error_rad", "polarization_error_axis"}),
            ("detection", DetectionModel, {"p_correct", "p_correct_dark"}),
        ):
            sub = data.pop(key, {})
            if not isinstance(sub, dict):
                raise ConfigError(f"{key} must be a JSON object")
            unknown = set(sub) - allowed
            if unknown:
                raise ConfigError(f"unknown keys in {key}: {sorted(unknown)}")
            try:
                nested[key] = builder(**sub)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad {key} section: {exc}") from exc
        allowed_top = {
            "excitation_rate_hz",
            "cycle_us",
            "cycles_per_cooling",
            "cooling_us",
            "collection_detection_prob",
            "target_events",
            "seed",
            "model_detection_in_fit",
            "randomize_settings",
        }
        unknown = set(data) - allowed_top
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**data, **nested)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad config: {exc}") from exc

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        return cls.from_dict(data)

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


@dataclass(frozen=True)
class HeraldRecord:
    attempt_index: int
    wall_time_s: float
    is_false_herald: bool
    setting_label: str
    outcome_a: int
    outcome_b: int


@dataclass
class EventLog:
    records: list[HeraldRecord]
    n_attempts: int

    @property
    def n_heralds(self) -> int:
        return len(self.records)

    @property
    def mean_interval_s(self) -> float:
        if not self.records:
            raise ValueError("empty event log")
        return self.records[-1].wall_time_s / len(self.records)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ("attempt_index", "wall_time_s", "is_false_herald", "setting", "outcome_a", "outcome_b")
            )
            for r in self.records:
                writer.writerow(
                    (
                        r.attempt_index,
                        f"{r.wall_time_s:.9f}",
                        int(r.is_false_herald),
                        r.setting_label,
                        r.outcome_a,
                        r.outcome_b,
                    )
                )


def wall_time_of_attempt(cfg: ExperimentConfig, attempt: int) -> float:
    """Wall time in seconds after ``attempt`` excitation cycles, including the
    periodic cooling blocks."""
    cooling_blocks = attempt // cfg.cycles_per_cooling
    return attempt * cfg.cycle_us * 1e-6 + cooling_blocks * cfg.cooling_us * 1e-6


def source_pair_state(cfg: ExperimentConfig, sign: float = 1.0) -> DensityMatrix:
    """Ion-photon pair emitted by one trap, after the per-source noise.

    Leakage (emitter escaping the qubit subspace) acts first, then the
    residual polarization rotation with the given sign; the two traps use
    opposite signs to model independently miscompensated paths.
    """
    rho = DensityMatrix.from_pure(ion_photon_state())
    if cfg.noise.p_leak > 0.0:
        rho = apply_channel(rho, replacement_channel(cfg.noise.p_leak))
    if cfg.noise.polarization_error_rad != 0.0:
        ch = rotation_channel(
            sign * cfg.noise.polarization_error_rad, cfg.noise.polarization_error_axis
        )
        rho = apply_channel(rho, ch, target=1)
    return rho


def _dephase_pair(cfg: ExperimentConfig, rho: DensityMatrix, ions=(0, 1)) -> DensityMatrix:
    if cfg.noise.p_dephase <= 0.0:
        return rho
    ch = dephasing_channel(cfg.noise.p_dephase)
    for ion in ions:
        rho = apply_channel(rho, ch, target=ion)
    return rho


def heralded_pair_states(cfg: ExperimentConfig):
    """True-herald and false-herald two-ion states plus attempt statistics.

    Collection and detection are folded into ``collection_detection_prob``,
    so the interferometer conditioning runs at unit detector efficiency and
    the per-attempt probabilities scale with the collection probabilities.
    """
    rho_a = source_pair_state(cfg, +1.0)
    rho_b = source_pair_state(cfg, -1.0)
    joint = joint_source_state(rho_a, rho_b)
    unit_model = replace(cfg.interferometer, pmt_efficiency=1.0, dark_rate_hz=0.0)
    stats = click_statistics(joint, unit_model)
    herald = beamsplitter_coincidence(joint, unit_model)
    q = cfg.collection_detection_prob
    p_true = q * q * stats["coincidence"]
    p_single = q * q * stats["single"] + 2.0 * q * (1.0 - q)
    p_false = false_herald_probability(cfg.interferometer, p_single)
    p_herald = p_true + p_false
    true_state = _dephase_pair(cfg, herald.conditioned_state)
    ion_a = partial_trace(partial_trace(joint.matrix, "a", 4, 4), "a", 2, 2)
    ion_b = partial_trace(partial_trace(joint.matrix, "b", 4, 4), "a", 2, 2)
    bg_state = _dephase_pair(cfg, DensityMatrix(np.kron(ion_a, ion_b)))
    info = {
        "p_cross_given_both": stats["coincidence"],
        "p_true": p_true,
        "p_single": p_single,
        "p_false": p_false,
        "p_herald": p_herald,
        "false_fraction": p_false / p_herald if p_herald > 0.0 else 0.0,
    }
    return true_state, bg_state, info


def ion_photon_states(cfg: ExperimentConfig):
    """True and false-herald ion-photon states for single-click heralding."""
    rho = _dephase_pair(cfg, source_pair_state(cfg, +1.0), ions=(0,))
    ion = partial_trace(rho.matrix, "a", 2, 2)
    bg = DensityMatrix(np.kron(ion, np.eye(2, dtype=np.complex128) / 2.0))
    q = cfg.collection_detection_prob
    p_dark = cfg.interferometer.dark_click_probability()
    p_false = (1.0 - q) * p_dark
    p_herald = q + p_false
    info = {
        "p_true": q,
        "p_false": p_false,
        "p_herald": p_herald,
        "false_fraction": p_false / p_herald if p_herald > 0.0 else 0.0,
    }
    return rho, bg, info


def per_attempt_herald_probability(cfg: ExperimentConfig, mode: str = "coincidence") -> float:
    if mode == "coincidence":
        return heralded_pair_states(cfg)[2]["p_herald"]
    if mode == "single":
        return ion_photon_states(cfg)[2]["p_herald"]
    raise ValueError(f"mode must be 'coincidence' or 'single', got {mode!r}")


def calibrate_collection_prob(
    cfg: ExperimentConfig, target_interval_s: float, mode: str = "coincidence"
) -> float:
    """Collection-and-detection probability that produces one herald per
    ``target_interval_s`` at the declared excitation rate."""
    if target_interval_s <= 0.0:
        raise ValueError("target interval must be positive")
    target_p = 1.0 / (target_interval_s * cfg.excitation_rate_hz)

    def p_of(q: float) -> float:
        return per_attempt_herald_probability(
            replace(cfg, collection_detection_prob=q), mode
        )

    if p_of(1.0) < target_p:
        raise ValueError("no collection probability in [0, 1] reaches the target rate")
    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if p_of(mid) < target_p:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15:
            break
    return 0.5 * (lo + hi)


def _setting_label(pair) -> str:
    sa, sb = pair
    return f"({sa.theta:.6g},{sa.phi:.6g})|({sb.theta:.6g},{sb.phi:.6g})"


def run_bell_experiment(cfg: ExperimentConfig, settings=CHSH_SETTINGS_ION_ION):
    """Simulate heralded events until ``cfg.target_events`` and analyze CHSH.

    Settings cycle round-robin (or uniformly at random with the config flag),
    every herald gets an outcome pair, and the returned CHSH result is
    computed from the per-setting counts.
    """
    settings = tuple(settings)
    if len(settings) != 4:
        raise ValueError("need exactly four setting pairs")
    if cfg.target_events < 4:
        raise ValueError("target_events must be at least 4")
    true_state, bg_state, info = heralded_pair_states(cfg)
    if info["p_herald"] <= 0.0:
        raise ValueError("herald probability is zero under this configuration")
    cum_true = []
    cum_bg = []
    for sa, sb in settings:
        pt = outcome_probabilities(true_state, sa, sb, cfg.detection)
        pb = outcome_probabilities(bg_state, sa, sb, cfg.detection)
        cum_true.append(np.cumsum(pt))
        cum_bg.append(np.cumsum(pb))
    n = cfg.target_events
    rng = as_generator(cfg.seed)
    skips = rng.geometric(info["p_herald"], size=n).astype(np.int64)
    attempts = np.cumsum(skips)
    u_false = rng.random(n)
    u_out = rng.random(n)
    if cfg.randomize_settings:
        setting_idx = rng.integers(0, 4, size=n)
    else:
        setting_idx = np.arange(n) % 4
    counts = np.zeros((4, 4), dtype=np.int64)
    records = []
    for k in range(n):
        si = int(setting_idx[k])
        is_false = bool(u_false[k] < info["false_fraction"])
        cum = cum_bg[si] if is_false else cum_true[si]
        outcome = int(np.searchsorted(cum, u_out[k], side="right"))
        outcome = min(outcome, 3)
        counts[si, outcome] += 1
        records.append(
            HeraldRecord(
                attempt_index=int(attempts[k]),
                wall_time_s=wall_time_of_attempt(cfg, int(attempts[k])),
                is_false_herald=is_false,
                setting_label=_setting_label(settings[si]),
                outcome_a=outcome // 2,
                outcome_b=outcome % 2,
            )
        )
    log = EventLog(records=records, n_attempts=int(attempts[-1]))
    correlations = tuple(correlation_from_counts(counts[i]) for i in range(4))
    return log, chsh(correlations, settings)


def _split_events(total: int, n_bins: int) -> list[int]:
    base, rem = divmod(total, n_bins)
    return [base + (1 if i < rem else 0) for i in range(n_bins)]


def run_tomography_experiment(
    cfg: ExperimentConfig, which: str, total_events: int | None = None
):
    """Collect tomography counts and reconstruct the state.

    ``which`` selects ion_ion (coincidence heralds, both parties are ions
    read out by fluorescence) or ion_photon (single-click heralds, second
    party is the photon polarization, analyzed without detection confusion).
    """
    if which not in ("ion_ion", "ion_photon"):
        raise ValueError(f"which must be 'ion_ion' or 'ion_photon', got {which!r}")
    total = cfg.target_events if total_events is None else int(total_events)
    if total <= 0:
        raise ValueError("total event count must be positive")
    if which == "ion_ion":
        true_state, bg_state, info = heralded_pair_states(cfg)
        det_b = None
        target = ion_ion_singlet()
    else:
        true_state, bg_state, info = ion_photon_states(cfg)
        det_b = IDEAL_DETECTION
        target = ion_photon_state()
    f = info["false_fraction"]
    rng = as_generator(cfg.seed)
    counts = np.zeros((9, 4), dtype=np.int64)
    splits = _split_events(total, 9)
    for i, setting in enumerate(SETTINGS):
        sa = BASIS_SETTINGS[setting.basis_a]
        sb = BASIS_SETTINGS[setting.basis_b]
        pt = outcome_probabilities(true_state, sa, sb, cfg.detection, det_b)
        pb = outcome_probabilities(bg_state, sa, sb, cfg.detection, det_b)
        probs = (1.0 - f) * pt + f * pb
        counts[i] = sample_outcomes(probs / probs.sum(), splits[i], rng)
    table = CountsTable(counts=counts)
    result = mle_reconstruct(
        table,
        cfg.detection,
        det_b=det_b,
        include_confusion=cfg.model_detection_in_fit,
        target=target,
        seed=int(rng.integers(0, 2**63 - 1)),
    )
    return table, result


def rate_report(log: EventLog) -> dict:
    """Summary rates from an event log (errors on an empty log)."""
    if log.n_heralds < 1:
        raise ValueError("empty event log")
    return {
        "n_heralds": log.n_heralds,
        "n_attempts": log.n_attempts,
        "mean_interval_s": log.mean_interval_s,
        "attempts_per_herald": log.n_attempts / log.n_heralds,
        "false_herald_fraction": sum(r.is_false_herald for r in log.records) / log.n_heralds,
    }


def detection_shrunk_state(
    rho: DensityMatrix, det_a: DetectionModel, det_b: DetectionModel
) -> DensityMatrix:
    """State whose ideal-detection statistics in every product Pauli basis
    equal the confusion-convolved statistics of ``rho``.

    For the symmetric confusion model this is a per-party shrink of the Bloch
    components by 2 p_correct - 1; it is what a tomography fit that does not
    model the detection error converges to.
    """
    out = rho.matrix
    for party, det in ((0, det_a), (1, det_b)):
        eta = 2.0 * det.p_correct - 1.0
        view = out.reshape(2, 2, 2, 2)
        if party == 0:
            marg = np.einsum("aiaj->ij", view)
            mixed = np.kron(np.eye(2, dtype=np.complex128) / 2.0, marg)
        else:
            marg = np.einsum("iaja->ij", view)
            mixed = np.kron(marg, np.eye(2, dtype=np.complex128) / 2.0)
        out = eta * out + (1.0 - eta) * mixed
    return DensityMatrix(out)


def predicted_fidelity(cfg: ExperimentConfig, which: str, as_reconstructed: bool) -> float:
    """Analytic fidelity of the simulated state with its entangled target.

    With ``as_reconstructed`` the prediction refers to what a tomography fit
    without detection deconvolution reports; otherwise to the physical state
    itself.
    """
    if which == "ion_ion":
        state = _mixed_state(*heralded_pair_states(cfg))
        target: PureState = ion_ion_singlet()
        det_pair = (cfg.detection, cfg.detection)
    elif which == "ion_photon":
        state = _mixed_state(*ion_photon_states(cfg))
        target = ion_photon_state()
        det_pair = (cfg.detection, IDEAL_DETECTION)
    else:
        raise ValueError(f"unknown mode {which!r}")
    if as_reconstructed:
        state = detection_shrunk_state(state, *det_pair)
    return fidelity_with_pure(state, target)


def _mixed_state(true_state, bg_state, info) -> DensityMatrix:
    f = info["false_fraction"]
    return DensityMatrix((1.0 - f) * true_state.matrix + f * bg_state.matrix)


def fit_mode_overlap(
    cfg: ExperimentConfig, target_fidelity: float = 0.813, which: str = "ion_ion"
) -> float:
    """Mode overlap that reproduces a target reconstructed fidelity.

    The prediction honours ``cfg.model_detection_in_fit``: with the flag off
    the reconstructed fidelity includes the detection shrink, with it on the
    tomography deconvolves detection and the state fidelity is matched
    directly. Solved by bisection; the fidelity is monotone in the overlap.
    """

    def f_of(mu: float) -> float:
        sub = replace(cfg, interferometer=replace(cfg.interferometer, mode_overlap=mu))
        return predicted_fidelity(sub, which, not cfg.model_detection_in_fit)

    lo, hi = 0.0, 1.0
    if not f_of(lo) <= target_fidelity <= f_of(hi):
        raise ValueError(
            f"target fidelity {target_fidelity} not reachable by the overlap alone "
            f"(range [{f_of(lo):.4f}, {f_of(hi):.4f}])"
        )
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if f_of(mid) < target_fidelity:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
