"""Microwave analysis rotations and imperfect fluorescence state detection.

A rotation setting (theta, phi) sends ``cos(theta/2)|1,1> +
sin(theta/2) e^{i phi} |1,-1>`` to the bright axis and its orthogonal
complement to the dark axis. Detection error is a classical confusion matrix
applied to the rotated-basis outcome probabilities; every herald yields an
outcome (no discard path exists), which is what closes the detection
loophole in the simulation.
"""

from dataclasses import dataclass

import numpy as np

from .states import DensityMatrix

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class RotationSetting:
    """Analysis pulse setting: theta tracks pulse duration, phi its phase."""

    theta: float
    phi: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.theta) and np.isfinite(self.phi)):
            raise ValueError("angles must be finite")
        object.__setattr__(self, "theta", float(self.theta) % TWO_PI)
        object.__setattr__(self, "phi", float(self.phi) % TWO_PI)


@dataclass(frozen=True)
class DetectionModel:
    """Probability that a bright/dark result is reported correctly.

    ``p_correct_dark`` enables an asymmetric error model; by default dark
    results misreport with the same probability as bright ones.
    """

    p_correct: float = 1.0
    p_correct_dark: float | None = None

    def __post_init__(self):
        if not 0.5 <= self.p_correct <= 1.0:
            raise ValueError(f"p_correct must be in [0.5, 1], got {self.p_correct}")
        if self.p_correct_dark is not None and not 0.5 <= self.p_correct_dark <= 1.0:
            raise ValueError(
                f"p_correct_dark must be in [0.5, 1], got {self.p_correct_dark}"
            )

    def confusion(self) -> np.ndarray:
        """2x2 matrix C[reported, true]."""
        pb = self.p_correct
        pd = self.p_correct_dark if self.p_correct_dark is not None else self.p_correct
        return np.array([[pb, 1.0 - pd], [1.0 - pb, pd]])


IDEAL_DETECTION = DetectionModel(1.0)

# conventional tomography analysis settings for the x, y, z bases
BASIS_SETTINGS = {
    "x": RotationSetting(np.pi / 2.0, 0.0),
    "y": RotationSetting(np.pi / 2.0, np.pi / 2.0),
    "z": RotationSetting(0.0, 0.0),
}


def rotation_map(s: RotationSetting) -> np.ndarray:
    """2x2 unitary of the two-pulse analysis rotation."""
    c = np.cos(s.theta / 2.0)
    sn = np.sin(s.theta / 2.0)
    return np.array(
        [
            [c, sn * np.exp(-1.0j * s.phi)],
            [-sn * np.exp(1.0j * s.phi), c],
        ],
        dtype=np.complex128,
    )


def outcome_probabilities(
    rho: DensityMatrix,
    s_a: RotationSetting,
    s_b: RotationSetting,
    det: DetectionModel,
    det_b: DetectionModel | None = None,
) -> np.ndarray:
    """Reported-outcome distribution over (bright, bright) .. (dark, dark).

    Rotates each qubit by its setting, projects in the computational basis,
    then applies the classical confusion matrix per party. ``det_b`` lets the
    second party use a different detection model (a photon polarization
    analyzer, for example); it defaults to ``det``.
    """
    if rho.dim != 4:
        raise ValueError(f"need a two-qubit state, got dim {rho.dim}")
    u = np.kron(rotation_map(s_a), rotation_map(s_b))
    diag = np.diag(u @ rho.matrix @ u.conj().T).real.reshape(2, 2)
    ca = det.confusion()
    cb = (det_b if det_b is not None else det).confusion()
    probs = np.einsum("ri,sj,ij->rs", ca, cb, diag).reshape(4)
    # clip parts-per-1e16 negatives from roundoff and renormalize exactly
    probs = np.clip(probs, 0.0, None)
    return probs / probs.sum()


def as_generator(seed) -> np.random.Generator:
    """Pass through a Generator, or build one from an integer seed."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample_outcomes(probs, n_events: int, seed) -> np.ndarray:
    """Multinomial counts over the four outcomes; reproducible for a fixed
    seed (the caller owns the random stream)."""
    p = np.asarray(probs, dtype=float)
    if p.shape != (4,) or np.any(p < 0.0) or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError("probs must be a distribution over the four outcomes")
    if n_events < 0:
        raise ValueError(f"n_events must be nonnegative, got {n_events}")
    if n_events == 0:
        return np.zeros(4, dtype=np.int64)
    rng = as_generator(seed)
    return rng.multinomial(n_events, p / p.sum()).astype(np.int64)
