"""CHSH analysis: correlation functions, the S combination, and counting
statistics errors.

The correlation at a setting pair is E = p(b,b) + p(d,d) - p(b,d) - p(d,b)
over the reported outcomes, and S = |E1 + E2| + |E3 - E4| for the four
setting pairs ordered (a,b), (a',b), (a,b'), (a',b'). Local realistic
theories bound S by 2; quantum states reach 2*sqrt(2).
"""

from dataclasses import dataclass

import numpy as np

from .measure import DetectionModel, RotationSetting, outcome_probabilities
from .states import DensityMatrix

SettingPair = tuple[RotationSetting, RotationSetting]

# angle quadruple reproducing the measured two-ion table: theta_a = pi/2,
# theta_a' = 0, theta_b = pi/4, theta_b' = 3 pi/4, all phases 0
CHSH_SETTINGS_ION_ION: tuple[SettingPair, ...] = (
    (RotationSetting(np.pi / 2.0), RotationSetting(np.pi / 4.0)),
    (RotationSetting(0.0), RotationSetting(np.pi / 4.0)),
    (RotationSetting(np.pi / 2.0), RotationSetting(3.0 * np.pi / 4.0)),
    (RotationSetting(0.0), RotationSetting(3.0 * np.pi / 4.0)),
)

# the ion-photon pair carries its coherences in the z (x) z and x (x) y
# correlations, so the photon analyzer runs at phi = pi/2
CHSH_SETTINGS_ION_PHOTON: tuple[SettingPair, ...] = (
    (RotationSetting(np.pi / 2.0), RotationSetting(7.0 * np.pi / 4.0, np.pi / 2.0)),
    (RotationSetting(0.0), RotationSetting(7.0 * np.pi / 4.0, np.pi / 2.0)),
    (RotationSetting(np.pi / 2.0), RotationSetting(np.pi / 4.0, np.pi / 2.0)),
    (RotationSetting(0.0), RotationSetting(np.pi / 4.0, np.pi / 2.0)),
)


@dataclass(frozen=True)
class CorrelationEstimate:
    value: float
    std_error: float
    n_events: int

    def __post_init__(self):
        if self.std_error < 0.0:
            raise ValueError("std_error must be nonnegative")
        if self.n_events < 0:
            raise ValueError("n_events must be nonnegative")
        if abs(self.value) > 1.0 + 3.0 * self.std_error + 1e-12:
            raise ValueError(
                f"|E| = {abs(self.value)} exceeds 1 by more than 3 standard errors"
            )


@dataclass(frozen=True)
class ChshResult:
    s_value: float
    std_error: float
    settings: tuple[SettingPair, ...]
    correlations: tuple[CorrelationEstimate, ...]

    def recompute_s(self) -> float:
        e = [c.value for c in self.correlations]
        return abs(e[0] + e[1]) + abs(e[2] - e[3])

    def __post_init__(self):
        if len(self.correlations) != 4 or len(self.settings) != 4:
            raise ValueError("need exactly four correlations and setting pairs")
        if abs(self.s_value - self.recompute_s()) > 1e-12:
            raise ValueError("s_value does not match the stored correlations")


def correlation_from_probs(probs) -> float:
    """E from an outcome distribution (bb, bd, db, dd)."""
    p = np.asarray(probs, dtype=float)
    if p.shape != (4,):
        raise ValueError("expected four outcome probabilities")
    return float(p[0] + p[3] - p[1] - p[2])


def correlation_from_counts(counts) -> CorrelationEstimate:
    """Empirical E with the multinomial standard error sqrt((1 - E^2)/N)."""
    c = np.asarray(counts, dtype=np.int64)
    if c.shape != (4,) or np.any(c < 0):
        raise ValueError("expected four nonnegative counts")
    n = int(c.sum())
    if n == 0:
        raise ValueError("total count is zero")
    value = float(c[0] + c[3] - c[1] - c[2]) / n
    std_error = float(np.sqrt(max(1.0 - value * value, 0.0) / n))
    return CorrelationEstimate(value=value, std_error=std_error, n_events=n)


def chsh(correlations, settings) -> ChshResult:
    """Combine four correlation estimates into S with quadrature errors."""
    corr = tuple(correlations)
    sett = tuple(settings)
    if len(corr) != 4:
        raise ValueError("need exactly four correlation estimates")
    e = [c.value for c in corr]
    s = abs(e[0] + e[1]) + abs(e[2] - e[3])
    err = float(np.sqrt(sum(c.std_error**2 for c in corr)))
    return ChshResult(s_value=s, std_error=err, settings=sett, correlations=corr)


def chsh_predicted(
    rho: DensityMatrix,
    settings,
    det: DetectionModel,
    det_b: DetectionModel | None = None,
) -> float:
    """Exact S for a state and detection model, no sampling."""
    sett = tuple(settings)
    if len(sett) != 4:
        raise ValueError("need exactly four setting pairs")
    e = [
        correlation_from_probs(outcome_probabilities(rho, sa, sb, det, det_b))
        for sa, sb in sett
    ]
    return abs(e[0] + e[1]) + abs(e[2] - e[3])
