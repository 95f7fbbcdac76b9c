"""Two-photon Bell-state analyzer.

Each source photon is expanded into spatial-mode (x) polarization (x)
match-label Fock modes: amplitude sqrt(mode_overlap) in the common matched
wavepacket and sqrt(1 - mode_overlap) in a junk wavepacket orthogonal between
the two sources. The 50/50 beamsplitter acts on the spatial modes only. A
herald is a threshold click on each output port inside the coincidence
window; with perfectly overlapped photons that projects the photon pair onto
the polarization singlet and leaves the two ions in the entangled singlet
state.

Dark counts enter this analytic path as a false-herald fraction that mixes a
separable background state into the conditioned one (the Monte Carlo driver
samples them per attempt instead).
"""

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations_with_replacement

import numpy as np

from . import linalg
from .states import DensityMatrix

HERALD_SUPPORT_TOL = 1e-15

# single-photon modes: (port, polarization, match label)
_N_PORT, _N_POL, _N_TEMP = 2, 2, 3
_N_MODES = _N_PORT * _N_POL * _N_TEMP
_PAIRS = tuple(combinations_with_replacement(range(_N_MODES), 2))
_PAIR_INDEX = {pair: i for i, pair in enumerate(_PAIRS)}
_N_PAIRS = len(_PAIRS)


class NoHeraldSupportError(ValueError):
    """The herald has probability below 1e-15; no conditioned state exists."""


@dataclass(frozen=True)
class InterferometerModel:
    """Parameters of the heralding station."""

    mode_overlap: float = 1.0
    pmt_efficiency: float = 1.0
    dark_rate_hz: float = 0.0
    coincidence_window_ns: float = 25.0

    def __post_init__(self):
        if not 0.0 <= self.mode_overlap <= 1.0:
            raise ValueError(f"mode_overlap must be in [0, 1], got {self.mode_overlap}")
        if not 0.0 <= self.pmt_efficiency <= 1.0:
            raise ValueError(f"pmt_efficiency must be in [0, 1], got {self.pmt_efficiency}")
        if self.dark_rate_hz < 0.0:
            raise ValueError(f"dark_rate_hz must be nonnegative, got {self.dark_rate_hz}")
        if self.coincidence_window_ns <= 0.0:
            raise ValueError(
                f"coincidence_window_ns must be positive, got {self.coincidence_window_ns}"
            )

    def dark_click_probability(self) -> float:
        """Poisson probability of at least one dark count per detector in the
        full (two-sided) coincidence window."""
        window_s = 2.0 * self.coincidence_window_ns * 1e-9
        return float(-np.expm1(-self.dark_rate_hz * window_s))


@dataclass(frozen=True)
class HeraldResult:
    success_probability: float
    conditioned_state: DensityMatrix
    false_herald_fraction: float

    def __post_init__(self):
        if not 0.0 <= self.success_probability <= 1.0:
            raise ValueError("success_probability out of [0, 1]")
        if not 0.0 <= self.false_herald_fraction <= 1.0:
            raise ValueError("false_herald_fraction out of [0, 1]")


def _mode_index(port: int, pol: int, temp: int) -> int:
    return (port * _N_POL + pol) * _N_TEMP + temp


def _single_photon_bs_unitary() -> np.ndarray:
    """50/50 beamsplitter on the spatial modes, identity on pol and label."""
    u = np.zeros((_N_MODES, _N_MODES), dtype=np.complex128)
    inv = 1.0 / np.sqrt(2.0)
    for pol in range(_N_POL):
        for t in range(_N_TEMP):
            a, b = _mode_index(0, pol, t), _mode_index(1, pol, t)
            u[a, a] = inv
            u[a, b] = inv
            u[b, a] = inv
            u[b, b] = -inv
    return u


def _two_photon_unitary(u: np.ndarray) -> np.ndarray:
    """Lift a single-photon mode unitary to the two-photon Fock sector."""
    w = np.zeros((_N_PAIRS, _N_PAIRS), dtype=np.complex128)
    sqrt2 = np.sqrt(2.0)
    for col, (m1, m2) in enumerate(_PAIRS):
        norm = 1.0 / sqrt2 if m1 == m2 else 1.0
        for k in range(_N_MODES):
            for l in range(_N_MODES):
                c = norm * u[k, m1] * u[l, m2]
                if k == l:
                    w[_PAIR_INDEX[(k, k)], col] += c * sqrt2
                elif k < l:
                    w[_PAIR_INDEX[(k, l)], col] += c
                else:
                    w[_PAIR_INDEX[(l, k)], col] += c
    return w


_W_BS = _two_photon_unitary(_single_photon_bs_unitary())
_PORT_OF_MODE = tuple(m // (_N_POL * _N_TEMP) for m in range(_N_MODES))
_PAIR_CROSS = np.array(
    [1.0 if _PORT_OF_MODE[m1] != _PORT_OF_MODE[m2] else 0.0 for m1, m2 in _PAIRS]
)


def _lift_matrix(mu: float) -> np.ndarray:
    """Map polarization-pair amplitudes to the distinguishability-resolved
    two-photon Fock input (photon a on port 0, photon b on port 1)."""
    alpha = np.array([np.sqrt(mu), np.sqrt(1.0 - mu), 0.0])
    beta = np.array([np.sqrt(mu), 0.0, np.sqrt(1.0 - mu)])
    lift = np.zeros((_N_PAIRS, 4), dtype=np.complex128)
    for pa in range(2):
        for pb in range(2):
            for t in range(_N_TEMP):
                for tp in range(_N_TEMP):
                    m1 = _mode_index(0, pa, t)
                    m2 = _mode_index(1, pb, tp)
                    pair = (m1, m2) if m1 <= m2 else (m2, m1)
                    lift[_PAIR_INDEX[pair], pa * 2 + pb] += alpha[t] * beta[tp]
    return lift


@lru_cache(maxsize=64)
def _pair_povms(mu: float, eta: float):
    """Effective 4x4 polarization-pair operators for the coincidence and
    single-click outcomes, obtained by pushing the full Fock-space herald
    back through the beamsplitter and the mode lift."""
    after_bs = _W_BS @ _lift_matrix(mu)
    eta_miss = 1.0 - eta
    w_coinc = _PAIR_CROSS * eta * eta
    w_single = np.where(
        _PAIR_CROSS > 0.5, 2.0 * eta * eta_miss, eta * (2.0 - eta)
    )
    q_coinc = after_bs.conj().T @ (w_coinc[:, None] * after_bs)
    q_single = after_bs.conj().T @ (w_single[:, None] * after_bs)
    return q_coinc, q_single


def joint_source_state(rho_a: DensityMatrix, rho_b: DensityMatrix) -> DensityMatrix:
    """Tensor product of two ion-photon source states, ordered
    ion_a (x) photon_a (x) ion_b (x) photon_b."""
    if rho_a.dim != 4 or rho_b.dim != 4:
        raise ValueError("each source state must be a 4-dimensional ion-photon pair")
    return DensityMatrix(np.kron(rho_a.matrix, rho_b.matrix))


def _ions_pols_view(joint: DensityMatrix) -> np.ndarray:
    """Reorder the joint state to (ion_a, ion_b) x (pol_a, pol_b) and reshape
    to a (4, 4, 4, 4) array indexed (ions_row, pols_row, ions_col, pols_col)."""
    if joint.dim != 16:
        raise ValueError(f"joint state must be 16-dimensional, got {joint.dim}")
    m = linalg.permute_subsystems(joint.matrix, (2, 2, 2, 2), (0, 2, 1, 3))
    return m.reshape(4, 4, 4, 4)


def _coincidence_pieces(joint: DensityMatrix, model: InterferometerModel):
    view = _ions_pols_view(joint)
    q_coinc, q_single = _pair_povms(model.mode_overlap, model.pmt_efficiency)
    cond = np.einsum("qp,ipjq->ij", q_coinc, view)
    p_coinc = float(cond.trace().real)
    p_single = float(np.einsum("qp,ipiq->", q_single, view).real)
    return cond, max(p_coinc, 0.0), min(max(p_single, 0.0), 1.0)


def cross_port_probability(joint: DensityMatrix, model: InterferometerModel) -> float:
    """Probability of a real cross-port coincidence (one detected photon per
    output port) for the given joint source state; no dark counts."""
    _, p_coinc, _ = _coincidence_pieces(joint, model)
    return p_coinc


def click_statistics(joint: DensityMatrix, model: InterferometerModel) -> dict:
    """Per-double-emission probabilities of the detector outcomes:
    ``coincidence`` (one click per port), ``single`` (exactly one port
    clicks), ``none``."""
    _, p_coinc, p_single = _coincidence_pieces(joint, model)
    return {
        "coincidence": p_coinc,
        "single": p_single,
        "none": max(1.0 - p_coinc - p_single, 0.0),
    }


def false_herald_probability(model: InterferometerModel, photon_click_prob: float) -> float:
    """Probability per attempt of a spurious coincidence from dark counts.

    ``photon_click_prob`` is the per-attempt probability that exactly one
    real photon click occurs; the spurious coincidence then needs one dark
    count on the opposite detector, or two dark counts when nothing real
    clicked. Dark statistics are Poisson in the full coincidence window.
    """
    if not 0.0 <= photon_click_prob <= 1.0:
        raise ValueError(f"photon_click_prob must be in [0, 1], got {photon_click_prob}")
    p_dark = model.dark_click_probability()
    return photon_click_prob * p_dark + (1.0 - photon_click_prob) * p_dark * p_dark


def _ion_marginals_product(joint: DensityMatrix) -> np.ndarray:
    m = joint.matrix
    rho_a_pair = linalg.partial_trace(m, "a", 4, 4)  # ion_a x photon_a
    rho_b_pair = linalg.partial_trace(m, "b", 4, 4)
    ion_a = linalg.partial_trace(rho_a_pair, "a", 2, 2)
    ion_b = linalg.partial_trace(rho_b_pair, "a", 2, 2)
    return np.kron(ion_a, ion_b)


def beamsplitter_coincidence(
    joint: DensityMatrix,
    model: InterferometerModel,
    background: DensityMatrix | None = None,
) -> HeraldResult:
    """Condition the two ions on a cross-port coincidence.

    Returns the per-double-emission success probability (real coincidences
    plus dark-count fakes), the normalized conditioned two-ion state with the
    false-herald background mixed in, and the false-herald fraction. The
    background defaults to the product of the single-ion marginals. Raises
    NoHeraldSupportError when the herald probability is below 1e-15.
    """
    cond, p_coinc, p_single = _coincidence_pieces(joint, model)
    p_false = false_herald_probability(model, p_single)
    p_success = p_coinc + p_false
    if p_success < HERALD_SUPPORT_TOL:
        raise NoHeraldSupportError("no herald support")
    if p_false > 0.0:
        bg = background.matrix if background is not None else _ion_marginals_product(joint)
        mixed = (cond + p_false * bg) / p_success
    else:
        mixed = cond / p_success
    state = DensityMatrix(0.5 * (mixed + mixed.conj().T))
    return HeraldResult(
        success_probability=p_success,
        conditioned_state=state,
        false_herald_fraction=p_false / p_success,
    )


def photon_singlet_projector() -> np.ndarray:
    """Projector onto the polarization singlet ``(|HV> - |VH>)/sqrt(2)``."""
    v = np.zeros(4, dtype=np.complex128)
    v[1] = 1.0 / np.sqrt(2.0)
    v[2] = -1.0 / np.sqrt(2.0)
    return np.outer(v, v.conj())


def predict_ionion_from_ionphoton(
    rho_ip_a: DensityMatrix, rho_ip_b: DensityMatrix
) -> DensityMatrix:
    """Two-ion state under ideal interference, from two ion-photon states.

    Projects the paired photon subsystems onto the polarization singlet and
    normalizes: the infinite-contrast limit of the analyzer, useful to
    predict what a measured ion-photon state implies for the ion-ion state.
    """
    joint = joint_source_state(rho_ip_a, rho_ip_b)
    view = _ions_pols_view(joint)
    proj = photon_singlet_projector()
    cond = np.einsum("qp,ipjq->ij", proj, view)
    p = float(cond.trace().real)
    if p < HERALD_SUPPORT_TOL:
        raise NoHeraldSupportError("no herald support")
    cond = cond / p
    return DensityMatrix(0.5 * (cond + cond.conj().T))
