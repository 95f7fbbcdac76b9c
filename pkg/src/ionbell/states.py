"""Quantum state construction, noise channels, and entanglement measures.

States live on 2- or 4-dimensional qubit spaces with the package-wide basis
order (ion: ``|1,1>``, ``|1,-1>``; photon: H, V; pairs ordered major-first).
Every constructed ``DensityMatrix`` is validated against its invariants
(Hermitian within 1e-10, unit trace within 1e-9, minimum eigenvalue above
-1e-9), so a successfully returned state is always physical.
"""

from dataclasses import dataclass, field

import numpy as np

from . import linalg

NORM_TOL = 1e-10
TRACE_TOL = 1e-9
EIG_TOL = -1e-9
KRAUS_TOL = 1e-9

PAULI_I = np.eye(2, dtype=np.complex128)
PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128)
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=np.complex128)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=np.complex128)
_PAULI_BY_AXIS = {"x": PAULI_X, "y": PAULI_Y, "z": PAULI_Z}


@dataclass(frozen=True)
class PureState:
    """Normalized state vector (dimensionless complex amplitudes)."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amp = np.ascontiguousarray(self.amplitudes, dtype=np.complex128)
        if amp.ndim != 1 or amp.size == 0:
            raise ValueError("amplitudes must be a nonempty 1-D vector")
        if not np.all(np.isfinite(amp.real)) or not np.all(np.isfinite(amp.imag)):
            raise ValueError("amplitudes must be finite")
        norm = np.linalg.norm(amp)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state not normalized (norm {norm!r})")
        object.__setattr__(self, "amplitudes", amp)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def projector(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())


@dataclass(frozen=True)
class DensityMatrix:
    """Trace-one positive-semidefinite operator; the central state object."""

    matrix: np.ndarray

    def __post_init__(self):
        m = linalg.as_complex_matrix(self.matrix)
        if m.shape[0] != m.shape[1]:
            raise ValueError(f"density matrix must be square, got {m.shape}")
        dev = linalg.frobenius(m - m.conj().T)
        if dev > 1e-10 * max(1.0, linalg.frobenius(m)):
            raise ValueError(f"density matrix not Hermitian (deviation {dev:.3e})")
        m = 0.5 * (m + m.conj().T)
        tr = m.trace().real
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"trace must be 1, got {tr!r}")
        if linalg.min_eigenvalue(m) < EIG_TOL:
            raise ValueError(
                f"not positive semidefinite (min eigenvalue {linalg.min_eigenvalue(m):.3e})"
            )
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_pure(cls, psi: PureState) -> "DensityMatrix":
        return cls(psi.projector())


@dataclass(frozen=True)
class QubitChannel:
    """Trace-preserving channel given by its Kraus operators (2x2 or 4x4)."""

    kraus_operators: tuple = field()

    def __post_init__(self):
        ops = tuple(linalg.as_complex_matrix(k) for k in self.kraus_operators)
        if not ops:
            raise ValueError("channel needs at least one Kraus operator")
        d = ops[0].shape[0]
        if any(k.shape != (d, d) for k in ops):
            raise ValueError("all Kraus operators must share one square shape")
        if d not in (2, 4):
            raise ValueError(f"Kraus operators must be 2x2 or 4x4, got {d}x{d}")
        total = sum(k.conj().T @ k for k in ops)
        dev = linalg.frobenius(total - np.eye(d))
        if dev > KRAUS_TOL:
            raise ValueError(f"channel is not trace preserving (deviation {dev:.3e})")
        object.__setattr__(self, "kraus_operators", ops)

    @property
    def dim(self) -> int:
        return self.kraus_operators[0].shape[0]


def basis_ket(dim: int, index: int) -> np.ndarray:
    v = np.zeros(dim, dtype=np.complex128)
    v[index] = 1.0
    return v


def ion_photon_state() -> PureState:
    """Entangled ion-photon pair behind the quarter-wave plate.

    ``(|1,1>|V> - i |1,-1>|H>)/sqrt(2)`` in the fixed ion (x) photon order.
    """
    amp = np.zeros(4, dtype=np.complex128)
    amp[1] = 1.0 / np.sqrt(2.0)  # |1,1>|V>
    amp[2] = -1.0j / np.sqrt(2.0)  # |1,-1>|H>
    return PureState(amp)


def ion_ion_singlet() -> PureState:
    """Two-ion singlet ``(|1,1>|1,-1> - |1,-1>|1,1>)/sqrt(2)``."""
    amp = np.zeros(4, dtype=np.complex128)
    amp[1] = 1.0 / np.sqrt(2.0)
    amp[2] = -1.0 / np.sqrt(2.0)
    return PureState(amp)


def werner_state(p: float) -> DensityMatrix:
    """Mixture ``p |psi-><psi-| + (1-p) I/4`` of singlet and white noise."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must be in [0, 1], got {p}")
    m = p * ion_ion_singlet().projector() + (1.0 - p) * np.eye(4) / 4.0
    return DensityMatrix(m)


def dephasing_channel(p: float) -> QubitChannel:
    """Phase flip with probability ``p`` (magnetic-field dephasing model)."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must be in [0, 1], got {p}")
    return QubitChannel((np.sqrt(1.0 - p) * PAULI_I, np.sqrt(p) * PAULI_Z))


def rotation_channel(angle: float, axis: str = "x") -> QubitChannel:
    """Unitary rotation by ``angle`` about a Bloch axis (polarization error)."""
    if axis not in _PAULI_BY_AXIS:
        raise ValueError(f"axis must be one of x, y, z, got {axis!r}")
    n = _PAULI_BY_AXIS[axis]
    u = np.cos(angle / 2.0) * PAULI_I - 1.0j * np.sin(angle / 2.0) * n
    return QubitChannel((u,))


def replacement_channel(p: float, replacement: DensityMatrix | None = None, dim: int = 4) -> QubitChannel:
    """Erasure: with probability ``p`` the state is swapped for ``replacement``.

    Models leakage of the emitter out of the qubit subspace; the default
    replacement is the maximally mixed state on ``dim`` dimensions.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must be in [0, 1], got {p}")
    if replacement is None:
        sigma = np.eye(dim, dtype=np.complex128) / dim
    else:
        sigma = replacement.matrix
        dim = replacement.dim
    w, v = linalg.hermitian_eig(sigma)
    ops = [np.sqrt(1.0 - p) * np.eye(dim, dtype=np.complex128)]
    for k in range(dim):
        if w[k] <= 0.0:
            continue
        for j in range(dim):
            op = np.sqrt(p * w[k]) * np.outer(v[:, k], basis_ket(dim, j).conj())
            ops.append(op)
    return QubitChannel(tuple(ops))


def apply_channel(rho: DensityMatrix, ch: QubitChannel, target: int | None = None) -> DensityMatrix:
    """Apply ``ch`` to one subsystem (``target`` 0 or 1) or to the whole state.

    A 2x2 channel on a 4-dimensional state acts on the addressed qubit; when
    the channel dimension equals the state dimension it acts on everything
    and ``target`` is ignored.
    """
    m = rho.matrix
    d = rho.dim
    if ch.dim == d:
        lifted = ch.kraus_operators
    elif ch.dim == 2 and d == 4:
        if target not in (0, 1):
            raise ValueError("target subsystem must be 0 or 1 for a 2x2 channel on a pair")
        eye = np.eye(2, dtype=np.complex128)
        if target == 0:
            lifted = tuple(np.kron(k, eye) for k in ch.kraus_operators)
        else:
            lifted = tuple(np.kron(eye, k) for k in ch.kraus_operators)
    else:
        raise ValueError(f"channel dimension {ch.dim} does not fit state dimension {d}")
    out = np.zeros_like(m)
    for k in lifted:
        out += k @ m @ k.conj().T
    return DensityMatrix(out)


def fidelity_with_pure(rho: DensityMatrix, psi: PureState) -> float:
    """Overlap ``<psi| rho |psi>`` with a pure target state."""
    if rho.dim != psi.dim:
        raise ValueError(f"dimension mismatch: state {rho.dim}, target {psi.dim}")
    v = psi.amplitudes
    val = v.conj() @ rho.matrix @ v
    if abs(val.imag) > 1e-10:
        raise ValueError(f"fidelity has spurious imaginary part {val.imag!r}")
    return float(val.real)


def purity(rho: DensityMatrix) -> float:
    """``tr(rho^2)``."""
    return float((rho.matrix @ rho.matrix).trace().real)


def concurrence(rho: DensityMatrix) -> float:
    """Two-qubit concurrence via the spin-flip construction.

    Uses the Hermitian form sqrt(rho) rho~ sqrt(rho), with
    rho~ = (Y x Y) rho* (Y x Y), so only the Hermitian eigensolver is needed.
    """
    if rho.dim != 4:
        raise ValueError(f"concurrence is defined for two qubits, got dim {rho.dim}")
    yy = np.kron(PAULI_Y, PAULI_Y)
    rho_tilde = yy @ rho.matrix.conj() @ yy
    root = linalg.sqrt_psd(rho.matrix)
    herm = root @ rho_tilde @ root
    w, _ = linalg.hermitian_eig(herm)
    lam = np.sqrt(np.clip(w, 0.0, None))[::-1]
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def _binary_entropy(x: float) -> float:
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return float(-x * np.log2(x) - (1.0 - x) * np.log2(1.0 - x))


def entanglement_of_formation(c: float) -> float:
    """Entanglement of formation as a function of concurrence ``c``.

    ``h((1 + sqrt(1 - c^2)) / 2)`` with h the base-2 binary entropy.
    """
    if not 0.0 <= c <= 1.0:
        raise ValueError(f"concurrence must be in [0, 1], got {c}")
    return _binary_entropy((1.0 + np.sqrt(1.0 - c * c)) / 2.0)
