"""Dense complex linear algebra sized for 2-16 dimensional Hilbert spaces.

Everything here operates on plain ``numpy.ndarray`` objects of dtype
complex128. Tolerances are fixed constants of the kernel, not user
parameters: Hermiticity is required within 1e-10, eigendecompositions
reconstruct their input within 1e-10 (Frobenius), and the PSD square root
round-trips within 1e-9.
"""

import numpy as np

from . import _kernels

HERMITIAN_TOL = 1e-10
JACOBI_OFF_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
PSD_CLIP = -1e-10
PSD_REJECT = -1e-8


def as_complex_matrix(m) -> np.ndarray:
    """Coerce to a C-contiguous complex128 2-D array, checking finiteness."""
    a = np.ascontiguousarray(m, dtype=np.complex128)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got ndim={a.ndim}")
    if not np.all(np.isfinite(a.real)) or not np.all(np.isfinite(a.imag)):
        raise ValueError("matrix entries must be finite")
    return a


def frobenius(m) -> float:
    return float(np.linalg.norm(np.asarray(m)))


def kron(a, b) -> np.ndarray:
    """Kronecker product with the first factor's indices major."""
    return np.kron(as_complex_matrix(a), as_complex_matrix(b))


def partial_trace(m, keep: str, dim_a: int, dim_b: int) -> np.ndarray:
    """Reduce a (dim_a*dim_b)-dimensional operator to one subsystem.

    ``keep`` selects the retained subsystem, "a" (major factor) or "b".
    The trace of the result equals the trace of the input.
    """
    a = as_complex_matrix(m)
    d = dim_a * dim_b
    if a.shape != (d, d):
        raise ValueError(
            f"dimension mismatch: matrix is {a.shape}, expected ({d}, {d})"
        )
    r = a.reshape(dim_a, dim_b, dim_a, dim_b)
    k = keep.lower()
    if k == "a":
        return np.einsum("ikjk->ij", r)
    if k == "b":
        return np.einsum("kikj->ij", r)
    raise ValueError(f"keep must be 'a' or 'b', got {keep!r}")


def permute_subsystems(m, dims, perm) -> np.ndarray:
    """Reorder tensor factors of an operator on a product space.

    ``dims`` are the factor dimensions in the current order; ``perm`` lists,
    for each output slot, which input factor goes there.
    """
    a = as_complex_matrix(m)
    dims = tuple(int(d) for d in dims)
    n = len(dims)
    total = int(np.prod(dims))
    if a.shape != (total, total):
        raise ValueError("dimension mismatch between matrix and dims")
    if sorted(perm) != list(range(n)):
        raise ValueError("perm must be a permutation of the factor indices")
    axes = list(perm) + [n + p for p in perm]
    out_dims = tuple(dims[p] for p in perm)
    r = a.reshape(dims + dims).transpose(axes)
    return np.ascontiguousarray(r.reshape(total, total))


def _check_hermitian(a: np.ndarray) -> np.ndarray:
    dev = frobenius(a - a.conj().T)
    if dev > HERMITIAN_TOL * max(1.0, frobenius(a)):
        raise ValueError(f"matrix is not Hermitian (deviation {dev:.3e})")
    return 0.5 * (a + a.conj().T)


def hermitian_eig(m):
    """Eigendecomposition of a Hermitian matrix via cyclic Jacobi rotations.

    Returns (eigenvalues ascending, unitary matrix of eigenvector columns).
    The input is symmetrized internally; non-square or non-Hermitian input
    raises ValueError.
    """
    a = as_complex_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix must be square, got {a.shape}")
    a = _check_hermitian(a)
    tol = JACOBI_OFF_TOL * max(1.0, frobenius(a))
    w, v = _kernels.jacobi_hermitian(a, tol, JACOBI_MAX_SWEEPS)
    return w, v


def sqrt_psd(m) -> np.ndarray:
    """Hermitian square root of a positive-semidefinite matrix.

    Eigenvalues slightly negative from roundoff are clipped to zero; an
    eigenvalue below -1e-8 means the input is genuinely not PSD and raises.
    """
    w, v = hermitian_eig(m)
    if w[0] < PSD_REJECT:
        raise ValueError(f"not PSD (minimum eigenvalue {w[0]:.3e})")
    w = np.where(w < 0.0, 0.0, w)
    root = (v * np.sqrt(w)) @ v.conj().T
    return 0.5 * (root + root.conj().T)


def min_eigenvalue(m) -> float:
    """Smallest eigenvalue of a Hermitian matrix."""
    w, _ = hermitian_eig(m)
    return float(w[0])
