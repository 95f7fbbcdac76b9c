"""Dual-backend numeric kernels.

Two hot loops live here: the cyclic Jacobi eigensolver for complex Hermitian
matrices and the monotone (diluted) fixed-point iteration used by the
maximum-likelihood tomography fit. Each is available in a numba-jitted form
and a pure-numpy form; the public aliases ``jacobi_hermitian`` and
``mle_fixed_point`` point at whichever backend is active (see `_accel`).

Both backends implement the identical algorithm. Results agree to floating
point roundoff (summation order differs), which the test suite checks.
"""

import numpy as np

from ._accel import HAVE_NUMBA, njit

_DILUTION_STEPS = np.array([-1.0, 1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625])


def jacobi_hermitian_numpy(mat, tol, max_sweeps):
    """Cyclic Jacobi diagonalization of a complex Hermitian matrix.

    Sweeps zero one off-diagonal element at a time with a complex plane
    rotation until the off-diagonal Frobenius norm drops below ``tol`` or
    ``max_sweeps`` sweeps have run. Returns (eigenvalues ascending,
    eigenvector columns in matching order).
    """
    n = mat.shape[0]
    h = mat.copy()
    v = np.eye(n, dtype=np.complex128)
    for _ in range(max_sweeps):
        off2 = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off2 += h[p, q].real ** 2 + h[p, q].imag ** 2
        if np.sqrt(2.0 * off2) <= tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                hpq = h[p, q]
                r = abs(hpq)
                if r < 1e-300:
                    continue
                phase = hpq / r
                tau = (h[q, q].real - h[p, p].real) / (2.0 * r)
                # smaller-magnitude root of r t^2 - 2 r tau t - r = 0
                if tau >= 0.0:
                    t = -1.0 / (tau + np.sqrt(tau * tau + 1.0))
                else:
                    t = 1.0 / (-tau + np.sqrt(tau * tau + 1.0))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                sp = s * phase
                spc = s * np.conj(phase)
                col_p = c * h[:, p] + spc * h[:, q]
                col_q = -sp * h[:, p] + c * h[:, q]
                h[:, p] = col_p
                h[:, q] = col_q
                row_p = c * h[p, :] + sp * h[q, :]
                row_q = -spc * h[p, :] + c * h[q, :]
                h[p, :] = row_p
                h[q, :] = row_q
                vcol_p = c * v[:, p] + spc * v[:, q]
                vcol_q = -sp * v[:, p] + c * v[:, q]
                v[:, p] = vcol_p
                v[:, q] = vcol_q
    w = np.empty(n)
    for i in range(n):
        w[i] = h[i, i].real
    order = np.argsort(w)
    w_sorted = np.empty(n)
    v_sorted = np.empty((n, n), dtype=np.complex128)
    for i in range(n):
        w_sorted[i] = w[order[i]]
        v_sorted[:, i] = v[:, order[i]]
    return w_sorted, v_sorted


def mle_fixed_point_numpy(povms, counts, rho0, max_iter, rel_tol, floor):
    """Monotone diluted fixed-point ascent of the multinomial log-likelihood.

    ``povms`` is a stacked (K, d, d) array of Hermitian outcome operators,
    ``counts`` the matching K observed counts. Starting from ``rho0`` the
    update candidate is R rho R (R the likelihood gradient operator); if that
    would lower the likelihood the step is diluted toward the identity until
    it does not. Iteration stops once the relative improvement between
    accepted steps falls below ``rel_tol`` or no candidate improves.

    Returns (rho, nll, iterations, converged, nll_trace).
    """
    d = rho0.shape[0]
    ntot = counts.sum()
    freq = counts / ntot
    rho = rho0.copy()
    probs = np.einsum("kij,ji->k", povms, rho).real
    np.clip(probs, floor, None, out=probs)
    nll = -float((counts * np.log(probs)).sum())
    trace = np.empty(max_iter + 1)
    trace[0] = nll
    eye = np.eye(d)
    iterations = 0
    converged = False
    for it in range(max_iter):
        ratio = freq / probs
        r_op = np.einsum("k,kij->ij", ratio, povms)
        r_op = 0.5 * (r_op + r_op.conj().T)
        accepted = False
        for eps in _DILUTION_STEPS:
            a_op = r_op if eps < 0.0 else (eye + eps * r_op) / (1.0 + eps)
            cand = a_op @ rho @ a_op
            cand = 0.5 * (cand + cand.conj().T)
            tr = cand.trace().real
            if tr <= 0.0:
                continue
            cand = cand / tr
            p_c = np.einsum("kij,ji->k", povms, cand).real
            np.clip(p_c, floor, None, out=p_c)
            nll_c = -float((counts * np.log(p_c)).sum())
            if nll_c <= nll:
                improvement = nll - nll_c
                rho = cand
                probs = p_c
                nll = nll_c
                accepted = True
                break
        if not accepted:
            converged = True
            break
        iterations = it + 1
        trace[iterations] = nll
        if improvement <= rel_tol * max(1.0, abs(nll)):
            converged = True
            break
    return rho, nll, iterations, converged, trace[: iterations + 1].copy()


def _mle_fixed_point_loops(povms, counts, rho0, max_iter, rel_tol, floor):
    # Same algorithm as mle_fixed_point_numpy, written with explicit loops
    # so numba compiles the whole iteration without object-mode fallbacks.
    nk = povms.shape[0]
    d = rho0.shape[0]
    ntot = 0.0
    for k in range(nk):
        ntot += counts[k]
    rho = rho0.copy()
    probs = np.empty(nk)
    for k in range(nk):
        s = 0.0
        for i in range(d):
            for j in range(d):
                s += (povms[k, i, j] * rho[j, i]).real
        probs[k] = s if s > floor else floor
    nll = 0.0
    for k in range(nk):
        nll -= counts[k] * np.log(probs[k])
    trace = np.empty(max_iter + 1)
    trace[0] = nll
    eye = np.eye(d, dtype=np.complex128)
    r_op = np.empty((d, d), dtype=np.complex128)
    p_c = np.empty(nk)
    iterations = 0
    converged = False
    improvement = 0.0
    for it in range(max_iter):
        for i in range(d):
            for j in range(d):
                acc = 0.0 + 0.0j
                for k in range(nk):
                    acc += (counts[k] / (ntot * probs[k])) * povms[k, i, j]
                r_op[i, j] = acc
        for i in range(d):
            for j in range(i, d):
                m = 0.5 * (r_op[i, j] + np.conj(r_op[j, i]))
                r_op[i, j] = m
                r_op[j, i] = np.conj(m)
        accepted = False
        for step in range(_DILUTION_STEPS.shape[0]):
            eps = _DILUTION_STEPS[step]
            a_op = r_op if eps < 0.0 else (eye + eps * r_op) / (1.0 + eps)
            cand = a_op @ rho @ a_op
            for i in range(d):
                for j in range(i, d):
                    m = 0.5 * (cand[i, j] + np.conj(cand[j, i]))
                    cand[i, j] = m
                    cand[j, i] = np.conj(m)
            tr = 0.0
            for i in range(d):
                tr += cand[i, i].real
            if tr <= 0.0:
                continue
            cand = cand / tr
            for k in range(nk):
                s = 0.0
                for i in range(d):
                    for j in range(d):
                        s += (povms[k, i, j] * cand[j, i]).real
                p_c[k] = s if s > floor else floor
            nll_c = 0.0
            for k in range(nk):
                nll_c -= counts[k] * np.log(p_c[k])
            if nll_c <= nll:
                improvement = nll - nll_c
                rho = cand
                for k in range(nk):
                    probs[k] = p_c[k]
                nll = nll_c
                accepted = True
                break
        if not accepted:
            converged = True
            break
        iterations = it + 1
        trace[iterations] = nll
        if improvement <= rel_tol * max(1.0, abs(nll)):
            converged = True
            break
    return rho, nll, iterations, converged, trace[: iterations + 1].copy()


if HAVE_NUMBA:
    jacobi_hermitian_numba = njit(cache=True)(jacobi_hermitian_numpy)
    mle_fixed_point_numba = njit(cache=True)(_mle_fixed_point_loops)
    jacobi_hermitian = jacobi_hermitian_numba
    mle_fixed_point = mle_fixed_point_numba
else:
    jacobi_hermitian_numba = None
    mle_fixed_point_numba = None
    jacobi_hermitian = jacobi_hermitian_numpy
    mle_fixed_point = mle_fixed_point_numpy
