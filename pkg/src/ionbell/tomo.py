"""Maximum-likelihood state tomography for two-qubit states.

Counts are taken in the nine products of the x, y, z analysis bases. The fit
maximizes the multinomial log-likelihood over density matrices through the
physical parametrization rho = T^dagger T / tr(T^dagger T) (T lower
triangular, 16 real parameters), climbing with a monotone diluted fixed-point
iteration; detection confusion is part of the forward model by default, so
the estimate refers to the pre-detection state. Bootstrap resampling of the
counts gives standard errors for the derived entanglement measures.
"""

import csv
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path

import numpy as np

from . import _kernels, linalg
from .measure import (
    BASIS_SETTINGS,
    DetectionModel,
    IDEAL_DETECTION,
    as_generator,
    outcome_probabilities,
    rotation_map,
    sample_outcomes,
)
from .states import (
    DensityMatrix,
    PureState,
    concurrence,
    entanglement_of_formation,
    fidelity_with_pure,
    ion_ion_singlet,
    purity,
)

BASES = ("x", "y", "z")
PROB_FLOOR = 1e-12
DEFAULT_MAX_ITER = 10_000
DEFAULT_REL_TOL = 1e-9
DEFAULT_RESTARTS = 5
INIT_JITTER = 1e-3

OUTCOME_COLUMNS = ("n_bb", "n_bd", "n_db", "n_dd")

_LOWER_OFFDIAG = ((1, 0), (2, 0), (2, 1), (3, 0), (3, 1), (3, 2))


@dataclass(frozen=True)
class TomographySetting:
    basis_a: str
    basis_b: str

    def __post_init__(self):
        if self.basis_a not in BASES or self.basis_b not in BASES:
            raise ValueError(f"bases must be in {BASES}")

    @property
    def label(self) -> str:
        return self.basis_a + self.basis_b


SETTINGS: tuple[TomographySetting, ...] = tuple(
    TomographySetting(a, b) for a, b in product(BASES, BASES)
)


@dataclass
class CountsTable:
    """Integer outcome counts per analysis setting, rows ordered as SETTINGS."""

    counts: np.ndarray
    settings: tuple[TomographySetting, ...] = SETTINGS

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        if c.shape != (len(self.settings), 4):
            raise ValueError(f"counts must have shape ({len(self.settings)}, 4)")
        if np.any(c < 0):
            raise ValueError("counts must be nonnegative")
        self.counts = c

    @property
    def total_events(self) -> int:
        return int(self.counts.sum())

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(("basis_a", "basis_b") + OUTCOME_COLUMNS)
            for setting, row in zip(self.settings, self.counts):
                writer.writerow([setting.basis_a, setting.basis_b] + [int(v) for v in row])

    @classmethod
    def from_csv(cls, path) -> "CountsTable":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if tuple(header) != ("basis_a", "basis_b") + OUTCOME_COLUMNS:
                raise ValueError(f"unexpected counts header: {header}")
            settings = []
            rows = []
            for rec in reader:
                settings.append(TomographySetting(rec[0], rec[1]))
                rows.append([int(v) for v in rec[2:6]])
        table = cls(counts=np.array(rows, dtype=np.int64), settings=tuple(settings))
        if table.settings != SETTINGS:
            raise ValueError("counts file does not enumerate the nine x/y/z settings in order")
        return table


@dataclass
class ReconstructionResult:
    rho: DensityMatrix
    nll: float
    iterations: int
    converged: bool
    measures: dict[str, float]
    measure_errors: dict[str, float] | None = None
    nll_trace: np.ndarray | None = field(default=None, repr=False)

    def to_json_dict(self) -> dict:
        m = self.rho.matrix
        return {
            "rho": [[[float(v.real), float(v.imag)] for v in row] for row in m],
            "nll": float(self.nll),
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
            "measures": {k: float(v) for k, v in self.measures.items()},
            "measure_errors": (
                None
                if self.measure_errors is None
                else {k: float(v) for k, v in self.measure_errors.items()}
            ),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "ReconstructionResult":
        m = np.array(
            [[complex(re, im) for re, im in row] for row in d["rho"]],
            dtype=np.complex128,
        )
        return cls(
            rho=DensityMatrix(m),
            nll=float(d["nll"]),
            iterations=int(d["iterations"]),
            converged=bool(d["converged"]),
            measures=dict(d["measures"]),
            measure_errors=None if d.get("measure_errors") is None else dict(d["measure_errors"]),
        )


def rho_from_params(t_params) -> np.ndarray:
    """Density matrix T^dagger T / tr(T^dagger T) from 16 real parameters.

    The first four parameters fill the real diagonal of the lower-triangular
    T; the remaining twelve fill the strictly lower triangle as (re, im)
    pairs in row-major order. Any real input yields a valid state.
    """
    t = np.asarray(t_params, dtype=float)
    if t.shape != (16,):
        raise ValueError("expected 16 real parameters")
    mat = np.zeros((4, 4), dtype=np.complex128)
    for i in range(4):
        mat[i, i] = t[i]
    for k, (r, c) in enumerate(_LOWER_OFFDIAG):
        mat[r, c] = t[4 + 2 * k] + 1.0j * t[5 + 2 * k]
    gram = mat.conj().T @ mat
    tr = gram.trace().real
    if tr <= 0.0:
        return np.eye(4, dtype=np.complex128) / 4.0
    return gram / tr


def params_from_rho(rho: np.ndarray) -> np.ndarray:
    """Inverse of rho_from_params up to normalization.

    A lower-triangular T with T^dagger T = rho comes from the Cholesky factor
    of the index-reversed matrix (tiny diagonal shift for rank-deficient
    input).
    """
    m = 0.5 * (rho + rho.conj().T)
    w, _ = linalg.hermitian_eig(m)
    shift = max(0.0, -float(w[0])) + 1e-12
    g = (m + shift * np.eye(4))[::-1, ::-1]
    tlow = np.linalg.cholesky(g).conj().T[::-1, ::-1]
    params = np.empty(16)
    for i in range(4):
        params[i] = tlow[i, i].real
    for k, (r, c) in enumerate(_LOWER_OFFDIAG):
        params[4 + 2 * k] = tlow[r, c].real
        params[5 + 2 * k] = tlow[r, c].imag
    return params


def build_povms(
    det: DetectionModel | None = None,
    det_b: DetectionModel | None = None,
    include_confusion: bool = True,
) -> np.ndarray:
    """Stacked (36, 4, 4) outcome operators for the nine settings.

    When ``include_confusion`` is set the detection confusion matrices are
    folded into the operators, so likelihoods refer to reported outcomes of
    the pre-detection state.
    """
    da = det if (include_confusion and det is not None) else IDEAL_DETECTION
    db = det_b if det_b is not None else da
    if not include_confusion:
        db = IDEAL_DETECTION
    ca = da.confusion()
    cb = db.confusion()
    povms = np.empty((9 * 4, 4, 4), dtype=np.complex128)
    idx = 0
    for setting in SETTINGS:
        ua = rotation_map(BASIS_SETTINGS[setting.basis_a])
        ub = rotation_map(BASIS_SETTINGS[setting.basis_b])
        u = np.kron(ua, ub)
        projs = [
            u.conj().T @ np.diag(_indicator(oa, ob)) @ u for oa in (0, 1) for ob in (0, 1)
        ]
        for oa in (0, 1):
            for ob in (0, 1):
                m = np.zeros((4, 4), dtype=np.complex128)
                for ta in (0, 1):
                    for tb in (0, 1):
                        m += ca[oa, ta] * cb[ob, tb] * projs[ta * 2 + tb]
                povms[idx] = 0.5 * (m + m.conj().T)
                idx += 1
    return povms


def _indicator(oa: int, ob: int) -> np.ndarray:
    v = np.zeros(4)
    v[oa * 2 + ob] = 1.0
    return v


def simulate_tomography_counts(
    rho_true: DensityMatrix,
    det: DetectionModel,
    events_per_setting,
    seed,
    det_b: DetectionModel | None = None,
) -> CountsTable:
    """Forward-sample multinomial counts for every analysis setting.

    ``events_per_setting`` is an integer applied to all nine settings or a
    sequence giving each setting its own total.
    """
    if np.isscalar(events_per_setting):
        totals = [int(events_per_setting)] * 9
    else:
        totals = [int(v) for v in events_per_setting]
        if len(totals) != 9:
            raise ValueError("need one event total per setting")
    rng = as_generator(seed)
    counts = np.zeros((9, 4), dtype=np.int64)
    for i, setting in enumerate(SETTINGS):
        probs = outcome_probabilities(
            rho_true,
            BASIS_SETTINGS[setting.basis_a],
            BASIS_SETTINGS[setting.basis_b],
            det,
            det_b,
        )
        counts[i] = sample_outcomes(probs, totals[i], rng)
    return CountsTable(counts=counts)


def _derived_measures(rho: DensityMatrix, target: PureState) -> dict[str, float]:
    c = concurrence(rho)
    return {
        "fidelity": fidelity_with_pure(rho, target),
        "concurrence": c,
        "eof": entanglement_of_formation(min(c, 1.0)),
        "purity": purity(rho),
    }


def mle_reconstruct(
    counts: CountsTable,
    det: DetectionModel,
    det_b: DetectionModel | None = None,
    include_confusion: bool = True,
    target: PureState | None = None,
    n_restarts: int = DEFAULT_RESTARTS,
    max_iter: int = DEFAULT_MAX_ITER,
    rel_tol: float = DEFAULT_REL_TOL,
    seed: int = 0,
) -> ReconstructionResult:
    """Maximum-likelihood density matrix from a counts table.

    Runs ``n_restarts`` jittered starts around the maximally mixed state and
    keeps the best final likelihood. The returned state is physical by
    construction; ``converged`` reports whether the ascent met the relative
    tolerance within the iteration cap on the winning restart.
    """
    if counts.total_events <= 0:
        raise ValueError("counts table is empty")
    povms = build_povms(det, det_b, include_confusion)
    flat = counts.counts.reshape(36).astype(float)
    rng = as_generator(seed)
    base_params = params_from_rho(np.eye(4, dtype=np.complex128) / 4.0)
    best = None
    for _ in range(max(1, n_restarts)):
        t0 = base_params + INIT_JITTER * rng.standard_normal(16)
        rho0 = np.ascontiguousarray(rho_from_params(t0))
        rho, nll, iters, conv, trace = _kernels.mle_fixed_point(
            povms, flat, rho0, max_iter, rel_tol, PROB_FLOOR
        )
        if best is None or nll < best[1]:
            best = (rho, nll, iters, conv, trace)
    rho, nll, iters, conv, trace = best
    state = DensityMatrix(rho)
    tgt = target if target is not None else ion_ion_singlet()
    return ReconstructionResult(
        rho=state,
        nll=float(nll),
        iterations=int(iters),
        converged=bool(conv),
        measures=_derived_measures(state, tgt),
        nll_trace=np.asarray(trace),
    )


def bootstrap_measures(
    counts: CountsTable,
    det: DetectionModel,
    n_resamples: int = 200,
    seed: int = 0,
    **reconstruct_kwargs,
) -> dict[str, float]:
    """Standard errors of the derived measures by multinomial resampling.

    Each resample redraws every setting's counts at its observed total,
    reruns the reconstruction with a derived seed, and the spread of each
    measure across resamples is reported as its standard error.
    """
    if n_resamples < 2:
        raise ValueError("need at least two resamples")
    rng = as_generator(seed)
    samples: dict[str, list[float]] = {}
    totals = counts.counts.sum(axis=1)
    for _ in range(n_resamples):
        resampled = np.zeros_like(counts.counts)
        for i in range(9):
            if totals[i] == 0:
                continue
            p = counts.counts[i] / totals[i]
            resampled[i] = rng.multinomial(totals[i], p)
        sub_seed = int(rng.integers(0, 2**63 - 1))
        result = mle_reconstruct(
            CountsTable(counts=resampled), det, seed=sub_seed, **reconstruct_kwargs
        )
        for k, v in result.measures.items():
            samples.setdefault(k, []).append(v)
    return {k: float(np.std(v, ddof=1)) for k, v in samples.items()}
