"""Spectral stability of periodic waves through the linearized operator L = D^a + c - 2 psi.

Counts negative and zero eigenvalues of L, computes b'(c) from a linear
solve on the even zero-mean subspace, checks the constrained 2x2 matrices
against their closed forms, and issues the stability verdict.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import eig, eigh, eigvalsh, lapack, lu_factor, lu_solve, toeplitz

from config import settings
from models.galileo import ZeroMeanWave, band_limited_max, diagnostics
from models.wave_solvers import SolverConfig, even_linear_operator, restricted_operator
from utils.errors import DegenerateKernelError, InvalidArgumentError, NearFoldError, ResolutionError
from utils.fourier_core import (
    field_from_coeffs,
    field_from_cosine,
    frac_derivative,
    make_grid,
    multiply,
    square,
)

LOGGER = logging.getLogger(__name__)

MIN_GALERKIN_MODES = 16
FOLD_GAP = 1e-4


class VerdictKind(Enum):
    """Stability verdict for a single wave"""
    STABLE = "Stable"
    MARGINALLY_STABLE = "MarginallyStable"
    UNSTABLE = "Unstable"
    DEGENERATE_KERNEL = "DegenerateKernel"


@dataclass(frozen=True)
class OperatorMatrix:
    """Galerkin matrix of L over the modes |m| <= K, ordered m = -K..K."""
    alpha: float
    c: float
    modes: int
    entries: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return 2 * self.modes + 1

    @property
    def wavenumbers(self) -> np.ndarray:
        return np.arange(-self.modes, self.modes + 1)

    @property
    def norm(self) -> float:
        """Infinity norm, an upper bound for the spectral radius."""
        return float(np.abs(self.entries).sum(axis=1).max())


@dataclass(frozen=True)
class EigenCounts:
    n: int
    z: int
    lowest: np.ndarray
    scale: float
    ground_state_sign_changes: int = 0


@dataclass(frozen=True)
class BPrimeResult:
    value: float
    method_gap: float
    sigma_min: float
    derivative: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class ConstraintReport:
    P: np.ndarray
    D: np.ndarray
    det_P: float
    det_D: float
    det_P_closed: float
    det_D_closed: float
    entry_errors: Dict[str, float]
    near_fold: bool

    @property
    def det_P_error(self) -> float:
        return _scaled_gap(self.det_P, self.det_P_closed, np.abs(self.P).max() ** 2)

    @property
    def det_D_error(self) -> float:
        return _scaled_gap(self.det_D, self.det_D_closed, np.abs(self.D).max() ** 2)


@dataclass(frozen=True)
class StabilityVerdict:
    kind: VerdictKind
    n_L: int
    z_L: int
    b_prime: float
    c_plus_2bprime: float


@dataclass(frozen=True)
class SpectrumReport:
    max_real_part: float
    eigenvalue: complex
    eigenvalues: np.ndarray = field(repr=False)
    raw_eigenvalues: np.ndarray = field(repr=False)
    deflated: bool = False


@dataclass(frozen=True)
class PointAnalysis:
    """Everything the branch tracer records about one wave."""
    verdict: StabilityVerdict
    counts: EigenCounts
    b_prime: BPrimeResult
    gamma: float
    mu: float
    constraints: Optional[ConstraintReport] = None
    spectrum: Optional[SpectrumReport] = None
    range_residuals: Dict[str, float] = field(default_factory=dict)


def _scaled_gap(value: float, reference: float, scale: float) -> float:
    """Error relative to max(|reference|, scale); scale is the size of the matrix the value comes from."""
    return abs(value - reference) / max(abs(reference), scale, np.finfo(float).tiny)


def predicted_counts(c_plus_2bprime: float, tol: float = 0.0) -> Tuple[int, int]:
    """(n(L), z(L)) predicted from the sign of c + 2b'(c)."""
    if abs(c_plus_2bprime) <= tol:
        return 1, 2
    return (1, 1) if c_plus_2bprime > 0 else (2, 1)


def galerkin_modes(w: ZeroMeanWave, cfg: Optional[SolverConfig] = None) -> int:
    """Smallest K past which the coefficients of psi fall below tail_tol/100, capped by N/2 - 1."""
    cfg = cfg or SolverConfig()
    half = w.n_modes // 2
    magnitudes = np.abs(w.psi.coeffs[: half])
    significant = np.nonzero(magnitudes > 1e-2 * cfg.tail_tol)[0]
    last = int(significant[-1]) if significant.size else 0
    modes = min(half - 1, max(last + cfg.tail_window, MIN_GALERKIN_MODES))
    if modes > cfg.max_galerkin_modes:
        LOGGER.warning(f"psi at c={w.c:.6g} needs K={modes} modes; capping at {cfg.max_galerkin_modes}")
        modes = cfg.max_galerkin_modes
    return modes


def _cosine(w: ZeroMeanWave, modes: int) -> np.ndarray:
    p = w.psi.cosine_coefficients(modes + 1)
    p[0] = 0.0
    return p


def _require_wave(w: ZeroMeanWave) -> None:
    if w.psi.max_norm() == 0.0:
        raise InvalidArgumentError(f"zero profile at c={w.c:.6g}: no wave to analyze")


def assemble_linearized(w: ZeroMeanWave, modes: Optional[int] = None,
                        cfg: Optional[SolverConfig] = None) -> OperatorMatrix:
    """
    Assemble L_mn = (|m|^a + c) delta_mn - 2 psi_hat(m - n) for |m|, |n| <= K.

    Args:
        w: Zero-mean wave
        modes: Truncation K; chosen from the decay of psi_hat when omitted
        cfg: Settings (tail_tol, tail_window, max_galerkin_modes)

    Returns:
        OperatorMatrix, real symmetric when psi is even
    """
    cfg = cfg or SolverConfig()
    n = w.n_modes
    modes = galerkin_modes(w, cfg) if modes is None else int(modes)
    if modes < 1 or 2 * modes + 1 > n:
        raise ResolutionError(f"K={modes} modes need 2K+1 <= N={n}")
    window = min(cfg.tail_window, modes)
    edge = max(abs(w.psi.coefficient(m)) for m in range(modes - window + 1, modes + 1))
    if edge > 10.0 * cfg.tail_tol:
        raise ResolutionError(f"psi is not resolved at K={modes}: |psi_hat| near K is {edge:.3e}")

    diffs = np.array([w.psi.coefficient(d) for d in range(2 * modes + 1)])
    neg_diffs = np.conj(diffs)
    potential = toeplitz(diffs, neg_diffs)
    m = np.arange(-modes, modes + 1)
    entries = np.diag(np.abs(m).astype(float) ** w.alpha + w.c) - 2.0 * potential
    if np.max(np.abs(entries.imag)) <= 1e-12 * max(1.0, np.max(np.abs(entries.real))):
        entries = entries.real.copy()
    return OperatorMatrix(alpha=w.alpha, c=w.c, modes=modes, entries=entries)


def _lowest_eigenfunction_sign_changes(L: OperatorMatrix, vector: np.ndarray, n_grid: int) -> int:
    coeffs = np.zeros(n_grid, dtype=complex)
    for m, value in zip(L.wavenumbers, vector):
        coeffs[m % n_grid] = value
    values = field_from_coeffs(make_grid(n_grid), coeffs).values
    values = values * np.sign(values[np.argmax(np.abs(values))])
    significant = values[np.abs(values) > 1e-8 * np.max(np.abs(values))]
    return int(np.count_nonzero(np.diff(np.sign(significant)) != 0))


def eigen_counts(L: OperatorMatrix, zero_tol: float = settings.ZERO_TOL) -> EigenCounts:
    """
    Count negative and zero eigenvalues of the symmetric Galerkin matrix.

    Args:
        L: Assembled operator
        zero_tol: Eigenvalues within zero_tol * ||L|| of 0 count as zero

    Returns:
        EigenCounts with the six lowest eigenvalues
    """
    values, vectors = eigh(L.entries)
    scale = float(np.max(np.abs(values)))
    threshold = zero_tol * scale
    n_neg = int(np.count_nonzero(values < -threshold))
    n_zero = int(np.count_nonzero(np.abs(values) <= threshold))
    grid_size = max(8, 2 * (2 * L.modes + 2))
    changes = _lowest_eigenfunction_sign_changes(L, vectors[:, 0], grid_size)
    if changes:
        LOGGER.warning(f"lowest eigenfunction of L at c={L.c:.6g} changes sign {changes} times")
    return EigenCounts(n=n_neg, z=n_zero, lowest=values[:6].copy(), scale=scale, ground_state_sign_changes=changes)


def _even_inner(f: np.ndarray, g: np.ndarray) -> float:
    return float(2.0 * np.pi * (f[0] * g[0] + 2.0 * np.dot(f[1:], g[1:])))


def _finite_difference(c0: float, b0: float, neighbors: Sequence) -> float:
    left, right = neighbors
    hl, hr = c0 - left.c, right.c - c0
    if hl <= 0 or hr <= 0:
        raise InvalidArgumentError("neighbors must bracket the wave in c")
    return (hl * hl * (right.b - b0) + hr * hr * (b0 - left.b)) / (hl * hr * (hl + hr))


def b_prime(w: ZeroMeanWave, neighbors: Optional[Sequence] = None, cfg: Optional[SolverConfig] = None,
            modes: Optional[int] = None) -> BPrimeResult:
    """
    b'(c) from L|X0 v = -psi on the even zero-mean subspace, b' = (1/pi) <psi, v>.

    When neighbors (objects with .c and .b on either side of w) are given, the
    three-point finite difference of b is returned alongside as method_gap.
    """
    cfg = cfg or SolverConfig()
    _require_wave(w)
    modes = galerkin_modes(w, cfg) if modes is None else modes
    p = _cosine(w, modes)
    restricted = restricted_operator(p, w.alpha, w.c)
    eigvals, eigvecs = eigh(restricted)
    idx = int(np.argmin(np.abs(eigvals)))
    sigma_min = float(abs(eigvals[idx]))
    if sigma_min < cfg.degenerate_tol * (1.0 + abs(w.c)):
        raise DegenerateKernelError(f"L|X0 is nearly singular on even functions at c={w.c:.6g}",
                                    sigma_min, eigvecs[:, idx])
    v = np.zeros(modes + 1)
    v[1:] = eigvecs @ ((eigvecs.T @ -p[1:]) / eigvals)
    value = 4.0 * float(np.dot(p[1:], v[1:]))
    gap = float("nan")
    if neighbors is not None:
        gap = abs(value - _finite_difference(w.c, w.b, neighbors))
    return BPrimeResult(value=value, method_gap=gap, sigma_min=sigma_min, derivative=v)


def _solve_even(matrix: np.ndarray, rhs: np.ndarray, cfg: SolverConfig) -> np.ndarray:
    lu, piv = lu_factor(matrix)
    rcond, _ = lapack.dgecon(lu, np.linalg.norm(matrix, 1), norm="1")
    if rcond == 0.0 or 1.0 / rcond > cfg.fold_cond_limit:
        raise NearFoldError("even-subspace operator is singular (fold or degenerate kernel)",
                            np.inf if rcond == 0.0 else 1.0 / rcond)
    return lu_solve((lu, piv), rhs)


def constraint_matrices(w: ZeroMeanWave, b_prime_value: float, cfg: Optional[SolverConfig] = None,
                        modes: Optional[int] = None) -> ConstraintReport:
    """
    P(0) (constraints 1, psi^2) and D(0) (constraints 1, psi) by even-subspace solves.

    Args:
        w: Zero-mean wave
        b_prime_value: b'(c) at the wave
        cfg: Settings (fold_cond_limit)
        modes: Cosine truncation K

    Returns:
        ConstraintReport comparing direct determinants with the closed forms
    """
    cfg = cfg or SolverConfig()
    _require_wave(w)
    modes = galerkin_modes(w, cfg) if modes is None else modes
    p = _cosine(w, modes)
    operator = even_linear_operator(p, w.alpha, w.c)
    one = np.zeros(modes + 1)
    one[0] = 1.0
    psi2 = square(w.psi).cosine_coefficients(modes + 1)
    rhs = np.column_stack([one, p, psi2])
    inv_one, inv_psi, inv_psi2 = _solve_even(operator, rhs, cfg).T

    P = np.array([[_even_inner(inv_one, one), _even_inner(inv_one, psi2)],
                  [_even_inner(inv_psi2, one), _even_inner(inv_psi2, psi2)]])
    D = np.array([[_even_inner(inv_one, one), _even_inner(inv_one, p)],
                  [_even_inner(inv_psi, one), _even_inner(inv_psi, p)]])

    s = w.c + 2.0 * b_prime_value
    gamma = diagnostics(w).gamma
    near_fold = abs(s) < FOLD_GAP
    if near_fold:
        LOGGER.info(f"c + 2b' = {s:.3e} at c={w.c:.6g}: closed forms skipped near the fold")
        closed = {}
        det_p_closed = det_d_closed = float("nan")
    else:
        bp, b = b_prime_value, w.b
        closed = {
            "L1_1": 2.0 * np.pi / s,
            "L1_psi": -2.0 * np.pi * bp / s,
            "Lpsi_psi": -np.pi * bp + 2.0 * np.pi * bp * bp / s,
            "L1_psi2": -2.0 * np.pi * b / s,
            "Lpsi2_psi2": -2.0 * np.pi * gamma + 2.0 * np.pi * b * b / s,
        }
        det_p_closed = -4.0 * np.pi ** 2 * gamma / s
        det_d_closed = -2.0 * np.pi ** 2 * bp / s
    direct = {"L1_1": P[0, 0], "L1_psi": D[0, 1], "Lpsi_psi": D[1, 1], "L1_psi2": P[0, 1], "Lpsi2_psi2": P[1, 1]}
    p_size, d_size = float(np.abs(P).max()), float(np.abs(D).max())
    sizes = {"L1_1": p_size, "L1_psi2": p_size, "Lpsi2_psi2": p_size, "L1_psi": d_size, "Lpsi_psi": d_size}
    errors = {key: _scaled_gap(direct[key], value, sizes[key]) for key, value in closed.items()}
    return ConstraintReport(P=P, D=D, det_P=float(np.linalg.det(P)), det_D=float(np.linalg.det(D)),
                            det_P_closed=float(det_p_closed), det_D_closed=float(det_d_closed),
                            entry_errors=errors, near_fold=near_fold)


def restricted_sigma_min(w: ZeroMeanWave, cfg: Optional[SolverConfig] = None, modes: Optional[int] = None) -> float:
    cfg = cfg or SolverConfig()
    modes = galerkin_modes(w, cfg) if modes is None else modes
    return float(np.min(np.abs(eigvalsh(restricted_operator(_cosine(w, modes), w.alpha, w.c)))))


def classify(w: ZeroMeanWave, b_prime_value: float, counts: Tuple[int, int],
             cfg: Optional[SolverConfig] = None, sigma_min: Optional[float] = None) -> StabilityVerdict:
    """Stable iff b' > tol, marginal iff |b'| <= tol, unstable iff b' < -tol; degenerate kernels override."""
    cfg = cfg or SolverConfig()
    n_l, z_l = counts
    s = w.c + 2.0 * b_prime_value
    if sigma_min is None:
        sigma_min = restricted_sigma_min(w, cfg)
    if sigma_min < cfg.degenerate_tol * (1.0 + abs(w.c)):
        kind = VerdictKind.DEGENERATE_KERNEL
    elif b_prime_value > cfg.bprime_tol:
        kind = VerdictKind.STABLE
    elif b_prime_value >= -cfg.bprime_tol:
        kind = VerdictKind.MARGINALLY_STABLE
    else:
        kind = VerdictKind.UNSTABLE
    return StabilityVerdict(kind=kind, n_L=int(n_l), z_L=int(z_l), b_prime=float(b_prime_value),
                            c_plus_2bprime=float(s))


def _translation_chain(w: ZeroMeanWave, L: OperatorMatrix, cfg: SolverConfig) -> np.ndarray:
    """psi' and d psi/dc on the modes 0 < |m| <= K; together they span the Jordan block of d/dx L at 0."""
    m = L.wavenumbers[L.wavenumbers != 0]
    p = _cosine(w, L.modes)
    try:
        chain = b_prime(w, cfg=cfg, modes=L.modes).derivative
    except DegenerateKernelError as exc:
        # the even kernel element takes the place of d psi/dc
        chain = np.concatenate([[0.0], exc.null_vector])
    return np.column_stack([1j * m * p[np.abs(m)], chain[np.abs(m)]])


def unstable_eigenvalue(w: ZeroMeanWave, modes: Optional[int] = None,
                        cfg: Optional[SolverConfig] = None) -> SpectrumReport:
    """
    Spectral abscissa of d/dx L on the zero-mean subspace.

    span{psi', d psi/dc} is invariant under d/dx L and carries the
    translational Jordan pair at the origin. The eigenvalues are taken from
    the compression of d/dx L onto its orthogonal complement, so round-off
    splitting of the pair cannot show up as growth.
    """
    cfg = cfg or SolverConfig()
    _require_wave(w)
    L = assemble_linearized(w, modes, cfg)
    keep = L.wavenumbers != 0
    matrix = (1j * L.wavenumbers[keep])[:, None] * L.entries[np.ix_(keep, keep)]
    raw = eig(matrix, right=False)
    q, _ = np.linalg.qr(_translation_chain(w, L, cfg), mode="complete")
    complement = q[:, 2:]
    values = eig(complement.conj().T @ matrix @ complement, right=False)
    idx = int(np.argmax(values.real))
    return SpectrumReport(max_real_part=float(values[idx].real), eigenvalue=complex(values[idx]),
                          eigenvalues=values, raw_eigenvalues=raw, deflated=True)


def range_identity_residuals(w: ZeroMeanWave, derivative: np.ndarray, b_prime_value: float) -> Dict[str, float]:
    """Max-norm residuals of L psi + psi^2 + b, L 1 + 2 psi - c and L v + psi + b', relative to |psi|."""
    psi = w.psi
    grid = psi.grid
    scale = max(psi.max_norm(), np.finfo(float).tiny)

    def apply(f):
        return frac_derivative(f, w.alpha).coeffs + w.c * f.coeffs - 2.0 * multiply(psi, f).coeffs

    r1 = apply(psi) + square(psi).coeffs
    r1[0] += w.b
    one = field_from_cosine(grid, np.array([1.0]))
    r2 = apply(one) + 2.0 * psi.coeffs
    r2[0] -= w.c
    v = field_from_cosine(grid, derivative)
    r3 = apply(v) + psi.coeffs
    r3[0] += b_prime_value
    return {
        "range_psi": band_limited_max(r1, grid) / scale,
        "range_one": band_limited_max(r2, grid) / scale,
        "range_dc": band_limited_max(r3, grid) / scale,
    }


def analyze_point(w: ZeroMeanWave, cfg: Optional[SolverConfig] = None, neighbors: Optional[Sequence] = None,
                  with_constraints: bool = False, with_spectrum: Optional[bool] = None) -> PointAnalysis:
    """Run the full stability pipeline on one wave."""
    cfg = cfg or SolverConfig()
    _require_wave(w)
    with_spectrum = cfg.compute_spectrum if with_spectrum is None else with_spectrum
    modes = galerkin_modes(w, cfg)
    diag = diagnostics(w)
    counts = eigen_counts(assemble_linearized(w, modes, cfg), cfg.zero_tol)

    try:
        bp = b_prime(w, neighbors, cfg, modes)
    except DegenerateKernelError as exc:
        LOGGER.warning(f"degenerate kernel at c={w.c:.6g}: {exc}")
        fd = _finite_difference(w.c, w.b, neighbors) if neighbors is not None else float("nan")
        bp = BPrimeResult(value=fd, method_gap=float("nan"), sigma_min=exc.sigma_min,
                          derivative=np.zeros(modes + 1))
        verdict = StabilityVerdict(kind=VerdictKind.DEGENERATE_KERNEL, n_L=counts.n, z_L=counts.z,
                                   b_prime=fd, c_plus_2bprime=w.c + 2.0 * fd)
        return PointAnalysis(verdict=verdict, counts=counts, b_prime=bp, gamma=diag.gamma, mu=diag.mu)

    verdict = classify(w, bp.value, (counts.n, counts.z), cfg, sigma_min=bp.sigma_min)
    expected = predicted_counts(verdict.c_plus_2bprime, FOLD_GAP)
    if abs(verdict.c_plus_2bprime) > FOLD_GAP and expected != (counts.n, counts.z):
        LOGGER.warning(f"eigenvalue counts {(counts.n, counts.z)} differ from {expected} at c={w.c:.6g}")

    constraints = None
    if with_constraints:
        try:
            constraints = constraint_matrices(w, bp.value, cfg, modes)
        except NearFoldError as exc:
            LOGGER.info(f"constraint matrices skipped at c={w.c:.6g}: {exc}")
    spectrum = unstable_eigenvalue(w, modes, cfg) if with_spectrum else None
    return PointAnalysis(
        verdict=verdict,
        counts=counts,
        b_prime=bp,
        gamma=diag.gamma,
        mu=diag.mu,
        constraints=constraints,
        spectrum=spectrum,
        range_residuals=range_identity_residuals(w, bp.derivative, bp.value),
    )
