"""Time-domain observables built on the resonance expansion.

Everything here reduces to sums over exact eigenstates gamma with phases
exp(-i E_gamma t): the overlap matrix M(t), the retained-population kernel
K(t) = M^dagger M, the population P(t) = c^dagger K c with its
direct/interference split, the overlapping-resonance measure (W, P-tilde),
exponential decay fits, and wavepacket densities on the (R1, R2) plane.
Public time arguments are in femtoseconds.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

from .basis import PartitionedBasis
from .feshbach import ResonanceSet, full_eigenvectors, product_components
from .model import fs_to_au


class DegenerateFitError(RuntimeError):
    """Population never decays enough to identify a decay time."""


class GridCoverageWarning(UserWarning):
    """Wavepacket density reaches the edge of the DVR grid."""


@dataclass
class Superposition:
    """Preparation coefficients over an ordered subset S of the Q space.

    ``indices`` refer to rows of the resonance overlap matrix (kappa
    ordering); coefficients are normalized to unit probability.
    """

    indices: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=int)
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.indices.shape != self.coeffs.shape:
            raise ValueError("indices and coeffs must have matching shapes")
        norm = np.linalg.norm(self.coeffs)
        if norm == 0.0:
            raise ValueError("coefficients cannot all vanish")
        if abs(norm - 1.0) > 1e-12:
            self.coeffs = self.coeffs / norm

    @property
    def size(self) -> int:
        return len(self.indices)


def top_q_states(pb: PartitionedBasis, k: int = 9) -> np.ndarray:
    """Indices of the k highest-energy Q states, sorted by descending energy.

    The first entry is the topmost state below dissociation, matching the
    labelling of the optimized nine-state superpositions (kappa = 1 is the
    highest).
    """
    order = np.argsort(pb.e_kappa)[::-1]
    return order[:k].copy()


def single_state(pb: PartitionedBasis, kappa_index: int) -> Superposition:
    """Preparation entirely in one Q state."""
    return Superposition(indices=np.array([kappa_index]), coeffs=np.array([1.0 + 0j]))


def _phases(res: ResonanceSet, t_fs) -> np.ndarray:
    """exp(-i E_gamma t) for scalar or vector t (fs); shape (n_gamma, nt)."""
    t_au = np.atleast_1d(fs_to_au(t_fs))
    return np.exp(-1j * res.e_gamma[:, None] * t_au[None, :])


def overlap_matrix(
    res: ResonanceSet,
    t_fs: float,
    rows: np.ndarray | None = None,
    cols: np.ndarray | None = None,
) -> np.ndarray:
    """M[k, k'](t) = sum_gamma a[k] a[k']* exp(-i E_gamma t).

    ``rows`` select the measured set (default: all of Q) and ``cols`` the
    prepared states (default: all of Q).
    """
    a_rows = res.a if rows is None else res.a[rows]
    a_cols = res.a if cols is None else res.a[cols]
    phase = _phases(res, t_fs)[:, 0]
    return (a_rows * phase[None, :]) @ a_cols.T


def kernel(
    res: ResonanceSet,
    t_fs: float,
    cols: np.ndarray,
    rows: np.ndarray | None = None,
) -> np.ndarray:
    """Population kernel K(t) = M^dagger(t) M(t) over the column set."""
    m = overlap_matrix(res, t_fs, rows=rows, cols=cols)
    return m.conj().T @ m


def population(
    c: Superposition,
    res: ResonanceSet,
    t_fs,
    rows: np.ndarray | None = None,
    chunk: int = 1024,
) -> np.ndarray:
    """Probability P(t) of remaining in the measured set.

    Evaluated as |M(t) c|^2 with the gamma sums vectorized over time in
    chunks; accepts a scalar or an array of times (fs).
    """
    t_arr = np.atleast_1d(np.asarray(t_fs, dtype=float))
    a_rows = res.a if rows is None else res.a[rows]
    w = res.a[c.indices].T @ c.coeffs
    out = np.empty(len(t_arr))
    for i in range(0, len(t_arr), chunk):
        phase = _phases(res, t_arr[i : i + chunk])
        v = a_rows @ (phase * w[:, None])
        out[i : i + chunk] = np.sum(np.abs(v) ** 2, axis=0)
    return out if np.ndim(t_fs) else float(out[0])


def state_populations(
    c_indices: np.ndarray,
    res: ResonanceSet,
    t_fs,
    rows: np.ndarray | None = None,
    chunk: int = 1024,
) -> np.ndarray:
    """g_kappa(t) = sum_rows |M[row, kappa](t)|^2 for each kappa in the set.

    Columns of the non-interfering ("direct path") part of the population;
    also the full P(t) of a single-state preparation.  Shape (len(set), nt).
    """
    t_arr = np.atleast_1d(np.asarray(t_fs, dtype=float))
    a_rows = res.a if rows is None else res.a[rows]
    a_cols = res.a[c_indices]
    out = np.empty((len(c_indices), len(t_arr)))
    for i in range(0, len(t_arr), chunk):
        phase = _phases(res, t_arr[i : i + chunk])
        for j in range(len(c_indices)):
            v = a_rows @ (phase * a_cols[j][:, None])
            out[j, i : i + chunk] = np.sum(np.abs(v) ** 2, axis=0)
    return out


def decompose(
    c: Superposition,
    res: ResonanceSet,
    t_fs: float,
    rows: np.ndarray | None = None,
) -> tuple[float, float]:
    """Split P(t) into non-interfering and interfering pathway sums.

    Returns (sum_k |c_k|^2 g_k, sum_{k'!=k} c_k'* c_k f_k'k) where g is the
    diagonal and f the off-diagonal part of the kernel restricted to S.
    """
    k_mat = kernel(res, t_fs, cols=c.indices, rows=rows)
    g = np.real(np.diag(k_mat))
    direct = float(np.sum(np.abs(c.coeffs) ** 2 * g))
    full = float(np.real(c.coeffs.conj() @ k_mat @ c.coeffs))
    return direct, full - direct


def overlap_measure(
    c: Superposition,
    res: ResonanceSet,
    t_fs,
    rows: np.ndarray | None = None,
    chunk: int = 1024,
) -> tuple[np.ndarray, np.ndarray]:
    """Direct term W(t) = sum_k |c_k M_kk(t)|^2 and P-tilde = P - W.

    P-tilde isolates what overlapping resonances contribute: without them
    M is diagonal and P(t) = W(t) identically.
    """
    t_arr = np.atleast_1d(np.asarray(t_fs, dtype=float))
    a_s = res.a[c.indices]
    w_out = np.empty(len(t_arr))
    for i in range(0, len(t_arr), chunk):
        phase = _phases(res, t_arr[i : i + chunk])
        m_diag = (a_s * a_s) @ phase
        w_out[i : i + chunk] = (np.abs(c.coeffs) ** 2) @ np.abs(m_diag) ** 2
    p = population(c, res, t_arr, rows=rows, chunk=chunk)
    if np.ndim(t_fs):
        return w_out, p - w_out
    return float(w_out[0]), float(p[0] - w_out[0])


@dataclass
class PopulationTrace:
    """P, W, P-tilde on a uniform time grid, plus optional per-state columns."""

    times_fs: np.ndarray
    p: np.ndarray
    w: np.ndarray
    p_tilde: np.ndarray
    per_state: np.ndarray | None = field(repr=False, default=None)


def population_trace(
    c: Superposition,
    res: ResonanceSet,
    t_max_fs: float = 1500.0,
    dt_fs: float = 0.25,
    rows: np.ndarray | None = None,
    per_state: bool = False,
) -> PopulationTrace:
    """Evaluate P(t), W(t), P-tilde(t) on a uniform grid from t = 0."""
    times = np.arange(0.0, t_max_fs + 0.5 * dt_fs, dt_fs)
    w, p_tilde = overlap_measure(c, res, times, rows=rows)
    p = w + p_tilde
    g = state_populations(c.indices, res, times, rows=rows) if per_state else None
    return PopulationTrace(times_fs=times, p=p, w=w, p_tilde=p_tilde, per_state=g)


@dataclass
class DecayFit:
    """Exponential-falloff parameters P(t) ~ P_inf + (1-P_inf) exp(-t/t_delta)."""

    t_delta_fs: float
    p_inf: float
    fit_window_fs: float
    residual_rms: float


def fit_decay(
    trace: PopulationTrace,
    fit_window_fs: float = 400.0,
    pinf_window_fs: float = 1000.0,
) -> DecayFit:
    """Fit the initial falloff of a population trace.

    The asymptote P_inf is the average the trace fluctuates around within
    the first ``pinf_window_fs`` (the mean over its second half, so the
    initial transient does not bias it), then the decay time is a
    one-parameter least-squares fit over ``fit_window_fs``.
    """
    t, p = trace.times_fs, trace.p
    if t[-1] < pinf_window_fs or (len(t) > 1 and t[1] - t[0] > 1.0):
        raise ValueError("trace must cover the P_inf window with step <= 1 fs")
    if np.min(p) > 0.99:
        raise DegenerateFitError("population never drops below 0.99")
    sel = (t >= 0.5 * pinf_window_fs) & (t <= pinf_window_fs)
    p_inf = float(np.mean(p[sel]))
    fit = t <= fit_window_fs
    tf, pf = t[fit], p[fit]

    def sse(t_delta):
        model = p_inf + (1.0 - p_inf) * np.exp(-tf / t_delta)
        return np.sum((pf - model) ** 2)

    opt = scipy.optimize.minimize_scalar(
        sse, bounds=(1e-3, 1e6), method="bounded",
        options={"xatol": 1e-10},
    )
    t_delta = float(opt.x)
    rms = float(np.sqrt(opt.fun / len(tf)))
    return DecayFit(
        t_delta_fs=t_delta, p_inf=p_inf, fit_window_fs=fit_window_fs, residual_rms=rms
    )


def eigenstate_weights(c: Superposition, res: ResonanceSet) -> np.ndarray:
    """|<gamma|Psi(0)>|^2 for each exact eigenstate."""
    amp = res.a[c.indices].T @ c.coeffs
    return np.abs(amp) ** 2


def mean_energy(c: Superposition, res: ResonanceSet) -> float:
    """<Psi|H|Psi> of the prepared state (conserved along the evolution)."""
    return float(eigenstate_weights(c, res) @ res.e_gamma)


@dataclass
class WavepacketDensity:
    """|Psi(R1, R2, t)|^2 sampled on the DVR product grid."""

    r1: np.ndarray
    r2: np.ndarray
    density: np.ndarray
    t_fs: float
    norm: float


def wavepacket_density(
    c: Superposition,
    res: ResonanceSet,
    pb: PartitionedBasis,
    t_fs: float,
    coupling=None,
    boundary_tol: float = 1e-6,
) -> WavepacketDensity:
    """Coordinate-space probability density of the evolved superposition.

    Uses the full eigenvectors: the direct solver stores them, while a
    partitioning-route resonance set needs ``coupling`` so the P-space
    components can be rebuilt from the resolvent.  The density integrates
    to one; a warning fires if it touches the grid boundary.
    """
    if res.vectors is not None:
        vectors = res.vectors
    elif coupling is not None:
        vectors = full_eigenvectors(res, pb, coupling)
    else:
        raise ValueError(
            "resonance set carries no eigenvectors; pass the coupling block "
            "so they can be reconstructed"
        )
    # <gamma|Psi(0)> = sum_k c_k a[k, gamma] (overlaps are real)
    amp0 = res.a[c.indices].T @ c.coeffs
    phase = _phases(res, t_fs)[:, 0]
    d_rot = vectors @ (amp0 * phase)
    d_prod = product_components(d_rot[:, None], pb)[:, 0]

    cs, co = pb.ops.cs, pb.ops.co
    coef = d_prod.reshape(pb.ops.n1, pb.ops.n2)
    psi = cs.vectors @ coef @ co.vectors.T
    dr1, dr2 = cs.grid.dr, co.grid.dr
    density = np.abs(psi) ** 2 / (dr1 * dr2)
    norm = float(np.sum(density) * dr1 * dr2)
    edge = max(
        density[0, :].max(), density[-1, :].max(),
        density[:, 0].max(), density[:, -1].max(),
    )
    if edge > boundary_tol:
        warnings.warn(
            f"density {edge:.2e} at the grid boundary", GridCoverageWarning
        )
    return WavepacketDensity(
        r1=cs.grid.points, r2=co.grid.points, density=density, t_fs=t_fs, norm=norm
    )
