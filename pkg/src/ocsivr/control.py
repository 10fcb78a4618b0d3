"""Optimal preparation coefficients for suppressing or enhancing flow out of Q.

Maximizing (minimizing) the retained population P(T) = c^dagger K(T) c over
normalized c is the eigenvalue problem of the kernel K(T): the optimum is
the eigenvector of the largest (smallest) eigenvalue, the eigenvalue itself
being the Lagrange multiplier that enforces normalization and the achieved
P(T).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .dynamics import Superposition, kernel
from .feshbach import ResonanceSet

MODES = ("maximize", "minimize")


class DegenerateExtremumWarning(UserWarning):
    """The extremal kernel eigenvalue is (near-)degenerate."""


@dataclass
class ControlResult:
    """Optimized superposition with the full kernel spectrum at time T."""

    mode: str
    t_fs: float
    c_opt: Superposition
    lam: float
    spectrum: np.ndarray
    degenerate: bool


def optimize(
    res: ResonanceSet,
    s_indices: np.ndarray,
    t_fs: float,
    mode: str = "maximize",
    rows: np.ndarray | None = None,
    degeneracy_tol: float = 1e-8,
) -> ControlResult:
    """Extremize the retained population at time T over the subset S.

    The kernel is Hermitized before diagonalizing to scrub the residual
    1e-15-scale asymmetry of its assembly (the eigensolver requires exact
    Hermiticity).  The optimal vector's global phase is fixed by making its
    largest-magnitude component real and positive.
    """
    s_indices = np.asarray(s_indices, dtype=int)
    if len(s_indices) < 1:
        raise ValueError("need at least one prepared state")
    if t_fs < 0:
        raise ValueError("target time must be nonnegative")
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")

    k_mat = kernel(res, t_fs, cols=s_indices, rows=rows)
    k_mat = 0.5 * (k_mat + k_mat.conj().T)
    evals, evecs = scipy.linalg.eigh(k_mat)
    pick = len(evals) - 1 if mode == "maximize" else 0
    neighbor = pick - 1 if mode == "maximize" else pick + 1
    degenerate = (
        len(evals) > 1 and abs(evals[pick] - evals[neighbor]) < degeneracy_tol
    )
    if degenerate:
        warnings.warn(
            f"extremal kernel eigenvalues differ by less than {degeneracy_tol}",
            DegenerateExtremumWarning,
        )
    vec = evecs[:, pick]
    anchor = np.argmax(np.abs(vec))
    vec = vec * np.exp(-1j * np.angle(vec[anchor]))
    return ControlResult(
        mode=mode,
        t_fs=t_fs,
        c_opt=Superposition(indices=s_indices, coeffs=vec),
        lam=float(evals[pick]),
        spectrum=evals,
        degenerate=degenerate,
    )
