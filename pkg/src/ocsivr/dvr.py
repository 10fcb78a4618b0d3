"""Sinc-DVR grids and the uncoupled bond eigenproblems.

A uniform grid with the Colbert-Miller sinc kinetic matrix gives a
representation in which any local potential is diagonal.  Bond eigenstates
are stored as orthonormal vectors over the grid; the wavefunction value at
a grid point is ``vectors[i, n] / sqrt(dr)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg


class GridContaminationWarning(UserWarning):
    """Highest bound state leaks into the outer edge of the grid box."""


@dataclass(frozen=True)
class DvrGrid:
    """Uniform grid on [r_min, r_max] with n points."""

    r_min: float
    r_max: float
    n: int

    def __post_init__(self):
        if self.n < 16:
            raise ValueError("grid needs at least 16 points")
        if self.r_max <= self.r_min:
            raise ValueError("r_max must exceed r_min")

    @property
    def dr(self) -> float:
        return (self.r_max - self.r_min) / (self.n - 1)

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.r_min, self.r_max, self.n)


def kinetic_matrix(grid: DvrGrid, mu: float) -> np.ndarray:
    """Sinc-DVR kinetic energy matrix (hartree).

    Diagonal pi^2/(6 mu dr^2); off-diagonal (-1)^(i-j) / (mu dr^2 (i-j)^2).
    """
    idx = np.arange(grid.n)
    diff = idx[:, None] - idx[None, :]
    with np.errstate(divide="ignore"):
        t = np.where(diff == 0, np.pi**2 / 6.0, (-1.0) ** diff / diff.astype(float) ** 2)
    return t / (mu * grid.dr**2)


def first_derivative_matrix(grid: DvrGrid) -> np.ndarray:
    """Antisymmetric sinc-DVR d/dR matrix: (-1)^(i-j) / (dr (i-j)), zero diagonal."""
    idx = np.arange(grid.n)
    diff = idx[:, None] - idx[None, :]
    with np.errstate(divide="ignore"):
        d = np.where(diff == 0, 0.0, (-1.0) ** diff / diff.astype(float))
    return d / grid.dr


@dataclass
class BondEigenbasis:
    """Bound eigenstates of one 1-D bond Hamiltonian on a DVR grid.

    ``vectors`` has one orthonormal column per bound state; ``dissociation``
    is the energy of the well's large-R plateau used for the bound cut.
    """

    grid: DvrGrid
    mu: float
    energies: np.ndarray
    vectors: np.ndarray
    dissociation: float
    potential_on_grid: np.ndarray = field(repr=False, default=None)

    @property
    def n_bound(self) -> int:
        return len(self.energies)


def solve_bond(
    grid: DvrGrid,
    mu: float,
    potential,
    dissociation: float,
    contamination_tol: float = 1e-3,
) -> BondEigenbasis:
    """Diagonalize T + diag(V) on the grid and keep the bound states.

    Parameters
    ----------
    potential : callable
        Maps an array of grid points to potential values (hartree).
    dissociation : float
        Large-R limit of the well; eigenvalues below it count as bound.
    contamination_tol : float
        Warn if the top bound state carries more than this probability in
        the outer 5% of the grid (box perturbing the spectrum).
    """
    v = np.asarray(potential(grid.points), dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValueError("potential must be finite on the grid")
    h = kinetic_matrix(grid, mu)
    h[np.diag_indices_from(h)] += v
    energies, vectors = scipy.linalg.eigh(h)
    bound = energies < dissociation
    n_bound = int(np.sum(bound))
    if n_bound:
        top = vectors[:, n_bound - 1]
        outer = int(np.ceil(0.05 * grid.n))
        leak = float(np.sum(top[-outer:] ** 2))
        if leak > contamination_tol:
            warnings.warn(
                f"top bound state has {leak:.2e} probability in the outer 5% "
                f"of the grid; enlarge r_max",
                GridContaminationWarning,
            )
    return BondEigenbasis(
        grid=grid,
        mu=mu,
        energies=energies[:n_bound].copy(),
        vectors=vectors[:, :n_bound].copy(),
        dissociation=dissociation,
        potential_on_grid=v,
    )


def derivative_matrix(basis: BondEigenbasis) -> np.ndarray:
    """d/dR in the bond eigenbasis; momentum elements are <m|p|m'> = -i d[m, m'].

    Antisymmetric by construction (the grid-level matrix is antisymmetric
    and the transform is orthogonal; the residual is re-antisymmetrized).
    """
    d1 = first_derivative_matrix(basis.grid)
    d = basis.vectors.T @ d1 @ basis.vectors
    return 0.5 * (d - d.T)


def momentum_squared_matrix(basis: BondEigenbasis) -> np.ndarray:
    """<m|p^2|m'> in the bond eigenbasis, via p^2 = 2 mu T on the grid."""
    t = kinetic_matrix(basis.grid, basis.mu)
    p2 = 2.0 * basis.mu * (basis.vectors.T @ t @ basis.vectors)
    return 0.5 * (p2 + p2.T)
