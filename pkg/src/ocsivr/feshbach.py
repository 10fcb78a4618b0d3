"""Energy-dependent effective Hamiltonian and the resonance spectrum.

The Q-space effective Hamiltonian is

    Heff(E) = H_QQ + V (E - diag(E_beta_hat))^-1 V^T ,

whose self-consistent eigenvalues Heff(E) u = E u are exactly the
eigenvalues of the full Hamiltonian.  ``self_consistent_root`` implements
the fixed-point search for one root; ``find_all_resonances`` locates the
complete spectrum.  Completeness is certified without touching the full
matrix through Sylvester inertia: the number of full-H eigenvalues below a
trial energy E equals the number of P-block levels below E plus the number
of negative eigenvalues of Heff(E) - E.  ``direct_resonances`` is the dense
direct-diagonalization oracle for the same quantities.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .basis import CouplingBlock, PartitionedBasis


class PoleProximityError(ValueError):
    """Trial energy collides with a P-block eigenvalue."""


class NoConvergenceError(RuntimeError):
    """Fixed-point iteration failed to settle within the iteration budget."""


class IncompleteSpectrumError(RuntimeError):
    """Fewer unique roots than the full dimension after the seed schedule."""


@dataclass
class EffectiveHamiltonian:
    """Heff evaluated at one trial energy."""

    energy: float
    matrix: np.ndarray


def effective_hamiltonian(
    E: float,
    pb: PartitionedBasis,
    coupling: CouplingBlock,
    pole_tol: float = 1e-12,
) -> EffectiveHamiltonian:
    """H_QQ plus the level-shift matrix Delta(E) = V diag(1/(E-Ebeta)) V^T."""
    gaps = E - pb.e_beta_hat
    if np.min(np.abs(gaps)) < pole_tol:
        raise PoleProximityError(f"trial energy within {pole_tol} of a P-space level")
    delta = (coupling.v / gaps) @ coupling.v.T
    return EffectiveHamiltonian(energy=E, matrix=pb.h_qq + delta)


def decay_width(
    beta_index: int, pb: PartitionedBasis, coupling: CouplingBlock
) -> np.ndarray:
    """Diagnostic width matrix 2*pi*V(:,beta) V(:,beta)^T for one P level.

    The 2*pi cancels inside the level shift, and in this bound-state
    setting the width never enters any observable on its own.
    """
    col = coupling.v[:, beta_index]
    return 2.0 * np.pi * np.outer(col, col)


def count_below(E: float, pb: PartitionedBasis, coupling: CouplingBlock) -> int:
    """Number of full-H eigenvalues below E (E must not sit on a pole)."""
    eff = effective_hamiltonian(E, pb, coupling)
    evals = scipy.linalg.eigvalsh(eff.matrix)
    return int(np.sum(pb.e_beta_hat < E)) + int(np.sum(evals < E))


@dataclass
class SelfConsistentRoot:
    energy: float
    vector: np.ndarray
    iterations: int
    residual: float


def _select(evals: np.ndarray, E: float, selection, track_index: int | None) -> int:
    if selection == "nearest":
        return int(np.argmin(np.abs(evals - E)))
    if selection == "fixed-index":
        if track_index is None:
            raise ValueError("fixed-index selection needs track_index")
        return int(track_index)
    raise ValueError(f"unknown selection {selection!r}")


def self_consistent_root(
    seed: float,
    pb: PartitionedBasis,
    coupling: CouplingBlock,
    selection: str = "nearest",
    track_index: int | None = None,
    tol: float = 1e-12,
    max_iter: int = 200,
    bracket: tuple[float, float] | None = None,
) -> SelfConsistentRoot:
    """Iterate E -> selected eigenvalue of Heff(E) to a fixed point.

    Plain fixed-point stepping, stabilized in two ways when it misbehaves:
    a 2-cycle triggers averaging of successive trial energies (damping
    halves again on repeat offenses), and an optional ``bracket`` confines
    the iterates, falling back to its midpoint when a step escapes.
    Convergence means the undamped update |E_next - E| drops below ``tol``.
    """
    E = float(seed)
    lo, hi = bracket if bracket is not None else (-np.inf, np.inf)
    alpha = 1.0
    prev = np.nan
    for it in range(1, max_iter + 1):
        eff = effective_hamiltonian(E, pb, coupling)
        evals, evecs = scipy.linalg.eigh(eff.matrix)
        j = _select(evals, E, selection, track_index)
        proposal = evals[j]
        if abs(proposal - E) < tol:
            vec = evecs[:, j]
            if vec[np.argmax(np.abs(vec))] < 0:
                vec = -vec
            residual = float(np.linalg.norm(eff.matrix @ vec - proposal * vec))
            return SelfConsistentRoot(
                energy=proposal, vector=vec, iterations=it, residual=residual
            )
        # 2-cycle: new iterate returns to the point before last
        if np.isfinite(prev) and abs(proposal - prev) < 0.1 * abs(proposal - E):
            alpha = 0.5 * alpha
        E_next = alpha * proposal + (1.0 - alpha) * E
        if not lo < E_next < hi:
            E_next = 0.5 * (lo + hi) if np.isfinite(lo) and np.isfinite(hi) else proposal
        prev = E
        E = E_next
    raise NoConvergenceError(f"no fixed point within {max_iter} iterations from seed {seed}")


@dataclass
class ResonanceSet:
    """Exact eigenvalues with their Q-space overlap amplitudes.

    ``a[kappa, gamma]`` is <kappa|gamma>; ``c_abs`` the per-root
    normalization constants |C_gamma| (norm of the Q component); ``vectors``
    optionally holds full eigenvectors in the [kappa; beta-hat] ordering.
    """

    e_gamma: np.ndarray
    a: np.ndarray
    c_abs: np.ndarray
    provenance: dict
    vectors: np.ndarray | None = field(repr=False, default=None)

    @property
    def n_q(self) -> int:
        return self.a.shape[0]

    @property
    def n_total(self) -> int:
        return len(self.e_gamma)


def _overlap_column(E, vec, pb, coupling):
    """|C_gamma| from the normalization identity and the a-column C|D>."""
    s = coupling.v.T @ vec
    c_abs = 1.0 / np.sqrt(1.0 + np.sum((s / (E - pb.e_beta_hat)) ** 2))
    return c_abs, c_abs * vec


def _pole_root(pb, coupling, beta_idx, iterations):
    """Root degenerate with one P level to within the evaluation guard.

    P levels whose coupling column is negligible are full-H eigenvalues to
    second order in that column; the Q amplitudes follow from the linear
    response (E - Hqq - Delta_without_beta) q = V[:, beta], and the
    first-order energy shift off the pole is q . V[:, beta].
    """
    E = pb.e_beta_hat[beta_idx]
    col = coupling.v[:, beta_idx].copy()
    v_rest = coupling.v.copy()
    v_rest[:, beta_idx] = 0.0
    gaps = E - pb.e_beta_hat
    gaps[beta_idx] = 1.0  # column zeroed; value irrelevant
    h_minus = pb.h_qq + (v_rest / gaps) @ v_rest.T
    q = scipy.linalg.solve(E * np.eye(pb.n_q) - h_minus, col, assume_a="sym")
    norm = np.sqrt(1.0 + q @ q)
    shift = float(q @ col)
    vec = q / np.linalg.norm(q) if np.linalg.norm(q) > 0 else q
    return SelfConsistentRoot(
        energy=E + shift, vector=vec, iterations=iterations, residual=abs(shift)
    ), q / norm


def _bracketed_root(pb, coupling, lo, hi, n_lo, tol, max_iter, pole_guard):
    """Hunt the single root known (by inertia count) to lie in (lo, hi).

    Each iterate reuses one Heff diagonalization three ways: the nearest
    eigenvalue gives the fixed-point update, the inertia count shrinks the
    bracket so a stray update can never escape, and the analytic slope of
    the selected eigenvalue branch (Hellmann-Feynman on the level shift)
    turns the update into a Newton step.  The Newton form matters for
    roots hugging a pole, where the branch slope is huge and the plain
    fixed-point map is strongly repelling.  If the bracket collapses into
    the guard zone of a single pole the root is handed to ``_pole_root``.

    Returns ``(root, a_column_or_None)``.
    """
    poles = pb.e_beta_hat
    E = 0.5 * (lo + hi)
    for it in range(1, max_iter + 1):
        near = int(np.argmin(np.abs(E - poles)))
        if abs(E - poles[near]) < pole_guard:
            # move the evaluation point off the pole, staying in-bracket
            safe = [c for c in (poles[near] + pole_guard, poles[near] - pole_guard)
                    if lo < c < hi]
            if not safe:
                return _pole_root(pb, coupling, near, it)
            E = max(safe, key=lambda c: min(c - lo, hi - c))
        eff = effective_hamiltonian(E, pb, coupling)
        evals, evecs = scipy.linalg.eigh(eff.matrix)
        below = int(np.sum(poles < E)) + int(np.sum(evals < E))
        if below <= n_lo:
            lo = E
        else:
            hi = E
        j = int(np.argmin(np.abs(evals - E)))
        proposal = evals[j]
        s = coupling.v.T @ evecs[:, j]
        slope = -np.sum((s / (E - poles)) ** 2)
        newton = E + (proposal - E) / (1.0 - slope)
        if abs(proposal - E) < tol * max(1.0, abs(1.0 - slope)):
            # near overlapping roots the eigenvector rotates quickly with E,
            # so take it at the Newton-corrected energy, not the last iterate
            energy = min(max(newton, lo), hi)
            if np.min(np.abs(energy - poles)) > 1e-12:
                eff = effective_hamiltonian(energy, pb, coupling)
                evals, evecs = scipy.linalg.eigh(eff.matrix)
                j = int(np.argmin(np.abs(evals - energy)))
            vec = evecs[:, j]
            if vec[np.argmax(np.abs(vec))] < 0:
                vec = -vec
            residual = float(np.linalg.norm(eff.matrix @ vec - evals[j] * vec))
            root = SelfConsistentRoot(
                energy=energy, vector=vec, iterations=it + 1, residual=residual
            )
            return root, None
        E = newton if lo < newton < hi else 0.5 * (lo + hi)
    raise NoConvergenceError(f"root in ({lo}, {hi}) did not converge")


def find_all_resonances(
    pb: PartitionedBasis,
    coupling: CouplingBlock,
    tol: float = 1e-12,
    dedup_tol: float = 1e-10,
    max_iter: int = 200,
    pole_guard: float = 1e-9,
) -> ResonanceSet:
    """Locate all N_T self-consistent eigenvalues and their overlaps.

    The seed schedule walks the gaps between consecutive P-block levels
    (where every root must lie): inertia counts at the gap midpoints say
    how many roots each gap holds, gaps with several roots are split at
    midpoints until each root is isolated, and each isolated root is then
    polished by the bracketed fixed-point iteration.  Evaluation points
    keep ``pole_guard`` away from the P levels; a root that cannot be
    separated from a pole at that resolution is resolved perturbatively
    (see ``_pole_root``).  Raises ``IncompleteSpectrumError`` if the
    schedule cannot isolate N_T roots.
    """
    n_t = pb.n_total
    poles = pb.e_beta_hat

    # outer bounds: widen until the inertia count certifies 0 and N_T
    span = max(poles[-1] - poles[0], 1.0e-3)
    lo = min(poles[0], pb.e_kappa.min()) - 0.05 * span
    hi = max(poles[-1], pb.e_kappa.max()) + 0.05 * span
    for _ in range(60):
        if count_below(lo, pb, coupling) == 0:
            break
        lo -= span
    else:
        raise IncompleteSpectrumError("could not bracket the spectrum from below")
    for _ in range(60):
        if count_below(hi, pb, coupling) == n_t:
            break
        hi += span
    else:
        raise IncompleteSpectrumError("could not bracket the spectrum from above")

    # count-labelled grid: outer bounds plus the midpoint of every
    # inter-pole gap wide enough to stand clear of both poles
    grid = [lo]
    interior = 0.5 * (poles[1:] + poles[:-1])
    wide = np.minimum(interior - poles[:-1], poles[1:] - interior) > pole_guard
    grid.extend(interior[wide].tolist())
    grid.append(hi)
    counts = [0] + [count_below(e, pb, coupling) for e in grid[1:-1]] + [n_t]

    found: list[tuple[SelfConsistentRoot, np.ndarray | None]] = []
    stack = [
        (grid[i], grid[i + 1], counts[i], counts[i + 1])
        for i in range(len(grid) - 1)
        if counts[i + 1] > counts[i]
    ]
    while stack:
        a, b, n_a, n_b = stack.pop()
        k = n_b - n_a
        if k == 1:
            found.append(
                _bracketed_root(pb, coupling, a, b, n_a, tol, max_iter, pole_guard)
            )
            continue
        mid = 0.5 * (a + b)
        near = int(np.argmin(np.abs(mid - poles)))
        if abs(mid - poles[near]) < pole_guard:
            safe = [c for c in (poles[near] + pole_guard, poles[near] - pole_guard)
                    if a < c < b]
            if not safe:
                raise IncompleteSpectrumError(
                    f"{k} roots clustered within {b - a:.3e} hartree near {a}"
                )
            mid = max(safe, key=lambda c: min(c - a, b - c))
        n_mid = count_below(mid, pb, coupling)
        if n_mid > n_a:
            stack.append((a, mid, n_a, n_mid))
        if n_b > n_mid:
            stack.append((mid, b, n_mid, n_b))

    found.sort(key=lambda pair: pair[0].energy)
    energies = np.array([r.energy for r, _ in found])
    if len(energies) != n_t or np.any(np.diff(energies) < dedup_tol):
        raise IncompleteSpectrumError(
            f"found {len(np.unique(np.round(energies, 12)))} unique roots, expected {n_t}"
        )

    a_mat = np.empty((pb.n_q, n_t))
    c_abs = np.empty(n_t)
    for g, (r, a_col) in enumerate(found):
        if a_col is None:
            c_abs[g], a_mat[:, g] = _overlap_column(r.energy, r.vector, pb, coupling)
        else:
            a_mat[:, g] = a_col
            c_abs[g] = np.linalg.norm(a_col)
    provenance = {
        "method": "feshbach",
        "iterations": np.array([r.iterations for r, _ in found]),
        "residuals": np.array([r.residual for r, _ in found]),
        "pole_resolved": np.array([a_col is not None for _, a_col in found]),
        "tol": tol,
    }
    return ResonanceSet(e_gamma=energies, a=a_mat, c_abs=c_abs, provenance=provenance)


def direct_resonances(pb: PartitionedBasis, coupling: CouplingBlock) -> ResonanceSet:
    """Dense diagonalization of the full H in the [kappa; beta-hat] basis."""
    n_q, n_t = pb.n_q, pb.n_total
    h = np.zeros((n_t, n_t))
    h[:n_q, :n_q] = pb.h_qq
    h[:n_q, n_q:] = coupling.v
    h[n_q:, :n_q] = coupling.v.T
    h[n_q:, n_q:][np.diag_indices(pb.n_p)] = pb.e_beta_hat
    e_gamma, vectors = scipy.linalg.eigh(h)
    a = vectors[:n_q, :].copy()
    return ResonanceSet(
        e_gamma=e_gamma,
        a=a,
        c_abs=np.linalg.norm(a, axis=0),
        provenance={"method": "direct"},
        vectors=vectors,
    )


def full_eigenvectors(
    res: ResonanceSet, pb: PartitionedBasis, coupling: CouplingBlock
) -> np.ndarray:
    """Eigenvectors in the [kappa; beta-hat] ordering, (N_T, N_T).

    Columns are returned as stored for the direct route; for a Feshbach
    resonance set the P components are reconstructed from the resolvent,
    beta-component = (V^T a_gamma)_beta / (E_gamma - E_beta).
    """
    if res.vectors is not None:
        return res.vectors
    gaps = res.e_gamma[None, :] - pb.e_beta_hat[:, None]
    b = (coupling.v.T @ res.a) / gaps
    return np.vstack([res.a, b])


def product_components(
    vectors: np.ndarray, pb: PartitionedBasis
) -> np.ndarray:
    """Rotate [kappa; beta-hat] eigenvectors to lexicographic product order."""
    n_q = pb.n_q
    q_part = vectors[:n_q, :] if pb.u_q is None else pb.u_q @ vectors[:n_q, :]
    p_part = pb.u_p @ vectors[n_q:, :]
    n2 = pb.ops.n2
    out = np.empty_like(vectors)
    out[pb.q_indices[:, 0] * n2 + pb.q_indices[:, 1], :] = q_part
    out[pb.p_indices[:, 0] * n2 + pb.p_indices[:, 1], :] = p_part
    return out
