"""Two-mode product basis, Q/P partition, coupling block, full Hamiltonian.

The product basis is |m>_CS (x) |n>_CO over the bound bond states, ordered
lexicographically with m major.  The Q space collects all products with the
"spectator" mode in its ground state (default: CO, so Q = {(m, 0)}), P is
everything else.  The interaction contains the R3-Morse static term (plus
the energy offset c0), the p1*p2 kinetic cross term, and, unless running in
``couplings="paper-literal"`` mode, the diagonal p^2 corrections that make
H = H_A + H_B + H_AB hold exactly for the chosen mass convention.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .dvr import BondEigenbasis, derivative_matrix, momentum_squared_matrix
from .model import MassConvention, SurfaceModel

COUPLING_MODES = ("exact", "paper-literal")
Q_BASIS_MODES = ("prediagonalized", "product")
GROUND_MODES = ("co", "cs")


@dataclass
class ProductOperators:
    """One-mode matrices and the static-coupling tensor over the product basis.

    ``v3`` holds <mn|V3(R1+R2)+c0|m'n'> indexed [m, n, m', n']; reshaping it
    to (n_total, n_total) gives the static block in lexicographic order.
    """

    cs: BondEigenbasis
    co: BondEigenbasis
    surface: SurfaceModel
    convention: MassConvention
    couplings: str
    v3: np.ndarray = field(repr=False)
    d1: np.ndarray = field(repr=False)
    d2: np.ndarray = field(repr=False)
    p1sq: np.ndarray = field(repr=False)
    p2sq: np.ndarray = field(repr=False)
    k1: float
    k2: float

    @property
    def n1(self) -> int:
        return self.cs.n_bound

    @property
    def n2(self) -> int:
        return self.co.n_bound

    @property
    def n_total(self) -> int:
        return self.n1 * self.n2

    def zeroth_energies(self) -> np.ndarray:
        """E_m^CS + E_n^CO over the lexicographic product ordering."""
        return (self.cs.energies[:, None] + self.co.energies[None, :]).ravel()

    def all_indices(self) -> np.ndarray:
        """(n_total, 2) array of (m, n) pairs in lexicographic order."""
        m, n = np.meshgrid(np.arange(self.n1), np.arange(self.n2), indexing="ij")
        return np.column_stack([m.ravel(), n.ravel()])

    def interaction_block(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        """Off-diagonal-capable H_AB block between two product index sets.

        Zeroth-order energies are *not* included; add them on the diagonal
        for same-index blocks.
        """
        mr, nr = rows[:, 0][:, None], rows[:, 1][:, None]
        mc, nc = cols[:, 0][None, :], cols[:, 1][None, :]
        block = self.v3[mr, nr, mc, nc].copy()
        block += self.d1[mr, mc] * self.d2[nr, nc] / self.convention.cross_mass
        if self.k1 != 0.0:
            block += self.k1 * self.p1sq[mr, mc] * (nr == nc)
        if self.k2 != 0.0:
            block += self.k2 * self.p2sq[nr, nc] * (mr == mc)
        return block

    def hamiltonian_block(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        """Full H block between two product index sets (zeroth order included)."""
        block = self.interaction_block(rows, cols)
        same = (rows[:, 0][:, None] == cols[:, 0][None, :]) & (
            rows[:, 1][:, None] == cols[:, 1][None, :]
        )
        e0 = self.cs.energies[rows[:, 0]] + self.co.energies[rows[:, 1]]
        block[same] += np.broadcast_to(e0[:, None], same.shape)[same]
        return block


def product_operators(
    cs: BondEigenbasis,
    co: BondEigenbasis,
    surface: SurfaceModel,
    convention: MassConvention,
    couplings: str = "exact",
) -> ProductOperators:
    """Precompute the one-mode matrices and the static-coupling tensor.

    The V3 integrals are evaluated by double DVR quadrature (V3 is diagonal
    on the product grid); the result is exactly symmetric in (m, m') and
    (n, n') by construction.
    """
    if couplings not in COUPLING_MODES:
        raise ValueError(f"couplings must be one of {COUPLING_MODES}")
    u1, u2 = cs.vectors, co.vectors
    n1, n2 = cs.n_bound, co.n_bound
    r1, r2 = cs.grid.points, co.grid.points
    v3_grid = surface.morse[2].value(r1[:, None] + r2[None, :]) + surface.c0

    # (m m'|V3|n n') = sum_ij u1[i,m] u1[i,m'] V3[i,j] u2[j,n] u2[j,n']
    a = np.einsum("im,ik->mki", u1, u1).reshape(n1 * n1, len(r1))
    b = np.einsum("jn,jl->nlj", u2, u2).reshape(n2 * n2, len(r2))
    v3 = (a @ v3_grid @ b.T).reshape(n1, n1, n2, n2).transpose(0, 2, 1, 3).copy()

    k1 = convention.kinetic_correction_1 if couplings == "exact" else 0.0
    k2 = convention.kinetic_correction_2 if couplings == "exact" else 0.0
    return ProductOperators(
        cs=cs,
        co=co,
        surface=surface,
        convention=convention,
        couplings=couplings,
        v3=v3,
        d1=derivative_matrix(cs),
        d2=derivative_matrix(co),
        p1sq=momentum_squared_matrix(cs),
        p2sq=momentum_squared_matrix(co),
        k1=k1,
        k2=k2,
    )


@dataclass
class PartitionedBasis:
    """Q/P split of the product basis with block-diagonalized zeroth order.

    ``e_beta_hat`` and ``u_p`` come from one dense diagonalization of the
    PHP block.  With ``q_basis="prediagonalized"`` the Q block is rotated
    the same way (``e_kappa`` are QHQ eigenvalues and ``h_qq`` is diagonal);
    with ``q_basis="product"`` the kappa states stay pure products and
    ``h_qq`` keeps the QHQ off-diagonal elements.
    """

    q_indices: np.ndarray
    p_indices: np.ndarray
    e_kappa: np.ndarray
    h_qq: np.ndarray
    u_q: np.ndarray | None
    e_beta_hat: np.ndarray
    u_p: np.ndarray = field(repr=False)
    q_basis: str
    ground_mode: str
    ops: ProductOperators = field(repr=False)

    @property
    def n_q(self) -> int:
        return len(self.q_indices)

    @property
    def n_p(self) -> int:
        return len(self.p_indices)

    @property
    def n_total(self) -> int:
        return self.n_q + self.n_p


@dataclass
class CouplingBlock:
    """V(kappa|beta) = <kappa|QHP|beta> in the block-diagonalized bases."""

    v: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.v.shape


def build_partition(
    ops: ProductOperators,
    q_basis: str = "prediagonalized",
    ground_mode: str = "co",
) -> PartitionedBasis:
    """Split the product basis into Q and P and block-diagonalize.

    ``ground_mode`` names the mode that must sit in its ground state inside
    Q: the default "co" selects Q = {(m, 0)} (all excitation in the CS
    bond).  The P block is diagonalized densely; this is the one expensive
    dense solve of the partitioning route.
    """
    if q_basis not in Q_BASIS_MODES:
        raise ValueError(f"q_basis must be one of {Q_BASIS_MODES}")
    if ground_mode not in GROUND_MODES:
        raise ValueError(f"ground_mode must be one of {GROUND_MODES}")
    idx = ops.all_indices()
    in_q = idx[:, 1] == 0 if ground_mode == "co" else idx[:, 0] == 0
    q_indices, p_indices = idx[in_q], idx[~in_q]

    h_qq = ops.hamiltonian_block(q_indices, q_indices)
    h_pp = ops.hamiltonian_block(p_indices, p_indices)
    e_beta_hat, u_p = scipy.linalg.eigh(h_pp)

    if q_basis == "prediagonalized":
        e_kappa, u_q = scipy.linalg.eigh(h_qq)
        h_qq_rot = np.diag(e_kappa)
    else:
        e_kappa, u_q, h_qq_rot = np.diag(h_qq).copy(), None, h_qq

    return PartitionedBasis(
        q_indices=q_indices,
        p_indices=p_indices,
        e_kappa=e_kappa,
        h_qq=h_qq_rot,
        u_q=u_q,
        e_beta_hat=e_beta_hat,
        u_p=u_p,
        q_basis=q_basis,
        ground_mode=ground_mode,
        ops=ops,
    )


def coupling_elements(pb: PartitionedBasis) -> CouplingBlock:
    """Q-P coupling block rotated into the kappa and beta-hat bases."""
    v = pb.ops.interaction_block(pb.q_indices, pb.p_indices)
    if pb.u_q is not None:
        v = pb.u_q.T @ v
    return CouplingBlock(v=v @ pb.u_p)


def full_hamiltonian(pb: PartitionedBasis) -> np.ndarray:
    """Full product-basis Hamiltonian ordered [Q block; P block].

    Serves as the direct-diagonalization oracle; assembled from the static
    tensor and broadcasted one-mode terms rather than from the partition
    blocks, so it provides an independent consistency target for them.
    """
    ops = pb.ops
    n1, n2, nt = ops.n1, ops.n2, ops.n_total
    h = ops.v3.reshape(nt, nt).copy()
    h4 = h.reshape(n1, n2, n1, n2)
    h4 += ops.d1[:, None, :, None] * (ops.d2[None, :, None, :] / ops.convention.cross_mass)
    eye1, eye2 = np.eye(n1), np.eye(n2)
    if ops.k1 != 0.0:
        h4 += ops.k1 * ops.p1sq[:, None, :, None] * eye2[None, :, None, :]
    if ops.k2 != 0.0:
        h4 += ops.k2 * eye1[:, None, :, None] * ops.p2sq[None, :, None, :]
    h[np.diag_indices(nt)] += ops.zeroth_energies()

    flat = lambda ix: ix[:, 0] * n2 + ix[:, 1]
    order = np.concatenate([flat(pb.q_indices), flat(pb.p_indices)])
    return h[np.ix_(order, order)]
