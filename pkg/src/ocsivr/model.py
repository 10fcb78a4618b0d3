"""Potential surface, masses, and Hamiltonian conventions for collinear OCS.

Everything is expressed in atomic units (hartree, bohr, electron masses);
times reported to users are converted to femtoseconds with `AU_TIME_FS`.

The molecule is described by two bond coordinates: R1 is the C-S distance
and R2 is the C-O distance; the third Morse term depends on R3 = R1 + R2.
The potential is a sum of three Morse wells plus an additive constant fixed
so that the C-S dissociation onset sits at ``E_d``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

#: electron masses per unified atomic mass unit
AMU_TO_ME = 1822.888
#: femtoseconds per atomic unit of time
AU_TIME_FS = 0.02418884

# Atomic weights (amu)
O_ATOMIC_WEIGHT = 15.9994
C_ATOMIC_WEIGHT = 12.011
S_ATOMIC_WEIGHT = 32.06


def fs_to_au(t_fs):
    """Convert a time (or array of times) from femtoseconds to atomic units."""
    return np.asarray(t_fs, dtype=float) / AU_TIME_FS


@dataclass(frozen=True)
class AtomMasses:
    """Atomic masses in electron-mass units."""

    m_O: float
    m_C: float
    m_S: float

    def __post_init__(self):
        if min(self.m_O, self.m_C, self.m_S) <= 0.0:
            raise ValueError("atom masses must be strictly positive")

    @property
    def total(self) -> float:
        return self.m_O + self.m_C + self.m_S


@dataclass(frozen=True)
class MassConvention:
    """Reduced masses entering the kinetic energy.

    ``mu_full_1`` / ``mu_full_2`` pair with P1 (C-S momentum) and P2 (C-O
    momentum) in the full kinetic energy; ``cross_mass`` is the mass in the
    -P1*P2/m cross term.  ``mu_zero_CS`` / ``mu_zero_CO`` are the reduced
    masses of the uncoupled bond Hamiltonians (the other bond held rigid).
    """

    mu_full_1: float
    mu_full_2: float
    mu_zero_CS: float
    mu_zero_CO: float
    cross_mass: float

    def __post_init__(self):
        vals = (self.mu_full_1, self.mu_full_2, self.mu_zero_CS,
                self.mu_zero_CO, self.cross_mass)
        if min(vals) <= 0.0:
            raise ValueError("reduced masses must be strictly positive")

    @property
    def kinetic_correction_1(self) -> float:
        """Coefficient of the <p1^2> correction: (1/mu_full - 1/mu_zero)/2."""
        return 0.5 * (1.0 / self.mu_full_1 - 1.0 / self.mu_zero_CS)

    @property
    def kinetic_correction_2(self) -> float:
        """Coefficient of the <p2^2> correction: (1/mu_full - 1/mu_zero)/2."""
        return 0.5 * (1.0 / self.mu_full_2 - 1.0 / self.mu_zero_CO)


def physical_convention(masses: AtomMasses) -> MassConvention:
    """Standard collinear bond-coordinate kinetic energy.

    P1 (C-S bond momentum) pairs with the C,S two-body reduced mass; P2
    (C-O) with the C,O one.  The zeroth-order bond masses treat the other
    bond as frozen, e.g. the C-S mode moves S against the rigid CO unit.
    """
    total = masses.total
    return MassConvention(
        mu_full_1=masses.m_C * masses.m_S / (masses.m_C + masses.m_S),
        mu_full_2=masses.m_C * masses.m_O / (masses.m_C + masses.m_O),
        mu_zero_CS=masses.m_S * (masses.m_C + masses.m_O) / total,
        mu_zero_CO=masses.m_O * (masses.m_C + masses.m_S) / total,
        cross_mass=masses.m_C,
    )


def literal_convention(masses: AtomMasses) -> MassConvention:
    """Swapped pairing: P1 with the O,C reduced mass, P2 with the C,S one.

    Physically inconsistent for bond coordinates, but it is the convention
    that reproduces the reference zeroth-order vibrational periods
    (27.45 fs / 18.10 fs), so the classical runs default to it.
    """
    total = masses.total
    return MassConvention(
        mu_full_1=masses.m_O * masses.m_C / (masses.m_O + masses.m_C),
        mu_full_2=masses.m_S * masses.m_C / (masses.m_S + masses.m_C),
        mu_zero_CS=masses.m_S * (masses.m_C + masses.m_O) / total,
        mu_zero_CO=masses.m_O * (masses.m_C + masses.m_S) / total,
        cross_mass=masses.m_C,
    )


def default_masses(pairing: str = "physical") -> tuple[AtomMasses, MassConvention]:
    """Atomic-weight masses and the requested kinetic-energy pairing.

    Parameters
    ----------
    pairing : {"physical", "paper-literal"}
        Which full-KE reduced-mass pairing to use; the zeroth-order bond
        masses are identical in both.
    """
    masses = AtomMasses(
        m_O=O_ATOMIC_WEIGHT * AMU_TO_ME,
        m_C=C_ATOMIC_WEIGHT * AMU_TO_ME,
        m_S=S_ATOMIC_WEIGHT * AMU_TO_ME,
    )
    if pairing == "physical":
        return masses, physical_convention(masses)
    if pairing == "paper-literal":
        return masses, literal_convention(masses)
    raise ValueError(f"unknown mass pairing {pairing!r}")


@dataclass(frozen=True)
class MorseParams:
    """One Morse well: D*(1 - exp(-beta*(R - R0)))**2."""

    D: float
    beta: float
    R0: float

    def __post_init__(self):
        if self.D <= 0 or self.beta <= 0 or self.R0 <= 0:
            raise ValueError("Morse parameters must be strictly positive")

    def value(self, r):
        x = 1.0 - np.exp(-self.beta * (np.asarray(r, dtype=float) - self.R0))
        return self.D * x * x

    def gradient(self, r):
        e = np.exp(-self.beta * (np.asarray(r, dtype=float) - self.R0))
        return 2.0 * self.D * self.beta * e * (1.0 - e)

    def harmonic_omega(self, mu: float) -> float:
        """Small-oscillation angular frequency at the well bottom."""
        return self.beta * math.sqrt(2.0 * self.D / mu)


@dataclass(frozen=True)
class SurfaceModel:
    """Sum of three Morse wells plus the additive constant c0.

    ``morse[0]`` acts on R1 (C-S), ``morse[1]`` on R2 (C-O), ``morse[2]``
    on R3 = R1 + R2.  ``c0`` is fixed by requiring that the C-S channel
    limit V(inf, R2_eq) equals the dissociation onset ``E_d``.
    """

    morse: tuple[MorseParams, MorseParams, MorseParams]
    c0: float
    E_d: float


def default_surface(E_d: float = 0.100) -> SurfaceModel:
    """Modified Morse-sum surface for collinear OCS (parameters in a.u.)."""
    m1 = MorseParams(D=0.08518, beta=1.5000, R0=2.9759)
    m2 = MorseParams(D=0.21238, beta=1.6251, R0=2.2559)
    m3 = MorseParams(D=0.16000, beta=1.1589, R0=2.8037)
    # V(inf, R2_eq) = D1 + D3 + c0 must equal E_d
    c0 = E_d - (m1.D + m3.D)
    return SurfaceModel(morse=(m1, m2, m3), c0=c0, E_d=E_d)


def evaluate_potential(R1, R2, surface: SurfaceModel):
    """Total potential V1(R1) + V2(R2) + V3(R1+R2) + c0 (hartree)."""
    m1, m2, m3 = surface.morse
    return m1.value(R1) + m2.value(R2) + m3.value(np.add(R1, R2)) + surface.c0


def potential_gradient(R1, R2, surface: SurfaceModel):
    """(dV/dR1, dV/dR2) for the total potential."""
    m1, m2, m3 = surface.morse
    g3 = m3.gradient(np.add(R1, R2))
    return m1.gradient(R1) + g3, m2.gradient(R2) + g3


def morse_levels(p: MorseParams, mu: float) -> np.ndarray:
    """Bound-state energies of a Morse well, measured from the well bottom.

    Analytic spectrum E_n = omega*(n+1/2) - omega_x*(n+1/2)^2 with
    omega = beta*sqrt(2D/mu) and omega_x = beta^2/(2 mu); a level is bound
    while E_n < D and the spectrum is still increasing with n.  Returns an
    empty array if the well holds no state.
    """
    if mu <= 0:
        raise ValueError("reduced mass must be positive")
    omega = p.harmonic_omega(mu)
    omega_x = p.beta**2 / (2.0 * mu)
    # dE/dn > 0 up to n + 1/2 < omega / (2 omega_x) = sqrt(2 D mu) / beta
    n_top = math.floor(math.sqrt(2.0 * p.D * mu) / p.beta - 0.5)
    if n_top < 0:
        return np.zeros(0)
    n = np.arange(n_top + 1) + 0.5
    levels = omega * n - omega_x * n * n
    return levels[levels < p.D]


def morse_bound_count(p: MorseParams, mu: float) -> int:
    """Number of bound Morse levels: floor(sqrt(2 mu D)/beta - 1/2) + 1."""
    return max(0, math.floor(math.sqrt(2.0 * p.D * mu) / p.beta - 0.5) + 1)
