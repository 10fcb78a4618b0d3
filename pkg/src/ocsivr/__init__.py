"""Overlapping-resonance control of vibrational energy flow in collinear OCS.

Subpackages build on each other roughly in this order: `model` (surface and
masses), `dvr` (bond eigenstates), `basis` (product basis and Q/P blocks),
`feshbach` (resonances), `dynamics` / `control` (populations and optimal
superpositions), `classical` (trajectories and chaos diagnostics), and
`cli` (config-driven runs).
"""

from . import basis, control, dvr, dynamics, feshbach, model

__all__ = [
    "basis",
    "control",
    "dvr",
    "dynamics",
    "feshbach",
    "model",
]

__version__ = "0.1.0"
