"""Green functions of discrete Schroedinger operators via Mobius recursions.

Modules
-------
halfplane    hyperbolic geometry of the upper half-plane
chain1d      half-line recursion, certificates and moment experiments
siegelgraph  sphere decomposition and the Siegel half-space recursion
tree         k-ary trees, population dynamics and contraction functionals
percolation  binary tree with random forward-edge deletion
looptree     loop-decorated binary trees and their Fourier recursion
oracle       explicit truncations, sparse solves and dense spectra
cli          command-line driver
"""
from .errors import (BoundaryUnderflowError, CapExceededError, ConfigError, DegenerateDenominatorError,
                     IndeterminateError, InadmissibleModelError, KernelConditionError, MobiusGreenError,
                     NumericalDegeneracyError, OutOfBandError)
from .halfplane import HPoint, cd_weight, mobius_step, poincare_dist

__version__ = "0.1.0"

__all__ = [
    "HPoint", "poincare_dist", "mobius_step", "cd_weight",
    "MobiusGreenError", "BoundaryUnderflowError", "DegenerateDenominatorError", "NumericalDegeneracyError",
    "OutOfBandError", "IndeterminateError", "KernelConditionError", "CapExceededError",
    "InadmissibleModelError", "ConfigError",
]
