"""Quantum-algorithm simulation toolkit for study-planning pipelines.

Dense state-vector simulation backs three routines: a SWAP-test kernel SVM,
adiabatic annealing over Ising/QUBO models, and Grover search. Each quantum
result can be checked against an exact classical oracle at desk scale.
"""

from qlp.errors import DomainError
from qlp.statevector import Gate, MeasurementCounts, StateVector

__version__ = "0.1.0"

__all__ = ["DomainError", "Gate", "MeasurementCounts", "StateVector", "__version__"]
