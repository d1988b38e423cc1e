"""Exact simulation and analysis of Bell-state measurement with linear optics."""

from .bell import BellLabel, bell_basis, bell_labels, bell_state, hyper_bell_state, hyper_labels
from .circuits import CircuitSpec, DeviceSpec, classify_group, compose_circuit, haar_random_unitary
from .errors import BellscopeError
from .fock import FockState, StateVector, Statistics, Unitary, evolve

__version__ = "0.1.0"
