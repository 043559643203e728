"""Numerical toolkit for generalized spin-boson models with singular form factors.

The package discretizes a one-dimensional boson field, builds truncated Fock
spaces with creation and annihilation operators, assembles spin-boson type
Hamiltonians, and evaluates the closed-form resolvent of the rotating-wave
model in both its plain and renormalized versions.
"""
from . import (field_model, fock_space, ladder_ops, model_builder,
               resolvent_engine, convergence_lab, config)

__version__ = "0.1.0"
