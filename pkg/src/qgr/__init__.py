"""Quantum graphs: lossy Helmholtz solutions, visibility covers, sheaf cohomology and geometry recovery."""

from .graph import GraphPoint, MetricGraph, Region, betti
from .helmholtz import Wavenumber, homogeneous_basis, solve_fundamental
from .sheaf import TransmissionLineSheaf, cech_cohomology, from_quantum_graph, predicted_dims

__all__ = [
    "GraphPoint",
    "MetricGraph",
    "Region",
    "TransmissionLineSheaf",
    "Wavenumber",
    "betti",
    "cech_cohomology",
    "from_quantum_graph",
    "homogeneous_basis",
    "predicted_dims",
    "solve_fundamental",
]
