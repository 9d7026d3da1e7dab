"""Numerical model of gravitationally induced entanglement between two masses."""

from . import entanglement, fieldmodel, nogo, protocol, qcore

__all__ = ["qcore", "entanglement", "protocol", "fieldmodel", "nogo"]
__version__ = "0.1.0"
