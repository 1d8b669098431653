"""Particle-based simulation of non-Newtonian, elastoplastic and melting materials."""
from .engine import Material, RigidSphere, SimulationDiverged, SolverSettings, World, step
from .kernels import KernelSpec, kernel_gradient, kernel_value
from .viscosity import (Bingham, Carreau, Casson, Cross, HerschelBulkley, Newtonian, PowerLaw,
                        effective_viscosity, model_from_dict)

__version__ = "0.1.0"

__all__ = [
    "Bingham", "Carreau", "Casson", "Cross", "HerschelBulkley", "KernelSpec", "Material", "Newtonian",
    "PowerLaw", "RigidSphere", "SimulationDiverged", "SolverSettings", "World", "effective_viscosity",
    "kernel_gradient", "kernel_value", "model_from_dict", "step",
]
