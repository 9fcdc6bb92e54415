"""Spectral Galerkin solver for the radial Boltzmann equation with Debye-Yukawa potential."""

__version__ = "0.2.0"
__author__ = "Kinetic Spectral Contributors"

# 核心组件可以独立导入和测试
from .config import RunConfig, SpectralSettings, get_settings
from .galerkin import ModeVector, SolverMethod, Trajectory, solve_triangular
from .kernel import CollisionKernel
from .spectrum import SpectralTable, build_table

__all__ = [
    "CollisionKernel",
    "ModeVector",
    "RunConfig",
    "SolverMethod",
    "SpectralSettings",
    "SpectralTable",
    "Trajectory",
    "build_table",
    "get_settings",
    "solve_triangular",
]
