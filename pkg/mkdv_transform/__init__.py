"""
Unified transform for the modified KdV equation on a finite interval.
"""

__version__ = "0.1.0"

from mkdv_transform.config import RunConfig
from mkdv_transform.contour import ContourSigma, JumpField, build_sigma, choose_R
from mkdv_transform.core import ModelParams
from mkdv_transform.data import BoundaryTraces, FieldGrid, InitialProfile
from mkdv_transform.global_relation import GRReport, global_relation_report
from mkdv_transform.oracle import build_dataset, exact_traveling_wave
from mkdv_transform.renderer import ManifestRenderer, TableRenderer
from mkdv_transform.solver import RHSolver, solve_field
from mkdv_transform.spectral import SpectralData

__all__ = [
    "BoundaryTraces",
    "ContourSigma",
    "FieldGrid",
    "GRReport",
    "InitialProfile",
    "JumpField",
    "ManifestRenderer",
    "ModelParams",
    "RHSolver",
    "RunConfig",
    "SpectralData",
    "TableRenderer",
    "build_dataset",
    "build_sigma",
    "choose_R",
    "exact_traveling_wave",
    "global_relation_report",
    "solve_field",
]
