"""EFIE method-of-moments scattering with a hybrid Krylov / quantum linear solver.

The inner HHL and VQLS solvers run on the bundled statevector simulator
(:mod:`efie_hybrid.qsim`).
"""

from .complexity import ComplexityParams, predict_complexity
from .experiments import Geometry, RunConfig, load_config, run
from .farfield import RcsSweep, mie_rcs, radiated_rcs, rcs_relative_error
from .hybrid import HybridConfig, SolveReport, hybrid_solve
from .mesh import RwgBasisSet, TriangleMesh, build_rwg, generate_sphere, generate_uv_sphere
from .mom import (BackgroundMedium, PlaneWave, assemble_system, complexify_solution,
                  realify)
from .precond import Preconditioner, ilut
from .qalgo import HhlConfig, VqlsConfig, hhl_solve, vqls_solve
from .qsim import Circuit, Gate, NoiseModel, Statevector
from .subspace import build_subspace, recover_scale

__version__ = "0.1.0"

__all__ = [
    "BackgroundMedium", "Circuit", "ComplexityParams", "Gate", "Geometry", "HhlConfig",
    "HybridConfig", "NoiseModel", "PlaneWave", "Preconditioner", "RcsSweep", "RunConfig",
    "RwgBasisSet", "SolveReport", "Statevector", "TriangleMesh", "VqlsConfig",
    "assemble_system", "build_rwg", "build_subspace", "complexify_solution",
    "generate_sphere", "generate_uv_sphere", "hhl_solve", "hybrid_solve", "ilut",
    "load_config", "mie_rcs", "predict_complexity", "radiated_rcs", "rcs_relative_error",
    "realify", "recover_scale", "run", "vqls_solve",
]
