"""Lattice random-walk Skorokhod embeddings driven by phase-space barriers."""

from .dp import (Embedding, StateSpaceError, embed, embedded_law, induced_coupling,
                 iterate_absorption)
from .fitting import BarrierFitError, FitReport, PreconditionError, fit_right_barrier, fit_two_sided
from .lattice import (Barrier, Lattice, LatticeError, make_lattice, mirror_barrier, snap,
                      stop_mask, to_phase, transform_barrier)
from .montecarlo import (OpenClosedComparison, PathEnsemble, StopResult, WalkPath,
                         compare_open_closed, hit_time, simulate_walk, stop_ensemble)
from .stopgo import PathFunctional, Sigma, StopGoResult, StoppedPath, check_stop_go

__all__ = [
    "Barrier", "BarrierFitError", "Embedding", "FitReport", "Lattice", "LatticeError",
    "OpenClosedComparison", "PathEnsemble", "PathFunctional", "PreconditionError", "Sigma",
    "StateSpaceError", "StopGoResult", "StopResult", "StoppedPath", "WalkPath",
    "check_stop_go", "compare_open_closed", "embed", "embedded_law", "fit_right_barrier",
    "fit_two_sided", "hit_time", "induced_coupling", "iterate_absorption", "make_lattice",
    "mirror_barrier", "simulate_walk", "snap", "stop_ensemble", "stop_mask", "to_phase",
    "transform_barrier",
]
