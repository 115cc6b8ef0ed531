"""Semidefinite lower bounds and rounding upper bounds for the quadratic cycle cover problem."""

from .cuts import CutPool, TriangleCut, cluster, separate
from .errors import QccpError
from .facial import Basis, compute_alpha, face_basis
from .graph import CycleCover, DiGraph, enumerate_cycle_covers, find_cycle_cover, never_used_arcs
from .heuristics import (CyclePool, SqParams, UbResult, all_upper_bounds, sq_learning, ub_euclidean, ub_hybrid,
                         ub_oversample, ub_undersample)
from .instances import (QcpInstance, gen_erdos_renyi, gen_manhattan, gen_reload, preprocess, read_instance,
                        write_instance)
from .oracle import brute_opt
from .projections import PolySetY, dykstra_cyclic, dykstra_parallel, project_Y
from .solver import PrsmParams, SolverState, lower_bound, solve_cpalm

__all__ = [
    "Basis", "CutPool", "CycleCover", "CyclePool", "DiGraph", "PolySetY", "PrsmParams", "QccpError",
    "QcpInstance", "SolverState", "SqParams", "TriangleCut", "UbResult", "all_upper_bounds", "brute_opt",
    "cluster", "compute_alpha", "dykstra_cyclic", "dykstra_parallel", "enumerate_cycle_covers", "face_basis",
    "find_cycle_cover", "gen_erdos_renyi", "gen_manhattan", "gen_reload", "lower_bound", "never_used_arcs",
    "preprocess", "project_Y", "read_instance", "separate", "solve_cpalm", "sq_learning", "ub_euclidean",
    "ub_hybrid", "ub_oversample", "ub_undersample", "write_instance",
]
