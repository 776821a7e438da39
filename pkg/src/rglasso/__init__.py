"""Recursive l1,inf group lasso: online homotopy updates of a group-sparse
penalised least-squares filter, with RLS and l1 baselines."""

from .engine import RecursiveGroupLasso, RLSFilter, l1_rls, predict, rgl_init, rgl_update, rls_init, rls_update
from .errors import (BadConfig, BadPartition, InvalidTransition, NoConvergence, OutOfRange, PathStall,
                     RGLassoError, SingularSystem, SingularUpdate, ZeroSignEntry)
from .groups import ActiveSets, GroupPartition, make_partition, singleton_partition
from .kkt import CompactSolution, QuadraticData, check_optimality, objective

__version__ = "0.1.0"
