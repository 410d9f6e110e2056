"""Deterministic laboratory for fault-tolerant geometric multigrid.

Solves a box-partitioned Poisson problem with master/ghost container data
structures, injects fail-stop faults that destroy a subdomain's volume
data, runs local and global recovery strategies, and measures the
cycle-advantage metric and residual pollution.
"""

from .errors import (ConfigError, FaultMGError, InvalidPartition,
                     NoHealthyRegion, NonConvergence, PcgBreakdown,
                     ScheduleConflict, UnrecoverableInterface)
from .fields import (FieldVector, assert_ghosts_synced, ghost_defect,
                     restore_interface, sync_ghosts)
from .hierarchy import (Container, GridHierarchy, NodeClass, PartitionSpec,
                        RegionMask, build_hierarchy, classify_node,
                        region_masks)
from .operators import (StencilOperator, SubStencilSplit, TransferPair,
                        apply_operator, assemble_blocks, assemble_dense,
                        prolongate, residual, restrict, smooth_hybrid_gs,
                        sub_stencils)
from .problems import BUILTIN_PROBLEMS, PoissonProblem, get_problem
from .regions import (FAULTY_DIRICHLET, FULL, HEALTHY_DIRICHLET,
                      HEALTHY_NEUMANN, RegionSystem)
from .resilience import (FaultEvent, LogicalClock, RecoveryConfig,
                         RecoveryReport, SolverState, apply_recovery,
                         compute_neumann_flux, cycle_advantage, inject_fault,
                         make_state, recover_dd, recover_dn, recover_local,
                         run_fault_free, run_faulty_job)
from .solvers import (CycleSpec, KrylovSpec, SolveTrace, StoppingRule,
                      mg_cycle, pcg, smooth_only, solve_to_tol)

__version__ = "0.1.0"
