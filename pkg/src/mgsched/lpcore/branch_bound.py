"""Branch-and-bound over binary columns on top of the LP solver.

Best-bound node selection with most-fractional branching; every tie
resolves to the lowest column index so runs are reproducible.  Nodes are
LP relaxations with tightened binary bounds.  The incumbent is accepted
when all binary columns are integral within the integrality tolerance,
and the search stops once the relative gap between incumbent and best
open bound is below mip_gap.
"""

import heapq
import logging
import time

import numpy as np

from .problem import LpProblem, LpSolution, SolveSettings
from .simplex import solve_lp

log = logging.getLogger(__name__)


def _with_bounds(problem, lower, upper):
    return LpProblem(
        n_cols=problem.n_cols,
        n_rows=problem.n_rows,
        objective=problem.objective,
        triplets=(problem.tri_rows, problem.tri_cols, problem.tri_vals),
        row_sense=problem.row_sense,
        rhs=problem.rhs,
        col_lower=lower,
        col_upper=upper,
        row_range=problem.row_range,
        row_names=problem.row_names,
        col_names=problem.col_names,
        name=problem.name,
    )


def _gap(incumbent, bound):
    return (incumbent - bound) / max(1.0, abs(incumbent))


def solve_milp(problem: LpProblem, settings: SolveSettings | None = None) -> LpSolution:
    """Solve an LP with binary columns; plain solve_lp when there are none."""
    settings = settings or SolveSettings()
    bincols = np.array(sorted(problem.binary_cols), dtype=np.int64)
    if bincols.size == 0:
        return solve_lp(problem, settings)

    itol = settings.integrality_tol
    t_start = time.monotonic()

    root_lo = problem.col_lower.copy()
    root_hi = problem.col_upper.copy()
    root_lo[bincols] = np.maximum(root_lo[bincols], 0.0)
    root_hi[bincols] = np.minimum(root_hi[bincols], 1.0)

    incumbent = None
    incumbent_obj = np.inf
    nodes_done = 0
    total_iters = 0
    counter = 0
    heap = []

    root = solve_lp(_with_bounds(problem, root_lo, root_hi), settings)
    total_iters += root.iterations
    nodes_done += 1
    if root.status in ("infeasible", "unbounded"):
        root.nodes = nodes_done
        return root
    if root.status == "limit":
        return LpSolution(status="limit", iterations=total_iters, nodes=nodes_done)
    heapq.heappush(heap, (root.objective, counter, root, root_lo, root_hi))

    status = "optimal"
    while heap:
        best_bound = heap[0][0]
        if incumbent is not None and _gap(incumbent_obj, best_bound) <= settings.mip_gap:
            break
        if settings.node_limit is not None and nodes_done >= settings.node_limit:
            status = "limit"
            break
        if settings.time_limit is not None and time.monotonic() - t_start > settings.time_limit:
            status = "limit"
            break

        _, _, sol, lo, hi = heapq.heappop(heap)
        if incumbent is not None and _gap(incumbent_obj, sol.objective) <= settings.mip_gap:
            continue  # pruned by a newer incumbent

        frac = np.abs(sol.x[bincols] - np.round(sol.x[bincols]))
        if frac.size == 0 or frac.max() <= itol:
            if sol.objective < incumbent_obj - 1e-12:
                incumbent = sol
                incumbent_obj = sol.objective
                log.debug("incumbent %.9g after %d nodes", incumbent_obj, nodes_done)
            continue

        j = int(bincols[np.argmax(frac)])
        for fix in (0.0, 1.0):
            child_lo = lo.copy()
            child_hi = hi.copy()
            if fix == 0.0:
                child_hi[j] = 0.0
            else:
                child_lo[j] = 1.0
            child = solve_lp(_with_bounds(problem, child_lo, child_hi), settings)
            nodes_done += 1
            total_iters += child.iterations
            if child.status != "optimal":
                continue
            if incumbent is not None and _gap(incumbent_obj, child.objective) <= settings.mip_gap:
                continue
            counter += 1
            heapq.heappush(heap, (child.objective, counter, child, child_lo, child_hi))

    best_bound = min([h[0] for h in heap], default=incumbent_obj)
    if incumbent is None:
        if status == "limit":
            return LpSolution(status="limit", iterations=total_iters, nodes=nodes_done,
                              best_bound=best_bound)
        return LpSolution(status="infeasible", iterations=total_iters, nodes=nodes_done)

    x = incumbent.x.copy()
    x[bincols] = np.round(x[bincols])
    return LpSolution(
        status=status,
        x=x,
        duals=incumbent.duals,
        objective=float(problem.objective @ x),
        iterations=total_iters,
        nodes=nodes_done,
        best_bound=float(min(best_bound, incumbent_obj)),
    )
