"""Sparse linear-program container and point feasibility checks.

Problems are stored in triplet form with per-column bounds and optional
binary marks.  Minimization is the only objective sense.  Bounds with
magnitude >= BOUND_INF are treated as infinite, mirroring the convention
of most solver interchange formats.
"""

from dataclasses import dataclass, field

import numpy as np

BOUND_INF = 1e30

SENSES = ("=", "<=", ">=")


class LpError(ValueError):
    """Malformed problem or an operation applied to an unusable solution."""


@dataclass(frozen=True)
class SolveSettings:
    feasibility_tol: float = 1e-7
    optimality_tol: float = 1e-7
    integrality_tol: float = 1e-6
    mip_gap: float = 1e-6
    node_limit: int | None = None
    time_limit: float | None = None
    iteration_limit: int | None = None
    refactor_interval: int = 50
    stall_limit: int = 1000

    def __post_init__(self):
        for name in ("feasibility_tol", "optimality_tol", "integrality_tol", "mip_gap"):
            if getattr(self, name) <= 0:
                raise LpError(f"{name} must be positive")


class LpProblem:
    """Immutable sparse LP: min c'x s.t. row senses/ranges, l <= x <= u.

    Triplets are canonicalized at construction: sorted by (column, row),
    duplicates merged, exact zeros dropped.  Exporters rely on this order
    being stable.
    """

    def __init__(self, n_cols, n_rows, objective, triplets, row_sense, rhs,
                 col_lower, col_upper, binary_cols=(), row_range=None,
                 row_names=None, col_names=None, name="LP"):
        self.n_cols = int(n_cols)
        self.n_rows = int(n_rows)
        self.objective = np.asarray(objective, dtype=float).copy()
        self.row_sense = list(row_sense)
        self.rhs = np.asarray(rhs, dtype=float).copy()
        self.col_lower = np.asarray(col_lower, dtype=float).copy()
        self.col_upper = np.asarray(col_upper, dtype=float).copy()
        self.binary_cols = frozenset(int(j) for j in binary_cols)
        if row_range is None:
            self.row_range = None
        else:
            self.row_range = np.asarray(row_range, dtype=float).copy()
        self.row_names = list(row_names) if row_names is not None else None
        self.col_names = list(col_names) if col_names is not None else None
        self.name = name

        rows, cols, vals = self._canonicalize(triplets)
        self.tri_rows = rows
        self.tri_cols = cols
        self.tri_vals = vals
        self._validate()

    def _canonicalize(self, triplets):
        if isinstance(triplets, tuple) and len(triplets) == 3:
            rows, cols, vals = triplets
        else:
            trip = list(triplets)
            if trip:
                rows, cols, vals = zip(*trip)
            else:
                rows, cols, vals = (), (), ()
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=float)
        if rows.size == 0:
            return rows, cols, vals
        order = np.lexsort((rows, cols))
        rows, cols, vals = rows[order], cols[order], vals[order]
        # merge duplicates
        key_change = np.empty(rows.size, dtype=bool)
        key_change[0] = True
        key_change[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
        group = np.cumsum(key_change) - 1
        merged = np.zeros(group[-1] + 1)
        np.add.at(merged, group, vals)
        rows = rows[key_change]
        cols = cols[key_change]
        vals = merged
        keep = vals != 0.0
        return rows[keep], cols[keep], vals[keep]

    def _validate(self):
        n, m = self.n_cols, self.n_rows
        if self.objective.shape != (n,):
            raise LpError("objective length != n_cols")
        if self.rhs.shape != (m,) or len(self.row_sense) != m:
            raise LpError("rhs/row_sense length != n_rows")
        if self.col_lower.shape != (n,) or self.col_upper.shape != (n,):
            raise LpError("bounds length != n_cols")
        if self.row_range is not None and self.row_range.shape != (m,):
            raise LpError("row_range length != n_rows")
        for s in self.row_sense:
            if s not in SENSES:
                raise LpError(f"unknown row sense {s!r}")
        if self.tri_rows.size:
            if self.tri_rows.min() < 0 or self.tri_rows.max() >= m:
                raise LpError("triplet row index out of range")
            if self.tri_cols.min() < 0 or self.tri_cols.max() >= n:
                raise LpError("triplet column index out of range")
        if not np.all(np.isfinite(self.tri_vals)):
            raise LpError("NaN or infinite coefficient in matrix")
        if not np.all(np.isfinite(self.objective)):
            raise LpError("NaN or infinite objective coefficient")
        if np.any(np.isnan(self.rhs)):
            raise LpError("NaN right-hand side")
        lo = np.where(self.col_lower <= -BOUND_INF, -np.inf, self.col_lower)
        up = np.where(self.col_upper >= BOUND_INF, np.inf, self.col_upper)
        if np.any(lo > up):
            raise LpError("col_lower > col_upper")
        for j in self.binary_cols:
            if j < 0 or j >= n:
                raise LpError("binary column index out of range")
            if lo[j] < -1e-12 or up[j] > 1 + 1e-12:
                raise LpError(f"binary column {j} has bounds outside [0, 1]")
        if self.row_names is not None and len(self.row_names) != m:
            raise LpError("row_names length != n_rows")
        if self.col_names is not None and len(self.col_names) != n:
            raise LpError("col_names length != n_cols")

    # -- derived views ----------------------------------------------------

    def lower_inf(self):
        """Lower bounds with the infinity convention applied."""
        return np.where(self.col_lower <= -BOUND_INF, -np.inf, self.col_lower)

    def upper_inf(self):
        return np.where(self.col_upper >= BOUND_INF, np.inf, self.col_upper)

    def row_bounds(self):
        """Per-row activity interval [blo, bhi] implied by sense and range."""
        blo = np.full(self.n_rows, -np.inf)
        bhi = np.full(self.n_rows, np.inf)
        for i, sense in enumerate(self.row_sense):
            b = self.rhs[i]
            r = 0.0 if self.row_range is None else self.row_range[i]
            if sense == "=":
                if r == 0.0:
                    blo[i] = bhi[i] = b
                elif r > 0:
                    blo[i], bhi[i] = b, b + r
                else:
                    blo[i], bhi[i] = b + r, b
            elif sense == "<=":
                bhi[i] = b
                if r != 0.0:
                    blo[i] = b - abs(r)
            else:  # >=
                blo[i] = b
                if r != 0.0:
                    bhi[i] = b + abs(r)
        return blo, bhi

    def matrix_csc(self):
        import scipy.sparse as sp

        return sp.csc_matrix(
            (self.tri_vals, (self.tri_rows, self.tri_cols)),
            shape=(self.n_rows, self.n_cols),
        )

    def row_activity(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n_cols,):
            raise LpError("point length != n_cols")
        act = np.zeros(self.n_rows)
        np.add.at(act, self.tri_rows, self.tri_vals * x[self.tri_cols])
        return act

    def row_name(self, i):
        if self.row_names is not None:
            return self.row_names[i]
        return f"R{i + 1:04d}"

    def col_name(self, j):
        if self.col_names is not None:
            return self.col_names[j]
        return f"C{j + 1:04d}"


@dataclass
class LpSolution:
    status: str  # optimal | infeasible | unbounded | limit
    x: np.ndarray | None = None
    duals: np.ndarray | None = None
    objective: float = np.nan
    iterations: int = 0
    nodes: int = 0
    best_bound: float = np.nan
    infeasible_rows: list = field(default_factory=list)

    @property
    def ok(self):
        return self.status == "optimal"


@dataclass
class FeasibilityReport:
    objective: float
    max_row_violation: float
    max_bound_violation: float
    row_violations: dict  # row index -> violation amount (> 0 only)
    bound_violations: dict  # col index -> violation amount (> 0 only)

    def ok(self, tol):
        return self.max_row_violation <= tol and self.max_bound_violation <= tol

    def to_dict(self):
        return {
            "objective": self.objective,
            "max_row_violation": self.max_row_violation,
            "max_bound_violation": self.max_bound_violation,
            "row_violations": {str(k): v for k, v in sorted(self.row_violations.items())},
            "bound_violations": {str(k): v for k, v in sorted(self.bound_violations.items())},
        }


def check_point(problem: LpProblem, x, tol: float = 1e-7) -> FeasibilityReport:
    """Evaluate a point against all rows and bounds of a problem."""
    x = np.asarray(x, dtype=float)
    act = problem.row_activity(x)
    blo, bhi = problem.row_bounds()
    below = np.maximum(blo - act, 0.0)
    above = np.maximum(act - bhi, 0.0)
    rowviol = np.maximum(below, above)
    lo = problem.lower_inf()
    up = problem.upper_inf()
    bndviol = np.maximum(np.maximum(lo - x, 0.0), np.maximum(x - up, 0.0))
    rows = {int(i): float(rowviol[i]) for i in np.nonzero(rowviol > tol)[0]}
    bounds = {int(j): float(bndviol[j]) for j in np.nonzero(bndviol > tol)[0]}
    return FeasibilityReport(
        objective=float(problem.objective @ x),
        max_row_violation=float(rowviol.max()) if problem.n_rows else 0.0,
        max_bound_violation=float(bndviol.max()) if problem.n_cols else 0.0,
        row_violations=rows,
        bound_violations=bounds,
    )
