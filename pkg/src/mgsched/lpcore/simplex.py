"""Revised simplex method for LPs with general column bounds.

Two-phase method on the equality form A x + s = b, where one slack column
is appended per row and artificial columns absorb any initial bound
violation of the slacks.  The basis is held as a dense LU factorization
(scipy) plus a product-form eta file, refactorized periodically.  Pivot
selection is Dantzig pricing with largest-pivot tie-breaking; after a run
of stalled (degenerate) iterations the solver falls back to Bland's rule,
which guarantees termination.  All tie-breaks resolve to the lowest
column index, so repeated solves of the same problem are bit-identical.
"""

import logging

import numpy as np
from scipy.linalg import get_lapack_funcs, lu_factor

from .problem import LpError, LpProblem, LpSolution, SolveSettings

log = logging.getLogger(__name__)

_PIVOT_TOL = 1e-9
_DRIFT_CLEAN = 1e-11

AT_LOWER, AT_UPPER, FREE, BASIC = 0, 1, 2, 3


class _Core:
    """Equality-form workspace shared by the two phases."""

    def __init__(self, problem: LpProblem, settings: SolveSettings):
        self.settings = settings
        self.m = problem.n_rows
        self.n = problem.n_cols
        self.A = problem.matrix_csc()
        self.AT = self.A.T.tocsr()
        self._getrs = get_lapack_funcs(("getrs",), (np.empty((1, 1)),))[0]

        blo, bhi = problem.row_bounds()
        b = np.where(np.isfinite(bhi), bhi, blo)
        if not np.all(np.isfinite(b)):
            raise LpError("row with no finite side")
        self.b = b
        slack_lo = np.where(np.isfinite(bhi), 0.0, -np.inf)
        slack_hi = np.where(np.isfinite(bhi), bhi - blo, 0.0)

        self.lo = np.concatenate([problem.lower_inf(), slack_lo])
        self.hi = np.concatenate([problem.upper_inf(), slack_hi])
        self.n_art = 0
        self.art_row = np.zeros(0, dtype=np.int64)
        self.art_sign = np.zeros(0)

        n, m = self.n, self.m
        x = np.zeros(n + m)
        fin_lo = np.isfinite(self.lo[:n])
        fin_hi = np.isfinite(self.hi[:n])
        x[:n] = np.where(fin_lo, self.lo[:n], np.where(fin_hi, self.hi[:n], 0.0))
        self.vstat = np.full(n + m, AT_LOWER, dtype=np.int8)
        self.vstat[:n][~fin_lo & fin_hi] = AT_UPPER
        self.vstat[:n][~fin_lo & ~fin_hi] = FREE

        # candidate slack values; violations get an artificial column
        act = self.A @ x[:n]
        cand = self.b - act
        basis = np.empty(m, dtype=np.int64)
        art_row, art_sign, art_val = [], [], []
        for i in range(m):
            ls, us = slack_lo[i], slack_hi[i]
            if ls - 1e-12 <= cand[i] <= us + 1e-12:
                x[n + i] = cand[i]
                self.vstat[n + i] = BASIC
                basis[i] = n + i
            else:
                if cand[i] > us:
                    x[n + i] = us
                    self.vstat[n + i] = AT_UPPER
                    sign, val = 1.0, cand[i] - us
                else:
                    x[n + i] = ls
                    self.vstat[n + i] = AT_LOWER
                    sign, val = -1.0, ls - cand[i]
                basis[i] = n + m + len(art_row)
                art_row.append(i)
                art_sign.append(sign)
                art_val.append(val)
        self.n_art = len(art_row)
        self.art_row = np.array(art_row, dtype=np.int64)
        self.art_sign = np.array(art_sign)
        self.lo = np.concatenate([self.lo, np.zeros(self.n_art)])
        self.hi = np.concatenate([self.hi, np.full(self.n_art, np.inf)])
        self.x = np.concatenate([x, np.array(art_val)])
        self.vstat = np.concatenate(
            [self.vstat, np.full(self.n_art, BASIC, dtype=np.int8)]
        )
        self.basis = basis
        self.lu = None
        self.etas = []
        self.iterations = 0
        self._refactor()

    # -- columns and factorization ---------------------------------------

    def column(self, j):
        v = np.zeros(self.m)
        if j < self.n:
            a = self.A
            v[a.indices[a.indptr[j]:a.indptr[j + 1]]] = a.data[a.indptr[j]:a.indptr[j + 1]]
        elif j < self.n + self.m:
            v[j - self.n] = 1.0
        else:
            k = j - self.n - self.m
            v[self.art_row[k]] = self.art_sign[k]
        return v

    def _refactor(self):
        m, n = self.m, self.n
        B = np.zeros((m, m))
        struct = np.nonzero(self.basis < n)[0]
        if struct.size:
            B[:, struct] = self.A[:, self.basis[struct]].toarray()
        slack = np.nonzero((self.basis >= n) & (self.basis < n + m))[0]
        if slack.size:
            B[self.basis[slack] - n, slack] = 1.0
        art = np.nonzero(self.basis >= n + m)[0]
        if art.size:
            k = self.basis[art] - n - m
            B[self.art_row[k], art] = self.art_sign[k]
        self.lu = lu_factor(B, check_finite=False)
        self.etas = []
        self._recompute_basics()

    def _lu_solve(self, b, trans):
        x, info = self._getrs(self.lu[0], self.lu[1], b, trans=trans)
        if info != 0:
            raise LpError("basis factorization failed")
        return x

    def _recompute_basics(self):
        xn = self.x.copy()
        xn[self.basis] = 0.0
        act = self.A @ xn[: self.n]
        act += xn[self.n : self.n + self.m]
        if self.n_art:
            np.add.at(act, self.art_row, self.art_sign * xn[self.n + self.m :])
        xb = self.ftran(self.b - act)
        self.x[self.basis] = xb

    def ftran(self, v):
        r = self._lu_solve(v, trans=0)
        for p, d in self.etas:
            t = r[p] / d[p]
            r -= t * d
            r[p] = t
        return r

    def btran(self, w):
        y = w.copy()
        for p, d in reversed(self.etas):
            y[p] = (y[p] - (d @ y - d[p] * y[p])) / d[p]
        return self._lu_solve(y, trans=1)

    # -- main loop ---------------------------------------------------------

    def run(self, costs, phase):
        """Iterate to optimality of `costs`; returns a status string."""
        st = self.settings
        opt_tol = st.optimality_tol
        limit = st.iteration_limit
        stall = 0
        bland = False
        movable = (self.hi - self.lo) > 0.0

        while True:
            if limit is not None and self.iterations >= limit:
                return "limit"
            y = self.btran(costs[self.basis])
            z = costs.copy()
            z[: self.n] -= self.AT @ y
            z[self.n : self.n + self.m] -= y
            if self.n_art:
                z[self.n + self.m :] -= self.art_sign * y[self.art_row]

            down = (self.vstat == AT_LOWER) & movable & (z < -opt_tol)
            up = (self.vstat == AT_UPPER) & movable & (z > opt_tol)
            free = (self.vstat == FREE) & (np.abs(z) > opt_tol)
            eligible = np.nonzero(down | up | free)[0]
            if eligible.size == 0:
                return "optimal"
            if bland:
                q = int(eligible[0])
            else:
                q = int(eligible[np.argmax(np.abs(z[eligible]))])
            direction = 1.0 if (self.vstat[q] == AT_LOWER or (self.vstat[q] == FREE and z[q] < 0)) else -1.0

            d = self.ftran(self.column(q))
            self.iterations += 1

            # ratio test over basic positions plus the entering bound flip
            xb = self.x[self.basis]
            g = direction * d
            lo_b = self.lo[self.basis]
            hi_b = self.hi[self.basis]
            ratios = np.full(self.m, np.inf)
            dec = g > _PIVOT_TOL
            inc = g < -_PIVOT_TOL
            with np.errstate(invalid="ignore"):
                ratios[dec] = (xb[dec] - lo_b[dec]) / g[dec]
                ratios[inc] = (xb[inc] - hi_b[inc]) / g[inc]
            ratios[ratios < 0.0] = 0.0  # shave tiny drift
            own = self.hi[q] - self.lo[q]
            step = min(own, ratios.min()) if self.m else own
            if not np.isfinite(step):
                if phase == 1:
                    raise LpError("phase-1 subproblem unbounded; numerical failure")
                return "unbounded"

            if step <= 1e-10:
                stall += 1
                if stall >= st.stall_limit and not bland:
                    bland = True
                    log.debug("switching to Bland's rule after %d stalled iterations", stall)
            else:
                stall = 0

            if own < np.inf and own <= ratios.min():
                # entering variable flips to its other bound
                self.x[q] += direction * own
                self.x[self.basis] = xb - own * g
                self.vstat[q] = AT_UPPER if direction > 0 else AT_LOWER
                continue

            cands = np.nonzero(ratios <= step + 1e-12)[0]
            if bland:
                p = int(cands[np.argmin(self.basis[cands])])
            else:
                best = np.abs(d[cands])
                top = cands[best >= best.max() - 1e-12]
                p = int(top[np.argmin(self.basis[top])])

            leaving = int(self.basis[p])
            self.x[q] += direction * step
            self.x[self.basis] = xb - step * g
            self.x[leaving] = lo_b[p] if g[p] > 0 else hi_b[p]
            self.vstat[leaving] = AT_LOWER if g[p] > 0 else AT_UPPER
            self.basis[p] = q
            self.vstat[q] = BASIC
            self.etas.append((p, d))
            if len(self.etas) >= st.refactor_interval:
                self._refactor()

    def cleanup(self):
        """Refactorize and snap basic values onto bounds they sit beside."""
        self._refactor()
        snap = np.abs(self.x - self.lo) < _DRIFT_CLEAN
        self.x[snap] = self.lo[snap]
        snap = np.abs(self.x - self.hi) < _DRIFT_CLEAN
        self.x[snap] = self.hi[snap]


def solve_lp(problem: LpProblem, settings: SolveSettings | None = None) -> LpSolution:
    """Solve a pure LP (binary marks ignored) to proven optimality.

    Returns a solution with status one of optimal / infeasible /
    unbounded / limit.  On optimal, `x` holds the structural columns and
    `duals` the row multipliers of the equality form (d obj / d rhs).
    """
    settings = settings or SolveSettings()
    n, m = problem.n_cols, problem.n_rows

    if n == 0:
        blo, bhi = problem.row_bounds()
        bad = [i for i in range(m) if blo[i] > 1e-12 or bhi[i] < -1e-12]
        if bad:
            return LpSolution(status="infeasible", infeasible_rows=bad)
        return LpSolution(status="optimal", x=np.zeros(0), duals=np.zeros(m), objective=0.0)
    if m == 0:
        lo, hi = problem.lower_inf(), problem.upper_inf()
        c = problem.objective
        x = np.where(np.isfinite(lo), lo, np.where(np.isfinite(hi), hi, 0.0))
        x = np.where(c < 0, np.where(np.isfinite(hi), hi, np.inf), x)
        x = np.where(c > 0, np.where(np.isfinite(lo), lo, -np.inf), x)
        if not np.all(np.isfinite(x)):
            return LpSolution(status="unbounded")
        return LpSolution(
            status="optimal", x=x, duals=np.zeros(0), objective=float(c @ x)
        )

    core = _Core(problem, settings)
    scale = max(1.0, np.abs(core.b).max() if m else 1.0)

    if core.n_art:
        phase1 = np.zeros(core.x.size)
        phase1[core.n + core.m :] = 1.0
        status = core.run(phase1, phase=1)
        if status == "limit":
            return LpSolution(status="limit", iterations=core.iterations)
        core.cleanup()
        art_vals = core.x[core.n + core.m :]
        if art_vals.sum() > settings.feasibility_tol * scale:
            rows = sorted(
                int(core.art_row[k]) for k in np.nonzero(art_vals > settings.feasibility_tol)[0]
            )
            return LpSolution(
                status="infeasible", iterations=core.iterations, infeasible_rows=rows
            )
        # pin artificials at zero for phase 2
        core.lo[core.n + core.m :] = 0.0
        core.hi[core.n + core.m :] = 0.0
        core.x[core.n + core.m :] = 0.0

    costs = np.zeros(core.x.size)
    costs[:n] = problem.objective
    status = core.run(costs, phase=2)
    if status == "limit":
        return LpSolution(status="limit", iterations=core.iterations)
    if status == "unbounded":
        return LpSolution(status="unbounded", iterations=core.iterations)

    core.cleanup()
    y = core.btran(costs[core.basis])
    x = core.x[:n].copy()
    return LpSolution(
        status="optimal",
        x=x,
        duals=y,
        objective=float(problem.objective @ x),
        iterations=core.iterations,
    )


def dual_objective(problem: LpProblem, solution: LpSolution) -> float:
    """Value of the bound-dual at the solution's row multipliers.

    For min c'x, Ax + s = b, l <= x <= u the dual reads
    max y'b + sum_j (z_j^+ l_j - z_j^- u_j) with z = c - A'y taken over
    structural and slack columns.  Multipliers paired with an infinite
    bound are dropped; at optimality they vanish up to tolerance anyway.
    """
    if not solution.ok:
        raise LpError("dual objective needs an optimal solution")
    y = solution.duals
    blo, bhi = problem.row_bounds()
    b = np.where(np.isfinite(bhi), bhi, blo)
    z_struct = problem.objective - problem.matrix_csc().T @ y
    z_slack = -y
    lo = np.concatenate([problem.lower_inf(), np.where(np.isfinite(bhi), 0.0, -np.inf)])
    hi = np.concatenate([problem.upper_inf(), np.where(np.isfinite(bhi), bhi - blo, 0.0)])
    z = np.concatenate([z_struct, z_slack])
    pos = np.where(np.isfinite(lo), np.maximum(z, 0.0) * np.where(np.isfinite(lo), lo, 0.0), 0.0)
    neg = np.where(np.isfinite(hi), np.maximum(-z, 0.0) * np.where(np.isfinite(hi), hi, 0.0), 0.0)
    return float(y @ b + pos.sum() - neg.sum())
