"""MPS fixed-format export and import, plus an LP-style debug writer.

The writer emits a canonical layout: one coefficient per COLUMNS line,
columns in index order with the objective entry first, rows inside a
column in row-index order, RHS/RANGES/BOUNDS entries only where they
differ from the format defaults.  Numeric tokens use shortest
round-tripping decimal notation and may overflow their nominal field
width; fields never contain embedded blanks, so any whitespace-delimited
MPS reader accepts the files.  parse_mps inverts the writer exactly:
export -> parse -> export is byte-identical.
"""

import numpy as np

from .problem import BOUND_INF, LpProblem

OBJ_NAME = "COST"


class MpsFormatError(ValueError):
    """Unparseable or unsupported MPS content."""


def _fmt(v: float) -> str:
    v = float(v)
    if v == 0.0:
        v = 0.0  # normalize -0.0
    r = repr(v)
    return r


def _pad(s: str, width: int) -> str:
    return s.ljust(width) if len(s) < width else s + " "


def _row_names(problem):
    return [problem.row_name(i) for i in range(problem.n_rows)]


def _col_names(problem):
    return [problem.col_name(j) for j in range(problem.n_cols)]


def export_mps(problem: LpProblem) -> str:
    """Serialize a problem to canonical fixed-format MPS text."""
    rows = _row_names(problem)
    cols = _col_names(problem)
    sense_code = {"=": "E", "<=": "L", ">=": "G"}
    out = []
    out.append(_pad("NAME", 14) + problem.name)
    out.append("ROWS")
    out.append(" N  " + OBJ_NAME)
    for i, s in enumerate(problem.row_sense):
        out.append(f" {sense_code[s]}  {rows[i]}")

    out.append("COLUMNS")
    tr, tc, tv = problem.tri_rows, problem.tri_cols, problem.tri_vals
    k = 0
    for j in range(problem.n_cols):
        emitted = False
        if problem.objective[j] != 0.0:
            out.append("    " + _pad(cols[j], 10) + _pad(OBJ_NAME, 10) + _fmt(problem.objective[j]))
            emitted = True
        while k < tc.size and tc[k] == j:
            out.append("    " + _pad(cols[j], 10) + _pad(rows[tr[k]], 10) + _fmt(tv[k]))
            emitted = True
            k += 1
        if not emitted:
            # declare the column so bounds can attach to it
            out.append("    " + _pad(cols[j], 10) + _pad(OBJ_NAME, 10) + "0.0")

    out.append("RHS")
    for i in range(problem.n_rows):
        if problem.rhs[i] != 0.0:
            out.append("    " + _pad("RHS", 10) + _pad(rows[i], 10) + _fmt(problem.rhs[i]))

    if problem.row_range is not None and np.any(problem.row_range != 0.0):
        out.append("RANGES")
        for i in range(problem.n_rows):
            if problem.row_range[i] != 0.0:
                out.append("    " + _pad("RNG", 10) + _pad(rows[i], 10) + _fmt(problem.row_range[i]))

    out.append("BOUNDS")
    lo = problem.lower_inf()
    hi = problem.upper_inf()
    for j in range(problem.n_cols):
        name = _pad("BND", 10) + cols[j]
        namev = _pad("BND", 10) + _pad(cols[j], 10)
        if j in problem.binary_cols:
            out.append(" BV " + name)
            l, u = lo[j], hi[j]
            if l == u:
                out.append(" FX " + namev + _fmt(l))
            else:
                if l != 0.0:
                    out.append(" LO " + namev + _fmt(l))
                if u != 1.0:
                    out.append(" UP " + namev + _fmt(u))
            continue
        l, u = lo[j], hi[j]
        l = -np.inf if l <= -BOUND_INF else l
        u = np.inf if u >= BOUND_INF else u
        if l == u:
            out.append(" FX " + namev + _fmt(l))
        elif np.isneginf(l) and np.isposinf(u):
            out.append(" FR " + name)
        elif np.isneginf(l):
            out.append(" MI " + name)
            out.append(" UP " + namev + _fmt(u))
        else:
            if l != 0.0 or (u < 0.0 and np.isfinite(u)):
                out.append(" LO " + namev + _fmt(l))
            if np.isfinite(u):
                out.append(" UP " + namev + _fmt(u))

    out.append("ENDATA")
    return "\n".join(out) + "\n"


def parse_mps(text: str) -> LpProblem:
    """Parse MPS text into a problem; inverse of export_mps on its output."""
    name = "LP"
    section = None
    row_names = []
    row_sense = []
    row_index = {}
    obj_name = None
    col_names = []
    col_index = {}
    objective = {}
    triplets = []
    rhs = {}
    ranges = {}
    bounds = {}
    binaries = set()
    in_integer = False

    def col_id(cname):
        if cname not in col_index:
            col_index[cname] = len(col_names)
            col_names.append(cname)
        return col_index[cname]

    for raw in text.splitlines():
        if not raw.strip() or raw.lstrip().startswith("*"):
            continue
        if raw[0] not in " \t":
            tok = raw.split()
            key = tok[0].upper()
            if key == "NAME":
                name = tok[1] if len(tok) > 1 else "LP"
            elif key in ("ROWS", "COLUMNS", "RHS", "RANGES", "BOUNDS"):
                section = key
            elif key == "ENDATA":
                section = None
                break
            else:
                raise MpsFormatError(f"unsupported section {key!r}")
            continue

        tok = raw.split()
        if section == "ROWS":
            code, rname = tok[0].upper(), tok[1]
            if code == "N":
                if obj_name is None:
                    obj_name = rname
                continue
            try:
                sense = {"E": "=", "L": "<=", "G": ">="}[code]
            except KeyError:
                raise MpsFormatError(f"unknown row type {code!r}") from None
            row_index[rname] = len(row_names)
            row_names.append(rname)
            row_sense.append(sense)
        elif section == "COLUMNS":
            if len(tok) >= 3 and tok[1] == "'MARKER'":
                in_integer = tok[2] == "'INTORG'"
                continue
            cname = tok[0]
            j = col_id(cname)
            if in_integer:
                binaries.add(j)
            for rname, val in zip(tok[1::2], tok[2::2]):
                v = float(val)
                if rname == obj_name:
                    objective[j] = objective.get(j, 0.0) + v
                elif rname in row_index:
                    triplets.append((row_index[rname], j, v))
                else:
                    raise MpsFormatError(f"coefficient for unknown row {rname!r}")
        elif section == "RHS":
            for rname, val in zip(tok[1::2], tok[2::2]):
                if rname == obj_name:
                    continue
                if rname not in row_index:
                    raise MpsFormatError(f"RHS for unknown row {rname!r}")
                rhs[row_index[rname]] = float(val)
        elif section == "RANGES":
            for rname, val in zip(tok[1::2], tok[2::2]):
                if rname not in row_index:
                    raise MpsFormatError(f"RANGES for unknown row {rname!r}")
                ranges[row_index[rname]] = float(val)
        elif section == "BOUNDS":
            btype = tok[0].upper()
            if btype in ("FR", "MI", "PL", "BV"):
                cname = tok[2]
                j = col_id(cname)
                lo, up = bounds.get(j, (0.0, np.inf))
                if btype == "FR":
                    bounds[j] = (-np.inf, np.inf)
                elif btype == "MI":
                    bounds[j] = (-np.inf, up)
                elif btype == "PL":
                    bounds[j] = (lo, np.inf)
                else:
                    binaries.add(j)
                    bounds[j] = (0.0, 1.0)
            elif btype in ("LO", "UP", "FX"):
                cname, val = tok[2], float(tok[3])
                j = col_id(cname)
                lo, up = bounds.get(j, (0.0, np.inf))
                if btype == "LO":
                    bounds[j] = (val, up)
                elif btype == "UP":
                    bounds[j] = (lo, val)
                else:
                    bounds[j] = (val, val)
            else:
                raise MpsFormatError(f"unsupported bound type {btype!r}")
        elif section is None:
            raise MpsFormatError("data line outside any section")
        else:
            raise MpsFormatError(f"unhandled section {section!r}")

    n, m = len(col_names), len(row_names)
    obj = np.zeros(n)
    for j, v in objective.items():
        obj[j] = v
    rhs_arr = np.zeros(m)
    for i, v in rhs.items():
        rhs_arr[i] = v
    range_arr = None
    if ranges:
        range_arr = np.zeros(m)
        for i, v in ranges.items():
            range_arr[i] = v
    col_lower = np.zeros(n)
    col_upper = np.full(n, np.inf)
    for j, (l, u) in bounds.items():
        col_lower[j], col_upper[j] = l, u
    return LpProblem(
        n_cols=n,
        n_rows=m,
        objective=obj,
        triplets=triplets,
        row_sense=row_sense,
        rhs=rhs_arr,
        col_lower=col_lower,
        col_upper=col_upper,
        binary_cols=binaries,
        row_range=range_arr,
        row_names=row_names,
        col_names=col_names,
        name=name,
    )


def export_lp_text(problem: LpProblem) -> str:
    """Human-readable LP-style listing for debugging; not parsed back."""
    rows = _row_names(problem)
    cols = _col_names(problem)
    lines = [f"\\ Problem: {problem.name}", "Minimize"]

    def terms(pairs):
        parts = []
        for cname, v in pairs:
            sign = "-" if v < 0 else "+"
            parts.append(f"{sign} {_fmt(abs(v))} {cname}")
        s = " ".join(parts) if parts else "0"
        return s[2:] if s.startswith("+ ") else s

    obj_pairs = [(cols[j], problem.objective[j]) for j in range(problem.n_cols)
                 if problem.objective[j] != 0.0]
    lines.append(" obj: " + terms(obj_pairs))
    lines.append("Subject To")
    by_row = [[] for _ in range(problem.n_rows)]
    for r, c, v in zip(problem.tri_rows, problem.tri_cols, problem.tri_vals):
        by_row[r].append((cols[c], v))
    rel = {"=": "=", "<=": "<=", ">=": ">="}
    for i in range(problem.n_rows):
        lines.append(f" {rows[i]}: " + terms(by_row[i]) + f" {rel[problem.row_sense[i]]} {_fmt(problem.rhs[i])}")
    lines.append("Bounds")
    lo, hi = problem.lower_inf(), problem.upper_inf()
    for j in range(problem.n_cols):
        l, u = lo[j], hi[j]
        if np.isneginf(l) and np.isposinf(u):
            lines.append(f" {cols[j]} free")
        elif l == u:
            lines.append(f" {cols[j]} = {_fmt(l)}")
        else:
            left = "-inf" if np.isneginf(l) else _fmt(l)
            right = "+inf" if np.isposinf(u) else _fmt(u)
            lines.append(f" {left} <= {cols[j]} <= {right}")
    if problem.binary_cols:
        lines.append("Binaries")
        for j in sorted(problem.binary_cols):
            lines.append(f" {cols[j]}")
    lines.append("End")
    return "\n".join(lines) + "\n"
