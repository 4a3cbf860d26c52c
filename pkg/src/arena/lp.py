"""Small dense LP solver: two-phase simplex with Bland's rule.

Built for the desk-scale programs this toolkit generates (a few hundred
variables and rows, well-scaled dyadic data). Bland's rule guarantees
termination; the pivot tolerance is 1e-10.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericError, ShapeError

PIVOT_TOL = 1e-10
FEAS_TOL = 1e-9


@dataclass
class LinearProgram:
    """max/min c.x subject to A_ub x <= b_ub, A_eq x = b_eq, and variable bounds.

    `bounds` is one (low, high) pair per variable with None for unbounded;
    the default is (0, None) for every variable.
    """

    c: np.ndarray
    a_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    a_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    bounds: list[tuple[float | None, float | None]] | None = None
    maximize: bool = True

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        n = self.c.size
        for name in ("a_ub", "a_eq"):
            mat = getattr(self, name)
            if mat is not None:
                mat = np.atleast_2d(np.asarray(mat, dtype=float))
                if mat.shape[1] != n:
                    raise ShapeError(f"{name} has {mat.shape[1]} columns, expected {n}")
                setattr(self, name, mat)
        for aname, bname in (("a_ub", "b_ub"), ("a_eq", "b_eq")):
            mat, vec = getattr(self, aname), getattr(self, bname)
            if (mat is None) != (vec is None):
                raise ShapeError(f"{aname} and {bname} must be given together")
            if vec is not None:
                vec = np.asarray(vec, dtype=float).ravel()
                if vec.size != mat.shape[0]:
                    raise ShapeError(f"{bname} has {vec.size} entries, expected {mat.shape[0]}")
                setattr(self, bname, vec)
        if self.bounds is None:
            self.bounds = [(0.0, None)] * n
        if len(self.bounds) != n:
            raise ShapeError(f"{len(self.bounds)} bounds for {n} variables")
        arrays = [self.c] + [v for v in (self.a_ub, self.b_ub, self.a_eq, self.b_eq) if v is not None]
        if any(not np.all(np.isfinite(a)) for a in arrays):
            raise ShapeError("LP data must be finite")


@dataclass
class LpResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    objective: float | None = None
    x: np.ndarray | None = None


def _standard_form(lp: LinearProgram):
    """Rewrite with nonnegative variables only.

    Returns (c, A_ub, b_ub, A_eq, b_eq, recover) where recover maps a
    solution of the rewritten program back to original variables.
    """
    n = lp.c.size
    cols = []  # per original var: list of (column index, sign)
    offsets = np.zeros(n)
    next_col = 0
    extra_ub_rows = []  # (col, bound) for finite ranges
    for j, (lo, hi) in enumerate(lp.bounds):
        if lo is None and hi is None:
            cols.append([(next_col, 1.0), (next_col + 1, -1.0)])
            next_col += 2
        elif lo is None:
            # x = hi - y, y >= 0
            offsets[j] = hi
            cols.append([(next_col, -1.0)])
            next_col += 1
        else:
            offsets[j] = lo
            cols.append([(next_col, 1.0)])
            if hi is not None:
                extra_ub_rows.append((next_col, hi - lo))
            next_col += 1

    def expand(mat: np.ndarray) -> np.ndarray:
        out = np.zeros((mat.shape[0], next_col))
        for j in range(n):
            for col, sign in cols[j]:
                out[:, col] += sign * mat[:, j]
        return out

    c_new = np.zeros(next_col)
    for j in range(n):
        for col, sign in cols[j]:
            c_new[col] += sign * lp.c[j]

    a_ub_parts, b_ub_parts = [], []
    if lp.a_ub is not None:
        a_ub_parts.append(expand(lp.a_ub))
        b_ub_parts.append(lp.b_ub - lp.a_ub @ offsets)
    if extra_ub_rows:
        rows = np.zeros((len(extra_ub_rows), next_col))
        rhs = np.zeros(len(extra_ub_rows))
        for k, (col, bound) in enumerate(extra_ub_rows):
            rows[k, col] = 1.0
            rhs[k] = bound
        a_ub_parts.append(rows)
        b_ub_parts.append(rhs)
    a_ub = np.vstack(a_ub_parts) if a_ub_parts else None
    b_ub = np.concatenate(b_ub_parts) if b_ub_parts else None

    a_eq = expand(lp.a_eq) if lp.a_eq is not None else None
    b_eq = lp.b_eq - lp.a_eq @ offsets if lp.a_eq is not None else None

    def recover(y: np.ndarray) -> np.ndarray:
        x = offsets.copy()
        for j in range(n):
            for col, sign in cols[j]:
                x[j] += sign * y[col]
        return x

    return c_new, a_ub, b_ub, a_eq, b_eq, recover


def _simplex_core(c: np.ndarray, a: np.ndarray, b: np.ndarray, basis: list[int], max_iters: int):
    """Maximize c.y over A y = b, y >= 0 from a given basic feasible basis.

    Dense tableau. Pivots use Dantzig's rule with a largest-pivot leaving
    choice; when the objective stops improving (degenerate stalling), the
    iteration switches to Bland's rule, whose index discipline guarantees
    termination. Returns (tableau, basis), with tableau None when unbounded.
    """
    m, n = a.shape
    tab = np.zeros((m + 1, n + 1))
    tab[:m, :n] = a
    tab[:m, n] = b
    tab[m, :n] = -c
    for r, col in enumerate(basis):
        if abs(tab[m, col]) > 0:
            tab[m, :] -= tab[m, col] * tab[r, :] / tab[r, col]
    iters = 0
    bland = False
    stall = 0
    stall_limit = 4 * (m + 16)
    last_obj = tab[m, n]
    while True:
        iters += 1
        if iters > max_iters:
            raise NumericError(
                f"simplex stalled after {max_iters} pivots "
                f"(m={m}, n={n}, obj={tab[m, n]!r})"
            )
        reduced = tab[m, :n]
        if bland:
            candidates = np.flatnonzero(reduced < -PIVOT_TOL)
            if candidates.size == 0:
                return tab, basis
            enter = int(candidates.min())
        else:
            enter = int(np.argmin(reduced))
            if reduced[enter] >= -PIVOT_TOL:
                return tab, basis
        col = tab[:m, enter]
        rows = np.flatnonzero(col > PIVOT_TOL)
        if rows.size == 0:
            return None, basis  # unbounded direction
        ratios = tab[rows, n] / col[rows]
        best = ratios.min()
        tied = rows[ratios <= best + PIVOT_TOL * (1.0 + abs(best))]
        if bland:
            leave = int(tied[np.argmin([basis[r] for r in tied])])
        else:
            leave = int(tied[np.argmax(col[tied])])  # largest pivot for stability
        pivot = tab[leave, enter]
        tab[leave, :] /= pivot
        other = np.arange(m + 1) != leave
        tab[other, :] -= np.outer(tab[other, enter], tab[leave, :])
        tab[leave, enter] = 1.0
        tab[:m, n] = np.maximum(tab[:m, n], 0.0)  # clip pivot dust on the rhs
        basis[leave] = enter
        if not bland:
            if tab[m, n] > last_obj + 1e-12:
                stall = 0
                last_obj = tab[m, n]
            else:
                stall += 1
                if stall >= stall_limit:
                    bland = True


def lp_solve(lp: LinearProgram, max_iters: int = 200_000) -> LpResult:
    """Solve a LinearProgram; status is optimal, infeasible, or unbounded."""
    c, a_ub, b_ub, a_eq, b_eq, recover = _standard_form(lp)
    if not lp.maximize:
        c = -c
    n = c.size

    blocks_a, blocks_b, slack_cols = [], [], []
    if a_ub is not None:
        blocks_a.append(a_ub)
        blocks_b.append(b_ub)
        slack_cols = list(range(n, n + a_ub.shape[0]))
    if a_eq is not None:
        blocks_a.append(a_eq)
        blocks_b.append(b_eq)
    if not blocks_a:
        # Only the nonnegativity cone: optimum at 0 unless some c_j > 0.
        if np.any(c > PIVOT_TOL):
            return LpResult("unbounded")
        y = np.zeros(n)
        obj = float(c @ y)
        return LpResult("optimal", obj if lp.maximize else -obj, recover(y))

    a = np.vstack(blocks_a)
    b = np.concatenate(blocks_b)
    m = a.shape[0]
    n_slack = len(slack_cols)
    full = np.hstack([a, np.zeros((m, n_slack))])
    for k, col in enumerate(slack_cols):
        full[k, col] = 1.0
    # Flip rows to make rhs nonnegative (slack entries go to -1 there).
    neg = b < 0
    full[neg] *= -1
    b = np.abs(b)

    # Phase 1: artificials wherever no ready-made basic column exists.
    basis: list[int] = [-1] * m
    art_cols: list[int] = []
    for r in range(m):
        if r < n_slack and not neg[r]:
            basis[r] = slack_cols[r]
    total = n + n_slack
    need_art = [r for r in range(m) if basis[r] == -1]
    art = np.zeros((m, len(need_art)))
    for k, r in enumerate(need_art):
        art[r, k] = 1.0
        basis[r] = total + k
        art_cols.append(total + k)
    tableau_a = np.hstack([full, art])
    c_phase1 = np.zeros(tableau_a.shape[1])
    for col in art_cols:
        c_phase1[col] = -1.0
    tab, basis = _simplex_core(c_phase1, tableau_a, b, basis, max_iters)
    if tab is None:
        raise NumericError("phase-1 objective unbounded; inconsistent tableau")
    if tab[-1, -1] < -FEAS_TOL:
        return LpResult("infeasible")
    # Drive leftover artificials out of the basis (or drop redundant rows).
    keep_rows = []
    for r in range(m):
        if basis[r] >= total:
            row = tab[r, :total]
            nz = np.flatnonzero(np.abs(row) > PIVOT_TOL)
            if nz.size == 0:
                continue  # redundant constraint
            enter = int(nz[0])
            pivot = tab[r, enter]
            tab[r, :] /= pivot
            other = [q for q in range(tab.shape[0]) if q != r]
            tab[other, :] -= np.outer(tab[other, enter], tab[r, :])
            basis[r] = enter
        keep_rows.append(r)

    a2 = tab[keep_rows, :total]
    b2 = tab[keep_rows, -1]
    basis2 = [basis[r] for r in keep_rows]
    c2 = np.concatenate([c, np.zeros(n_slack)])
    tab2, basis2 = _simplex_core(c2, a2, b2, basis2, max_iters)
    if tab2 is None:
        return LpResult("unbounded")
    y = np.zeros(total)
    for r, col in enumerate(basis2):
        y[col] = tab2[r, -1]
    x = recover(y[:n])
    obj = float(lp.c @ x)
    return LpResult("optimal", obj, x)
