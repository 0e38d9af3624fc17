"""Dense two-phase simplex.

Revised simplex with the basis inverse rebuilt from the original data at
every pivot. Dantzig pricing falls back to Bland's rule on long degenerate
runs; a Harris ratio test avoids tiny pivots.

Small problems only: the per-edge synthesis programs have a few dozen rows
and a few hundred columns.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-7
COND_LIMIT = 1e12


class LpError(RuntimeError):
    """Numerical failure (singular or ill-conditioned basis)."""


@dataclass
class LinearProgram:
    """minimize c.v  s.t.  A_eq v = b_eq,  A_ineq v <= b_ineq,  lb <= v <= ub."""

    c: np.ndarray
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    A_ineq: np.ndarray | None = None
    b_ineq: np.ndarray | None = None
    lb: np.ndarray | None = None
    ub: np.ndarray | None = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).reshape(-1)
        n = self.c.size
        self.A_eq, self.b_eq = self._rows(self.A_eq, self.b_eq, n, "eq")
        self.A_ineq, self.b_ineq = self._rows(self.A_ineq, self.b_ineq, n, "ineq")
        self.lb = np.zeros(n) if self.lb is None else np.asarray(self.lb, dtype=float).reshape(-1)
        self.ub = np.full(n, np.inf) if self.ub is None else np.asarray(self.ub, dtype=float).reshape(-1)
        if self.lb.size != n or self.ub.size != n:
            raise ValueError("bound vectors must match the number of variables")
        for name, arr in (("c", self.c), ("A_eq", self.A_eq), ("b_eq", self.b_eq), ("A_ineq", self.A_ineq), ("b_ineq", self.b_ineq)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} has non-finite entries")
        if np.any(np.isnan(self.lb)) or np.any(np.isnan(self.ub)) or np.any(self.lb == np.inf) or np.any(self.ub == -np.inf):
            raise ValueError("invalid variable bounds")

    @staticmethod
    def _rows(A, b, n, name):
        if A is None:
            return np.zeros((0, n)), np.zeros(0)
        A = np.asarray(A, dtype=float).reshape(-1, n)
        b = np.asarray(b, dtype=float).reshape(-1)
        if A.shape[0] != b.size:
            raise ValueError(f"{name} rows and right-hand side differ in length")
        return A, b

    @property
    def num_vars(self) -> int:
        return self.c.size


@dataclass
class LpSolution:
    status: str  # optimal | infeasible | unbounded
    values: np.ndarray = field(default_factory=lambda: np.zeros(0))
    objective_value: float = float("nan")
    duals_eq: np.ndarray = field(default_factory=lambda: np.zeros(0))
    duals_ineq: np.ndarray = field(default_factory=lambda: np.zeros(0))
    iterations: int = 0


def _to_standard(lp: LinearProgram):
    """Rewrite as min c's s.t. A s = b, s >= 0.

    Returns the standard data and an affine map s -> v given by
    v = v0 + M s (M is sparse in practice but kept dense here).
    """
    n = lp.num_vars
    cols = []  # per original var: list of (std column, sign)
    v0 = np.zeros(n)
    extra_rows = []  # (std column, upper value) for finite two-sided bounds
    ncol = 0
    for k in range(n):
        lo, hi = lp.lb[k], lp.ub[k]
        if np.isfinite(lo):
            v0[k] = lo
            cols.append([(ncol, 1.0)])
            if np.isfinite(hi):
                extra_rows.append((ncol, hi - lo))
            ncol += 1
        elif np.isfinite(hi):
            v0[k] = hi
            cols.append([(ncol, -1.0)])
            ncol += 1
        else:
            cols.append([(ncol, 1.0), (ncol + 1, -1.0)])
            ncol += 2
    M = np.zeros((n, ncol))
    for k, entries in enumerate(cols):
        for j, sgn in entries:
            M[k, j] = sgn
    m_eq, m_in, m_ub = lp.A_eq.shape[0], lp.A_ineq.shape[0], len(extra_rows)
    nslack = m_in + m_ub
    A = np.zeros((m_eq + m_in + m_ub, ncol + nslack))
    b = np.zeros(m_eq + m_in + m_ub)
    A[:m_eq, :ncol] = lp.A_eq @ M
    b[:m_eq] = lp.b_eq - lp.A_eq @ v0
    A[m_eq : m_eq + m_in, :ncol] = lp.A_ineq @ M
    b[m_eq : m_eq + m_in] = lp.b_ineq - lp.A_ineq @ v0
    for r in range(m_in):
        A[m_eq + r, ncol + r] = 1.0
    for r, (j, cap) in enumerate(extra_rows):
        A[m_eq + m_in + r, j] = 1.0
        A[m_eq + m_in + r, ncol + m_in + r] = 1.0
        b[m_eq + m_in + r] = cap
    c = np.concatenate([M.T @ lp.c, np.zeros(nslack)])
    const = float(lp.c @ v0)
    return c, A, b, M, v0, const, (m_eq, m_in)


HARRIS_TOL = 1e-9
RATIO_PIVOT_TOL = 1e-7
SHIFT_LIMIT = 1e-6
DEGENERATE_LIMIT = 50
MAX_ITER = 50000


def _inverse(A, basis):
    try:
        Binv = np.linalg.inv(A[:, basis])
    except np.linalg.LinAlgError:
        raise LpError("singular basis") from None
    if not np.all(np.isfinite(Binv)):
        raise LpError("singular basis")
    return Binv


def _point(A, b, basis, lo, Binv):
    """Basic solution with every nonbasic column resting at its bound."""
    x = lo.copy()
    x[basis] = 0.0
    x[basis] = Binv @ (b - A @ x)
    return x


def _simplex(A, b, cost, basis, allowed, lo, degenerate_limit=DEGENERATE_LIMIT):
    """Revised primal simplex for min cost.s, A s = b, s >= lo.

    Starts from the given basis and modifies basis and lo in place. lo holds
    the lower bounds (zero on entry) and is only ever shifted down: when
    rounding leaves a basic slightly below its bound, the bound follows it so
    the iterate stays consistent. The caller removes the shifts afterwards.

    The basis inverse is recomputed from A at every iteration, so no
    rounding accumulates across pivots. Dantzig pricing switches to Bland's
    rule after a run of degenerate pivots; the Harris two-pass ratio test
    picks the largest pivot among rows within a small slack.
    """
    m, n = A.shape
    it = 0
    degenerate_run = 0
    b_max = float(np.abs(b).max(initial=0.0))
    harris = HARRIS_TOL * max(1.0, b_max)
    while True:
        Binv = _inverse(A, basis) if m else np.zeros((0, 0))
        x = _point(A, b, basis, lo, Binv)
        xb = x[basis]
        low = xb < lo[basis]
        lo[np.asarray(basis, dtype=int)[low]] = xb[low]
        if -lo.min(initial=0.0) > SHIFT_LIMIT * max(1.0, b_max, float(np.abs(x).max(initial=0.0))):
            raise LpError(f"bound shifts grew to {-lo.min():.3g}")
        y = cost[basis] @ Binv
        red = cost - y @ A
        red[basis] = 0.0
        neg = (red < -PIVOT_TOL) & allowed
        if not neg.any():
            return "optimal", x, it
        if degenerate_run >= degenerate_limit:
            k = int(np.argmax(neg))
        else:
            k = int(np.argmin(np.where(neg, red, 0.0)))
        w = Binv @ A[:, k]
        pos = np.nonzero(w > PIVOT_TOL)[0]
        if len(pos) == 0:
            return "unbounded", x, it
        # tiny entries count as zero; the shifts absorb the dips they cause
        large = pos[w[pos] > RATIO_PIVOT_TOL]
        pos = large if len(large) else pos
        gap = xb[pos] - lo[np.asarray(basis, dtype=int)[pos]]
        theta = ((gap + harris) / w[pos]).min()
        ok = [q for q, g in zip(pos, gap) if g / w[q] <= theta]
        r = int(min(ok, key=lambda q: (-float(w[q]), basis[q])))
        step = (xb[r] - lo[basis[r]]) / w[r]
        degenerate_run = degenerate_run + 1 if step <= 1e-12 else 0
        basis[r] = k
        it += 1
        if it > MAX_ITER:
            raise LpError("simplex iteration limit reached")


def _violation(lp, v):
    """Largest violation of any constraint or bound at v, row-scaled."""
    parts = [0.0]
    if len(lp.b_eq):
        nrm = np.maximum(np.abs(lp.A_eq).max(axis=1), 1.0)
        parts.append(float((np.abs(lp.A_eq @ v - lp.b_eq) / nrm).max()))
    if len(lp.b_ineq):
        nrm = np.maximum(np.abs(lp.A_ineq).max(axis=1), 1.0)
        parts.append(float((np.maximum(lp.A_ineq @ v - lp.b_ineq, 0.0) / nrm).max()))
    parts.append(float(np.maximum(lp.lb - v, 0.0).max(initial=0.0)))
    parts.append(float(np.maximum(v - lp.ub, 0.0).max(initial=0.0)))
    return max(parts)


def solve_lp(lp: LinearProgram) -> LpSolution:
    c, A, b, M, v0, const, (m_eq, m_in) = _to_standard(lp)
    m, n = A.shape
    # equilibrate rows and make right-hand sides nonnegative
    scale = np.abs(A).max(axis=1) if n else np.ones(m)
    scale[scale == 0.0] = 1.0
    A = A / scale[:, None]
    b = b / scale
    flip = np.where(b < 0, -1.0, 1.0)
    A = A * flip[:, None]
    b = b * flip
    for r in range(m):
        if not A[r].any() and abs(b[r]) > FEAS_TOL:
            return LpSolution("infeasible")
    # phase 1 with one artificial per row
    A1 = np.hstack([A, np.eye(m)])
    cost1 = np.concatenate([np.zeros(n), np.ones(m)])
    basis = list(range(n, n + m))
    status, _, it1 = _simplex(A1, b, cost1, basis, np.ones(n + m, dtype=bool), np.zeros(n + m))
    if status != "optimal":
        raise LpError("phase 1 did not terminate at an optimum")
    x1 = _point(A1, b, basis, np.zeros(n + m), _inverse(A1, basis))
    if float(x1[n:].sum()) > FEAS_TOL * max(1.0, float(np.abs(b).max(initial=0.0))):
        return LpSolution("infeasible", iterations=it1)
    # drive artificials out of the basis; drop rows that are redundant
    rows = list(range(m))
    r = 0
    while r < len(basis):
        if basis[r] < n:
            r += 1
            continue
        Binv = _inverse(A1[rows], basis)
        row = Binv[r] @ A[rows]
        row[[q for q in basis if q < n]] = 0.0
        k = int(np.argmax(np.abs(row))) if n else 0
        if n and abs(row[k]) > 1e-7:
            basis[r] = k
            r += 1
        else:
            # the artificial's row is a combination of the others
            dropped = basis[r] - n
            rows.remove(dropped)
            del basis[r]
    status, _, it2 = _simplex(A[rows], b[rows], c, basis, np.ones(n, dtype=bool), np.zeros(n))
    iters = it1 + it2
    if status == "unbounded":
        return LpSolution("unbounded", iterations=iters)
    # refine the basic solution against the scaled original rows
    Ab = A[rows][:, basis]
    cond = np.linalg.cond(Ab) if len(basis) else 1.0
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise LpError(f"singular basis (condition number {cond:.3g})")
    xb = np.linalg.solve(Ab, b[rows]) if len(basis) else np.zeros(0)
    # the shifts are gone here: the basis must be feasible on its own
    if len(basis) and xb.min() < -FEAS_TOL * max(1.0, float(np.abs(b).max(initial=0.0)), float(np.abs(xb).max())):
        raise LpError(f"optimal basis is primal infeasible ({xb.min():.3g})")
    s = np.zeros(n)
    s[basis] = np.maximum(xb, 0.0)
    y_scaled = np.linalg.solve(Ab.T, c[basis]) if len(basis) else np.zeros(0)
    y = np.zeros(m)
    y[rows] = y_scaled
    y = y * flip / scale
    v = v0 + M @ s[: M.shape[1]]
    worst = _violation(lp, v)
    rhs = np.concatenate([lp.b_eq, lp.b_ineq, [1.0]])
    if worst > FEAS_TOL * float(np.abs(rhs).max()):
        raise LpError(f"solution violates the constraints by {worst:.3g}")
    return LpSolution(
        "optimal",
        v,
        float(lp.c @ v),
        y[:m_eq].copy(),
        y[m_eq : m_eq + m_in].copy(),
        iters,
    )
