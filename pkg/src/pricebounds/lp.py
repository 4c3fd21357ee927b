"""Dense two-phase simplex LP solver with duals and certificates.

Solves  min <c, x>  s.t.  rows (a, rel, b) with rel in {<=, >=, =} and
per-variable bounds.  Reports primal solution, row duals, a Farkas-style
certificate on infeasibility and an improving ray on unboundedness.  The
final basis is refactorized (solve against the unpivoted matrix) so the
reported solution and duals do not inherit tableau drift.

Pivoting is Dantzig's rule with a deterministic tie-break, falling back
to Bland's rule when the objective stalls, so identical inputs always
produce identical outputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

FEAS_TOL = 1e-9
OPT_TOL = 1e-9
CONDITION_RATIO_MAX = 1e12
MAX_ITER = 100000


class ResourceLimitError(RuntimeError):
    """Iteration or size limit exceeded."""


class ConditioningError(ValueError):
    """Input coefficients span more than the allowed dynamic range."""


@dataclass
class LinearProgram:
    objective: np.ndarray
    rows: list  # of (coeffs: ndarray, relation: "<="|">="|"=", rhs: float)
    var_bounds: list  # of (lower or None, upper or None)

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float)
        n = len(self.objective)
        if len(self.var_bounds) != n:
            raise ValueError("bounds length mismatch")
        rows = []
        for a, rel, b in self.rows:
            a = np.asarray(a, dtype=float)
            if len(a) != n:
                raise ValueError("row length mismatch")
            if rel not in ("<=", ">=", "="):
                raise ValueError("bad relation %r" % (rel,))
            rows.append((a, rel, float(b)))
        self.rows = rows
        for lo, up in self.var_bounds:
            if lo is not None and up is not None and lo > up:
                raise ValueError("lower bound exceeds upper bound")


@dataclass
class LpSolution:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray = None
    objective: float = None
    row_duals: np.ndarray = None
    dual_objective: float = None
    farkas: np.ndarray = None  # certificate over rows, if infeasible
    ray: np.ndarray = None  # improving direction, if unbounded
    iterations: int = 0


def _check_conditioning(p: LinearProgram):
    mags = []
    for a, _, _ in p.rows:
        nz = np.abs(a[a != 0.0])
        if nz.size:
            mags.append((nz.max(), nz.min()))
    if not mags:
        return
    hi = max(m[0] for m in mags)
    lo = min(m[1] for m in mags)
    if lo > 0 and hi / lo > CONDITION_RATIO_MAX:
        raise ConditioningError(
            "coefficient dynamic range %.3g exceeds %.3g" %
            (hi / lo, CONDITION_RATIO_MAX))


def _pivot(D, r, basis, pr, pc):
    piv = D[pr, pc]
    D[pr] /= piv
    col = D[:, pc].copy()
    col[pr] = 0.0
    D -= np.outer(col, D[pr])
    r -= r[pc] * D[pr]
    basis[pr] = pc


def _run_simplex(D, r, basis, allowed, tol, max_iter):
    """Pivot until optimal/unbounded.  r is the reduced-cost row
    augmented with -objective in its last entry.  Returns
    (status, entering_or_None, iterations)."""
    n = D.shape[1] - 1
    it = 0
    stall = 0
    last_obj = r[-1]
    bland_after = 20 * (D.shape[0] + n) + 500
    while True:
        if it >= max_iter:
            raise ResourceLimitError("simplex iteration limit reached")
        use_bland = stall > bland_after
        cand = np.where(allowed & (r[:n] < -tol))[0]
        if cand.size == 0:
            return "optimal", None, it
        if use_bland:
            pc = int(cand[0])
        else:
            pc = int(cand[np.argmin(r[cand])])
        col = D[:, pc]
        pos = np.where(col > 1e-11)[0]
        if pos.size == 0:
            return "unbounded", pc, it
        ratios = D[pos, -1] / col[pos]
        best = ratios.min()
        ties = pos[ratios <= best + 1e-12]
        # deterministic: smallest basis index among tied rows
        pr = int(ties[np.argmin(basis[ties])])
        _pivot(D, r, basis, pr, pc)
        it += 1
        if r[-1] < last_obj - 1e-12:
            last_obj = r[-1]
            stall = 0
        else:
            stall += 1


def solve_lp(p: LinearProgram, feas_tol=FEAS_TOL, opt_tol=OPT_TOL,
             max_iter=MAX_ITER) -> LpSolution:
    _check_conditioning(p)
    n_orig = len(p.objective)

    # -- variable transform to x' >= 0 -------------------------------------
    # maps: list per original var of ("shift", lo, col) | ("neg", up, col)
    #       | ("free", col_pos, col_neg)
    maps = []
    col_count = 0
    extra_rows = []  # bound rows in transformed columns: (col, ub)
    for j, (lo, up) in enumerate(p.var_bounds):
        if lo is not None:
            maps.append(("shift", lo, col_count))
            if up is not None:
                extra_rows.append((col_count, up - lo))
            col_count += 1
        elif up is not None:
            maps.append(("neg", up, col_count))
            col_count += 1
        else:
            maps.append(("free", col_count, col_count + 1))
            col_count += 2

    def transform_row(a, rhs):
        ta = np.zeros(col_count)
        for j, mp in enumerate(maps):
            aj = a[j]
            if aj == 0.0:
                continue
            if mp[0] == "shift":
                ta[mp[2]] = aj
                rhs -= aj * mp[1]
            elif mp[0] == "neg":
                ta[mp[2]] = -aj
                rhs -= aj * mp[1]
            else:
                ta[mp[1]] = aj
                ta[mp[2]] = -aj
        return ta, rhs

    c_t = np.zeros(col_count)
    obj_offset = 0.0
    for j, mp in enumerate(maps):
        cj = p.objective[j]
        if mp[0] == "shift":
            c_t[mp[2]] = cj
            obj_offset += cj * mp[1]
        elif mp[0] == "neg":
            c_t[mp[2]] = -cj
            obj_offset += cj * mp[1]
        else:
            c_t[mp[1]] = cj
            c_t[mp[2]] = -cj

    rows_t = []
    row_map = []  # (orig_index or None, flip: bool)
    for idx, (a, rel, rhs) in enumerate(p.rows):
        ta, trhs = transform_row(a, rhs)
        if not np.any(ta):
            # empty row: check consistency outright
            viol = ((rel == "<=" and trhs < -feas_tol * 10) or
                    (rel == ">=" and trhs > feas_tol * 10) or
                    (rel == "=" and abs(trhs) > feas_tol * 10))
            if viol:
                return LpSolution(status="infeasible")
            continue
        rows_t.append((ta, rel, trhs))
        row_map.append((idx, False))
    for col, ub in extra_rows:
        ta = np.zeros(col_count)
        ta[col] = 1.0
        rows_t.append((ta, "<=", ub))
        row_map.append((None, False))

    mr = len(rows_t)
    if mr == 0:
        # unconstrained over x' >= 0
        if np.any(c_t < -opt_tol):
            return LpSolution(status="unbounded")
        x = _map_back(np.zeros(col_count), maps, n_orig)
        return LpSolution(status="optimal", x=x,
                          objective=obj_offset,
                          row_duals=np.zeros(len(p.rows)),
                          dual_objective=obj_offset)

    # normalize rhs >= 0
    A = np.zeros((mr, col_count))
    rhs_v = np.zeros(mr)
    rels = []
    for i, (ta, rel, trhs) in enumerate(rows_t):
        if trhs < 0:
            ta = -ta
            trhs = -trhs
            rel = {"<=": ">=", ">=": "<=", "=": "="}[rel]
            row_map[i] = (row_map[i][0], True)
        A[i] = ta
        rhs_v[i] = trhs
        rels.append(rel)

    n_slack = sum(1 for r in rels if r == "<=")
    n_surp = sum(1 for r in rels if r == ">=")
    n_art = sum(1 for r in rels if r != "<=")
    N = col_count + n_slack + n_surp + n_art
    A_std = np.zeros((mr, N))
    A_std[:, :col_count] = A
    basis = np.zeros(mr, dtype=int)
    init_ident = np.zeros(mr, dtype=int)  # identity col per row (for duals)
    art_cols = []
    js, ju, ja = 0, 0, 0
    for i, rel in enumerate(rels):
        if rel == "<=":
            col = col_count + js
            A_std[i, col] = 1.0
            basis[i] = col
            init_ident[i] = col
            js += 1
        else:
            if rel == ">=":
                A_std[i, col_count + n_slack + ju] = -1.0
                ju += 1
            col = col_count + n_slack + n_surp + ja
            A_std[i, col] = 1.0
            basis[i] = col
            init_ident[i] = col
            art_cols.append(col)
            ja += 1
    art_cols = np.array(art_cols, dtype=int)
    is_art = np.zeros(N, dtype=bool)
    is_art[art_cols] = True

    D = np.hstack([A_std, rhs_v[:, None]])
    A_keep = A_std.copy()
    b_keep = rhs_v.copy()

    # -- phase 1 -----------------------------------------------------------
    c1 = np.zeros(N)
    c1[art_cols] = 1.0
    r1 = np.concatenate([c1, [0.0]])
    for i in range(mr):
        if is_art[basis[i]]:
            r1 -= D[i]
    allowed = np.ones(N, dtype=bool)
    status, _, it1 = _run_simplex(D, r1, basis, allowed, opt_tol, max_iter)
    scale = 1.0 + abs(rhs_v).max(initial=0.0)
    # feasibility decided by per-row scaled residuals of the phase-1 point
    x1 = np.zeros(N)
    x1[basis] = D[:, -1]
    resid = A_keep[:, :col_count] @ x1[:col_count] - rhs_v
    viol = np.zeros(mr)
    for i, rel in enumerate(rels):
        if rel == "<=":
            viol[i] = max(resid[i], 0.0)
        elif rel == ">=":
            viol[i] = max(-resid[i], 0.0)
        else:
            viol[i] = abs(resid[i])
    if np.max(viol / (1.0 + np.abs(rhs_v))) > 1e-7:
        # Farkas certificate y: y^T b > 0, y^T A <= 0 over standard rows
        y1 = np.zeros(mr)
        for i in range(mr):
            col = init_ident[i]
            y1[i] = c1[col] - r1[col]
        farkas = np.zeros(len(p.rows))
        for i, (orig, flip) in enumerate(row_map):
            if orig is not None:
                farkas[orig] += (-y1[i] if flip else y1[i])
        return LpSolution(status="infeasible", farkas=farkas,
                          iterations=it1)

    # drive artificials out of the basis
    for i in range(mr):
        if is_art[basis[i]]:
            row = D[i, :N].copy()
            row[is_art] = 0.0
            nz = np.where(np.abs(row) > 1e-9)[0]
            if nz.size:
                pc = int(nz[np.argmax(np.abs(row[nz]))])
                _pivot(D, r1, basis, i, pc)

    # -- phase 2 -----------------------------------------------------------
    c_full = np.zeros(N)
    c_full[:col_count] = c_t
    r2 = np.concatenate([c_full, [0.0]])
    for i in range(mr):
        j = basis[i]
        if c_full[j] != 0.0:
            r2[:N] -= c_full[j] * D[i, :N]
            r2[-1] -= c_full[j] * D[i, -1]
    allowed = ~is_art
    status, pc, it2 = _run_simplex(D, r2, basis, allowed, opt_tol,
                                   max_iter)
    iters = it1 + it2

    if status == "unbounded":
        t = np.zeros(N)
        t[pc] = 1.0
        for i in range(mr):
            t[basis[i]] = -D[i, pc]
        ray = _map_back_dir(t, maps, n_orig)
        return LpSolution(status="unbounded", ray=ray, iterations=iters)

    # -- refactorize the final basis for accuracy --------------------------
    B = A_keep[:, basis]
    try:
        xB = np.linalg.solve(B, b_keep)
        y = np.linalg.solve(B.T, c_full[basis])
    except np.linalg.LinAlgError:
        xB = D[:, -1].copy()
        y = None
    if y is None or np.abs(xB - D[:, -1]).max() > 1e-5 * scale:
        xB = D[:, -1].copy()
        y = np.zeros(mr)
        for i in range(mr):
            col = init_ident[i]
            y[i] = c_full[col] - r2[col]
    xB = np.maximum(xB, 0.0)
    x_std = np.zeros(N)
    x_std[basis] = xB
    x = _map_back(x_std[:col_count], maps, n_orig)
    obj = float(p.objective @ x)
    duals = np.zeros(len(p.rows))
    for i, (orig, flip) in enumerate(row_map):
        if orig is not None:
            duals[orig] += (-y[i] if flip else y[i])
    dual_obj = float(y @ b_keep) + obj_offset
    return LpSolution(status="optimal", x=x, objective=obj,
                      row_duals=duals, dual_objective=dual_obj,
                      iterations=iters)


def _map_back(xprime, maps, n_orig):
    x = np.zeros(n_orig)
    for j, mp in enumerate(maps):
        if mp[0] == "shift":
            x[j] = mp[1] + xprime[mp[2]]
        elif mp[0] == "neg":
            x[j] = mp[1] - xprime[mp[2]]
        else:
            x[j] = xprime[mp[1]] - xprime[mp[2]]
    return x


def _map_back_dir(t, maps, n_orig):
    x = np.zeros(n_orig)
    for j, mp in enumerate(maps):
        if mp[0] == "shift":
            x[j] = t[mp[2]]
        elif mp[0] == "neg":
            x[j] = -t[mp[2]]
        else:
            x[j] = t[mp[1]] - t[mp[2]]
    return x


def chebyshev_center(rows, scales=None, rho_cap=1e9):
    """Center and radius of the largest ball inscribed in
    {v : <a_i, v> >= b_i}.

    rows: list of (a, b).  scales: optional per-row scale replacing the
    default Euclidean norm of a_i in <a_i, v> - scale_i * rho >= b_i.
    Returns (center, radius) or None if the polytope is empty.
    """
    rows = [(np.asarray(a, dtype=float), float(b)) for a, b in rows]
    if not rows:
        raise ValueError("need at least one row")
    n = len(rows[0][0])
    if scales is None:
        scales = [float(np.linalg.norm(a)) for a, _ in rows]
    lp_rows = []
    for (a, b), s in zip(rows, scales):
        coeff = np.concatenate([a, [-s]])
        lp_rows.append((coeff, ">=", b))
    c = np.zeros(n + 1)
    c[-1] = -1.0
    bounds = [(None, None)] * n + [(0.0, rho_cap)]
    sol = solve_lp(LinearProgram(c, lp_rows, bounds))
    if sol.status == "infeasible":
        return None
    if sol.status != "optimal":
        raise RuntimeError("chebyshev LP ended with status %s" % sol.status)
    return sol.x[:n], float(sol.x[-1])
