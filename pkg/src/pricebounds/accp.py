"""Accelerated central cutting plane solver for box domains.

Maintains a shrinking bracket [phi_lo, phi_hi] around the superhedging
price.  Each iteration queries the Chebyshev center of the polytope of
hedges whose cost lies in a speculative band; an empty polytope proves
the speculative band too ambitious and raises the certified lower
bound, while a feasible center is tested by a (loosely solved) slack
MILP whose bound either certifies a better upper bound or produces new
feasibility cuts.  Cuts cleared by the center with room to spare are
deactivated when the inscribed radius collapses, keeping the LPs small.

The lower-bound LPs double as a source of the dual support set from
which an extremal pricing measure is extracted by one final LP.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import cpwa
from .cpwa import CpwaFunction
from .lp import LinearProgram, solve_lp, chebyshev_center
from .milp import MilpOptions, solve_milp
from .encoding import encode_min
from .ecp import (MarketInstance, BoundsResult, price_pi,
                  SUPPORT_ROUNDING, compute_lower_phi)


@dataclass
class AccpOptions:
    epsilon: float = 1e-3
    tau: float = 1.0
    gamma: float = 0.1
    zeta: float = 0.8
    delta: float = 0.7
    c_bar: float = None  # defaults to max(100, |c0| + 2)
    y_bar: np.ndarray = None  # defaults to 100 * ones
    phi_low: float = None
    phi_high: float = None
    initial_portfolio: tuple = None  # (c0, y0), must dominate f
    initial_support: list = field(default_factory=list)
    node_limit: int = 50000
    max_iterations: int = 100000


@dataclass
class CutRecord:
    x: np.ndarray
    gx: np.ndarray
    fx: float
    generation: int
    active: bool = True
    removable: bool = True


@dataclass
class DiscreteMeasure:
    atoms: list  # of (x: ndarray, mass: float)
    value: float  # integral of f
    interior_ok: bool = True

    def total_mass(self):
        return sum(m for _, m in self.atoms)

    def expectation(self, fn):
        return sum(m * cpwa.evaluate(fn, x) for x, m in self.atoms)

    def to_json_dict(self):
        return {"atoms": [{"x": [float(v) for v in x], "mass": float(m)}
                          for x, m in self.atoms]}


def _default_initial_portfolio(instance, f, box):
    """Constant cash hedge: c0 = max of f over the box, y0 = 0."""
    neg = cpwa.linear_combination([-1.0], [f])
    enc = encode_min(neg, box)
    res = solve_milp(enc.program, MilpOptions(rel_gap=1e-9),
                     offset=enc.constant)
    c0 = max(0.0, -res.incumbent_value)
    return float(c0), np.zeros(instance.m)


def solve_accp(instance: MarketInstance, f: CpwaFunction,
               opts: AccpOptions = None):
    """Returns (BoundsResult, dagger) with dagger either None or
    (c_dagger, y_dagger, X_dagger support list)."""
    if opts is None:
        opts = AccpOptions()
    if not instance.is_box():
        raise ValueError("accp requires a box domain")
    t0 = time.monotonic()
    box = instance.box_array()
    m = instance.m
    d = instance.dimension
    eps = opts.epsilon
    if opts.tau <= eps:
        raise ValueError("tau must exceed epsilon")
    caveats = []

    if opts.initial_portfolio is not None:
        c0, y0 = opts.initial_portfolio
        y0 = np.asarray(y0, dtype=float)
    else:
        c0, y0 = _default_initial_portfolio(instance, f, box)
    # verify domination: min over box of c0 + <y0, g> - f >= 0
    h0 = cpwa.linear_combination(list(y0) + [-1.0],
                                 list(instance.g) + [f])
    enc0 = encode_min(h0, box)
    chk = solve_milp(enc0.program, MilpOptions(rel_gap=1e-9),
                     offset=enc0.constant + c0)
    if chk.incumbent_value < -1e-9:
        raise ValueError("initial portfolio does not dominate f "
                         "(min %.6g)" % chk.incumbent_value)

    phi_low_in = opts.phi_low
    if phi_low_in is None:
        phi_low_in = compute_lower_phi(instance, f)
    phi_high_in = opts.phi_high
    if phi_high_in is None:
        phi_high_in = c0 + price_pi(y0, instance)

    c_bar = opts.c_bar
    if c_bar is None:
        c_bar = max(100.0, abs(c0) + 2.0)
    y_bar = opts.y_bar
    if y_bar is None:
        y_bar = np.full(m, 100.0)
    else:
        y_bar = np.asarray(y_bar, dtype=float)
    if abs(c0) > c_bar - 1 or np.any(np.abs(y0) > y_bar - 1):
        raise ValueError("initial portfolio too close to the bounding "
                         "box; enlarge c_bar / y_bar")

    template = cpwa.slack_template(instance.g, f)
    obj_band = np.concatenate([[1.0], instance.ask, -instance.bid])
    band_scale = float(np.linalg.norm(obj_band))

    records = []
    seen = set()

    def add_point(x, generation, rounded=True):
        x = np.asarray(x, dtype=float)
        if rounded:
            x = np.round(x, SUPPORT_ROUNDING)
        x = np.clip(x, 0.0, box)
        key = tuple(x)
        if key in seen:
            for rec in records:
                if tuple(rec.x) == key:
                    rec.active = True
                    return rec
        rec = CutRecord(
            x=x,
            gx=np.array([cpwa.evaluate(gj, x) for gj in instance.g]),
            fx=cpwa.evaluate(f, x),
            generation=generation)
        seen.add(key)
        records.append(rec)
        return rec

    gens = {0: [add_point(x, 0) for x in opts.initial_support]}

    def active_records():
        return [rec for rec in records if rec.active]

    def cut_rows(active):
        rows, scales = [], []
        for rec in active:
            coeffs = np.concatenate([[1.0], rec.gx, -rec.gx])
            rows.append((coeffs, rec.fx))
            scales.append(float(np.sqrt(1.0 + rec.gx @ rec.gx)))
        return rows, scales

    def box_rows():
        n = 1 + 2 * m
        rows, scales = [], []
        e = np.zeros(n)
        e[0] = 1.0
        rows.append((e.copy(), -c_bar))
        scales.append(1.0)
        rows.append((-e, -c_bar))
        scales.append(1.0)
        for j in range(2 * m):
            ej = np.zeros(n)
            ej[1 + j] = 1.0
            rows.append((ej.copy(), 0.0))
            scales.append(1.0)
            rows.append((-ej, -float(y_bar[j % m])))
            scales.append(1.0)
        return rows, scales

    phi_lo = phi_low_in - opts.tau
    phi_hi = phi_high_in
    c_star, y_star = float(c0), y0.copy()
    flag = False
    rho = {0: -1.0}
    dagger = None
    lp_count = 0
    milp_count = 0
    milp_nodes = 0
    r = 0
    while phi_hi - phi_lo > eps:
        r += 1
        if r > opts.max_iterations:
            raise RuntimeError("iteration limit reached")
        phi_mid = (phi_lo + phi_hi) / 2.0
        if flag:
            phi_mid = (phi_lo + phi_mid) / 2.0
        active = active_records()
        crows, cscales = cut_rows(active)
        brows, bscales = box_rows()
        rows = brows + [(obj_band, phi_lo), (-obj_band, -phi_mid)] + crows
        scales = bscales + [band_scale, band_scale] + cscales
        center = chebyshev_center(rows, scales)
        lp_count += 1
        if center is None:
            # speculative band empty: certified new lower bound via LP
            lp_rows = [(c, ">=", b) for c, b in crows]
            bounds = ([(-c_bar, c_bar)] +
                      [(0.0, float(yb)) for yb in y_bar] * 2)
            sol = solve_lp(LinearProgram(obj_band, lp_rows, bounds))
            lp_count += 1
            if sol.status != "optimal":
                raise RuntimeError("lower-bound LP status %s" % sol.status)
            phi_lo = sol.objective
            cd = float(sol.x[0])
            yd = sol.x[1:1 + m] - sol.x[1 + m:1 + 2 * m]
            interior = (abs(cd) < c_bar - 1e-7 and
                        np.all(sol.x[1:] < np.concatenate([y_bar, y_bar])
                               - 1e-7))
            dagger = (cd, yd, [rec.x.copy() for rec in active], interior)
            for rec in records:
                if 1 <= rec.generation <= r - 1:
                    rec.removable = True
            rho[r] = -1.0
            gens[r] = []
            continue
        v, radius = center
        rho[r] = radius
        c_r = float(v[0])
        y_r = v[1:1 + m] - v[1 + m:1 + 2 * m]

        slack_fn = cpwa.instantiate(template, y_r)
        enc = encode_min(slack_fn, box)
        res = solve_milp(enc.program,
                         MilpOptions(rel_gap=opts.zeta,
                                     pool_threshold=opts.delta,
                                     node_limit=opts.node_limit),
                         offset=enc.constant + c_r)
        milp_count += 1
        milp_nodes += res.nodes
        if res.incumbent_value is None:
            raise RuntimeError("slack MILP found no incumbent")
        s_hi = res.incumbent_value  # approximate optimal value
        s_lo = res.best_bound  # certified lower bound at termination
        if res.status == "node_limit" and s_hi >= 0:
            # stuck-state heuristic: force the objective-cut branch
            s_lo = min(s_lo, s_hi - eps)
            if "heuristic-assisted" not in caveats:
                caveats.append("heuristic-assisted")
        gens[r] = []
        for x_full, val in res.pool:
            if val <= opts.delta * s_hi + 1e-9:
                rec = add_point(x_full[:d], r)
                rec.active = True
                rec.removable = True
                gens[r].append(rec)

        if c_r + price_pi(y_r, instance) - s_lo < phi_hi - eps:
            phi_hi = c_r + price_pi(y_r, instance) - s_lo
            c_star = c_r - s_lo
            y_star = y_r.copy()
            if s_lo >= 0:
                for rec in records:
                    if 1 <= rec.generation <= r:
                        rec.removable = True
                continue

        if flag:
            flag = False
            for rec in gens[r]:
                rec.removable = False
            continue
        flag = True
        for l in range(0, r + 1):
            if rho[r] < opts.gamma * rho.get(l, -1.0):
                for rec in gens.get(l, []):
                    if rec.removable and rec.active:
                        lhs = (c_r + y_r @ rec.gx -
                               np.sqrt(1.0 + rec.gx @ rec.gx) * rho[r])
                        if lhs > rec.fx:
                            rec.active = False

    phi_ub = phi_hi
    phi_lb = phi_lo
    status = "ok"
    if phi_ub < phi_low_in:
        status = "unbounded_arbitrage"
    result = BoundsResult(
        phi_lb=phi_lb, phi_ub=phi_ub, c_star=c_star, y_star=y_star,
        support=[rec.x.copy() for rec in active_records()],
        status=status, lp_count=lp_count, milp_count=milp_count,
        milp_nodes=milp_nodes, iterations=r,
        wall_time=time.monotonic() - t0, caveats=caveats)
    if dagger is not None:
        dagger = dagger[:3] + (dagger[3],)
    return result, dagger


def extract_measure(instance: MarketInstance, f: CpwaFunction,
                    support, interior_ok=True) -> DiscreteMeasure:
    """Extremal pricing measure on a finite support: maximize the
    integral of f over probability measures pricing every instrument
    inside its band."""
    support = [np.asarray(x, dtype=float) for x in support]
    if not support:
        raise ValueError("empty support")
    nx = len(support)
    fx = np.array([cpwa.evaluate(f, x) for x in support])
    G = np.stack([[cpwa.evaluate(gj, x) for gj in instance.g]
                  for x in support])  # nx x m
    rows = [(np.ones(nx), "=", 1.0)]
    for j in range(instance.m):
        rows.append((G[:, j], ">=", float(instance.bid[j])))
        rows.append((G[:, j], "<=", float(instance.ask[j])))
    sol = solve_lp(LinearProgram(-fx, rows, [(0.0, None)] * nx))
    if sol.status != "optimal":
        raise RuntimeError("measure LP status %s: support set inadequate"
                           % sol.status)
    atoms = [(support[i], float(sol.x[i])) for i in range(nx)
             if sol.x[i] > 1e-12]
    return DiscreteMeasure(atoms=atoms, value=float(-sol.objective),
                           interior_ok=interior_ok)


def detect_unbounded_flag(result: BoundsResult) -> bool:
    return result.status == "unbounded_arbitrage"
