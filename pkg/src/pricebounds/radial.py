"""Linear inequality system certifying lower-boundedness of the slack.

On the unbounded domain R^d_+ the slack s_y = sum_j y_j g_j - f is
bounded below iff its radial version is nonnegative on R^d_+.  That
condition is equivalent to a finite system of linear inequalities on y
with auxiliary nonnegative multipliers eta: for every choice of one
piece per term whose "difference cone" has nonempty interior within the
positive orthant, the chosen pieces' weighted gradient must dominate a
conic combination of the difference vectors.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .cpwa import SlackTemplate
from .lp import LinearProgram, solve_lp, ResourceLimitError

ROW_CAP_DEFAULT = 100000


@dataclass
class RadialBlock:
    Y: np.ndarray  # (d, m) coefficients on y
    E: np.ndarray  # (d, n_eta) coefficients on this block's eta vars
    rhs: np.ndarray  # (d,)
    tuple_index: tuple


@dataclass
class RadialSystem:
    m: int
    dimension: int
    blocks: list  # of RadialBlock

    @property
    def aux_count(self):
        return sum(b.E.shape[1] for b in self.blocks)

    @property
    def row_count(self):
        return sum(b.Y.shape[0] for b in self.blocks)


def enumerate_tuples(tmpl: SlackTemplate):
    """All ways of picking one piece index per template term."""
    ranges = [range(len(pieces)) for _, _, pieces in tmpl.terms]
    return itertools.product(*ranges)


def cone_interior_empty(A) -> bool:
    """True iff some convex combination of the vectors in A is <= 0
    componentwise (which collapses the dual cone's interior in R^d_+)."""
    A = [np.asarray(v, dtype=float) for v in A]
    if not A:
        return False
    d = len(A[0])
    n = len(A)
    rows = [(np.ones(n), "=", 1.0)]
    for comp in range(d):
        rows.append((np.array([v[comp] for v in A]), "<=", 0.0))
    sol = solve_lp(LinearProgram(np.zeros(n), rows, [(0.0, None)] * n))
    return sol.status == "optimal"


def generate(tmpl: SlackTemplate, row_cap=ROW_CAP_DEFAULT) -> RadialSystem:
    """Build the inequality system from a radial slack template
    (all piece offsets zero)."""
    d = tmpl.dimension
    blocks = []
    seen = set()
    rows = 0
    for tup in enumerate_tuples(tmpl):
        chosen = [tmpl.terms[k][2][ik][0] for k, ik in enumerate(tup)]
        diffs = []
        for k, ik in enumerate(tup):
            ak = chosen[k]
            for i, (ai, _) in enumerate(tmpl.terms[k][2]):
                if i == ik:
                    continue
                v = ak - ai
                if np.abs(v).max(initial=0.0) > 1e-12:
                    diffs.append(v)
        # dedupe directions within the tuple's difference set
        uniq = []
        useen = set()
        for v in diffs:
            key = tuple(np.round(v, 12))
            if key not in useen:
                useen.add(key)
                uniq.append(v)
        if cone_interior_empty(uniq):
            continue
        Y = np.zeros((d, tmpl.m))
        rhs = np.zeros(d)
        for k, ik in enumerate(tup):
            w, z, _ = tmpl.terms[k]
            ak = chosen[k]
            Y += np.outer(ak, w)
            rhs -= z * ak
        E = (-np.stack(uniq, axis=1) if uniq else np.zeros((d, 0)))
        key = (tuple(np.round(Y, 10).ravel()), tuple(np.round(rhs, 10)),
               tuple(sorted(tuple(np.round(v, 10)) for v in uniq)))
        if key in seen:
            continue
        seen.add(key)
        rows += d
        if rows > row_cap:
            raise ResourceLimitError(
                "radial system exceeds %d rows" % row_cap)
        blocks.append(RadialBlock(Y=Y, E=E, rhs=rhs, tuple_index=tup))
    return RadialSystem(m=tmpl.m, dimension=d, blocks=blocks)


def is_feasible(system: RadialSystem, y) -> bool:
    """Does some eta >= 0 satisfy every block at this y?

    Blocks have independent eta variables, so each is checked by its own
    small feasibility LP."""
    y = np.asarray(y, dtype=float)
    for b in system.blocks:
        lhs = b.Y @ y
        need = b.rhs - lhs  # require E @ eta >= need
        if b.E.shape[1] == 0:
            if np.any(need > 1e-8):
                return False
            continue
        n = b.E.shape[1]
        rows = [(b.E[i], ">=", need[i]) for i in range(b.E.shape[0])]
        sol = solve_lp(LinearProgram(np.zeros(n), rows, [(0.0, None)] * n))
        if sol.status != "optimal":
            return False
    return True
