"""Exact finite Kantorovich oracle.

Atoms sampled from a model are matched by a transportation (network)
simplex that MAXIMIZES the sampled surplus.  The optimal basis is a
spanning tree of the bipartite supply/demand graph; its duals (u_i, v_j)
satisfy complementary slackness exactly and strong duality to roundoff,
which is what makes the oracle an independent check of the level-set
solver: the two approaches share no code path beyond the surplus
evaluator.

No external LP dependency: dense reduced costs with Dantzig pricing and
a Bland fallback during degenerate stalls (which restores the finite-
termination guarantee).  Intended for desk-scale instances (thousands of
source atoms, hundreds of targets).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .model import Model, target_quantile


@dataclass(frozen=True)
class DiscreteInstance:
    source_points: np.ndarray   # (ns, m)
    source_weights: np.ndarray  # (ns,), positive, sums to 1
    target_points: np.ndarray   # (nt,)
    target_weights: np.ndarray  # (nt,), positive, sums to 1
    surplus_matrix: np.ndarray  # (ns, nt)

    def __post_init__(self):
        a = np.asarray(self.source_weights, dtype=float)
        b = np.asarray(self.target_weights, dtype=float)
        if np.any(a <= 0) or np.any(b <= 0):
            raise ValueError("atom weights must be strictly positive")
        if abs(a.sum() - 1.0) > 1e-12 or abs(b.sum() - 1.0) > 1e-12:
            raise ValueError("atom weights must sum to one (1e-12)")

    @property
    def shape(self):
        return self.surplus_matrix.shape

    def to_dict(self) -> dict:
        return {"source_points": self.source_points.tolist(),
                "source_weights": self.source_weights.tolist(),
                "target_points": self.target_points.tolist(),
                "target_weights": self.target_weights.tolist(),
                "surplus_matrix": self.surplus_matrix.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "DiscreteInstance":
        return cls(*(np.asarray(d[k], dtype=float) for k in
                     ("source_points", "source_weights", "target_points",
                      "target_weights", "surplus_matrix")))


@dataclass
class DiscretePlan:
    """Optimal basic plan: sparse coupling entries plus exact duals."""

    rows: np.ndarray       # basis arc source indices
    cols: np.ndarray       # basis arc target indices
    values: np.ndarray     # coupling mass on each basis arc (>= 0)
    u: np.ndarray          # source duals
    v: np.ndarray          # target duals
    objective: float
    n_pivots: int = 0

    def to_dense(self, shape) -> np.ndarray:
        out = np.zeros(shape)
        out[self.rows, self.cols] = self.values
        return out

    @property
    def support(self):
        keep = self.values > 0
        return self.rows[keep], self.cols[keep], self.values[keep]

    def to_dict(self) -> dict:
        return {"rows": self.rows.tolist(), "cols": self.cols.tolist(),
                "values": self.values.tolist(), "u": self.u.tolist(),
                "v": self.v.tolist(), "objective": self.objective,
                "n_pivots": self.n_pivots}


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def sample_instance(model: Model, n_source: int, n_target: int,
                    seed: int = 0) -> DiscreteInstance:
    """Stratified source atoms (one draw per equal-mass stratum of the
    f-weighted quadrature points) and g-quantile-midpoint target atoms;
    deterministic per seed."""
    rng = np.random.default_rng(seed)
    w = model.point_mass / np.sum(model.point_mass)
    cum = np.cumsum(w)
    cum[-1] = 1.0
    u = (np.arange(n_source) + rng.random(n_source)) / n_source
    idx = np.searchsorted(cum, u, side="left")
    xs = model.grid.points[idx]
    a = np.full(n_source, 1.0 / n_source)

    q = (np.arange(n_target) + 0.5) / n_target
    ys = np.asarray(target_quantile(model, q), dtype=float)
    b = np.full(n_target, 1.0 / n_target)

    s_mat = np.stack(
        [np.asarray(model.surplus.s(xs, float(y)), dtype=float) for y in ys],
        axis=1)
    return DiscreteInstance(source_points=xs, source_weights=a,
                            target_points=ys, target_weights=b,
                            surplus_matrix=s_mat)


# ---------------------------------------------------------------------------
# transportation simplex
# ---------------------------------------------------------------------------

def _northwest_corner(a: np.ndarray, b: np.ndarray):
    """Initial basic feasible solution; always ns + nt - 1 arcs (degenerate
    zero arcs included when a supply and a demand exhaust together)."""
    ns, nt = a.size, b.size
    rows, cols, vals = [], [], []
    a_rem = a.copy()
    b_rem = b.copy()
    i = j = 0
    while True:
        move = min(a_rem[i], b_rem[j])
        rows.append(i)
        cols.append(j)
        vals.append(move)
        a_rem[i] -= move
        b_rem[j] -= move
        if i == ns - 1 and j == nt - 1:
            break
        # advance exactly one index; ties advance the row and leave a
        # degenerate zero arc in the next cell
        if a_rem[i] <= b_rem[j] and i < ns - 1:
            i += 1
        else:
            j += 1
    return (np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64),
            np.asarray(vals, dtype=float))


class _BasisTree:
    """Spanning tree of basis arcs on nodes [0..ns) + [ns..ns+nt)."""

    def __init__(self, ns, nt, rows, cols):
        self.ns = ns
        self.nt = nt
        self.arcs = list(zip(rows.tolist(), cols.tolist()))
        self.pos = {arc: p for p, arc in enumerate(self.arcs)}

    def _adjacency(self):
        adj = [[] for _ in range(self.ns + self.nt)]
        for p, (i, j) in enumerate(self.arcs):
            adj[i].append((self.ns + j, p))
            adj[self.ns + j].append((i, p))
        return adj

    def duals(self, s_matrix):
        """u_i + v_j = S_ij on every basis arc, anchored at u_0 = 0."""
        u = np.full(self.ns, np.nan)
        v = np.full(self.nt, np.nan)
        adj = self._adjacency()
        u[0] = 0.0
        seen = np.zeros(self.ns + self.nt, dtype=bool)
        seen[0] = True
        queue = deque([0])
        while queue:
            node = queue.popleft()
            for other, p in adj[node]:
                if seen[other]:
                    continue
                i, j = self.arcs[p]
                if other >= self.ns:
                    v[j] = s_matrix[i, j] - u[i]
                else:
                    u[i] = s_matrix[i, j] - v[j]
                seen[other] = True
                queue.append(other)
        return u, v

    def cycle(self, i_in, j_in):
        """Arcs on the tree path from source i_in to target j_in, as a list
        of (arc position, orientation); orientation +1 means the arc loses
        mass when the entering arc gains."""
        adj = self._adjacency()
        start = i_in
        goal = self.ns + j_in
        prev = {start: None}
        queue = deque([start])
        while queue:
            node = queue.popleft()
            if node == goal:
                break
            for other, p in adj[node]:
                if other not in prev:
                    prev[other] = (node, p)
                    queue.append(other)
        path = []
        node = goal
        while prev[node] is not None:
            parent, p = prev[node]
            path.append(p)
            node = parent
        path.reverse()
        # walking i_in -> j_in: arcs leaving a source node carry -theta,
        # arcs leaving a target node carry +theta
        out = []
        node = start
        for p in path:
            i, j = self.arcs[p]
            if node < self.ns:     # source -> target: this arc loses mass
                out.append((p, -1))
                node = self.ns + j
            else:
                out.append((p, +1))
                node = i
        return out

    def replace(self, p_out, arc_in):
        old = self.arcs[p_out]
        del self.pos[old]
        self.arcs[p_out] = arc_in
        self.pos[arc_in] = p_out


def solve_transport(inst: DiscreteInstance, tol: float = None,
                    max_pivots: int = None) -> DiscretePlan:
    """Maximize sum gamma_ij S_ij over the transportation polytope.

    Dantzig pricing (largest reduced benefit) with a switch to Bland's
    smallest-index rule during runs of degenerate pivots, which prevents
    cycling; terminates at reduced benefits <= tol everywhere.
    """
    s_mat = np.asarray(inst.surplus_matrix, dtype=float)
    ns, nt = s_mat.shape
    a = np.asarray(inst.source_weights, dtype=float)
    b = np.asarray(inst.target_weights, dtype=float)
    if tol is None:
        tol = 1e-11 * max(1.0, float(np.max(np.abs(s_mat))))
    if max_pivots is None:
        max_pivots = 200 * (ns + nt) + 10_000

    rows, cols, vals = _northwest_corner(a, b)
    tree = _BasisTree(ns, nt, rows, cols)
    gamma = {arc: vals[p] for p, arc in enumerate(tree.arcs)}

    stall = 0
    n_piv = 0
    while True:
        u, v = tree.duals(s_mat)
        reduced = s_mat - u[:, None] - v[None, :]
        if stall < 40:
            flat = int(np.argmax(reduced))
            i_in, j_in = divmod(flat, nt)
            if reduced[i_in, j_in] <= tol:
                break
        else:  # Bland: first improving arc in lexicographic order
            improving = np.argwhere(reduced > tol)
            if improving.size == 0:
                break
            i_in, j_in = map(int, improving[0])

        cycle = tree.cycle(i_in, j_in)
        theta = np.inf
        p_out = None
        for p, orient in cycle:
            if orient < 0:
                val = gamma[tree.arcs[p]]
                if val < theta - 1e-15 or (p_out is not None
                                           and abs(val - theta) <= 1e-15
                                           and tree.arcs[p] < tree.arcs[p_out]):
                    theta = val
                    p_out = p
        theta = max(theta, 0.0)
        for p, orient in cycle:
            arc = tree.arcs[p]
            gamma[arc] = max(gamma[arc] + orient * theta, 0.0)
        arc_out = tree.arcs[p_out]
        gamma.pop(arc_out)
        tree.replace(p_out, (i_in, j_in))
        gamma[(i_in, j_in)] = theta
        stall = stall + 1 if theta <= 1e-15 else 0
        n_piv += 1
        if n_piv > max_pivots:
            raise RuntimeError("transportation simplex exceeded pivot budget")

    u, v = tree.duals(s_mat)
    rows = np.array([i for i, _ in tree.arcs], dtype=np.int64)
    cols = np.array([j for _, j in tree.arcs], dtype=np.int64)
    values = np.array([max(gamma[arc], 0.0) for arc in tree.arcs], dtype=float)
    objective = float(np.sum(values * s_mat[rows, cols]))
    return DiscretePlan(rows=rows, cols=cols, values=values, u=u, v=v,
                        objective=objective, n_pivots=n_piv)


# ---------------------------------------------------------------------------
# cross-checks
# ---------------------------------------------------------------------------

def _align_shift(du: np.ndarray, dv: np.ndarray) -> float:
    """Additive shift c minimizing max(|du - c|_inf, |dv + c|_inf); duals
    are unique only up to (u + c, v - c)."""
    from scipy.optimize import minimize_scalar
    lim = float(np.max(np.abs(np.concatenate([du, dv])))) + 1.0

    def gap(c):
        return max(float(np.max(np.abs(du - c))), float(np.max(np.abs(dv + c))))

    res = minimize_scalar(gap, bounds=(-lim, lim), method="bounded",
                          options={"xatol": 1e-12})
    return float(res.x)


def compare_with_map(model: Model, curve, inst: DiscreteInstance,
                     plan: DiscretePlan) -> dict:
    """Quantify agreement between the oracle plan and the level-set solve.

    surplus_gap: relative difference between the LP optimum and the
    f-weighted surplus of the graph plan (id, F).
    dual_gap: max deviation between oracle duals and (u, v) on the atoms
    after the optimal additive shift.
    """
    from .solver import optimal_map, source_payoff
    f_vals = optimal_map(model, curve, inst.source_points)
    f_vals = np.atleast_1d(f_vals)
    s_graph = np.asarray(model.surplus.s(inst.source_points, f_vals), dtype=float)
    graph_value = float(np.sum(inst.source_weights * s_graph))
    surplus_gap = (plan.objective - graph_value) / max(abs(plan.objective), 1e-300)

    u_num, _ = source_payoff(model, curve, inst.source_points)
    v_num = curve.v_at(inst.target_points)
    du = plan.u - u_num
    dv = plan.v - v_num
    c = _align_shift(du, dv)
    dual_gap = max(float(np.max(np.abs(du - c))), float(np.max(np.abs(dv + c))))
    return {"surplus_gap": float(surplus_gap), "dual_gap": dual_gap,
            "objective": plan.objective, "graph_value": graph_value}


def cyclical_monotonicity_audit(plan: DiscretePlan, s_matrix: np.ndarray,
                                cycle_length: int = 3,
                                n_samples: int = 4000,
                                seed: int = 0) -> float:
    """Worst surplus improvement over sampled cyclic reassignments of
    support pairs/triples; an optimal plan admits none (<= 0 up to
    roundoff)."""
    rows, cols, _ = plan.support
    n = rows.size
    rng = np.random.default_rng(seed)
    worst = -np.inf

    if cycle_length >= 2 and n >= 2:
        if n * (n - 1) // 2 <= n_samples:
            ii, kk = np.triu_indices(n, k=1)
        else:
            ii = rng.integers(0, n, n_samples)
            kk = rng.integers(0, n, n_samples)
            keep = ii != kk
            ii, kk = ii[keep], kk[keep]
        gain = (s_matrix[rows[ii], cols[kk]] + s_matrix[rows[kk], cols[ii]]
                - s_matrix[rows[ii], cols[ii]] - s_matrix[rows[kk], cols[kk]])
        if gain.size:
            worst = max(worst, float(np.max(gain)))

    if cycle_length >= 3 and n >= 3:
        ii = rng.integers(0, n, (n_samples, 3))
        ok = (ii[:, 0] != ii[:, 1]) & (ii[:, 1] != ii[:, 2]) & (ii[:, 0] != ii[:, 2])
        ii = ii[ok]
        base = (s_matrix[rows[ii[:, 0]], cols[ii[:, 0]]]
                + s_matrix[rows[ii[:, 1]], cols[ii[:, 1]]]
                + s_matrix[rows[ii[:, 2]], cols[ii[:, 2]]])
        rot1 = (s_matrix[rows[ii[:, 0]], cols[ii[:, 1]]]
                + s_matrix[rows[ii[:, 1]], cols[ii[:, 2]]]
                + s_matrix[rows[ii[:, 2]], cols[ii[:, 0]]])
        rot2 = (s_matrix[rows[ii[:, 0]], cols[ii[:, 2]]]
                + s_matrix[rows[ii[:, 2]], cols[ii[:, 1]]]
                + s_matrix[rows[ii[:, 1]], cols[ii[:, 0]]])
        if ii.size:
            worst = max(worst, float(np.max(rot1 - base)),
                        float(np.max(rot2 - base)))
    return worst


def plan_marginal_errors(inst: DiscreteInstance, plan: DiscretePlan):
    """(max source marginal error, max target marginal error)."""
    ns, nt = inst.shape
    row_sum = np.zeros(ns)
    col_sum = np.zeros(nt)
    np.add.at(row_sum, plan.rows, plan.values)
    np.add.at(col_sum, plan.cols, plan.values)
    return (float(np.max(np.abs(row_sum - inst.source_weights))),
            float(np.max(np.abs(col_sum - inst.target_weights))))
