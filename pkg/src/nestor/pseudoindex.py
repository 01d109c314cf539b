"""Index-form detection and one-dimensional reduction.

A surplus has index form when s(x, y) = alpha(x) + sigma(I(x), y) for a
scalar index I; equivalently, the level sets of x -> s_y(x, y) do not
move with y.  Such problems are nested for every pair of densities and
collapse to a scalar monotone rearrangement: push mu through I, then
match quantiles with the target (orientation given by the sign of the
mixed derivative of sigma).

The detector is statistical: it manufactures pairs of points on a common
level set of s_y(., y0) (a tangent step followed by a few Newton
projections) and tests whether they stay matched at other target values.
Failing pairs are exactly sampled witnesses of the level-set motion that
breaks universal nestedness.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import InsufficientPairs, NonMonotoneSign
from .model import Model, target_quantile


@dataclass
class IndexForm:
    """Scalar index with the implicit effective surplus.

    sigma(z, y) is evaluated as s(x_rep(z), y) - s(x_rep(z), y_mid) along
    a representative selection x_rep (nearest quadrature point by index
    value), which pins sigma down without recovering alpha.
    """

    index: Callable                  # (N, m) -> (N,)
    modularity_sign: int             # +1 supermodular, -1 submodular
    y_mid: float
    _rep_points: np.ndarray = None   # sorted representatives
    _rep_values: np.ndarray = None

    def sigma(self, model: Model, z, y) -> np.ndarray:
        z = np.atleast_1d(np.asarray(z, dtype=float))
        idx = np.searchsorted(self._rep_values, z)
        idx = np.clip(idx, 0, self._rep_values.size - 1)
        reps = self._rep_points[idx]
        s_here = np.asarray(model.surplus.s(reps, y), dtype=float)
        s_mid = np.asarray(model.surplus.s(reps, self.y_mid), dtype=float)
        return s_here - s_mid


@dataclass
class Rearrangement1D:
    """Monotone scalar solution: CDF of the pushed index, the target CDF,
    and the quantile map F1 between them."""

    index_grid: np.ndarray
    index_cdf: PchipInterpolator
    modularity_sign: int
    model: Model
    index: Callable

    def cdf(self, t):
        t = np.clip(t, self.index_grid[0], self.index_grid[-1])
        return np.clip(self.index_cdf(t), 0.0, 1.0)

    def density(self, t):
        t = np.clip(t, self.index_grid[0], self.index_grid[-1])
        return np.maximum(self.index_cdf.derivative()(t), 0.0)

    def map_1d(self, t):
        """F1 = G^{-1} o CDF (antitone composition for submodular sign)."""
        q = self.cdf(t)
        if self.modularity_sign < 0:
            q = 1.0 - q
        return target_quantile(self.model, q)

    def map_full(self, x):
        """F(x) = F1(I(x))."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return self.map_1d(np.asarray(self.index(x), dtype=float))


# ---------------------------------------------------------------------------
# detection
# ---------------------------------------------------------------------------

def _project_to_level(model: Model, x: np.ndarray, y0: float,
                      target_vals: np.ndarray, iters: int = 6) -> np.ndarray:
    """Newton steps along grad s_y pulling each row of x onto its assigned
    level {s_y(., y0) = target}."""
    x = x.copy()
    for _ in range(iters):
        vals = np.asarray(model.surplus.s_y(x, y0), dtype=float)
        grad = np.asarray(model.surplus.grad_x_s_y(x, y0), dtype=float)
        gn2 = np.sum(grad * grad, axis=1)
        gn2 = np.maximum(gn2, 1e-300)
        x = x - ((vals - target_vals) / gn2)[:, None] * grad
    return x


def detect_index_form(model: Model, y_pairs: Optional[list] = None,
                      pair_probes: int = 400, seed: int = 0,
                      fail_rate_threshold: float = 0.01,
                      max_witnesses: int = 10) -> dict:
    """Decide whether the level sets of x -> s_y(x, y) move with y.

    Pairs matched at y0 (|difference| at roundoff level after projection)
    are re-tested at the other y values; a pair fails when its s_y values
    separate by more than 1e-6 of the sampled s_y spread.  Raises
    InsufficientPairs below 100 usable pairs.
    """
    model.require_nondegenerate()
    if model.domain.dim == 1:
        # level sets are single points; the surplus is trivially of index
        # form with I = s_y(., y_mid)
        return {"is_index": True, "confidence": 1.0, "witnesses": [],
                "n_pairs": 0, "n_tests": 0}
    rng = np.random.default_rng(seed)
    t = model.target
    if y_pairs is None:
        y0 = t.mid
        others = [t.y_lo + q * t.length for q in (0.15, 0.35, 0.65, 0.85)]
        y_pairs = [(y0, y1) for y1 in others]

    base = model.domain.sample_interior(pair_probes, seed=seed, margin=0.02)
    witnesses = []
    n_tests = 0
    n_fail = 0
    n_pairs = 0
    for y0 in sorted({p[0] for p in y_pairs}):
        y1s = [p[1] for p in y_pairs if p[0] == y0]
        vals0 = np.asarray(model.surplus.s_y(base, y0), dtype=float)
        grad0 = np.asarray(model.surplus.grad_x_s_y(base, y0), dtype=float)
        gn = np.linalg.norm(grad0, axis=1)
        # random tangent step, then project back onto the level set
        step = rng.standard_normal(base.shape)
        step -= (np.sum(step * grad0, axis=1) / np.maximum(gn, 1e-300) ** 2)[:, None] * grad0
        norms = np.linalg.norm(step, axis=1)
        ok = norms > 1e-12
        step[ok] /= norms[ok][:, None]
        partner = base + 0.05 * model.domain.scale * step
        partner = _project_to_level(model, partner, y0, vals0)
        inside = model.domain.contains(partner) & ok
        d0 = np.abs(np.asarray(model.surplus.s_y(partner, y0), dtype=float) - vals0)
        spread0 = max(float(np.max(vals0) - np.min(vals0)), 1e-12)
        matched = inside & (d0 <= 1e-9 * spread0)
        if int(np.sum(matched)) == 0:
            continue
        n_pairs += int(np.sum(matched))
        xa = base[matched]
        xb = partner[matched]
        for y1 in y1s:
            va = np.asarray(model.surplus.s_y(xa, y1), dtype=float)
            vb = np.asarray(model.surplus.s_y(xb, y1), dtype=float)
            spread1 = max(float(np.max(va) - np.min(va)), 1e-12)
            d1 = np.abs(va - vb)
            bad = d1 > 1e-6 * spread1
            n_tests += d1.size
            n_fail += int(np.sum(bad))
            for i in np.nonzero(bad)[0][:3]:
                if len(witnesses) < max_witnesses:
                    witnesses.append((xa[i].copy(), xb[i].copy(), float(y1),
                                      float(d1[i])))
    if n_pairs < 100:
        raise InsufficientPairs(
            f"only {n_pairs} matched pairs (need 100); increase pair_probes")
    rate = n_fail / max(n_tests, 1)
    return {"is_index": rate < fail_rate_threshold,
            "confidence": 1.0 - rate, "witnesses": witnesses,
            "n_pairs": n_pairs, "n_tests": n_tests}


# ---------------------------------------------------------------------------
# reduction
# ---------------------------------------------------------------------------

def canonical_index(model: Model) -> Callable:
    """The midpoint slope I(x) = s_y(x, y_mid): for an index-form surplus
    its level sets are the index level sets."""
    y_mid = model.target.mid

    def index(x):
        return np.asarray(model.surplus.s_y(np.atleast_2d(x), y_mid),
                          dtype=float)

    return index


def build_index_form(model: Model, index: Optional[Callable] = None,
                     sign_probes: int = 64, seed: int = 0) -> IndexForm:
    """Wrap an index callable (default: the canonical midpoint slope) with
    its modularity sign; raises NonMonotoneSign if the mixed derivative of
    the effective surplus changes sign across samples."""
    if index is None:
        index = canonical_index(model)
    y_mid = model.target.mid
    pts = model.domain.sample_interior(sign_probes, seed=seed, margin=0.01)
    h = 1e-6 * model.domain.scale
    grad_i = np.empty((pts.shape[0], model.domain.dim))
    for j in range(model.domain.dim):
        xp = pts.copy()
        xm = pts.copy()
        xp[:, j] += h
        xm[:, j] -= h
        grad_i[:, j] = (np.asarray(index(xp), dtype=float)
                        - np.asarray(index(xm), dtype=float)) / (2 * h)
    if np.any(np.linalg.norm(grad_i, axis=1) < 1e-12):
        raise NonMonotoneSign("index gradient vanishes at a probe")
    signs = []
    for q in (0.2, 0.5, 0.8):
        y = model.target.y_lo + q * model.target.length
        g_sy = np.asarray(model.surplus.grad_x_s_y(pts, y), dtype=float)
        dots = np.sum(g_sy * grad_i, axis=1)
        signs.append(np.sign(dots))
    signs = np.concatenate(signs)
    if np.any(signs > 0) and np.any(signs < 0):
        raise NonMonotoneSign(
            "mixed derivative of the effective surplus changes sign")
    sign = 1 if np.all(signs >= 0) else -1

    i_vals = np.asarray(index(model.grid.points), dtype=float)
    order = np.argsort(i_vals, kind="stable")
    step = max(1, order.size // 512)
    reps = order[::step]
    return IndexForm(index=index, modularity_sign=sign, y_mid=y_mid,
                     _rep_points=model.grid.points[reps],
                     _rep_values=i_vals[reps])


def reduce_and_solve_1d(model: Model, index: Optional[IndexForm] = None,
                        resolution: int = 257) -> Rearrangement1D:
    """Push mu through the index, build its CDF on a grid, and compose
    with the target quantile function (orientation per the modularity
    sign).  The result matches the full nested solve whenever the surplus
    really is of index form."""
    form = index if isinstance(index, IndexForm) else \
        build_index_form(model, index)
    i_vals = np.asarray(form.index(model.grid.points), dtype=float)
    lo, hi = float(np.min(i_vals)), float(np.max(i_vals))
    pad = 1e-9 * max(hi - lo, 1.0)
    grid = np.linspace(lo - pad, hi + pad, resolution)
    order = np.argsort(i_vals, kind="stable")
    sorted_vals = i_vals[order]
    cum = np.cumsum(model.point_mass[order])
    total = cum[-1]
    idx = np.searchsorted(sorted_vals, grid, side="right")
    cdf_vals = np.where(idx > 0, cum[np.maximum(idx - 1, 0)], 0.0) / total
    cdf_vals = np.maximum.accumulate(cdf_vals)
    # strictly increasing knots for the monotone interpolant
    keep = np.concatenate([[True], np.diff(cdf_vals) > 1e-15])
    keep[0] = keep[-1] = True
    interp = PchipInterpolator(grid[keep], cdf_vals[keep])
    return Rearrangement1D(index_grid=grid, index_cdf=interp,
                           modularity_sign=form.modularity_sign,
                           model=model, index=form.index)


def verify_1d_ode(rearr: Rearrangement1D, probes: Optional[np.ndarray] = None,
                  n_probes: int = 101) -> float:
    """Max residual of the scalar mass-balance equation
    f1(t) = F1'(t) g(F1(t)) over interior index probes, with F1' by
    central differences."""
    model = rearr.model
    if probes is None:
        qs = np.linspace(0.05, 0.95, n_probes)
        # invert the index CDF by bisection on the grid
        grid = rearr.index_grid
        cdf_on_grid = rearr.cdf(grid)
        probes = np.interp(qs, cdf_on_grid, grid)
    probes = np.asarray(probes, dtype=float)
    h = 1e-4 * (rearr.index_grid[-1] - rearr.index_grid[0])
    f1 = rearr.density(probes)
    fp = (np.asarray(rearr.map_1d(probes + h), dtype=float)
          - np.asarray(rearr.map_1d(probes - h), dtype=float)) / (2 * h)
    g_here = model.g_at(np.asarray(rearr.map_1d(probes), dtype=float))
    sign = rearr.modularity_sign
    resid = np.abs(f1 - sign * fp * g_here)
    return float(np.max(resid))
