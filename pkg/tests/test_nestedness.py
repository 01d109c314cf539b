import numpy as np
import pytest

from nestor.errors import NoBoundaryOracle
from nestor.geometry import Quadrature, TargetInterval, box_domain
from nestor.model import Model
from nestor.nestedness import (check_sublevel_monotonicity, dynamic_criterion,
                               kprime_bound_gap, nestedness_report,
                               speed_limit, transversality_diagnostic,
                               unique_splitting_check)
from nestor.solver import solve_split_curve
from nestor.surplus import bilinear_surplus


def test_monotonicity_criterion(par2, ball):
    ok = check_sublevel_monotonicity(par2.model, par2.curve)
    assert ok.status == "pass" and not ok.witnesses
    bad = check_sublevel_monotonicity(ball.model, ball.curve)
    assert bad.status == "fail"
    y0, y1, x_w, margin = bad.witnesses[0]
    assert y0 < y1 and margin > 0.01


def test_monotonicity_vacuous_for_equal_levels(par2):
    res = check_sublevel_monotonicity(par2.model, par2.curve,
                                      y_pairs=[(0.5, 0.5)])
    assert res.status == "pass" and res.details["n_pairs"] == 1


def test_dynamic_criterion(par2, ball, pie_wide, uni1d):
    good = dynamic_criterion(par2.model, par2.curve)
    assert good.status == "pass"
    assert good.details["min"] > 0.6  # k' >= 2/3, s_yy = 0
    bad = dynamic_criterion(ball.model, ball.curve)
    assert bad.status == "fail"
    assert bad.details["min"] < -0.5
    wide = dynamic_criterion(pie_wide.model, pie_wide.curve)
    assert wide.status == "fail"
    flat = dynamic_criterion(uni1d.model, uni1d.curve)
    assert flat.status == "pass"


def test_unique_splitting(par2, ball, pie_wide):
    ok = unique_splitting_check(par2.model, n_probes=100, seed=0)
    assert ok.status == "pass" and ok.details["n_single"] == 100
    bad = unique_splitting_check(ball.model, n_probes=100, seed=0)
    assert bad.status == "fail" and bad.details["n_multi"] >= 5
    x_w, roots = bad.witnesses[0]
    assert len(roots) > 1
    # probes near the wide-slice corner split several ways
    rng = np.random.default_rng(4)
    r = 0.9 + 0.08 * rng.random(40)
    phi = pie_wide.scenario.params["theta0"] * (0.8 + 0.19 * rng.random(40))
    probes = np.stack([r * np.cos(phi), r * np.sin(phi)], axis=1)
    corner = unique_splitting_check(pie_wide.model, x_probes=probes)
    assert corner.status == "fail"


def test_probe_on_level_set_roots_there(par2):
    # a probe on X(y, k(y)) must split the population at that very y
    y_star = 0.42
    k_star = par2.curve.k_at(y_star)
    probe = np.array([[k_star, 0.3]])  # s_y = x1 on the bowl
    from nestor.solver import optimal_map
    root = optimal_map(par2.model, par2.curve, probe, method="by-splitting")
    assert abs(root[0] - y_star) <= 1e-3


def test_transversality(par2):
    val = transversality_diagnostic(par2.model, par2.curve,
                                    y_nodes=[0.5 ** 1.5])
    assert abs(val - 0.5) < 0.02  # parabola normal vs level normal at k=0.5
    square = Model(box_domain([0, 0], [1, 1]), TargetInterval(0, 1),
                   bilinear_surplus([1, 0]),
                   quadrature=Quadrature("tensor", 128))
    sq_curve = solve_split_curve(square, n_nodes=33)
    assert transversality_diagnostic(square, sq_curve,
                                     y_nodes=[0.5]) > 1.0 - 1e-9
    # near the face x1 = 0 the level set runs parallel to the boundary
    lo = transversality_diagnostic(square, sq_curve,
                                   y_nodes=[float(sq_curve.y_grid[0])])
    assert lo < 0.05


def test_transversality_needs_oracle(par2):
    from dataclasses import replace
    dom = par2.model.domain
    stripped = Model(replace(dom, boundary_normal=None),
                     par2.model.target, par2.model.surplus,
                     quadrature=Quadrature("tensor", 64))
    curve = solve_split_curve(stripped, n_nodes=17)
    with pytest.raises(NoBoundaryOracle):
        transversality_diagnostic(stripped, curve)


def test_speed_limit(par2, uni1d, pie_wide):
    ell = speed_limit(par2.model, par2.curve, region_y=(0.1, 1.0))
    assert abs(ell - 2.0 / 3.0) <= 2e-2
    assert abs(speed_limit(uni1d.model, uni1d.curve) - 1.0) < 1e-3
    assert speed_limit(pie_wide.model, pie_wide.curve) < 0.0


def test_lipschitz_bound_realized(par2):
    ell = speed_limit(par2.model, par2.curve)
    assert ell > 0
    sup_grad = 1.0  # |grad_x s_y| = 1 for the bilinear slope
    bound = sup_grad / ell * 1.1
    rng = np.random.default_rng(23)
    base = par2.model.domain.sample_interior(1000, seed=23, margin=0.03)
    step = 1e-3 * rng.standard_normal(base.shape)
    other = base + step
    keep = par2.model.domain.contains(other)
    from nestor.solver import optimal_map
    fa = optimal_map(par2.model, par2.curve, base[keep])
    fb = optimal_map(par2.model, par2.curve, other[keep])
    quotient = np.abs(fa - fb) / np.linalg.norm(step[keep], axis=1)
    assert float(np.max(quotient)) <= bound


def test_kprime_bound(par2):
    lhs, rhs = kprime_bound_gap(par2.model, par2.curve)
    assert np.all(lhs <= rhs * 1.1)


def test_verdicts(par2, ball, pie_nested, pie_wide, uni1d):
    assert nestedness_report(par2.model, par2.curve).verdict == "nested"
    assert nestedness_report(uni1d.model, uni1d.curve).verdict == "nested"
    rep = nestedness_report(ball.model, ball.curve)
    assert rep.verdict == "non-nested"
    assert rep.unique_splitting.witnesses  # definite witnesses carried
    assert nestedness_report(pie_nested.model,
                             pie_nested.curve).verdict == "nested"
    assert nestedness_report(pie_wide.model,
                             pie_wide.curve).verdict == "non-nested"


def test_report_serializes(par2):
    import json
    rep = nestedness_report(par2.model, par2.curve, n_probes=20)
    text = json.dumps(rep.to_dict())
    assert "verdict" in text
