"""Sphere-summed Green series H_r(n) and growth-rate estimation."""

import math

import numpy as np
import pytest

from greengrowth.bitree import PhaseParams, classify
from greengrowth.groups import (
    DiestelLeader, FreeAbelian, FreeProduct, Heisenberg3, RegularTree,
    TreeProduct, group_for,
)
from greengrowth.kernels import green_truncated, standard_measure
from greengrowth.growth import (
    convergence_diagnostic, dr_distance, h_series, omega_estimate,
    parabolic_gap_report, theta_partial,
)


def test_tree_series_is_constant_four():
    series = h_series(RegularTree(4), r=1.0, n_max=10)
    for n in range(1, 11):
        e = series.values[n]
        assert e.rigorous
        assert abs(e.value - 4.0) <= e.tail + 1e-9


def test_tree_omega_estimate_is_flat():
    series = h_series(RegularTree(4), r=1.0, n_max=10)
    est = omega_estimate(series)
    assert abs(est.slope) < 1e-8


def test_zd_series_matches_direct_sphere_sum():
    spec = FreeAbelian(3)
    m = standard_measure(spec)
    g = group_for(spec)
    series = h_series(spec, r=0.9, n_max=4)
    for n in range(5):
        xs = g.sphere(n)
        direct = sum(v.value for v in
                     green_truncated(m, xs, 0.9, max_terms=40).values())
        assert abs(series.value(n) - direct) < 1e-5


def test_zd_linear_band_at_one():
    series = h_series(FreeAbelian(3), r=1.0, n_max=30)
    ratios = [series.value(n) / n for n in range(10, 31)]
    assert max(ratios) / min(ratios) <= 3.0
    # frozen: the band is in fact already tight on this window
    assert 5.52 < min(ratios) and max(ratios) < 5.53


def test_zd_slope_near_zero_at_one():
    series = h_series(FreeAbelian(3), r=1.0, n_max=30)
    est = omega_estimate(series, window=(20, 30))
    assert abs(est.slope - 0.04039) < 1e-3  # frozen


def test_zd_cubic_bound():
    series = h_series(FreeAbelian(3), r=1.0, n_max=30)
    c_hat = max(series.value(n) / n ** 3 for n in range(1, 11))
    for n in range(1, 31):
        assert series.value(n) <= c_hat * n ** 3 + 1e-9


def test_dl_series_frozen_values():
    expected = [1.3333, 2.0000, 2.4087, 2.9042, 3.3204, 3.7767, 4.1954,
                4.6369, 5.0571, 5.4917, 5.9127, 6.3435, 6.7651, 7.1936,
                7.6152]
    series = h_series(DiestelLeader(3), r=1.0, n_max=14)
    for n, want in enumerate(expected):
        assert abs(series.value(n) - want) < 5e-4


def test_dl_series_slope_frozen():
    series = h_series(DiestelLeader(3), r=1.0, n_max=14)
    est = omega_estimate(series, window=(8, 14))
    assert abs(est.slope - 0.06795) < 1e-3


def test_heisenberg_generic_engine_frozen():
    expected = [1.37228, 0.46738, 0.11942, 0.03091, 0.00794, 0.00165,
                0.00035]
    series = h_series(Heisenberg3(), r=0.5, n_max=6)
    for n, want in enumerate(expected):
        assert abs(series.value(n) - want) < 2e-5
        assert series.values[n].rigorous


def test_treeprod_slope_matches_phase_solver():
    params = PhaseParams(4, 4, 0.5, 0.5)
    series = h_series(TreeProduct(4, 4), r=1.05, n_max=40)
    est = omega_estimate(series, window=(20, 40))
    omega = classify(params, 1.05).omega
    assert abs(est.slope - omega) < 1e-4


def test_theta_partial_tree_geometric():
    # Theta(r, s) = sum H_r(n) e^{-sn}; on the tree H is geometric, so the
    # partial sums track the closed geometric series
    spec = RegularTree(4)
    total, terms = theta_partial(spec, None, 0.9, s=0.5, n_max=40)
    from greengrowth.trees import tree_closed_form, tree_omega
    omega = tree_omega(4, 0.9)
    cf = tree_closed_form(4, 0.9)
    q = math.exp(omega - 0.5)
    h1 = 4.0 * cf.G * cf.F
    closed = cf.G + h1 * math.exp(-0.5) / (1.0 - q)
    assert abs(total - closed) < 1e-6
    assert len(terms) == 41


def test_dr_distance_tree():
    spec = RegularTree(4)
    g = group_for(spec)
    x = g.sphere(5)[0]
    from greengrowth.trees import tree_omega
    d = dr_distance(spec, None, 0.9, x, tree_omega(4, 0.9))
    # green-metric distance of a distance-5 point: 5 log(1/F) - log G + ...
    from greengrowth.trees import tree_closed_form
    cf = tree_closed_form(4, 0.9)
    want = tree_omega(4, 0.9) * 5 - math.log(cf.G * cf.F ** 5 / cf.G)
    assert d.lower - 1e-7 <= want <= d.upper + 1e-7
    assert abs(d.value - want) < 1e-6


def test_convergence_diagnostic_labels():
    tree = h_series(RegularTree(4), r=1.0, n_max=12)
    expo, label = convergence_diagnostic(tree, 0.0, window=(6, 12))
    assert label == "divergent-type"        # H constant: exponent ~ 0
    zd = h_series(FreeAbelian(3), r=0.5, n_max=12)
    expo, label = convergence_diagnostic(zd, 0.0, window=(6, 12))
    assert expo < -1.0
    assert label == "convergent-type"       # geometric decay below radius


def test_omega_estimate_needs_a_window():
    series = h_series(RegularTree(4), r=1.0, n_max=4)
    with pytest.raises(ValueError):
        omega_estimate(series)


def test_parabolic_gap_report_tree_factor():
    spec = FreeProduct(RegularTree(4), FreeAbelian(3))
    report = parabolic_gap_report(spec, None, 0.9, side=0, n_max=5,
                                  max_terms=24, support_cap=20_000,
                                  window=(0, 5))
    assert report.gap > 0          # free products grow faster than factors
    assert report.multiplicativity < 10.0
    for n in range(6):
        assert (report.series_factor.value(n)
                <= report.series_full.value(n) + 1e-12)
