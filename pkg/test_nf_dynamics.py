#!/usr/bin/env python3
"""
Test script for the truncated normal form: equilibria, unfolding class,
bifurcation lines, region census and trajectories
"""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import optimize

from errors import DegenerateCubic, NotApplicable
from linear_analysis import TTPoint
from nf_dynamics import (ArclengthContinuation, BifurcationCurve, TruncatedNF, census, census_at,
                         classify_unfolding, fingerprint, nf_bifurcation_lines, nf_equilibria,
                         nf_trajectory, region_classify, steady_state_shape)
from normal_form import NFCoefficients, ResonanceCase
from scenarios import label_set1

# printed coefficients of the (2,3) and (1,2) normal forms
SET1_NF = NFCoefficients.from_display(ResonanceCase.GENERIC, {
    'g1010_11': -4.0702, 'g1001_11': -0.20782, 'g0110_12': -9.0336, 'g0101_12': -0.099536,
    'g3000_11': -1.6069, 'g1200_11': -5.9052, 'g2100_12': -4.1872, 'g0300_12': -3.2439,
}, TTPoint(2, 3, 0.0056, 0.2364))

SET2_NF = NFCoefficients.from_display(ResonanceCase.ONE_TWO, {
    'g1010_11': -1.0105, 'g1001_11': -0.1574, 'g0110_12': -4.0028, 'g0101_12': -0.04291,
    'g1100_11': -0.3461, 'g2000_12': -0.2750,
    'g3000_11': -2.8448, 'g1200_11': -2.4251, 'g2100_12': 1.2199, 'g0300_12': -2.5756,
}, TTPoint(1, 2, 0.01095, 0.2679))

ONE_THREE_NF = NFCoefficients.from_display(ResonanceCase.ONE_THREE, {
    'g1010_11': -1.2, 'g1001_11': -0.15, 'g0110_12': -3.5, 'g0101_12': -0.05,
    'g3000_11': -2.0, 'g1200_11': -1.5, 'g2100_12': -1.0, 'g0300_12': -2.5,
    'g2100_11': 0.4, 'g3000_12': 0.3,
}, TTPoint(1, 3, 0.007, 0.08))

D4_EPS = (0.0051 - 0.0056, 0.2064 - 0.2364)

epsilons = st.tuples(st.floats(min_value=-2e-3, max_value=2e-3), st.floats(min_value=-5e-2, max_value=5e-2))


def _slope(lines, name):
    return next(line for line in lines if line.name == name)


def test_unfolding_class_of_set1():
    unfolding = classify_unfolding(SET1_NF)
    assert unfolding.case_label == 'Ib'
    assert unfolding.b0 == pytest.approx(1.820, abs=2e-3)
    assert unfolding.c0 == pytest.approx(2.606, abs=2e-3)
    assert unfolding.d0 == 1
    assert unfolding.sign_dmb0c0 == -1
    assert unfolding.time_reversed


def test_unfolding_class_synthetic():
    positive = NFCoefficients.from_display(ResonanceCase.GENERIC, {
        'g1010_11': 1.0, 'g1001_11': 0.0, 'g0110_12': 0.0, 'g0101_12': 1.0,
        'g3000_11': 1.0, 'g1200_11': 0.5, 'g2100_12': 0.5, 'g0300_12': 1.0,
    })
    unfolding = classify_unfolding(positive)
    assert unfolding.case_label == 'Ia'
    assert not unfolding.time_reversed


def test_unfolding_rejected_outside_generic_case():
    with pytest.raises(NotApplicable):
        classify_unfolding(SET2_NF)
    flat = SET1_NF.display()
    flat['g3000_11'] = 0.0
    with pytest.raises(DegenerateCubic):
        classify_unfolding(NFCoefficients.from_display(ResonanceCase.GENERIC, flat))


def test_generic_lines():
    lines = nf_bifurcation_lines(SET1_NF)
    assert [line.name for line in lines] == ['L2', 'L3', 'T1', 'T2']
    assert _slope(lines, 'L2').slope == pytest.approx(-19.585, rel=1e-3)
    assert _slope(lines, 'L3').slope == pytest.approx(-90.757, rel=1e-3)
    assert _slope(lines, 'T1').slope == pytest.approx(464.75, rel=1e-2)
    assert _slope(lines, 'T2').slope == pytest.approx(-3.557, rel=1e-2)
    # both transverse lines live on the d1 <= d* side
    assert _slope(lines, 'T1').half == -1
    assert _slope(lines, 'T2').half == -1
    assert _slope(lines, 'L2').half == 0


def test_one_two_lines():
    lines = nf_bifurcation_lines(SET2_NF)
    assert [line.name for line in lines[:2]] == ['L1', 'L2']
    assert _slope(lines, 'L2').slope == pytest.approx(-93.29, rel=1e-2)

    base = TruncatedNF(SET2_NF)
    for curve in lines[2:]:
        assert isinstance(curve, BifurcationCurve)
        if not curve.name.startswith('T1'):
            continue
        sign = 1 if curve.name == 'T1+' else -1
        for eps in curve.points:
            nf = base.with_epsilon(eps)
            z2 = sign * np.sqrt(-nf.beta / nf.c22)
            assert abs(nf.alpha + nf.q1 * z2 + nf.c12 * z2 * z2) < 1e-8


def test_arclength_continuation_follows_parabola():
    window = (2e-3, 5e-2)
    continuation = ArclengthContinuation(lambda e1, e2: e2 / window[1] - (e1 / window[0]) ** 2 + 0.1,
                                         window, step=1e-3)
    curves = continuation.trace()
    assert curves
    for curve in curves:
        y = curve / np.array(window)
        assert np.max(np.abs(y[:, 1] - y[:, 0] ** 2 + 0.1)) < 1e-9


def test_mode_amplitudes():
    eps1 = -1e-3
    a1 = [eq for eq in nf_equilibria(TruncatedNF(SET1_NF, (eps1, 0.0))) if eq.family == 'A1']
    assert len(a1) == 2
    assert a1[0].z[0] ** 2 / eps1 == pytest.approx(-2.5330, rel=1e-3)

    a2 = [eq for eq in nf_equilibria(TruncatedNF(SET1_NF, (eps1, 0.0))) if eq.family == 'A2']
    assert a2[0].z[1] ** 2 / eps1 == pytest.approx(-2.7848, rel=1e-3)


def test_origin_only_at_tt_point():
    equilibria = nf_equilibria(TruncatedNF(SET1_NF))
    assert [eq.label for eq in equilibria] == ['A0']
    assert equilibria[0].stability == 'degenerate'


def _has_point(points, z):
    return any(np.max(np.abs(np.asarray(z) - p)) < 1e-10 for p in points)


@settings(max_examples=40, deadline=None)
@given(epsilons)
def test_generic_equilibria_symmetric(eps):
    nf = TruncatedNF(SET1_NF, eps)
    points = [np.array(eq.z) for eq in nf_equilibria(nf)]
    for z1, z2 in points:
        assert np.max(np.abs(nf.rhs((z1, z2)))) < 1e-12
        assert _has_point(points, (-z1, z2))
        assert _has_point(points, (z1, -z2))


@settings(max_examples=40, deadline=None)
@given(epsilons)
def test_one_two_equilibria_symmetric_in_z1(eps):
    nf = TruncatedNF(SET2_NF, eps)
    equilibria = nf_equilibria(nf)
    points = [np.array(eq.z) for eq in equilibria]
    for eq in equilibria:
        assert np.max(np.abs(nf.rhs(eq.z))) < 1e-12
        assert _has_point(points, (-eq.z[0], eq.z[1]))
        assert eq.family in ('A0', 'A2', 'Mixed')


def _brute_force_roots(nf, radius, seeds=15):
    grid = np.linspace(-radius, radius, seeds)
    found = []
    for seed in itertools.product(grid, grid):
        z = optimize.fsolve(nf.rhs, seed, fprime=nf.jacobian, xtol=1e-14)
        if np.max(np.abs(nf.rhs(z))) > 1e-12 or np.max(np.abs(z)) >= radius:
            continue
        if all(np.max(np.abs(z - other)) > 1e-6 for other in found):
            found.append(z)
    return found


@pytest.mark.parametrize('coefficients', [SET1_NF, SET2_NF, ONE_THREE_NF],
                         ids=['generic', 'one-two', 'one-three'])
def test_equilibria_against_brute_force(coefficients):
    rng = np.random.default_rng(7)
    radius = 0.5
    checked = 0
    while checked < 20:
        eps = (rng.uniform(-2e-3, 2e-3), rng.uniform(-5e-2, 5e-2))
        nf = TruncatedNF(coefficients, eps)
        equilibria = nf_equilibria(nf)
        if any(np.min(np.abs(np.real(eq.eigenvalues))) < 1e-6 for eq in equilibria):
            continue
        expected = [np.array(eq.z) for eq in equilibria if np.max(np.abs(eq.z)) < radius]
        found = _brute_force_roots(nf, radius)
        assert len(found) == len(expected), eps
        for z in found:
            assert min(np.max(np.abs(z - other)) for other in expected) < 1e-6
        checked += 1


def test_d4_census():
    counts = census_at(SET1_NF, D4_EPS)
    assert fingerprint(counts) == 'A0:unstable,A1:stable*2,A2:stable*2,A3:saddle*4'
    assert label_set1(counts) == 'D4'


def test_region_map_grid():
    window = (2e-3, 5e-2)
    region_map = region_classify(SET1_NF, SET1_NF.tt, window, n=7, labeler=label_set1)
    frame = region_map.to_frame()
    assert len(frame) == 49
    assert list(frame.columns) == ['d1', 's', 'eps1', 'eps2', 'fingerprint', 'region_label',
                                   'n_stable', 'n_saddle', 'n_unstable']
    # d1 outer, s inner
    assert frame['d1'].iloc[0] == frame['d1'].iloc[6]
    assert frame['s'].iloc[0] < frame['s'].iloc[1]
    assert region_map.cell_at(0.0056 - 2e-3, 0.2364 - 5e-2).d1 == pytest.approx(0.0036)

    parallel = region_classify(SET1_NF, SET1_NF.tt, window, n=7, jobs=2, labeler=label_set1)
    assert parallel.to_frame().equals(frame)


def test_trajectory_keeps_invariant_axes():
    nf = TruncatedNF(SET1_NF, D4_EPS)
    trajectory = nf_trajectory(nf, (0.01, 0.0), T=200.0, dt=1.0)
    assert np.all(trajectory.z[:, 1] == 0.0)

    nf = TruncatedNF(SET2_NF, (-5e-4, 0.02))
    trajectory = nf_trajectory(nf, (0.0, 0.01), T=200.0, dt=1.0)
    assert np.all(trajectory.z[:, 0] == 0.0)


def test_trajectory_settles_on_stable_equilibrium():
    nf = TruncatedNF(SET1_NF, D4_EPS)
    stable = [np.array(eq.z) for eq in nf_equilibria(nf) if eq.stability == 'stable']
    trajectory = nf_trajectory(nf, (0.01, 0.01), T=5000.0, dt=1.0)
    end = trajectory.z[-1]
    assert min(np.max(np.abs(end - z)) for z in stable) < 1e-6

    frame = trajectory.to_frame(max_rows=100)
    assert len(frame) <= 101
    assert frame['t'].iloc[-1] == pytest.approx(5000.0)


def test_steady_state_shapes():
    equilibria = nf_equilibria(TruncatedNF(SET1_NF, D4_EPS))
    shapes = {eq.label: steady_state_shape(eq, 2, 3) for eq in equilibria}
    assert shapes['A0'] == 'ConstantEq'
    assert shapes['A1plus'] == 'PureMode(2,+)'
    assert shapes['A2minus'] == 'PureMode(3,-)'
    assert shapes['A3-+'] == 'Superposition{2,3}(-)'
    assert sum(census(equilibria).values()) == 9


if __name__ == "__main__":
    pytest.main([__file__, '-v'])
