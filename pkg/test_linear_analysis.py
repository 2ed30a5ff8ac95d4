#!/usr/bin/env python3
"""
Test script for the linear stability analysis around the interior equilibrium
"""

import numpy as np
import pytest

from errors import DomainError, HypothesisViolated, SideConditionFailed
from kinetics import Equilibrium
from linear_analysis import (Linearization, critical_eigenvectors, critical_mode_index, dispersion,
                             dispersion_table, linearize, spectrum_check, tt_point, turing_curve,
                             turing_curves_table)
from scenarios import PARAMETER_SETS

SET1 = PARAMETER_SETS['1'].params()
SET2 = PARAMETER_SETS['2'].params()


@pytest.fixture(scope='module')
def lin1():
    return linearize(SET1)


@pytest.fixture(scope='module')
def lin2():
    return linearize(SET2)


def test_tt_points(lin1, lin2):
    """(2,3) point of set 1 and (1,2) point of set 2"""
    tt1 = tt_point(SET1, lin1, 2, 3)
    assert tt1.d_star == pytest.approx(0.0056, rel=1e-2)
    assert tt1.s_star == pytest.approx(0.2364, rel=1e-2)

    tt2 = tt_point(SET2, lin2, 2, 1)
    assert (tt2.k1, tt2.k2) == (1, 2)
    assert tt2.d_star == pytest.approx(0.01095, rel=1e-2)
    assert tt2.s_star == pytest.approx(0.2679, rel=1e-2)


def test_both_modes_neutral_at_tt_point(lin1):
    tt = tt_point(SET1, lin1, 2, 3)
    at_point = SET1.with_bifurcation(tt.d_star, tt.s_star)
    for k in (2, 3):
        assert abs(dispersion(at_point, lin1, k).delta) < 1e-10
    assert dispersion(at_point, lin1, 1).delta > 0
    assert dispersion(at_point, lin1, 4).delta > 0


def test_critical_mode_index(lin1, lin2):
    assert critical_mode_index(SET1, lin1) == 2
    assert critical_mode_index(SET2, lin2) == 1


def test_critical_eigenvectors(lin1, lin2):
    for params, lin, pair in ((SET1, lin1, (2, 3)), (SET2, lin2, (1, 2))):
        tt = tt_point(params, lin, *pair)
        critical = critical_eigenvectors(tt, lin, params)
        for k, phi, psi in ((tt.k1, critical.phi1, critical.psi1), (tt.k2, critical.phi2, critical.psi2)):
            Delta = critical.char_matrix(k)
            assert np.max(np.abs(Delta @ phi)) < 1e-10
            assert np.max(np.abs(psi @ Delta)) < 1e-10
            assert psi @ phi == pytest.approx(1.0, abs=1e-12)
            assert phi[0] == 1.0


def test_spectrum_side_conditions(lin1, lin2):
    report = spectrum_check(tt_point(SET1, lin1, 2, 3), lin1, SET1)
    assert report.ok
    assert report.zero_modes == [2, 3]
    assert report.margin > 0

    assert spectrum_check(tt_point(SET2, lin2, 1, 2), lin2, SET2).ok


def test_spectrum_strict_raises_when_modes_skip_unstable_band(lin1):
    # the (1,3) point of set 1 leaves mode 2 unstable
    tt = tt_point(SET1, lin1, 1, 3)
    report = spectrum_check(tt, lin1, SET1)
    assert not report.ok
    with pytest.raises(SideConditionFailed):
        spectrum_check(tt, lin1, SET1, strict=True)


def test_dispersion_mode_zero(lin1):
    point = dispersion(SET1, lin1, 0)
    assert point.theta == pytest.approx(lin1.s0 - SET1.s)
    assert point.delta == pytest.approx(-SET1.s * (lin1.s0 + lin1.sigma))
    assert point.delta > 0


def test_dispersion_table_columns(lin1):
    table = dispersion_table(SET1, lin1, 5)
    assert list(table.columns) == ['k', 'd1', 's', 'theta', 'delta']
    assert table['k'].tolist() == list(range(6))


def test_turing_curve_vanishes_delta(lin1):
    curve = turing_curve(SET1, lin1, 2, samples=20)
    assert curve.d1.size == 20
    assert np.all(curve.s > 0)
    for d1, s in zip(curve.d1, curve.s):
        assert abs(dispersion(SET1.with_bifurcation(d1, s), lin1, 2).delta) < 1e-10

    table = turing_curves_table(SET1, lin1, [3, 2], samples=10)
    assert table['k'].tolist() == [2] * 10 + [3] * 10


def test_turing_curve_domain(lin1):
    with pytest.raises(DomainError):
        turing_curve(SET1, lin1, 0)
    with pytest.raises(DomainError):
        turing_curve(SET1, lin1, 2, d1_values=[lin1.s0])


def test_hypotheses_reported():
    stable_activator = Linearization(s0=0.1, sigma=-0.05, s=0.2, equilibrium=Equilibrium(0.3, 0.3))
    with pytest.raises(HypothesisViolated, match=r's0\+sigma < 0'):
        tt_point(SET1, stable_activator, 2, 3)

    no_activation = Linearization(s0=-0.1, sigma=-0.5, s=0.2, equilibrium=Equilibrium(0.3, 0.3))
    with pytest.raises(HypothesisViolated, match='s0 > 0'):
        critical_mode_index(SET1, no_activation)


def test_equal_modes_rejected(lin1):
    with pytest.raises(HypothesisViolated):
        tt_point(SET1, lin1, 2, 2)


if __name__ == "__main__":
    pytest.main([__file__, '-v'])
