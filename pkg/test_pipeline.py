#!/usr/bin/env python3
"""
Test script for the BifurcationAnalysisEngine end to end
"""

import numpy as np
import pytest

from errors import ModelError, UnknownScenario
from nf_dynamics import census_at
from pipeline import BifurcationAnalysisEngine
from scenarios import PARAMETER_SETS, label_set1, label_set2


@pytest.fixture(scope='module')
def engine1():
    engine = BifurcationAnalysisEngine()
    engine.load_model('1')
    engine.calculate_comprehensive_analysis()
    return engine


@pytest.fixture(scope='module')
def engine2():
    engine = BifurcationAnalysisEngine()
    engine.load_model('2')
    engine.calculate_comprehensive_analysis()
    return engine


def test_comprehensive_analysis_set1(engine1):
    results = engine1.analysis_results
    assert results['tt_point']['tt']['k1'] == 2
    assert results['normal_form']['case'] == 'Generic'
    assert results['phase']['unfolding']['case'] == 'Ib'
    assert results['anomalies'] == []

    summary = engine1.generate_executive_summary()
    assert 'TT POINT (2,3)' in summary
    assert 'Unfolding: Ib' in summary


def test_default_points_land_in_expected_regions(engine1, engine2):
    eps = engine1.epsilon_of(*PARAMETER_SETS['1'].default_point)
    assert label_set1(census_at(engine1.coefficients, eps)) == 'D4'

    eps = engine2.epsilon_of(*PARAMETER_SETS['2'].default_point)
    assert label_set2(census_at(engine2.coefficients, eps)) == 'D1'


def test_set1_region_map_shows_all_six_regions(engine1):
    region_map = engine1.calculate_regions(n=41)
    labels = {cell.region_label for cell in region_map.cells}
    assert {'D1', 'D2', 'D3', 'D4', 'D5', 'D6'} <= labels


def test_phase_expected_attractors(engine1):
    phase = engine1.calculate_phase(engine1.epsilon_of(0.0051, 0.2064), with_trajectories=False)['phase']
    shapes = {record['expected_attractor'] for record in phase['equilibria'] if record['stability'] == 'stable'}
    assert shapes == {'PureMode(2,+)', 'PureMode(2,-)', 'PureMode(3,+)', 'PureMode(3,-)'}


def test_predicted_profiles(engine1):
    eps = engine1.epsilon_of(0.0051, 0.2064)
    frame = engine1.predicted_profiles(eps, N=64)
    assert len(frame) == 64
    assert len(frame.columns) == 1 + 2 * 9
    u_star = engine1.lin.equilibrium.u_star
    assert np.allclose(frame['u0_A0'], u_star)
    # a pure k1 = 2 profile is symmetric about the middle of [0, pi]
    pure = next(column for column in frame.columns if column.startswith('u') and column.endswith('A1plus'))
    assert np.allclose(frame[pure].to_numpy(), frame[pure].to_numpy()[::-1])


def test_custom_pair_skips_region_labels():
    engine = BifurcationAnalysisEngine()
    engine.load_model('2')
    engine.calculate_normal_form(1, 3)
    region_map = engine.calculate_regions(n=3)
    assert all(cell.region_label.startswith('F') or cell.region_label == 'Unknown'
               for cell in region_map.cells)


def test_model_dict_and_errors():
    engine = BifurcationAnalysisEngine()
    with pytest.raises(ModelError):
        engine.calculate_equilibrium()
    with pytest.raises(UnknownScenario):
        engine.load_model('3')

    engine.load_model(PARAMETER_SETS['1'].params().to_dict())
    assert engine.parameter_set is None
    assert engine.default_modes() == (2, 3)
    assert engine.generate_executive_summary() == 'No analysis has been run.'


def test_existence_condition_reported():
    engine = BifurcationAnalysisEngine()
    params = PARAMETER_SETS['1'].params().to_dict()
    params['b'] = 2.0
    engine.load_model(params)
    assert not engine.params.existence_condition
    assert any('Existence condition' in note for note in engine.detect_anomalies())


if __name__ == "__main__":
    pytest.main([__file__, '-v'])
