#!/usr/bin/env python3
"""
Test script for the finite-difference simulator, modal signatures and attractor labels
"""

import math

import numpy as np
import pytest

from errors import BlowUp, InvalidConfig, InvalidGrid
from kinetics import CrowleyMartin
from nf_dynamics import NFEquilibrium
from pde_sim import (AttractorLabel, FieldState, Grid1D, ModalSignature, SimConfig, amplitude_cross_check,
                     classify_attractor, distinct, integrate, modal_signature, run_scenario, sweep)
from scenarios import PARAMETER_SETS, SCENARIOS, Scenario, get_scenario

SET1 = PARAMETER_SETS['1'].params()
E1 = CrowleyMartin(SET1).equilibrium()
QUICK = SimConfig(dt=0.1, T_max=50.0, N=64)


def _signature(a_u, a_v=None):
    a_u = np.asarray(a_u, dtype=float)
    a_v = np.zeros_like(a_u) if a_v is None else np.asarray(a_v, dtype=float)
    return ModalSignature(a_u=a_u, a_v=a_v, deviation_norm=float(np.linalg.norm(a_u)))


def test_grid_validation():
    with pytest.raises(InvalidGrid):
        Grid1D(N=32)
    grid = Grid1D(N=64)
    assert grid.x[-1] == pytest.approx(math.pi)
    assert grid.h == pytest.approx(math.pi / 63)


def test_laplacian_of_cosines():
    """Discrete eigenvalue relation holds at every node, ends included"""
    grid = Grid1D(N=128)
    for k in (0, 1, 3, 7):
        f = np.cos(k * grid.x)
        expected = -(2 - 2 * math.cos(k * grid.h)) / grid.h ** 2 * f
        np.testing.assert_allclose(grid.laplacian(f), expected, atol=1e-8)
        left, right = grid.end_flux(np.ones(grid.N))
        assert left == right == 0.0


def test_equilibrium_is_fixed_point():
    u = np.full(64, E1.u_star)
    v = np.full(64, E1.v_star)
    for integrator, dt in (('IMEX', 0.1), ('explicit', 1e-3)):
        config = SimConfig(dt=dt, T_max=1.0, N=64, integrator=integrator)
        result = integrate(SET1, config, FieldState(0.0, u, v))
        assert result.steady
        assert np.max(np.abs(result.final.u - E1.u_star)) < 1e-12
        assert np.max(np.abs(result.final.v - E1.v_star)) < 1e-12


def test_explicit_step_bound():
    with pytest.raises(InvalidConfig):
        integrate(SET1, SimConfig(dt=0.1, T_max=1.0, N=64, integrator='explicit'),
                  FieldState(0.0, np.full(64, E1.u_star), np.full(64, E1.v_star)))


def test_simconfig_validation():
    with pytest.raises(InvalidConfig):
        SimConfig(dt=0.0)
    with pytest.raises(InvalidConfig):
        SimConfig(integrator='leapfrog')
    with pytest.raises(InvalidConfig):
        SimConfig.from_profile(step=0.1)


def test_blowup_reported():
    scenario = get_scenario('fig3a')
    x = Grid1D(64).x
    u0, v0 = scenario.initial_fields(x)
    with pytest.raises(BlowUp):
        integrate(scenario.params, SimConfig(dt=0.1, T_max=1.0, N=64, blowup_limit=0.1), FieldState(0.0, u0, v0))


def test_modal_projection_of_single_mode():
    x = Grid1D(256).x
    state = FieldState(0.0, E1.u_star + 0.1 * math.sqrt(2) * np.cos(2 * x), np.full_like(x, E1.v_star))
    signature = modal_signature(state, E1, K_sig=8)
    assert signature.a_u[2] == pytest.approx(0.1, abs=1e-10)
    others = np.delete(signature.a_u, 2)
    assert np.max(np.abs(others)) < 1e-10
    assert np.max(np.abs(signature.a_v)) < 1e-10


def test_modal_projection_linear():
    x = Grid1D(128).x
    c1, c2 = 0.03, -0.07
    state = FieldState(0.0, E1.u_star + c1 * np.cos(x) + c2 * np.cos(2 * x),
                       E1.v_star - c2 * np.cos(2 * x))
    signature = modal_signature(state, E1, K_sig=4)
    assert signature.a_u[1] == pytest.approx(c1 / math.sqrt(2), abs=1e-12)
    assert signature.a_u[2] == pytest.approx(c2 / math.sqrt(2), abs=1e-12)
    assert signature.a_v[2] == pytest.approx(-c2 / math.sqrt(2), abs=1e-12)


def test_signature_bounded_by_deviation():
    rng = np.random.default_rng(3)
    x = Grid1D(128).x
    state = FieldState(0.0, E1.u_star + 0.01 * rng.standard_normal(x.size),
                       E1.v_star + 0.01 * rng.standard_normal(x.size))
    signature = modal_signature(state, E1, K_sig=8)
    assert np.sum(signature.energy()) <= signature.deviation_norm ** 2 + 1e-15


def test_classify_attractor_thresholds():
    assert str(classify_attractor(_signature([0.0, 1e-7, -5e-7, 0.0]))) == 'ConstantEq'
    assert str(classify_attractor(_signature([0.0, 0.0, -0.05, 0.005]))) == 'PureMode(2,-)'
    assert str(classify_attractor(_signature([0.0, 0.03, 0.02, 0.0]))) == 'Superposition{1,2}(+)'
    assert str(classify_attractor(_signature([0.0, 0.03, 0.02, 0.0]), steady=False)) == 'NonStationary'
    spread = [0.0] + [0.01] * 30
    assert str(classify_attractor(_signature(spread))) == 'Unresolved'


def test_label_matching():
    label = AttractorLabel('Superposition', (1, 2), -1)
    assert label.matches('Superposition{1,2}(-)')
    assert label.matches('Superposition{1,2}')
    assert not label.matches('Superposition{1,2}(+)')
    assert not AttractorLabel('PureMode', (2,), 1).matches('PureMode(2,-)')


def test_distinct_signatures():
    first = _signature([0.0, 0.1, 0.0])
    assert not distinct(first, _signature([0.0, 0.1 + 5e-5, 0.0]))
    assert distinct(first, _signature([0.0, -0.1, 0.0]))


def test_reflection_equivariance():
    scenario = get_scenario('fig3a')
    x = Grid1D(64).x
    u0, v0 = scenario.initial_fields(x)
    u0 = u0 + 0.01 * np.sin(x / 2)
    direct = integrate(scenario.params, QUICK, FieldState(0.0, u0, v0))
    mirrored = integrate(scenario.params, QUICK, FieldState(0.0, u0, v0).reflected())
    assert np.max(np.abs(direct.final.reflected().u - mirrored.final.u)) < 1e-10
    assert np.max(np.abs(direct.final.reflected().v - mirrored.final.v)) < 1e-10


def test_snapshot_cadence():
    scenario = get_scenario('fig3a')
    run = run_scenario(scenario, SimConfig(dt=0.1, T_max=10.0, N=64, snapshot_stride=25))
    times = [state.t for state in run.result.history]
    assert times[0] == 0.0
    assert times[-1] == pytest.approx(10.0)
    assert len(times) == 5
    frames = run.snapshot_frames()
    assert list(frames['t_index.csv'].columns) == ['t_index', 't', 'file']
    assert 'snapshot_00004.csv' in frames
    assert str(run.label) == 'NonStationary'
    assert run.report()['matches_expected'] is False


def test_scenario_config_keys_validated():
    scenario = Scenario('bad', SET1, (E1.u_star, E1.v_star), {2: 0.01}, {}, config={'dtt': 0.5})
    with pytest.raises(InvalidConfig):
        run_scenario(scenario, QUICK)


def test_amplitude_cross_check():
    eq = NFEquilibrium(z=(0.05, 0.0), label='A1plus', eigenvalues=(-1.0, -1.0), stability='stable')
    label = AttractorLabel('PureMode', (2,), 1, {2: 0.055})
    check = amplitude_cross_check(label, [eq], 2, 3, (1e-4, 1e-4))
    assert check['ok']
    assert check['relative_error'] == pytest.approx(0.1)

    far = amplitude_cross_check(label, [eq], 2, 3, (1e-2, 0.0))
    assert far is None


def test_sweep_rejects_empty_grid():
    with pytest.raises(InvalidGrid):
        sweep(SET1, [], [0.2], [({2: 0.01}, {})])
    with pytest.raises(InvalidGrid):
        sweep(SET1, [0.005], [0.2], [])


def test_small_sweep():
    ensemble = [({2: 0.02}, {2: -0.05}), ({2: -0.02}, {2: 0.05})]
    empirical = sweep(SET1, [0.0051], [0.2064], ensemble, SimConfig(dt=0.1, T_max=5.0, N=64))
    frame = empirical.to_frame()
    assert list(frame.columns) == ['d1', 's', 'n_runs', 'n_distinct', 'attractors', 'n_blowup', 'n_nonstationary']
    assert frame['n_runs'].tolist() == [2]
    assert frame['n_nonstationary'].tolist() == [2]


def test_halving_dt_keeps_steady_state():
    coarse = run_scenario(SCENARIOS['fig6a'], SimConfig(dt=0.2, T_max=5000.0, N=64))
    fine = run_scenario(SCENARIOS['fig6a'], SimConfig(dt=0.1, T_max=5000.0, N=64))
    assert coarse.result.steady and fine.result.steady
    assert str(coarse.label) == str(fine.label)
    change = max(np.max(np.abs(coarse.result.final.u - fine.result.final.u)),
                 np.max(np.abs(coarse.result.final.v - fine.result.final.v)))
    assert change < 1e-6


def test_doubling_grid_keeps_steady_state():
    coarse = run_scenario(SCENARIOS['fig6a'], SimConfig(dt=0.5, T_max=5000.0, N=256))
    fine = run_scenario(SCENARIOS['fig6a'], SimConfig(dt=0.5, T_max=5000.0, N=512))
    assert coarse.result.steady and fine.result.steady
    assert str(coarse.label) == str(fine.label)
    # fine fields interpolated onto the coarse nodes
    u = np.interp(coarse.x, fine.x, fine.result.final.u)
    v = np.interp(coarse.x, fine.x, fine.result.final.v)
    change = max(np.max(np.abs(coarse.result.final.u - u)), np.max(np.abs(coarse.result.final.v - v)))
    assert change < 1e-5


@pytest.mark.slow
@pytest.mark.parametrize('name', ['fig3a', 'fig3b', 'fig3c', 'fig3d'])
def test_single_mode_scenarios(name):
    run = run_scenario(SCENARIOS[name])
    assert run.result.steady
    assert run.label.matches(SCENARIOS[name].expected)
    k = run.label.modes[0]
    other = 3 if k == 2 else 2
    assert abs(run.signature.a_u[other]) < 0.1 * abs(run.signature.a_u[k])


@pytest.mark.slow
def test_single_mode_scenarios_are_distinct():
    signatures = [run_scenario(SCENARIOS[name]).signature for name in ('fig3a', 'fig3b', 'fig3c', 'fig3d')]
    for i in range(4):
        for j in range(i + 1, 4):
            assert distinct(signatures[i], signatures[j])


@pytest.mark.slow
@pytest.mark.parametrize('name', ['fig6a', 'fig6b', 'fig6c', 'fig7a', 'fig7b', 'fig7c', 'fig7d',
                                  'fig8a', 'fig8b', 'fig8c', 'fig8d'])
def test_set2_scenarios(name):
    run = run_scenario(SCENARIOS[name])
    assert run.label.matches(SCENARIOS[name].expected), str(run.label)


if __name__ == "__main__":
    pytest.main([__file__, '-v'])
