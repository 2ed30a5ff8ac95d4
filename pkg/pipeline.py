#!/usr/bin/env python3
"""
BifurcationAnalysisEngine: one object that carries a model from its
equilibrium through the Turing-Turing point and normal form to phase and
region analysis. The CLI drives everything through it.
"""

from __future__ import annotations

import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from config import Config
from errors import ModelError, StepSizeUnderflow
from kinetics import CrowleyMartin, ModelParams
from linear_analysis import (critical_eigenvectors, critical_mode_index, dispersion_table,
                             linearize, spectrum_check, tt_point, turing_curves_table)
from nf_dynamics import (BifurcationCurve, RegionMap, TruncatedNF, classify_unfolding,
                         nf_bifurcation_lines, nf_equilibria, nf_trajectory, predicted_profile,
                         region_classify, steady_state_shape)
from normal_form import ResonanceCase, compute_nf
from pde_sim import Grid1D, ScenarioRun, amplitude_cross_check
from scenarios import PARAMETER_SETS, REGION_LABELERS, get_parameter_set

logger = logging.getLogger(__name__)

DEFAULT_WINDOW = (2e-3, 5e-2)


class BifurcationAnalysisEngine:
    """
    Turing-Turing analysis of a two-component kinetics model
    """

    def __init__(self, profile=Config):
        self.profile = profile
        self.params: Optional[ModelParams] = None
        self.parameter_set: Optional[str] = None
        self.model = None
        self.lin = None
        self.tt = None
        self.critical = None
        self.coefficients = None
        self.spectrum = None
        self.k0_star: Optional[int] = None
        self.analysis_results: Dict = {}
        self._phase_cache: Dict = {}
        self._notes: List[str] = []

    def load_model(self, data: Union[Dict, ModelParams, str]):
        """Load parameters from a dict, a ModelParams or a built-in set name."""
        if isinstance(data, ModelParams):
            self.params = data
        elif isinstance(data, dict):
            self.params = ModelParams.from_dict(data)
        else:
            param_set = get_parameter_set(data)
            self.parameter_set = param_set.name
            self.params = param_set.params()
        self.model = CrowleyMartin(self.params)
        self.lin = self.tt = self.critical = self.coefficients = self.spectrum = None
        self._phase_cache = {}
        self._notes = []

    def _require_model(self):
        if self.params is None:
            raise ModelError('no model loaded')

    def calculate_equilibrium(self) -> Dict:
        self._require_model()
        eq = self.model.equilibrium()
        self.lin = linearize(self.params, eq, self.model)
        return {'u_star': eq.u_star, 'v_star': eq.v_star, 's0': self.lin.s0, 'sigma': self.lin.sigma,
                'existence_condition': self.params.existence_condition,
                'params': self.params.to_dict()}

    def _ensure_linearization(self):
        if self.lin is None:
            self.calculate_equilibrium()

    def calculate_dispersion(self, k_max: int = 10) -> pd.DataFrame:
        self._ensure_linearization()
        return dispersion_table(self.params, self.lin, k_max)

    def calculate_turing_curves(self, modes: Sequence[int], samples: int = 100) -> pd.DataFrame:
        self._ensure_linearization()
        return turing_curves_table(self.params, self.lin, modes, samples)

    def default_modes(self) -> Tuple[int, int]:
        if self.parameter_set:
            return PARAMETER_SETS[self.parameter_set].modes
        self._ensure_linearization()
        k0 = critical_mode_index(self.params, self.lin, self.profile.K_CUT)
        return k0, k0 + 1

    def calculate_tt_point(self, k1: Optional[int] = None, k2: Optional[int] = None,
                           strict: bool = False) -> Dict:
        self._ensure_linearization()
        if k1 is None or k2 is None:
            k1, k2 = self.default_modes()
        self.tt = tt_point(self.params, self.lin, k1, k2)
        self.k0_star = critical_mode_index(self.params, self.lin, self.profile.K_CUT)
        self.spectrum = spectrum_check(self.tt, self.lin, self.params, self.profile.K_CUT, strict=strict)
        self.critical = critical_eigenvectors(self.tt, self.lin, self.params)
        self.coefficients = None
        self._phase_cache = {}
        return {'tt': self.tt.as_dict(), 'k0_star': self.k0_star, 'spectrum': self.spectrum.as_dict(),
                'critical': self.critical.as_dict()}

    def calculate_normal_form(self, k1: Optional[int] = None, k2: Optional[int] = None) -> Dict:
        if self.tt is None or (k1 is not None and (k1, k2) != (self.tt.k1, self.tt.k2)):
            self.calculate_tt_point(k1, k2)
        self.coefficients = compute_nf(self.tt, self.critical, self.model)
        payload = self.coefficients.as_dict()
        payload['critical'] = self.critical.as_dict()
        payload['params'] = self.params.to_dict()
        return payload

    def _ensure_normal_form(self):
        if self.coefficients is None:
            self.calculate_normal_form()

    def epsilon_of(self, d1: float, s: float) -> Tuple[float, float]:
        self._ensure_normal_form()
        return d1 - self.tt.d_star, s - self.tt.s_star

    def calculate_phase(self, eps: Tuple[float, float], with_trajectories: bool = True,
                        T: float = 2000.0, dt: float = 0.5) -> Dict:
        """Equilibria, unfolding class and sample trajectories of the truncated field at eps."""
        self._ensure_normal_form()
        nf = TruncatedNF(self.coefficients, tuple(eps))
        equilibria = nf_equilibria(nf)
        self._phase_cache[tuple(eps)] = equilibria
        k1, k2 = self.tt.k1, self.tt.k2

        records = []
        for eq in equilibria:
            record = eq.as_dict()
            record['expected_attractor'] = steady_state_shape(eq, k1, k2)
            records.append(record)
        result = {'epsilon': list(eps), 'd1': self.tt.d_star + eps[0], 's': self.tt.s_star + eps[1],
                  'case': self.coefficients.case.value, 'equilibria': records}
        if self.coefficients.case is ResonanceCase.GENERIC:
            result['unfolding'] = classify_unfolding(self.coefficients).as_dict()

        trajectories = {}
        if with_trajectories:
            scale = max([math.hypot(*eq.z) for eq in equilibria] + [0.0]) * 1.5 or 0.05
            for index, angle in enumerate(np.linspace(0.0, 2 * np.pi, 8, endpoint=False)):
                z0 = (scale * math.cos(angle), scale * math.sin(angle))
                try:
                    trajectories[f'trajectory_{index}.csv'] = nf_trajectory(nf, z0, T, dt).to_frame()
                except StepSizeUnderflow as e:
                    self._notes.append(f'Trajectory from z0 = ({z0[0]:.3g}, {z0[1]:.3g}) dropped: {e}')
        result['trajectory_files'] = sorted(trajectories)
        return {'phase': result, 'trajectories': trajectories}

    def predicted_profiles(self, eps: Tuple[float, float], N: Optional[int] = None) -> pd.DataFrame:
        """u and v columns of the steady state attached to each equilibrium at eps."""
        self._ensure_normal_form()
        eps = tuple(eps)
        equilibria = self._phase_cache.get(eps) or nf_equilibria(TruncatedNF(self.coefficients, eps))
        x = Grid1D(N or self.profile.GRID_N, self.params.l).x
        base = (self.lin.equilibrium.u_star, self.lin.equilibrium.v_star)
        columns = {'x': x}
        for index, eq in enumerate(equilibria):
            u, v = predicted_profile(eq, self.critical.phi1, self.critical.phi2, self.tt.k1, self.tt.k2,
                                     base, x, self.params.l)
            columns[f'u{index}_{eq.label}'] = u
            columns[f'v{index}_{eq.label}'] = v
        return pd.DataFrame(columns)

    def calculate_lines(self, window: Tuple[float, float] = DEFAULT_WINDOW) -> List[Dict]:
        self._ensure_normal_form()
        lines = nf_bifurcation_lines(self.coefficients, window, self.profile.CONT_STEP, self.profile.CONT_TOL)
        return [line.as_dict(self.tt) for line in lines]

    def line_frames(self, window: Tuple[float, float] = DEFAULT_WINDOW) -> Dict[str, pd.DataFrame]:
        """Curve point lists for plotting, one CSV per continued curve."""
        self._ensure_normal_form()
        frames = {}
        for line in nf_bifurcation_lines(self.coefficients, window, self.profile.CONT_STEP,
                                         self.profile.CONT_TOL):
            if isinstance(line, BifurcationCurve):
                frames[f'curve_{line.name}.csv'] = pd.DataFrame({
                    'eps1': line.points[:, 0], 'eps2': line.points[:, 1],
                    'd1': line.points[:, 0] + self.tt.d_star, 's': line.points[:, 1] + self.tt.s_star})
        return frames

    def calculate_regions(self, window: Tuple[float, float] = DEFAULT_WINDOW, n: Optional[int] = None,
                          jobs: int = 1) -> RegionMap:
        self._ensure_normal_form()
        labeler = REGION_LABELERS.get(self.parameter_set) if self._is_builtin_point() else None
        return region_classify(self.coefficients, self.tt, window, n or self.profile.REGION_POINTS,
                               jobs, labeler)

    def _is_builtin_point(self) -> bool:
        return bool(self.parameter_set) and (self.tt.k1, self.tt.k2) == PARAMETER_SETS[self.parameter_set].modes

    def cross_validate(self, run: ScenarioRun) -> Optional[Dict]:
        """Soft amplitude check of a simulated PureMode state against the normal form."""
        self._ensure_normal_form()
        eps = self.epsilon_of(run.scenario.params.d1, run.scenario.params.s)
        equilibria = self._phase_cache.get(eps) or nf_equilibria(TruncatedNF(self.coefficients, eps))
        check = amplitude_cross_check(run.label, equilibria, self.tt.k1, self.tt.k2, eps)
        if check is not None and not check['ok']:
            self._notes.append(f"{run.scenario.name}: PureMode amplitude off the normal-form value by "
                               f"{100 * check['relative_error']:.0f}%")
        return check

    def detect_anomalies(self) -> List[str]:
        """Warnings worth a reader's attention; nothing here stops a run."""
        anomalies = list(self._notes)
        if self.params is not None and not self.params.existence_condition:
            anomalies.append('Existence condition a + b >= ab fails although an interior equilibrium exists')
        if self.spectrum is not None and not self.spectrum.ok:
            anomalies.append(f'Spectral side conditions fail at modes {self.spectrum.offending_modes}')
        if self.k0_star is not None and self.tt is not None and self.tt.k1 < self.k0_star:
            anomalies.append(f'Mode pair ({self.tt.k1},{self.tt.k2}) lies below k0* = {self.k0_star}')
        for eps, equilibria in sorted(self._phase_cache.items()):
            if any(eq.stability == 'degenerate' for eq in equilibria):
                anomalies.append(f'Degenerate stability verdict at eps = {eps}')
        return anomalies

    def calculate_comprehensive_analysis(self, eps: Optional[Tuple[float, float]] = None) -> Dict:
        equilibrium = self.calculate_equilibrium()
        tt = self.calculate_tt_point()
        normal_form = self.calculate_normal_form()
        if eps is None and self.parameter_set:
            d1, s = PARAMETER_SETS[self.parameter_set].default_point
            eps = self.epsilon_of(d1, s)
        phase = self.calculate_phase(eps or (0.0, 0.0), with_trajectories=False)['phase']
        self.analysis_results = {
            'equilibrium': equilibrium,
            'tt_point': tt,
            'normal_form': normal_form,
            'phase': phase,
            'anomalies': self.detect_anomalies(),
        }
        return self.analysis_results

    def generate_executive_summary(self) -> str:
        results = self.analysis_results
        if not results:
            return 'No analysis has been run.'
        eq, tt, nf = results['equilibrium'], results['tt_point']['tt'], results['normal_form']
        display = nf['display']
        coefficient_lines = '\n'.join(f'  {key:<10} {value: .6g}' for key, value in sorted(display.items()))
        phase = results['phase']
        unfolding = phase.get('unfolding', {}).get('case', 'n/a')

        summary = f"""
TURING-TURING BIFURCATION SUMMARY

Parameters: {', '.join(f'{k}={v:g}' for k, v in eq['params'].items())}
Interior equilibrium: u* = {eq['u_star']:.6g}, v* = {eq['v_star']:.6g}
Linearization: s0 = {eq['s0']:.6g}, sigma = {eq['sigma']:.6g}

TT POINT ({tt['k1']},{tt['k2']}): d* = {tt['d_star']:.6g}, s* = {tt['s_star']:.6g}, k0* = {results['tt_point']['k0_star']}
Resonance: {nf['case']}    Unfolding: {unfolding}

Normal form coefficients:
{coefficient_lines}

At eps = ({phase['epsilon'][0]:.4g}, {phase['epsilon'][1]:.4g}): {len(phase['equilibria'])} equilibria, {sum(1 for e in phase['equilibria'] if e['stability'] == 'stable')} stable
        """
        if results['anomalies']:
            summary += '\nAnomalies:\n' + '\n'.join(f'  - {a}' for a in results['anomalies'])
        return summary.strip()


if __name__ == "__main__":
    engine = BifurcationAnalysisEngine()
    engine.load_model('1')
    engine.calculate_comprehensive_analysis()
    print(engine.generate_executive_summary())
