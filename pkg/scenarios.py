#!/usr/bin/env python3
"""
Built-in parameter sets, named simulation scenarios and region labelling
tables for the two Crowley-Martin examples.
"""

from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from errors import InvalidModelFile, UnknownScenario
from kinetics import CrowleyMartin, ModelParams
from nf_dynamics import fingerprint

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ParameterSet:
    name: str
    m: float
    a: float
    b: float
    d2: float
    modes: Tuple[int, int]
    default_point: Tuple[float, float]

    def params(self, d1: Optional[float] = None, s: Optional[float] = None) -> ModelParams:
        d1 = self.default_point[0] if d1 is None else d1
        s = self.default_point[1] if s is None else s
        return ModelParams(m=self.m, a=self.a, b=self.b, s=s, d1=d1, d2=self.d2)


PARAMETER_SETS: Dict[str, ParameterSet] = {
    '1': ParameterSet('1', m=6.0, a=3.0, b=0.5, d2=0.7, modes=(2, 3), default_point=(0.0051, 0.2064)),
    '2': ParameterSet('2', m=5.0, a=3.0, b=0.1, d2=4.0, modes=(1, 2), default_point=(0.01195, 0.2679)),
}


def get_parameter_set(name) -> ParameterSet:
    try:
        return PARAMETER_SETS[str(name)]
    except KeyError:
        raise UnknownScenario(f"unknown parameter set '{name}'", name=str(name),
                              known=sorted(PARAMETER_SETS))


@dataclass
class Scenario:
    name: str
    params: ModelParams
    base: Tuple[float, float]
    mode_coeffs_u: Dict[int, float]
    mode_coeffs_v: Dict[int, float]
    expected: Optional[str] = None
    config: Dict = field(default_factory=dict)
    parameter_set: Optional[str] = None

    def initial_fields(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        l = self.params.l
        u = np.full_like(x, self.base[0], dtype=float)
        v = np.full_like(x, self.base[1], dtype=float)
        for k, c in self.mode_coeffs_u.items():
            u = u + c * np.cos(k * x / l)
        for k, c in self.mode_coeffs_v.items():
            v = v + c * np.cos(k * x / l)
        return u, v

    def as_dict(self) -> Dict:
        return {'name': self.name, 'params': self.params.to_dict(), 'parameter_set': self.parameter_set,
                'ic': {'base': list(self.base),
                       'mode_coeffs_u': {str(k): c for k, c in sorted(self.mode_coeffs_u.items())},
                       'mode_coeffs_v': {str(k): c for k, c in sorted(self.mode_coeffs_v.items())}},
                'config': self.config, 'expected': self.expected}

    @classmethod
    def from_dict(cls, data: Dict, name: str = 'custom') -> 'Scenario':
        if not isinstance(data, dict):
            raise InvalidModelFile('scenario document must be a JSON object')
        for key in ('params', 'ic'):
            if key not in data:
                raise InvalidModelFile(f"missing scenario key '{key}'", key=key)
        params = ModelParams.from_dict(data['params'])
        ic = data['ic']
        try:
            coeffs_u = {int(k): float(c) for k, c in (ic.get('mode_coeffs_u') or {}).items()}
            coeffs_v = {int(k): float(c) for k, c in (ic.get('mode_coeffs_v') or {}).items()}
        except (TypeError, ValueError, AttributeError):
            raise InvalidModelFile('mode coefficients must map integer modes to numbers', key='ic')
        base = ic.get('base')
        if base is None:
            eq = CrowleyMartin(params).equilibrium()
            base = (eq.u_star, eq.v_star)
        return cls(name=data.get('name', name), params=params, base=(float(base[0]), float(base[1])),
                   mode_coeffs_u=coeffs_u, mode_coeffs_v=coeffs_v,
                   expected=data.get('expected'), config=dict(data.get('config') or {}))

    @classmethod
    def from_json(cls, path: str) -> 'Scenario':
        try:
            with open(path, 'r') as f:
                data = json.load(f)
        except FileNotFoundError:
            raise InvalidModelFile(f'scenario file not found: {path}', path=path)
        except json.JSONDecodeError as e:
            raise InvalidModelFile(f'scenario file is not valid JSON: {e}', path=path)
        return cls.from_dict(data, name=path)


def _figure(name, set_name, point, base, coeffs_u, coeffs_v, expected) -> Scenario:
    return Scenario(name=name, params=PARAMETER_SETS[set_name].params(*point), base=(base, base),
                    mode_coeffs_u=coeffs_u, mode_coeffs_v=coeffs_v, expected=expected,
                    parameter_set=set_name)


def _build_scenarios() -> Dict[str, Scenario]:
    scenarios = {}
    p3 = (0.0051, 0.2064)
    for name, k, sign, expected in (('fig3a', 2, 1, 'PureMode(2,-)'), ('fig3b', 2, -1, 'PureMode(2,+)'),
                                    ('fig3c', 3, 1, 'PureMode(3,-)'), ('fig3d', 3, -1, 'PureMode(3,+)')):
        scenarios[name] = _figure(name, '1', p3, 0.245, {k: -sign * 0.02}, {k: sign * 0.05}, expected)

    p6 = (0.01195, 0.2679)
    scenarios['fig6a'] = _figure('fig6a', '2', p6, 0.2716, {1: -0.1}, {1: -0.1}, 'Superposition{1,2}(-)')
    scenarios['fig6b'] = _figure('fig6b', '2', p6, 0.2716, {1: 0.1}, {1: 0.1}, 'Superposition{1,2}(+)')
    scenarios['fig6c'] = _figure('fig6c', '2', p6, 0.2716, {2: -0.02}, {2: -0.05}, 'ConstantEq')

    for prefix, point, last in (('fig7', (0.01045, 0.3029), 'PureMode(2,-)'),
                                ('fig8', (0.01045, 0.2379), 'Superposition{1,2}')):
        scenarios[prefix + 'a'] = _figure(prefix + 'a', '2', point, 0.2716, {1: -0.1}, {1: -0.1},
                                          'Superposition{1,2}(-)')
        scenarios[prefix + 'b'] = _figure(prefix + 'b', '2', point, 0.2716, {1: 0.1}, {1: 0.1},
                                          'Superposition{1,2}(+)')
        scenarios[prefix + 'c'] = _figure(prefix + 'c', '2', point, 0.2716, {2: 0.02}, {2: 0.05},
                                          'PureMode(2,+)')
        scenarios[prefix + 'd'] = _figure(prefix + 'd', '2', point, 0.2716, {2: -0.02}, {2: -0.05}, last)
    return scenarios


SCENARIOS: Dict[str, Scenario] = _build_scenarios()


def get_scenario(name: str) -> Scenario:
    if name in SCENARIOS:
        return SCENARIOS[name]
    if name.endswith('.json'):
        return Scenario.from_json(name)
    raise UnknownScenario(f"unknown scenario '{name}'", name=name, known=sorted(SCENARIOS))


def ic_ensemble(set_name: str, n_random: int = 6, seed: int = 20190417,
                amplitude: float = 0.05) -> List[Tuple[Dict[int, float], Dict[int, float]]]:
    """Caption perturbations of a parameter set plus seeded random mixes of modes 1-4."""
    ensemble, seen = [], set()
    for scenario in SCENARIOS.values():
        if scenario.parameter_set != str(set_name):
            continue
        key = (tuple(sorted(scenario.mode_coeffs_u.items())), tuple(sorted(scenario.mode_coeffs_v.items())))
        if key not in seen:
            seen.add(key)
            ensemble.append((dict(scenario.mode_coeffs_u), dict(scenario.mode_coeffs_v)))

    rng = np.random.default_rng(seed)
    for _ in range(n_random):
        coeffs = rng.uniform(-amplitude, amplitude, size=(2, 4))
        ensemble.append(({k + 1: float(coeffs[0, k]) for k in range(4)},
                         {k + 1: float(coeffs[1, k]) for k in range(4)}))
    return ensemble


# Region labels. Set 1 is matched on the exact census fingerprint; set 2 on a
# coarse census, since its mixed equilibria change count without changing
# the long-time picture.

SET1_REGIONS = {
    'A0:stable': 'D1',
    'A0:saddle,A2:stable*2': 'D2',
    'A0:unstable,A1:saddle*2,A2:stable*2': 'D3',
    'A0:unstable,A1:stable*2,A2:stable*2,A3:saddle*4': 'D4',
    'A0:unstable,A1:stable*2,A2:saddle*2': 'D5',
    'A0:saddle,A1:stable*2': 'D6',
}

# (A0 stable, A2 stable, A2 other, mixed stable, mixed other)
SET2_REGIONS = {
    (True, 0, 0, 2, 2): 'D1',
    (False, 2, 0, 2, 2): 'D2',
    (False, 1, 1, 2, 0): 'D3',
    (False, 1, 1, 2, 2): 'D4',
    (False, 0, 2, 2, 0): 'D5',
    (False, 0, 0, 2, 0): 'D6',
}


def label_set1(counts: Counter) -> Optional[str]:
    return SET1_REGIONS.get(fingerprint(counts))


def coarse_census(counts: Counter) -> Tuple[bool, int, int, int, int]:
    def split(family):
        stable = counts.get((family, 'stable'), 0)
        total = sum(n for (fam, _), n in counts.items() if fam == family)
        return stable, total - stable

    return (counts.get(('A0', 'stable'), 0) > 0,) + split('A2') + split('Mixed')


def label_set2(counts: Counter) -> Optional[str]:
    return SET2_REGIONS.get(coarse_census(counts))


REGION_LABELERS: Dict[str, Callable[[Counter], Optional[str]]] = {
    '1': label_set1,
    '2': label_set2,
}
