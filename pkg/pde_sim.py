#!/usr/bin/env python3
"""
Direct simulation of the reaction-diffusion system on (0, l*pi) with zero-flux
ends, steady-state detection, cosine-mode attractor labels and multistability
sweeps.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.fft import dct
from scipy.linalg import solve_banded

from config import Config
from errors import BlowUp, InvalidConfig, InvalidGrid, NonConvergence
from kinetics import CrowleyMartin, ModelParams, ReactionModel
from scenarios import Scenario

logger = logging.getLogger(__name__)

NEGATIVITY_LIMIT = -1e-8
CONSTANT_LIMIT = 1e-6
PURE_SHARE = 0.9
MIXED_SHARE = 0.05
INTEGRATORS = ('IMEX', 'explicit')


@dataclass(frozen=True)
class Grid1D:
    N: int = Config.GRID_N
    l: float = 1.0

    def __post_init__(self):
        if not isinstance(self.N, int) or self.N < 64:
            raise InvalidGrid(f'grid needs N >= 64 nodes, got {self.N}', N=self.N)
        if not self.l > 0:
            raise InvalidGrid('domain scale l must be positive', l=self.l)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, self.l * np.pi, self.N)

    @property
    def h(self) -> float:
        return self.l * np.pi / (self.N - 1)

    def laplacian(self, f: np.ndarray) -> np.ndarray:
        """Second differences; ghost nodes mirror the first interior node at each end."""
        out = np.empty_like(f)
        out[1:-1] = f[:-2] - 2 * f[1:-1] + f[2:]
        out[0] = 2 * (f[1] - f[0])
        out[-1] = 2 * (f[-2] - f[-1])
        return out / self.h ** 2

    def end_flux(self, f: np.ndarray) -> Tuple[float, float]:
        return (f[1] - f[0]) / self.h, (f[-1] - f[-2]) / self.h

    def banded_operator(self, coefficient: float) -> np.ndarray:
        """I - coefficient * Laplacian in solve_banded (1, 1) layout."""
        c = coefficient / self.h ** 2
        ab = np.zeros((3, self.N))
        ab[0, 1:] = -c
        ab[0, 1] = -2 * c
        ab[1, :] = 1 + 2 * c
        ab[2, :-1] = -c
        ab[2, -2] = -2 * c
        return ab


@dataclass(frozen=True)
class SimConfig:
    dt: float = Config.DT
    T_max: float = Config.T_MAX
    steady_tol: float = Config.STEADY_TOL
    integrator: str = 'IMEX'
    snapshot_stride: int = Config.SNAPSHOT_STRIDE
    N: int = Config.GRID_N
    blowup_limit: float = Config.BLOWUP_LIMIT

    def __post_init__(self):
        if not self.dt > 0 or not self.T_max > 0:
            raise InvalidConfig('dt and T_max must be positive', dt=self.dt, T_max=self.T_max)
        if self.integrator not in INTEGRATORS:
            raise InvalidConfig(f"integrator must be one of {INTEGRATORS}", integrator=self.integrator)
        if self.snapshot_stride < 1:
            raise InvalidConfig('snapshot_stride must be >= 1', snapshot_stride=self.snapshot_stride)

    @classmethod
    def from_profile(cls, profile=Config, **overrides) -> 'SimConfig':
        values = dict(dt=profile.DT, T_max=profile.T_MAX, steady_tol=profile.STEADY_TOL,
                      snapshot_stride=profile.SNAPSHOT_STRIDE, N=profile.GRID_N,
                      blowup_limit=profile.BLOWUP_LIMIT)
        unknown = sorted(set(overrides) - set(values) - {'integrator'})
        if unknown:
            raise InvalidConfig(f"unknown simulation setting '{unknown[0]}'", key=unknown[0])
        values.update(overrides)
        return cls(**values)

    def as_dict(self) -> Dict:
        return {'dt': self.dt, 'T_max': self.T_max, 'steady_tol': self.steady_tol,
                'integrator': self.integrator, 'snapshot_stride': self.snapshot_stride,
                'N': self.N, 'blowup_limit': self.blowup_limit}


@dataclass
class FieldState:
    t: float
    u: np.ndarray
    v: np.ndarray

    def reflected(self) -> 'FieldState':
        return FieldState(self.t, self.u[::-1].copy(), self.v[::-1].copy())


@dataclass
class SimulationResult:
    final: FieldState
    history: List[FieldState]
    steady: bool
    steps: int
    rate: float
    min_density: float

    @property
    def t_final(self) -> float:
        return self.final.t


# --- steppers ---------------------------------------------------------

class IMEXEuler:
    """Implicit diffusion, explicit reaction; one banded solve per species."""

    def __init__(self, grid: Grid1D, model: ReactionModel, dt: float):
        self.grid = grid
        self.model = model
        self.dt = dt
        self._operators = [grid.banded_operator(dt * d) for d in (model.params.d1, model.params.d2)]

    def step(self, u: np.ndarray, v: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        reaction = self.model.reaction(u, v)
        u_next = solve_banded((1, 1), self._operators[0], u + self.dt * reaction[0], check_finite=False)
        v_next = solve_banded((1, 1), self._operators[1], v + self.dt * reaction[1], check_finite=False)
        return u_next, v_next


class ExplicitRK4:

    def __init__(self, grid: Grid1D, model: ReactionModel, dt: float):
        d_max = max(model.params.d1, model.params.d2)
        bound = 0.4 * grid.h ** 2 / d_max
        if dt > bound:
            raise InvalidConfig(f'explicit integration needs dt <= {bound:.3e}', dt=dt, bound=bound)
        self.grid = grid
        self.model = model
        self.dt = dt

    def _rhs(self, u, v):
        p = self.model.params
        reaction = self.model.reaction(u, v)
        return p.d1 * self.grid.laplacian(u) + reaction[0], p.d2 * self.grid.laplacian(v) + reaction[1]

    def step(self, u, v):
        h = self.dt
        k1 = self._rhs(u, v)
        k2 = self._rhs(u + 0.5 * h * k1[0], v + 0.5 * h * k1[1])
        k3 = self._rhs(u + 0.5 * h * k2[0], v + 0.5 * h * k2[1])
        k4 = self._rhs(u + h * k3[0], v + h * k3[1])
        return (u + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
                v + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]))


STEPPERS = {'IMEX': IMEXEuler, 'explicit': ExplicitRK4}


def integrate(params: ModelParams, config: SimConfig, initial: FieldState,
              model: Optional[ReactionModel] = None, raise_on_timeout: bool = False) -> SimulationResult:
    """
    Advance until max|w_{n+1} - w_n| / dt < steady_tol or T_max. A timeout is
    reported through `steady=False` unless raise_on_timeout is set.
    """
    if not (np.all(np.isfinite(initial.u)) and np.all(np.isfinite(initial.v))):
        raise InvalidConfig('initial fields must be finite')
    grid = Grid1D(len(initial.u), params.l)
    model = model or CrowleyMartin(params)
    stepper = STEPPERS[config.integrator](grid, model, config.dt)

    u, v = np.array(initial.u, dtype=float), np.array(initial.v, dtype=float)
    t = initial.t
    history = [FieldState(t, u.copy(), v.copy())]
    min_density = float(min(u.min(), v.min()))
    warned = False
    steady, rate = False, math.inf
    max_steps = int(math.ceil(config.T_max / config.dt))

    n = 0
    for n in range(1, max_steps + 1):
        u_next, v_next = stepper.step(u, v)
        t = initial.t + n * config.dt
        peak = max(np.max(np.abs(u_next)), np.max(np.abs(v_next)))
        if not math.isfinite(peak) or peak > config.blowup_limit:
            raise BlowUp(f'fields exceeded {config.blowup_limit:g} at t={t:g}', t=t)

        low = float(min(u_next.min(), v_next.min()))
        min_density = min(min_density, low)
        if low < NEGATIVITY_LIMIT and not warned:
            logger.warning('negative density %.3e at t=%g', low, t)
            warned = True

        rate = max(np.max(np.abs(u_next - u)), np.max(np.abs(v_next - v))) / config.dt
        u, v = u_next, v_next
        if n % config.snapshot_stride == 0:
            history.append(FieldState(t, u.copy(), v.copy()))
        if rate < config.steady_tol:
            steady = True
            break

    final = FieldState(t, u, v)
    if history[-1].t != t:
        history.append(FieldState(t, u.copy(), v.copy()))
    if not steady:
        logger.info('no steady state by T_max=%g (rate %.3e)', config.T_max, rate)
        if raise_on_timeout:
            raise NonConvergence(f'not steady by T_max={config.T_max:g}', rate=rate, t=t)
    return SimulationResult(final=final, history=history, steady=steady, steps=n,
                            rate=float(rate), min_density=min_density)


# --- modal signatures -----------------------------------------------------

@dataclass
class ModalSignature:
    a_u: np.ndarray
    a_v: np.ndarray
    deviation_norm: float

    @property
    def K(self) -> int:
        return len(self.a_u) - 1

    def energy(self) -> np.ndarray:
        return self.a_u ** 2 + self.a_v ** 2

    def vector(self) -> np.ndarray:
        return np.concatenate([self.a_u, self.a_v])

    def as_dict(self) -> Dict:
        return {'a_u': self.a_u.tolist(), 'a_v': self.a_v.tolist(), 'deviation_norm': self.deviation_norm}


def _projection(values: np.ndarray, K: int) -> np.ndarray:
    """Trapezoid inner products with sqrt2 cos(kx/l) on the vertex grid (plain mean for k = 0)."""
    N = len(values)
    Y = dct(values, type=1)[:K + 1] / (2 * (N - 1))
    Y[1:] *= math.sqrt(2.0)
    return Y


def _trapezoid_mean_square(values: np.ndarray) -> float:
    weights = np.ones_like(values)
    weights[0] = weights[-1] = 0.5
    return float(np.sum(weights * values ** 2) / (len(values) - 1))


def modal_signature(state: FieldState, eq, K_sig: int = Config.K_SIG) -> ModalSignature:
    base = eq.as_array() if hasattr(eq, 'as_array') else np.asarray(eq, dtype=float)
    du, dv = state.u - base[0], state.v - base[1]
    return ModalSignature(a_u=_projection(du, K_sig), a_v=_projection(dv, K_sig),
                          deviation_norm=math.sqrt(_trapezoid_mean_square(du) + _trapezoid_mean_square(dv)))


@dataclass
class AttractorLabel:
    kind: str
    modes: Tuple[int, ...] = ()
    sign: Optional[int] = None
    amplitudes: Dict[int, float] = field(default_factory=dict)

    def __str__(self) -> str:
        sign = '' if self.sign is None else ('(+)' if self.sign > 0 else '(-)')
        if self.kind == 'PureMode':
            return f'PureMode({self.modes[0]},{"+" if self.sign > 0 else "-"})'
        if self.kind == 'Superposition':
            return 'Superposition{' + ','.join(str(k) for k in self.modes) + '}' + sign
        return self.kind

    def matches(self, expected: str) -> bool:
        """Exact match, or match up to the sign when the expectation omits it."""
        text = str(self)
        return text == expected or (expected.startswith('Superposition') and not expected.endswith(')')
                                    and text.rsplit('(', 1)[0] == expected)

    def as_dict(self) -> Dict:
        return {'label': str(self), 'kind': self.kind, 'modes': list(self.modes), 'sign': self.sign,
                'amplitudes': {str(k): a for k, a in self.amplitudes.items()}}


def classify_attractor(signature: ModalSignature, steady: bool = True) -> AttractorLabel:
    if not steady:
        return AttractorLabel('NonStationary')
    a_u, a_v = signature.a_u, signature.a_v
    if np.all(np.abs(a_u[1:]) < CONSTANT_LIMIT) and np.all(np.abs(a_v[1:]) < CONSTANT_LIMIT):
        return AttractorLabel('ConstantEq')

    energy = signature.energy()[1:]
    share = energy / energy.sum()
    amplitudes = {k: float(a_u[k]) for k in range(1, len(a_u))}
    dominant = int(np.argmax(share)) + 1
    if share[dominant - 1] >= PURE_SHARE:
        return AttractorLabel('PureMode', (dominant,), 1 if a_u[dominant] > 0 else -1,
                              {dominant: amplitudes[dominant]})

    active = tuple(k + 1 for k in np.flatnonzero(share >= MIXED_SHARE))
    if len(active) >= 2:
        lowest = active[0]
        return AttractorLabel('Superposition', active, 1 if a_u[lowest] > 0 else -1,
                              {k: amplitudes[k] for k in active})
    return AttractorLabel('Unresolved', amplitudes=amplitudes)


def distinct(first: ModalSignature, second: ModalSignature, tol: float = Config.DISTINCT_TOL) -> bool:
    return bool(np.max(np.abs(first.vector() - second.vector())) > tol)


# --- scenarios -----------------------------------------------------------

@dataclass
class ScenarioRun:
    scenario: Scenario
    config: SimConfig
    result: SimulationResult
    signature: ModalSignature
    label: AttractorLabel
    x: np.ndarray

    @property
    def matches_expected(self) -> Optional[bool]:
        return None if self.scenario.expected is None else self.label.matches(self.scenario.expected)

    def report(self) -> Dict:
        return {'scenario': self.scenario.as_dict(), 'config': self.config.as_dict(),
                'label': self.label.as_dict(), 'signature': self.signature.as_dict(),
                'steady': self.result.steady, 'steps': self.result.steps,
                'convergence_time': self.result.t_final, 'final_rate': self.result.rate,
                'min_density': self.result.min_density, 'matches_expected': self.matches_expected}

    def snapshot_frames(self) -> Dict[str, pd.DataFrame]:
        frames = {}
        rows = []
        for index, state in enumerate(self.result.history):
            name = f'snapshot_{index:05d}.csv'
            frames[name] = pd.DataFrame({'x': self.x, 'u': state.u, 'v': state.v})
            rows.append({'t_index': index, 't': state.t, 'file': name})
        frames['t_index.csv'] = pd.DataFrame(rows, columns=['t_index', 't', 'file'])
        return frames


def run_scenario(scenario: Scenario, config: Optional[SimConfig] = None,
                 K_sig: int = Config.K_SIG, reflect: bool = False) -> ScenarioRun:
    config = config or SimConfig()
    if scenario.config:
        unknown = sorted(set(scenario.config) - set(config.as_dict()))
        if unknown:
            raise InvalidConfig(f"unknown simulation setting '{unknown[0]}'", key=unknown[0])
        config = replace(config, **scenario.config)
    grid = Grid1D(config.N, scenario.params.l)
    model = CrowleyMartin(scenario.params)
    u0, v0 = scenario.initial_fields(grid.x)
    initial = FieldState(0.0, u0, v0)
    if reflect:
        initial = initial.reflected()

    result = integrate(scenario.params, config, initial, model=model)
    signature = modal_signature(result.final, model.equilibrium(), K_sig)
    label = classify_attractor(signature, result.steady)
    logger.info('scenario %s -> %s (t=%g)', scenario.name, label, result.t_final)
    if scenario.expected is not None and not label.matches(scenario.expected):
        logger.warning('scenario %s reached %s, expected %s', scenario.name, label, scenario.expected)
    return ScenarioRun(scenario, config, result, signature, label, grid.x)


def amplitude_cross_check(label: AttractorLabel, nf_equilibria: Sequence, k1: int, k2: int,
                          epsilon: Tuple[float, float], tolerance: float = 0.25,
                          max_offset: float = 1e-3) -> Optional[Dict]:
    """
    Compare the cosine amplitude of a PureMode attractor with sqrt2 |z| of the
    matching axis equilibrium of the truncated normal form. Returns None when
    the check does not apply.
    """
    if label.kind != 'PureMode' or math.hypot(*epsilon) > max_offset:
        return None
    k = label.modes[0]
    if k not in (k1, k2):
        return None
    axis = 0 if k == k1 else 1
    candidates = [eq for eq in nf_equilibria
                  if abs(eq.z[1 - axis]) < 1e-12 and eq.z[axis] * label.sign > 0]
    if not candidates:
        return None
    predicted = math.sqrt(2.0) * abs(candidates[0].z[axis])
    simulated = math.sqrt(2.0) * abs(label.amplitudes[k])
    relative = abs(simulated - predicted) / predicted
    ok = relative <= tolerance
    if not ok:
        logger.warning('PureMode(%d) amplitude %.4g differs from normal form %.4g by %.0f%%',
                       k, simulated, predicted, 100 * relative)
    return {'mode': k, 'simulated': simulated, 'predicted': predicted, 'relative_error': relative, 'ok': ok}


# --- sweeps --------------------------------------------------------------

@dataclass
class SweepCell:
    d1: float
    s: float
    labels: List[str]
    attractors: List[str]
    n_blowup: int = 0
    n_nonstationary: int = 0


@dataclass
class EmpiricalMap:
    cells: List[SweepCell]

    def to_frame(self) -> pd.DataFrame:
        rows = [{'d1': c.d1, 's': c.s, 'n_runs': len(c.labels), 'n_distinct': len(c.attractors),
                 'attractors': ';'.join(c.attractors), 'n_blowup': c.n_blowup,
                 'n_nonstationary': c.n_nonstationary} for c in self.cells]
        return pd.DataFrame(rows, columns=['d1', 's', 'n_runs', 'n_distinct', 'attractors',
                                           'n_blowup', 'n_nonstationary'])


def _sweep_task(task):
    params, coeffs_u, coeffs_v, config, K_sig = task
    model = CrowleyMartin(params)
    eq = model.equilibrium()
    scenario = Scenario('sweep', params, (eq.u_star, eq.v_star), coeffs_u, coeffs_v)
    grid = Grid1D(config.N, params.l)
    u0, v0 = scenario.initial_fields(grid.x)
    try:
        result = integrate(params, config, FieldState(0.0, u0, v0), model=model)
    except BlowUp:
        return 'BlowUp', None
    signature = modal_signature(result.final, eq, K_sig)
    return str(classify_attractor(signature, result.steady)), signature if result.steady else None


def _distinct_attractors(outcomes) -> List[str]:
    kept: List[Tuple[str, ModalSignature]] = []
    for label, signature in outcomes:
        if signature is None:
            continue
        if all(distinct(signature, other) for _, other in kept):
            kept.append((label, signature))
    return sorted(label for label, _ in kept)


def sweep(params: ModelParams, d1_values: Sequence[float], s_values: Sequence[float],
          ensemble: Sequence[Tuple[Dict[int, float], Dict[int, float]]],
          config: Optional[SimConfig] = None, jobs: int = 1, K_sig: int = Config.K_SIG) -> EmpiricalMap:
    """Attractor census per (d1, s) cell from every initial perturbation of the ensemble."""
    if len(d1_values) == 0 or len(s_values) == 0:
        raise InvalidGrid('sweep grid is empty', n_d1=len(d1_values), n_s=len(s_values))
    if len(ensemble) == 0:
        raise InvalidGrid('initial-condition ensemble is empty')
    config = config or SimConfig()
    points = [(float(d1), float(s)) for d1 in d1_values for s in s_values]
    tasks = [(params.with_bifurcation(d1, s), cu, cv, config, K_sig) for d1, s in points for cu, cv in ensemble]

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_sweep_task, tasks))
    else:
        outcomes = [_sweep_task(task) for task in tasks]

    cells = []
    per_cell = len(ensemble)
    for index, (d1, s) in enumerate(points):
        chunk = outcomes[index * per_cell:(index + 1) * per_cell]
        labels = [label for label, _ in chunk]
        cells.append(SweepCell(d1=d1, s=s, labels=labels, attractors=_distinct_attractors(chunk),
                               n_blowup=labels.count('BlowUp'),
                               n_nonstationary=labels.count('NonStationary')))
        logger.info('sweep cell (%g, %g): %s', d1, s, cells[-1].attractors)
    return EmpiricalMap(cells)
