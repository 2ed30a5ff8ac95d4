#!/usr/bin/env python3
"""
Two-component reaction kinetics: parameters, interior equilibrium and the
derivative structures (Jacobian, bilinear Q, trilinear C, parameter
derivatives) used by the linear analysis and the normal-form computation.

The built-in model is the Crowley-Martin predator-prey system

    f(u, v) = u(1 - u) - m u v / ((1 + a u)(1 + b v))
    g(u, v) = s v (1 - v / u)

User models subclass ReactionModel and only supply `reaction`; the derivative
structures then fall back to Richardson-extrapolated finite differences.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, asdict, replace
from typing import Callable, Dict, Tuple

import numpy as np
from scipy import optimize

from errors import (ExistenceConditionViolated, InvalidModelFile, ModelError,
                    NoInteriorEquilibrium, RootFindingFailed)

logger = logging.getLogger(__name__)

PARAM_KEYS = ('m', 'a', 'b', 's', 'd1', 'd2', 'l')
EQUILIBRIUM_TOL = 1e-12
FD_STEP = 1e-4
FD_STEP_CUBIC = 5e-3


@dataclass(frozen=True)
class ModelParams:
    m: float
    a: float
    b: float
    s: float
    d1: float
    d2: float
    l: float = 1.0

    def __post_init__(self):
        for key in PARAM_KEYS:
            value = getattr(self, key)
            if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
                raise ModelError(f"parameter '{key}' must be a finite number", key=key)
        for key in ('s', 'd1', 'd2', 'l'):
            if getattr(self, key) <= 0:
                raise ModelError(f"parameter '{key}' must be positive", key=key)
        for key in ('m', 'a', 'b'):
            if getattr(self, key) < 0:
                raise ModelError(f"parameter '{key}' must be non-negative", key=key)

    @classmethod
    def from_dict(cls, data: Dict) -> 'ModelParams':
        if not isinstance(data, dict):
            raise InvalidModelFile('model document must be a JSON object')
        unknown = sorted(set(data) - set(PARAM_KEYS))
        if unknown:
            raise InvalidModelFile(f"unknown model key '{unknown[0]}'", key=unknown[0])
        missing = [key for key in PARAM_KEYS[:-1] if key not in data]
        if missing:
            raise InvalidModelFile(f"missing model key '{missing[0]}'", key=missing[0])
        values = {}
        for key, value in data.items():
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise InvalidModelFile(f"model key '{key}' must be a number", key=key)
            values[key] = float(value)
        return cls(**values)

    @classmethod
    def from_json(cls, path: str) -> 'ModelParams':
        try:
            with open(path, 'r') as f:
                data = json.load(f)
        except FileNotFoundError:
            raise InvalidModelFile(f'model file not found: {path}', path=path)
        except json.JSONDecodeError as e:
            raise InvalidModelFile(f'model file is not valid JSON: {e}', path=path)
        return cls.from_dict(data)

    def to_dict(self) -> Dict:
        return asdict(self)

    def with_bifurcation(self, d1: float, s: float) -> 'ModelParams':
        """Same kinetics at another point of the (d1, s) plane."""
        return replace(self, d1=float(d1), s=float(s))

    @property
    def existence_condition(self) -> bool:
        return self.a + self.b >= self.a * self.b


@dataclass(frozen=True)
class Equilibrium:
    u_star: float
    v_star: float

    def as_array(self) -> np.ndarray:
        return np.array([self.u_star, self.v_star])


def _unit(x):
    x = np.asarray(x, dtype=float)
    norm = float(np.linalg.norm(x))
    return (x / norm if norm else x), norm


def _sorted_args(*vectors):
    # canonical argument order makes the polarized forms exactly symmetric
    arrays = [np.asarray(vec, dtype=float) for vec in vectors]
    return sorted(arrays, key=lambda vec: tuple(vec.tolist()))


class ReactionModel:
    """
    Generic two-component kinetics. Subclasses implement `reaction`; the
    Jacobian, Q and C default to central differences with Richardson
    extrapolation around the stored equilibrium.
    """

    name = 'generic'

    def __init__(self, params: ModelParams):
        self.params = params
        self._equilibrium = None

    # --- reaction field ---

    def reaction(self, u, v) -> np.ndarray:
        raise NotImplementedError

    def field(self, w: np.ndarray) -> np.ndarray:
        return np.asarray(self.reaction(w[0], w[1]), dtype=float)

    def at(self, d1: float, s: float) -> 'ReactionModel':
        """A model of the same family at another (d1, s)."""
        return type(self)(self.params.with_bifurcation(d1, s))

    # --- equilibrium ---

    def equilibrium(self) -> Equilibrium:
        if self._equilibrium is None:
            self._equilibrium = self.find_equilibrium()
        return self._equilibrium

    def find_equilibrium(self, guess=(0.5, 0.5)) -> Equilibrium:
        solution = optimize.root(self.field, np.asarray(guess, dtype=float), tol=1e-14)
        residual = np.max(np.abs(self.field(solution.x)))
        if not solution.success or residual > EQUILIBRIUM_TOL or np.any(solution.x <= 0):
            raise NoInteriorEquilibrium(
                f'no interior equilibrium found from guess {tuple(guess)}',
                residual=float(residual))
        return Equilibrium(float(solution.x[0]), float(solution.x[1]))

    # --- derivative structures ---

    def jacobian(self, u: float, v: float) -> np.ndarray:
        point = np.array([u, v], dtype=float)

        def central(h):
            columns = []
            for j in range(2):
                e = np.zeros(2)
                e[j] = h
                columns.append((self.field(point + e) - self.field(point - e)) / (2 * h))
            return np.column_stack(columns)

        return (4 * central(FD_STEP / 2) - central(FD_STEP)) / 3

    def quadratic_diagonal(self, x: np.ndarray) -> np.ndarray:
        """Q(x, x): second directional derivative of the field at E*."""
        x, norm = _unit(x)
        if norm == 0:
            return np.zeros(2)
        center = self.equilibrium().as_array()
        f0 = self.field(center)

        def second(h):
            return (self.field(center + h * x) - 2 * f0 + self.field(center - h * x)) / h ** 2

        return norm ** 2 * (4 * second(FD_STEP / 2) - second(FD_STEP)) / 3

    def cubic_diagonal(self, x: np.ndarray) -> np.ndarray:
        """C(x, x, x): third directional derivative of the field at E*."""
        x, norm = _unit(x)
        if norm == 0:
            return np.zeros(2)
        center = self.equilibrium().as_array()

        def third(h):
            return (self.field(center + 2 * h * x) - 2 * self.field(center + h * x)
                    + 2 * self.field(center - h * x) - self.field(center - 2 * h * x)) / (2 * h ** 3)

        return norm ** 3 * (4 * third(FD_STEP_CUBIC / 2) - third(FD_STEP_CUBIC)) / 3

    def quadratic_form(self, x, y) -> np.ndarray:
        """Symmetric bilinear Q(x, y) by polarization of Q(x, x)."""
        x, y = _sorted_args(x, y)
        q = self.quadratic_diagonal
        return 0.5 * (q(x + y) - (q(x) + q(y)))

    def cubic_form(self, x, y, z) -> np.ndarray:
        """Symmetric trilinear C(x, y, z) by polarization of C(x, x, x)."""
        x, y, z = _sorted_args(x, y, z)
        c = self.cubic_diagonal
        total = c(x + y + z) - (c(x + y) + c(x + z) + c(y + z)) + (c(x) + c(y) + c(z))
        return total / 6.0

    def linear_part(self) -> np.ndarray:
        eq = self.equilibrium()
        return self.jacobian(eq.u_star, eq.v_star)

    def parameter_derivatives(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """
        (L_eps1, L_eps2, D_eps1, D_eps2) for the bifurcation parameters
        d1 = d* + eps1 and s = s* + eps2.
        """
        h = FD_STEP * max(1.0, self.params.s)
        upper = self.at(self.params.d1, self.params.s + h).linear_part()
        lower = self.at(self.params.d1, self.params.s - h).linear_part()
        L_eps2 = (upper - lower) / (2 * h)
        return np.zeros((2, 2)), L_eps2, np.diag([1.0, 0.0]), np.zeros((2, 2))


class CrowleyMartin(ReactionModel):
    """Crowley-Martin predator-prey kinetics with closed-form derivatives."""

    name = 'crowley-martin'

    def reaction(self, u, v) -> np.ndarray:
        p = self.params
        predation = p.m * u * v / ((1 + p.a * u) * (1 + p.b * v))
        return np.array([u * (1 - u) - predation, p.s * v * (1 - v / u)])

    def prey_balance(self, u: float) -> float:
        """Prey nullcline residual with v = u substituted."""
        p = self.params
        return 1 - u - p.m * u / ((1 + p.a * u) * (1 + p.b * u))

    def _prey_balance_prime(self, u: float) -> float:
        p = self.params
        A, B = 1 + p.a * u, 1 + p.b * u
        return -1 - p.m * (1 - p.a * p.b * u * u) / (A * B) ** 2

    def find_equilibrium(self, guess=None) -> Equilibrium:
        p = self.params
        if p.m == 0:
            return Equilibrium(1.0, 1.0)

        lo, hi = 1e-12, 1.0
        f_lo, f_hi = self.prey_balance(lo), self.prey_balance(hi)
        if f_lo * f_hi > 0:
            if not p.existence_condition:
                raise ExistenceConditionViolated(
                    'a + b >= ab fails and no interior equilibrium exists',
                    a=p.a, b=p.b)
            raise NoInteriorEquilibrium('prey balance has no sign change on (0, 1)')

        u = optimize.bisect(self.prey_balance, lo, hi, xtol=1e-10)
        try:
            u = optimize.newton(self.prey_balance, u, fprime=self._prey_balance_prime,
                                tol=1e-15, maxiter=50)
        except RuntimeError as e:
            raise RootFindingFailed(f'Newton polish of the equilibrium failed: {e}')

        residual = np.max(np.abs(self.reaction(u, u)))
        if residual > EQUILIBRIUM_TOL:
            raise RootFindingFailed('equilibrium residual above tolerance', residual=float(residual))
        if not p.existence_condition:
            logger.warning('existence condition a + b >= ab fails (a=%s, b=%s) '
                           'but an interior equilibrium was found', p.a, p.b)
        return Equilibrium(float(u), float(u))

    def jacobian(self, u: float, v: float) -> np.ndarray:
        p = self.params
        A, B = 1 + p.a * u, 1 + p.b * v
        return np.array([
            [1 - 2 * u - p.m * v / (A ** 2 * B), -p.m * u / (A * B ** 2)],
            [p.s * v ** 2 / u ** 2, p.s - 2 * p.s * v / u]
        ])

    def _second_derivatives(self):
        p = self.params
        eq = self.equilibrium()
        u, v = eq.u_star, eq.v_star
        A, B = 1 + p.a * u, 1 + p.b * v
        f = (-2 + 2 * p.a * p.m * v / (A ** 3 * B),
             -p.m / (A ** 2 * B ** 2),
             2 * p.m * p.b * u / (A * B ** 3))
        g = (-2 * p.s * v ** 2 / u ** 3,
             2 * p.s * v / u ** 2,
             -2 * p.s / u)
        return f, g

    def _third_derivatives(self):
        p = self.params
        eq = self.equilibrium()
        u, v = eq.u_star, eq.v_star
        A, B = 1 + p.a * u, 1 + p.b * v
        f = (-6 * p.m * p.a ** 2 * v / (A ** 4 * B),
             2 * p.a * p.m / (A ** 3 * B ** 2),
             2 * p.m * p.b / (A ** 2 * B ** 3),
             -6 * p.m * p.b ** 2 * u / (A * B ** 4))
        g = (6 * p.s * v ** 2 / u ** 4,
             -4 * p.s * v / u ** 3,
             2 * p.s / u ** 2,
             0.0)
        return f, g

    def quadratic_diagonal(self, x: np.ndarray) -> np.ndarray:
        x1, x2 = x
        rows = self._second_derivatives()
        return np.array([uu * x1 * x1 + 2 * uv * x1 * x2 + vv * x2 * x2 for uu, uv, vv in rows])

    def cubic_diagonal(self, x: np.ndarray) -> np.ndarray:
        x1, x2 = x
        rows = self._third_derivatives()
        return np.array([uuu * x1 ** 3 + 3 * uuv * x1 ** 2 * x2 + 3 * uvv * x1 * x2 ** 2 + vvv * x2 ** 3
                         for uuu, uuv, uvv, vvv in rows])

    def parameter_derivatives(self):
        L_eps2 = np.array([[0.0, 0.0], [1.0, -1.0]])
        return np.zeros((2, 2)), L_eps2, np.diag([1.0, 0.0]), np.zeros((2, 2))


MODEL_REGISTRY: Dict[str, Callable[[ModelParams], ReactionModel]] = {
    CrowleyMartin.name: CrowleyMartin,
}


def build_model(params: ModelParams, name: str = CrowleyMartin.name) -> ReactionModel:
    try:
        return MODEL_REGISTRY[name](params)
    except KeyError:
        raise ModelError(f"unknown kinetics '{name}'", name=name)


def find_interior_equilibrium(params: ModelParams) -> Equilibrium:
    return CrowleyMartin(params).equilibrium()


def quadratic_form(eq: Equilibrium, params: ModelParams):
    """Q of the built-in model at `eq` as a two-argument callable."""
    model = _model_at(eq, params)
    return model.quadratic_form


def cubic_form(eq: Equilibrium, params: ModelParams):
    model = _model_at(eq, params)
    return model.cubic_form


def parameter_derivatives(params: ModelParams):
    return CrowleyMartin(params).parameter_derivatives()


def _model_at(eq: Equilibrium, params: ModelParams) -> CrowleyMartin:
    model = CrowleyMartin(params)
    model._equilibrium = eq
    return model
