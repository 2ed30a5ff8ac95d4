#!/usr/bin/env python3
"""
Linear stability of the interior equilibrium under diffusion: dispersion
relation, Turing curves, Turing-Turing points, the critical mode index,
critical eigenvectors and the spectral side conditions.

Mode k enters through the Neumann Laplacian eigenvalue mu_k = k^2 / l^2.
The closed forms assume the predator row of the linear part is (s, -s),
which holds for every Leslie-Gower type predator equation.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from config import Config
from errors import (DomainError, HypothesisViolated, NegativeCritical,
                    SideConditionFailed, SingularNormalizer)
from kinetics import CrowleyMartin, Equilibrium, ModelParams, ReactionModel

logger = logging.getLogger(__name__)

PREDATOR_ROW_TOL = 1e-8
TT_RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class Linearization:
    s0: float
    sigma: float
    s: float
    equilibrium: Equilibrium

    @property
    def L0(self) -> np.ndarray:
        return self.matrix(self.s)

    def matrix(self, s: float) -> np.ndarray:
        """Linear part [[s0, sigma], [s, -s]] at predator growth rate s."""
        return np.array([[self.s0, self.sigma], [s, -s]])

    def as_dict(self) -> Dict:
        return {'s0': self.s0, 'sigma': self.sigma,
                'u_star': self.equilibrium.u_star, 'v_star': self.equilibrium.v_star}


@dataclass(frozen=True)
class DispersionPoint:
    k: int
    theta: float
    delta: float


@dataclass(frozen=True)
class TTPoint:
    k1: int
    k2: int
    d_star: float
    s_star: float

    def as_dict(self) -> Dict:
        return {'k1': self.k1, 'k2': self.k2, 'd_star': self.d_star, 's_star': self.s_star}


@dataclass(frozen=True)
class TuringCurve:
    k: int
    d1: np.ndarray
    s: np.ndarray
    s0: float
    sigma: float
    d2: float
    l: float = 1.0

    @property
    def mu(self) -> float:
        return self.k ** 2 / self.l ** 2

    def evaluate(self, d1: float) -> float:
        return _turing_s(self.s0, self.sigma, self.d2, self.mu, d1)


@dataclass
class CriticalData:
    tt: TTPoint
    phi1: np.ndarray
    phi2: np.ndarray
    psi1: np.ndarray
    psi2: np.ndarray
    mu1: float
    mu2: float
    D0: np.ndarray
    L0: np.ndarray
    l: float = 1.0

    def mu(self, k: int) -> float:
        return k ** 2 / self.l ** 2

    def char_matrix(self, k: int) -> np.ndarray:
        """Delta(0, mu_k) = mu_k D0 - L0."""
        return self.mu(k) * self.D0 - self.L0

    def as_dict(self) -> Dict:
        return {'phi1': self.phi1.tolist(), 'phi2': self.phi2.tolist(),
                'psi1': self.psi1.tolist(), 'psi2': self.psi2.tolist(),
                'mu1': self.mu1, 'mu2': self.mu2}


@dataclass
class SpectrumReport:
    k1: int
    k2: int
    k_cut: int
    zero_modes: List[int] = field(default_factory=list)
    offending_modes: List[int] = field(default_factory=list)
    margin: float = float('nan')
    max_real: Dict[int, float] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.offending_modes and sorted(self.zero_modes) == [self.k1, self.k2]

    def as_dict(self) -> Dict:
        return {'k1': self.k1, 'k2': self.k2, 'k_cut': self.k_cut, 'ok': self.ok,
                'zero_modes': self.zero_modes, 'offending_modes': self.offending_modes,
                'margin': self.margin}


def linearize(params: ModelParams, eq: Optional[Equilibrium] = None,
              model: Optional[ReactionModel] = None) -> Linearization:
    """s0, sigma and the linear part at the interior equilibrium."""
    model = model or CrowleyMartin(params)
    eq = eq or model.equilibrium()
    J = model.jacobian(eq.u_star, eq.v_star)
    if abs(J[1, 0] - params.s) > PREDATOR_ROW_TOL or abs(J[1, 1] + params.s) > PREDATOR_ROW_TOL:
        raise HypothesisViolated('linear part must have predator row (s, -s)',
                                 row=J[1].tolist(), s=params.s)
    return Linearization(s0=float(J[0, 0]), sigma=float(J[0, 1]), s=params.s, equilibrium=eq)


def dispersion(params: ModelParams, lin: Linearization, k: int) -> DispersionPoint:
    mu = k ** 2 / params.l ** 2
    theta = lin.s0 - params.s - (params.d1 + params.d2) * mu
    delta = params.d1 * params.d2 * mu ** 2 + (params.s * params.d1 - lin.s0 * params.d2) * mu \
        - params.s * (lin.s0 + lin.sigma)
    return DispersionPoint(k=k, theta=theta, delta=delta)


def dispersion_table(params: ModelParams, lin: Linearization, k_max: int) -> pd.DataFrame:
    rows = []
    for k in range(k_max + 1):
        point = dispersion(params, lin, k)
        rows.append({'k': k, 'd1': params.d1, 's': params.s,
                     'theta': point.theta, 'delta': point.delta})
    return pd.DataFrame(rows, columns=['k', 'd1', 's', 'theta', 'delta'])


def _turing_s(s0: float, sigma: float, d2: float, mu: float, d1: float) -> float:
    return (s0 * d2 * mu - d1 * d2 * mu ** 2) / (d1 * mu - (s0 + sigma))


def turing_curve(params: ModelParams, lin: Linearization, k: int,
                 d1_values: Optional[Sequence[float]] = None, samples: int = 100) -> TuringCurve:
    """The curve Delta(k) = 0 as s = s_k(d1), valid for 0 < d1 < s0 / mu_k."""
    if k < 1:
        raise DomainError('Turing curves exist for k >= 1 only', k=k)
    mu = k ** 2 / params.l ** 2
    upper = lin.s0 / mu
    if upper <= 0:
        raise DomainError(f'mode {k} has an empty validity window (s0 <= 0)', k=k)

    if d1_values is None:
        d1 = np.linspace(0.0, upper, samples + 2)[1:-1]
    else:
        d1 = np.asarray(d1_values, dtype=float)
        bad = d1[(d1 <= 0) | (d1 >= upper)]
        if bad.size:
            raise DomainError(f'd1 = {bad[0]:g} outside (0, {upper:g}) for mode {k}',
                              k=k, d1=float(bad[0]))
    s = _turing_s(lin.s0, lin.sigma, params.d2, mu, d1)
    return TuringCurve(k=k, d1=d1, s=s, s0=lin.s0, sigma=lin.sigma, d2=params.d2, l=params.l)


def turing_curves_table(params: ModelParams, lin: Linearization, modes: Sequence[int],
                        samples: int = 100) -> pd.DataFrame:
    frames = []
    for k in sorted(modes):
        curve = turing_curve(params, lin, k, samples=samples)
        mu = curve.mu
        theta = lin.s0 - curve.s - (curve.d1 + params.d2) * mu
        delta = curve.d1 * params.d2 * mu ** 2 + (curve.s * curve.d1 - lin.s0 * params.d2) * mu \
            - curve.s * (lin.s0 + lin.sigma)
        frames.append(pd.DataFrame({'k': k, 'd1': curve.d1, 's': curve.s,
                                    'theta': theta, 'delta': delta}))
    return pd.concat(frames, ignore_index=True)


def _check_turing_hypotheses(lin: Linearization):
    if lin.s0 <= 0:
        raise HypothesisViolated('Turing-Turing analysis requires s0 > 0', s0=lin.s0)
    if lin.s0 + lin.sigma >= 0:
        raise HypothesisViolated('Turing-Turing analysis requires s0+sigma < 0',
                                 s0=lin.s0, sigma=lin.sigma)


def tt_point(params: ModelParams, lin: Linearization, i: int, j: int) -> TTPoint:
    """Closed-form intersection of the Turing curves of modes i and j."""
    _check_turing_hypotheses(lin)
    if i == j or i < 1 or j < 1:
        raise HypothesisViolated('modes must be distinct positive integers', i=i, j=j)
    k1, k2 = sorted((i, j))
    mu1, mu2 = k1 ** 2 / params.l ** 2, k2 ** 2 / params.l ** 2
    r = lin.s0 + lin.sigma

    disc = (mu1 + mu2) ** 2 * r ** 2 - 4 * mu1 * mu2 * r * lin.s0
    d_star = ((mu1 + mu2) * r + math.sqrt(disc)) / (2 * mu1 * mu2)
    if d_star <= 0:
        raise NegativeCritical(f'critical diffusion d* = {d_star:g} is not positive', d_star=d_star)
    s_star = _turing_s(lin.s0, lin.sigma, params.d2, mu1, d_star)
    if s_star <= 0:
        raise NegativeCritical(f'critical rate s* = {s_star:g} is not positive', s_star=s_star)

    point = TTPoint(k1=k1, k2=k2, d_star=d_star, s_star=s_star)
    at_point = params.with_bifurcation(d_star, s_star)
    for k in (k1, k2):
        residual = dispersion(at_point, lin, k).delta
        if abs(residual) > TT_RESIDUAL_TOL:
            logger.warning('Delta(%d) = %.3e at the TT point exceeds %.0e', k, residual, TT_RESIDUAL_TOL)
    logger.info('(%d,%d)-mode TT point d*=%.8g s*=%.8g', k1, k2, d_star, s_star)
    return point


def critical_diffusion(params: ModelParams, lin: Linearization, k: int) -> float:
    """d_k* = (s0 / mu_k)(1 + sigma / (d2 mu_k + s0))."""
    mu = k ** 2 / params.l ** 2
    return (lin.s0 / mu) * (1 + lin.sigma / (params.d2 * mu + lin.s0))


def critical_mode_index(params: ModelParams, lin: Linearization, k_cut: int = Config.K_CUT) -> int:
    """Largest k attaining max d_k* over k = 1..k_cut."""
    _check_turing_hypotheses(lin)
    best_k, best_d = 1, critical_diffusion(params, lin, 1)
    for k in range(2, k_cut + 1):
        d = critical_diffusion(params, lin, k)
        if d >= best_d:
            best_k, best_d = k, d
    return best_k


def critical_eigenvectors(tt: TTPoint, lin: Linearization, params: ModelParams) -> CriticalData:
    s_star, d_star, d2 = tt.s_star, tt.d_star, params.d2
    vectors = []
    for k in (tt.k1, tt.k2):
        mu = k ** 2 / params.l ** 2
        phi = np.array([1.0, s_star / (d2 * mu + s_star)])
        normalizer = 1 + (d_star * mu - lin.s0) / (d2 * mu + s_star)
        if abs(normalizer) < 1e-12:
            raise SingularNormalizer(f'normalizer for mode {k} vanishes', k=k)
        psi = np.array([1.0, (d_star * mu - lin.s0) / s_star]) / normalizer
        vectors.append((phi, psi, mu))

    (phi1, psi1, mu1), (phi2, psi2, mu2) = vectors
    return CriticalData(tt=tt, phi1=phi1, phi2=phi2, psi1=psi1, psi2=psi2, mu1=mu1, mu2=mu2,
                        D0=np.diag([d_star, d2]), L0=lin.matrix(s_star), l=params.l)


def spectrum_check(tt: TTPoint, lin: Linearization, params: ModelParams,
                   k_cut: int = Config.K_CUT, strict: bool = False) -> SpectrumReport:
    """
    Scan modes 0..k_cut at (d*, s*): modes k1, k2 must carry exactly one
    zero eigenvalue each, every other eigenvalue must have negative real part.
    """
    D0 = np.diag([tt.d_star, params.d2])
    L0 = lin.matrix(tt.s_star)
    report = SpectrumReport(k1=tt.k1, k2=tt.k2, k_cut=k_cut)
    margin = math.inf

    for k in range(k_cut + 1):
        mu = k ** 2 / params.l ** 2
        eigenvalues = np.linalg.eigvals(L0 - mu * D0)
        zero = np.abs(eigenvalues) < Config.ZERO_EIG_TOL
        report.max_real[k] = float(np.max(eigenvalues.real))
        if np.any(zero):
            report.zero_modes.append(k)
            if k not in (tt.k1, tt.k2) or np.count_nonzero(zero) > 1:
                report.offending_modes.append(k)
        rest = eigenvalues[~zero].real
        if rest.size:
            worst = float(np.max(rest))
            if worst >= -1e-10 and k not in report.offending_modes:
                report.offending_modes.append(k)
            margin = min(margin, -worst)

    for k in (tt.k1, tt.k2):
        if k not in report.zero_modes and k not in report.offending_modes:
            report.offending_modes.append(k)
    report.offending_modes.sort()
    report.margin = margin

    if not report.ok:
        logger.warning('spectral side conditions fail at modes %s', report.offending_modes)
        if strict:
            raise SideConditionFailed(f'side conditions fail at modes {report.offending_modes}',
                                      modes=report.offending_modes)
    return report
