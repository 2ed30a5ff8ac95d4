#!/usr/bin/env python3
"""
Third-order normal form coefficients at a Turing-Turing point.

The coefficient set depends on the spatial resonance of the critical pair
(k1, k2): generic, 1:2 (quadratic terms appear) or 1:3 (extra cubic cross
terms appear). Center-manifold blocks are evaluated at theta = 0; for
reaction-diffusion systems the nonlinear terms act on present values only.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from errors import (BorderedSolveFailed, InvalidModePair, NonFiniteCoefficient,
                    UnexpectedSingularity)
from kinetics import ReactionModel
from linear_analysis import CriticalData, TTPoint

logger = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)
CONDITION_LIMIT = 1e12

LINEAR_KEYS = ('g1010_11', 'g1001_11', 'g0110_12', 'g0101_12')
DISPLAY_FACTORS = {
    'g1010_11': 1.0, 'g1001_11': 1.0, 'g0110_12': 1.0, 'g0101_12': 1.0,
    'g1100_11': 1.0, 'g2000_12': 0.5,
    'g3000_11': 1.0 / 6, 'g1200_11': 0.5, 'g2100_12': 0.5, 'g0300_12': 1.0 / 6,
    'g2100_11': 0.5, 'g3000_12': 1.0 / 6,
}


class ResonanceCase(str, enum.Enum):
    GENERIC = 'Generic'
    ONE_TWO = 'OneTwo'
    ONE_THREE = 'OneThree'


def classify_resonance(k1: int, k2: int) -> ResonanceCase:
    if not (isinstance(k1, int) and isinstance(k2, int)) or k1 < 1 or k2 <= k1:
        raise InvalidModePair(f'mode pair must satisfy k2 > k1 >= 1, got ({k1}, {k2})', k1=k1, k2=k2)
    if k2 == 2 * k1:
        return ResonanceCase.ONE_TWO
    if k2 == 3 * k1:
        return ResonanceCase.ONE_THREE
    return ResonanceCase.GENERIC


@dataclass
class CenterManifoldBlocks:
    h_2000_0: np.ndarray
    h_0200_0: np.ndarray
    h_2000_2k1: np.ndarray
    h_0200_2k2: np.ndarray
    h_1100_diff: np.ndarray
    h_1100_sum: np.ndarray

    def as_dict(self) -> Dict:
        return {name: value.tolist() for name, value in vars(self).items()}


@dataclass
class NFCoefficients:
    case: ResonanceCase
    lin: np.ndarray
    quad: Dict[str, float] = field(default_factory=dict)
    cubic: Dict[str, float] = field(default_factory=dict)
    tt: Optional[TTPoint] = None

    def raw(self) -> Dict[str, float]:
        values = dict(zip(LINEAR_KEYS, self.lin.ravel().tolist()))
        values.update(self.quad)
        values.update(self.cubic)
        return values

    def display(self) -> Dict[str, float]:
        """Polynomial coefficients as they appear in the truncated field."""
        return {key: value * DISPLAY_FACTORS[key] for key, value in self.raw().items()}

    def get(self, key: str) -> float:
        """Display coefficient, zero when the term is absent for this case."""
        return self.display().get(key, 0.0)

    def as_dict(self) -> Dict:
        payload = {'case': self.case.value, 'raw': self.raw(), 'display': self.display()}
        if self.tt is not None:
            payload['provenance'] = self.tt.as_dict()
        return payload

    @classmethod
    def from_display(cls, case: ResonanceCase, display: Dict[str, float],
                     tt: Optional[TTPoint] = None) -> 'NFCoefficients':
        """Rebuild raw coefficients from printed polynomial coefficients."""
        raw = {key: value / DISPLAY_FACTORS[key] for key, value in display.items()}
        lin = np.array([[raw.pop('g1010_11'), raw.pop('g1001_11')],
                        [raw.pop('g0110_12'), raw.pop('g0101_12')]])
        quad = {key: raw.pop(key) for key in ('g1100_11', 'g2000_12') if key in raw}
        return cls(case=case, lin=lin, quad=quad, cubic=raw, tt=tt)


def solve_block_nonresonant(k: int, rhs: np.ndarray, critical: CriticalData) -> np.ndarray:
    matrix = critical.char_matrix(k)
    condition = np.linalg.cond(matrix)
    if not np.isfinite(condition) or condition > CONDITION_LIMIT:
        raise UnexpectedSingularity(f'Delta(0, mu_{k}) is singular (cond={condition:.3e})',
                                    k=k, condition=float(condition))
    return np.linalg.solve(matrix, rhs)


def solve_block_resonant(j: int, rhs: np.ndarray, critical: CriticalData) -> np.ndarray:
    """
    Solve Delta(0, mu_kj) h = rhs under psi_j h = 0 through the bordered
    system [[Delta, phi_j], [psi_j, 0]] [h; lam] = [rhs; 0]. `rhs` must
    already be projected off phi_j.
    """
    if j not in (1, 2):
        raise InvalidModePair(f'critical index must be 1 or 2, got {j}', j=j)
    k = critical.tt.k1 if j == 1 else critical.tt.k2
    phi = critical.phi1 if j == 1 else critical.phi2
    psi = critical.psi1 if j == 1 else critical.psi2

    bordered = np.zeros((3, 3))
    bordered[:2, :2] = critical.char_matrix(k)
    bordered[:2, 2] = phi
    bordered[2, :2] = psi
    condition = np.linalg.cond(bordered)
    if not np.isfinite(condition) or condition > CONDITION_LIMIT:
        raise BorderedSolveFailed(f'bordered system for mode {k} is singular', k=k,
                                  condition=float(condition))
    solution = np.linalg.solve(bordered, np.append(rhs, 0.0))
    if abs(solution[2]) > 1e-10 * max(1.0, np.max(np.abs(rhs))):
        logger.warning('bordered solve for mode %d: multiplier %.3e, rhs not in range', k, solution[2])
    return solution[:2]


def _project_off(j: int, vector: np.ndarray, critical: CriticalData) -> np.ndarray:
    phi = critical.phi1 if j == 1 else critical.phi2
    psi = critical.psi1 if j == 1 else critical.psi2
    return vector - phi * (psi @ vector)


def center_manifold_blocks(case: ResonanceCase, critical: CriticalData,
                           model: ReactionModel) -> CenterManifoldBlocks:
    k1, k2 = critical.tt.k1, critical.tt.k2
    phi1, phi2 = critical.phi1, critical.phi2
    Q = model.quadratic_form
    q11, q22, q12 = Q(phi1, phi1), Q(phi2, phi2), Q(phi1, phi2)
    half = SQRT2 / 2

    blocks = dict(
        h_2000_0=solve_block_nonresonant(0, q11, critical),
        h_0200_0=solve_block_nonresonant(0, q22, critical),
        h_0200_2k2=solve_block_nonresonant(2 * k2, half * q22, critical),
        h_1100_sum=solve_block_nonresonant(k1 + k2, half * q12, critical),
    )
    if case is ResonanceCase.ONE_TWO:
        # 2k1 = k2 and k2 - k1 = k1 are critical
        blocks['h_2000_2k1'] = solve_block_resonant(2, half * _project_off(2, q11, critical), critical)
        blocks['h_1100_diff'] = solve_block_resonant(1, half * _project_off(1, q12, critical), critical)
    else:
        blocks['h_2000_2k1'] = solve_block_nonresonant(2 * k1, half * q11, critical)
        blocks['h_1100_diff'] = solve_block_nonresonant(k2 - k1, half * q12, critical)
    return CenterManifoldBlocks(**blocks)


def linear_coefficients(critical: CriticalData, model: ReactionModel) -> np.ndarray:
    L_eps1, L_eps2, D_eps1, D_eps2 = model.parameter_derivatives()
    lin = np.empty((2, 2))
    for row, (phi, psi, mu) in enumerate(((critical.phi1, critical.psi1, critical.mu1),
                                          (critical.phi2, critical.psi2, critical.mu2))):
        lin[row, 0] = psi @ (L_eps1 @ phi - mu * (D_eps1 @ phi))
        lin[row, 1] = psi @ (L_eps2 @ phi - mu * (D_eps2 @ phi))
    return lin


def compute_nf(tt: TTPoint, critical: CriticalData, model: ReactionModel) -> NFCoefficients:
    case = classify_resonance(tt.k1, tt.k2)
    model = model.at(tt.d_star, tt.s_star)
    Q, C = model.quadratic_form, model.cubic_form
    phi1, phi2, psi1, psi2 = critical.phi1, critical.phi2, critical.psi1, critical.psi2
    h = center_manifold_blocks(case, critical, model)

    cross = h.h_1100_diff + h.h_1100_sum
    cubic = {
        'g3000_11': 1.5 * psi1 @ C(phi1, phi1, phi1)
                    + 3 * psi1 @ Q(phi1, h.h_2000_0 + h.h_2000_2k1 / SQRT2),
        'g1200_11': psi1 @ C(phi1, phi2, phi2)
                    + (2 / SQRT2) * psi1 @ Q(phi2, cross)
                    + psi1 @ Q(phi1, h.h_0200_0),
        'g2100_12': psi2 @ C(phi1, phi1, phi2)
                    + (2 / SQRT2) * psi2 @ Q(phi1, cross)
                    + psi2 @ Q(phi2, h.h_2000_0),
        'g0300_12': 1.5 * psi2 @ C(phi2, phi2, phi2)
                    + 3 * psi2 @ Q(phi2, h.h_0200_0 + h.h_0200_2k2 / SQRT2),
    }
    quad = {}
    if case is ResonanceCase.ONE_TWO:
        quad['g1100_11'] = (SQRT2 / 2) * psi1 @ Q(phi1, phi2)
        quad['g2000_12'] = (SQRT2 / 2) * psi2 @ Q(phi1, phi1)
    elif case is ResonanceCase.ONE_THREE:
        # k2 - k1 = 2k1, so the difference blocks are the doubled-mode blocks.
        # h_2000_2k1 carries z1^2, so it pairs with phi2 in the z1^2 z2 term;
        # Q(phi1, h_2000_2k1) belongs to z1^3 and is already in g3000_11.
        cubic['g2100_11'] = 0.5 * psi1 @ C(phi1, phi1, phi2) \
            + (2 / SQRT2) * psi1 @ Q(phi1, h.h_1100_diff) \
            + (1 / SQRT2) * psi1 @ Q(phi2, h.h_2000_2k1)
        cubic['g3000_12'] = 0.5 * psi2 @ C(phi1, phi1, phi1) \
            + (3 / SQRT2) * psi2 @ Q(phi1, h.h_2000_2k1)

    coefficients = NFCoefficients(
        case=case,
        lin=linear_coefficients(critical, model),
        quad={key: float(value) for key, value in quad.items()},
        cubic={key: float(value) for key, value in cubic.items()},
        tt=tt,
    )
    bad = [key for key, value in coefficients.raw().items() if not math.isfinite(value)]
    if bad:
        raise NonFiniteCoefficient(f'non-finite normal form coefficients: {bad}', keys=bad)
    logger.info('%s normal form at (%d,%d): %s', case.value, tt.k1, tt.k2, coefficients.display())
    return coefficients
