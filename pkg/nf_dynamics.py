#!/usr/bin/env python3
"""
Phase analysis of the truncated planar normal form

    z1' = z1 (alpha + q1 z2 + c11 z1^2 + c12 z2^2 + e1 z1 z2)
    z2' = beta z2 + q2 z1^2 + c21 z1^2 z2 + c22 z2^3 + e2 z1^3

with alpha, beta linear in (eps1, eps2). q1, q2 are nonzero only at 1:2
resonance, e1, e2 only at 1:3 resonance.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from config import Config
from errors import (ContinuationStalled, DegenerateCubic, NotApplicable,
                    RootFindingFailed, StepSizeUnderflow)
from linear_analysis import TTPoint
from normal_form import NFCoefficients, ResonanceCase

logger = logging.getLogger(__name__)

STABILITY_MARGIN = 1e-10
RESIDUAL_TOL = 1e-12
DEDUP_RADIUS = 1e-9
NEWTON_MAXITER = 30
# branches stop this close to the (scaled) TT point
ORIGIN_RADIUS = 1e-2
FAMILY_ORDER = ('A0', 'A1', 'A2', 'A3', 'Mixed')

UNFOLDING_TABLE = {
    (1, 1, 1, 1): 'Ia', (1, 1, 1, -1): 'Ib', (1, 1, -1, 1): 'II', (1, -1, 1, 1): 'III',
    (1, -1, -1, 1): 'IVa', (1, -1, -1, -1): 'IVb', (-1, 1, 1, -1): 'V',
    (-1, 1, -1, 1): 'VIa', (-1, 1, -1, -1): 'VIb', (-1, -1, 1, 1): 'VIIa',
    (-1, -1, 1, -1): 'VIIb', (-1, -1, -1, -1): 'VIII',
}


@dataclass
class TruncatedNF:
    coefficients: NFCoefficients
    epsilon: Tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        c = self.coefficients.get
        eps1, eps2 = float(self.epsilon[0]), float(self.epsilon[1])
        self.epsilon = (eps1, eps2)
        self.alpha = c('g1010_11') * eps1 + c('g1001_11') * eps2
        self.beta = c('g0110_12') * eps1 + c('g0101_12') * eps2
        self.q1, self.q2 = c('g1100_11'), c('g2000_12')
        self.c11, self.c12 = c('g3000_11'), c('g1200_11')
        self.c21, self.c22 = c('g2100_12'), c('g0300_12')
        self.e1, self.e2 = c('g2100_11'), c('g3000_12')

    @property
    def case(self) -> ResonanceCase:
        return self.coefficients.case

    def with_epsilon(self, epsilon) -> 'TruncatedNF':
        return TruncatedNF(self.coefficients, tuple(epsilon))

    def rhs_scalar(self, z1: float, z2: float) -> Tuple[float, float]:
        f1 = z1 * (self.alpha + self.q1 * z2 + self.c11 * z1 * z1 + self.c12 * z2 * z2 + self.e1 * z1 * z2)
        f2 = (self.beta * z2 + self.q2 * z1 * z1 + self.c21 * z1 * z1 * z2
              + self.c22 * z2 ** 3 + self.e2 * z1 ** 3)
        return f1, f2

    def rhs(self, z) -> np.ndarray:
        return np.array(self.rhs_scalar(float(z[0]), float(z[1])))

    def jacobian(self, z) -> np.ndarray:
        z1, z2 = float(z[0]), float(z[1])
        return np.array([
            [self.alpha + self.q1 * z2 + 3 * self.c11 * z1 ** 2 + self.c12 * z2 ** 2 + 2 * self.e1 * z1 * z2,
             self.q1 * z1 + 2 * self.c12 * z1 * z2 + self.e1 * z1 ** 2],
            [2 * self.q2 * z1 + 2 * self.c21 * z1 * z2 + 3 * self.e2 * z1 ** 2,
             self.beta + self.c21 * z1 ** 2 + 3 * self.c22 * z2 ** 2]
        ])


@dataclass
class NFEquilibrium:
    z: Tuple[float, float]
    label: str
    eigenvalues: Tuple[complex, complex]
    stability: str

    @property
    def family(self) -> str:
        return label_family(self.label)

    def as_dict(self) -> Dict:
        return {'z1': self.z[0], 'z2': self.z[1], 'label': self.label, 'stability': self.stability,
                'eigenvalues': [[float(np.real(ev)), float(np.imag(ev))] for ev in self.eigenvalues]}


@dataclass
class UnfoldingClass:
    d0: int
    sign_b0: int
    sign_c0: int
    sign_dmb0c0: int
    case_label: str
    b0: float
    c0: float
    time_reversed: bool

    def as_dict(self) -> Dict:
        return {'case': self.case_label, 'b0': self.b0, 'c0': self.c0, 'd0': self.d0,
                'd0_minus_b0c0': self.d0 - self.b0 * self.c0,
                'signs': {'b0': self.sign_b0, 'c0': self.sign_c0, 'd0_minus_b0c0': self.sign_dmb0c0},
                'time_reversed': self.time_reversed}


def label_family(label: str) -> str:
    for family in ('A0', 'A1', 'A2', 'A3'):
        if label.startswith(family):
            return family
    return 'Mixed'


# --- equilibria ---------------------------------------------------------

def nf_stability(nf: TruncatedNF, point) -> Tuple[np.ndarray, str]:
    eigenvalues = np.linalg.eigvals(nf.jacobian(point))
    real = eigenvalues.real
    if np.all(real < -STABILITY_MARGIN):
        verdict = 'stable'
    elif np.all(real > STABILITY_MARGIN):
        verdict = 'unstable'
    elif np.min(real) < -STABILITY_MARGIN and np.max(real) > STABILITY_MARGIN:
        verdict = 'saddle'
    else:
        verdict = 'degenerate'
    order = np.lexsort((eigenvalues.imag, eigenvalues.real))
    return eigenvalues[order], verdict


def _polish(nf: TruncatedNF, seed) -> np.ndarray:
    seed = np.asarray(seed, dtype=float)
    z = seed.copy()
    for _ in range(NEWTON_MAXITER):
        residual = nf.rhs(z)
        if np.max(np.abs(residual)) < 1e-15:
            break
        try:
            z_next = z - np.linalg.solve(nf.jacobian(z), residual)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(z_next)):
            break
        z = z_next
    drift = np.max(np.abs(z - seed))
    if drift > 1e-6 * max(1.0, np.max(np.abs(seed))) or \
            np.max(np.abs(nf.rhs(z))) > np.max(np.abs(nf.rhs(seed))):
        z = seed
    residual = np.max(np.abs(nf.rhs(z)))
    if residual > RESIDUAL_TOL:
        raise RootFindingFailed(f'Newton polish stalled at z={z.tolist()} (residual {residual:.3e})',
                                z=z.tolist(), residual=float(residual), epsilon=list(nf.epsilon))
    return z


def _real_roots(coefficients: Sequence[float]) -> List[float]:
    coefficients = np.asarray(coefficients, dtype=float)
    nonzero = np.flatnonzero(np.abs(coefficients) > 1e-300)
    if nonzero.size == 0:
        return []
    coefficients = coefficients[nonzero[0]:]
    if coefficients.size == 1:
        return []
    roots = np.roots(coefficients)
    return [float(r.real) for r in roots if abs(r.imag) <= 1e-9 * max(1.0, abs(r))]


def _axis_candidates(nf: TruncatedNF) -> List[Tuple[str, Tuple[float, float]]]:
    found = [('A0', (0.0, 0.0))]
    if nf.c22 != 0:
        y = -nf.beta / nf.c22
        if y > 0:
            found += [('A2plus', (0.0, math.sqrt(y))), ('A2minus', (0.0, -math.sqrt(y)))]
    return found


def _generic_candidates(nf: TruncatedNF):
    found = _axis_candidates(nf)
    if nf.c11 != 0:
        x = -nf.alpha / nf.c11
        if x > 0:
            found += [('A1plus', (math.sqrt(x), 0.0)), ('A1minus', (-math.sqrt(x), 0.0))]
    matrix = np.array([[nf.c11, nf.c12], [nf.c21, nf.c22]])
    if abs(np.linalg.det(matrix)) > 1e-300:
        x, y = np.linalg.solve(matrix, [-nf.alpha, -nf.beta])
        if x > 0 and y > 0:
            h1, h2 = math.sqrt(x), math.sqrt(y)
            for s1, sign1 in ((1, '+'), (-1, '-')):
                for s2, sign2 in ((1, '+'), (-1, '-')):
                    found.append((f'A3{sign1}{sign2}', (s1 * h1, s2 * h2)))
    return found


def _mixed_cubic_one_two(nf: TruncatedNF) -> List[float]:
    """Coefficients (descending) of the z2-cubic for mixed 1:2 equilibria."""
    return [nf.c11 * nf.c22 - nf.c21 * nf.c12,
            -(nf.q2 * nf.c12 + nf.c21 * nf.q1),
            nf.c11 * nf.beta - nf.q2 * nf.q1 - nf.c21 * nf.alpha,
            -nf.q2 * nf.alpha]


def _mixed_cubic_one_three(nf: TruncatedNF) -> List[float]:
    """Coefficients (descending) of the cubic in t = z2 / z1 for 1:3 mixed equilibria."""
    return [nf.beta * nf.c12 - nf.alpha * nf.c22,
            nf.beta * nf.e1,
            nf.beta * nf.c11 - nf.alpha * nf.c21,
            -nf.alpha * nf.e2]


def _one_two_z1_squared(nf: TruncatedNF, z2: float) -> float:
    return -(nf.alpha + nf.q1 * z2 + nf.c12 * z2 * z2) / nf.c11


def _one_three_z1_squared(nf: TruncatedNF, t: float) -> float:
    denominator = nf.c11 + nf.e1 * t + nf.c12 * t * t
    return -nf.alpha / denominator if denominator != 0 else -1.0


def _one_two_candidates(nf: TruncatedNF):
    if nf.c11 == 0:
        raise DegenerateCubic('z1^3 coefficient vanishes')
    found = _axis_candidates(nf)
    for z2 in _real_roots(_mixed_cubic_one_two(nf)):
        x = _one_two_z1_squared(nf, z2)
        if x > 0:
            found += [('Mixed', (math.sqrt(x), z2)), ('Mixed', (-math.sqrt(x), z2))]
    return found


def _one_three_candidates(nf: TruncatedNF):
    found = _axis_candidates(nf)
    for t in _real_roots(_mixed_cubic_one_three(nf)):
        x = _one_three_z1_squared(nf, t)
        if x > 0:
            z1 = math.sqrt(x)
            found += [('Mixed', (z1, t * z1)), ('Mixed', (-z1, -t * z1))]
    return found


def nf_equilibria(nf: TruncatedNF) -> List[NFEquilibrium]:
    if nf.case is ResonanceCase.GENERIC:
        candidates = _generic_candidates(nf)
    elif nf.case is ResonanceCase.ONE_TWO:
        candidates = _one_two_candidates(nf)
    else:
        candidates = _one_three_candidates(nf)

    accepted: List[NFEquilibrium] = []
    for label, seed in candidates:
        z = _polish(nf, seed)
        if any(np.max(np.abs(z - np.array(other.z))) < DEDUP_RADIUS for other in accepted):
            continue
        eigenvalues, verdict = nf_stability(nf, z)
        accepted.append(NFEquilibrium(z=(float(z[0]), float(z[1])), label=label,
                                      eigenvalues=tuple(eigenvalues), stability=verdict))

    accepted.sort(key=lambda eq: (FAMILY_ORDER.index(eq.family), eq.z[0], eq.z[1]))
    return accepted


def census(equilibria: Sequence[NFEquilibrium]) -> Counter:
    return Counter((eq.family, eq.stability) for eq in equilibria)


def fingerprint(counts: Counter) -> str:
    parts = []
    for (family, stability), number in sorted(counts.items(),
                                              key=lambda item: (FAMILY_ORDER.index(item[0][0]), item[0][1])):
        parts.append(f'{family}:{stability}' + (f'*{number}' if number > 1 else ''))
    return ','.join(parts)


# --- unfolding ---------------------------------------------------------

def _sign(value: float) -> int:
    return 1 if value > 0 else -1


def classify_unfolding(nf) -> UnfoldingClass:
    """Rescale to z1(alpha + z1^2 + b0 z2^2), z2(beta + c0 z1^2 + d0 z2^2) and read the sign case."""
    coefficients = nf.coefficients if isinstance(nf, TruncatedNF) else nf
    if coefficients.case is not ResonanceCase.GENERIC:
        raise NotApplicable(f'unfolding table needs a quadratic-free odd field, got {coefficients.case.value}')
    a11, a12 = coefficients.get('g3000_11'), coefficients.get('g1200_11')
    a21, a22 = coefficients.get('g2100_12'), coefficients.get('g0300_12')
    if abs(a11) < 1e-10 or abs(a22) < 1e-10:
        raise DegenerateCubic('a diagonal cubic coefficient vanishes', a11=a11, a22=a22)

    orientation = _sign(a11)
    b0 = orientation * a12 / abs(a22)
    c0 = orientation * a21 / abs(a11)
    d0 = orientation * _sign(a22)
    gap = d0 - b0 * c0
    if min(abs(b0), abs(c0), abs(gap)) < 1e-10:
        raise DegenerateCubic('unfolding sign data is degenerate', b0=b0, c0=c0, gap=gap)

    key = (d0, _sign(b0), _sign(c0), _sign(gap))
    return UnfoldingClass(d0=d0, sign_b0=key[1], sign_c0=key[2], sign_dmb0c0=key[3],
                          case_label=UNFOLDING_TABLE[key], b0=b0, c0=c0,
                          time_reversed=orientation < 0)


# --- bifurcation lines ---------------------------------------------------

@dataclass
class BifurcationLine:
    name: str
    kind: str
    slope: float
    half: int = 0
    description: str = ''

    def as_dict(self, tt: Optional[TTPoint] = None) -> Dict:
        payload = {'name': self.name, 'kind': self.kind, 'form': 'line',
                   'slope': self.slope if math.isfinite(self.slope) else None,
                   'half': {0: 'full', 1: 'eps1>=0', -1: 'eps1<=0'}[self.half],
                   'description': self.description}
        if tt is not None:
            payload['d1_s_form'] = f's = {tt.s_star!r} + ({self.slope!r})*(d1 - {tt.d_star!r})'
        return payload


@dataclass
class BifurcationCurve:
    name: str
    kind: str
    points: np.ndarray
    description: str = ''

    def as_dict(self, tt: Optional[TTPoint] = None) -> Dict:
        payload = {'name': self.name, 'kind': self.kind, 'form': 'curve',
                   'description': self.description,
                   'eps': self.points.tolist()}
        if tt is not None:
            payload['d1_s'] = (self.points + np.array([tt.d_star, tt.s_star])).tolist()
        return payload


def _line_through(normal: np.ndarray) -> float:
    return -normal[0] / normal[1] if normal[1] != 0 else math.inf


def _half_where(slope: float, exists: Callable[[float, float], bool]) -> int:
    for t in (-1.0, 1.0):
        eps = (t, slope * t) if math.isfinite(slope) else (0.0, t)
        if exists(*eps):
            return int(t)
    return 0


def _primary_lines(coefficients: NFCoefficients) -> List[BifurcationLine]:
    k1 = coefficients.tt.k1 if coefficients.tt else 1
    k2 = coefficients.tt.k2 if coefficients.tt else 2
    lin = coefficients.lin
    return [
        BifurcationLine(f'L{k1}', 'primary', _line_through(lin[0]),
                        description=f'z1 linear coefficient vanishes; mode-{k1} branch leaves A0'),
        BifurcationLine(f'L{k2}', 'primary', _line_through(lin[1]),
                        description=f'z2 linear coefficient vanishes; mode-{k2} branch leaves A0'),
    ]


def _transverse_lines(coefficients: NFCoefficients, include_a1: bool) -> List[BifurcationLine]:
    nf = TruncatedNF(coefficients)
    lin = coefficients.lin
    lines = []

    normal = lin[0] - (nf.c12 / nf.c22) * lin[1]
    slope = _line_through(normal)

    def a2_exists(eps1, eps2):
        return -(lin[1] @ (eps1, eps2)) / nf.c22 > 0

    lines.append(BifurcationLine('T1', 'secondary', slope, _half_where(slope, a2_exists),
                                 'transverse eigenvalue of A2 vanishes; mixed branch meets A2'))
    if include_a1:
        normal = lin[1] - (nf.c21 / nf.c11) * lin[0]
        slope = _line_through(normal)

        def a1_exists(eps1, eps2):
            return -(lin[0] @ (eps1, eps2)) / nf.c11 > 0

        lines.append(BifurcationLine('T2', 'secondary', slope, _half_where(slope, a1_exists),
                                     'transverse eigenvalue of A1 vanishes; mixed branch meets A1'))
    return lines


def _cubic_discriminant(a: float, b: float, c: float, d: float) -> float:
    return 18 * a * b * c * d - 4 * b ** 3 * d + b * b * c * c - 4 * a * c ** 3 - 27 * a * a * d * d


def _double_root_is_physical(polynomial: Sequence[float], z1_squared: Callable[[float], float]) -> bool:
    roots = np.roots(np.asarray(polynomial, dtype=float))
    if roots.size < 2:
        return False
    best, pair = math.inf, None
    for i in range(roots.size):
        for j in range(i + 1, roots.size):
            gap = abs(roots[i] - roots[j])
            if gap < best:
                best, pair = gap, (roots[i] + roots[j]) / 2
    return pair is not None and abs(pair.imag) < 1e-6 and z1_squared(float(pair.real)) > 0


class ArclengthContinuation:
    """
    Pseudo-arclength continuation of the zero set of a scalar function on the
    (eps1, eps2) plane, carried out in window-scaled coordinates.
    """

    def __init__(self, function: Callable[[float, float], float], scale: Tuple[float, float],
                 step: float = Config.CONT_STEP, tol: float = Config.CONT_TOL, max_steps: int = 50000):
        self.function = function
        self.scale = np.asarray(scale, dtype=float)
        self.step = step
        self.tol = tol
        self.max_steps = max_steps

    def G(self, y: np.ndarray) -> float:
        eps = y * self.scale
        return self.function(float(eps[0]), float(eps[1]))

    def gradient(self, y: np.ndarray) -> np.ndarray:
        h = 1e-7
        return np.array([(self.G(y + (h, 0.0)) - self.G(y - (h, 0.0))) / (2 * h),
                         (self.G(y + (0.0, h)) - self.G(y - (0.0, h))) / (2 * h)])

    def correct(self, predictor: np.ndarray, tangent: np.ndarray) -> Optional[np.ndarray]:
        y = predictor.copy()
        for _ in range(12):
            value = self.G(y)
            if not math.isfinite(value):
                return None
            if abs(value) < self.tol and abs(tangent @ (y - predictor)) < self.tol:
                return y
            grad = self.gradient(y)
            if not np.all(np.isfinite(grad)):
                return None
            system = np.array([grad, tangent])
            try:
                y = y - np.linalg.solve(system, [value, tangent @ (y - predictor)])
            except np.linalg.LinAlgError:
                return None
        return y if abs(self.G(y)) < self.tol else None

    def _tangent(self, y: np.ndarray, previous: Optional[np.ndarray] = None) -> np.ndarray:
        grad = self.gradient(y)
        tangent = np.array([-grad[1], grad[0]])
        norm = np.linalg.norm(tangent)
        if norm == 0 or not math.isfinite(norm):
            raise ContinuationStalled('zero gradient on the continued curve',
                                      last_point=(y * self.scale).tolist())
        tangent /= norm
        if previous is not None and tangent @ previous < 0:
            tangent = -tangent
        return tangent

    def branch(self, start: np.ndarray, direction: int) -> List[np.ndarray]:
        points = [start]
        y = start
        tangent = direction * self._tangent(y)
        for _ in range(self.max_steps):
            h = self.step
            corrected = None
            while h >= self.step * 1e-4:
                predictor = y + h * tangent
                corrected = self.correct(predictor, tangent)
                if corrected is not None:
                    break
                if not math.isfinite(self.G(predictor)):
                    return points
                h /= 2
            if corrected is None:
                raise ContinuationStalled('corrector failed after step reduction',
                                          last_point=(y * self.scale).tolist())
            tangent = self._tangent(corrected, tangent)
            y = corrected
            points.append(y)
            if np.max(np.abs(y)) > 1.0 or np.linalg.norm(y) < ORIGIN_RADIUS:
                break
        return points

    def seeds(self, radius: float = 0.5, samples: int = 720) -> List[np.ndarray]:
        angles = np.linspace(0.0, 2 * np.pi, samples + 1)
        ring = [np.array([math.cos(a), math.sin(a)]) * radius for a in angles]
        values = [self.G(y) for y in ring]
        found = []
        for i in range(samples):
            v0, v1 = values[i], values[i + 1]
            if not (math.isfinite(v0) and math.isfinite(v1)) or v0 * v1 > 0:
                continue
            lo, hi = angles[i], angles[i + 1]
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                vm = self.G(np.array([math.cos(mid), math.sin(mid)]) * radius)
                if not math.isfinite(vm):
                    break
                if (vm > 0) == (v0 > 0):
                    lo = mid
                else:
                    hi = mid
            seed = np.array([math.cos(lo), math.sin(lo)]) * radius
            corrected = self.correct(seed, self._tangent(seed))
            if corrected is not None:
                found.append(corrected)
        return found

    def trace(self) -> List[np.ndarray]:
        """All curves crossing the seed circle, each as an (n, 2) eps array."""
        curves: List[np.ndarray] = []
        for seed in self.seeds():
            if any(np.min(np.linalg.norm(curve / self.scale - seed, axis=1)) < 4 * self.step
                   for curve in curves):
                continue
            backward = self.branch(seed, -1)
            forward = self.branch(seed, 1)
            path = np.array(backward[::-1] + forward[1:]) * self.scale
            curves.append(path)
        return curves


def _split_physical(points: np.ndarray, keep: np.ndarray) -> List[np.ndarray]:
    pieces, current = [], []
    for point, flag in zip(points, keep):
        if flag:
            current.append(point)
        elif current:
            pieces.append(np.array(current))
            current = []
    if current:
        pieces.append(np.array(current))
    return [piece for piece in pieces if len(piece) > 1]


def _fold_curves(coefficients: NFCoefficients, window, step, tol) -> List[BifurcationCurve]:
    base = TruncatedNF(coefficients)
    one_two = coefficients.case is ResonanceCase.ONE_TWO
    polynomial_of = _mixed_cubic_one_two if one_two else _mixed_cubic_one_three
    z1_squared = _one_two_z1_squared if one_two else _one_three_z1_squared

    def discriminant(eps1, eps2):
        return _cubic_discriminant(*polynomial_of(base.with_epsilon((eps1, eps2))))

    curves = []
    continuation = ArclengthContinuation(discriminant, window, step, tol)
    for path in continuation.trace():
        keep = []
        for eps in path:
            nf = base.with_epsilon(eps)
            keep.append(_double_root_is_physical(polynomial_of(nf), lambda x, nf=nf: z1_squared(nf, x)))
        for piece in _split_physical(path, np.array(keep)):
            curves.append(BifurcationCurve(f'F{len(curves) + 1}', 'secondary', piece,
                                           'fold of mixed equilibria'))
    return curves


def _a2_transverse_curves(coefficients: NFCoefficients, window, step, tol) -> List[BifurcationCurve]:
    base = TruncatedNF(coefficients)
    curves = []
    for sign, name in ((1, 'T1+'), (-1, 'T1-')):
        def transverse(eps1, eps2, sign=sign):
            nf = base.with_epsilon((eps1, eps2))
            y = -nf.beta / nf.c22
            if y <= 0:
                return math.nan
            z2 = sign * math.sqrt(y)
            return nf.alpha + nf.q1 * z2 + nf.c12 * z2 * z2

        for path in ArclengthContinuation(transverse, window, step, tol).trace():
            curves.append(BifurcationCurve(name, 'secondary', path,
                                           f'mixed branch meets A2 (z2 {"> 0" if sign > 0 else "< 0"})'))
    return curves


def nf_bifurcation_lines(coefficients: NFCoefficients, window: Tuple[float, float] = (2e-3, 5e-2),
                         step: float = Config.CONT_STEP, tol: float = Config.CONT_TOL) -> List:
    """Primary and secondary bifurcation sets of the truncated field near eps = 0."""
    lines: List = _primary_lines(coefficients)
    if coefficients.case is ResonanceCase.GENERIC:
        lines += _transverse_lines(coefficients, include_a1=True)
    elif coefficients.case is ResonanceCase.ONE_THREE:
        lines += _transverse_lines(coefficients, include_a1=False)
        lines += _fold_curves(coefficients, window, step, tol)
    else:
        lines += _a2_transverse_curves(coefficients, window, step, tol)
        lines += _fold_curves(coefficients, window, step, tol)
    return lines


# --- region maps ---------------------------------------------------------

@dataclass
class RegionCell:
    d1: float
    s: float
    eps1: float
    eps2: float
    fingerprint: str
    region_label: str = ''
    n_stable: int = 0
    n_saddle: int = 0
    n_unstable: int = 0
    counts: Dict = field(default_factory=dict)


@dataclass
class RegionMap:
    d1: np.ndarray
    s: np.ndarray
    cells: List[RegionCell]
    fingerprint_ids: Dict[str, str]

    def to_frame(self) -> pd.DataFrame:
        rows = [{'d1': c.d1, 's': c.s, 'eps1': c.eps1, 'eps2': c.eps2, 'fingerprint': c.fingerprint,
                 'region_label': c.region_label, 'n_stable': c.n_stable, 'n_saddle': c.n_saddle,
                 'n_unstable': c.n_unstable} for c in self.cells]
        return pd.DataFrame(rows, columns=['d1', 's', 'eps1', 'eps2', 'fingerprint', 'region_label',
                                           'n_stable', 'n_saddle', 'n_unstable'])

    def distinct_fingerprints(self) -> List[str]:
        return [fp for fp in self.fingerprint_ids if fp != 'Unknown']

    def cell_at(self, d1: float, s: float) -> RegionCell:
        return min(self.cells, key=lambda c: ((c.d1 - d1) / self._dx) ** 2 + ((c.s - s) / self._ds) ** 2)

    @property
    def _dx(self) -> float:
        return float(np.ptp(self.d1)) or 1.0

    @property
    def _ds(self) -> float:
        return float(np.ptp(self.s)) or 1.0


def census_at(coefficients: NFCoefficients, eps: Tuple[float, float]) -> Optional[Counter]:
    try:
        return census(nf_equilibria(TruncatedNF(coefficients, eps)))
    except (RootFindingFailed, DegenerateCubic) as e:
        logger.warning('census failed at eps=%s: %s', eps, e)
        return None


def _census_task(task):
    coefficients, eps = task
    return census_at(coefficients, eps)


def region_classify(coefficients: NFCoefficients, tt: TTPoint, window: Tuple[float, float],
                    n: int = Config.REGION_POINTS, jobs: int = 1,
                    labeler: Optional[Callable[[Counter], Optional[str]]] = None) -> RegionMap:
    """Equilibrium census on an n x n (d1, s) grid centred at the TT point."""
    d1_values = np.linspace(tt.d_star - window[0], tt.d_star + window[0], n)
    s_values = np.linspace(tt.s_star - window[1], tt.s_star + window[1], n)
    tasks = [(coefficients, (d1 - tt.d_star, s - tt.s_star)) for d1 in d1_values for s in s_values]

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_census_task, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        results = [_census_task(task) for task in tasks]

    ids: Dict[str, str] = {}
    cells = []
    for (_, eps), counts in zip(tasks, results):
        d1, s = eps[0] + tt.d_star, eps[1] + tt.s_star
        if counts is None:
            ids.setdefault('Unknown', 'Unknown')
            cells.append(RegionCell(d1, s, eps[0], eps[1], 'Unknown', 'Unknown'))
            continue
        fp = fingerprint(counts)
        ids.setdefault(fp, f'F{len([k for k in ids if k != "Unknown"]) + 1}')
        label = (labeler(counts) if labeler else None) or ids[fp]
        by_stability = Counter()
        for (_, stability), number in counts.items():
            by_stability[stability] += number
        cells.append(RegionCell(d1, s, eps[0], eps[1], fp, label,
                                by_stability['stable'], by_stability['saddle'], by_stability['unstable'],
                                {f'{fam}:{stab}': num for (fam, stab), num in counts.items()}))
    logger.info('region map: %d cells, %d fingerprints', len(cells), len(ids))
    return RegionMap(d1=d1_values, s=s_values, cells=cells, fingerprint_ids=ids)


# --- trajectories ---------------------------------------------------------

@dataclass
class Trajectory:
    t: np.ndarray
    z: np.ndarray
    dt: float

    def to_frame(self, max_rows: int = 2000) -> pd.DataFrame:
        stride = max(1, int(math.ceil(len(self.t) / max_rows)))
        index = list(range(0, len(self.t), stride))
        if index[-1] != len(self.t) - 1:
            index.append(len(self.t) - 1)
        return pd.DataFrame({'t': self.t[index], 'z1': self.z[index, 0], 'z2': self.z[index, 1]})


def _rk4(nf: TruncatedNF, z0, T: float, dt: float) -> Tuple[np.ndarray, np.ndarray]:
    steps = max(1, int(math.ceil(T / dt)))
    h = T / steps
    out = np.empty((steps + 1, 2))
    z1, z2 = float(z0[0]), float(z0[1])
    out[0] = z1, z2
    f = nf.rhs_scalar
    for i in range(steps):
        k1 = f(z1, z2)
        k2 = f(z1 + 0.5 * h * k1[0], z2 + 0.5 * h * k1[1])
        k3 = f(z1 + 0.5 * h * k2[0], z2 + 0.5 * h * k2[1])
        k4 = f(z1 + h * k3[0], z2 + h * k3[1])
        z1 += h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        z2 += h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        if not (math.isfinite(z1) and math.isfinite(z2)):
            out[i + 1:] = np.nan
            break
        out[i + 1] = z1, z2
    return np.linspace(0.0, steps * h, steps + 1), out


def nf_trajectory(nf: TruncatedNF, z0, T: float, dt: float, max_halvings: int = 6) -> Trajectory:
    """Classical RK4 with a step-halving check on the final state."""
    for _ in range(max_halvings + 1):
        t, z = _rk4(nf, z0, T, dt)
        _, z_half = _rk4(nf, z0, T, dt / 2)
        end, end_half = z[-1], z_half[-1]
        if np.all(np.isfinite(end)) and np.all(np.isfinite(end_half)):
            scale = max(np.linalg.norm(end_half), np.linalg.norm(z0), 1e-300)
            if np.linalg.norm(end - end_half) / scale < 1e-8:
                return Trajectory(t=t, z=z, dt=T / (len(t) - 1))
        dt /= 2
    raise StepSizeUnderflow(f'step-halving check failed down to dt={dt:g}', z0=list(map(float, z0)))


# --- correspondence with steady states ---------------------------------

def steady_state_shape(eq: NFEquilibrium, k1: int, k2: int, tol: float = 1e-12) -> str:
    """Expected attractor label of the steady state attached to an equilibrium."""
    z1, z2 = eq.z
    active = [(k, z) for k, z in ((k1, z1), (k2, z2)) if abs(z) > tol]
    if not active:
        return 'ConstantEq'
    if len(active) == 1:
        k, z = active[0]
        return f'PureMode({k},{"+" if z > 0 else "-"})'
    return f'Superposition{{{k1},{k2}}}({"+" if z1 > 0 else "-"})'


def predicted_profile(eq: NFEquilibrium, phi1: np.ndarray, phi2: np.ndarray, k1: int, k2: int,
                      base: Tuple[float, float], x: np.ndarray, l: float = 1.0) -> Tuple[np.ndarray, np.ndarray]:
    """E* + z1 phi1 sqrt2 cos(k1 x/l) + z2 phi2 sqrt2 cos(k2 x/l)."""
    z1, z2 = eq.z
    mode1 = math.sqrt(2) * np.cos(k1 * x / l)
    mode2 = math.sqrt(2) * np.cos(k2 * x / l)
    u = base[0] + z1 * phi1[0] * mode1 + z2 * phi2[0] * mode2
    v = base[1] + z1 * phi1[1] * mode1 + z2 * phi2[1] * mode2
    return u, v
