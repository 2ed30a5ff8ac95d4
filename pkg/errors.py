"""
Exception hierarchy shared by every pattern_duet module.

Library code raises these; only cli.py turns them into exit codes.
"""

from typing import Dict


class PatternDuetError(Exception):
    """Base class; carries an exit code and a details mapping for the CLI."""

    exit_code = 1

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.details = details

    def to_dict(self) -> Dict:
        payload = {'error': type(self).__name__, 'message': str(self)}
        if self.details:
            payload['details'] = self.details
        return payload


# --- input errors (exit 2) ---

class ModelError(PatternDuetError):
    exit_code = 2


class InvalidModelFile(ModelError):
    pass


class ExistenceConditionViolated(ModelError):
    pass


class NoInteriorEquilibrium(ModelError):
    pass


class InvalidModePair(ModelError):
    pass


class DomainError(ModelError):
    pass


class InvalidGrid(ModelError):
    pass


class InvalidConfig(ModelError):
    pass


class UnknownScenario(ModelError):
    pass


# --- violated hypotheses of the bifurcation analysis (exit 3) ---

class HypothesisViolated(PatternDuetError):
    exit_code = 3


class NegativeCritical(HypothesisViolated):
    pass


class SingularNormalizer(HypothesisViolated):
    pass


class SideConditionFailed(HypothesisViolated):
    pass


# --- numerical failures (exit 1) ---

class NumericalError(PatternDuetError):
    exit_code = 1


class UnexpectedSingularity(NumericalError):
    pass


class BorderedSolveFailed(NumericalError):
    pass


class NonFiniteCoefficient(NumericalError):
    pass


class RootFindingFailed(NumericalError):
    pass


class DegenerateCubic(NumericalError):
    pass


class NotApplicable(NumericalError):
    pass


class ContinuationStalled(NumericalError):
    pass


class StepSizeUnderflow(NumericalError):
    pass


class BlowUp(NumericalError):
    pass


class NonConvergence(NumericalError):
    pass


class ArtifactDrift(PatternDuetError):
    exit_code = 4
