"""Exception types shared across the package."""


class ClfReachError(Exception):
    """Base class for all errors raised by this package."""


class NotRotationError(ClfReachError, ValueError):
    """Matrix is not (a numerically drifted) member of SO(3)."""


class NotSe3Error(ClfReachError, ValueError):
    """4x4 matrix violates the se(3) structure (skew top-left, zero bottom row)."""


class BadAxisError(ClfReachError, ValueError):
    """Rotation axis is not unit length."""


class JointLimitError(ClfReachError, ValueError):
    """Joint configuration outside the chain's limits."""


class SingularNoDampingError(ClfReachError, ValueError):
    """Jacobian is singular and no damping was allowed."""


class EmptyGoalSetError(ClfReachError, ValueError):
    """Goal set contains no poses."""


class PlacementFailureError(ClfReachError, RuntimeError):
    """Scene sampler could not place an instance without overlap."""


class SamplingExhaustedError(ClfReachError, RuntimeError):
    """Initial-configuration sampler hit its rejection budget."""


class UnknownInstanceError(ClfReachError, KeyError):
    """Perturbation event references an instance id not in the scene."""


class OverlapViolationError(ClfReachError, ValueError):
    """Instance placement would overlap an existing footprint."""


class EmptyGridError(ClfReachError, ValueError):
    """Loss evaluator received zero grid cells."""


class FaultError(ClfReachError, RuntimeError):
    """Non-finite numerics encountered during an episode."""


class ConfigError(ClfReachError, ValueError):
    """Invalid or incomplete configuration."""
