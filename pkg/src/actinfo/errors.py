"""Exception hierarchy shared by all actinfo modules."""


class ActInfoError(Exception):
    """Base class for all errors raised by this package."""


class SpaceMismatch(ActInfoError):
    """Operands were built on different state spaces."""


class EmptyTarget(ActInfoError):
    """No state meets the specificity threshold."""


class EmptyComplement(ActInfoError):
    """The target covers the whole space; nothing left to absorb."""


class NullTargetZero(ActInfoError):
    """The null distribution puts zero mass on the target."""


class SupportViolation(ActInfoError):
    """Q puts mass where P has none; KL divergence is undefined."""


class ZeroNullMass(ActInfoError):
    """Kernel construction needs a strictly positive null distribution."""


class ReciprocityViolation(ActInfoError):
    """Moran acceptance needs q(x,y) > 0 iff q(y,x) > 0."""


class NotStronglyConnected(ActInfoError):
    """Proposal support graph is not strongly connected."""


class SingularSystem(ActInfoError):
    """A linear solve failed; usually signals a reducibility bug."""


class OutOfRange(ActInfoError):
    """Requested value lies outside the attainable range."""


class NoConvergence(ActInfoError):
    """An iterative solver hit its iteration cap."""


class ConstantSpecificity(ActInfoError):
    """Specificity is constant on the support; the tilt is unidentifiable."""


class NonIdentifiable(ActInfoError):
    """Log-likelihood is flat along a parameter axis."""


class SingularSandwich(ActInfoError):
    """The M-estimation sandwich matrix is singular."""


class NullModelTargetZero(ActInfoError):
    """Fitted null model puts zero mass on the target."""


class InvalidNull(ActInfoError):
    """Null target probability must lie strictly inside (0, 1)."""


class DegenerateVariance(ActInfoError):
    """A model variance is zero or negative where positivity is required."""


class ConfigError(ActInfoError):
    """Bad command-line or config-file value."""

    def __init__(self, flag: str, message: str):
        self.flag = flag
        super().__init__(f"{flag}: {message}")
