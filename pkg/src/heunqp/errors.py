class DomainError(ValueError):
    """Argument outside the domain where an operation is defined."""


class PoleProximityError(DomainError):
    """Evaluation point too close to a coefficient pole."""


class BranchUnavailableError(ValueError):
    """The requested local Frobenius branch does not exist for these exponents."""


class NoClosedFormError(ValueError):
    """No closed-form eigenvalue is known for this configuration."""


class DegeneracyNotGuaranteed(ValueError):
    """Integer t: the two members of the pair need not be independent."""


class VerificationError(RuntimeError):
    """A constructed object failed one of its numerical checks."""
