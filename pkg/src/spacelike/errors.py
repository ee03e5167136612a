"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes: configuration problems exit 4,
violated geometric hypotheses (bad signature, non-spacelike input,
evaluation domain errors) exit 2, solver non-convergence exit 3.
"""


class SpacelikeError(Exception):
    """Base class for all package errors."""


class ExprSyntaxError(SpacelikeError):
    """Malformed expression text; carries the byte offset of the failure."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


class EvalError(SpacelikeError):
    """Unbound variable or numeric domain error during expression evaluation."""


class MeshError(SpacelikeError):
    """Invalid mesh description or quadrature input."""


class SignatureError(SpacelikeError):
    """Metric fails its signature requirement or is singular at a point."""


class NonSpacelikeError(SpacelikeError):
    """Induced metric is not positive definite at some node."""


class DimensionError(SpacelikeError):
    """Operation used outside its supported dimension range."""


class ConfigError(SpacelikeError):
    """Invalid run configuration (unknown keys, bad types, missing sections)."""
