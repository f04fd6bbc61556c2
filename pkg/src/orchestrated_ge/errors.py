"""Exception hierarchy shared by all modules.

Every error carries a short machine-readable ``code`` so the CLI can report
a module-level error code when no scenario field path applies.
"""


class OrchestratedGEError(Exception):
    code = "error"


class DimensionError(OrchestratedGEError, ValueError):
    code = "dimension"


class ParameterError(OrchestratedGEError, ValueError):
    code = "parameter"


class IllConditionedBasisError(OrchestratedGEError, ValueError):
    code = "ill-conditioned-basis"


class DegenerateFamilyError(IllConditionedBasisError):
    """Repeated decay rates: the kernel Gram matrix is exactly singular."""

    code = "ill-conditioned-basis"


class NotADagError(OrchestratedGEError, ValueError):
    code = "not-a-dag"


class PathCapExceededError(OrchestratedGEError, ValueError):
    code = "path-cap-exceeded"


class SaturationUndefinedError(OrchestratedGEError, ArithmeticError):
    code = "saturation-undefined"


class NoGuaranteeError(OrchestratedGEError, ValueError):
    code = "no-guarantee"


class GridInfeasibleError(OrchestratedGEError, ValueError):
    code = "grid-infeasible"


class NotSupportableError(OrchestratedGEError, ValueError):
    code = "not-supportable"


class PreconditionError(OrchestratedGEError, ValueError):
    code = "precondition"


class ScenarioError(OrchestratedGEError, ValueError):
    """Validation failure; ``issues`` is a list of ``(field_path, message)``."""

    code = "scenario"

    def __init__(self, issues):
        if isinstance(issues, str):
            issues = [("<root>", issues)]
        self.issues = list(issues)
        super().__init__("; ".join(f"{path}: {msg}" for path, msg in self.issues))
