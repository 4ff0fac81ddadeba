"""
Error hierarchy for the Richards solver
Every exception also derives from RichardsError so callers can catch the family
"""

from typing import Optional


class RichardsError(Exception):
    """Base class for all solver errors"""


class InvalidInputError(RichardsError, ValueError):
    """Non-finite head or soil parameters outside their admissible ranges"""


class InvalidSpecError(RichardsError, ValueError):
    """Grid, patch or partition specification violates its invariants"""


class ConfigurationError(RichardsError):
    """Unsupported combination of patches, conditions or run options"""


class FactorizationBreakdown(RichardsError, ArithmeticError):
    """Non-positive pivot in the diagonal incomplete Cholesky factorization"""

    def __init__(self, cell: int, pivot: float):
        self.cell = cell
        self.pivot = pivot
        super().__init__(f"DIC breakdown at local cell {cell}: pivot {pivot:.6e} <= 0")


class NoConvergenceError(RichardsError, ArithmeticError):
    """PCG reached its iteration cap without meeting the tolerance"""

    def __init__(self, residual: float, iterations: int):
        self.residual = residual
        self.iterations = iterations
        super().__init__(
            f"PCG did not converge in {iterations} iterations (scaled residual {residual:.3e} m)"
        )


class StepFailure(RichardsError):
    """A time step must be rerun with a smaller dt"""

    def __init__(self, reason: str, picard_iters: int, pcg_iters: int = 0):
        self.reason = reason
        self.picard_iters = picard_iters
        self.pcg_iters = pcg_iters
        super().__init__(f"step failed after {picard_iters} Picard iterations: {reason}")


class NumericalBlowupError(RichardsError, ArithmeticError):
    """A non-finite head appeared in the solution"""


class UnrecoverableStepError(RichardsError):
    """Step failed with dt already at its floor"""

    def __init__(self, message: str, log=None):
        self.log = log
        super().__init__(message)


class ContractError(RichardsError):
    """Field or message does not match the halo topology"""


class CollectiveTimeoutError(RichardsError):
    """A collective operation waited longer than the deadlock timeout"""


class GroupAbortedError(RichardsError):
    """Another worker of the SPMD group failed"""


class CaseParseError(RichardsError, ValueError):
    """Case file violates the grammar or one of the case invariants"""

    def __init__(self, problems, source: Optional[str] = None):
        self.problems = list(problems)
        self.source = source
        where = f" in {source}" if source else ""
        lines = "\n".join(f"  - {p}" for p in self.problems)
        super().__init__(f"{len(self.problems)} problem(s){where}:\n{lines}")


class OutOfRangeError(RichardsError, ValueError):
    """Lookup outside the covered time span of a flux series"""


class ValidityError(RichardsError, ValueError):
    """Analytical solution evaluated outside its domain of validity"""
