"""Exception hierarchy shared across the package.

Parse failures derive from :class:`ParseError` (and ``ValueError``) so that a
caller can treat any malformed input uniformly.
"""


class MatAgentError(Exception):
    """Base class for every error raised by this package."""


# -- file formats -----------------------------------------------------------


class ParseError(MatAgentError, ValueError):
    """Input text does not follow the expected file grammar."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class MalformedLattice(ParseError):
    pass


class CountMismatch(ParseError):
    pass


class UnknownCoordinateMode(ParseError):
    pass


class MissingSpeciesLine(ParseError):
    """VASP-4 style POSCAR without element symbols."""


class DuplicateTag(ParseError):
    pass


class MalformedLine(ParseError):
    pass


class UnsupportedMode(ParseError):
    pass


class MalformedMesh(ParseError):
    pass


class MissingRequiredQuantity(ParseError):
    """A required quantity could not be found in an output file."""

    def __init__(self, name, message=None):
        super().__init__(message or f"required quantity {name!r} not found")
        self.name = name


class NoEigenvalues(MatAgentError, ValueError):
    pass


class InvalidStructure(MatAgentError, ValueError):
    pass


# -- workflow engine --------------------------------------------------------


class WorkflowError(MatAgentError):
    pass


class ManifestError(WorkflowError, ValueError):
    pass


class NoMatchingWorkflow(WorkflowError):
    pass


class MissingInputs(WorkflowError):
    def __init__(self, workflow_id, missing):
        super().__init__(f"workflow {workflow_id!r} needs inputs {sorted(missing)}")
        self.workflow_id = workflow_id
        self.missing = sorted(missing)


class PathEscape(WorkflowError):
    pass


class FileNotFoundInWorkdir(WorkflowError, FileNotFoundError):
    pass


class DisallowedCommand(WorkflowError):
    pass


class BackendCrash(WorkflowError):
    """The backend terminated abnormally (as opposed to reporting failure)."""


class ContextKeyError(WorkflowError, KeyError):
    pass


class StepFailed(WorkflowError):
    """A component error tagged with the index of the step that raised it."""

    def __init__(self, step_index, component, error):
        super().__init__(f"step {step_index} ({component}) failed: {error}")
        self.step_index = step_index
        self.component = component
        self.error = error


# -- llm --------------------------------------------------------------------


class LlmError(MatAgentError):
    pass


class ProviderError(LlmError):
    pass


class LlmTimeout(ProviderError):
    pass


class FormatViolation(LlmError):
    pass


class UnresolvedSlot(LlmError, KeyError):
    def __init__(self, slot, layer):
        super().__init__(f"slot {slot!r} in layer {layer!r} has no value")
        self.slot = slot
        self.layer = layer

    def __str__(self):
        return self.args[0]


class TemplateNotFound(LlmError, KeyError):
    pass


# -- simulation -------------------------------------------------------------


class SimulationError(MatAgentError):
    pass


class CellTooSmall(SimulationError, ValueError):
    pass


class NumericalBlowup(SimulationError, FloatingPointError):
    pass


class CellMismatch(SimulationError, ValueError):
    rule_id = "neb_cell_consistency"


class SpeciesMismatch(SimulationError, ValueError):
    pass


class MissingInputFile(SimulationError, FileNotFoundError):
    pass


# -- scoring / harness ------------------------------------------------------


class ScoringError(MatAgentError, ValueError):
    pass


class NonFinite(ScoringError):
    pass


class LayoutMismatch(ScoringError):
    pass


class ZeroNorm(ScoringError):
    pass


class EmptyStructure(ScoringError):
    pass


class DuplicateTaskType(ScoringError):
    pass


class BenchmarkError(MatAgentError):
    pass


class EmptyBenchmark(BenchmarkError):
    pass


class ManifestParseError(BenchmarkError, ValueError):
    pass
