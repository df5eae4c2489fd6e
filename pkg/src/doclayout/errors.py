"""Exception hierarchy shared across the package.

The three bases map onto the CLI exit codes: ValidationError -> 2,
FormatError -> 3, NumericalError -> 4.
"""


class DocLayoutError(Exception):
    pass


class ValidationError(DocLayoutError):
    """Bad inputs: out-of-bounds boxes, schema mismatches, empty operands."""


class FormatError(DocLayoutError):
    """Malformed external data (COCO JSON, JSONL lines, checkpoints)."""


class NumericalError(DocLayoutError):
    """Solver or optimizer failure (non-convergence, NaN loss)."""


class SchemaMismatchError(ValidationError):
    pass


class EmptySideError(ValidationError):
    """A transport operand carries no mass."""


class TokenStructureError(ValidationError):
    """Token sequence violates the BOS/group/EOS framing in strict mode."""
