"""Exception hierarchy and CLI exit codes for the PCAAC toolkit."""
from typing import Optional

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_CONTRACT = 4


class PcaacError(Exception):
    """Base class for every error raised by the toolkit."""


class ContractError(PcaacError, ValueError):
    """A precondition of an operation was violated."""


class CloudFormatError(PcaacError, ValueError):
    """Malformed point cloud file content."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnsupportedFormatError(CloudFormatError):
    """File format variant the toolkit does not read (binary PLY)."""


class DegenerateGeometryError(ContractError):
    """Geometry that cannot be segmented, e.g. every point at the sensor."""


class OutOfDomainError(ContractError):
    """A point lies outside the cylinder shells it is assigned against."""


class NumericalError(PcaacError, ArithmeticError):
    """An iterative numerical method failed to converge."""


class GenerationError(PcaacError):
    """Scene generation could not satisfy its constraints."""


class SpecParseError(PcaacError, ValueError):
    """Invalid scene spec or configuration file."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


def exit_code_for(exc: BaseException) -> int:
    """Map an exception to the process exit status used by the CLI."""
    if isinstance(exc, SpecParseError):
        return EXIT_USAGE
    if isinstance(exc, (CloudFormatError, OSError)):
        return EXIT_IO
    if isinstance(exc, (ContractError, NumericalError, GenerationError)):
        return EXIT_CONTRACT
    return EXIT_FAILURE
