"""
Error Types
Exception hierarchy shared by the field core, the codes and the repair engines
"""


class RackCodeError(Exception):
    """Base class for every error raised by the toolkit"""


class ParameterError(RackCodeError, ValueError):
    """A parameter bundle violates one of the code constraints"""


class FieldArithmeticError(RackCodeError, ZeroDivisionError):
    """Division or inversion by zero in a finite field"""


class SingularMatrixError(RackCodeError):
    """A square system has no unique solution"""

    def __init__(self, message: str, rank: int):
        super().__init__(f"{message} (rank {rank})")
        self.rank = rank


class InconsistentSystemError(RackCodeError):
    """An overdetermined system has no solution"""


class UnrecoverableRepairError(RackCodeError):
    """No completion of the aggregate code is consistent with the helper payloads"""

    def __init__(self, message: str, candidates: int = 0):
        super().__init__(message)
        self.candidates = candidates


class AmbiguousDecodingError(RackCodeError, AssertionError):
    """Two different completions are consistent; contradicts the minimum distance"""


class CodewordFormatError(RackCodeError):
    """A codeword or transcript file is malformed"""


class ScenarioError(RackCodeError):
    """A simulator scenario is internally inconsistent"""
