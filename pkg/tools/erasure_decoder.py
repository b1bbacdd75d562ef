"""
Errors-and-Erasures Completion
Shared decoder for the aggregate codes of both repair engines.

Columns not received are erasures. Up to max_errors received columns may be
wrong. Candidate error supports are tried in order of size; the first size
with a consistent completion wins, and every consistent completion at that
size must agree.
"""

from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Dict, Generic, Hashable, List, Mapping, Sequence, Set, TypeVar

from utils.errors import (AmbiguousDecodingError, InconsistentSystemError,
                          SingularMatrixError, UnrecoverableRepairError)
from utils.logger import get_logger

logger = get_logger(__name__)

Payload = TypeVar("Payload")

# complete(unknown_labels, known_payloads) -> payloads for the unknown labels;
# raises InconsistentSystemError when the known payloads do not fit the code
Completer = Callable[[List[Hashable], Dict[Hashable, Payload]], Dict[Hashable, Payload]]


@dataclass
class DecodeOutcome(Generic[Payload]):
    columns: Dict[Hashable, Payload]
    detected: Set[Hashable] = field(default_factory=set)
    error_support_size: int = 0
    candidates_tried: int = 0


def decode_errors_and_erasures(labels: Sequence[Hashable],
                               received: Mapping[Hashable, Payload],
                               max_errors: int,
                               complete: Completer,
                               same: Callable[[Payload, Payload], bool]) -> DecodeOutcome:
    """Complete all labelled columns from the received ones, tolerating max_errors wrong ones"""
    helpers = sorted(received)
    erased = [c for c in labels if c not in received]
    tried = 0

    for size in range(max_errors + 1):
        found: List[Dict[Hashable, Payload]] = []
        for support in combinations(helpers, size):
            tried += 1
            known = {c: received[c] for c in helpers if c not in support}
            try:
                solved = complete(erased + list(support), known)
            except (InconsistentSystemError, SingularMatrixError):
                continue
            columns = dict(known)
            columns.update(solved)
            found.append(columns)

        if not found:
            continue
        first = found[0]
        for other in found[1:]:
            if any(not same(first[c], other[c]) for c in labels):
                raise AmbiguousDecodingError(
                    f"two different completions with {size} error(s) are consistent")
        detected = {c for c in helpers if not same(received[c], first[c])}
        if detected:
            logger.warning("corrupted helper columns detected: %s", sorted(detected))
        return DecodeOutcome(columns=first, detected=detected,
                             error_support_size=size, candidates_tried=tried)

    logger.error("no consistent completion with at most %d error(s)", max_errors)
    raise UnrecoverableRepairError(
        f"no completion consistent with at most {max_errors} corrupted column(s)", tried)
