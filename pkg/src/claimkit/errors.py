"""Exception types shared across the toolkit."""


class ClaimkitError(Exception):
    """Base class for all toolkit errors."""


# --- knowledge base ---

class MalformedRecord(ClaimkitError):
    def __init__(self, path: str, line_no: int, reason: str):
        super().__init__(f"{path}:{line_no}: {reason}")
        self.path = path
        self.line_no = line_no
        self.reason = reason


class DuplicateCui(ClaimkitError):
    def __init__(self, cui: str, line_no: int | None = None):
        loc = f" (line {line_no})" if line_no is not None else ""
        super().__init__(f"duplicate concept identifier {cui!r}{loc}")
        self.cui = cui
        self.line_no = line_no


class UnknownCui(ClaimkitError):
    def __init__(self, cui: str):
        super().__init__(f"unknown concept identifier {cui!r}")
        self.cui = cui


class MissingVector(ClaimkitError):
    def __init__(self, cui: str):
        super().__init__(f"no vector for concept {cui!r}")
        self.cui = cui


class ZeroVector(ClaimkitError):
    def __init__(self, cui: str):
        super().__init__(f"zero-norm vector for concept {cui!r}")
        self.cui = cui


# --- scorer gateway ---

class BackendUnavailable(ClaimkitError):
    """A scorer backend could not be reached or failed server-side."""


class BackendMalformedResponse(ClaimkitError):
    """A scorer backend answered with data violating the wire contract."""


class EmptyGeneration(ClaimkitError):
    """A generation backend produced no usable output."""


# --- negation pipeline ---

class UnlinkedMention(ClaimkitError):
    """Candidate generation requires a mention linked to a concept."""


class NoLinkableEntity(ClaimkitError):
    """No mention in the claim links to any knowledge-base concept."""


class NoCandidates(ClaimkitError):
    """Every linked entity yielded an empty replacement candidate set."""


class NoSameTypeConcept(ClaimkitError):
    """No other concept shares a semantic type with the chosen entity."""


# --- dataset builder ---

class UnknownCitance(ClaimkitError):
    def __init__(self, citance_id: str):
        super().__init__(f"claim references unknown citance {citance_id!r}")
        self.citance_id = citance_id


class EmptyCorpus(ClaimkitError):
    """Dataset assembly needs a non-empty document corpus."""


# --- evaluation ---

class EmptyAfterTokenization(ClaimkitError):
    """A text reduced to zero tokens under the metric tokenizer."""


class MissingReferences(ClaimkitError):
    def __init__(self, citance_id: str):
        super().__init__(f"no reference claims for citance {citance_id!r}")
        self.citance_id = citance_id


class InsufficientData(ClaimkitError):
    """Too few raters, items, or pairable values for the statistic."""


# --- annotation service ---

class GatingViolation(ClaimkitError):
    """A rating record violates the conditional annotation protocol."""


class UnknownTask(ClaimkitError):
    def __init__(self, task_id: str):
        super().__init__(f"unknown task {task_id!r}")
        self.task_id = task_id


class UnknownAnnotator(ClaimkitError):
    def __init__(self, annotator: str):
        super().__init__(f"annotator {annotator!r} is not registered")
        self.annotator = annotator


class StaleRevision(ClaimkitError):
    def __init__(self, expected: int, got: int):
        super().__init__(f"stale revision: expected {expected}, got {got}")
        self.expected = expected
        self.got = got
