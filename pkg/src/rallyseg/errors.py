"""Exception hierarchy shared by all pipeline stages."""


class RallysegError(Exception):
    """Base class for all domain errors raised by this package."""


class IngestError(RallysegError):
    """Malformed or inconsistent input file."""


class TableGeomError(RallysegError):
    """Degenerate or missing table mask."""


class ScoringError(RallysegError):
    """Invalid scoring configuration (e.g. degenerate table center)."""


class AggregationError(RallysegError):
    """Clustering or boosting failure."""


class SamplerError(RallysegError):
    """Window extraction failure."""


class ClassifierError(RallysegError):
    """Invalid classifier input or training set."""


class SegmenterError(RallysegError):
    """Stream too short or otherwise unusable for sliding inference."""


class EvalError(RallysegError):
    """Metric computed on an invalid input (empty retrieval, single-class AUROC)."""
