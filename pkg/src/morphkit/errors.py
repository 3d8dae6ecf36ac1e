"""Exception hierarchy shared across the toolkit."""


class MorphkitError(Exception):
    """Base class for all toolkit errors."""


class DataError(MorphkitError):
    """Malformed or inconsistent input data (files, formats, alignments)."""


class RuleApplicationError(MorphkitError):
    """A lemma rule cannot be applied to the given form."""


class TrainingError(MorphkitError):
    """Numeric failure during training (non-finite loss or gradients)."""
