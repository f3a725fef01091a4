"""Exception types shared across the pipeline."""


class PipelineError(Exception):
    """Base class for all errors raised by this package."""


class TemplateError(PipelineError):
    """Hypothesis template is malformed (placeholder count != 1)."""


class TaxonomyError(PipelineError):
    """Label set is unusable (unknown code, bad file, version mismatch)."""


class ExtractionError(PipelineError):
    """PDF could not be parsed into layout blocks."""

    def __init__(self, message, report_id=None):
        self.report_id = report_id
        if report_id is not None:
            message = f"[{report_id}] {message}"
        super().__init__(message)


class DomainError(PipelineError):
    """Input value outside the documented domain (negative assets, non-finite logit)."""


class ScoringError(PipelineError):
    """Backend failed to score a (premise, hypothesis) pair."""

    def __init__(self, message, sequence_id=None, label_code=None):
        self.sequence_id = sequence_id
        self.label_code = label_code
        tag = "/".join(x for x in (sequence_id, label_code) if x)
        if tag:
            message = f"[{tag}] {message}"
        super().__init__(message)


class BackendLoadError(PipelineError):
    """Scorer backend could not be constructed (bad path, missing runtime)."""


class ReferentialIntegrityError(PipelineError):
    """Rows reference report or bank ids absent from the supplied metadata."""

    def __init__(self, message, offenders=()):
        self.offenders = sorted(set(offenders))
        if self.offenders:
            shown = ", ".join(self.offenders[:10])
            more = "" if len(self.offenders) <= 10 else f" (+{len(self.offenders) - 10} more)"
            message = f"{message}: {shown}{more}"
        super().__init__(message)


class MissingDataError(PipelineError):
    """Requested group, year, or label has no rows."""


class UndefinedGrowthError(PipelineError):
    """Relative growth from a zero base is undefined."""


class ConfigError(PipelineError):
    """Run configuration value is invalid."""


class FormatError(PipelineError):
    """A structured input file does not match its documented schema."""
