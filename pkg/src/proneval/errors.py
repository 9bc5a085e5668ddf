"""Exception types shared across the toolkit.

The CLI maps these onto exit codes (input errors exit with 2, anything
else with 3); the review service maps them onto HTTP statuses.
"""


class ToolkitError(Exception):
    """Base class for every error raised by this package."""


class InputError(ToolkitError):
    """Invalid or inconsistent input data."""


class FormatError(InputError):
    """Malformed input file; the message names the file and line where known."""


class NotFoundError(ToolkitError):
    """Lookup of an unknown item or resource."""


class ConflictError(ToolkitError):
    """Optimistic-concurrency conflict on a judgment write; safe to retry."""
