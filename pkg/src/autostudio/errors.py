"""Exception taxonomy shared across the engine.

Every failure the pipeline can surface maps to one of these; HTTP handlers
translate them to status codes (400 schema/format, 404 unknown, 409 busy).
"""


class AutoStudioError(Exception):
    """Base class for all engine errors."""


# --- subject registry ---

class MalformedId(AutoStudioError):
    """Identifier string is not a dash-joined list of 1..2 positive integers."""


class OrphanComponent(AutoStudioError):
    """Component registered before its parent subject exists."""


class UnknownId(AutoStudioError):
    """No record with the given identifier."""


class AlreadyLocked(AutoStudioError):
    """Embedding already present and not replaceable by this provenance."""


class IoFailure(AutoStudioError):
    """Snapshot file unreadable, unwritable or corrupt."""


class SchemaVersionMismatch(AutoStudioError):
    """Persisted document carries an unsupported schema version."""


# --- agents ---

class ParseFailure(AutoStudioError):
    """Backend text could not be parsed into a structured output after retries."""


class BackendUnavailable(AutoStudioError):
    """Chat backend could not be reached or refused the request."""


class MissingEntry(AutoStudioError):
    """A subject or component named by the manager has no layout box."""


class MissingSlot(AutoStudioError):
    """Prompt template slot set does not match the supplied slots."""


# --- layout ---

class LayoutFormatError(AutoStudioError):
    """One or more lines violate the layout line format.

    Carries the per-line findings so callers can report every bad line,
    not just the first.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        lines = "; ".join(v.message for v in self.violations)
        super().__init__(f"layout format: {lines}")


class Unsatisfiable(AutoStudioError):
    """Layout cannot be repaired: subjects do not fit at minimum sizes."""


# --- attention / drawer ---

class ShapeMismatch(AutoStudioError):
    """Tensor operands do not compose."""


class SchemaViolation(AutoStudioError):
    """Draw request/response does not validate against the wire schema."""


class BridgeFailure(AutoStudioError):
    """Remote drawer returned an error or malformed response."""


class MissingPriorTurn(AutoStudioError):
    """Edit requested but the previous turn's artifacts are absent."""


# --- engine ---

class ScriptParseError(AutoStudioError):
    """Replay script file is malformed."""


class SessionFull(AutoStudioError):
    """Turn limit for the session reached."""


class TurnInFlight(AutoStudioError):
    """Another turn is currently running for this session."""


class AgentFailure(AutoStudioError):
    """The agent stage of a turn failed; session state is unchanged."""


class DrawFailure(AutoStudioError):
    """The drawer stage of a turn failed; session state is unchanged."""
