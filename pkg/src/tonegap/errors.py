"""Exception types shared across the package."""

from __future__ import annotations


class ToneGapError(Exception):
    """Base class for all package errors."""


# --- intake / ladder ---------------------------------------------------------

class EmptyProfile(ToneGapError):
    """Profile has no triggers to build a ladder from."""


class MissingTemplates(ToneGapError):
    """No template set for the trauma domain, or a level has no usable item."""


class LevelMismatch(ToneGapError):
    """Session outcome was run at a level other than the current daily level."""


# --- session engine ----------------------------------------------------------

class SessionAlreadyOpen(ToneGapError):
    """A session is already open; close it before starting another."""


class InvalidActivation(ToneGapError):
    """Activation rating outside the 0..10 scale."""


class PhaseMismatch(ToneGapError):
    """Input arrived in a session phase that does not accept it."""


class NotClosable(ToneGapError):
    """close was called before the session reached a closable phase."""


class TimestampRegression(ToneGapError):
    """Input timestamp is earlier than the last recorded event."""


class NegativeInterval(ToneGapError):
    """Response timestamp precedes the prompt timestamp."""


# --- progress ----------------------------------------------------------------

class EmptyRecords(ToneGapError):
    """No session records to compute over."""


class EmptyMonth(ToneGapError):
    """Requested month window contains no sessions."""


class InsufficientHistory(ToneGapError):
    """Fewer complete months of history than the evaluation needs."""


# --- event store -------------------------------------------------------------

class StoreLocked(ToneGapError):
    """Store is not unlocked (closed, or the passphrase failed verification)."""


class IntegrityFailure(ToneGapError):
    """Record chain failed authentication or session discipline."""


class NoConsent(ToneGapError):
    """Export attempted without a valid, unused consent token."""


class EmptySummaries(ToneGapError):
    """Export attempted with nothing to export."""


# --- service / simulator -----------------------------------------------------

class LoopbackOnly(ToneGapError):
    """Refused to bind the service to a non-loopback interface."""


class ScriptGap(ToneGapError):
    """Scenario script does not cover a week or response the run needs."""
