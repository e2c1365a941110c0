"""
Training Run Logging Module

Records notable events of a training or evaluation run and forwards them to
the ``xlan`` logger.

Key responsibilities:
  - Create unique run session identifiers
  - Log numeric issues (non-finite losses, clipped gradients), file I/O,
    configuration choices, checkpoints and progress
  - Retrieve a session's events by severity
  - Generate a human-readable run report

Session identifiers only appear in reports, never in the CSV log or in
checkpoints, so those artifacts stay byte-identical across runs.
"""

import logging
import uuid
from datetime import datetime
from typing import Any, List, Optional


logger = logging.getLogger("xlan")


# ============================================================================
# Constants
# ============================================================================

EVENT_NUMERIC = "numeric"
EVENT_IO = "io"
EVENT_CONFIG = "config"
EVENT_CHECKPOINT = "checkpoint"
EVENT_PROGRESS = "progress"

SEVERITY_ERROR = "error"
SEVERITY_WARNING = "warning"
SEVERITY_INFO = "info"

_LEVELS = {
    SEVERITY_ERROR: logging.ERROR,
    SEVERITY_WARNING: logging.WARNING,
    SEVERITY_INFO: logging.INFO,
}


# ============================================================================
# Session Management
# ============================================================================

class RunSession:
    """Represents a single training/evaluation run."""

    def __init__(self, run_name: str = "run"):
        """
        Initialize a new run session.

        Args:
            run_name: Label shown in reports (e.g. the output directory)
        """
        self.session_id = uuid.uuid4()
        self.run_name = run_name
        self.start_time = datetime.now()
        self.events: List[dict] = []

    def __str__(self) -> str:
        return f"RunSession(id={self.session_id}, run={self.run_name})"


# ============================================================================
# Event Logging Functions
# ============================================================================

def log_numeric_issue(
    session: Optional[RunSession],
    message: str,
    step: Optional[int] = None,
    value: Optional[Any] = None,
    severity: str = SEVERITY_WARNING,
) -> None:
    """
    Log a numeric problem: a non-finite loss, a clipped gradient, a metric
    that moved the wrong way.

    Args:
        session: Run session collecting the event (None only forwards to logging)
        message: Human-readable description
        step: Training step where it happened (optional)
        value: The offending value (optional)
        severity: "error", "warning" or "info"
    """
    _log_event(session, EVENT_NUMERIC, severity, message, step, value)


def log_io_event(session: Optional[RunSession], message: str, path: Optional[Any] = None) -> None:
    """Log a file written or read by the run."""
    _log_event(session, EVENT_IO, SEVERITY_INFO, message, None, path)


def log_config_event(session: Optional[RunSession], message: str, value: Optional[Any] = None) -> None:
    """Log the configuration a run resolved to."""
    _log_event(session, EVENT_CONFIG, SEVERITY_INFO, message, None, value)


def log_checkpoint(session: Optional[RunSession], path: Any, step: int) -> None:
    _log_event(session, EVENT_CHECKPOINT, SEVERITY_INFO, "checkpoint saved", step, path)


def log_progress(session: Optional[RunSession], message: str, step: Optional[int] = None) -> None:
    _log_event(session, EVENT_PROGRESS, SEVERITY_INFO, message, step, None)


# ============================================================================
# Internal Implementation
# ============================================================================

def _log_event(
    session: Optional[RunSession],
    event_type: str,
    severity: str,
    message: str,
    step: Optional[int] = None,
    value: Optional[Any] = None,
) -> None:
    """Append the event to the session and forward it to the ``xlan`` logger."""
    record = {
        "timestamp": datetime.now(),
        "event_type": event_type,
        "severity": severity,
        "message": message,
        "step": step,
        "value": str(value) if value is not None else None,
    }
    if session is not None:
        session.events.append(record)
    suffix = f" (step {step})" if step is not None else ""
    logger.log(_LEVELS.get(severity, logging.INFO), "%s: %s%s", event_type, message, suffix)


# ============================================================================
# Reporting
# ============================================================================

def get_session_events(session: RunSession, severity_filter: Optional[str] = None) -> List[dict]:
    """
    Return a session's events, oldest first.

    Args:
        session: Run session
        severity_filter: Optional filter by severity ("error", "warning", "info")
    """
    if severity_filter is None:
        return list(session.events)
    return [e for e in session.events if e["severity"] == severity_filter]


def format_run_report(events: List[dict], session_id: Optional[str] = None) -> str:
    """
    Format a list of events as a human-readable report.

    Args:
        events: Events from get_session_events()
        session_id: Optional session ID to include in the header

    Returns:
        Formatted report string
    """
    lines = ["=" * 80, "TRAINING RUN REPORT"]
    if session_id:
        lines.append(f"Session ID: {session_id}")
    lines.append("=" * 80)

    notable = [e for e in events if e["severity"] in (SEVERITY_ERROR, SEVERITY_WARNING)]
    if not notable:
        lines.append("✓ No errors or warnings")

    counts = {sev: sum(1 for e in events if e["severity"] == sev)
              for sev in (SEVERITY_ERROR, SEVERITY_WARNING, SEVERITY_INFO)}
    lines.append("")
    lines.append("Summary:")
    lines.append(f"  Errors:   {counts[SEVERITY_ERROR]}")
    lines.append(f"  Warnings: {counts[SEVERITY_WARNING]}")
    lines.append(f"  Info:     {counts[SEVERITY_INFO]}")

    for severity in (SEVERITY_ERROR, SEVERITY_WARNING):
        group = [e for e in events if e["severity"] == severity]
        if not group:
            continue
        lines.append("")
        lines.append(f"{severity.upper()}S:")
        lines.append("-" * 80)
        for event in group:
            timestamp = event["timestamp"].strftime("%Y-%m-%d %H:%M:%S") if event.get("timestamp") else "N/A"
            lines.append(f"  [{timestamp}] {event['event_type']} - {event['message']}")
            if event.get("step") is not None:
                lines.append(f"    Step: {event['step']}")
            if event.get("value"):
                lines.append(f"    Value: {event['value'][:100]}")

    lines.append("=" * 80)
    return "\n".join(lines)
