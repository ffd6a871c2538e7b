"""Timestamps are plain ``int`` seconds since the Unix epoch, UTC."""

from datetime import datetime, timezone

MINUTE = 60
HOUR = 3600
DAY = 86400


def parse_timestamp(text):
    """Parse an ISO-8601 string into epoch seconds, normalizing to UTC.

    Naive timestamps are taken to be UTC already. A trailing ``Z`` is accepted.
    """
    s = text.strip()
    if not s:
        raise ValueError("empty timestamp")
    if s.endswith(("Z", "z")):
        s = s[:-1] + "+00:00"
    dt = datetime.fromisoformat(s)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def format_timestamp(seconds):
    return datetime.fromtimestamp(seconds, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
