from __future__ import annotations

import sys
from datetime import datetime, timezone

UTC = timezone.utc

_quiet = False


def set_quiet(value: bool) -> None:
    global _quiet
    _quiet = value


def utc_iso_now() -> str:
    return datetime.now(tz=UTC).isoformat()


def log(message: str) -> None:
    if not _quiet:
        print(f"[{utc_iso_now()}] {message}")


def warn(message: str) -> None:
    print(f"[{utc_iso_now()}] warning: {message}", file=sys.stderr if _quiet else sys.stdout)
