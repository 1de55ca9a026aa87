from __future__ import annotations


class CQSimError(Exception):
    """Base class for every error the simulator raises on purpose."""

    exit_code = 1


class ConfigError(CQSimError):
    exit_code = 2


class PreconditionError(CQSimError, ValueError):
    exit_code = 3


class InvariantError(CQSimError):
    exit_code = 4
