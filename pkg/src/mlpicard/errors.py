"""Exception types shared across the package."""

from __future__ import annotations

__all__ = ["ConfigError", "ResourceLimitError"]


class ConfigError(Exception):
    """Invalid experiment configuration (CLI exit code 2)."""


class ResourceLimitError(RuntimeError):
    """Work refused because a configured cost ceiling would be exceeded
    (CLI exit code 3)."""
