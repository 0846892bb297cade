"""Exception types shared across the package."""

from __future__ import annotations


class SpinCtrlError(Exception):
    """Base class for all package errors."""


class InputError(SpinCtrlError, ValueError):
    """Malformed caller input: wrong shape, non-finite entries, out-of-range scalar."""


class ModelValidationError(SpinCtrlError, ValueError):
    """Physical model data violates a structural requirement (e.g. non-Hermitian operator)."""


class ConfigError(SpinCtrlError, ValueError):
    """Run configuration file is missing fields or holds inconsistent values."""
