"""Verification harness for newforms on the unramified p-adic unitary group U(2,1)."""

from u21.localfield import FieldConfig, EElement, PrecisionError, ConstraintError

__version__ = "0.1.0"

__all__ = ["FieldConfig", "EElement", "PrecisionError", "ConstraintError", "__version__"]
