"""Pick the enumeration kernel: the compiled extension when it is importable,
the numpy fallback otherwise (or when TWOSPIN_PURE_PYTHON=1)."""
import os

if os.environ.get("TWOSPIN_PURE_PYTHON", "") not in ("", "0"):
    from ._enumerate_py import histogram
    KERNEL = "python"
else:
    try:
        from ._enumerate import histogram
        KERNEL = "compiled"
    except ImportError:  # extension not built
        from ._enumerate_py import histogram
        KERNEL = "python"

__all__ = ["histogram", "KERNEL"]
