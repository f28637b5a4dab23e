from __future__ import annotations

try:
    from cmdplib._version import version
except ImportError:
    version = "0.0.0"

__all__ = ["version"]
