"""Kernel selection: compiled extension if present, numpy fallback otherwise."""

try:
    from intentctl._kernels._sumtree import SumTree

    BACKEND = "compiled"
except ImportError:  # pragma: no cover - depends on build environment
    from intentctl._kernels.sumtree_py import SumTree

    BACKEND = "python"

__all__ = ["SumTree", "BACKEND"]
