"""Exact renormalization machinery and temporal CLT experiments for rotations."""

__version__ = "0.1.0"

from .qfield import Surd, parse_literal, format_literal  # noqa: E402
from .renorm import ParamPair, to_internal, renorm_orbit  # noqa: E402

__all__ = ["Surd", "parse_literal", "format_literal", "ParamPair", "to_internal", "renorm_orbit", "__version__"]
