"""Library-import novelty, growth and concentration analysis for Q&A dumps."""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("ecolens")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

from .import_parser import extract_imports, scan_post  # noqa: E402
from .novelty import (  # noqa: E402
    EventTable,
    ImportEvent,
    analyze_ecosystem,
    build_eligibility,
    count_frequencies,
    detect_novelties,
    detect_pair_novelties,
    novelty_flags_per_post,
)

__all__ = [
    "__version__",
    "EventTable",
    "ImportEvent",
    "analyze_ecosystem",
    "build_eligibility",
    "count_frequencies",
    "detect_novelties",
    "detect_pair_novelties",
    "extract_imports",
    "novelty_flags_per_post",
    "scan_post",
]
