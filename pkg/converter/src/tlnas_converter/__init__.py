"""One-shot converters from published benchmark artifacts to the flat
formats the scoring toolkit reads: fixture JSON-lines and TLNAS1 image
binaries."""

from .errors import ConversionError
from .imagenet16 import convert_imagenet16
from .nasbench import extract_nasbench

__version__ = "0.1.0"

__all__ = ["ConversionError", "convert_imagenet16", "extract_nasbench"]
