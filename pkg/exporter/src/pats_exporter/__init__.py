"""Bridge from pretrained feature extractors to PATS-DESC v1 files."""

from .export import ExportSpec, export_descriptors
from .extractors import make_extractor
from .format import encode, grid_positions, write_desc_file

__version__ = "0.1.0"

__all__ = [
    "ExportSpec",
    "export_descriptors",
    "make_extractor",
    "encode",
    "grid_positions",
    "write_desc_file",
    "__version__",
]
