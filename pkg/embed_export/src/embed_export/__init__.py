"""Offline image embedding exporter producing FDSM embedded-dataset files."""

from .encoder import LayerEncoder, preprocess
from .export import export
from .manifest import ExportError, ExportManifest

__all__ = [
    "ExportError",
    "ExportManifest",
    "LayerEncoder",
    "export",
    "preprocess",
]

__version__ = "0.1.0"
