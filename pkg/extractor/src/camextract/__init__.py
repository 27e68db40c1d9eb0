"""camextract: classifier-to-CAMB activation map exporter."""

from .cambio import CamEntry, write_camb, write_manifest
from .extractor import CamExtractor, ExtractConfig, ModelLoadError, UnreadableImage, extract

__version__ = "0.1.0"
