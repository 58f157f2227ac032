"""Deterministic cryptographic key derivation from fingerprint and iris images."""

from .fingerprint import Minutia, minutiae_pipeline
from .fusion import FeatureVectors, fuse, quantize_iris
from .imaging import load_pgm, save_pgm
from .iris import IrisGeometry, NormalizedIris, iris_pipeline
from .keygen import KeyBits, generate_key

__version__ = "0.1.0"

__all__ = [
    "FeatureVectors",
    "IrisGeometry",
    "KeyBits",
    "Minutia",
    "NormalizedIris",
    "fuse",
    "generate_key",
    "iris_pipeline",
    "load_pgm",
    "minutiae_pipeline",
    "quantize_iris",
    "save_pgm",
]
