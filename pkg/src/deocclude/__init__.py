"""Layered-scene de-occlusion toolkit: ordering recovery, amodal and content
completion, and occlusion-aware recomposition on synthetic 2D scenes."""

__version__ = "0.1.0"
