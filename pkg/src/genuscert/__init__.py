"""Certification toolkit for graphs embeddable on bounded-genus surfaces."""

__version__ = "0.1.0"

from .embedding import (
    BoundaryWalk,
    EmbeddingScheme,
    SurfaceKind,
    euler_genus,
    format_embedding,
    normalize_orientable,
    parse_embedding,
)
from .graph import Graph, degeneracy_order, spanning_tree

__all__ = [
    "BoundaryWalk",
    "EmbeddingScheme",
    "Graph",
    "SurfaceKind",
    "degeneracy_order",
    "euler_genus",
    "format_embedding",
    "normalize_orientable",
    "parse_embedding",
    "spanning_tree",
]
