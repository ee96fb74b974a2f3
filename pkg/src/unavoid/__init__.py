"""Embedding oriented trees in tournaments along local median orders."""

from .core import (OrientedTree, RootedTree, Tournament, leaf_count, leaf_partition, load_tournament,
                   load_tree, random_tournament, random_tree, rooted, verify_embedding)
from .errors import (EmbeddingFailure, FormatError, IncompleteEmbedding, NoGuarantee,
                     PreconditionError, UnavoidError)
from .median import OrderedHost, check_m2, local_median_order

__all__ = [
    "OrientedTree", "RootedTree", "Tournament", "leaf_count", "leaf_partition", "load_tournament",
    "load_tree", "random_tournament", "random_tree", "rooted", "verify_embedding",
    "EmbeddingFailure", "FormatError", "IncompleteEmbedding", "NoGuarantee", "PreconditionError",
    "UnavoidError", "OrderedHost", "check_m2", "local_median_order",
]
