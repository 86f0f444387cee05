"""Cache-trie: a lock-free concurrent hash trie with an auxiliary level cache."""

from cachetrie.trie import CacheTrie, CacheStats, create_anode
from cachetrie.nodes import ENode, FNode, LNode, SNode, default_hash, position

__all__ = [
    "CacheTrie",
    "CacheStats",
    "ENode",
    "FNode",
    "LNode",
    "SNode",
    "create_anode",
    "default_hash",
    "position",
]

__version__ = "0.1.0"
