"""Retrieval-based multi-attribute scene classification.

Frame embeddings are ingested into an exact or approximate cosine index;
new frames are classified by majority vote over their nearest annotated
neighbors, and runs are scored per attribute with precision/recall and a
distance-to-ideal ranking.
"""

__version__ = "0.1.0"
