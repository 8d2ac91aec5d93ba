"""FAQ dataset construction and generation-evaluation toolkit.

Pipeline stages: corpus ingestion and masking, BM25 candidate retrieval,
pair labeling and classifier re-ranking, descriptive metrics, generation
sample preparation, and multi-reference ROUGE experiments.
"""

__version__ = "0.1.0"
