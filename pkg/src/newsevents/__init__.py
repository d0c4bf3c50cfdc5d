"""Unsupervised key-event mining from dated news corpora.

The pipeline turns a theme corpus (one news topic, dated articles) into a
ranked set of key events: temporally bursty phrases are scored day by day,
clustered on a phrase graph that mixes co-occurrence, embedding similarity
and temporal adjacency, and each cluster then drives an iteratively refined
document classifier that selects and ranks the event's articles.
"""

__version__ = "0.1.0"
