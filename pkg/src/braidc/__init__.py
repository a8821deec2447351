"""Braid-sequence compiler for Fibonacci anyons.

Decomposes single-qubit unitaries into near-optimal braid words with a
value-iteration-trained cost-to-go network driving a weighted A* search,
alongside brute-force and Solovay-Kitaev baselines and a two-qubit
decomposition pipeline.
"""

__version__ = "0.1.0"
