"""Exact slope computations on Euclidean lattices over the rationals.

The package works with hermitian vector bundles over Spec Z presented as
free Z-modules with a positive definite rational Gram matrix.  Degrees,
slopes and heights are exact elements of the Q-vector space spanned by
logarithms of primes, so every identity check in the test suite is an
exact comparison rather than a floating point one.
"""

__version__ = "0.1.0"
