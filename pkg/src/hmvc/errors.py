"""Exception and warning types raised across the package."""


class HMVCError(Exception):
    """Base class for all package errors."""


# ingestion

class RowCountMismatch(HMVCError, ValueError):
    pass


class NonNumericEntry(HMVCError, ValueError):
    pass


class EmptyView(HMVCError, ValueError):
    pass


class NodeIdOutOfRange(HMVCError, ValueError):
    pass


class AsymmetricWeights(HMVCError, ValueError):
    """Adjacency is not symmetric and symmetrization was disabled."""


class InvalidLabels(HMVCError, ValueError):
    pass


# numerics

class DimensionMismatch(HMVCError, ValueError):
    pass


class IsolatedNode(HMVCError, ValueError):
    """A node has zero degree where normalization needs it positive."""


class ZeroSignal(HMVCError, ValueError):
    pass


class NoUnitEigenvalue(HMVCError, ValueError):
    """No eigenvalue near 1 was found; the graph is not properly normalized."""


class SolveFailure(HMVCError, ArithmeticError):
    pass


class QPError(HMVCError, ArithmeticError):
    """The simplex QP solver hit its iteration limit before reaching tolerance."""


class MTooLarge(HMVCError, ValueError):
    pass


class DegenerateEigenbasis(HMVCError, ValueError):
    pass


class LengthMismatch(HMVCError, ValueError):
    pass


class ConfigError(HMVCError, ValueError):
    pass


# warnings

class ZeroRowWarning(UserWarning):
    """Feature rows with zero norm; cosine similarity is taken as 0 for them."""


class DegenerateDistances(UserWarning):
    """Exact distance ties were encountered and broken by lower index."""


class EmptyClusterRepair(UserWarning):
    pass
