"""Exception taxonomy for the solver pipeline."""
from __future__ import annotations


class HornError(Exception):
    """Base class for all package errors."""


class InstanceError(HornError):
    """Malformed problem data: wrong sizes, NaN/inf entries, unbalanced traces."""


class RangeError(HornError):
    """Index or order parameter outside its admissible range."""


class UnsupportedSize(HornError):
    """Operation not implemented for this matrix size."""


class SolverStalled(HornError):
    """The conic solver terminated without an acceptable optimum or certificate."""


class ConsistencyError(HornError):
    """Two internally-derived quantities disagree beyond tolerance."""


class DegenerateGram(HornError):
    """Gram matrix has too small a third eigenvalue to factor at rank 3."""


class SingularFactor(HornError):
    """Spectral factor is singular where it must be inverted or sampled."""


class MultiplicityError(HornError):
    """Repeated eigenvalues where the reconstruction needs simple spectra."""


class ConditioningError(HornError):
    """A matrix to be inverted is too ill-conditioned to trust the result."""


class ReconstructionError(HornError):
    """Final pair failed its verification contract."""


class NoSolution(HornError):
    """The instance is provably infeasible; carries the violated inequality."""

    def __init__(self, message: str, witness=None, margin: float | None = None):
        super().__init__(message)
        self.witness = witness
        self.margin = margin
