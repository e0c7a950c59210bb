"""Dense linear algebra on truncated one- and two-mode Fock spaces.

Index convention for two-mode objects is field-major::

    index = k_field * dim_mech + k_mech

so ``np.kron(field_op, mech_op)`` acts with the field factor leftmost.
Single-mode objects carry ``dim_mech == 1``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln
from scipy.stats import poisson

HERMITIAN_TOL = 1e-12
NORM_TOL = 1e-10


class InvalidDimensionError(ValueError):
    pass


class InvalidStructureError(ValueError):
    pass


class TruncationWarning(UserWarning):
    pass


def _frozen(a, dtype=complex):
    a = np.array(a, dtype=dtype)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class FockOperator:
    dim_field: int
    dim_mech: int
    matrix: np.ndarray

    def __post_init__(self):
        m = _frozen(self.matrix)
        side = self.dim_field * self.dim_mech
        if m.shape != (side, side):
            raise InvalidDimensionError(
                f"matrix shape {m.shape} does not match dims "
                f"({self.dim_field}, {self.dim_mech})")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.dim_field * self.dim_mech

    @property
    def H(self) -> "FockOperator":
        return FockOperator(self.dim_field, self.dim_mech, self.matrix.conj().T)

    def __matmul__(self, other):
        if isinstance(other, FockOperator):
            _check_dims(self, other)
            return FockOperator(self.dim_field, self.dim_mech,
                                self.matrix @ other.matrix)
        return NotImplemented

    def __add__(self, other):
        _check_dims(self, other)
        return FockOperator(self.dim_field, self.dim_mech,
                            self.matrix + other.matrix)

    def __sub__(self, other):
        _check_dims(self, other)
        return FockOperator(self.dim_field, self.dim_mech,
                            self.matrix - other.matrix)

    def __mul__(self, scalar):
        return FockOperator(self.dim_field, self.dim_mech, scalar * self.matrix)

    __rmul__ = __mul__

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))


@dataclass(frozen=True, eq=False)
class StateVector:
    dim_field: int
    dim_mech: int
    amplitudes: np.ndarray

    def __post_init__(self):
        v = _frozen(self.amplitudes)
        if v.shape != (self.dim_field * self.dim_mech,):
            raise InvalidDimensionError(
                f"amplitude length {v.shape} does not match dims "
                f"({self.dim_field}, {self.dim_mech})")
        object.__setattr__(self, "amplitudes", v)

    @property
    def dim(self) -> int:
        return self.dim_field * self.dim_mech

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def density_matrix(self) -> "DensityMatrix":
        v = self.amplitudes
        return DensityMatrix(self.dim, np.outer(v, v.conj()),
                             dims=(self.dim_field, self.dim_mech))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    dim: int
    matrix: np.ndarray
    # (dim_field, dim_mech) when the matrix lives on a two-mode space
    dims: tuple | None = None

    def __post_init__(self):
        m = _frozen(self.matrix)
        if m.shape != (self.dim, self.dim):
            raise InvalidDimensionError(f"density matrix shape {m.shape} != dim {self.dim}")
        if self.dims is not None and self.dims[0] * self.dims[1] != self.dim:
            raise InvalidDimensionError(f"dims {self.dims} inconsistent with dim {self.dim}")
        object.__setattr__(self, "matrix", m)

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    @property
    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def check(self, tol=1e-10, eig_tol=1e-9):
        """Raise ``ValueError`` unless Hermitian, unit trace and PSD."""
        m = self.matrix
        if np.max(np.abs(m - m.conj().T)) > tol:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m) - 1.0) > tol:
            raise ValueError(f"density matrix trace {np.trace(m)} != 1")
        if np.min(np.linalg.eigvalsh(m)) < -eig_tol:
            raise ValueError("density matrix has negative eigenvalues")
        return self


def _check_dims(a, b):
    if (a.dim_field, a.dim_mech) != (b.dim_field, b.dim_mech):
        raise InvalidDimensionError(
            f"dimension mismatch: ({a.dim_field}, {a.dim_mech}) vs "
            f"({b.dim_field}, {b.dim_mech})")


def make_ladder(dim: int) -> FockOperator:
    """Annihilation operator on a ``dim``-level truncated space."""
    if int(dim) != dim or dim < 2:
        raise InvalidDimensionError(f"ladder operator needs dim >= 2, got {dim}")
    dim = int(dim)
    return FockOperator(dim, 1, np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1))


def creation(dim: int) -> FockOperator:
    return make_ladder(dim).H


def number_operator(dim: int) -> FockOperator:
    if dim < 1:
        raise InvalidDimensionError(f"dim must be positive, got {dim}")
    return FockOperator(dim, 1, np.diag(np.arange(dim, dtype=float)))


def identity(dim: int) -> FockOperator:
    return FockOperator(dim, 1, np.eye(dim))


def tensor(A: FockOperator, B: FockOperator) -> FockOperator:
    """Kronecker product with ``A`` as the field (leftmost) factor."""
    return FockOperator(A.dim, B.dim, np.kron(A.matrix, B.matrix))


def poisson_tail(mean: float, dim: int) -> float:
    """Poisson weight beyond level ``dim - 1``."""
    return float(poisson.sf(dim - 1, mean)) if mean > 0 else 0.0


def coherent_state(amplitude: complex, dim: int) -> StateVector:
    """Truncated coherent state, renormalized after the cut."""
    if dim < 1:
        raise InvalidDimensionError(f"dim must be positive, got {dim}")
    amplitude = complex(amplitude)
    tail = poisson_tail(abs(amplitude) ** 2, dim)
    if tail >= 1e-8:
        warnings.warn(f"coherent state |{amplitude}> loses Poisson weight {tail:.3g} "
                      f"beyond level {dim - 1}", TruncationWarning, stacklevel=2)
    k = np.arange(dim)
    if amplitude == 0:
        v = np.zeros(dim, complex)
        v[0] = 1.0
    else:
        # log-space to keep large k finite
        logmag = k * math.log(abs(amplitude)) - 0.5 * gammaln(k + 1)
        v = np.exp(logmag - logmag.max()) * np.exp(1j * k * np.angle(amplitude))
    return StateVector(dim, 1, v / np.linalg.norm(v))


def number_state(n: int, dim: int) -> StateVector:
    if not 0 <= n < dim:
        raise InvalidDimensionError(f"number state |{n}> outside truncation {dim}")
    v = np.zeros(dim, complex)
    v[n] = 1.0
    return StateVector(dim, 1, v)


def product_state(field: StateVector, mech: StateVector) -> StateVector:
    return StateVector(field.dim, mech.dim, np.kron(field.amplitudes, mech.amplitudes))


def _as_rho(state) -> np.ndarray:
    if isinstance(state, StateVector):
        v = state.amplitudes
        return np.outer(v, v.conj())
    return state.matrix


def _two_mode_dims(state):
    if isinstance(state, StateVector):
        dims = (state.dim_field, state.dim_mech)
    else:
        dims = state.dims
    if dims is None or dims[1] == 1:
        raise InvalidStructureError("partial trace needs a two-mode state")
    return dims


def partial_trace(state, keep: str) -> DensityMatrix:
    """Reduced density matrix of ``keep`` ('field' or 'mech')."""
    if keep not in ("field", "mech"):
        raise ValueError(f"keep must be 'field' or 'mech', got {keep!r}")
    df, dm = _two_mode_dims(state)
    if isinstance(state, StateVector):
        psi = state.amplitudes.reshape(df, dm)
        red = psi @ psi.conj().T if keep == "field" else psi.T @ psi.conj()
    else:
        r = state.matrix.reshape(df, dm, df, dm)
        red = np.einsum("ikjk->ij", r) if keep == "field" else np.einsum("kikj->ij", r)
    red = 0.5 * (red + red.conj().T)
    return DensityMatrix(red.shape[0], red)


def expectation(state, op: FockOperator) -> complex:
    """<psi|op|psi> or tr(rho op)."""
    if state.dim != op.dim:
        raise InvalidDimensionError(f"state dim {state.dim} != operator dim {op.dim}")
    if isinstance(state, StateVector):
        v = state.amplitudes
        return complex(np.vdot(v, op.matrix @ v))
    return complex(np.trace(state.matrix @ op.matrix))


def two_mode_operators(dim_field: int, dim_mech: int) -> dict:
    """Ladder and number operators lifted onto the two-mode space."""
    a = make_ladder(dim_field)
    b = make_ladder(dim_mech)
    If, Im = identity(dim_field), identity(dim_mech)
    ops = {
        "a": tensor(a, Im),
        "b": tensor(If, b),
        "n": tensor(number_operator(dim_field), Im),
        "N": tensor(If, number_operator(dim_mech)),
    }
    ops["ad"] = ops["a"].H
    ops["bd"] = ops["b"].H
    return ops
