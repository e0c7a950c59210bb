"""Wigner quasiprobability of single-mode Fock-basis density matrices."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from .fock import DensityMatrix

NORM_TOL = 2e-2
DEFAULT_AXIS = np.linspace(-6.0, 6.0, 201)


class WignerNormalizationWarning(UserWarning):
    """The grid integral of W deviates from 1 by more than the tolerance."""


@dataclass(frozen=True, eq=False)
class WignerGrid:
    x_axis: np.ndarray
    p_axis: np.ndarray
    values: np.ndarray  # values[i, j] = W(x_axis[j], p_axis[i])
    cell_area: float

    @property
    def integral(self) -> float:
        return float(self.values.sum() * self.cell_area)

    @property
    def min(self) -> float:
        return float(self.values.min())

    @property
    def max(self) -> float:
        return float(self.values.max())

    def marginal_x(self) -> np.ndarray:
        """Position density obtained by integrating over p."""
        return self.values.sum(axis=0) * (self.p_axis[1] - self.p_axis[0])

    def peak(self):
        i, j = np.unravel_index(np.argmax(self.values), self.values.shape)
        return float(self.x_axis[j]), float(self.p_axis[i])


def _uniform(axis, name):
    a = np.asarray(axis, float)
    if a.ndim != 1 or a.size < 2:
        raise ValueError(f"{name} must be a 1-D grid with at least 2 points")
    d = np.diff(a)
    if np.any(d <= 0) or np.ptp(d) > 1e-9 * max(abs(d[0]), 1.0):
        raise ValueError(f"{name} must be uniform and increasing")
    return a


def wigner(rho: DensityMatrix | np.ndarray, x_axis=DEFAULT_AXIS, p_axis=DEFAULT_AXIS,
           check: bool = True) -> WignerGrid:
    """W(x, p) = (1/pi) sum_mn rho_mn w_mn(x, p), quadratures X = (b + b+)/sqrt2.

    A warning carrying the achieved integral is raised when the grid misses
    more than ``NORM_TOL`` of the normalization.
    """
    if not isinstance(rho, DensityMatrix):
        m = np.asarray(rho, complex)
        rho = DensityMatrix(m.shape[0], m)
    if rho.dims is not None and min(rho.dims) > 1:
        raise ValueError("wigner() needs a single-mode density matrix; take a partial trace first")
    if check:
        rho.check(tol=1e-6, eig_tol=1e-8)
    x = _uniform(x_axis, "x_axis")
    p = _uniform(p_axis, "p_axis")
    W = kernels.wigner_kernel(rho.matrix, x, p)
    grid = WignerGrid(x, p, W, float((x[1] - x[0]) * (p[1] - p[0])))
    if abs(grid.integral - 1.0) > NORM_TOL:
        warnings.warn(f"Wigner grid integral {grid.integral:.6f} deviates from 1 by more "
                      f"than {NORM_TOL}; widen or refine the grid",
                      WignerNormalizationWarning, stacklevel=2)
    return grid


def position_density(rho: DensityMatrix | np.ndarray, x) -> np.ndarray:
    """<x|rho|x> with Hermite functions; reference for the W marginal."""
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, complex)
    x = np.asarray(x, float)
    M = m.shape[0]
    psi = np.empty((M, x.size))
    psi[0] = np.pi ** -0.25 * np.exp(-0.5 * x * x)
    if M > 1:
        psi[1] = np.sqrt(2.0) * x * psi[0]
    for k in range(2, M):
        psi[k] = np.sqrt(2.0 / k) * x * psi[k - 1] - np.sqrt((k - 1) / k) * psi[k - 2]
    return np.real(np.einsum("mx,mn,nx->x", psi, m, psi))
