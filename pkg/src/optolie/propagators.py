"""Coefficient functions of the product-form (Wei-Norman) propagators.

Every propagator here is an ordered product of exponentials of mechanical
generators.  Four families are covered:

``linear``
    ``exp(a1 n) exp(a2 N) exp(a3 n b+) exp(a4 n b) exp(a5 n^2)`` for the
    purely linear coupling, all in closed form.
``quadratic``
    ``exp(b1 b+^2) exp(b2 N) exp(b3 b^2) exp(b4)`` for the purely quadratic
    coupling at fixed photon number.
``linquad`` / ``forced``
    ``exp(a1 b+^2) exp(a2 b+) exp(a3 N) exp(a4 b) exp(a5 b^2) exp(a6)`` for
    linear plus quadratic coupling, either at fixed photon number or with
    the photon number replaced by its driven mean ``n0 + |alpha_1(t)|^2``.

The six-generator equations solved by :mod:`optolie.kernels` follow from
``i dU/dt = H U`` with ``H = sum_j h_j(t) X_j``::

    a1' = -i (h1 + 2 a1 h3 + 4 a1^2 h5)
    a2' = -i (h2 + a2 h3 + 2 a1 h4 + 4 a1 a2 h5)
    a3' = -i (h3 + 4 a1 h5)
    a4' = -i exp(a3) (h4 + 2 a2 h5)
    a5' = -i exp(2 a3) h5
    a6' = -i (h6 + a2 h4 + (a2^2 + 2 a1) h5)

See ``docs/derivation.md`` for the adjoint-action bookkeeping.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from functools import partial
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline
from scipy.linalg import expm

from . import kernels
from .errors import IntegrationError, ResonanceError
from .fock import make_ladder

DEFAULT_RTOL = 1e-12
DEFAULT_ATOL = 1e-12
RESONANCE_GUARD = 1e-3


class RegimeWarning(UserWarning):
    """Drive parameters outside the weak, far-detuned regime."""


@dataclass(frozen=True)
class SystemParams:
    """Frequencies and dimensionless couplings of the optomechanical model.

    ``G0 = g0 * omega_m`` and ``G1 = g1 * omega_m`` are the couplings in
    frequency units; ``Omega`` and ``omega_d`` describe the classical drive.
    """
    omega_c: float = 10.0
    omega_m: float = 1.0
    g0: float = 0.0
    g1: float = 0.0
    Omega: float = 0.0
    omega_d: float = 0.0

    def __post_init__(self):
        for name in ("omega_c", "omega_m", "g0", "g1", "Omega", "omega_d"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if self.omega_m <= 0 or self.omega_c <= 0:
            raise ValueError("omega_m and omega_c must be positive")
        if self.g0 < 0 or self.g1 < 0 or self.Omega < 0:
            raise ValueError("g0, g1 and Omega must be non-negative")
        if self.omega_d < 0:
            raise ValueError("omega_d must be non-negative")

    @property
    def omega_c_prime(self) -> float:
        return self.omega_c + self.g1 * self.omega_m

    def with_(self, **changes) -> "SystemParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class GeneratorModel:
    """Time-dependent coefficients on (b+^2, b+, N, b, b^2, 1).

    ``h_j(t) = omega_m * nu(t) * c_j * exp(i s_j omega_m t) + d_j`` with
    ``nu(t) = n + |alpha_1(t)|^2`` (just ``n`` when undriven).
    """
    omega_m: float
    n: float
    c: tuple
    s: tuple
    d: tuple
    Omega: float = 0.0
    wcp: float = 1.0
    wd: float = 0.0

    def coeffs(self, t):
        return np.array([self.h(tt) for tt in np.atleast_1d(t)])

    def h(self, t):
        from ._pykernels import model_coeffs
        return model_coeffs(t, self.omega_m, self.n, np.asarray(self.c, float),
                            np.asarray(self.s, float), np.asarray(self.d, complex),
                            self.Omega, self.wcp, self.wd)

    def integrate(self, t_grid, rtol, atol):
        return kernels.integrate_wn(t_grid, self.omega_m, float(self.n),
                                    np.asarray(self.c, float), np.asarray(self.s, float),
                                    np.asarray(self.d, complex), self.Omega, self.wcp,
                                    self.wd, rtol, atol)


@dataclass(frozen=True, eq=False)
class CoefficientTrajectory:
    """Coefficient functions of one product-form propagator on a time grid.

    ``coeffs[i, k]`` is the k-th coefficient at ``t_grid[i]`` in the
    generator order of ``scenario``.  ``picture`` is ``'schrodinger'`` when
    the product is the full propagator and ``'interaction'`` when it sits to
    the right of the free evolution ``exp(-i (wc' n + wm N) t)``.
    """
    t_grid: np.ndarray
    coeffs: np.ndarray
    scenario: str
    n: float
    params: SystemParams
    picture: str = "schrodinger"
    rtol: float = DEFAULT_RTOL
    atol: float = DEFAULT_ATOL
    builder: Callable | None = field(default=None, repr=False)

    def __post_init__(self):
        t = np.asarray(self.t_grid, float)
        if t.ndim != 1 or t.size == 0 or t[0] != 0.0 or np.any(np.diff(t) <= 0):
            raise ValueError("t_grid must be strictly increasing and start at 0")
        for name, arr in (("t_grid", t), ("coeffs", np.asarray(self.coeffs, complex))):
            arr = arr.copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def generators(self):
        return GENERATOR_ORDER[self.scenario]

    def at(self, t) -> np.ndarray:
        """Coefficients at ``t``; grid nodes exactly, cubic spline between."""
        t = float(t)
        tg = self.t_grid
        if t < tg[0] - 1e-12 or t > tg[-1] + 1e-12:
            raise ValueError(f"t={t} outside trajectory grid [{tg[0]}, {tg[-1]}]")
        i = int(np.searchsorted(tg, t))
        for j in (i - 1, i):
            if 0 <= j < tg.size and abs(tg[j] - t) <= 1e-12 * max(1.0, abs(t)):
                return self.coeffs[j]
        if self.scenario == "linear":
            return linear_alphas(self.params, t)[0]
        return CubicSpline(tg, self.coeffs, axis=0)(t)

    def rebuild(self, t_grid, rtol=None, atol=None) -> "CoefficientTrajectory":
        """Recompute on another grid (optionally other tolerances)."""
        if self.builder is None:
            raise ValueError("trajectory has no builder")
        return self.builder(np.asarray(t_grid, float),
                            rtol=self.rtol if rtol is None else rtol,
                            atol=self.atol if atol is None else atol)


GENERATOR_ORDER = {
    "linear": ("n", "N", "n b+", "n b", "n^2"),
    "quadratic": ("b+^2", "N", "b^2", "1"),
    "linquad": ("b+^2", "b+", "N", "b", "b^2", "1"),
    "forced": ("b+^2", "b+", "N", "b", "b^2", "1"),
}


def _grid(t_grid):
    t = np.asarray(t_grid, float)
    if t.ndim != 1 or t.size == 0 or t[0] != 0.0 or np.any(np.diff(t) <= 0):
        raise ValueError("t_grid must be strictly increasing and start at 0")
    return t


# -- linear coupling: closed forms ------------------------------------------

def linear_alphas(params: SystemParams, t) -> np.ndarray:
    """Closed-form coefficients of the linear-coupling propagator.

    Returns an array of shape ``(len(t), 5)`` for the order
    ``(n, N, n b+, n b, n^2)``.  The photon number enters only through the
    operators, so the coefficients do not depend on it.
    """
    t = np.atleast_1d(np.asarray(t, float))
    w, g0 = params.omega_m, params.g0
    e = np.exp(-1j * w * t)
    return np.stack([
        -1j * params.omega_c * t,
        -1j * w * t,
        g0 * (1.0 / e - 1.0),
        g0 * (1.0 - e),
        1j * g0 ** 2 * w * t - g0 ** 2 * (1.0 - e),
    ], axis=1)


def linear_displacement(params: SystemParams, n, t):
    """Photon-number-dependent shift of the mechanical coherent amplitude."""
    t = np.asarray(t, float)
    return params.g0 * (1.0 - np.exp(-1j * params.omega_m * t)) * n


def linear_phonon_mean(params: SystemParams, n, Gamma, t):
    t = np.asarray(t, float)
    amp = Gamma * np.exp(-1j * params.omega_m * t) + linear_displacement(params, n, t)
    return np.abs(amp) ** 2


def linear_coefficients(params: SystemParams, n: int, t_grid, **_) -> CoefficientTrajectory:
    t = _grid(t_grid)
    return CoefficientTrajectory(t, linear_alphas(params, t), "linear", n, params,
                                 builder=partial(linear_coefficients, params, n))


# -- quadratic coupling ------------------------------------------------------

def quadratic_phi(params: SystemParams, n) -> tuple:
    """Coefficients (Phi_1..Phi_4) on (b+^2, N, b^2, 1) at photon number n.

    The squeezing terms carry the photon number, as in the full
    Hamiltonian: ``g1 wm n (b^2 + b+^2)``.
    """
    w, g1 = params.omega_m, params.g1
    return (g1 * w * n, w * (1 + 2 * g1 * n), g1 * w * n, params.omega_c_prime * n)


def quadratic_coefficients(params: SystemParams, n: int, t_grid,
                           rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL) -> CoefficientTrajectory:
    """Integrate the four quadratic-coupling coefficient equations."""
    t = _grid(t_grid)
    p1, p2, p3, p4 = quadratic_phi(params, n)

    def rhs(_, b):
        b1, b2 = b[0], b[1]
        return -1j * np.array([
            p1 + 4 * b1 * b1 * p3 + 2 * b1 * p2,
            p2 + 4 * b1 * p3,
            p3 * np.exp(2 * b2),
            p4 + 2 * b1 * p3,
        ])

    out = np.zeros((t.size, 4), complex)
    if t.size > 1:
        sol = solve_ivp(rhs, (0.0, t[-1]), np.zeros(4, complex), method="RK45",
                        t_eval=t, rtol=rtol, atol=atol)
        if not sol.success:
            raise IntegrationError(f"quadratic coefficients: {sol.message}",
                                   t_fail=float(sol.t[-1]))
        out[:] = sol.y.T
        out[0] = 0.0
    return CoefficientTrajectory(t, out, "quadratic", n, params, rtol=rtol, atol=atol,
                                 builder=partial(quadratic_coefficients, params, n))


# -- linear + quadratic, undriven --------------------------------------------

def linquad_model(params: SystemParams, n, picture="interaction") -> GeneratorModel:
    w, g0, g1 = params.omega_m, params.g0, params.g1
    c = (g1, -g0, 2 * g1, -g0, g1, 0.0)
    if picture == "interaction":
        return GeneratorModel(w, n, c, (2, 1, 0, -1, -2, 0), (0,) * 6,
                              wcp=params.omega_c_prime)
    if picture == "schrodinger":
        d = (0, 0, w, 0, 0, params.omega_c_prime * n)
        return GeneratorModel(w, n, c, (0,) * 6, d, wcp=params.omega_c_prime)
    raise ValueError(f"unknown picture {picture!r}")


def linquad_coefficients(params: SystemParams, n: int, t_grid, picture="interaction",
                         rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL) -> CoefficientTrajectory:
    """Six coefficient functions for linear plus quadratic coupling.

    With ``picture='interaction'`` (the default) the product is taken
    relative to the free evolution, so the Heisenberg maps pick up the
    ``exp(+-i wm t)`` factors; ``'schrodinger'`` integrates the full
    propagator directly.
    """
    t = _grid(t_grid)
    coeffs = linquad_model(params, n, picture).integrate(t, rtol, atol)
    return CoefficientTrajectory(t, coeffs, "linquad", n, params, picture, rtol, atol,
                                 builder=partial(linquad_coefficients, params, n,
                                                 picture=picture))


# -- drive ---------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DriveAlphas:
    """Field-displacement factor ``exp(a1 a+) exp(a2 a) exp(a3)``."""
    t: np.ndarray
    alpha1: np.ndarray
    alpha2: np.ndarray
    alpha3: np.ndarray


def _check_resonance(params: SystemParams):
    wcp = params.omega_c_prime
    if abs(wcp - params.omega_d) <= RESONANCE_GUARD * wcp:
        raise ResonanceError(
            f"drive frequency {params.omega_d} within {RESONANCE_GUARD:g} * wc' of "
            f"the shifted cavity frequency {wcp}; closed form is singular there")


def drive_alpha1(params: SystemParams, t):
    _check_resonance(params)
    return kernels.drive_alpha1(t, params.Omega, params.omega_c_prime, params.omega_d)


def drive_alpha2(params: SystemParams, t):
    _check_resonance(params)
    t = np.asarray(t, float)
    wcp, wd, Om = params.omega_c_prime, params.omega_d, params.Omega
    if Om == 0.0:
        return np.zeros_like(t, dtype=complex)
    pref = Om / (wcp * wcp - wd * wd)
    return pref * (-wcp + np.exp(-1j * wcp * t) * (wcp * np.cos(wd * t)
                                                   + 1j * wd * np.sin(wd * t)))


def _cumulative_richardson(f, t):
    """Cumulative integral of ``f`` from t[0] with trapezoid + Richardson."""
    mid = 0.5 * (t[:-1] + t[1:])
    ft, fm = f(t), f(mid)
    dt = np.diff(t)
    coarse = 0.5 * dt * (ft[:-1] + ft[1:])
    fine = 0.25 * dt * (ft[:-1] + 2 * fm + ft[1:])
    seg = (4 * fine - coarse) / 3
    return np.concatenate([[0.0], np.cumsum(seg)])


def drive_alphas(params: SystemParams, t, substeps: int = 8) -> DriveAlphas:
    """Closed-form a1, a2 and the scalar phase a3 = int a1 a2' dt.

    ``t`` may be a scalar or a grid; a3 is integrated from 0 on a grid
    refined ``substeps`` times between requested points.
    """
    t = np.atleast_1d(np.asarray(t, float))
    a1 = drive_alpha1(params, t)
    a2 = drive_alpha2(params, t)
    if params.Omega == 0.0:
        return DriveAlphas(t, a1, a2, np.zeros_like(a1))
    Om, wcp, wd = params.Omega, params.omega_c_prime, params.omega_d

    def integrand(s):
        return drive_alpha1(params, s) * (-1j * Om * np.exp(-1j * wcp * s) * np.cos(wd * s))

    nodes = np.unique(np.concatenate([[0.0], t]))
    # resolve the fast cavity phase: at least 16 points per optical period
    span = nodes[-1] - nodes[0]
    n_fine = max(substeps * (nodes.size - 1), int(16 * span * wcp / (2 * np.pi)) + 1)
    fine = np.unique(np.concatenate([nodes, np.linspace(0.0, nodes[-1], n_fine + 1)]))
    cum = _cumulative_richardson(integrand, fine)
    a3 = np.interp(t, fine, cum.real) + 1j * np.interp(t, fine, cum.imag)
    return DriveAlphas(t, a1, a2, a3)


def mean_photon_forced(params: SystemParams, n0, t):
    """Driven photon number replaced by its mean, n0 + |a1(t)|^2."""
    if params.omega_d >= 0.5 * params.omega_c_prime:
        warnings.warn("mean-photon approximation assumes omega_d << omega_c'",
                      RegimeWarning, stacklevel=2)
    if params.Omega >= params.omega_m:
        warnings.warn("mean-photon approximation assumes Omega < omega_m",
                      RegimeWarning, stacklevel=2)
    if params.Omega == 0.0:
        return n0 + np.zeros_like(np.asarray(t, float))
    return n0 + np.abs(drive_alpha1(params, t)) ** 2


def forced_model(params: SystemParams, n0) -> GeneratorModel:
    _check_resonance(params)
    w, g0, g1 = params.omega_m, params.g0, params.g1
    return GeneratorModel(w, n0, (g1, -g0, 2 * g1, -g0, g1, 0.0), (2, 1, 0, -1, -2, 0),
                          (0,) * 6, params.Omega, params.omega_c_prime, params.omega_d)


def _integrate_callable(params, n_mean, t, rtol, atol):
    from ._pykernels import wn_rhs
    w, g0, g1 = params.omega_m, params.g0, params.g1
    c = np.array([g1, -g0, 2 * g1, -g0, g1, 0.0])
    s = np.array([2, 1, 0, -1, -2, 0.0])

    def f(tt, y):
        return wn_rhs(y, w * float(n_mean(tt)) * c * np.exp(1j * s * w * tt))

    out = np.zeros((t.size, 6), complex)
    if t.size > 1:
        sol = solve_ivp(f, (0.0, t[-1]), np.zeros(6, complex), method="RK45",
                        t_eval=t, rtol=rtol, atol=atol)
        if not sol.success:
            raise IntegrationError(f"forced coefficients: {sol.message}",
                                   t_fail=float(sol.t[-1]))
        out[:] = sol.y.T
        out[0] = 0.0
    return out


def forced_interaction_coefficients(params: SystemParams, n_mean, t_grid,
                                    rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL
                                    ) -> CoefficientTrajectory:
    """Coefficients of the mechanical interaction factor of the driven system.

    ``n_mean`` is either the initial photon number ``n0`` (the mean photon
    number is then ``n0 + |a1(t)|^2`` in closed form, using the compiled
    kernel) or any callable ``t -> mean photon number``.
    """
    t = _grid(t_grid)
    if callable(n_mean):
        coeffs = _integrate_callable(params, n_mean, t, rtol, atol)
        n_label = float(n_mean(0.0))
    else:
        coeffs = forced_model(params, n_mean).integrate(t, rtol, atol)
        n_label = n_mean
    return CoefficientTrajectory(t, coeffs, "forced", n_label, params, "interaction",
                                 rtol, atol,
                                 builder=partial(forced_interaction_coefficients,
                                                 params, n_mean))


def full_propagator_coeffs(params: SystemParams, n, t_grid, rtol=DEFAULT_RTOL,
                           atol=DEFAULT_ATOL):
    """Factors of ``U = U0 U_drive U_mech`` on a shared grid.

    ``U0`` is fixed by ``params`` (``exp(-i t (wc' n + wm N))``); the drive
    factor and the mechanical factor coefficients are returned.
    """
    t = _grid(t_grid)
    return (drive_alphas(params, t),
            forced_interaction_coefficients(params, n, t, rtol=rtol, atol=atol))


# -- structural checks -------------------------------------------------------

def _mech_generators(dim):
    b = make_ladder(dim).matrix
    bd = b.conj().T
    return {"b+^2": bd @ bd, "b+": bd, "N": bd @ b, "b": b, "b^2": b @ b,
            "1": np.eye(dim)}


def _factor_mats(traj: CoefficientTrajectory, dim: int):
    gens = _mech_generators(dim)
    n = traj.n
    if traj.scenario == "linear":
        return [n * gens["1"], gens["N"], n * gens["b+"], n * gens["b"], n * n * gens["1"]]
    return [gens[g] for g in traj.generators]


def assemble_propagator(traj: CoefficientTrajectory, coeffs, dim: int) -> np.ndarray:
    """Ordered product of matrix exponentials on a ``dim``-level mechanical space.

    For the linear family the photon operators are replaced by the
    trajectory's photon number.
    """
    U = np.eye(dim, dtype=complex)
    for a, X in zip(coeffs, _factor_mats(traj, dim)):
        U = U @ expm(a * X)
    return U


def hamiltonian_matrix(traj: CoefficientTrajectory, t: float, dim: int) -> np.ndarray:
    """The (mechanical) Hamiltonian generating ``traj`` at time ``t``."""
    p, n = traj.params, traj.n
    gens = _mech_generators(dim)
    if traj.scenario == "linear":
        return (p.omega_c * n * gens["1"] + p.omega_m * gens["N"]
                - p.g0 * p.omega_m * n * (gens["b"] + gens["b+"]))
    if traj.scenario == "quadratic":
        phi = quadratic_phi(p, n)
        return sum(f * gens[g] for f, g in zip(phi, traj.generators))
    if traj.scenario == "linquad":
        model = linquad_model(p, n, traj.picture)
    else:
        model = forced_model(p, n)
    h = model.h(t)
    return sum(hj * gens[g] for hj, g in zip(h, traj.generators))


def residual_check(traj: CoefficientTrajectory, dim: int = 24, n_times: int = 10,
                   step: float | None = None, build_dim: int | None = None) -> float:
    """Max over sampled times of ||dU/dt + i H U|| / ||H||  (max-abs norms),
    on the leading ``dim x dim`` block.

    ``dU/dt`` is a central difference taken factor by factor (product rule),
    each factor's difference ``exp(a(t+h) X) - exp(a(t-h) X)`` being formed
    from small exponents; differencing the assembled product instead loses
    all digits once displacement factors reach entries of order 1e10.  The
    product lives on ``build_dim`` levels (default ``4 * dim``) so that
    truncating each exponential does not leak into the checked block.
    """
    T = traj.t_grid[-1]
    h = step if step is not None else 1e-5 / traj.params.omega_m
    bd = build_dim or 4 * dim
    samples = np.linspace(T / (n_times + 1), T * n_times / (n_times + 1), n_times)
    grid = np.unique(np.concatenate([[0.0], samples - h, samples, samples + h]))
    fine = traj.rebuild(grid) if traj.builder is not None else traj
    mats = _factor_mats(traj, bd)
    worst = 0.0
    for ts in samples:
        i = int(np.argmin(np.abs(grid - ts)))
        am, a0, ap = fine.coeffs[i - 1], fine.coeffs[i], fine.coeffs[i + 1]
        span = grid[i + 1] - grid[i - 1]
        F = [expm(a * X) for a, X in zip(a0, mats)]
        U = np.eye(bd, dtype=complex)
        left = [U]
        for f in F:
            U = U @ f
            left.append(U)
        dU = np.zeros_like(U)
        right = np.eye(bd, dtype=complex)
        for k in range(len(F) - 1, -1, -1):
            D = F[k] @ (expm((ap[k] - a0[k]) * mats[k]) - expm((am[k] - a0[k]) * mats[k]))
            dU += left[k] @ D @ right
            right = F[k] @ right
        dU /= span
        H = hamiltonian_matrix(traj, ts, bd)
        res = (dU + 1j * H @ U)[:dim, :dim]
        worst = max(worst, np.max(np.abs(res)) / np.max(np.abs(H[:dim, :dim])))
    return float(worst)


def unitarity_error(traj: CoefficientTrajectory, index: int, dim: int = 24,
                    build_dim: int | None = None) -> float:
    """||U^+ U - 1|| on the leading ``dim - 4`` block.

    The product is assembled on ``build_dim`` levels (default ``4 * dim``)
    so that the column sums feeding the block are not cut off.
    """
    bd = build_dim or 4 * dim
    U = assemble_propagator(traj, traj.coeffs[index], bd)
    k = dim - 4
    G = (U.conj().T @ U)[:k, :k]
    return float(np.max(np.abs(G - np.eye(k))))
