"""Mechanical observables from the Heisenberg-picture ladder maps.

Every product-form propagator maps the ladder operators linearly::

    b+(t) = f1 b+ + f2 b + f3
    b(t)  = f4 b  + f5 b+ + f6

so expectation values between mechanical coherent states ``|Gamma>`` are
polynomials in ``Gamma`` and ``Gamma*``.  Quadratures use
``X = (b + b+)/sqrt(2)``, ``P = i (b+ - b)/sqrt(2)``.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import poisson

from .errors import ConsistencyError
from .propagators import (CoefficientTrajectory, SystemParams, forced_interaction_coefficients,
                          linear_alphas, linear_coefficients, linquad_coefficients)

IMAG_TOL = 1e-8
POISSON_TOL = 1e-8

LABELS = ("phonon_mean", "photon_mean", "X_mean", "P_mean", "dX", "dP", "mandel_Q",
          "uncertainty_product")


@dataclass(frozen=True, eq=False)
class HeisenbergCoeffs:
    """Coefficients of the ladder-operator map at one time (or a grid of times).

    Fields may be scalars or equal-length arrays.
    """
    c_bdag_to_bdag: complex
    c_bdag_to_b: complex
    c_bdag_const: complex
    c_b_to_b: complex
    c_b_to_bdag: complex
    c_b_const: complex
    time: float
    n: float

    @property
    def f(self):
        return (self.c_bdag_to_bdag, self.c_bdag_to_b, self.c_bdag_const,
                self.c_b_to_b, self.c_b_to_bdag, self.c_b_const)

    def symplectic_error(self):
        f1, f2, _, f4, f5, _ = self.f
        return np.abs(f1 * f4 - f2 * f5 - 1.0)


@dataclass(frozen=True, eq=False)
class ObservableSeries:
    t_grid: np.ndarray
    values: np.ndarray
    label: str
    provenance: str  # 'analytic' or 'oracle'

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValueError(f"unknown observable label {self.label!r}")
        if self.provenance not in ("analytic", "oracle"):
            raise ValueError(f"unknown provenance {self.provenance!r}")


def heisenberg_coeffs(traj: CoefficientTrajectory, t=None) -> HeisenbergCoeffs:
    """Ladder map at time ``t`` (or on the whole grid when ``t`` is None)."""
    if t is None:
        tt = traj.t_grid
        a = traj.coeffs.T
    else:
        tt = float(t)
        a = traj.at(tt)
    w = traj.params.omega_m
    n = traj.n
    if traj.scenario == "linear":
        _, a2, a3, a4, _ = a
        em, ep = np.exp(-a2), np.exp(a2)
        z = 0.0 * em
        f = (em, z, -a4 * n * em, ep, z, a3 * n * ep)
    elif traj.scenario == "quadratic":
        b1, b2, b3, _ = a
        em = np.exp(-b2)
        z = 0.0 * em
        f = (em, -2 * b3 * em, z, np.exp(b2) - 4 * b1 * b3 * em, 2 * b1 * em, z)
    else:
        a1, a2, a3, a4, a5, _ = a
        em = np.exp(-a3)
        if traj.picture == "interaction":
            up, dn = np.exp(1j * w * np.asarray(tt)), np.exp(-1j * w * np.asarray(tt))
        else:
            up = dn = 1.0
        f = (up * em, -2 * a5 * em * up, -a4 * em * up,
             dn * (np.exp(a3) - 4 * a1 * a5 * em), dn * 2 * a1 * em,
             dn * (a2 - 2 * a1 * a4 * em))
    return HeisenbergCoeffs(*f, time=tt, n=n)


def _psi(coeffs: HeisenbergCoeffs):
    f1, f2, f3, f4, f5, f6 = coeffs.f
    return (f1 * f4 + f2 * f5, f2 * f5 + f3 * f6, f1 * f5, f2 * f4,
            f1 * f6 + f3 * f5, f2 * f6 + f3 * f4)


def _real(z, what):
    z = np.asarray(z)
    bad = np.abs(z.imag) > IMAG_TOL * np.maximum(1.0, np.abs(z.real))
    if np.any(bad):
        raise ConsistencyError(f"{what} has imaginary part {np.max(np.abs(z.imag)):.3g}")
    return z.real


def phonon_mean(coeffs: HeisenbergCoeffs, Gamma: complex):
    """<Gamma| N(t) |Gamma> from the normal-ordered expansion of b+(t) b(t)."""
    p0, p1, p2, p3, p4, p5 = _psi(coeffs)
    G, Gc = complex(Gamma), complex(Gamma).conjugate()
    val = p0 * abs(G) ** 2 + p1 + p2 * Gc ** 2 + p3 * G ** 2 + p4 * Gc + p5 * G
    return _real(val, "phonon mean")[()]


def phonon_variance(coeffs: HeisenbergCoeffs, Gamma: complex):
    """Var N(t) in |Gamma>, by Wick's theorem on the displaced vacuum."""
    f1, f2, f3, f4, f5, f6 = coeffs.f
    G = complex(Gamma)
    nu = f1 * G.conjugate() + f2 * G + f3
    mu = f4 * G + f5 * G.conjugate() + f6
    var = (nu * nu * f4 * f5 + nu * mu * (f1 * f4 + f2 * f5) + mu * mu * f1 * f2
           + 2 * f1 * f2 * f4 * f5)
    return _real(var, "phonon variance")[()]


def mandel_numerator_printed(coeffs: HeisenbergCoeffs, Gamma: complex):
    """The Psi-product grouping of the variance as commonly printed.

    Kept for comparison only; it drops terms once the squeezing
    coefficients are nonzero (see ``phonon_variance``).
    """
    p0, _, p2, p3, p4, p5 = _psi(coeffs)
    G, Gc = complex(Gamma), complex(Gamma).conjugate()
    return (abs(G) ** 2 * (p0 ** 2 + 4 * p2 * p3) + 2 * Gc ** 2 * p0 * p3
            + Gc * (p0 * p4 + 2 * p5 * p2) + 2 * G ** 2 * p2 * p0
            + G * (2 * p3 * p4 + p5 * p0) + p3 * p2 + p5 * p4)


def mandel_q(coeffs: HeisenbergCoeffs, Gamma: complex):
    """Mandel Q = Var(N) / <N>."""
    mean = np.asarray(phonon_mean(coeffs, Gamma))
    if np.any(mean <= 1e-12):
        raise ZeroDivisionError("Mandel Q undefined: phonon mean vanishes")
    return (phonon_variance(coeffs, Gamma) / mean)[()]


def quadratures(coeffs: HeisenbergCoeffs, Gamma: complex):
    """(X_mean, P_mean, dX, dP) in the mechanical coherent state."""
    f1, f2, f3, f4, f5, f6 = coeffs.f
    G, Gc = complex(Gamma), complex(Gamma).conjugate()
    s2 = np.sqrt(2.0)
    X = _real(((f4 + f2) * G + (f5 + f1) * Gc + f3 + f6) / s2, "X mean")
    P = _real(1j * ((f1 - f5) * Gc + (f2 - f4) * G + f3 - f6) / s2, "P mean")
    vx = _real(0.5 * (f1 + f5) * (f2 + f4), "X variance")
    vp = _real(-0.5 * (f4 - f2) * (f5 - f1), "P variance")
    if np.any(vx <= 0) or np.any(vp <= 0):
        raise ConsistencyError("quadrature variance is not positive")
    return X[()], P[()], np.sqrt(vx)[()], np.sqrt(vp)[()]


# -- coherent field: Poisson-weighted sums --------------------------------------

def poisson_weights(alpha: complex, tol: float = POISSON_TOL):
    """Photon numbers 0..k_max and their weights; neglected weight < tol."""
    mean = abs(alpha) ** 2
    if mean == 0:
        return np.array([0]), np.array([1.0])
    k_max = 0
    while poisson.sf(k_max, mean) >= tol:
        k_max += 1
    k = np.arange(k_max + 1)
    return k, poisson.pmf(k, mean)


def photon_trajectory(params: SystemParams, n, t_grid, **kw) -> CoefficientTrajectory:
    """The exact (or, when driven, approximate) mechanical propagator at photon number n."""
    if params.Omega > 0:
        return forced_interaction_coefficients(params, n, t_grid, **kw)
    if params.g1 == 0:
        return linear_coefficients(params, n, t_grid)
    return linquad_coefficients(params, n, t_grid, **kw)


def _per_photon(params, alpha, t_grid, fn, workers=None):
    k, w = poisson_weights(alpha)

    def one(kk):
        return fn(heisenberg_coeffs(photon_trajectory(params, int(kk), t_grid)))

    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            vals = list(ex.map(one, k))
    else:
        vals = [one(kk) for kk in k]
    return k, w, vals


def phonon_mean_coherent_field(params: SystemParams, alpha: complex, Gamma: complex,
                               t_grid, workers=None):
    """<alpha, Gamma| N(t) |alpha, Gamma> as a Poisson sum over photon numbers."""
    _, w, vals = _per_photon(params, alpha, t_grid, lambda c: phonon_mean(c, Gamma), workers)
    return np.tensordot(w, np.array(vals), axes=1)


def quadrature_means_coherent_field(params, alpha, Gamma, t_grid, workers=None):
    _, w, vals = _per_photon(params, alpha, t_grid,
                             lambda c: quadratures(c, Gamma)[:2], workers)
    vals = np.array(vals)
    return np.tensordot(w, vals[:, 0], axes=1), np.tensordot(w, vals[:, 1], axes=1)


def dispersion_coherent_field(params: SystemParams, alpha: complex, Gamma: complex,
                              t_grid, workers=None):
    """Poisson average of the per-photon-number dispersions (dX, dP).

    This averages the dispersions themselves, not the variances of the
    mixed mechanical state.
    """
    _, w, vals = _per_photon(params, alpha, t_grid,
                             lambda c: quadratures(c, Gamma)[2:], workers)
    vals = np.array(vals)
    return np.tensordot(w, vals[:, 0], axes=1), np.tensordot(w, vals[:, 1], axes=1)


def analytic_series(params: SystemParams, field_state, Gamma, t_grid, labels=LABELS,
                    workers=None) -> dict:
    """Analytic observable series for a field number state ('number', n) or
    coherent state ('coherent', alpha)."""
    kind, value = field_state
    t = np.asarray(t_grid, float)
    out = {}

    def put(label, vals):
        if label in labels:
            out[label] = ObservableSeries(t, np.asarray(vals, float), label, "analytic")

    if kind == "number":
        c = heisenberg_coeffs(photon_trajectory(params, int(value), t))
        X, P, dX, dP = quadratures(c, Gamma)
        N = phonon_mean(c, Gamma)
        put("phonon_mean", N)
        put("X_mean", X)
        put("P_mean", P)
        put("dX", dX)
        put("dP", dP)
        put("uncertainty_product", dX * dP)
        if "mandel_Q" in labels:
            put("mandel_Q", mandel_q(c, Gamma))
        if params.Omega > 0:
            from .propagators import mean_photon_forced
            put("photon_mean", mean_photon_forced(params, int(value), t))
        else:
            put("photon_mean", np.full(t.shape, float(value)))
    elif kind == "coherent":
        alpha = complex(value)
        k, w, vals = _per_photon(
            params, alpha, t,
            lambda c: (phonon_mean(c, Gamma), *quadratures(c, Gamma)), workers)
        vals = np.array(vals)  # (k, 5, T)
        avg = np.tensordot(w, vals, axes=1)
        put("phonon_mean", avg[0])
        put("X_mean", avg[1])
        put("P_mean", avg[2])
        put("dX", avg[3])
        put("dP", avg[4])
        put("uncertainty_product", avg[3] * avg[4])
        if params.Omega > 0:
            from .propagators import drive_alpha1
            put("photon_mean", abs(alpha) ** 2 + np.abs(drive_alpha1(params, t)) ** 2)
        else:
            put("photon_mean", np.full(t.shape, abs(alpha) ** 2))
    else:
        raise ValueError(f"unknown field state kind {kind!r}")
    return out


__all__ = [
    "HeisenbergCoeffs", "ObservableSeries", "heisenberg_coeffs", "phonon_mean",
    "phonon_variance", "mandel_q", "mandel_numerator_printed", "quadratures",
    "poisson_weights", "phonon_mean_coherent_field", "dispersion_coherent_field",
    "quadrature_means_coherent_field", "analytic_series", "photon_trajectory",
    "linear_alphas",
]
