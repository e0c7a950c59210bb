"""Brute-force reference: the full two-mode Schrodinger equation on a
truncated Fock space, integrated with an adaptive Runge-Kutta method."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.integrate import solve_ivp

from .errors import ConvergenceError, IntegrationError
from .fock import (DensityMatrix, FockOperator, StateVector, coherent_state, make_ladder,
                   number_state, partial_trace, poisson_tail, product_state)
from .observables import LABELS, ObservableSeries
from .propagators import SystemParams

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SimConfig:
    dim_field: int
    dim_mech: int
    t_grid: np.ndarray = field(repr=False)
    rtol: float = 1e-11
    atol: float = 1e-13
    method: str = "DOP853"
    frame: str = "rotating"
    renormalize: bool = False
    convergence_threshold: float = 1e-6
    max_dim: int = 256

    def __post_init__(self):
        t = np.asarray(self.t_grid, float)
        if t.ndim != 1 or t.size == 0 or t[0] != 0.0 or np.any(np.diff(t) <= 0):
            raise ValueError("t_grid must be strictly increasing and start at 0")
        object.__setattr__(self, "t_grid", t)
        if self.dim_field < 4 or self.dim_mech < 4:
            raise ValueError("truncation dims must be >= 4")
        if self.rtol <= 0 or self.atol <= 0:
            raise ValueError("tolerances must be positive")
        if self.frame not in ("rotating", "lab"):
            raise ValueError(f"unknown frame {self.frame!r}")

    @property
    def dims(self):
        return (self.dim_field, self.dim_mech)

    def with_dims(self, dim_field, dim_mech) -> "SimConfig":
        from dataclasses import replace
        return replace(self, dim_field=dim_field, dim_mech=dim_mech)


def _pieces(params: SystemParams, dims):
    """Diagonal part, real off-diagonal coupling, and drive operator."""
    df, dm = dims
    n = np.arange(df, dtype=float)
    N = np.arange(dm, dtype=float)
    w, g0, g1 = params.omega_m, params.g0, params.g1
    diag = (np.kron(params.omega_c_prime * n, np.ones(dm)) + np.kron(np.ones(df), w * N)
            + 2 * g1 * w * np.kron(n, N))
    b = make_ladder(dm).matrix.real
    x = b + b.T
    sq = b @ b + (b @ b).T
    V = np.kron(np.diag(n), -g0 * w * x + g1 * w * sq)
    a = make_ladder(df).matrix.real
    drive = np.kron(a + a.T, np.eye(dm))
    return diag, V, drive


def build_hamiltonian(params: SystemParams, dims, t: float = 0.0) -> FockOperator:
    """Full Hamiltonian (hbar = 1) on the field x mechanics space at time t."""
    diag, V, drive = _pieces(params, dims)
    H = np.diag(diag) + V + params.Omega * np.cos(params.omega_d * t) * drive
    return FockOperator(dims[0], dims[1], H.astype(complex))


@dataclass(frozen=True, eq=False)
class StateTrajectory:
    t_grid: np.ndarray
    states: np.ndarray  # (T, dim), lab-frame amplitudes
    dims: tuple
    norm_drift: float
    renormalized: bool = False

    def state(self, i) -> StateVector:
        return StateVector(self.dims[0], self.dims[1], self.states[i])

    def reduced(self, i, keep) -> DensityMatrix:
        return partial_trace(self.state(i), keep)


def initial_state(field_state, Gamma, dims) -> StateVector:
    """Product of a field number/coherent state and a mechanical coherent state."""
    kind, value = field_state
    df, dm = dims
    if kind == "number":
        f = number_state(int(value), df)
    elif kind == "coherent":
        f = coherent_state(complex(value), df)
    else:
        raise ValueError(f"unknown field state kind {kind!r}")
    return product_state(f, coherent_state(Gamma, dm))


def default_dims(field_state, Gamma, tail=1e-8, dim_mech=64):
    """Field truncation that keeps the Poisson tail below ``tail``."""
    kind, value = field_state
    if kind == "number":
        return int(value) + 4, dim_mech
    mean = abs(complex(value)) ** 2
    d = 4
    while poisson_tail(mean, d) >= tail:
        d += 1
    return d, dim_mech


def propagate(psi0: StateVector, params: SystemParams, config: SimConfig) -> StateTrajectory:
    """Integrate i dpsi/dt = H(t) psi on ``config.t_grid``.

    In the default rotating frame the diagonal part of H is removed exactly
    (psi = exp(-i E t) phi), so the integrator only resolves the couplings
    and the drive.  H(t) is evaluated at every stage time.
    """
    if (psi0.dim_field, psi0.dim_mech) != config.dims:
        raise ValueError(f"state dims {(psi0.dim_field, psi0.dim_mech)} != {config.dims}")
    if abs(psi0.norm - 1.0) > 1e-10:
        raise ValueError("initial state is not normalized")
    diag, V, drive = _pieces(params, config.dims)
    Om, wd = params.Omega, params.omega_d
    t = config.t_grid

    V = sparse.csr_matrix(V)
    drive = sparse.csr_matrix(drive)

    if config.frame == "lab":
        def rhs(tt, y):
            out = diag * y + V @ y
            if Om:
                out = out + Om * np.cos(wd * tt) * (drive @ y)
            return -1j * out
    else:
        def rhs(tt, y):
            ph = np.exp(-1j * diag * tt)
            u = ph * y
            out = V @ u
            if Om:
                out = out + Om * np.cos(wd * tt) * (drive @ u)
            return -1j * np.conj(ph) * out

    y0 = np.array(psi0.amplitudes, complex)
    states = np.empty((t.size, y0.size), complex)
    states[0] = y0
    renorm = False
    if t.size > 1:
        if config.renormalize:
            # segment-wise integration with explicit renormalization at grid points
            y = y0
            for i in range(1, t.size):
                sol = solve_ivp(rhs, (t[i - 1], t[i]), y, method=config.method,
                                rtol=config.rtol, atol=config.atol)
                if not sol.success:
                    raise IntegrationError(f"oracle propagation: {sol.message}",
                                           t_fail=float(sol.t[-1]))
                y = sol.y[:, -1] / np.linalg.norm(sol.y[:, -1])
                states[i] = y
            renorm = True
        else:
            sol = solve_ivp(rhs, (0.0, t[-1]), y0, method=config.method, t_eval=t,
                            rtol=config.rtol, atol=config.atol)
            if not sol.success:
                raise IntegrationError(f"oracle propagation: {sol.message}",
                                       t_fail=float(sol.t[-1]))
            states[:] = sol.y.T
    if config.frame == "rotating":
        states *= np.exp(-1j * np.outer(t, diag))
    drift = float(np.max(np.abs(np.linalg.norm(states, axis=1) - 1.0)))
    if renorm:
        log.info("oracle renormalized at every grid point")
    return StateTrajectory(t, states, config.dims, drift, renorm)


def _mech_moments(traj: StateTrajectory):
    df, dm = traj.dims
    psi = traj.states.reshape(-1, df, dm)
    k = np.arange(dm)
    sq = np.sqrt(k[1:])
    prob = np.abs(psi) ** 2
    pm = prob.sum(axis=1)  # (T, dm) phonon distribution
    # <b> = sum_k sqrt(k) conj(psi_{k-1}) psi_k
    b = np.einsum("tfk,k,tfk->t", psi[:, :, :-1].conj(), sq, psi[:, :, 1:])
    b2 = np.einsum("tfk,k,tfk->t", psi[:, :, :-2].conj(), sq[:-1] * sq[1:], psi[:, :, 2:])
    N = pm @ k
    N2 = pm @ (k * k)
    return N, N2, b, b2


def observables_from_state(traj: StateTrajectory, which=LABELS) -> dict:
    """Observable series computed from raw moments of the evolved states."""
    unknown = set(which) - set(LABELS)
    if unknown:
        raise ValueError(f"unknown observable labels {sorted(unknown)}")
    df, dm = traj.dims
    t = traj.t_grid
    N, N2, b, b2 = _mech_moments(traj)
    psi = traj.states.reshape(-1, df, dm)
    nphot = (np.abs(psi) ** 2).sum(axis=2) @ np.arange(df)
    X = np.sqrt(2.0) * b.real
    P = np.sqrt(2.0) * b.imag
    # <X^2> = (<b^2> + <b+^2> + 2N + 1)/2, <P^2> = (2N + 1 - <b^2> - <b+^2>)/2
    vx = (2 * b2.real + 2 * N + 1) / 2 - X ** 2
    vp = (2 * N + 1 - 2 * b2.real) / 2 - P ** 2
    vals = {
        "phonon_mean": N,
        "photon_mean": nphot,
        "X_mean": X,
        "P_mean": P,
        "dX": np.sqrt(vx),
        "dP": np.sqrt(vp),
        "uncertainty_product": np.sqrt(vx * vp),
    }
    if "mandel_Q" in which:
        vals["mandel_Q"] = (N2 - N ** 2) / N
    return {k: ObservableSeries(t, np.asarray(vals[k], float), k, "oracle") for k in which}


def per_photon_dispersion(traj: StateTrajectory, tol: float = 1e-14):
    """Photon-number-weighted average of the dispersions within each field
    block, sum_n p_n (dX_n, dP_n).

    Matches the analytic coherent-field dispersion, which averages the
    per-n dispersions rather than those of the mixed mechanical state.
    Only meaningful when the photon number is conserved (no drive).
    """
    df, dm = traj.dims
    psi = traj.states.reshape(-1, df, dm)
    k = np.arange(dm)
    sq = np.sqrt(k[1:])
    dX = np.zeros(psi.shape[0])
    dP = np.zeros(psi.shape[0])
    for n in range(df):
        blk = psi[:, n, :]
        pn = np.sum(np.abs(blk) ** 2, axis=1)
        if np.max(pn) < tol:
            continue
        u = blk / np.sqrt(pn)[:, None]
        N = np.abs(u) ** 2 @ k
        b = np.einsum("tk,k,tk->t", u[:, :-1].conj(), sq, u[:, 1:])
        b2 = np.einsum("tk,k,tk->t", u[:, :-2].conj(), sq[:-1] * sq[1:], u[:, 2:])
        vx = (2 * b2.real + 2 * N + 1) / 2 - 2 * b.real ** 2
        vp = (2 * N + 1 - 2 * b2.real) / 2 - 2 * b.imag ** 2
        dX += pn * np.sqrt(vx)
        dP += pn * np.sqrt(vp)
    t = traj.t_grid
    return (ObservableSeries(t, dX, "dX", "oracle"), ObservableSeries(t, dP, "dP", "oracle"))


def moving_average(series: ObservableSeries, window: float) -> ObservableSeries:
    """Centered boxcar average; the window shrinks symmetrically at the edges."""
    t = series.t_grid
    dt = np.min(np.diff(t)) if t.size > 1 else np.inf
    if window < dt:
        raise ValueError(f"window {window} smaller than grid spacing {dt}")
    y = np.asarray(series.values, float)
    half = 0.5 * window
    out = np.empty_like(y)
    # cumulative trapezoid so non-uniform grids are averaged in time
    cum = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(t) * (y[1:] + y[:-1]))])
    for i, ti in enumerate(t):
        h = min(half, ti - t[0], t[-1] - ti)
        if h <= 0:
            out[i] = y[i]
            continue
        lo, hi = ti - h, ti + h
        out[i] = (np.interp(hi, t, cum) - np.interp(lo, t, cum)
                  - _partial_correction(t, y, lo, hi)) / (hi - lo)
    return ObservableSeries(t, out, series.label, series.provenance)


def _partial_correction(t, y, lo, hi):
    # interpolating the cumulative integral linearly inside a cell is exact
    # only for piecewise-constant y; correct the two partial end cells to
    # the trapezoid of the linear interpolant
    def part(x):
        j = min(max(int(np.searchsorted(t, x)) - 1, 0), t.size - 2)
        t0, t1 = t[j], t[j + 1]
        s = (x - t0) / (t1 - t0)
        full = 0.5 * (t1 - t0) * (y[j] + y[j + 1])
        yx = y[j] + s * (y[j + 1] - y[j])
        exact = 0.5 * (x - t0) * (y[j] + yx)
        return s * full - exact
    return part(hi) - part(lo)


def converge(field_state, Gamma, params: SystemParams, config: SimConfig,
             which=("phonon_mean", "X_mean", "dX"), axis="mech"):
    """Double the chosen truncation until observables move less than the threshold.

    Returns ``(config, history)`` where ``history`` lists
    ``(dims, max_change)`` per doubling.
    """
    cur = config
    prev = observables_from_state(
        propagate(initial_state(field_state, Gamma, cur.dims), params, cur), which)
    history = []
    while True:
        df, dm = cur.dims
        nxt = cur.with_dims(df * 2, dm) if axis == "field" else cur.with_dims(df, dm * 2)
        if max(nxt.dims) > config.max_dim:
            raise ConvergenceError(
                f"truncation not converged up to {config.max_dim} levels: {history}")
        obs = observables_from_state(
            propagate(initial_state(field_state, Gamma, nxt.dims), params, nxt), which)
        change = max(float(np.max(np.abs(obs[k].values - prev[k].values))) for k in which)
        history.append((nxt.dims, change))
        if change < config.convergence_threshold:
            return cur, history
        cur, prev = nxt, obs
