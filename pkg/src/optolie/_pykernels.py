"""Pure-Python implementations of the hot kernels.

Same signatures as the compiled ``_core`` module; used when the extension
is not built or when ``OPTOLIE_PURE_PYTHON=1``.
"""
import numpy as np
from scipy.integrate import solve_ivp

from .errors import IntegrationError


def drive_alpha1(t, Omega, wcp, wd):
    """Field displacement of the driven cavity, closed form."""
    t = np.asarray(t, dtype=float)
    if Omega == 0.0:
        return np.zeros_like(t, dtype=complex)
    pref = Omega / (wcp * wcp - wd * wd)
    return pref * (wcp + np.exp(1j * wcp * t)
                   * (-wcp * np.cos(wd * t) + 1j * wd * np.sin(wd * t)))


def model_coeffs(t, omega_m, n, c, s, d, Omega, wcp, wd):
    """Hamiltonian coefficients h_1..h_6 on (b+^2, b+, N, b, b^2, 1).

    h_j(t) = omega_m * nu(t) * c_j * exp(i s_j omega_m t) + d_j with
    nu(t) = n + |alpha_1(t)|^2.
    """
    nu = n + abs(complex(drive_alpha1(t, Omega, wcp, wd))) ** 2 if Omega else n
    return omega_m * nu * c * np.exp(1j * s * omega_m * t) + d


def wn_rhs(y, h):
    """Right-hand side of the ordered-exponential coefficient equations."""
    a1, a2, a3 = y[0], y[1], y[2]
    h1, h2, h3, h4, h5, h6 = h
    return -1j * np.array([
        h1 + 2.0 * a1 * h3 + 4.0 * a1 * a1 * h5,
        h2 + a2 * h3 + 2.0 * a1 * h4 + 4.0 * a1 * a2 * h5,
        h3 + 4.0 * a1 * h5,
        np.exp(a3) * (h4 + 2.0 * a2 * h5),
        np.exp(2.0 * a3) * h5,
        h6 + a2 * h4 + (a2 * a2 + 2.0 * a1) * h5,
    ])


def integrate_wn(t_grid, omega_m, n, c, s, d, Omega, wcp, wd, rtol, atol):
    t_grid = np.asarray(t_grid, dtype=float)
    c = np.asarray(c, float)
    s = np.asarray(s, float)
    d = np.asarray(d, complex)

    def f(t, y):
        return wn_rhs(y, model_coeffs(t, omega_m, n, c, s, d, Omega, wcp, wd))

    out = np.zeros((t_grid.size, 6), complex)
    if t_grid.size < 2:
        return out
    sol = solve_ivp(f, (t_grid[0], t_grid[-1]), np.zeros(6, complex),
                    method="RK45", t_eval=t_grid, rtol=rtol, atol=atol)
    if not sol.success:
        raise IntegrationError(f"coefficient integration failed: {sol.message}",
                               t_fail=float(sol.t[-1]) if sol.t.size else None)
    out[:] = sol.y.T
    out[0] = 0.0
    return out


def wigner_kernel(rho, xvec, pvec):
    """W[i, j] at (x=xvec[j], p=pvec[i]) for a Fock-basis density matrix.

    Upward recurrence in the Laguerre indices over the whole grid.
    """
    rho = np.asarray(rho, complex)
    M = rho.shape[0]
    X, P = np.meshgrid(np.asarray(xvec, float), np.asarray(pvec, float))
    A = np.sqrt(2.0) * (X + 1j * P)
    B = np.abs(A) ** 2

    wl = [None] * M
    wl[0] = np.exp(-0.5 * B).astype(complex)
    W = np.real(rho[0, 0]) * np.real(wl[0])
    for k in range(1, M):
        wl[k] = A * wl[k - 1] / np.sqrt(k)
        W += 2.0 * np.real(rho[0, k] * wl[k])
    Ac = np.conj(A)
    for m in range(1, M):
        temp = wl[m].copy()
        wl[m] = (Ac * temp - np.sqrt(m) * wl[m - 1]) / np.sqrt(m)
        W += np.real(rho[m, m] * wl[m])
        for k in range(m + 1, M):
            temp2 = (A * wl[k - 1] - np.sqrt(m) * temp) / np.sqrt(k)
            temp = wl[k].copy()
            wl[k] = temp2
            W += 2.0 * np.real(rho[m, k] * wl[k])
    return W / np.pi
