"""Tridiagonal assembly and solution.

Two systems appear in every implicit stage: one small vertical system per
edge column (viscous coupling, bed friction, wind drag) and one horizontal
system for the free surface.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .exceptions import SingularSystemError

PIVOT_TOL = 1e-300


@dataclass
class TridiagonalSystem:
    """``lower[k] x[k-1] + diag[k] x[k] + upper[k] x[k+1] = rhs[k]``.

    ``lower[0]`` and ``upper[-1]`` are ignored.
    """

    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray
    rhs: np.ndarray

    @property
    def n(self) -> int:
        return self.diag.size

    def dense(self) -> np.ndarray:
        n = self.n
        A = np.diag(self.diag.astype(float))
        if n > 1:
            A += np.diag(self.lower[1:], -1) + np.diag(self.upper[:-1], 1)
        return A

    def matvec(self, x: np.ndarray) -> np.ndarray:
        y = self.diag * x
        y[1:] += self.lower[1:] * x[:-1]
        y[:-1] += self.upper[:-1] * x[1:]
        return y

    def residual(self, x: np.ndarray) -> float:
        return float(np.max(np.abs(self.matvec(x) - self.rhs)))

    def dominance_margin(self) -> np.ndarray:
        """Row-wise ``|diag| - |lower| - |upper|`` (nonnegative for weakly dominant rows)."""
        off = np.abs(self.lower).copy()
        off[0] = 0.0
        up = np.abs(self.upper).copy()
        up[-1] = 0.0
        return np.abs(self.diag) - off - up


@njit(cache=True)
def _thomas(lower, diag, upper, rhs, x, cp):
    """In-place Thomas sweep; returns 0 on success, ``k+1`` if pivot ``k`` is tiny."""
    n = diag.size
    beta = diag[0]
    if abs(beta) <= PIVOT_TOL:
        return 1
    x[0] = rhs[0] / beta
    for k in range(1, n):
        cp[k - 1] = upper[k - 1] / beta
        beta = diag[k] - lower[k] * cp[k - 1]
        if abs(beta) <= PIVOT_TOL * (abs(diag[k]) + 1.0):
            return k + 1
        x[k] = (rhs[k] - lower[k] * x[k - 1]) / beta
    for k in range(n - 2, -1, -1):
        x[k] -= cp[k] * x[k + 1]
    return 0


def thomas_solve(system: TridiagonalSystem) -> np.ndarray:
    """Solve a tridiagonal system without pivoting."""
    n = system.n
    if n < 1:
        raise ValueError("empty system")
    lower = np.asarray(system.lower, dtype=float)
    diag = np.asarray(system.diag, dtype=float)
    upper = np.asarray(system.upper, dtype=float)
    rhs = np.asarray(system.rhs, dtype=float)
    if not (lower.size == upper.size == rhs.size == n):
        raise ValueError("band and rhs lengths differ")
    x = np.empty(n)
    cp = np.empty(max(n - 1, 1))
    code = _thomas(lower, diag, upper, rhs, x, cp)
    if code:
        raise SingularSystemError(f"zero pivot in row {code - 1}")
    return x


@njit(cache=True)
def column_solve(he, cvis, cfu, cwt, u_wind, w, R, n_edge, l_edge, X, Y, Sx, T, first, last):
    """Solve ``A X = lh R + w Cw~ u_wind e_N`` and ``A Y = lh`` on edges ``first..last``.

    ``A`` is the rescaled vertical operator ``diag(lh) + w (viscous + bed + wind)``
    with coefficients frozen in ``cvis, cfu, cwt``.  Also stores
    ``Sx = H^T X`` and ``T = H^T Y``.  Returns 0 or ``e+1`` for a failed column.
    """
    nmax = R.shape[0]
    lo = np.empty(nmax)
    di = np.empty(nmax)
    up = np.empty(nmax)
    r1 = np.empty(nmax)
    r2 = np.empty(nmax)
    x1 = np.empty(nmax)
    x2 = np.empty(nmax)
    cp = np.empty(nmax)
    for e in range(first, last + 1):
        n = n_edge[e]
        h = he[e]
        for a in range(n):
            lh = l_edge[a, e] * h
            cdn = cvis[a, e] if a > 0 else 0.0
            cup = cvis[a + 1, e] if a + 1 < n else 0.0
            d = lh + w * (cdn + cup)
            if a == 0:
                d += w * cfu[e]
            rr = lh * R[a, e]
            if a == n - 1:
                d += w * cwt[e]
                rr += w * cwt[e] * u_wind
            lo[a] = -w * cdn
            up[a] = -w * cup
            di[a] = d
            r1[a] = rr
            r2[a] = lh
        code = _thomas(lo[:n], di[:n], up[:n], r1[:n], x1[:n], cp)
        if code:
            return e + 1
        _thomas(lo[:n], di[:n], up[:n], r2[:n], x2[:n], cp)
        s = 0.0
        t = 0.0
        for a in range(n):
            X[a, e] = x1[a]
            Y[a, e] = x2[a]
            s += r2[a] * x1[a]
            t += r2[a] * x2[a]
        Sx[e] = s
        T[e] = t
    return 0


@njit(cache=True)
def free_surface_bands(dx, dx_edge, T, Sx, w, g, rhs_expl, dir_left, dir_right, eta_left, eta_right):
    """Bands of the free-surface system ``Dx eta + w div(H^T U) = rhs_expl``.

    ``T[e] = H^T A^{-1} H`` and ``Sx[e] = H^T A^{-1} F`` at interior edges; at
    boundary edges ``T`` must be 0 and ``Sx`` the prescribed boundary flux.
    Dirichlet cells become identity rows and their coupling moves to the
    neighbouring right-hand side, keeping the matrix symmetric.
    """
    M = dx.size
    lower = np.zeros(M)
    diag = np.empty(M)
    upper = np.zeros(M)
    rhs = np.empty(M)
    gw2 = g * w * w
    for i in range(M):
        cl = gw2 * T[i] / dx_edge[i]
        cr = gw2 * T[i + 1] / dx_edge[i + 1]
        diag[i] = dx[i] + cl + cr
        lower[i] = -cl
        upper[i] = -cr
        rhs[i] = rhs_expl[i] - w * (Sx[i + 1] - Sx[i])
    if dir_left:
        diag[0] = 1.0
        upper[0] = 0.0
        lower[0] = 0.0
        rhs[0] = eta_left
        rhs[1] -= lower[1] * eta_left
        lower[1] = 0.0
    if dir_right:
        diag[M - 1] = 1.0
        lower[M - 1] = 0.0
        upper[M - 1] = 0.0
        rhs[M - 1] = eta_right
        rhs[M - 2] -= upper[M - 2] * eta_right
        upper[M - 2] = 0.0
    return lower, diag, upper, rhs


def assemble_vertical_matrix(he_e: float, fractions, cvis_col, cfu_e: float, cwt_e: float, w: float,
                             R_col=None, u_wind: float = 0.0) -> TridiagonalSystem:
    """Rescaled vertical system for one edge column.

    ``cvis_col[k]`` is the interface coefficient between 0-based layers
    ``k-1`` and ``k`` (entries 0 and N unused).
    """
    l = np.asarray(fractions, dtype=float)
    n = l.size
    lh = l * he_e
    cv = np.zeros(n + 1)
    cv[1:n] = np.asarray(cvis_col, dtype=float)[1:n]
    diag = lh + w * (cv[:-1] + cv[1:])
    diag[0] += w * cfu_e
    diag[-1] += w * cwt_e
    lower = np.zeros(n)
    upper = np.zeros(n)
    lower[1:] = -w * cv[1:n]
    upper[:-1] = -w * cv[1:n]
    rhs = lh * (np.zeros(n) if R_col is None else np.asarray(R_col, dtype=float))
    rhs[-1] += w * cwt_e * u_wind
    return TridiagonalSystem(lower, diag, upper, rhs)


def assemble_free_surface_system(dx, dx_edge, T, Sx, w, g, rhs_expl, dirichlet=(None, None)) -> TridiagonalSystem:
    """Free-surface system; ``dirichlet`` holds prescribed ``(eta_left, eta_right)`` or ``None``."""
    dl, dr = dirichlet
    lower, diag, upper, rhs = free_surface_bands(
        np.asarray(dx, float), np.asarray(dx_edge, float), np.asarray(T, float), np.asarray(Sx, float),
        float(w), float(g), np.asarray(rhs_expl, float), dl is not None, dr is not None,
        0.0 if dl is None else float(dl), 0.0 if dr is None else float(dr))
    return TridiagonalSystem(lower, diag, upper, rhs)
