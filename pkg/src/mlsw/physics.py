"""Turbulence and boundary-stress closures.

All stresses are kinematic (divided by the reference density), so ``rho0``
is carried for bookkeeping only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from numba import njit

from .exceptions import ClosureError, ConfigurationError

H_MIN = 1e-6


@dataclass(frozen=True)
class PhysicsParams:
    """Physical constants and closure parameters.

    Defaults are those of the free-oscillation benchmark.
    """

    g: float = 9.81
    kappa: float = 0.41
    dz0: float = 3.3e-5
    Cw: float = 1.2e-6
    u_wind: float = -1.0
    rho0: float = 1000.0
    Ag: float = 0.0
    porosity: float = 0.4
    h_min: float = H_MIN

    def __post_init__(self):
        checks = [
            (self.g > 0, "g must be positive"),
            (self.kappa > 0, "kappa must be positive"),
            (self.dz0 > 0, "dz0 must be positive"),
            (self.Cw >= 0, "Cw must be nonnegative"),
            (self.Ag >= 0, "Ag must be nonnegative"),
            (0 <= self.porosity < 1, "porosity must lie in [0, 1)"),
            (self.h_min > 0, "h_min must be positive"),
            (self.rho0 > 0, "rho0 must be positive"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigurationError(msg)
        values = (self.g, self.kappa, self.dz0, self.Cw, self.u_wind, self.rho0, self.Ag, self.porosity)
        if not all(math.isfinite(v) for v in values):
            raise ConfigurationError("physics parameters must be finite")

    @property
    def xi(self) -> float:
        return 1.0 / (1.0 - self.porosity)

    def with_(self, **kw) -> "PhysicsParams":
        return replace(self, **kw)


def friction_coefficient(h: float, dz_r: float, params: PhysicsParams) -> float:
    """Log-law bottom friction coefficient ``kappa^2 (1 - dz_r/h) / ln^2(dz_r/dz0)``."""
    if not (0.0 < dz_r < h):
        raise ClosureError(f"reference height dz_r={dz_r} must lie in (0, h={h})")
    if dz_r <= params.dz0:
        raise ClosureError(f"reference height dz_r={dz_r} must exceed the roughness length {params.dz0}")
    return params.kappa**2 * (1.0 - dz_r / h) / math.log(dz_r / params.dz0) ** 2


def friction_velocity_interface(u1: float, partial_height: float, params: PhysicsParams) -> float:
    """Friction velocity ``|u1| kappa / ln(z/dz0)`` at height ``z`` above the bed."""
    if partial_height <= params.dz0:
        raise ClosureError(
            f"interface height {partial_height} must exceed the roughness length {params.dz0}"
        )
    return abs(u1) * params.kappa / math.log(partial_height / params.dz0)


def interface_viscosity(alpha: int, h: float, fractions, ustar: float, params: PhysicsParams) -> float:
    """Parabolic eddy viscosity at the top of layer ``alpha`` (1-based, ``1 <= alpha <= N-1``)."""
    fractions = np.asarray(fractions, dtype=float)
    n = fractions.size
    if not 1 <= alpha <= n - 1:
        raise IndexError(f"interface index {alpha} outside 1..{n - 1}")
    below = fractions[:alpha].sum() * h
    above = fractions[alpha:].sum()
    return params.kappa * ustar * below * above


def bottom_stress(u1: float, Cf: float) -> float:
    return -Cf * abs(u1) * u1


def wind_stress(uN: float, params: PhysicsParams) -> tuple[float, float]:
    """Return ``(stress, Cw_tilde)`` for the quadratic surface drag."""
    rel = params.u_wind - uN
    cwt = params.Cw * abs(rel)
    return cwt * rel, cwt


def log_interface_heights(n_edge, l_edge) -> np.ndarray:
    """``log`` of the cumulative fractions below every interior interface (see ``column_closures``)."""
    nmax, ne = l_edge.shape
    out = np.zeros((nmax + 1, ne))
    for e in range(ne):
        n = int(n_edge[e])
        out[1:n, e] = np.log(np.cumsum(l_edge[: n - 1, e]))
    return out


@njit(cache=True)
def column_closures(u, he, n_edge, l_edge, log_below, kappa, dz0, Cw, u_wind):
    """Frozen vertical-mixing coefficients for every edge column.

    ``log_below[k, e]`` holds ``log(l_0 + ... + l_{k-1})`` (see
    :func:`log_interface_heights`).

    Returns
    -------
    cvis : (nmax+1, M+1)
        ``nu_k / (((l_{k-1} + l_k)/2) h)`` at interior interface ``k`` (row
        ``k`` sits between 0-based layers ``k-1`` and ``k``); zero elsewhere.
    cfu : (M+1,)
        ``C_f |u_1|``.
    cwt : (M+1,)
        ``C_w |u_wind - u_N|``.
    status : int
        0 on success, 1 if a closure precondition failed.
    """
    nmax, ne = l_edge.shape
    cvis = np.zeros((nmax + 1, ne))
    cfu = np.zeros(ne)
    cwt = np.zeros(ne)
    status = 0
    ldz0 = math.log(dz0)
    for e in range(ne):
        n = n_edge[e]
        h = he[e]
        u1 = u[0, e]
        uN = u[n - 1, e]
        cwt[e] = Cw * abs(u_wind - uN)
        if n == 1:
            continue
        lh = math.log(h) - ldz0
        l1 = l_edge[0, e]
        if l1 * h <= dz0:
            status = 1
            continue
        lg = log_below[1, e] + lh
        cfu[e] = kappa * kappa * (1.0 - l1) / (lg * lg) * abs(u1)
        au = abs(u1) * kappa
        below = 0.0
        for k in range(1, n):
            below += l_edge[k - 1, e]
            z = below * h
            if z <= dz0:
                status = 1
                break
            ustar = au / (log_below[k, e] + lh)
            nu = kappa * ustar * z * (1.0 - below)
            cvis[k, e] = nu / (0.5 * (l_edge[k - 1, e] + l_edge[k, e]) * h)
    return cvis, cfu, cwt, status
