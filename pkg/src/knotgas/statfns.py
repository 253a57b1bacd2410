"""Quantum-statistics functions h_sigma(z) for Fermi (chi=+1) and Bose (chi=-1) gases.

    h_sigma(z) = 1/Gamma(sigma) * int_0^inf t^(sigma-1) / (exp(t)/z + chi) dt

which equals -Li_sigma(-z) for fermions and Li_sigma(z) for bosons.
Functions taking ``logz`` avoid overflow at deep degeneracy (z = e^(mu/T)
with T -> 0).
"""
from __future__ import annotations

import math

import numpy as np
from scipy import integrate, special

from .errors import DivergenceError, DomainError
from .spectra import as_chi

__all__ = [
    "fugacity",
    "h",
    "h_log",
    "h_series_oracle",
    "log_occupancy_term",
    "QUAD_ABS_TOL",
]

QUAD_ABS_TOL = 1e-10
_BOSE_EDGE = 1e-12


def fugacity(mu: float, T: float) -> float:
    if not T > 0:
        raise DomainError(f"temperature must be positive, got {T}")
    return math.exp(mu / T)


def _fermi_kernel(t, logz):
    # 1/(e^(t - logz) + 1), overflow-free on both sides
    return special.expit(logz - t)


def _bose_kernel(t, logz):
    x = t - logz
    return math.exp(-x) / -math.expm1(-x)


def _quad(f, a, b, **kw):
    val, _err = integrate.quad(f, a, b, epsabs=QUAD_ABS_TOL * 0.1, epsrel=1e-12, limit=400, **kw)
    return val


def _h_quadrature(sigma: float, logz: float, chi: int) -> float:
    kernel = _fermi_kernel if chi == 1 else _bose_kernel
    split = max(1.0, logz)
    # head: [0, split] with the algebraic endpoint weight handled analytically
    if sigma == 1.0:
        head = _quad(lambda t: kernel(t, logz), 0.0, split)
    else:
        head = _quad(lambda t: kernel(t, logz), 0.0, split, weight="alg", wvar=(sigma - 1.0, 0.0))
    # tail: t = split + s, with the exponential decay pulled out
    if chi == 1:
        tail_f = lambda s: (split + s) ** (sigma - 1) * special.expit(logz - split - s)
    else:
        tail_f = lambda s: (split + s) ** (sigma - 1) * _bose_kernel(split + s, logz)
    tail = _quad(tail_f, 0.0, np.inf)
    return (head + tail) / math.gamma(sigma)


def _bose_near_unity(sigma: float, logz: float) -> float:
    # Li_s(e^w) = Gamma(1-s) (-w)^(s-1) + sum_k zeta(s-k) w^k / k!, kept to first order in w
    w = logz
    val = float(special.zeta(sigma))
    if w == 0.0:
        return val
    if abs(sigma - round(sigma)) > 1e-12:
        return val + float(special.zeta(sigma - 1.0)) * w + math.gamma(1.0 - sigma) * (-w) ** (sigma - 1.0)
    if round(sigma) == 2:
        # the k=1 pole merges with the singular term: w (1 - ln(-w))
        return val + w * (1.0 - math.log(-w))
    return val + float(special.zeta(sigma - 1.0)) * w


def h_log(sigma: float, logz: float, chi) -> float:
    """h_sigma evaluated at z = exp(logz)."""
    chi = as_chi(chi)
    if not sigma > 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    if chi == -1:
        if logz > 0 or (logz == 0 and sigma <= 1):
            raise DivergenceError(f"Bose function h_{sigma} diverges at z = exp({logz}) >= 1")
        if -logz <= _BOSE_EDGE:
            if sigma <= 1:
                raise DivergenceError(f"Bose function h_{sigma} diverges as z -> 1")
            return _bose_near_unity(sigma, logz)
    if logz < -700:
        return math.exp(logz)
    return _h_quadrature(float(sigma), float(logz), chi)


def h(sigma: float, z: float, chi) -> float:
    """h_sigma(z) by adaptive quadrature (absolute tolerance ``QUAD_ABS_TOL``)."""
    if not z > 0:
        raise DomainError(f"fugacity must be positive, got {z}")
    return h_log(sigma, math.log(z), chi)


def h_series_oracle(sigma: float, z: float, chi, terms: int | None = None) -> tuple[float, float]:
    """Independent series evaluation of h_sigma(z); returns ``(value, error_bound)``.

    Sums sum_{k>=1} (-chi)^(k+1) z^k / k^sigma. The alternating (Fermi) case
    is accelerated with the Cohen-Villegas-Zagier scheme; the Bose case at
    z = 1 adds an Euler-Maclaurin estimate of the neglected tail. Only valid
    for 0 <= z <= 1 (z = 1 for bosons requires sigma > 1).
    """
    chi = as_chi(chi)
    if not sigma > 0:
        raise DomainError("sigma must be positive")
    if z < 0 or z > 1:
        raise DomainError(f"series converges only for 0 <= z <= 1, got z={z}")
    if z == 0:
        return 0.0, 0.0
    if chi == 1:
        return _cvz_alternating(sigma, z, terms or 60)
    if z == 1:
        if sigma <= 1:
            raise DomainError("Bose series at z = 1 diverges for sigma <= 1")
        return _zeta_em(sigma, terms or 2000)
    if terms is None:
        # geometric tail z^(K+1)/(1-z) below 1e-16
        terms = int(min(5_000_000, max(50, math.ceil(math.log(1e-16 * (1 - z)) / math.log(z)))))
    k = np.arange(1, terms + 1, dtype=float)
    value = math.fsum(np.exp(k * math.log(z) - sigma * np.log(k)))
    kn = terms + 1
    bound = z**kn / kn**sigma / (1 - z)
    return value, bound


def _cvz_alternating(sigma: float, z: float, n: int) -> tuple[float, float]:
    # sum_{k>=0} (-1)^k a_k with a_k = z^(k+1)/(k+1)^sigma, a totally monotone sequence
    d = (3 + math.sqrt(8)) ** n
    d = (d + 1 / d) / 2
    b = -1.0
    c = -d
    s = 0.0
    for k in range(n):
        c = b - c
        a_k = z ** (k + 1) / (k + 1) ** sigma
        s += c * a_k
        b = (k + n) * (k - n) * b / ((k + 0.5) * (k + 1))
    value = s / d
    bound = 2 * z / (3 + math.sqrt(8)) ** n + 1e-16 * abs(value)
    return value, bound


def _zeta_em(sigma: float, K: int) -> tuple[float, float]:
    k = np.arange(1, K, dtype=float)
    head = math.fsum(k ** (-sigma))
    # sum_{k>=K} k^-s = K^(1-s)/(s-1) + K^-s/2 + s K^(-s-1)/12 - s(s+1)(s+2) K^(-s-3)/720 + ...
    tail = (
        K ** (1 - sigma) / (sigma - 1)
        + 0.5 * K ** (-sigma)
        + sigma * K ** (-sigma - 1) / 12
        - sigma * (sigma + 1) * (sigma + 2) * K ** (-sigma - 3) / 720
    )
    nxt = sigma * (sigma + 1) * (sigma + 2) * (sigma + 3) * (sigma + 4) * K ** (-sigma - 5) / 30240
    return head + tail, nxt + 1e-15 * head


def log_occupancy_term(z: float, chi) -> float:
    """chi * ln(1 + chi z): the contribution of the zero-energy level."""
    chi = as_chi(chi)
    if not z > 0:
        raise DomainError(f"fugacity must be positive, got {z}")
    if chi == 1:
        return math.log1p(z)
    if z >= 1:
        raise DivergenceError(f"Bose occupancy of the zero level diverges for z = {z} >= 1")
    return -math.log1p(-z)
