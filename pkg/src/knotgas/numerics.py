"""Scalar numerical helpers: finite differences, bracketed roots, damped fixed points."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

from .errors import BracketError, ConvergenceError

__all__ = [
    "SolverSettings",
    "DEFAULT_SETTINGS",
    "default_step",
    "central_derivative",
    "solve_root",
    "fixed_point",
    "FixedPointResult",
]


@dataclass(frozen=True)
class SolverSettings:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_iter: int = 200
    damping: float = 0.5

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("solver tolerances must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not 0 < self.damping <= 1:
            raise ValueError("damping must lie in (0, 1]")


DEFAULT_SETTINGS = SolverSettings()


def default_step(x: float) -> float:
    """Finite-difference step used for thermodynamic derivatives."""
    return 1e-4 * max(abs(x), 1.0)


def central_derivative(f: Callable[[float], float], x: float, h: float | None = None) -> float:
    """Central difference with one Richardson extrapolation step.

    Combines the estimates at steps ``h`` and ``h/2`` so the leading
    O(h^2) error cancels; quadratics and cubics are differentiated exactly
    up to roundoff.
    """
    if h is None:
        h = default_step(x)
    if not h > 0:
        raise ValueError("step must be positive")
    d_full = (f(x + h) - f(x - h)) / (2 * h)
    half = h / 2
    d_half = (f(x + half) - f(x - half)) / (2 * half)
    return (4 * d_half - d_full) / 3


def solve_root(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    settings: SolverSettings = DEFAULT_SETTINGS,
) -> float:
    """Find a root of ``f`` inside ``[lo, hi]``.

    Illinois-modified regula falsi (secant steps on a maintained bracket)
    with a bisection step whenever the bracket fails to halve.
    The result always lies inside the initial bracket.
    """
    a, b = (lo, hi) if lo <= hi else (hi, lo)
    fa, fb = f(a), f(b)
    if fa == 0:
        return a
    if fb == 0:
        return b
    if math.copysign(1, fa) == math.copysign(1, fb):
        raise BracketError(f"no sign change on [{a!r}, {b!r}]: f={fa!r}, {fb!r}")
    side = 0
    width = b - a
    for _ in range(settings.max_iter):
        x = (a * fb - b * fa) / (fb - fa)
        if not a < x < b:
            x = 0.5 * (a + b)
        fx = f(x)
        if abs(fx) <= settings.abs_tol:
            return x
        if math.copysign(1, fx) == math.copysign(1, fb):
            b, fb = x, fx
            if side == -1:
                fa *= 0.5
            side = -1
        else:
            a, fa = x, fx
            if side == 1:
                fb *= 0.5
            side = 1
        if b - a <= settings.rel_tol * max(abs(x), 1e-300):
            return x
        # force bisection when the secant step stalls on one side
        if b - a > 0.5 * width:
            m = 0.5 * (a + b)
            fm = f(m)
            if abs(fm) <= settings.abs_tol:
                return m
            if math.copysign(1, fm) == math.copysign(1, fb):
                b, fb = m, fm
            else:
                a, fa = m, fm
            side = 0
        width = b - a
    raise ConvergenceError(
        f"root not converged after {settings.max_iter} iterations", residual=min(abs(fa), abs(fb))
    )


class FixedPointResult(NamedTuple):
    x: float
    residual: float
    iterations: int


def fixed_point(
    g: Callable[[float], float],
    x0: float,
    settings: SolverSettings = DEFAULT_SETTINGS,
) -> FixedPointResult:
    """Damped fixed-point iteration ``x <- (1 - d) x + d g(x)``.

    ``residual`` of the result is ``|x - g(x)|`` at the returned point.
    """
    d = settings.damping
    x = x0
    for it in range(1, settings.max_iter + 1):
        gx = g(x)
        r = abs(x - gx)
        if not math.isfinite(gx):
            raise ConvergenceError("fixed-point map returned a non-finite value", residual=r, last=x)
        if r <= settings.abs_tol:
            return FixedPointResult(x, r, it)
        x = (1 - d) * x + d * gx
    r = abs(x - g(x))
    if r <= settings.abs_tol:
        return FixedPointResult(x, r, settings.max_iter)
    raise ConvergenceError(
        f"fixed point not reached after {settings.max_iter} iterations (residual {r:.3e})",
        residual=r,
        last=x,
    )
