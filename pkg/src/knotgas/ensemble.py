"""Grand-canonical thermodynamics of an ideal quantum gas on a torus knot or ring.

The direct truncated level sum is the reference evaluation. Every level
n >= 1 carries degeneracy 2 (the +n and -n states); n = 0 is counted once.
Euler-Maclaurin closed forms are provided in two flavours:

* ``consistent``: the continuum limit -T sqrt(pi T / eps) h_{3/2}(z) of the
  same sum, with all state quantities derived from it;
* ``paper_literal``: the printed closed forms, reproduced verbatim for
  comparison output (they are not thermodynamically consistent).
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields

import numpy as np
from scipy import special

from .errors import DivergenceError, DomainError, KnotGasError, TruncationError
from .numerics import central_derivative, default_step
from .spectra import as_chi, thermal_wavelength
from .statfns import h_log

__all__ = [
    "BOSON_MU_GUARD",
    "ThermoPoint",
    "ThermoQuantities",
    "TruncationPolicy",
    "LevelTable",
    "level_table",
    "occupation",
    "occupation_entropy",
    "occupation_variance",
    "grand_potential_sum",
    "grand_potential_em",
    "particle_number",
    "particle_number_em",
    "internal_energy",
    "internal_energy_em",
    "entropy",
    "heat_capacity",
    "number_variance",
    "evaluate",
    "evaluate_em",
    "evaluate_paper_literal",
    "continuum_factor",
    "continuum_ratio",
    "sweep",
    "SweepError",
    "CHANNEL_EVALUATORS",
    "map_points",
    "worker_count",
]

BOSON_MU_GUARD = 1e-12


@dataclass(frozen=True)
class ThermoPoint:
    T: float
    mu: float

    def __post_init__(self):
        if not (self.T > 0 and math.isfinite(self.T)):
            raise DomainError(f"temperature must be positive and finite, got {self.T}")
        if not math.isfinite(self.mu):
            raise DomainError(f"chemical potential must be finite, got {self.mu}")

    @property
    def beta(self) -> float:
        return 1.0 / self.T

    @property
    def log_z(self) -> float:
        return self.mu / self.T

    @property
    def z(self) -> float:
        return math.exp(self.mu / self.T)


@dataclass(frozen=True)
class ThermoQuantities:
    T: float
    mu: float
    grand_potential: float
    internal_energy: float
    entropy: float
    heat_capacity: float
    particle_number: float
    number_variance: float
    thermal_wavelength: float

    def as_row(self) -> tuple:
        return tuple(getattr(self, f.name) for f in fields(self))


@dataclass(frozen=True)
class TruncationPolicy:
    """Where to stop the level sum.

    ``tail_bound`` is relative to the magnitude of the running sum; the cut
    is placed far enough above max(mu, 0) that every neglected term is
    below it. ``hard_cap`` limits the number of levels.
    """

    tail_bound: float = 1e-12
    hard_cap: int = 1_000_000

    def __post_init__(self):
        if not self.tail_bound > 0:
            raise ValueError("tail_bound must be positive")
        if self.hard_cap < 1:
            raise ValueError("hard_cap must be >= 1")


DEFAULT_TRUNCATION = TruncationPolicy()


@dataclass(frozen=True)
class LevelTable:
    n: np.ndarray
    energy: np.ndarray
    weight: np.ndarray

    @property
    def n_max(self) -> int:
        return int(self.n[-1])


# exp(-20) headroom keeps polynomially weighted tails (E f, E^2 f') below the bound too
_TAIL_MARGIN = 20.0


def level_table(geom, T: float, mu: float, trunc: TruncationPolicy = DEFAULT_TRUNCATION) -> LevelTable:
    """Levels needed to converge every sum at temperatures up to ``T`` and chemical potentials up to ``mu``."""
    eps = geom.energy_scale
    e_cut = max(mu, 0.0) + T * (math.log(1.0 / trunc.tail_bound) + _TAIL_MARGIN)
    n_cut = int(math.ceil(math.sqrt(e_cut / eps))) + 1
    if n_cut > trunc.hard_cap:
        raise TruncationError(
            f"need {n_cut} levels to meet tail bound {trunc.tail_bound:g} but hard cap is {trunc.hard_cap}"
        )
    n = np.arange(n_cut + 1)
    energy = eps * n.astype(float) ** 2
    weight = np.where(n == 0, 1.0, 2.0)
    return LevelTable(n, energy, weight)


def _check_point(point: ThermoPoint, chi: int, e_min: float = 0.0):
    if chi == -1 and point.mu > e_min - BOSON_MU_GUARD:
        raise DivergenceError(
            f"Bose gas needs mu < lowest level ({e_min:g}) - {BOSON_MU_GUARD:g}; got mu = {point.mu:g}"
        )


def _terms(energy, T, mu, chi):
    """Per-level log term chi*ln(1+chi e^-x), occupation f and reduced energy x."""
    x = (energy - mu) / T
    if chi == 1:
        ell = np.logaddexp(0.0, -x)
        f = special.expit(-x)
    else:
        em = -np.expm1(-x)
        # log1mexp split keeps ln(1 - e^-x) accurate at both ends
        with np.errstate(divide="ignore"):
            ell = np.where(x > math.log(2), -np.log1p(-np.exp(-x)), -np.log(em))
        f = np.exp(-x) / em
    return ell, f, x


def _phi(tab, T, mu, chi):
    ell, _, _ = _terms(tab.energy, T, mu, chi)
    return -T * float(np.dot(tab.weight, ell))


def _number(tab, T, mu, chi):
    _, f, _ = _terms(tab.energy, T, mu, chi)
    return float(np.dot(tab.weight, f))


def _energy(tab, T, mu, chi):
    _, f, _ = _terms(tab.energy, T, mu, chi)
    return float(np.dot(tab.weight, tab.energy * f))


def _level_entropy(ell, f, x, chi):
    # ell + x f is the occupation entropy -[f ln f - chi (1 - chi f) ln(1 - chi f)] per state
    if chi == 1:
        # even in x; folding to x >= 0 avoids cancelling two large terms below the Fermi level
        a = np.abs(x)
        return np.logaddexp(0.0, -a) + a * special.expit(-a)
    return ell + np.where(f > 0, x * f, 0.0)


def _entropy(tab, T, mu, chi):
    ell, f, x = _terms(tab.energy, T, mu, chi)
    return float(np.dot(tab.weight, _level_entropy(ell, f, x, chi)))


def _level_variance(f, x, chi):
    # fermions: f (1 - f) = expit(-x) expit(x) keeps digits when f is close to 1
    return f * special.expit(x) if chi == 1 else f * (1.0 + f)


def _variance(tab, T, mu, chi):
    _, f, x = _terms(tab.energy, T, mu, chi)
    return float(np.dot(tab.weight, _level_variance(f, x, chi)))


def _t_step(T):
    return min(default_step(T), 0.05 * T)


def occupation(E: float, point: ThermoPoint, chi) -> float:
    """Mean occupation 1/(exp((E - mu)/T) + chi) of a single state."""
    chi = as_chi(chi)
    if chi == -1 and E <= point.mu:
        raise DomainError(f"Bose occupation needs E > mu, got E={E}, mu={point.mu}")
    _, f, _ = _terms(np.asarray(float(E)), point.T, point.mu, chi)
    return float(f)


def occupation_entropy(f, chi):
    """Entropy of states with mean occupation ``f``.

    Fermions: -[f ln f + (1-f) ln(1-f)]; bosons: -[f ln f - (1+f) ln(1+f)].
    """
    chi = as_chi(chi)
    f = np.asarray(f, dtype=float)
    out = -(special.xlogy(f, f) + chi * special.xlogy(1 - chi * f, 1 - chi * f))
    return float(out) if out.ndim == 0 else out


def occupation_variance(f, chi):
    """Number variance f (1 - chi f) of states with mean occupation ``f``."""
    chi = as_chi(chi)
    f = np.asarray(f, dtype=float)
    out = f * (1.0 - chi * f)
    return float(out) if out.ndim == 0 else out


def grand_potential_sum(geom, point: ThermoPoint, chi, trunc: TruncationPolicy = DEFAULT_TRUNCATION,
                        with_error: bool = False):
    """Phi = -T sum_Omega chi ln(1 + chi z e^(-E_Omega/T)) over the truncated ladder.

    With ``with_error`` returns ``(Phi, bound)`` where ``bound`` estimates the
    neglected geometric tail.
    """
    chi = as_chi(chi)
    _check_point(point, chi)
    tab = level_table(geom, point.T, point.mu, trunc)
    phi = _phi(tab, point.T, point.mu, chi)
    if not with_error:
        return phi
    n1 = tab.n_max + 1
    e1 = geom.energy_scale * n1 * n1
    first = 2 * point.T * math.exp(-(e1 - point.mu) / point.T)
    ratio = math.exp(-geom.energy_scale * (2 * n1 + 1) / point.T)
    return phi, first / (1 - ratio)


def particle_number(geom, point: ThermoPoint, chi, trunc: TruncationPolicy = DEFAULT_TRUNCATION) -> float:
    chi = as_chi(chi)
    _check_point(point, chi)
    return _number(level_table(geom, point.T, point.mu, trunc), point.T, point.mu, chi)


def internal_energy(geom, point: ThermoPoint, chi, trunc: TruncationPolicy = DEFAULT_TRUNCATION) -> float:
    chi = as_chi(chi)
    _check_point(point, chi)
    return _energy(level_table(geom, point.T, point.mu, trunc), point.T, point.mu, chi)


def entropy(geom, point: ThermoPoint, chi, trunc: TruncationPolicy = DEFAULT_TRUNCATION) -> float:
    chi = as_chi(chi)
    _check_point(point, chi)
    return _entropy(level_table(geom, point.T, point.mu, trunc), point.T, point.mu, chi)


def number_variance(geom, point: ThermoPoint, chi, trunc: TruncationPolicy = DEFAULT_TRUNCATION) -> float:
    """<dN^2> = T dN/dmu = sum f (1 - chi f)."""
    chi = as_chi(chi)
    _check_point(point, chi)
    return _variance(level_table(geom, point.T, point.mu, trunc), point.T, point.mu, chi)


def heat_capacity(geom, point: ThermoPoint, chi, trunc: TruncationPolicy = DEFAULT_TRUNCATION) -> float:
    """dU/dT at fixed mu, by central differences on the direct sum."""
    chi = as_chi(chi)
    _check_point(point, chi)
    h = _t_step(point.T)
    tab = level_table(geom, point.T + h, point.mu, trunc)
    return central_derivative(lambda t: _energy(tab, t, point.mu, chi), point.T, h)


def evaluate(geom, point: ThermoPoint, chi, trunc: TruncationPolicy = DEFAULT_TRUNCATION) -> ThermoQuantities:
    """All state quantities from the direct level sum."""
    chi = as_chi(chi)
    _check_point(point, chi)
    T, mu = point.T, point.mu
    h = _t_step(T)
    tab = level_table(geom, T + h, mu, trunc)
    ell, f, x = _terms(tab.energy, T, mu, chi)
    w = tab.weight
    phi = -T * float(np.dot(w, ell))
    return ThermoQuantities(
        T=T,
        mu=mu,
        grand_potential=phi,
        internal_energy=float(np.dot(w, tab.energy * f)),
        entropy=float(np.dot(w, _level_entropy(ell, f, x, chi))),
        heat_capacity=central_derivative(lambda t: _energy(tab, t, mu, chi), T, h),
        particle_number=float(np.dot(w, f)),
        number_variance=float(np.dot(w, _level_variance(f, x, chi))),
        thermal_wavelength=thermal_wavelength(geom.M, T),
    )


# --- Euler-Maclaurin closed forms -------------------------------------------------


def continuum_factor(geom, T: float) -> float:
    """sqrt(pi T / eps); equals p L / (sqrt(F) lambda) for the torus and L / lambda for the ring."""
    return math.sqrt(math.pi * T / geom.energy_scale)


def continuum_ratio(geom, T: float) -> float:
    """lambda / (p L / sqrt(F)); the continuum closed form is accurate when this is small."""
    return 1.0 / continuum_factor(geom, T)


def _log_paper(z: float, chi: int) -> float:
    # log(1 + chi e^z) exactly as printed; undefined (nan) for bosons since z > 0
    if chi == 1:
        return float(np.logaddexp(0.0, z))
    return math.log(-math.expm1(z)) if z < 0 else math.nan


def _phi_em_consistent(geom, T, mu, chi):
    return -T * continuum_factor(geom, T) * h_log(1.5, mu / T, chi)


def grand_potential_em(geom, point: ThermoPoint, chi, channel: str = "consistent") -> float:
    """Euler-Maclaurin grand potential.

    ``consistent``: -T (p L / (sqrt(F) lambda)) h_{3/2}(z).
    ``paper_literal``: (p / sqrt(F)) (L / lambda) h_{3/2}(z) - h_1(z).
    """
    chi = as_chi(chi)
    _check_point(point, chi)
    if channel == "consistent":
        return _phi_em_consistent(geom, point.T, point.mu, chi)
    if channel == "paper_literal":
        lz = point.log_z
        return geom.literal_prefactor(point.T) * h_log(1.5, lz, chi) - h_log(1.0, lz, chi)
    raise ValueError(f"unknown channel {channel!r}")


def _mu_step(point):
    return min(default_step(point.mu), 0.05 * point.T)


def particle_number_em(geom, point: ThermoPoint, chi, channel: str = "consistent") -> float:
    """``consistent``: -dPhi_em/dmu by central differences. ``paper_literal``: the printed N formula."""
    chi = as_chi(chi)
    _check_point(point, chi)
    T = point.T
    if channel == "consistent":
        h = _mu_step(point)
        if chi == -1:
            h = min(h, 0.25 * (-point.mu))
        return -central_derivative(lambda m: _phi_em_consistent(geom, T, m, chi), point.mu, h)
    if channel == "paper_literal":
        z = point.z
        pref = geom.literal_prefactor(T) * thermal_wavelength(geom.M, T)  # p L / sqrt(F)
        lam = thermal_wavelength(geom.M, T)
        return chi * z / T * pref * _log_paper(z, chi) + lam * z / T * pref * h_log(1.5, point.log_z, chi)
    raise ValueError(f"unknown channel {channel!r}")


def internal_energy_em(geom, point: ThermoPoint, chi, channel: str = "consistent") -> float:
    """``consistent``: (T/2) sqrt(pi T/eps) h_{3/2}(z). ``paper_literal``: the printed U formula."""
    chi = as_chi(chi)
    _check_point(point, chi)
    T, mu = point.T, point.mu
    if channel == "consistent":
        return 0.5 * T * continuum_factor(geom, T) * h_log(1.5, point.log_z, chi)
    if channel == "paper_literal":
        z = point.z
        lam = thermal_wavelength(geom.M, T)
        pref = geom.literal_prefactor(T) * lam  # p L / sqrt(F)
        lz = point.log_z
        return (
            chi * mu * z / T * _log_paper(z, chi)
            + lam * mu * z / T * pref * h_log(0.5, lz, chi)
            + 1.5 * lam * pref * h_log(1.5, lz, chi)
            - h_log(1.0, lz, chi)
        )
    raise ValueError(f"unknown channel {channel!r}")


def evaluate_em(geom, point: ThermoPoint, chi) -> ThermoQuantities:
    """State quantities derived from the consistent continuum grand potential."""
    chi = as_chi(chi)
    _check_point(point, chi)
    T, mu = point.T, point.mu
    c = continuum_factor(geom, T)
    lz = point.log_z
    h32 = h_log(1.5, lz, chi)
    h12 = h_log(0.5, lz, chi)
    phi = -T * c * h32
    n = c * h12
    s = c * (1.5 * h32 - lz * h12)
    hT = _t_step(T)
    u_of_t = lambda t: 0.5 * t * continuum_factor(geom, t) * h_log(1.5, mu / t, chi)
    n_of_mu = lambda m: continuum_factor(geom, T) * h_log(0.5, m / T, chi)
    hm = _mu_step(point)
    if chi == -1:
        hm = min(hm, 0.25 * (-mu))
    return ThermoQuantities(
        T=T,
        mu=mu,
        grand_potential=phi,
        internal_energy=0.5 * T * c * h32,
        entropy=s,
        heat_capacity=central_derivative(u_of_t, T, hT),
        particle_number=n,
        number_variance=T * central_derivative(n_of_mu, mu, hm),
        thermal_wavelength=thermal_wavelength(geom.M, T),
    )


def evaluate_paper_literal(geom, point: ThermoPoint, chi) -> ThermoQuantities:
    """Printed closed forms for Phi, U and N; the other quantities have none and are nan."""
    chi = as_chi(chi)
    _check_point(point, chi)
    return ThermoQuantities(
        T=point.T,
        mu=point.mu,
        grand_potential=grand_potential_em(geom, point, chi, "paper_literal"),
        internal_energy=internal_energy_em(geom, point, chi, "paper_literal"),
        entropy=math.nan,
        heat_capacity=math.nan,
        particle_number=particle_number_em(geom, point, chi, "paper_literal"),
        number_variance=math.nan,
        thermal_wavelength=thermal_wavelength(geom.M, point.T),
    )


# --- sweeps -------------------------------------------------------------------------


class SweepError(KnotGasError):
    """Some grid points failed; ``results`` holds None at those indices."""

    def __init__(self, results, errors):
        idx = ", ".join(str(i) for i, _ in errors)
        super().__init__(f"{len(errors)} sweep point(s) failed at grid index {idx}")
        self.results = results
        self.errors = errors


def worker_count() -> int:
    """Thread cap from KNOTGAS_THREADS (0 or unset = automatic)."""
    raw = os.environ.get("KNOTGAS_THREADS", "0").strip() or "0"
    n = int(raw)
    if n < 0:
        raise ValueError("KNOTGAS_THREADS must be >= 0")
    return n or min(8, os.cpu_count() or 1)


CHANNEL_EVALUATORS = {
    "direct": lambda geom, pt, chi, trunc: evaluate(geom, pt, chi, trunc),
    "euler_maclaurin": lambda geom, pt, chi, trunc: evaluate_em(geom, pt, chi),
    "paper_literal": lambda geom, pt, chi, trunc: evaluate_paper_literal(geom, pt, chi),
}


def map_points(fn, items, workers: int | None = None):
    """Apply ``fn`` to every item; results come back in input order.

    Failures are captured per item as ``(index, exception)``.
    """
    items = list(items)

    def safe(i_item):
        i, item = i_item
        try:
            return fn(item), None
        except KnotGasError as exc:
            return None, (i, exc)

    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(items) <= 1:
        out = [safe(p) for p in enumerate(items)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(safe, enumerate(items)))
    results = [r for r, _ in out]
    errors = [e for _, e in out if e is not None]
    return results, errors


def sweep(geom, T_grid, mu: float, chi, trunc: TruncationPolicy = DEFAULT_TRUNCATION,
          channel: str = "direct", workers: int | None = None) -> list[ThermoQuantities]:
    """Evaluate every temperature of a strictly increasing grid at fixed ``mu``."""
    chi = as_chi(chi)
    grid = [float(t) for t in T_grid]
    if not grid:
        raise ValueError("empty temperature grid")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("temperature grid must be strictly increasing")
    try:
        ev = CHANNEL_EVALUATORS[channel]
    except KeyError:
        raise ValueError(f"unknown channel {channel!r}") from None

    def one(T):
        return ev(geom, ThermoPoint(T, mu), chi, trunc)

    results, errors = map_points(one, grid, workers)
    if errors:
        raise SweepError(results, errors)
    return results
