"""Interacting gas in the molecular-field approximation.

The interaction energy is U(V, n) = V u(n) with the "volume" V taken as the
circumference L of the curve and the density n = N / L. Expanding u to first
order about the mean density shifts every level by u'(n_bar), i.e. the gas
sees an effective fugacity z_eff = z exp(-u'(n_bar) / T), and adds the
constant L u(n_bar) - u'(n_bar) N_bar to the grand potential.

Two pipelines fix n_bar:

* ``selfconsistent``: n_bar = N(z_eff(n_bar)) / L solved by damped iteration;
* ``linear``: n_bar is the ideal Fermi-gas density (1/sqrt 2)(M T/pi)^{3/2}
  h_{3/2}(z), used once without iteration.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ensemble import (
    BOSON_MU_GUARD,
    DEFAULT_TRUNCATION,
    ThermoPoint,
    TruncationPolicy,
    _log_paper,
    _level_entropy,
    _level_variance,
    _t_step,
    _terms,
    continuum_factor,
    level_table,
)
from .errors import ConvergenceError, DivergenceError, DomainError, NoSolutionError, TruncationError
from .numerics import DEFAULT_SETTINGS, SolverSettings, central_derivative, fixed_point, solve_root
from .spectra import as_chi, thermal_wavelength
from .statfns import h_log

__all__ = [
    "InteractionModel",
    "MeanFieldState",
    "InteractingQuantities",
    "PIPELINES",
    "effective_fugacity",
    "linear_approx_density",
    "self_consistent_density",
    "solve_mean_field",
    "grand_potential_interacting",
    "internal_energy_interacting",
    "entropy_interacting",
    "particle_number_interacting",
    "number_variance_interacting",
    "ring_grand_potential_interacting",
    "evaluate_interacting",
    "fermi_level_solve",
]

PIPELINES = ("selfconsistent", "linear")
_FALLBACK_DAMPING = 0.1


@dataclass(frozen=True)
class InteractionModel:
    """u(n) = sum_k coefficients[k] n^k (energy x length^k per density^k)."""

    coefficients: tuple[float, ...] = ()

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coefficients)
        if not all(math.isfinite(c) for c in coeffs):
            raise ValueError("interaction coefficients must be finite")
        object.__setattr__(self, "coefficients", coeffs)

    @classmethod
    def zero(cls) -> "InteractionModel":
        return cls(())

    @classmethod
    def linear(cls, g: float) -> "InteractionModel":
        return cls((0.0, g))

    @classmethod
    def quadratic(cls, g: float) -> "InteractionModel":
        return cls((0.0, 0.0, g))

    @property
    def order(self) -> int:
        nz = [k for k, c in enumerate(self.coefficients) if c != 0.0]
        return nz[-1] if nz else 0

    @property
    def is_zero(self) -> bool:
        return all(c == 0.0 for c in self.coefficients)

    def u(self, n: float) -> float:
        return float(np.polynomial.polynomial.polyval(n, self.coefficients)) if self.coefficients else 0.0

    def u_prime(self, n: float) -> float:
        if len(self.coefficients) < 2:
            return 0.0
        return float(np.polynomial.polynomial.polyval(n, np.polynomial.polynomial.polyder(self.coefficients)))


DEFAULT_MODEL = InteractionModel.quadratic(0.05)


@dataclass(frozen=True)
class MeanFieldState:
    """Outcome of fixing the mean density.

    ``residual`` is |n_bar L - N(z_eff)| and ``converged`` means it is within
    ``abs_tol``. The linear pipeline does not iterate: it reports the mismatch
    of its density ansatz, which is generally far from zero.
    """

    n_bar: float
    N_bar: float
    u_prime: float
    mu_eff: float
    T: float
    converged: bool
    residual: float
    iterations: int
    pipeline: str

    @property
    def log_z_eff(self) -> float:
        return self.mu_eff / self.T

    @property
    def z_eff(self) -> float:
        try:
            return math.exp(self.mu_eff / self.T)
        except OverflowError:
            return math.inf


def effective_fugacity(point: ThermoPoint, u_prime: float, chi) -> float:
    """z exp(-u'/T)."""
    chi = as_chi(chi)
    mu_eff = point.mu - u_prime
    if chi == -1 and mu_eff >= 0:
        raise DivergenceError(
            f"effective Bose fugacity exp({mu_eff / point.T:g}) >= 1: interaction cannot stabilise mu = {point.mu:g}"
        )
    return math.exp(mu_eff / point.T)


def linear_approx_density(point: ThermoPoint, M: float) -> float:
    """Ideal Fermi-gas density (1/sqrt 2)(M T / pi)^{3/2} h_{3/2}(z)."""
    if not M > 0:
        raise DomainError("mass must be positive")
    return (M * point.T / math.pi) ** 1.5 / math.sqrt(2.0) * h_log(1.5, point.log_z, 1)


class _Tables:
    """Level tables covering every effective chemical potential met during a solve."""

    def __init__(self, geom, T_max, mu, trunc):
        self.geom, self.T_max, self.trunc = geom, T_max, trunc
        self.mu_cover = mu
        self.tab = level_table(geom, T_max, mu, trunc)

    def get(self, mu_eff):
        if mu_eff > self.mu_cover:
            self.mu_cover = mu_eff + 0.5 * abs(mu_eff) + 5 * self.T_max
            self.tab = level_table(self.geom, self.T_max, self.mu_cover, self.trunc)
        return self.tab


def _shifted_number(tables, T, mu_eff, chi):
    if chi == -1 and mu_eff > -BOSON_MU_GUARD:
        raise DivergenceError(f"effective Bose chemical potential {mu_eff:g} reaches the ground level")
    tab = tables.get(mu_eff)
    _, f, _ = _terms(tab.energy, T, mu_eff, chi)
    return float(np.dot(tab.weight, f))


def _solve(geom, T, mu, model, chi, settings, pipeline, tables) -> MeanFieldState:
    L = geom.circumference
    if pipeline == "linear":
        n_lin = linear_approx_density(ThermoPoint(T, mu), geom.M)
        up = model.u_prime(n_lin)
        N = _shifted_number(tables, T, mu - up, chi)
        res = abs(n_lin * L - N)
        return MeanFieldState(n_lin, N, up, mu - up, T, res <= settings.abs_tol, res, 0, pipeline)
    if pipeline != "selfconsistent":
        raise ValueError(f"unknown pipeline {pipeline!r}")

    def g(N):
        return _shifted_number(tables, T, mu - model.u_prime(max(N, 0.0) / L), chi)

    N0 = g(0.0)
    if model.is_zero:
        return MeanFieldState(N0 / L, N0, 0.0, mu, T, True, 0.0, 1, pipeline)
    try:
        N, res, it = fixed_point(g, N0, settings)
    except ConvergenceError:
        slow = SolverSettings(settings.abs_tol, settings.rel_tol, settings.max_iter * 5, _FALLBACK_DAMPING)
        try:
            N, res, it = fixed_point(g, N0, slow)
        except ConvergenceError:
            N, it = _bracketed_density(g, N0, settings), -1
            res = abs(N - g(N))
    n_bar = N / L
    up = model.u_prime(n_bar)
    if chi == -1 and mu - up > -BOSON_MU_GUARD:
        raise DivergenceError("self-consistent Bose state sits at the condensation point")
    return MeanFieldState(n_bar, N, up, mu - up, T, res <= settings.abs_tol, res, it, pipeline)


def _bracketed_density(g, N0, settings):
    # last resort: N - g(N) is increasing for repulsive u, so bracket and bisect
    F = lambda N: N - g(N)
    lo, hi = 0.0, max(N0, 1.0)
    for _ in range(60):
        if F(hi) >= 0:
            return solve_root(F, lo, hi, settings)
        lo, hi = hi, 2 * hi
    raise ConvergenceError("mean-field density could not be bracketed")


def solve_mean_field(geom, point: ThermoPoint, model: InteractionModel, chi,
                     settings: SolverSettings = DEFAULT_SETTINGS, pipeline: str = "selfconsistent",
                     trunc: TruncationPolicy = DEFAULT_TRUNCATION) -> MeanFieldState:
    chi = as_chi(chi)
    tables = _Tables(geom, point.T, point.mu, trunc)
    return _solve(geom, point.T, point.mu, model, chi, settings, pipeline, tables)


def self_consistent_density(geom, point: ThermoPoint, model: InteractionModel, chi,
                            settings: SolverSettings = DEFAULT_SETTINGS,
                            trunc: TruncationPolicy = DEFAULT_TRUNCATION) -> MeanFieldState:
    """Solve n_bar = N(z exp(-u'(n_bar)/T)) / L by damped fixed-point iteration.

    Falls back to damping 0.1 and then to a bracketed root search; raises
    ``ConvergenceError`` if the final residual still exceeds ``abs_tol``.
    """
    state = solve_mean_field(geom, point, model, chi, settings, "selfconsistent", trunc)
    if not state.converged:
        raise ConvergenceError("mean-field density did not converge", residual=state.residual, last=state.n_bar)
    return state


@dataclass(frozen=True)
class InteractingQuantities:
    T: float
    mu: float
    grand_potential: float
    internal_energy: float
    internal_energy_mf: float
    entropy: float
    heat_capacity: float
    heat_capacity_mf: float
    particle_number: float
    number_variance: float
    thermal_wavelength: float
    n_bar: float
    mu_eff: float
    residual: float


def _sums(tables, T, mu_eff, chi):
    tab = tables.get(mu_eff)
    ell, f, x = _terms(tab.energy, T, mu_eff, chi)
    w = tab.weight
    return (
        float(np.dot(w, ell)),
        float(np.dot(w, f)),
        float(np.dot(w, tab.energy * f)),
        float(np.dot(w, _level_entropy(ell, f, x, chi))),
        float(np.dot(w, _level_variance(f, x, chi))),
    )


def _energies(geom, T, mu, model, chi, settings, pipeline, tables):
    st = _solve(geom, T, mu, model, chi, settings, pipeline, tables)
    _, _, kin, _, _ = _sums(tables, T, st.mu_eff, chi)
    Lu = geom.circumference * model.u(st.n_bar)
    return kin + Lu, kin + Lu - st.u_prime * st.N_bar


def evaluate_interacting(geom, point: ThermoPoint, model: InteractionModel, chi,
                         settings: SolverSettings = DEFAULT_SETTINGS, pipeline: str = "selfconsistent",
                         trunc: TruncationPolicy = DEFAULT_TRUNCATION) -> InteractingQuantities:
    """All interacting state quantities at one point.

    ``internal_energy`` is sum n_Omega E_Omega + L u(n_bar); ``internal_energy_mf``
    additionally carries the -u'(n_bar) N_bar bookkeeping term. Heat
    capacities differentiate each at fixed mu, re-solving the mean field.
    """
    chi = as_chi(chi)
    T, mu = point.T, point.mu
    h = _t_step(T)
    tables = _Tables(geom, T + h, mu, trunc)
    st = _solve(geom, T, mu, model, chi, settings, pipeline, tables)
    ell, N, kin, S, var = _sums(tables, T, st.mu_eff, chi)
    L = geom.circumference
    Lu = L * model.u(st.n_bar)
    corr = Lu - st.u_prime * st.N_bar
    energies = {}

    def channel(k):
        def fn(t):
            if t not in energies:
                energies[t] = _energies(geom, t, mu, model, chi, settings, pipeline, tables)
            return energies[t][k]
        return fn

    c_direct = central_derivative(channel(0), T, h)
    c_mf = central_derivative(channel(1), T, h)
    return InteractingQuantities(
        T=T,
        mu=mu,
        grand_potential=-T * ell + corr,
        internal_energy=kin + Lu,
        internal_energy_mf=kin + corr,
        entropy=S,
        heat_capacity=c_direct,
        heat_capacity_mf=c_mf,
        particle_number=N if pipeline == "linear" else st.N_bar,
        number_variance=var,
        thermal_wavelength=thermal_wavelength(geom.M, T),
        n_bar=st.n_bar,
        mu_eff=st.mu_eff,
        residual=st.residual,
    )


def _state_and_tables(geom, point, model, chi, settings, pipeline, trunc, state):
    tables = _Tables(geom, point.T, point.mu, trunc)
    if state is None:
        state = _solve(geom, point.T, point.mu, model, chi, settings, pipeline, tables)
    return state, tables


def _closed_form_prefactors(geom, T):
    lam = thermal_wavelength(geom.M, T)
    return lam, geom.literal_prefactor(T) * lam  # lambda, p L / sqrt(F)


def grand_potential_interacting(geom, point: ThermoPoint, model: InteractionModel, chi,
                                settings: SolverSettings = DEFAULT_SETTINGS, pipeline: str = "selfconsistent",
                                trunc: TruncationPolicy = DEFAULT_TRUNCATION, channel: str = "direct",
                                state: MeanFieldState | None = None) -> float:
    """-T chi sum ln(1 + chi e^{-(E + u' - mu)/T}) + L u(n_bar) - u'(n_bar) N_bar.

    ``consistent`` replaces the sum by -T sqrt(pi T/eps) h_{3/2}(z_eff);
    ``paper_literal`` by (p/sqrt F)(L/lambda) h_{3/2}(z_eff) - h_1(z_eff).
    """
    chi = as_chi(chi)
    state, tables = _state_and_tables(geom, point, model, chi, settings, pipeline, trunc, state)
    corr = geom.circumference * model.u(state.n_bar) - state.u_prime * state.N_bar
    lz = state.log_z_eff
    if channel == "direct":
        ell, *_ = _sums(tables, point.T, state.mu_eff, chi)
        return -point.T * ell + corr
    if channel == "consistent":
        return -point.T * continuum_factor(geom, point.T) * h_log(1.5, lz, chi) + corr
    if channel == "paper_literal":
        return geom.literal_prefactor(point.T) * h_log(1.5, lz, chi) - h_log(1.0, lz, chi) + corr
    raise ValueError(f"unknown channel {channel!r}")


def internal_energy_interacting(geom, point: ThermoPoint, model: InteractionModel, chi,
                                settings: SolverSettings = DEFAULT_SETTINGS, pipeline: str = "selfconsistent",
                                trunc: TruncationPolicy = DEFAULT_TRUNCATION, channel: str = "direct",
                                state: MeanFieldState | None = None) -> float:
    """Mean energy.

    ``direct``: sum n_Omega E_Omega + L u(n_bar).
    ``mean_field``: the same minus u'(n_bar) N_bar.
    ``paper_literal``: the printed closed form in z_eff, verbatim.
    """
    chi = as_chi(chi)
    state, tables = _state_and_tables(geom, point, model, chi, settings, pipeline, trunc, state)
    Lu = geom.circumference * model.u(state.n_bar)
    if channel in ("direct", "mean_field"):
        _, _, kin, _, _ = _sums(tables, point.T, state.mu_eff, chi)
        return kin + Lu - (state.u_prime * state.N_bar if channel == "mean_field" else 0.0)
    if channel == "paper_literal":
        T, mu = point.T, point.mu
        lam, pref = _closed_form_prefactors(geom, T)
        zeff = state.z_eff
        lz = state.log_z_eff
        return (
            chi * mu * zeff / T * _log_paper(zeff, chi)
            + lam * mu * zeff / T * pref * h_log(0.5, lz, chi)
            + 1.5 * lam * pref * h_log(1.5, lz, chi)
            - h_log(1.0, lz, chi)
            + Lu
            - state.u_prime * state.N_bar
        )
    raise ValueError(f"unknown channel {channel!r}")


def entropy_interacting(geom, point: ThermoPoint, model: InteractionModel, chi,
                        settings: SolverSettings = DEFAULT_SETTINGS, pipeline: str = "selfconsistent",
                        trunc: TruncationPolicy = DEFAULT_TRUNCATION,
                        state: MeanFieldState | None = None) -> float:
    """chi sum ln(1 + chi e^{-x}) + (1/T) sum n_Omega (E_Omega + u' - mu)."""
    chi = as_chi(chi)
    state, tables = _state_and_tables(geom, point, model, chi, settings, pipeline, trunc, state)
    return _sums(tables, point.T, state.mu_eff, chi)[3]


def particle_number_interacting(geom, point: ThermoPoint, model: InteractionModel, chi,
                                settings: SolverSettings = DEFAULT_SETTINGS, pipeline: str = "selfconsistent",
                                trunc: TruncationPolicy = DEFAULT_TRUNCATION, channel: str = "direct",
                                state: MeanFieldState | None = None) -> float:
    chi = as_chi(chi)
    state, tables = _state_and_tables(geom, point, model, chi, settings, pipeline, trunc, state)
    if channel == "direct":
        return state.N_bar
    if channel == "paper_literal":
        T = point.T
        lam, pref = _closed_form_prefactors(geom, T)
        zeff = state.z_eff
        return chi * zeff / T * pref * _log_paper(zeff, chi) + lam * zeff / T * pref * h_log(1.5, state.log_z_eff, chi)
    raise ValueError(f"unknown channel {channel!r}")


def number_variance_interacting(geom, point: ThermoPoint, model: InteractionModel, chi,
                                settings: SolverSettings = DEFAULT_SETTINGS, pipeline: str = "selfconsistent",
                                trunc: TruncationPolicy = DEFAULT_TRUNCATION,
                                state: MeanFieldState | None = None) -> float:
    """sum n_Omega (1 - chi n_Omega) on the shifted ladder (mean field held fixed)."""
    chi = as_chi(chi)
    state, tables = _state_and_tables(geom, point, model, chi, settings, pipeline, trunc, state)
    return _sums(tables, point.T, state.mu_eff, chi)[4]


def ring_grand_potential_interacting(geom, point: ThermoPoint, model: InteractionModel, chi,
                                     settings: SolverSettings = DEFAULT_SETTINGS,
                                     pipeline: str = "selfconsistent",
                                     trunc: TruncationPolicy = DEFAULT_TRUNCATION,
                                     channel: str = "consistent") -> float:
    """Ring closed form (L/lambda) h_{3/2}(z_eff) with L = 2 pi R, plus the mean-field constant.

    ``consistent`` (default) carries the -T factor of the continuum limit;
    ``paper_literal`` is the printed expression including its -h_1 term;
    ``direct`` sums the ring ladder.
    """
    return grand_potential_interacting(geom, point, model, chi, settings, pipeline, trunc, channel)


def fermi_level_solve(geom, T: float, N_target: float, model: InteractionModel = InteractionModel.zero(),
                      settings: SolverSettings = DEFAULT_SETTINGS, pipeline: str = "selfconsistent",
                      trunc: TruncationPolicy = DEFAULT_TRUNCATION) -> float:
    """Chemical potential at which the fermion number equals ``N_target``."""
    if not N_target > 0:
        raise DomainError("N_target must be positive")

    def F(mu):
        st = solve_mean_field(geom, ThermoPoint(T, mu), model, 1, settings, pipeline, trunc)
        return st.N_bar - N_target

    lo, hi = -1.0, 1.0
    try:
        flo, fhi = F(lo), F(hi)
        for _ in range(80):
            if flo <= 0 <= fhi:
                break
            if fhi < 0:
                lo, flo = hi, fhi
                hi = 2 * hi + 1
                fhi = F(hi)
            else:
                hi, fhi = lo, flo
                lo = 2 * lo - 1
                flo = F(lo)
        else:
            raise NoSolutionError(
                f"could not bracket N = {N_target:g} at T = {T:g}: last bracket [{lo:g}, {hi:g}] gives "
                f"N - target in [{flo:g}, {fhi:g}]"
            )
    except TruncationError as exc:
        raise NoSolutionError(
            f"bracket expansion for N = {N_target:g} at T = {T:g} stopped at [{lo:g}, {hi:g}]: {exc}"
        ) from exc
    return solve_root(F, lo, hi, settings)
