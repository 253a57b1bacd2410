"""Run configuration: an INI file plus command-line overrides.

Example::

    [geometry]
    R = 1.7
    d = 0.0425
    p = 2
    alpha = 1, 5, 7
    M = 1

    [state]
    statistics = fermion
    mu = 1.0
    ; N_target = 3      (use instead of mu for the fermi command)

    [temperatures]
    start = 0.005
    stop = 1.0
    points = 120
    spacing = log

    [interaction]
    coefficients = 0, 0, 0.05
    pipeline = linear, selfconsistent   ; or none

    [output]
    directory = knotgas-out
    channels = direct, euler_maclaurin, paper_literal
    levels = 20

    [solver]
    abs_tol = 1e-10
    rel_tol = 1e-10
    max_iter = 200
    damping = 0.5

    [truncation]
    tail_bound = 1e-12
    hard_cap = 1000000

Every key is optional; missing keys fall back to the defaults below.
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .ensemble import BOSON_MU_GUARD, TruncationPolicy
from .errors import ConfigError, KnotGasError
from .meanfield import PIPELINES, InteractionModel
from .numerics import SolverSettings
from .spectra import Statistics, TorusGeometry

__all__ = ["RunConfig", "load_config", "parse_temps", "CHANNELS", "DEFAULT_GEOMETRY"]

CHANNELS = ("direct", "euler_maclaurin", "paper_literal")
# R/d = 40 gives nearly alpha-independent F, so shell structure near mu = 1 eV
# decides the low-T ordering of the U(T) curves
DEFAULT_GEOMETRY = dict(R=1.7, d=0.0425, p=2, M=1.0)


@dataclass(frozen=True)
class RunConfig:
    R: float = DEFAULT_GEOMETRY["R"]
    d: float = DEFAULT_GEOMETRY["d"]
    p: int = DEFAULT_GEOMETRY["p"]
    alphas: tuple[int, ...] = (1, 5, 7)
    M: float = DEFAULT_GEOMETRY["M"]
    statistics: Statistics = Statistics.FERMION
    mu: float | None = 1.0
    N_target: float | None = None
    t_start: float = 0.005
    t_stop: float = 1.0
    t_points: int = 120
    t_spacing: str = "log"
    coefficients: tuple[float, ...] = (0.0, 0.0, 0.05)
    pipelines: tuple[str, ...] = ("selfconsistent", "linear")
    out_dir: Path = Path("knotgas-out")
    channels: tuple[str, ...] = CHANNELS
    levels: int = 20
    settings: SolverSettings = field(default_factory=SolverSettings)
    truncation: TruncationPolicy = field(default_factory=TruncationPolicy)

    def __post_init__(self):
        if not self.alphas:
            raise ConfigError("alpha list is empty")
        if (self.mu is None) == (self.N_target is None):
            raise ConfigError("give exactly one of mu and N_target")
        if not (self.t_start > 0 and self.t_stop > 0 and math.isfinite(self.t_stop)):
            raise ConfigError("temperature grid must be strictly positive")
        if self.t_points < 1:
            raise ConfigError("temperature grid needs at least one point")
        if self.t_points > 1 and not self.t_stop > self.t_start:
            raise ConfigError("temperature grid must be increasing (stop > start)")
        if self.t_spacing not in ("linear", "log"):
            raise ConfigError(f"spacing must be linear or log, got {self.t_spacing!r}")
        if bad := [c for c in self.channels if c not in CHANNELS]:
            raise ConfigError(f"unknown channel(s) {bad}; choose from {list(CHANNELS)}")
        if not self.channels:
            raise ConfigError("no output channel selected")
        if bad := [p for p in self.pipelines if p not in PIPELINES]:
            raise ConfigError(f"unknown pipeline(s) {bad}; choose from {list(PIPELINES)} or none")
        if self.levels < 1:
            raise ConfigError("levels must be >= 1")
        if self.statistics is Statistics.BOSON and self.mu is not None and self.mu > -BOSON_MU_GUARD:
            raise ConfigError(
                f"divergence: Bose gas needs mu < 0 (fugacity below 1), got mu = {self.mu:g} eV"
            )
        for a in self.alphas:
            self.geometry(a)

    def geometry(self, alpha: int) -> TorusGeometry:
        try:
            return TorusGeometry(self.R, self.d, self.p, alpha, self.M)
        except KnotGasError as exc:
            raise ConfigError(f"invalid geometry: {exc}") from exc

    @property
    def chi(self) -> int:
        return self.statistics.chi

    @property
    def model(self) -> InteractionModel:
        return InteractionModel(self.coefficients)

    @property
    def T_grid(self) -> np.ndarray:
        if self.t_points == 1:
            return np.array([self.t_start])
        if self.t_spacing == "log":
            return np.geomspace(self.t_start, self.t_stop, self.t_points)
        return np.linspace(self.t_start, self.t_stop, self.t_points)


def parse_temps(spec: str) -> dict:
    """``start:stop:count[:log|linear]`` to RunConfig keyword arguments."""
    parts = spec.split(":")
    if len(parts) not in (3, 4):
        raise ConfigError(f"--temps expects start:stop:count[:log], got {spec!r}")
    try:
        out = dict(t_start=float(parts[0]), t_stop=float(parts[1]), t_points=int(parts[2]))
    except ValueError as exc:
        raise ConfigError(f"--temps: {exc}") from exc
    out["t_spacing"] = parts[3] if len(parts) == 4 else "linear"
    return out


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.replace(",", " ").split())


def _names(text: str) -> tuple[str, ...]:
    return tuple(x for x in text.replace(",", " ").split())


def _read_file(path: Path) -> dict:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    parser.optionxform = str  # keep R and M distinct from r and m
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc

    kw: dict = {}
    solver: dict = {}
    trunc: dict = {}

    def get(section, key, conv, dest=None, into=kw):
        if parser.has_option(section, key):
            raw = parser.get(section, key)
            try:
                into[dest or key] = conv(raw)
            except (ValueError, KeyError) as exc:
                raise ConfigError(f"[{section}] {key} = {raw!r}: {exc}") from exc

    get("geometry", "R", float)
    get("geometry", "d", float)
    get("geometry", "p", int)
    get("geometry", "M", float)
    get("geometry", "alpha", lambda s: tuple(int(x) for x in _names(s)), "alphas")
    get("state", "statistics", Statistics.parse)
    get("state", "mu", float)
    get("state", "N_target", float)
    if "N_target" in kw and "mu" not in kw:
        kw["mu"] = None
    get("temperatures", "start", float, "t_start")
    get("temperatures", "stop", float, "t_stop")
    get("temperatures", "points", int, "t_points")
    get("temperatures", "spacing", str.strip, "t_spacing")
    get("interaction", "coefficients", _floats)
    get("interaction", "pipeline", lambda s: () if s.strip() == "none" else _names(s), "pipelines")
    get("output", "directory", Path, "out_dir")
    get("output", "channels", _names)
    get("output", "levels", int)
    get("solver", "abs_tol", float, into=solver)
    get("solver", "rel_tol", float, into=solver)
    get("solver", "max_iter", int, into=solver)
    get("solver", "damping", float, into=solver)
    get("truncation", "tail_bound", float, into=trunc)
    get("truncation", "hard_cap", lambda s: int(float(s)), into=trunc)
    try:
        if solver:
            kw["settings"] = SolverSettings(**solver)
        if trunc:
            kw["truncation"] = TruncationPolicy(**trunc)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return kw


def load_config(path: str | Path | None = None, **overrides) -> RunConfig:
    """Defaults, then the file at ``path``, then non-None ``overrides``."""
    kw = _read_file(Path(path)) if path is not None else {}
    if overrides.get("mu") is not None and overrides.get("N_target") is not None:
        raise ConfigError("give exactly one of mu and N_target")
    kw.update({k: v for k, v in overrides.items() if v is not None})
    if overrides.get("mu") is not None:
        kw["N_target"] = None
    elif overrides.get("N_target") is not None:
        kw["mu"] = None
    try:
        return RunConfig(**kw)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def with_overrides(cfg: RunConfig, **kw) -> RunConfig:
    return replace(cfg, **kw)
