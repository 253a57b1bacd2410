"""``knotgas`` command line: spectrum | sweep | compare | fermi.

All output is CSV (UTF-8, one header row, 17 significant digits). Rows are
ordered by grid index, never by completion order, so repeated runs with the
same configuration are byte-identical regardless of KNOTGAS_THREADS.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import has_interior_minimum, pairwise_crossings
from .config import CHANNELS, RunConfig, load_config, parse_temps
from .ensemble import ThermoPoint, CHANNEL_EVALUATORS, map_points
from .errors import ConfigError, ConvergenceError, KnotGasError
from .meanfield import InteractionModel, evaluate_interacting, fermi_level_solve
from .spectra import Statistics

log = logging.getLogger("knotgas")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_PARTIAL = 0, 1, 2, 3


def fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "%.17g" % float(x)


def write_csv(path: Path, header, rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def _alpha_tag(alpha: int) -> str:
    return f"alpha{alpha}"


@dataclass
class Outcome:
    """Files written plus point failures, mapped to an exit code."""

    files: list[Path] = field(default_factory=list)
    attempted: int = 0
    failed: int = 0

    def absorb(self, errors, total, label):
        self.attempted += total
        self.failed += len(errors)
        for i, exc in errors:
            log.warning("%s: grid index %d failed: %s", label, i, exc)

    @property
    def code(self) -> int:
        if self.failed == 0:
            return EXIT_OK
        return EXIT_NUMERIC if self.failed == self.attempted else EXIT_PARTIAL


def cmd_spectrum(cfg: RunConfig) -> Outcome:
    """Write the level ladder E_n for every alpha."""
    rows = []
    for a in cfg.alphas:
        geom = cfg.geometry(a)
        rows += [(n, a, geom.level(n)) for n in range(cfg.levels + 1)]
    out = Outcome()
    out.files.append(write_csv(cfg.out_dir / "spectrum.csv", ["n", "alpha", "energy_eV"], rows))
    return out


SWEEP_HEADER = ["T", "Phi", "U", "S", "C", "N", "varN", "channel"]


def _require_mu(cfg: RunConfig, cmd: str):
    if cfg.mu is None:
        raise ConfigError(f"{cmd} needs mu, not N_target")


def cmd_sweep(cfg: RunConfig) -> Outcome:
    """Ideal-gas temperature sweep per alpha and channel, plus a feature summary."""
    _require_mu(cfg, "sweep")
    out = Outcome()
    T = cfg.T_grid
    stats = cfg.statistics.name.lower()
    direct_U, direct_N = {}, {}
    for a in cfg.alphas:
        geom = cfg.geometry(a)
        rows = []
        for channel in cfg.channels:
            ev = CHANNEL_EVALUATORS[channel]
            results, errors = map_points(lambda t: ev(geom, ThermoPoint(t, cfg.mu), cfg.chi, cfg.truncation), T)
            out.absorb(errors, len(T), f"sweep {stats} alpha={a} {channel}")
            for q in results:
                if q is not None:
                    rows.append((q.T, q.grand_potential, q.internal_energy, q.entropy, q.heat_capacity,
                                 q.particle_number, q.number_variance, channel))
            if channel == "direct":
                direct_U[a] = np.array([np.nan if q is None else q.internal_energy for q in results])
                direct_N[a] = np.array([np.nan if q is None else q.particle_number for q in results])
        out.files.append(write_csv(cfg.out_dir / f"sweep_{stats}_{_alpha_tag(a)}.csv", SWEEP_HEADER, rows))
    out.files.append(write_csv(cfg.out_dir / f"sweep_{stats}_summary.csv",
                               ["feature", "alpha_a", "alpha_b", "T"], _summary_rows(T, direct_U, direct_N)))
    return out


def _summary_rows(T, U: dict, N: dict):
    rows = []
    for (a, b), xs in pairwise_crossings(T, U).items():
        rows += [("inversion_point", a, b, x) for x in xs]
    for a, n in N.items():
        if has_interior_minimum(n):
            rows.append(("N_minimum", a, a, T[int(np.nanargmin(n))]))
    return rows


COMPARE_QUANTITIES = [
    ("Phi", "grand_potential", "grand_potential"),
    ("U", "internal_energy", "internal_energy"),
    ("U_mf", "internal_energy", "internal_energy_mf"),
    ("S", "entropy", "entropy"),
    ("C", "heat_capacity", "heat_capacity"),
    ("C_mf", "heat_capacity", "heat_capacity_mf"),
    ("N", "particle_number", "particle_number"),
    ("varN", "number_variance", "number_variance"),
]


def compare_header():
    cols = ["T", "pipeline"]
    for name, _, _ in COMPARE_QUANTITIES:
        cols += [f"{name}_ideal", f"{name}_int", f"d{name}"]
    return cols + ["n_bar", "mu_eff", "residual"]


def cmd_compare(cfg: RunConfig) -> Outcome:
    """Ideal versus mean-field sweep on a shared grid, with deltas."""
    _require_mu(cfg, "compare")
    if not cfg.pipelines:
        raise ConfigError("compare needs an interaction pipeline (selfconsistent or linear), got none")
    out = Outcome()
    T = cfg.T_grid
    stats = cfg.statistics.name.lower()
    model = cfg.model
    for a in cfg.alphas:
        geom = cfg.geometry(a)
        ideal, errors = map_points(lambda t: CHANNEL_EVALUATORS["direct"](geom, ThermoPoint(t, cfg.mu), cfg.chi,
                                                                     cfg.truncation), T)
        out.absorb(errors, len(T), f"compare {stats} alpha={a} ideal")
        rows = []
        for pipeline in cfg.pipelines:
            inter, errors = map_points(
                lambda t: _checked(evaluate_interacting(geom, ThermoPoint(t, cfg.mu), model, cfg.chi, cfg.settings,
                                                        pipeline, cfg.truncation), cfg, pipeline), T)
            out.absorb(errors, len(T), f"compare {stats} alpha={a} {pipeline}")
            for qi, qm in zip(ideal, inter):
                if qi is None or qm is None:
                    continue
                row = [qi.T, pipeline]
                for _, ik, mk in COMPARE_QUANTITIES:
                    x, y = getattr(qi, ik), getattr(qm, mk)
                    row += [x, y, y - x]
                rows.append(row + [qm.n_bar, qm.mu_eff, qm.residual])
        out.files.append(write_csv(cfg.out_dir / f"compare_{stats}_{_alpha_tag(a)}.csv", compare_header(), rows))
    return out


def _checked(q, cfg: RunConfig, pipeline: str):
    if pipeline == "selfconsistent" and not q.residual <= cfg.settings.abs_tol:
        raise ConvergenceError(f"mean-field residual {q.residual:g} above tolerance at T={q.T:g}",
                               residual=q.residual, last=q.n_bar)
    return q


def cmd_fermi(cfg: RunConfig) -> Outcome:
    """Fermi level mu_0(T) at fixed particle number, ideal and interacting."""
    if cfg.N_target is None:
        raise ConfigError("fermi needs N_target (config [state] N_target or --n-target)")
    if cfg.statistics is not Statistics.FERMION:
        raise ConfigError("fermi solves the Fermi level and needs statistics = fermion")
    out = Outcome()
    T = cfg.T_grid
    pipelines = cfg.pipelines or ("none",)
    model = cfg.model if cfg.pipelines else InteractionModel.zero()
    rows = []
    for a in cfg.alphas:
        geom = cfg.geometry(a)
        ideal, errors = map_points(
            lambda t: fermi_level_solve(geom, t, cfg.N_target, InteractionModel.zero(), cfg.settings,
                                        trunc=cfg.truncation), T)
        out.absorb(errors, len(T), f"fermi alpha={a} ideal")
        for pipeline in pipelines:
            inter, errors = map_points(
                lambda t: fermi_level_solve(geom, t, cfg.N_target, model, cfg.settings,
                                            "selfconsistent" if pipeline == "none" else pipeline,
                                            cfg.truncation), T)
            out.absorb(errors, len(T), f"fermi alpha={a} {pipeline}")
            rows += [(t, a, pipeline, m0, m1) for t, m0, m1 in zip(T, ideal, inter)
                     if m0 is not None and m1 is not None]
    out.files.append(write_csv(cfg.out_dir / "fermi.csv", ["T", "alpha", "pipeline", "mu0_ideal", "mu0_interacting"],
                               rows))
    return out


COMMANDS = {"spectrum": cmd_spectrum, "sweep": cmd_sweep, "compare": cmd_compare, "fermi": cmd_fermi}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="knotgas", description="Fermi and Bose gas thermodynamics on torus knots and rings.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="INI configuration file")
    common.add_argument("--alpha", type=int, action="append", help="winding number (repeatable)")
    common.add_argument("--mu", type=float, help="chemical potential in eV")
    common.add_argument("--n-target", dest="N_target", type=float, help="particle number for the fermi command")
    common.add_argument("--temps", help="temperature grid start:stop:count[:log]")
    common.add_argument("--stats", choices=["fermion", "boson"], help="particle statistics")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--channel", action="append", choices=list(CHANNELS),
                        help="sweep output channel (repeatable; default all)")
    common.add_argument("--pipeline", action="append", choices=["selfconsistent", "linear"],
                        help="mean-field pipeline (repeatable)")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=fn.__doc__ or name)
    return ap


def config_from_args(args) -> RunConfig:
    overrides = dict(
        alphas=tuple(args.alpha) if args.alpha else None,
        mu=args.mu,
        N_target=args.N_target,
        statistics=Statistics.parse(args.stats) if args.stats else None,
        out_dir=args.out,
        channels=tuple(args.channel) if args.channel else None,
        pipelines=tuple(args.pipeline) if args.pipeline else None,
    )
    if args.temps:
        overrides.update(parse_temps(args.temps))
    return load_config(args.config, **overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="knotgas: %(levelname)s: %(message)s", stream=sys.stderr)
    try:
        cfg = config_from_args(args)
        outcome = COMMANDS[args.command](cfg)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except KnotGasError as exc:
        log.error("%s", exc)
        return EXIT_NUMERIC
    except OSError as exc:
        log.error("cannot write %s: %s", exc.filename, exc.strerror)
        return EXIT_CONFIG
    for path in outcome.files:
        log.info("wrote %s", path)
    return outcome.code


if __name__ == "__main__":
    sys.exit(main())
