"""Command line front end.

Subcommands: channel, teleport, parity-sweep, efficiency-sweep, homodyne,
lattice-map. Every parameter can come from an INI-style config file
(section per subcommand, ``--config FILE``) or a command line flag; flags
win. Outputs land in ``--out`` as CSV/JSON plus a run manifest; reruns with
the same config and seed are byte-identical, and ``--jobs N`` sweeps give
the same files as serial runs.

Exit codes: 0 ok, 2 config error, 3 physics precondition violated,
4 numeric failure.
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .channel import channel_entanglement, channel_family_index, channel_family_overlaps, generate_channel
from .corrections import (
    AUX_KINDS,
    AuxiliaryPrep,
    p_even_analytic,
    p_even_monte_carlo,
    total_efficiency,
)
from .dynamics import CrossSpeciesParams, JosephsonParams, KerrParams
from .errors import ConfigError, NumericError, PreconditionError
from .fock import CoherentSpec, FockCutoff, SuperpositionSpec, prepare_cat_superposition, state_to_dict
from .homodyne import initial_schwinger, perturbative_sx, simulate_sx
from .lattice import LatticeParams, density_map
from .protocol import ProtocolConfig, run_protocol
from .rng import substream
from .serialize import build_manifest, gnuplot_stub, write_json, write_table

PARITY_CAVEAT = (
    "the collision is diagonal in the auxiliary number basis, so p_even is the "
    "auxiliary's initial even-count mass: number states give 0 or 1, squeezed "
    "vacuum gives exactly 1; smooth sub-unity curves for those families are not "
    "reproducible under this model"
)


def _parse_complex(text: str) -> complex:
    return complex(text.replace(" ", ""))


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass(frozen=True)
class Option:
    name: str
    parse: object
    default: object
    help: str
    choices: tuple = ()


COMMON = (
    Option("out", str, "triwell-out", "output directory"),
    Option("format", str, "csv", "table format", ("csv", "json")),
    Option("seed", int, 0, "run seed"),
    Option("jobs", int, 1, "worker processes for sweep grids"),
    Option("gnuplot", _parse_bool, False, "also write gnuplot script stubs"),
)

SCHEMAS = {
    "channel": (
        Option("alpha", _parse_complex, 2.0 + 0j, "mode-2 coherent amplitude"),
        Option("beta", _parse_complex, 2.0 + 0j, "mode-3 coherent amplitude"),
        Option("kappa", float, 1.0, "self-collision rate"),
        Option("e0", float, 1.0, "well frequency E0/hbar"),
        Option("cutoff", int, 26, "per-mode occupation cutoff"),
    ),
    "teleport": (
        Option("a-weight", _parse_complex, 1.0 + 0j, "target weight A"),
        Option("b-weight", _parse_complex, 1.0 + 0j, "target weight B"),
        Option("gamma", _parse_complex, 2.0 + 0j, "target amplitude"),
        Option("alpha", _parse_complex, 2.0 + 0j, "channel mode-2 amplitude"),
        Option("beta", _parse_complex, 2.0j, "channel mode-3 amplitude"),
        Option("kappa", float, 1.0, "self-collision rate"),
        Option("e0", float, 1.0, "well frequency E0/hbar"),
        Option("omega", float, 1000.0, "tunnelling frequency (homodyne backend)"),
        Option("lam", float, None, "two-species collision rate (default kappa/2)"),
        Option("cutoff", int, 26, "per-mode occupation cutoff"),
        Option("backend", str, "ideal", "measurement backend", ("ideal", "homodyne")),
        Option("p-d", float, 1.0, "displacement success probability"),
        Option("trials", int, 1000, "number of trials"),
        Option("aux-kind", str, "number", "auxiliary preparation", AUX_KINDS),
        Option("aux-parameter", float, 0.0, "auxiliary parameter (n, mean, or r)"),
        Option("reference-magnitude", float, None, "homodyne reference amplitude"),
    ),
    "parity-sweep": (
        Option("family", str, "all", "auxiliary family", AUX_KINDS + ("all",)),
        Option("param-min", float, 0.0, "grid start"),
        Option("param-max", float, 5.0, "grid end"),
        Option("points", int, 11, "grid points"),
        Option("trials", int, 20000, "Monte-Carlo trials per point"),
        Option("kappa", float, 1.0, "self-collision rate"),
        Option("beta", _parse_complex, 2.0j, "central-mode amplitude for sampling"),
        Option("cutoff", int, 40, "per-mode occupation cutoff"),
    ),
    "efficiency-sweep": (
        Option("r-min", float, 0.0, "squeezing grid start"),
        Option("r-max", float, 2.0, "squeezing grid end"),
        Option("r-points", int, 11, "squeezing grid points"),
        Option("pd-min", float, 0.0, "displacement-success grid start"),
        Option("pd-max", float, 1.0, "displacement-success grid end"),
        Option("pd-points", int, 11, "displacement-success grid points"),
    ),
    "homodyne": (
        Option("gamma", _parse_complex, 1.0 + 0j, "signal coherent amplitude"),
        Option("beta", _parse_complex, 2.0j, "reference amplitude |b| e^{i theta}"),
        Option("omega", float, 1.0, "tunnelling frequency"),
        Option("kappa", float, 0.0, "self-collision rate"),
        Option("e0", float, 0.0, "well frequency E0/hbar"),
        Option("t-max", float, None, "time-series end (default pi/omega)"),
        Option("steps", int, 41, "time-series samples"),
        Option("cutoff", int, 24, "per-mode occupation cutoff"),
    ),
    "lattice-map": (
        Option("u1", float, 1.0, "single-beam light shift"),
        Option("k-l", float, 1.0, "lattice wavenumber"),
        Option("theta-min", float, math.pi / 2, "angle grid start"),
        Option("theta-max", float, 5 * math.pi / 2, "angle grid end"),
        Option("theta-points", int, 101, "angle grid points"),
        Option("zprime-min", float, 0.0, "z' = 2 k_L z grid start"),
        Option("zprime-max", float, 4 * math.pi, "z' grid end"),
        Option("zprime-points", int, 101, "z' grid points"),
        Option("b-perp", float, 0.1, "transverse field"),
        Option("b-parallel", float, 0.0, "longitudinal field"),
        Option("gyro", float, 1.0, "gyromagnetic ratio"),
    ),
}


def _flag(name: str) -> str:
    return "--" + name


def _dest(name: str) -> str:
    return name.replace("-", "_")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="triwell",
        description="three-well condensate teleportation laboratory",
    )
    parser.add_argument("--version", action="version", version=f"triwell {__version__}")
    subparsers = parser.add_subparsers(dest="subcommand", required=True)
    for name, schema in SCHEMAS.items():
        sub = subparsers.add_parser(name, help=f"run the {name} experiment")
        sub.add_argument("--config", type=str, default=None,
                         help="INI config file with a [%s] section" % name)
        for opt in schema + COMMON:
            kwargs = {"type": str, "default": None, "help": opt.help}
            if opt.choices:
                kwargs["choices"] = opt.choices
            sub.add_argument(_flag(opt.name), dest=_dest(opt.name), **kwargs)
    return parser


def _load_config_section(path: str, section: str) -> dict:
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file {path!r} not found or unreadable")
    if not parser.has_section(section):
        raise ConfigError(f"config file {path!r} has no [{section}] section")
    return {key.replace("_", "-"): value for key, value in parser.items(section)}


def resolve_options(subcommand: str, args: argparse.Namespace) -> dict:
    """Merge defaults, config file, and flags (flags win); validate keys."""
    schema = {opt.name: opt for opt in SCHEMAS[subcommand] + COMMON}
    values = {name: opt.default for name, opt in schema.items()}
    if args.config:
        section = _load_config_section(args.config, subcommand)
        unknown = sorted(set(section) - set(schema))
        if unknown:
            raise ConfigError(f"unknown config keys {unknown} in [{subcommand}]")
        for key, raw in section.items():
            values[key] = _parse_with(schema[key], raw)
    for name, opt in schema.items():
        raw = getattr(args, _dest(name))
        if raw is not None:
            values[name] = _parse_with(opt, raw)
    return values


def _parse_with(opt: Option, raw: str):
    try:
        value = opt.parse(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {opt.name!r}: {raw!r} ({exc})") from exc
    if opt.choices and value not in opt.choices:
        raise ConfigError(f"{opt.name!r} must be one of {opt.choices}, got {value!r}")
    return value


_EXECUTION_KEYS = ("out", "jobs")  # where/how to run; not part of the result


def _config_echo(values: dict) -> dict:
    echo = {}
    for key, value in sorted(values.items()):
        if key in _EXECUTION_KEYS:
            continue
        if isinstance(value, complex):
            echo[key] = [value.real, value.imag]
        else:
            echo[key] = value
    return echo


def _versions() -> dict:
    import scipy

    return {"triwell": __version__, "numpy": np.__version__, "scipy": scipy.__version__}


def _pmap(fn, items, jobs: int):
    """Order-preserving map, optionally over a process pool."""
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _emit_manifest(outdir: Path, subcommand: str, values: dict, files: list,
                   caveats=(), summary=None) -> Path:
    manifest = build_manifest(
        subcommand, _config_echo(values), [Path(f).name for f in files],
        _versions(), caveats, summary,
    )
    return write_json(outdir / "manifest.json", manifest)


# ---------------------------------------------------------------------------
# subcommands


def cmd_channel(values: dict, outdir: Path) -> list:
    cutoff = FockCutoff(values["cutoff"])
    kp = KerrParams(values["e0"], values["kappa"])
    alpha = CoherentSpec(values["alpha"])
    beta = CoherentSpec(values["beta"])
    j = channel_family_index(kp)
    state = generate_channel(alpha, beta, kp, cutoff)
    gram = channel_family_overlaps(alpha, beta, kp, cutoff)
    files = [write_json(outdir / "channel_state.json", state_to_dict(state))]
    rows = [
        (row, col, float(gram[row, col].real), float(gram[row, col].imag),
         float(abs(gram[row, col])))
        for row in range(4) for col in range(4)
    ]
    files.append(write_table(
        outdir, "gram", values["format"],
        ("j_row", "j_col", "re", "im", "magnitude"), rows,
        (f"channel family Gram matrix, alpha={values['alpha']}, beta={values['beta']}",),
    ))
    files.append(write_json(outdir / "entanglement.json", {
        "family_index": j,
        "entropy_bits": channel_entanglement(state),
        "leakage": state.leakage,
    }))
    return files


def cmd_teleport(values: dict, outdir: Path) -> tuple:
    kappa = values["kappa"]
    lam = values["lam"] if values["lam"] is not None else kappa / 2
    config = ProtocolConfig(
        target=SuperpositionSpec(values["a-weight"], values["b-weight"], values["gamma"]),
        alpha=CoherentSpec(values["alpha"]),
        beta=CoherentSpec(values["beta"]),
        kerr=KerrParams(values["e0"], kappa),
        josephson=JosephsonParams(values["omega"]),
        cross_species=CrossSpeciesParams(lam),
        cutoff=FockCutoff(values["cutoff"]),
        measurement_backend=values["backend"],
        p_d=values["p-d"],
        trials=values["trials"],
        seed=values["seed"],
        aux=AuxiliaryPrep(values["aux-kind"], values["aux-parameter"]),
        reference_magnitude=values["reference-magnitude"],
    )
    result = run_protocol(config)
    rows = [
        (i, rec.outcome.branch, rec.corrected, rec.fidelity, rec.outcome.aux_m,
         rec.p_d_success)
        for i, rec in enumerate(result.records)
    ]
    files = [write_table(
        outdir, "trials", values["format"],
        ("trial", "branch", "corrected", "fidelity", "aux_m", "p_d_draw"), rows,
        (f"teleportation trials, backend={values['backend']}",),
    )]
    return files, result.summary


def _parity_point(task: tuple):
    (family, parameter, kappa, cutoff_n, beta, trials, seed, index) = task
    aux = AuxiliaryPrep(family, parameter)
    cutoff = FockCutoff(cutoff_n)
    central = prepare_cat_superposition(SuperpositionSpec(1.0, 1.0, beta), cutoff)
    mc = p_even_monte_carlo(
        aux, central, CrossSpeciesParams(kappa / 2), KerrParams(1.5 * kappa, kappa),
        cutoff, trials, substream(seed, index),
    )
    return (family, parameter, p_even_analytic(aux), mc.p_even, mc.trials, mc.stderr)


def cmd_parity_sweep(values: dict, outdir: Path) -> list:
    families = AUX_KINDS if values["family"] == "all" else (values["family"],)
    grid = np.linspace(values["param-min"], values["param-max"], values["points"])
    tasks = []
    for family in families:
        for parameter in grid:
            tasks.append((
                family, float(parameter), values["kappa"], values["cutoff"],
                values["beta"], values["trials"], values["seed"], len(tasks),
            ))
    rows = _pmap(_parity_point, tasks, values["jobs"])
    files = [write_table(
        outdir, "parity", values["format"],
        ("family", "parameter", "p_even_analytic", "p_even_mc", "mc_trials",
         "mc_stderr"), rows,
        ("even-count probability by auxiliary family",),
    )]
    if values["gnuplot"]:
        files.append(gnuplot_stub(outdir / "parity.gp", "parity.csv",
                                  "P_even vs parameter", "2:3"))
    return files


def _efficiency_row(task: tuple):
    r, p_d = task
    point = total_efficiency(1.0, p_d)  # squeezed vacuum: p_even = 1 for every r
    return (r, p_d, point.p_even, point.p_total)


def cmd_efficiency_sweep(values: dict, outdir: Path) -> list:
    r_grid = np.linspace(values["r-min"], values["r-max"], values["r-points"])
    pd_grid = np.linspace(values["pd-min"], values["pd-max"], values["pd-points"])
    tasks = [(float(r), float(p)) for r in r_grid for p in pd_grid]
    rows = _pmap(_efficiency_row, tasks, values["jobs"])
    files = [write_table(
        outdir, "efficiency", values["format"],
        ("r", "p_d", "p_even", "p_total"), rows,
        ("total protocol efficiency, squeezed-vacuum auxiliary",),
    )]
    if values["gnuplot"]:
        files.append(gnuplot_stub(outdir / "efficiency.gp", "efficiency.csv",
                                  "P vs p_D", "2:4"))
    return files


def cmd_homodyne(values: dict, outdir: Path) -> list:
    cutoff = FockCutoff(values["cutoff"])
    jp = JosephsonParams(values["omega"])
    kp = KerrParams(values["e0"], values["kappa"])
    signal = prepare_cat_superposition(
        SuperpositionSpec(1.0, 0.0, values["gamma"]), cutoff
    )
    beta = CoherentSpec(values["beta"])
    t_max = values["t-max"] if values["t-max"] is not None else math.pi / values["omega"]
    t_grid = np.linspace(0.0, t_max, values["steps"])
    records = simulate_sx(signal, beta, jp, kp, t_grid)
    init = initial_schwinger(signal, beta)
    eps = values["kappa"] / values["omega"]
    total = records[0].normalization
    init = dataclasses.replace(init, epsilon=eps)
    rows = []
    for rec in records:
        pert = perturbative_sx(init, total, values["omega"], rec.t)
        rows.append((rec.t, rec.sx.real, rec.sx.imag, pert.real, pert.imag,
                     rec.raw_half_diff))
    files = [write_table(
        outdir, "sx_timeseries", values["format"],
        ("t", "sx_full_re", "sx_full_im", "sx_pert_re", "sx_pert_im",
         "raw_half_diff"), rows,
        (f"pseudo-spin S_x, epsilon={eps!r}",),
    )]
    if values["gnuplot"]:
        files.append(gnuplot_stub(outdir / "sx_timeseries.gp", "sx_timeseries.csv",
                                  "S_x(t)", "1:2"))
    return files


def _lattice_row_task(task: tuple):
    (theta, z_primes, u1, k_l, b_perp, b_parallel, gyro) = task
    params = LatticeParams(u1, theta, k_l, b_parallel, b_perp, gyro)
    grid = density_map(params, [theta], z_primes)
    rows = []
    for col, zp in enumerate(z_primes):
        lower = float(grid.band_lower[0, col])
        upper = float(grid.band_upper[0, col])
        rows.append((theta, float(zp), lower, upper, upper - lower))
    return rows


def cmd_lattice_map(values: dict, outdir: Path) -> list:
    thetas = np.linspace(values["theta-min"], values["theta-max"],
                         values["theta-points"])
    z_primes = tuple(float(z) for z in np.linspace(
        values["zprime-min"], values["zprime-max"], values["zprime-points"]))
    tasks = [(float(th), z_primes, values["u1"], values["k-l"], values["b-perp"],
              values["b-parallel"], values["gyro"]) for th in thetas]
    blocks = _pmap(_lattice_row_task, tasks, values["jobs"])
    rows = [row for block in blocks for row in block]
    files = [write_table(
        outdir, "lattice_map", values["format"],
        ("theta", "z_prime", "band_lower", "band_upper", "gap"), rows,
        (f"adiabatic band energies, b_perp={values['b-perp']!r}",),
    )]
    if values["gnuplot"]:
        files.append(gnuplot_stub(outdir / "lattice_map.gp", "lattice_map.csv",
                                  "lower band", "1:2:3", style="image"))
    return files


HANDLERS = {
    "channel": cmd_channel,
    "teleport": cmd_teleport,
    "parity-sweep": cmd_parity_sweep,
    "efficiency-sweep": cmd_efficiency_sweep,
    "homodyne": cmd_homodyne,
    "lattice-map": cmd_lattice_map,
}

CAVEATS = {
    "parity-sweep": (PARITY_CAVEAT,),
    "efficiency-sweep": (PARITY_CAVEAT,),
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    started = time.perf_counter()
    try:
        values = resolve_options(args.subcommand, args)
        outdir = Path(values["out"])
        outdir.mkdir(parents=True, exist_ok=True)
        produced = HANDLERS[args.subcommand](values, outdir)
        summary = None
        if isinstance(produced, tuple):
            produced, summary = produced
        manifest = _emit_manifest(outdir, args.subcommand, values, produced,
                                  CAVEATS.get(args.subcommand, ()), summary)
        produced.append(manifest)
    except ConfigError as exc:
        print(f"triwell: config error: {exc}", file=sys.stderr)
        return 2
    except PreconditionError as exc:
        print(f"triwell: precondition violated: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"triwell: numeric failure: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"triwell: config error: {exc}", file=sys.stderr)
        return 2
    elapsed = time.perf_counter() - started
    print(f"triwell {args.subcommand}: wrote {len(produced)} file(s) to "
          f"{outdir} in {elapsed:.3f}s", file=sys.stderr)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
