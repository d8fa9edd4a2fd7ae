"""Command-line front end.

    exstat volume --statistics fermion --two-j 2 --n 2 --samples 1000000 --seed 42
    exstat thermo --alpha 0,0.5 --n 5 --area 20 --beta 1
    exstat exclusion-limit --rho-alpha 0.5 --steps 10

Parameters may also come from a ``key = value`` file given with ``--config``;
flags override the file. Exit codes: 0 success, 2 invalid input, 3 numerical
failure (a JSON error object is written to stderr).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__, dynamics, exclusion, geometry, thermo, volume
from ._backend import BACKEND
from .errors import DensityAboveMax, ExstatError, ZeroVolume
from .model import FluxSector, StatisticsKind

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3


class ConfigError(ValueError):
    pass


# -- value parsers ----------------------------------------------------------


def _int(s):
    return int(str(s).strip())


def _float(s):
    return float(str(s).strip())


def _complex(s):
    return complex(str(s).strip().replace(" ", "").replace("i", "j"))


def _list(conv):
    def parse(s):
        if isinstance(s, (list, tuple)):
            return [conv(x) for x in s]
        parts = [p for p in str(s).split(",") if p.strip()]
        if not parts:
            raise ValueError("empty list")
        return [conv(p) for p in parts]

    parse.__name__ = f"list of {conv.__name__.lstrip('_')}"
    return parse


def _choice(*options):
    def parse(s):
        s = str(s).strip().lower()
        if s not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return s

    parse.__name__ = "|".join(options)
    return parse


@dataclass
class Param:
    name: str
    conv: object
    default: object
    help: str


COMMON = [
    Param("seed", _int, 0, "64-bit RNG seed"),
    Param("workers", _int, None, "worker threads for Monte Carlo (default: $EXSTAT_THREADS or 1)"),
    Param("format", _choice("json", "csv"), None, "output format"),
    Param("output", str, None, "output file (default: stdout)"),
]

STAT = Param("statistics", _choice("boson", "fermion"), "fermion", "particle statistics")
TWO_J = Param("two_j", _int, 2, "number of flux quanta 2j")
ZS = Param("z", _list(_complex), [0j], "comma-separated stereographic coordinates, e.g. 0.1+0.2j,-0.5j")

COMMANDS = {
    "geometry": dict(
        help="Kahler potential, Berry connection and metric at one configuration",
        formats=("json",),
        params=[STAT, TWO_J, ZS, Param("step", _float, geometry.DEFAULT_FD_STEP, "finite-difference step")],
        columns="JSON only: kahler_potential_hbar, berry_connection_hbar, metric_analytic_hbar, "
        "metric_finite_difference_hbar, liouville_density_hbar_pow_N (complex numbers as [re, im])",
    ),
    "volume": dict(
        help="closed-form phase-space volumes and Monte Carlo checks",
        formats=("csv", "json"),
        params=[
            Param("statistics", _choice("boson", "fermion", "anyon", "exclusion"), "fermion", "particle statistics"),
            Param("nu", _float, None, "anyon statistics parameter"),
            Param("g", _float, None, "exclusion statistics parameter"),
            TWO_J,
            Param("area", _float, None, "single-particle area in units of h (default 2j)"),
            Param("n", _list(_int), [2], "particle numbers"),
            Param("samples", _int, 0, "Monte Carlo samples (0: closed form only)"),
        ],
        columns="statistics, n, two_j, area_h, alpha_h, closed_form_volume_h_pow_N, "
        "mc_mean_h_pow_N, mc_std_error_h_pow_N, sigma_deviation, samples",
    ),
    "thermo": dict(
        help="partition function, entropies and pressure over (N, A, alpha, beta) grids",
        formats=("csv", "json"),
        params=[
            Param("n", _list(_int), [2], "particle numbers"),
            Param("area", _list(_float), [4.0], "single-particle areas in units of h"),
            Param("alpha", _list(_float), [0.0], "statistics parameters in units of h"),
            Param("beta", _list(_float), [1.0], "inverse temperatures"),
            Param("energy_per_particle", _float, 0.0, "energy per particle"),
        ],
        columns="n, area_h, alpha_h, beta, rho_per_h, alpha_rho, log_partition_function, "
        "entropy_closed, entropy_exact, beta_pressure_per_h, beta_pressure_area_over_n, saturated "
        "(empty cells where a quantity is undefined)",
    ),
    "exclusion-limit": dict(
        help="convergence of exclusion entropy to its classical double-scaling limit",
        formats=("csv", "json"),
        params=[
            Param("rho_alpha", _float, 0.5, "alpha * rho"),
            Param("rho", _float, 1.0, "phase-space density"),
            Param("steps", _int, 10, "number of halvings of h"),
            Param("h0", _float, None, "initial Planck cell (default 0.1 / rho)"),
            Param("space_dim", _int, 1, "phase-space dimension parameter"),
        ],
        columns="step, h, exclusion_entropy, classical_entropy, relative_gap",
    ),
    "occupation": dict(
        help="equilibrium exclusion-statistics occupations",
        formats=("csv", "json"),
        params=[
            Param("g", _float, 1.0, "exclusion statistics parameter"),
            Param("beta", _float, 1.0, "inverse temperature"),
            Param("mu", _float, 0.0, "chemical potential"),
            Param("energies", _list(_float), [0.0, 0.5, 1.0], "level energies"),
            Param("degeneracies", _list(_float), None, "level degeneracies (default 1)"),
        ],
        columns="level, degeneracy, energy, beta_energy_minus_mu, occupation",
    ),
    "dynamics": dict(
        help="integrate the equations of motion on the constrained manifold",
        formats=("csv", "json"),
        params=[
            STAT,
            TWO_J,
            Param("z", _list(_complex), [0.4 + 0.3j], ZS.help),
            Param("potential", _choice("zero", "latitude", "pairwise-power", "pairwise-gaussian"), "latitude", "potential"),
            Param("lam", _float, 1.0, "latitude coupling lambda"),
            Param("strength", _float, 1.0, "pairwise strength"),
            Param("exponent", _float, 1.0, "pairwise power exponent"),
            Param("width", _float, 1.0, "pairwise gaussian width"),
            Param("t_end", _float, 1.0, "final time"),
            Param("tolerance", _float, 1e-10, "integrator tolerance"),
            Param("stride", _int, 100, "number of output intervals"),
        ],
        columns="t, x_1, y_1, ..., x_N, y_N, potential_energy",
    ),
}


# -- argument handling ------------------------------------------------------


def read_config_file(path: str) -> dict[str, str]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = line.split("=", 1)
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="exstat", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"exstat {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, info in COMMANDS.items():
        p = sub.add_parser(
            name,
            help=info["help"],
            description=info["help"],
            epilog=f"output columns: {info['columns']}",
        )
        p.add_argument("--config", default=None, help="plain-text key = value file")
        for prm in info["params"] + COMMON:
            p.add_argument(
                "--" + prm.name.replace("_", "-"),
                dest=prm.name,
                default=None,
                help=f"{prm.help} (default: {_show(prm.default)})",
            )
    return parser


def _show(v):
    if isinstance(v, list):
        return ",".join(_show(x) for x in v)
    if isinstance(v, complex):
        return _complex_str(v)
    return str(v)


def _complex_str(c: complex) -> str:
    return f"{c.real!r}{c.imag:+}j"


def resolve(command: str, file_values: dict, flag_values: dict) -> dict:
    info = COMMANDS[command]
    params = {p.name: p for p in info["params"] + COMMON}
    for key in file_values:
        if key not in params:
            raise ConfigError(f"unknown config key {key!r} for command {command!r}")
    cfg = {}
    for name, prm in params.items():
        raw = flag_values.get(name)
        if raw is None:
            raw = file_values.get(name)
        if raw is None:
            cfg[name] = prm.default
            continue
        try:
            cfg[name] = prm.conv(raw) if prm.conv is not str else raw
        except ValueError as exc:
            raise ConfigError(f"bad value for {name!r}: {raw!r} ({exc})") from None
    if cfg["workers"] is None:
        env = os.environ.get("EXSTAT_THREADS")
        cfg["workers"] = _int(env) if env else 1
    if cfg["workers"] < 1:
        raise ConfigError("workers must be >= 1")
    if cfg["format"] is None:
        cfg["format"] = info["formats"][0]
    if cfg["format"] not in info["formats"]:
        raise ConfigError(f"{command} supports format(s): {', '.join(info['formats'])}")
    return cfg


# -- commands ---------------------------------------------------------------


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def run_geometry(cfg):
    flux = FluxSector(cfg["two_j"])
    kind = StatisticsKind.parse(cfg["statistics"])
    z = np.array(cfg["z"], dtype=np.complex128)
    Ga = geometry.metric(z, flux, kind)
    Gf = geometry.metric(z, flux, kind, geometry.FINITE_DIFFERENCE, cfg["step"])
    return {
        "n": int(z.size),
        "kahler_potential_hbar": geometry.kahler_potential(z, flux, kind),
        "berry_connection_hbar": geometry.berry_connection(z, flux, kind),
        "metric_analytic_hbar": Ga.g_matrix,
        "metric_finite_difference_hbar": Gf.g_matrix,
        "liouville_density_hbar_pow_N": Ga.liouville_density(),
    }


def run_volume(cfg):
    stat = cfg["statistics"]
    param = {"anyon": cfg["nu"], "exclusion": cfg["g"]}.get(stat)
    kind = StatisticsKind.parse(stat, param)
    flux = FluxSector(cfg["two_j"])
    area = cfg["area"] if cfg["area"] is not None else geometry.single_particle_area(flux)
    rows = []
    for n in cfg["n"]:
        ref = volume.closed_form_volume_with_area(n, area, kind.alpha())
        row = {
            "statistics": str(kind),
            "n": n,
            "two_j": flux.two_j,
            "area_h": area,
            "alpha_h": kind.alpha(),
            "closed_form_volume_h_pow_N": ref,
            "mc_mean_h_pow_N": None,
            "mc_std_error_h_pow_N": None,
            "sigma_deviation": None,
            "samples": cfg["samples"],
        }
        if cfg["samples"]:
            if cfg["area"] is not None and cfg["area"] != geometry.single_particle_area(flux):
                raise ConfigError("Monte Carlo volumes use the sphere area; drop --area")
            est = volume.mc_volume(n, flux, kind, cfg["samples"], cfg["seed"], cfg["workers"])
            row.update(
                mc_mean_h_pow_N=est.mean,
                mc_std_error_h_pow_N=est.std_error,
                sigma_deviation=est.sigma_deviation(ref),
            )
        rows.append(row)
    return rows


def _maybe(fn, *args):
    try:
        return fn(*args)
    except (DensityAboveMax, ZeroVolume):
        return None


def run_thermo(cfg):
    rows = []
    for n in cfg["n"]:
        for area in cfg["area"]:
            for alpha in cfg["alpha"]:
                for beta in cfg["beta"]:
                    inp = thermo.ThermoInput(n, area, alpha, beta, cfg["energy_per_particle"])
                    bp = _maybe(thermo.equation_of_state, inp.rho, alpha, beta)
                    rows.append(
                        {
                            "n": n,
                            "area_h": area,
                            "alpha_h": alpha,
                            "beta": beta,
                            "rho_per_h": inp.rho,
                            "alpha_rho": alpha * inp.rho,
                            "log_partition_function": _maybe(thermo.log_partition_function, inp),
                            "entropy_closed": _maybe(thermo.entropy_closed, inp),
                            "entropy_exact": _maybe(thermo.entropy_exact, inp),
                            "beta_pressure_per_h": None if bp is None else beta * bp,
                            "beta_pressure_area_over_n": None if bp is None else beta * bp / inp.rho,
                            "saturated": thermo.volume(inp) == 0.0,
                        }
                    )
    return rows


def run_exclusion_limit(cfg):
    rho = cfg["rho"]
    if not rho > 0:
        raise ConfigError("rho must be positive")
    if cfg["steps"] < 0:
        raise ConfigError("steps must be >= 0")
    alpha = cfg["rho_alpha"] / rho
    h0 = cfg["h0"] if cfg["h0"] is not None else 0.1 / rho
    pts = exclusion.limit_convergence_study(
        rho, alpha, exclusion.halving_sequence(h0, cfg["steps"]), cfg["space_dim"]
    )
    return [
        {
            "step": k,
            "h": p.h,
            "exclusion_entropy": p.exclusion_entropy,
            "classical_entropy": p.classical_entropy,
            "relative_gap": p.relative_gap,
        }
        for k, p in enumerate(pts)
    ]


def run_occupation(cfg):
    energies = cfg["energies"]
    degs = cfg["degeneracies"] or [1.0] * len(energies)
    if len(degs) != len(energies):
        raise ConfigError("degeneracies and energies differ in length")
    occ = exclusion.equilibrium_occupation(cfg["g"], cfg["beta"], cfg["mu"], list(zip(degs, energies)))
    return [
        {
            "level": k,
            "degeneracy": d,
            "energy": e,
            "beta_energy_minus_mu": cfg["beta"] * (e - cfg["mu"]),
            "occupation": float(n),
        }
        for k, (d, e, n) in enumerate(zip(degs, energies, occ))
    ]


def _potential(cfg):
    kind = cfg["potential"]
    if kind == "zero":
        return dynamics.Zero()
    if kind == "latitude":
        return dynamics.Latitude(cfg["lam"])
    if kind == "pairwise-power":
        return dynamics.PairwiseRadial("power", {"strength": cfg["strength"], "exponent": cfg["exponent"]})
    return dynamics.PairwiseRadial("gaussian", {"strength": cfg["strength"], "width": cfg["width"]})


def run_dynamics(cfg):
    if cfg["stride"] < 1:
        raise ConfigError("stride must be >= 1")
    flux = FluxSector(cfg["two_j"])
    kind = StatisticsKind.parse(cfg["statistics"])
    t_eval = np.linspace(0.0, cfg["t_end"], cfg["stride"] + 1)
    traj = dynamics.integrate(cfg["z"], flux, kind, _potential(cfg), cfg["t_end"], cfg["tolerance"], t_eval)
    rows = []
    for t, z, V in zip(traj.times, traj.states, traj.energies):
        row = {"t": float(t)}
        for i, zi in enumerate(z, 1):
            row[f"x_{i}"] = float(zi.real)
            row[f"y_{i}"] = float(zi.imag)
        row["potential_energy"] = float(V)
        rows.append(row)
    return rows


RUNNERS = {
    "geometry": run_geometry,
    "volume": run_volume,
    "thermo": run_thermo,
    "exclusion-limit": run_exclusion_limit,
    "occupation": run_occupation,
    "dynamics": run_dynamics,
}


# -- output -----------------------------------------------------------------


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ""
    return str(v)


def render(command: str, cfg: dict, results) -> str:
    shown = {k: _jsonable(v) for k, v in sorted(cfg.items()) if k != "output"}
    provenance = {
        "library": "exstat",
        "version": __version__,
        "backend": BACKEND,
        "seed": cfg["seed"],
        "workers": cfg["workers"],
        "units": "volumes in h^N, entropies dimensionless, areas and alpha in units of h, hbar = 1",
    }
    if cfg["format"] == "json":
        doc = {
            "command": command,
            "config": shown,
            "results": _jsonable(results),
            "provenance": provenance,
        }
        return json.dumps(doc, indent=2, sort_keys=False, allow_nan=False) + "\n"
    buf = io.StringIO()
    buf.write(f"# exstat {__version__} command={command} backend={BACKEND}\n")
    buf.write("# config: " + json.dumps(shown, sort_keys=True, separators=(",", ":")) + "\n")
    writer = csv.writer(buf, lineterminator="\r\n")
    if results:
        header = list(results[0].keys())
        writer.writerow(header)
        for row in results:
            writer.writerow([_cell(row[k]) for k in header])
    return buf.getvalue()


def _error(name: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": name, "message": message}) + "\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    command = args.command
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    try:
        file_values = read_config_file(args.config) if args.config else {}
        cfg = resolve(command, file_values, flags)
        results = RUNNERS[command](cfg)
        text = render(command, cfg, results)
    except ExstatError as exc:
        return _error(exc.name, str(exc), EXIT_NUMERICAL)
    except ConfigError as exc:
        return _error("ConfigError", str(exc), EXIT_INVALID)
    except (ValueError, OSError) as exc:
        return _error(type(exc).__name__, str(exc), EXIT_INVALID)
    if cfg["output"]:
        with open(cfg["output"], "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
