"""Command-line front end.

Four subcommands map to the analysis products: ``noise`` (ambient and
sensor noise curves), ``optimize`` (bandwidth sweeps and optima),
``spectra`` (hybrid spectral densities with reference curves) and
``simulate`` (seeded shot-by-shot runs). Outputs are comma-separated
tables with self-describing headers plus a JSON run manifest; on failure
partial outputs are removed so a run directory is either complete or empty.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import os
import sys
import time
from dataclasses import replace

import numpy as np

from . import __version__
from .atom_interferometer import InterferometerConfig
from .fusion_sim import SimConfig, run_batch
from .hybrid_optimizer import HybridConfig, hybrid_spectrum, sweep_bandwidth
from .noise_models import (
    default_peterson_table_path,
    load_peterson_table,
    peterson_noise_psd,
)
from .omrr_model import OmrrConfig, readout_limited_accel_asd, thermal_accel_floor

__all__ = ["main", "entry_point", "ConfigError", "load_config", "resolve"]


class ConfigError(ValueError):
    """Configuration file or parameter-schema violation."""


def _parse_bool(raw: str) -> bool:
    value = raw.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _parse_float_list(raw: str) -> tuple[float, ...]:
    items = [s for s in (p.strip() for p in raw.split(",")) if s]
    if not items:
        raise ValueError("empty list")
    return tuple(float(s) for s in items)


# section -> option -> (parser, default). The shipped default configuration
# mirrors the reference design; any option may be overridden per file.
_SCHEMA: dict[str, dict[str, tuple]] = {
    "interferometer": {
        "t": (float, 0.05),
        "t_c": (float, 1.5),
        "n_atoms": (float, 1e7),
        "contrast": (float, 1.0),
        "offset": (float, 0.0),
        "tau_p": (float, 0.0),
        "wavelength": (float, 780.24e-9),
        "k_eff": (float, 0.0),  # 0 -> derive 4*pi/wavelength
        "g0": (float, 9.80665),
    },
    "omrr": {
        "f0": (float, 1015.0),
        "q": (float, 5e5),
        "mass": (float, 2e-3),
        "temperature": (float, 293.0),
        "sigma_x": (float, 1e-16),
        "loss_model": (str, "structural"),
    },
    "ambient": {
        "table": (str, "builtin"),
    },
    "hybrid": {
        "band_hz": (float, 1000.0),
        "n_max": (int, 2**20),
        "tau": (float, 1.0),
    },
    "noise": {
        "f_min_hz": (float, 0.01),
        "f_max_hz": (float, 2000.0),
        "points": (int, 400),
    },
    "optimize": {
        "sigma_x_list": (_parse_float_list, (1e-14, 1e-15, 1e-16)),
        "f0_min_hz": (float, 50.0),
        "f0_max_hz": (float, 2000.0),
        "grid_points": (int, 96),
        "workers": (int, 1),
    },
    "spectra": {
        "f_min_hz": (float, 0.01),
        "f_max_hz": (float, 2000.0),
        "points": (int, 400),
        "resonances_hz": (_parse_float_list, (100.0, 500.0, 1200.0)),
    },
    "simulate": {
        "fs": (float, 8192.0),
        "n_cycles": (int, 256),
        "seed": (int, 20260810),
        "correction": (_parse_bool, True),
        "runs": (int, 1),
        "workers": (int, 1),
        "omrr_bias": (float, 0.0),
        "bias_time_constant": (float, 20.0),
    },
}


def load_config(path: str | None) -> dict:
    """Parse and validate the INI configuration; defaults fill the gaps."""
    resolved = {
        section: {key: spec[1] for key, spec in options.items()}
        for section, options in _SCHEMA.items()
    }
    if path is None:
        return resolved
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}")
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"{path}: unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"{path}: unknown key '{key}' in [{section}]")
            parse = _SCHEMA[section][key][0]
            try:
                resolved[section][key] = parse(raw)
            except ValueError as exc:
                raise ConfigError(f"{path}: [{section}] {key} = {raw!r}: {exc}")
    return resolved


def render_config(cfg: dict) -> str:
    """Render a resolved configuration back to INI text."""
    out = configparser.ConfigParser()
    for section, options in cfg.items():
        out[section] = {}
        for key, value in options.items():
            if isinstance(value, tuple):
                out[section][key] = ", ".join(f"{v:.17g}" for v in value)
            elif isinstance(value, bool):
                out[section][key] = "on" if value else "off"
            elif isinstance(value, float):
                out[section][key] = f"{value:.17g}"
            else:
                out[section][key] = str(value)
    buf = []
    for section in out.sections():
        buf.append(f"[{section}]")
        buf.extend(f"{k} = {v}" for k, v in out[section].items())
        buf.append("")
    return "\n".join(buf)


def resolve(cfg: dict) -> HybridConfig:
    """Build the hybrid configuration objects from a resolved config dict."""
    ic = cfg["interferometer"]
    k_eff = ic["k_eff"] if ic["k_eff"] > 0.0 else 4.0 * math.pi / ic["wavelength"]
    try:
        ai = InterferometerConfig(
            T=ic["t"],
            T_c=ic["t_c"],
            N=ic["n_atoms"],
            C0=ic["contrast"],
            B=ic["offset"],
            k_eff=k_eff,
            tau_p=ic["tau_p"],
            g0=ic["g0"],
        )
        oc = cfg["omrr"]
        omrr = OmrrConfig(
            omega0=2.0 * math.pi * oc["f0"],
            Q=oc["q"],
            m=oc["mass"],
            T_TM=oc["temperature"],
            sigma_x=oc["sigma_x"],
            loss_model=oc["loss_model"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc))
    table_spec = cfg["ambient"]["table"]
    table_path = (
        default_peterson_table_path() if table_spec == "builtin" else table_spec
    )
    model = load_peterson_table(table_path)
    ambient = peterson_noise_psd(model)
    hc = cfg["hybrid"]
    try:
        return HybridConfig(
            ai=ai,
            omrr=omrr,
            ambient=ambient,
            n_max=hc["n_max"],
            tau=hc["tau"],
            band_hz=hc["band_hz"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc))


class _OutputSet:
    """Tracks files written to the output directory for atomic cleanup."""

    def __init__(self, out_dir: str) -> None:
        self.out_dir = out_dir
        self.files: list[str] = []
        os.makedirs(out_dir, exist_ok=True)

    def path(self, name: str) -> str:
        self.files.append(name)
        return os.path.join(self.out_dir, name)

    def discard_all(self) -> None:
        for name in self.files:
            try:
                os.remove(os.path.join(self.out_dir, name))
            except OSError:
                pass


def _write_csv(path: str, columns: dict[str, np.ndarray]) -> None:
    names = list(columns)
    arrays = [np.atleast_1d(np.asarray(columns[n])) for n in names]
    length = max(len(a) for a in arrays)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(names) + "\n")
        for i in range(length):
            cells = []
            for a in arrays:
                v = a[i] if len(a) > 1 else a[0]
                if isinstance(v, (str, np.str_)):
                    cells.append(str(v))
                elif isinstance(v, (int, np.integer)):
                    cells.append(str(int(v)))
                else:
                    cells.append(format(float(v), ".17g"))
            fh.write(",".join(cells) + "\n")


def _write_manifest(
    out: _OutputSet,
    command: str,
    cfg: dict,
    seed: int | None,
    t_start: float,
    flags: list[str],
) -> None:
    manifest = {
        "tool": "hybridsensor",
        "version": __version__,
        "command": command,
        "seed": seed,
        "duration_s": time.perf_counter() - t_start,
        "outputs": sorted(out.files),
        "flags": sorted(set(flags)),
        "config": {
            sec: {k: (list(v) if isinstance(v, tuple) else v) for k, v in opts.items()}
            for sec, opts in cfg.items()
        },
        "config_ini": render_config(cfg),
    }
    final = os.path.join(out.out_dir, "manifest.json")
    tmp = final + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, final)


_PLOT_SCRIPT = """\
#!/usr/bin/env python3
# Plot every CSV table in this directory on log axes where sensible.
import csv
import glob
import os

import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
for path in sorted(glob.glob(os.path.join(here, "*.csv"))):
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        continue
    names = [n for n in rows[0] if n != "regime"]
    x_name = names[0]
    fig, ax = plt.subplots()
    for y_name in names[1:]:
        try:
            x = [float(r[x_name]) for r in rows]
            y = [float(r[y_name]) for r in rows]
        except ValueError:
            continue
        ax.plot(x, y, label=y_name)
    if min(x) > 0 and min(min(y), 1) > 0:
        ax.set_xscale("log")
        ax.set_yscale("log")
    ax.set_xlabel(x_name)
    ax.legend(fontsize=7)
    ax.set_title(os.path.basename(path))
    fig.savefig(path.replace(".csv", ".png"), dpi=150)
    plt.close(fig)
print("wrote plots next to the tables")
"""


def cmd_noise(cfg: dict, out: _OutputSet) -> list[str]:
    hybrid = resolve(cfg)
    nc = cfg["noise"]
    if nc["points"] < 2 or nc["f_min_hz"] <= 0 or nc["f_min_hz"] >= nc["f_max_hz"]:
        raise ConfigError("[noise] needs 0 < f_min_hz < f_max_hz and points >= 2")
    f = np.geomspace(nc["f_min_hz"], nc["f_max_hz"], nc["points"])
    flags: list[str] = []
    ambient_psd, n_sub = hybrid.ambient.psd_nearest(f)
    if n_sub:
        flags.append("ambient-extended-beyond-table")
    _write_csv(
        out.path("peterson_asd.csv"),
        {"f_hz": f, "asd_m_s2_sqrthz": np.sqrt(ambient_psd)},
    )
    _write_csv(
        out.path("omrr_thermal_asd.csv"),
        {
            "f_hz": f,
            "asd_m_s2_sqrthz": np.full_like(f, thermal_accel_floor(hybrid.omrr)),
        },
    )
    _write_csv(
        out.path("omrr_readout_asd.csv"),
        {
            "f_hz": f,
            "asd_m_s2_sqrthz": readout_limited_accel_asd(
                2.0 * math.pi * f, hybrid.omrr
            ),
        },
    )
    return flags


def cmd_optimize(cfg: dict, out: _OutputSet) -> list[str]:
    hybrid = resolve(cfg)
    oc = cfg["optimize"]
    if oc["f0_min_hz"] <= 0 or oc["f0_min_hz"] >= oc["f0_max_hz"]:
        raise ConfigError("[optimize] needs 0 < f0_min_hz < f0_max_hz")
    grid = 2.0 * math.pi * np.geomspace(
        oc["f0_min_hz"], oc["f0_max_hz"], oc["grid_points"]
    )
    summary = []
    for sx in oc["sigma_x_list"]:
        point_cfg = replace(hybrid, omrr=replace(hybrid.omrr, sigma_x=sx))
        sweep = sweep_bandwidth(point_cfg, grid, workers=oc["workers"])
        tag = f"{sx:.0e}".replace("-", "m")
        _write_csv(
            out.path(f"sweep_sigma_x_{tag}.csv"),
            {
                "omega0_rad_s": sweep.omega0,
                "f0_hz": sweep.omega0 / (2.0 * math.pi),
                "sigma_a_m_s2_sqrthz": sweep.sigma_a,
                "required_sigma_x_m_sqrthz": sweep.required_sigma_x,
            },
        )
        summary.append(
            {
                "sigma_x_m_sqrthz": sx,
                "opt_omega0_rad_s": sweep.opt_omega0,
                "opt_f0_hz": sweep.opt_omega0 / (2.0 * math.pi),
                "opt_sigma_a_m_s2_sqrthz": sweep.opt_sigma,
            }
        )
    with open(out.path("optimize_summary.json"), "w", encoding="utf-8") as fh:
        json.dump({"optima": summary}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return []


def cmd_spectra(cfg: dict, out: _OutputSet) -> list[str]:
    hybrid = resolve(cfg)
    sc = cfg["spectra"]
    if sc["points"] < 2 or sc["f_min_hz"] <= 0 or sc["f_min_hz"] >= sc["f_max_hz"]:
        raise ConfigError("[spectra] needs 0 < f_min_hz < f_max_hz and points >= 2")
    f = np.geomspace(sc["f_min_hz"], sc["f_max_hz"], sc["points"])
    for f0 in sc["resonances_hz"]:
        point_cfg = replace(
            hybrid, omrr=replace(hybrid.omrr, omega0=2.0 * math.pi * f0)
        )
        table = hybrid_spectrum(point_cfg, f)
        _write_csv(
            out.path(f"spectrum_f0_{f0:g}.csv"),
            {
                "f_hz": table.f_hz,
                "hybrid_asd_m_s2_sqrthz": table.hybrid_asd,
                "regime": table.regime,
                "ambient_asd_m_s2_sqrthz": table.ambient_asd,
                "uncorrected_ai_asd_m_s2_sqrthz": np.array(
                    [table.uncorrected_ai_asd]
                ),
                "qpn_asd_m_s2_sqrthz": np.array([table.qpn_asd]),
            },
        )
    return []


def cmd_simulate(cfg: dict, out: _OutputSet, args: argparse.Namespace) -> list[str]:
    hybrid = resolve(cfg)
    sc = dict(cfg["simulate"])
    if args.seed is not None:
        sc["seed"] = args.seed
        cfg["simulate"]["seed"] = args.seed
    if args.runs is not None:
        sc["runs"] = args.runs
        cfg["simulate"]["runs"] = args.runs
    if args.workers is not None:
        sc["workers"] = args.workers
        cfg["simulate"]["workers"] = args.workers
    if sc["runs"] < 1:
        raise ConfigError("[simulate] runs must be at least 1")
    # the synthesized record must carry ambient power up to Nyquist
    extended = peterson_noise_psd(
        load_peterson_table(
            default_peterson_table_path()
            if cfg["ambient"]["table"] == "builtin"
            else cfg["ambient"]["table"]
        ),
        extend_to_hz=sc["fs"] / 2.0,
    )
    try:
        sim_cfg = SimConfig(
            hybrid=replace(hybrid, ambient=extended),
            fs=sc["fs"],
            n_cycles=sc["n_cycles"],
            seed=sc["seed"],
            correction=sc["correction"],
            omrr_bias=sc["omrr_bias"],
            bias_time_constant=sc["bias_time_constant"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc))
    runs = run_batch(sim_cfg, sc["runs"], workers=sc["workers"])
    flags: list[str] = []
    for r, run in enumerate(runs):
        flags.extend(run.flags)
        _write_csv(
            out.path(f"cycles_run{r}.csv"),
            {
                "cycle": run.cycle,
                "phi_true_rad": run.phi_true,
                "phi_est_rad": run.phi_est,
                "phi_residual_rad": run.phi_residual,
                "phi_measured_rad": run.phi_measured,
                "population": run.population_measured,
                "corrected_accel_m_s2": run.corrected_accel,
                "omrr_cycle_mean_m_s2": run.omrr_cycle_mean,
                "bias_estimate_m_s2": run.bias_estimate,
            },
        )
        _write_csv(
            out.path(f"allan_run{r}.csv"),
            {
                "tau_s": run.adev_tau,
                "adev_m_s2": run.adev_sigma,
                "n_terms": run.adev_n,
            },
        )
        if args.dump_timeseries:
            np.savez(
                out.path(f"timeseries_run{r}.npz"),
                field_order=np.array(["a_true", "z_true", "z_meas", "a_est"]),
                fs=np.array([run.fs]),
                n_samples=np.array([len(run.a_true)]),
                a_true=run.a_true,
                z_true=run.z_true,
                z_meas=run.z_meas,
                a_est=run.a_est,
            )
    return flags


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hybridsensor",
        description="Hybrid inertial sensor design and simulation toolkit",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("noise", "emit ambient and sensor noise curves"),
        ("optimize", "sweep the resonance and locate optima"),
        ("spectra", "emit hybrid spectral densities"),
        ("simulate", "run the seeded shot-by-shot simulator"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", default=None, help="INI configuration file")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument(
            "--emit-plot-script",
            action="store_true",
            help="also write a generic plotting script",
        )
        if name == "simulate":
            p.add_argument("--seed", type=int, default=None)
            p.add_argument("--runs", type=int, default=None)
            p.add_argument("--workers", type=int, default=None)
            p.add_argument("--dump-timeseries", action="store_true")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    t_start = time.perf_counter()
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = _OutputSet(args.out)
    seed: int | None = None
    try:
        if args.command == "noise":
            flags = cmd_noise(cfg, out)
        elif args.command == "optimize":
            flags = cmd_optimize(cfg, out)
        elif args.command == "spectra":
            flags = cmd_spectra(cfg, out)
        else:
            flags = cmd_simulate(cfg, out, args)
            seed = cfg["simulate"]["seed"]
        if args.emit_plot_script:
            with open(out.path("plot_results.py"), "w", encoding="utf-8") as fh:
                fh.write(_PLOT_SCRIPT)
    except ConfigError as exc:
        out.discard_all()
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        out.discard_all()
        print(f"error: missing file: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001, report and leave a clean directory
        out.discard_all()
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _write_manifest(out, args.command, cfg, seed, t_start, flags)
    return 0


def entry_point() -> None:
    sys.exit(main())
