"""Command-line entry point: one subcommand per scripted experiment.

Configuration comes from defaults, then an optional ``key=value`` file
(``--config``), then ``--param key=value`` overrides, then dedicated flags.
Outputs are written to a temporary directory and moved into ``--out`` in one
rename, so a failed run never leaves partial files behind.

Exit codes: 0 success, 2 configuration error, 3 guard or invariant failure.
"""
from __future__ import annotations

import argparse
import json
import os
import shutil
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import experiments as ex
from .bell import AngleTriple, nonlocality_demonstration
from .errors import ConfigError, GuardError
from .evolution import (FAPP_OVERLAP, EvolutionSpec, SlitConfig, boundary_mass,
                        decoherence_overlap, interference_decomposition, pointer_measure,
                        prepare_double_slit)
from .rng import SEED_MASK, derive_seed, stream
from .spin import (CELLS, MeasurementAxis, TwoQubitState, cell_probabilities, marginal_up_right,
                   no_signaling_audit, sample_sequential_measurement)
from .trajectories import (GuidanceField, double_slit_run, double_slit_trajectories,
                           equivariance_check, pointer_trajectories)
from .wavefn import Grid, gaussian_wavefunction, to_csv, write_columns
from .wavefn import density as density_of

EXIT_OK, EXIT_CONFIG, EXIT_GUARD = 0, 2, 3

DEFAULTS = {
    "double-slit": {
        **ex.DOUBLE_SLIT_GRID, **ex.DOUBLE_SLIT_SLITS, **ex.DOUBLE_SLIT_FLIGHT,
        "open": "both", "n": 10_000, "trajectory_records": 11,
    },
    "equivariance": {
        **ex.FREE_GRID, **ex.FREE_RUN, "n": 10_000, "control_scale": 2.0,
        "trajectory_records": 11,
    },
    "pointer": {
        **ex.POINTER_GRID, **ex.POINTER_RUN, "n": 10_000,
    },
    "no-signaling": {
        "state": "random", "n_states": 1000, "n_angles": 24, "mc_n": 100_000,
    },
    "bell": {
        "angles_deg": "0,120,240", "n": 100_000,
    },
    "verify": {},
}
DEFAULT_SEED = 42


# --- configuration ---------------------------------------------------------

def parse_kv_lines(text: str) -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _coerce(key, value, default):
    if isinstance(value, str) and not isinstance(default, str):
        try:
            if isinstance(default, bool):
                return value.lower() in ("1", "true", "yes", "on")
            if isinstance(default, int):
                return int(float(value)) if float(value).is_integer() else _bad(key, value)
            if isinstance(default, float):
                return float(value)
        except ValueError:
            _bad(key, value)
    return value


def _bad(key, value):
    raise ConfigError(f"invalid value for {key}: {value!r}")


def build_config(experiment: str, args) -> dict:
    params = dict(DEFAULTS[experiment])
    seed = DEFAULT_SEED
    raw = {}
    if args.config:
        try:
            raw.update(parse_kv_lines(Path(args.config).read_text(encoding="utf-8")))
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
    for item in args.param or []:
        raw.update(parse_kv_lines(item))
    if "seed" in raw:
        seed = raw.pop("seed")
    for key, value in raw.items():
        if key not in params:
            raise ConfigError(f"unknown parameter {key!r} for {experiment}")
        params[key] = _coerce(key, value, DEFAULTS[experiment][key])
    if getattr(args, "n", None) is not None and "n" in params:
        params["n"] = args.n
    if args.seed is not None:
        seed = args.seed
    try:
        seed = int(seed)
    except (TypeError, ValueError):
        _bad("seed", seed)
    if not 0 <= seed <= SEED_MASK:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    return {"experiment": experiment, "seed": seed, "params": params}


# --- output handling ---------------------------------------------------------

class Outputs:
    """Collects files in a temporary directory, then swaps them into place."""

    def __init__(self, out_dir: Path, fmt: str):
        self.out_dir = Path(out_dir)
        self.fmt = fmt
        self.out_dir.parent.mkdir(parents=True, exist_ok=True)
        self.tmp = Path(tempfile.mkdtemp(prefix=".pilotwave-", dir=self.out_dir.parent))
        self.files: list[str] = []

    @property
    def csv(self) -> bool:
        return self.fmt in ("csv", "both")

    def path(self, name: str) -> Path:
        self.files.append(name)
        return self.tmp / name

    def write_json(self, name: str, payload: dict):
        text = json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n"
        self.path(name).write_text(text, encoding="utf-8")

    def commit(self):
        final = self.out_dir
        old = None
        if final.exists():
            if any(final.iterdir()) and not (final / "summary.json").exists():
                raise ConfigError(f"refusing to replace non-run directory {final}")
            old = final.with_name(final.name + f".old-{os.getpid()}")
            os.replace(final, old)
        os.replace(self.tmp, final)
        if old is not None:
            shutil.rmtree(old, ignore_errors=True)

    def discard(self):
        shutil.rmtree(self.tmp, ignore_errors=True)


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


# --- experiments ---------------------------------------------------------------

def _grid(p) -> Grid:
    return Grid.line(p["lower"], p["upper"], p["points"])


def _thin(ens, records: int):
    """Keep ``records`` evenly spaced time samples so trajectory files stay small."""
    T = ens.positions.shape[1]
    keep = np.unique(np.linspace(0, T - 1, max(2, records)).round().astype(int))
    return type(ens)(ens.positions[:, keep], ens.times[keep], ens.flagged, ens.dt, ens.seed)


def cmd_double_slit(config: dict, out: Outputs) -> dict:
    p, seed = config["params"], config["seed"]
    grid = _grid(p)
    spec = EvolutionSpec(p["dt"], p["steps"])
    geometry = dict(separation=p["separation"], width=p["width"],
                    forward_momentum=p["forward_momentum"])
    chosen = SlitConfig(p["open"], **geometry)
    states = {}
    for slit in ("slit1", "slit2"):
        if p["open"] in (slit, "both"):
            states[slit] = prepare_double_slit(grid, SlitConfig(slit, **geometry), spec)
    zero = 0 * next(iter(states.values()))
    psi1, psi2 = states.get("slit1", zero), states.get("slit2", zero)
    dec = interference_decomposition(psi1, psi2)
    x = grid.axis()
    if out.csv:
        # (A) slit 2 alone, (B) slit 1 alone, (C) the configured opening
        if "slit2" in states:
            to_csv(density_of(psi2), out.path("screen_A.csv"))
        if "slit1" in states:
            to_csv(density_of(psi1), out.path("screen_B.csv"))
        to_csv(dec.sum_density, out.path("screen_C.csv"))
        write_columns(["x", "cross_term", "sum_density", "no_interference_density"],
                      [x, dec.cross_term, dec.sum_density.weights,
                       dec.no_interference_density.weights], out.path("cross_term.csv"))
    strength = dec.interference_strength()
    results = {
        "identity_residual": dec.identity_residual(),
        "cross_term_peak_fraction": strength,
        "cross_term_integral": float(dec.cross_term.sum() * grid.cell_volume),
        "max_density_difference": float(np.max(np.abs(dec.sum_density.weights
                                                      - dec.no_interference_density.weights))),
        "screen_time": spec.duration,
        "screen_distance": chosen.screen_distance(spec.duration),
        "boundary_mass": boundary_mass(dec.sum_density),
    }
    flags = {
        "identity_holds": results["identity_residual"] < 1e-12,
        "interference_present": strength > 0.05,
    }
    if p["open"] == "both":
        run = double_slit_run(grid, chosen, spec, p["record_every"])
        tr = double_slit_trajectories(run, p["n"], seed)
        ens = tr.ensemble
        results.update(crossings=tr.crossings, arrival_ks=tr.arrival_ks,
                       ks_threshold=tr.threshold, flagged=ens.n_flagged,
                       slit1_fraction=float(np.mean(tr.slit_attribution == 1)))
        flags.update(no_axis_crossings=tr.crossings == 0, arrival_matches_density=tr.arrival_ks < tr.threshold)
        if out.csv:
            _thin(ens, p["trajectory_records"]).to_csv(out.path("trajectories.csv"))
    return {"results": results, "flags": flags}


def cmd_equivariance(config: dict, out: Outputs) -> dict:
    from scipy import stats

    p, seed = config["params"], config["seed"]
    grid = _grid(p)
    psi0 = gaussian_wavefunction(grid, 0.0, p["sigma"], p["k"])
    if not (p["dt"] > 0 and p["t_check"] > 0):
        raise ConfigError("dt and t_check must be positive")
    steps = int(round(p["t_check"] / p["dt"]))
    if abs(steps * p["dt"] - p["t_check"]) > 1e-9 * p["t_check"]:
        raise ConfigError("dt must divide t_check")
    field = GuidanceField.evolved(psi0, EvolutionSpec(p["dt"], steps))
    cdf = stats.norm(loc=p["k"] * p["t_check"], scale=ex.free_gaussian_width(p["sigma"], p["t_check"])).cdf
    ens = []
    good = equivariance_check(field, p["n"], seed, p["t_check"], reference_cdf=cdf, ensemble_out=ens)
    bad = equivariance_check(field.scaled(p["control_scale"]), p["n"], seed, p["t_check"],
                             reference_cdf=cdf)
    if out.csv:
        _thin(ens[0], p["trajectory_records"]).to_csv(out.path("trajectories.csv"))
        to_csv(field.density_at(p["t_check"]), out.path("density_t.csv"))
    results = {"ks_statistic": good.ks_statistic, "ks_threshold": good.threshold,
               "control_ks_statistic": bad.ks_statistic, "flagged": good.n_flagged}
    flags = {"equivariance_pass": good.passed, "negative_control_fails": not bad.passed}
    return {"results": results, "flags": flags}


def cmd_pointer(config: dict, out: Outputs) -> dict:
    p, seed = config["params"], config["seed"]
    grid = _grid(p)
    psi0 = gaussian_wavefunction(grid, 0.0, p["sigma"])
    if not 0.0 <= p["c1_sq"] <= 1.0:
        raise ConfigError("c1_sq must lie in [0, 1]")
    c1, c2 = np.sqrt(p["c1_sq"]), np.sqrt(1.0 - p["c1_sq"])
    sf = pointer_measure(c1, c2, psi0, p["coupling"], p["duration"])
    m1, m2 = sf.branch_masses()
    try:
        ovl = decoherence_overlap(sf)
    except GuardError:
        ovl = None
    results = {"branch_mass_1": m1, "branch_mass_2": m2, "expected_1": p["c1_sq"],
               "expected_2": 1.0 - p["c1_sq"], "decoherence_overlap": ovl}
    flags = {"born_weights": abs(m1 - p["c1_sq"]) < 1e-8 and abs(m2 - (1 - p["c1_sq"])) < 1e-8,
             "fapp_decoherent": ovl is not None and ovl < FAPP_OVERLAP}
    if ovl is not None:
        tr = pointer_trajectories(c1, c2, psi0, p["coupling"], p["duration"], p["n"], seed,
                                  snapshots=p["snapshots"])
        sigma = float(np.sqrt(p["c1_sq"] * (1 - p["c1_sq"]) / p["n"]))
        results.update(branch1_frequency=tr.branch1_fraction, binomial_sigma=sigma,
                       flagged=tr.ensemble.n_flagged)
        flags["trajectory_frequency_within_3sigma"] = abs(tr.branch1_fraction - p["c1_sq"]) <= 3 * sigma
    if out.csv:
        y = grid.axis()
        write_columns(["x", "up_re", "up_im", "down_re", "down_im"],
                      [y, sf.up.values.real, sf.up.values.imag, sf.down.values.real,
                       sf.down.values.imag], out.path("pointer.csv"))
    return {"results": results, "flags": flags}


def cmd_no_signaling(config: dict, out: Outputs) -> dict:
    p, seed = config["params"], config["seed"]
    rng = stream(seed)
    if p["state"] == "singlet":
        states = [TwoQubitState.singlet()]
    elif p["state"] == "random":
        states = [TwoQubitState.random(rng) for _ in range(p["n_states"])]
    else:
        raise ConfigError("state must be 'singlet' or 'random'")
    angles = np.linspace(0.0, 2 * np.pi, p["n_angles"], endpoint=False)
    axes = [MeasurementAxis(a) for a in angles]
    worst = 0.0
    sweep = []
    for s in states:
        d = [no_signaling_audit(s, ax).discrepancy for ax in axes]
        worst = max(worst, max(d))
    first = states[0]
    for ax in axes:
        a = no_signaling_audit(first, ax)
        sweep.append({"theta": ax.theta, "post_measurement_marginal": a.post_measurement_marginal,
                      "unmeasured_marginal": a.unmeasured_marginal, "discrepancy": a.discrepancy})
    audit = {
        "state_amplitudes": [[z.real, z.imag] for z in first.amplitudes],
        "unmeasured_marginal": marginal_up_right(first),
        "angle_sweep": sweep,
        "n_states": len(states),
        "max_discrepancy": worst,
    }
    if out.fmt in ("json", "both"):
        out.write_json("audit.json", audit)
    if out.csv:
        rows = [[], [], [], [], []]
        right = MeasurementAxis(0.0)
        for k, ax in enumerate(axes):
            cnt = sample_sequential_measurement(first, ax, right, p["mc_n"], derive_seed(seed, k))
            exp = cell_probabilities(first, ax, right)
            for cell in CELLS:
                for col, v in zip(rows, (ax.theta, right.theta, cell, cnt[cell], exp[cell] * p["mc_n"])):
                    col.append(v)
        write_columns(["left_axis", "right_axis", "cell", "count", "expected"], rows,
                      out.path("monte_carlo.csv"))
    return {"results": {"max_discrepancy": worst, "n_states": len(states), "n_angles": len(axes)},
            "flags": {"no_signaling": worst < 1e-12}}


def cmd_bell(config: dict, out: Outputs) -> dict:
    p, seed = config["params"], config["seed"]
    try:
        deg = [float(v) for v in str(p["angles_deg"]).split(",")]
    except ValueError:
        deg = []
    if len(deg) != 3:
        raise ConfigError("angles_deg needs three comma-separated angles")
    rep = nonlocality_demonstration(AngleTriple.degrees(*deg), p["n"], seed)
    if out.fmt in ("json", "both"):
        out.write_json("report.json", rep.to_json_dict())
    if out.csv:
        rows = [[], [], [], []]
        for pair, cnt in zip(("ab", "bc", "ca"), rep.pair_counts):
            for cell in CELLS:
                for col, v in zip(rows, (pair, cell, cnt[cell], p["n"])):
                    col.append(v)
        write_columns(["pair", "cell", "count", "n"], rows, out.path("pair_counts.csv"))
    return {"results": rep.to_json_dict(), "flags": {"violation": rep.violation}}


def cmd_verify(config: dict, out: Outputs) -> dict:
    from .acceptance import run_all

    checks = run_all(echo=lambda line: print(line, flush=True))
    results = {f"criterion_{c.number}": {"name": c.name, "passed": c.passed, "seconds": c.seconds,
                                         **{k: v for k, v in c.details.items()}} for c in checks}
    return {"results": results, "flags": {"all_passed": all(c.passed for c in checks)}}


COMMANDS = {
    "double-slit": cmd_double_slit,
    "equivariance": cmd_equivariance,
    "pointer": cmd_pointer,
    "no-signaling": cmd_no_signaling,
    "bell": cmd_bell,
    "verify": cmd_verify,
}
REQUIRED_FLAGS = {"verify": "all_passed"}


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pilotwave", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", metavar="PATH", help="key=value configuration file")
        sp.add_argument("--seed", type=int, metavar="U64")
        sp.add_argument("--out", metavar="DIR", default=None,
                        help="output directory (default: runs/<command>)")
        sp.add_argument("--format", choices=("csv", "json", "both"), default="both")
        sp.add_argument("-p", "--param", action="append", metavar="KEY=VALUE",
                        help="override a parameter (repeatable)")
        if "n" in DEFAULTS[name]:
            sp.add_argument("--n", type=int, help="ensemble or sample size")
    return parser


def run(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    out = None
    try:
        config = build_config(args.command, args)
        out = Outputs(Path(args.out or Path("runs") / args.command), args.format)
        t0 = time.perf_counter()
        payload = COMMANDS[args.command](config, out)
        payload["flags"] = {k: bool(v) for k, v in payload["flags"].items()}
        summary = {
            "config": config,
            **payload,
            "duration_s": time.perf_counter() - t0,
            "files": sorted(out.files + ["summary.json"]),
        }
        out.write_json("summary.json", summary)
        out.commit()
    except ConfigError as exc:
        if out is not None:
            out.discard()
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GuardError as exc:
        if out is not None:
            out.discard()
        print(f"guard failure: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except BaseException:
        if out is not None:
            out.discard()
        raise
    print(json.dumps(payload["flags"], sort_keys=True))
    required = REQUIRED_FLAGS.get(args.command)
    if required and not payload["flags"][required]:
        return EXIT_GUARD
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
