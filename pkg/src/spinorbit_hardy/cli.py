"""Command-line entry point: ``spinorbit-hardy {predict,optimize,simulate,lhv,tomo}``.

Exit codes: 0 success, 1 runtime error, 2 usage or configuration error.
Without ``--output`` reports go to ``$SPINORBIT_HARDY_OUTPUT_DIR/<command>.<format>``
when that variable is set, else to stdout.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .hardy import (
    GOLDEN_RATIO,
    HARDY_LABELS,
    PARADOX_MAX_PROBABILITY,
    basis_state_probabilities,
    concurrence,
    hardy_density,
    hardy_p4_closed_form,
    hardy_table,
    optimal_gamma,
)
from .noncontextual import HardyMarginals, inequality_gap, max_gap_over_models
from .prep import prepare_hardy
from .qstate import fidelity, projector
from .simlab import ConfigError, ExperimentConfig, NoiseModel, NoiseParameterError, apply_noise, run_experiment
from .tomo import concurrence_curve, mle_reconstruct, simulate_tomography

OUTPUT_DIR_ENV = "SPINORBIT_HARDY_OUTPUT_DIR"

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2

SIMULATE_KEYS = {"gamma_deg", "gamma_rad", "total_rate", "window", "seed", "noise"}
TOMO_KEYS = {"gamma_deg", "gamma_rad", "counts_per_setting", "seed", "noise", "sweep"}
NOISE_KEYS = {"depolarizing_p", "crosstalk_eps", "override_frequencies"}


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- output


def manifest(command: str, config: dict, seed: int | None) -> dict:
    return {
        "command": command,
        "config": config,
        "seed": seed,
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }


def _dump_json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _dump_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def matrix_to_json(m: np.ndarray) -> list:
    """Row-major nested list of ``[re, im]`` pairs."""
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m)]


def matrix_from_json(data) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in data])


class Sink:
    """Resolves where a command's primary report and companion files go."""

    def __init__(self, command: str, output: str | None, fmt: str):
        self.fmt = fmt
        if output is None and os.environ.get(OUTPUT_DIR_ENV):
            output = str(Path(os.environ[OUTPUT_DIR_ENV]) / f"{command}.{fmt}")
        self.path = Path(output) if output else None

    def companion(self, suffix: str) -> Path | None:
        if self.path is None:
            return None
        return self.path.with_name(self.path.stem + suffix)

    def write(self, text: str, path: Path | None = None):
        target = path or self.path
        if target is None:
            sys.stdout.write(text)
            return
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text)

    def emit(self, man: dict, result: dict, csv_rows: tuple | None = None):
        """Write the primary report: JSON embeds the manifest, CSV gets a sidecar."""
        if self.fmt == "json" or csv_rows is None:
            self.write(_dump_json({"manifest": man, "result": result}))
            return
        self.write(_dump_csv(*csv_rows))
        if self.path is not None:
            self.write(_dump_json(man), self.path.with_name(self.path.name + ".manifest.json"))


def _flat_rows(result: dict, prefix: str = ""):
    for key, value in result.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            yield from _flat_rows(value, name + ".")
        elif not isinstance(value, list):
            yield (name, value)


# ---------------------------------------------------------------- parsing


def _angle_args(p: argparse.ArgumentParser, required: bool = True):
    group = p.add_mutually_exclusive_group(required=required)
    group.add_argument("--gamma-deg", type=float, help="entanglement angle in degrees")
    group.add_argument("--gamma-rad", type=float, help="entanglement angle in radians")


def _gamma_from_args(args) -> float:
    if args.gamma_deg is not None:
        return math.radians(args.gamma_deg)
    return args.gamma_rad


def _key_line(text: str, key: str) -> int | None:
    for i, line in enumerate(text.splitlines(), 1):
        if f'"{key}"' in line:
            return i
    return None


def load_config(path: str, allowed: set[str]) -> tuple[dict, str]:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"{path}: config file not found")
    text = p.read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise UsageError(f"{path}:1: top level must be a JSON object")

    def where(key):
        line = _key_line(text, key)
        return f"{path}:{line}" if line else path

    for key in doc:
        if key not in allowed:
            raise UsageError(f"{where(key)}: unknown key {key!r} (allowed: {', '.join(sorted(allowed))})")
    if "gamma_deg" in doc and "gamma_rad" in doc:
        raise UsageError(f"{where('gamma_rad')}: give gamma_deg or gamma_rad, not both")
    for key in doc.get("noise") or {}:
        if key not in NOISE_KEYS:
            raise UsageError(f"{where(key)}: unknown noise key {key!r} (allowed: {', '.join(sorted(NOISE_KEYS))})")
    return doc, text


def _config_gamma(doc: dict) -> float:
    if "gamma_deg" in doc:
        return math.radians(float(doc["gamma_deg"]))
    if "gamma_rad" in doc:
        return float(doc["gamma_rad"])
    return optimal_gamma()[0]


def _noise(doc: dict) -> NoiseModel:
    return NoiseModel(**(doc.get("noise") or {}))


def _read_marginals(path: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"{path}: input file not found")
    text = p.read_text()
    if p.suffix.lower() == ".csv":
        rows = list(csv.DictReader(io.StringIO(text)))
        if not rows or not {"label", "probability"} <= set(rows[0]):
            raise UsageError(f"{path}: CSV needs columns label,probability")
        return {r["label"]: float(r["probability"]) for r in rows}
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if isinstance(doc, dict) and "result" in doc and "marginals" in doc["result"]:
        doc = doc["result"]["marginals"]
    return doc


# ---------------------------------------------------------------- commands


def cmd_predict(args) -> int:
    gamma = _gamma_from_args(args)
    if not math.isfinite(gamma) or not 0 <= gamma <= math.pi / 2:
        raise UsageError(f"gamma must lie in [0, 90] degrees, got {math.degrees(gamma)!r}")
    table = hardy_table(gamma, paradox=False)
    result = {
        "gamma_rad": gamma,
        "gamma_deg": math.degrees(gamma),
        "hardy": table.as_dict(),
        "p4_closed_form": hardy_p4_closed_form(gamma),
        "basis": basis_state_probabilities(gamma),
        "concurrence": concurrence(hardy_density(gamma)),
    }
    config = {"gamma_rad": gamma}
    Sink("predict", args.output, args.format).emit(
        manifest("predict", config, args.seed), result, (("quantity", "value"), list(_flat_rows(result)))
    )
    return EXIT_OK


def cmd_optimize(args) -> int:
    gamma, p_star = optimal_gamma()
    result = {
        "gamma_rad": gamma,
        "gamma_deg": math.degrees(gamma),
        "p_star": p_star,
        "closed_form": "((1+sqrt(5))/2)^-5",
        "closed_form_value": PARADOX_MAX_PROBABILITY,
        "golden_ratio": GOLDEN_RATIO,
        "abs_difference": abs(p_star - PARADOX_MAX_PROBABILITY),
    }
    Sink("optimize", args.output, args.format).emit(
        manifest("optimize", {}, args.seed), result, (("quantity", "value"), list(_flat_rows(result)))
    )
    return EXIT_OK


def _counts_csv(records) -> str:
    rows = [(r.projector_label, r.counts, r.window, r.counts / r.window) for r in records]
    return _dump_csv(("label", "counts", "window_s", "rate_hz"), rows)


def cmd_simulate(args) -> int:
    doc, _ = load_config(args.config, SIMULATE_KEYS)
    seed = args.seed if args.seed is not None else int(doc.get("seed", 0))
    try:
        cfg = ExperimentConfig(
            gamma=_config_gamma(doc),
            total_rate=float(doc.get("total_rate", 120.0)),
            window=float(doc.get("window", 100.0)),
            seed=seed,
            noise=_noise(doc),
        )
    except (ConfigError, NoiseParameterError, TypeError, ValueError) as exc:
        raise UsageError(f"{args.config}: {exc}") from None
    resolved = {
        "gamma_rad": cfg.gamma,
        "total_rate": cfg.total_rate,
        "window": cfg.window,
        "seed": cfg.seed,
        "noise": {
            "depolarizing_p": cfg.noise.depolarizing_p,
            "crosstalk_eps": cfg.noise.crosstalk_eps,
            "override_frequencies": cfg.noise.override_frequencies,
        },
    }
    man = manifest("simulate", resolved, seed)
    outcome = run_experiment(cfg)
    result = {
        "n_tot": outcome.n_tot,
        "c_tot_hz": outcome.n_tot / cfg.window,
        "counts": {r.projector_label: r.counts for r in outcome.records},
        **outcome.report.to_dict(),
    }
    sink = Sink("simulate", args.output, args.format)
    counts_text = _counts_csv(outcome.records)
    if args.format == "csv":
        sink.write(counts_text)
        if sink.path is not None:
            sink.write(_dump_json(man), sink.path.with_name(sink.path.name + ".manifest.json"))
            sink.write(_dump_json({"manifest": man, "result": result}), sink.companion(".violation.json"))
    else:
        sink.emit(man, result)
        if sink.path is not None:
            sink.write(counts_text, sink.companion(".counts.csv"))
    return EXIT_OK


def cmd_lhv(args) -> int:
    flags = {k: getattr(args, k.lower()) for k in HARDY_LABELS}
    values = {}
    if args.input:
        values.update(_read_marginals(args.input))
    values.update({k: v for k, v in flags.items() if v is not None})
    try:
        m = HardyMarginals.from_mapping(values)
    except (KeyError, ValueError, TypeError) as exc:
        raise UsageError(f"invalid marginals: {exc}") from None
    gap = inequality_gap(m)
    bound, row = max_gap_over_models()
    result = {
        "marginals": m.as_dict(),
        "gap": gap,
        "satisfied": gap <= 0,
        "max_gap_over_models": bound,
        "argmax_row": row,
    }
    Sink("lhv", args.output, args.format).emit(
        manifest("lhv", {"marginals": m.as_dict()}, args.seed), result, (("quantity", "value"), list(_flat_rows(result)))
    )
    return EXIT_OK


def cmd_tomo(args) -> int:
    doc, _ = load_config(args.config, TOMO_KEYS)
    seed = args.seed if args.seed is not None else int(doc.get("seed", 0))
    try:
        gamma = _config_gamma(doc)
        noise = _noise(doc)
        n_per = float(doc.get("counts_per_setting", 1e6))
        if not n_per > 0:
            raise ValueError("counts_per_setting must be positive")
        if not 0 <= gamma <= math.pi / 4:
            raise ValueError("gamma must lie in [0, pi/4]")
        sweep = doc.get("sweep")
        sweep_gammas = None
        if sweep is not None:
            if "gammas_deg" in sweep:
                sweep_gammas = [math.radians(float(g)) for g in sweep["gammas_deg"]]
            elif "gammas_rad" in sweep:
                sweep_gammas = [float(g) for g in sweep["gammas_rad"]]
            else:
                points = int(sweep.get("points", 7))
                sweep_gammas = list(np.linspace(0, math.pi / 4, points))
    except (NoiseParameterError, TypeError, ValueError) as exc:
        raise UsageError(f"{args.config}: {exc}") from None
    resolved = {
        "gamma_rad": gamma,
        "counts_per_setting": n_per,
        "seed": seed,
        "noise": {"depolarizing_p": noise.depolarizing_p, "crosstalk_eps": noise.crosstalk_eps},
        "sweep_gammas_rad": sweep_gammas,
    }
    man = manifest("tomo", resolved, seed)

    truth = projector(prepare_hardy(gamma))
    noisy = apply_noise(truth, noise)
    counts = simulate_tomography(noisy, n_per, seed, crosstalk_eps=noise.crosstalk_eps)
    fit = mle_reconstruct(counts)
    rho_json = matrix_to_json(fit.rho_hat.matrix)
    result = {
        "gamma_rad": gamma,
        "gamma_deg": math.degrees(gamma),
        "fidelity": fidelity(fit.rho_hat, truth),
        "concurrence": concurrence(fit.rho_hat),
        "concurrence_theory": math.sin(2 * gamma),
        "log_likelihood": fit.log_likelihood,
        "iterations": fit.iterations,
        "converged": fit.converged,
        "rho_hat": rho_json,
    }
    sweep_rows = None
    if sweep_gammas is not None:
        curve = concurrence_curve(sweep_gammas, n_per, noise, seed)
        sweep_rows = [(g, math.degrees(g), c, th) for g, c, th in curve]
        result["sweep"] = [{"gamma_rad": g, "concurrence": c, "theory": th} for g, c, th in curve]

    sink = Sink("tomo", args.output, args.format)
    sink.emit(man, result, (("quantity", "value"), list(_flat_rows(result))))
    if sink.path is not None:
        sink.write(_dump_json({"manifest": man, "rho_hat": rho_json}), sink.companion(".rho.json"))
        if sweep_rows is not None:
            sink.write(
                _dump_csv(("gamma_rad", "gamma_deg", "concurrence", "theory"), sweep_rows),
                sink.companion(".sweep.csv"),
            )
    return EXIT_OK


# ---------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="random seed (recorded in the manifest)")
    common.add_argument("--output", default=None, help="report path; companion files are written alongside")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    parser = argparse.ArgumentParser(prog="spinorbit-hardy", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("predict", parents=[common], help="quantum predictions at one angle")
    _angle_args(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("optimize", parents=[common], help="angle maximizing the paradox probability")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo coincidence experiment")
    p.add_argument("config", help="JSON experiment configuration")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("lhv", parents=[common], help="audit four probabilities against the Hardy inequality")
    p.add_argument("--input", help="JSON object or CSV (label,probability) with P1..P4")
    for label in HARDY_LABELS:
        p.add_argument(f"--{label.lower()}", type=float, default=None)
    p.set_defaults(func=cmd_lhv)

    p = sub.add_parser("tomo", parents=[common], help="simulated tomography and MLE reconstruction")
    p.add_argument("config", help="JSON tomography configuration")
    p.set_defaults(func=cmd_tomo)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
