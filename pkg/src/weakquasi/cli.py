"""Command-line front end: scenario configs, strength sweeps, figure-data export.

A scenario is described by a single JSON document (see the README for the full
grammar); ``run`` evaluates it over the strength grid and writes one CSV table
per requested quantity plus a JSON summary, ``compare`` diffs two exported
tables within a tolerance.  Output is deterministic: fixed seed and fixed
formatting give byte-identical tables.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .core import (
    DensityOperator,
    ObservableSpec,
    evolve_observable,
    make_pure_state,
    pauli_x,
    pauli_z,
)
from .quasiprob import cq, mhq, negativity, threshold_strength
from .sampling import NoiseModel, run_sweep, strength_from_waveplate

QUANTITIES = ("p_weak", "cq", "mhq", "weak_cq", "weak_mhq", "C", "mhq_reconstructed", "thresholds")

CSV_HEADER = ("K", "a", "b", "quantity", "value", "stderr")

_CONFIG_FIELDS = {
    "dimension",
    "theta0",
    "state",
    "observable_a",
    "observable_b",
    "hamiltonian",
    "dt",
    "K",
    "phi",
    "shots",
    "noise",
    "resamples",
    "seed",
    "outputs",
    "engine",
}

__all__ = ["ConfigError", "ScenarioConfig", "compare", "main", "parse_config", "run"]


class ConfigError(ValueError):
    """A scenario document failed validation; the message names the field."""


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated scenario: state, observables, strength grid, and run options."""

    rho: DensityOperator
    obs_a: ObservableSpec
    obs_b: ObservableSpec
    k_values: tuple[float, ...]
    shots: int | None
    noise: NoiseModel
    resamples: int
    seed: int
    outputs: tuple[str, ...]
    engine: str


def _fail(field: str, message: str):
    raise ConfigError(f"config field '{field}': {message}")


def _complex_entry(entry, field: str) -> complex:
    if isinstance(entry, (int, float)):
        return complex(entry)
    if isinstance(entry, (list, tuple)) and len(entry) == 2:
        return complex(entry[0], entry[1])
    _fail(field, f"expected a number or an [re, im] pair, got {entry!r}")


def _complex_matrix(rows, field: str) -> np.ndarray:
    return np.array([[_complex_entry(e, field) for e in row] for row in rows], dtype=complex)


def _parse_state(doc: dict, dim: int) -> DensityOperator:
    if "theta0" in doc and "state" in doc:
        _fail("state", "give either 'theta0' or 'state', not both")
    if "theta0" in doc:
        if dim != 2:
            _fail("theta0", "the preparation-angle shorthand needs dimension 2")
        angle = math.radians(2.0 * float(doc["theta0"]))
        return make_pure_state([math.cos(angle), math.sin(angle)])
    if "state" not in doc:
        _fail("state", "a scenario needs 'theta0' or 'state'")
    spec = doc["state"]
    try:
        if isinstance(spec, dict) and "density" in spec:
            return DensityOperator(_complex_matrix(spec["density"], "state.density"))
        if isinstance(spec, dict) and "amplitudes" in spec:
            spec = spec["amplitudes"]
        return make_pure_state([_complex_entry(e, "state") for e in spec])
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        _fail("state", str(exc))


def _parse_observable(spec, field: str, dim: int) -> ObservableSpec:
    if isinstance(spec, str):
        presets = {"Z": pauli_z, "X": pauli_x}
        if spec not in presets:
            _fail(field, f"unknown preset {spec!r}; available: {sorted(presets)}")
        if dim != 2:
            _fail(field, f"preset {spec!r} needs dimension 2")
        return presets[spec]()
    if not isinstance(spec, dict) or "eigenvectors" not in spec:
        _fail(field, "expected a preset name or an object with 'eigenvectors'")
    vecs = _complex_matrix(spec["eigenvectors"], f"{field}.eigenvectors")
    eigenvalues = spec.get("eigenvalues", list(range(len(vecs))))
    labels = tuple(spec.get("labels", ()))
    try:
        return ObservableSpec(vecs, eigenvalues, name=spec.get("name", ""), labels=labels)
    except ValueError as exc:
        _fail(field, str(exc))


def _parse_k_grid(doc: dict) -> tuple[float, ...]:
    if "K" in doc and "phi" in doc:
        _fail("K", "'K' and 'phi' are mutually exclusive ways to set the strength grid")
    if "phi" in doc:
        angles = doc["phi"] if isinstance(doc["phi"], list) else [doc["phi"]]
        try:
            return tuple(strength_from_waveplate(float(phi)) for phi in angles)
        except ValueError as exc:
            _fail("phi", str(exc))
    spec = doc.get("K", {"start": 0.0, "stop": 1.0, "num": 11})
    if isinstance(spec, dict):
        extra = set(spec) - {"start", "stop", "num"}
        if extra:
            _fail("K", f"unknown range keys {sorted(extra)}")
        values = np.linspace(spec.get("start", 0.0), spec.get("stop", 1.0), int(spec.get("num", 11)))
    else:
        values = [float(k) for k in (spec if isinstance(spec, list) else [spec])]
    for k in values:
        if not 0.0 <= k <= 1.0:
            _fail("K", f"strength {k} outside [0, 1]")
    return tuple(float(k) for k in values)


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate a JSON scenario document.

    Unknown fields, non-physical states, and out-of-range strengths are
    rejected with a diagnostic naming the offending field.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}")
    if not isinstance(doc, dict):
        raise ConfigError("the scenario document must be a JSON object")
    unknown = set(doc) - _CONFIG_FIELDS
    if unknown:
        raise ConfigError(f"unknown config field(s): {sorted(unknown)}")

    dim = int(doc.get("dimension", 2))
    if dim < 2:
        _fail("dimension", f"must be at least 2, got {dim}")
    rho = _parse_state(doc, dim)
    if rho.dim != dim:
        _fail("state", f"has dimension {rho.dim}, config says {dim}")
    obs_a = _parse_observable(doc.get("observable_a", "Z"), "observable_a", dim)
    obs_b = _parse_observable(doc.get("observable_b", "X"), "observable_b", dim)
    if obs_a.dim != dim or obs_b.dim != dim:
        _fail("observable_a", f"observables must have dimension {dim}")

    if "hamiltonian" in doc:
        h = _complex_matrix(doc["hamiltonian"], "hamiltonian")
        try:
            obs_b = evolve_observable(obs_b, h, float(doc.get("dt", 1.0)))
        except ValueError as exc:
            _fail("hamiltonian", str(exc))
    elif "dt" in doc:
        _fail("dt", "'dt' needs a 'hamiltonian'")

    k_values = _parse_k_grid(doc)

    shots_spec = doc.get("shots", "exact")
    if shots_spec == "exact":
        shots = None
    else:
        shots = int(shots_spec)
        if shots < 1:
            _fail("shots", f"must be at least 1, got {shots}")

    try:
        noise = NoiseModel(float(doc.get("noise", 1.0)))
    except ValueError as exc:
        _fail("noise", str(exc))

    resamples = int(doc.get("resamples", 1000))
    if shots is not None and resamples < 100:
        _fail("resamples", f"need at least 100, got {resamples}")

    outputs = tuple(doc.get("outputs", QUANTITIES))
    bad = set(outputs) - set(QUANTITIES)
    if bad:
        _fail("outputs", f"unknown quantities {sorted(bad)}; available: {list(QUANTITIES)}")

    engine = doc.get("engine", "circuit")
    if engine not in ("circuit", "closed"):
        _fail("engine", f"must be 'circuit' or 'closed', got {engine!r}")
    if engine == "closed" and not noise.is_ideal:
        _fail("engine", "the closed-form engine cannot model gate noise; use 'circuit'")

    return ScenarioConfig(
        rho=rho,
        obs_a=obs_a,
        obs_b=obs_b,
        k_values=k_values,
        shots=shots,
        noise=noise,
        resamples=resamples,
        seed=int(doc.get("seed", 0)),
        outputs=outputs,
        engine=engine,
    )


def _fmt(value: float) -> str:
    return f"{value:.12g}"


def _write_table(path: Path, rows: list[tuple]):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        writer.writerows(rows)


def run(config: ScenarioConfig, out_dir: str | Path) -> dict:
    """Evaluate the scenario and write per-quantity CSV tables plus summary.json.

    Returns the summary document.  Tables carry one row per (K, cell) in
    ascending K order with 12-significant-digit decimal values; the
    reconstructed-MHQ table covers only strengths where the inversion exists.
    """
    started = time.monotonic()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    k_values = tuple(sorted(config.k_values))
    records = run_sweep(
        config.rho,
        config.obs_a,
        config.obs_b,
        k_values,
        shots=config.shots,
        noise=config.noise,
        resamples=config.resamples,
        seed=config.seed,
        engine=config.engine,
    )
    labels_a = config.obs_a.labels
    labels_b = config.obs_b.labels
    strong = {"cq": cq(config.rho, config.obs_a, config.obs_b).values,
              "mhq": mhq(config.rho, config.obs_a, config.obs_b).values}

    tables: dict[str, list[tuple]] = {q: [] for q in config.outputs if q != "thresholds"}
    negativity_totals: dict[str, dict[str, float]] = {}
    residuals: dict[str, dict[str, float]] = {}

    def emit(quantity: str, k: float, values: np.ndarray, stderr: np.ndarray | None):
        err = np.zeros_like(values) if stderr is None else stderr
        for a in range(values.shape[0]):
            for b in range(values.shape[1]):
                tables[quantity].append(
                    (_fmt(k), labels_a[a], labels_b[b], quantity, _fmt(values[a, b]), _fmt(err[a, b]))
                )

    for record in records:
        k = record.strength.K
        key = _fmt(k)
        per_quantity = {
            "p_weak": (record.p_weak.values, record.errors["p_weak"]),
            "cq": (strong["cq"], None),
            "mhq": (strong["mhq"], None),
            "weak_cq": (record.weak_cq.values, record.errors["weak_cq"]),
            "weak_mhq": (
                (record.weak_mhq.values, record.errors["weak_mhq"])
                if record.weak_mhq is not None
                else None
            ),
            "C": (record.coherence, record.errors["C"]),
            "mhq_reconstructed": (
                (record.mhq_reconstructed.values, record.errors["mhq_reconstructed"])
                if record.mhq_reconstructed is not None
                else None
            ),
        }
        for quantity in tables:
            entry = per_quantity[quantity]
            if entry is None:
                continue
            values, stderr = entry
            emit(quantity, k, values, stderr)
            if quantity != "C":  # the cross-term is not itself a distribution
                negativity_totals.setdefault(quantity, {})[key] = negativity(values)
                residuals.setdefault(quantity, {})[key] = abs(float(values.sum()) - 1.0)

    for quantity, rows in tables.items():
        _write_table(out / f"{quantity}.csv", rows)

    summary = {
        "seed": config.seed,
        "shots": config.shots if config.shots is not None else "exact",
        "gate_visibility": config.noise.gate_visibility,
        "engine": config.engine,
        "k_values": [_fmt(k) for k in k_values],
        "negativity": negativity_totals,
        "normalization_residuals": residuals,
        "runtime_seconds": round(time.monotonic() - started, 3),
    }
    if "thresholds" in config.outputs:
        report = threshold_strength(config.rho, config.obs_a, config.obs_b)
        cells = []
        for a in range(config.obs_a.dim):
            for b in range(config.obs_b.dim):
                value = report.per_cell[a, b]
                cells.append(
                    {
                        "a": labels_a[a],
                        "b": labels_b[b],
                        "K_threshold": "never-negative" if math.isinf(value) else float(_fmt(value)),
                    }
                )
        summary["thresholds"] = {
            "per_cell": cells,
            "global": (
                "never-negative"
                if math.isinf(report.global_threshold)
                else float(_fmt(report.global_threshold))
            ),
        }
    with open(out / "summary.json", "w", encoding="utf-8", newline="") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary


def _read_table(path: Path) -> dict[tuple, tuple[float, float]]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader, ()))
        if header != CSV_HEADER:
            raise ValueError(f"schema mismatch in {path}: header {header}, expected {CSV_HEADER}")
        rows = {}
        for row in reader:
            key = (row[0], row[1], row[2], row[3])
            rows[key] = (float(row[4]), float(row[5]))
    return rows


def compare(path_a: str | Path, path_b: str | Path, tolerance: float) -> tuple[list[str], bool]:
    """Row-wise absolute differences between two exported tables.

    Returns (report lines, ok); ok is False when any value differs by more
    than the tolerance.  Mismatched headers or row sets raise ValueError.
    """
    rows_a = _read_table(Path(path_a))
    rows_b = _read_table(Path(path_b))
    if rows_a.keys() != rows_b.keys():
        only_a = sorted(rows_a.keys() - rows_b.keys())[:3]
        only_b = sorted(rows_b.keys() - rows_a.keys())[:3]
        raise ValueError(f"row sets differ (e.g. only in a: {only_a}, only in b: {only_b})")
    report = []
    worst = 0.0
    for key in sorted(rows_a):
        diff = abs(rows_a[key][0] - rows_b[key][0])
        worst = max(worst, diff)
        if diff > tolerance:
            report.append(f"exceeds tolerance at K={key[0]} ({key[1]},{key[2]}) {key[3]}: |diff|={diff:.3e}")
    report.append(f"max |diff| = {worst:.3e} over {len(rows_a)} rows (tolerance {tolerance:g})")
    return report, worst <= tolerance


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="weakquasi",
        description="Weak-sequential measurement sweeps and figure-data export.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="evaluate a scenario config and export CSV tables")
    p_run.add_argument("config", help="path to the JSON scenario document")
    p_run.add_argument("--out", default="out", help="output directory (default: ./out)")
    p_run.add_argument("--seed", type=int, default=None, help="override the config seed")
    mode = p_run.add_mutually_exclusive_group()
    mode.add_argument("--exact", action="store_true", help="force exact (infinite-statistics) mode")
    mode.add_argument("--shots", type=int, default=None, help="override the per-setting shot count")

    p_cmp = sub.add_parser("compare", help="diff two exported tables within a tolerance")
    p_cmp.add_argument("table_a")
    p_cmp.add_argument("table_b")
    p_cmp.add_argument("--tol", type=float, required=True, help="maximum allowed |difference|")

    args = parser.parse_args(argv)

    if args.command == "run":
        try:
            config = parse_config(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, ConfigError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        if args.seed is not None:
            config = replace(config, seed=args.seed)
        if args.exact:
            config = replace(config, shots=None)
        elif args.shots is not None:
            config = replace(config, shots=args.shots)
        summary = run(config, args.out)
        written = sorted(q for q in config.outputs if q != "thresholds")
        print(f"wrote {', '.join(q + '.csv' for q in written)} and summary.json to {args.out}")
        print(f"runtime: {summary['runtime_seconds']} s, seed {summary['seed']}, shots {summary['shots']}")
        return 0

    try:
        report, ok = compare(args.table_a, args.table_b, args.tol)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for line in report:
        print(line)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
