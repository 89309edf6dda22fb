"""Run configuration: TOML schema, defaults, validation and provenance hash.

Frequencies (omega, gamma, sigma, K*H_c, cutoffs) are angular rates in
s^-1; the static fringe is ``cos(N omega t)``. Times are in seconds.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigInvalid

SCENARIOS = ("calibrate", "ramsey", "parallel-scan", "sequential-scan",
             "kth-scan", "ac-dd", "zeno-check")

# sigma (s^-1) calibrated once with n_cal = 20000, seed 1, dt = 1 ms, for a
# single-qubit decay rate of 1 s^-1 fitted over [0, 1 s]. Keyed by
# (spectrum, cutoff). For other targets sigma scales as sqrt(gamma).
FROZEN_SIGMA = {
    ("white", None): 31.751364142748763,
    ("bandlimited", 80.0): 5.067185473700081,
}
FROZEN_DT = 1e-3


@dataclass(frozen=True)
class Field:
    key: str
    kind: type
    default: object
    unit: str = ""
    doc: str = ""
    choices: tuple = ()
    minimum: float | None = None
    positive: bool = False
    optional: bool = False


_NOT_SET = object()

SCHEMA = (
    Field("scenario", str, _NOT_SET, doc="what to run", choices=SCENARIOS),
    Field("seed", int, 1, doc="master seed of every noise stream", minimum=0),
    Field("output_dir", str, "out", doc="directory for CSV, JSON and log files"),
    Field("system.n_qubits", int, 4, doc="number of probe qubits", minimum=1),
    Field("encoding.omega", float, 20.0, "s^-1", "encoded frequency; fringe cos(N omega t)",
          minimum=0.0),
    Field("protocol.total_time", float, 0.25, "s", "encoding window T", positive=True),
    Field("protocol.slices", int, 250, doc="noise slices M over T", minimum=1),
    Field("protocol.realizations", int, 10, doc="noise realizations L", minimum=1),
    Field("protocol.samples_per_period", int, 6, doc="fringe sampling density",
          minimum=1),
    Field("protocol.trotter", str, "exact", doc="slice propagator",
          choices=("exact", "order1", "order2")),
    Field("coupling.kind", str, "ising", doc="coupling Hamiltonian H_c",
          choices=("ising", "dipolar", "quadratic_zeeman", "scalar", "none")),
    Field("coupling.k", float, 65.0, "s^-1", "coupling strength K", minimum=0.0),
    Field("noise.spectrum", str, "bandlimited", doc="x-field spectrum",
          choices=("white", "ou", "bandlimited")),
    Field("noise.gamma_target", float, 1.0, "s^-1", "single-qubit decay rate to emulate",
          minimum=0.0),
    Field("noise.sigma", float, None, "s^-1",
          "field strength; unset = frozen calibration or calibrate at run time",
          minimum=0.0, optional=True),
    Field("noise.cutoff", float, 80.0, "s^-1", "band edge (bandlimited only)",
          positive=True, optional=True),
    Field("noise.correlation_time", float, None, "s", "OU correlation time",
          positive=True, optional=True),
    Field("noise.calibration_realizations", int, 2000, doc="ensemble size for calibrate",
          minimum=1),
    Field("scan.n_list", list, [2, 3, 4, 5, 6], doc="qubit numbers scanned"),
    Field("scan.t_points", int, 16, doc="time points of the sequential scan", minimum=2),
    Field("kth.coupling", str, "quadratic_zeeman", doc="coupling used by kth-scan",
          choices=("ising", "dipolar", "quadratic_zeeman")),
    Field("kth.k_grid", list, [0, 2, 4, 6, 8, 10, 12, 14, 16, 20, 24, 28, 32, 40],
          "s^-1", "coupling strengths scanned"),
    Field("kth.time", float, 0.5, "s", "time at which the fringe amplitude is read",
          positive=True),
    Field("kth.level", float, 0.9, doc="amplitude threshold defining K_th", positive=True),
    Field("kth.realizations", int, 40, doc="noise realizations per grid cell", minimum=1),
    Field("acdd.omega", float, 50 * math.pi, "s^-1", "ac-field angular frequency",
          positive=True),
    Field("acdd.amplitude", float, 20.0, "s^-1", "ac-field amplitude A", positive=True),
    Field("acdd.t_list", list, [0.05, 0.1, 0.2, 0.4], "s", "encoding times scanned"),
    Field("acdd.n_list", list, [2, 3, 4, 5], doc="qubit numbers scanned"),
    Field("acdd.realizations", int, 40, doc="noise realizations per cell", minimum=1),
    Field("acdd.dd", bool, True, doc="insert pi pulses at the ac extrema"),
    Field("acdd.dephasing_sigma", float, 5.0, "s^-1", "z-field strength", minimum=0.0),
    Field("acdd.dephasing_cutoff", float, 10.0, "s^-1", "z-field band edge", positive=True),
)
_BY_KEY = {f.key: f for f in SCHEMA}
_NOT_HASHED = ("output_dir",)


@dataclass(frozen=True)
class RunConfig:
    """Resolved configuration: every schema key mapped to a value."""
    values: dict
    defaulted: tuple = ()
    source: str | None = None
    overrides: dict = field(default_factory=dict)

    def __getitem__(self, key: str):
        return self.values[key]

    def to_dict(self) -> dict:
        """Nested dict mirroring the TOML layout."""
        out: dict = {}
        for key, value in self.values.items():
            node = out
            *parents, leaf = key.split(".")
            for p in parents:
                node = node.setdefault(p, {})
            node[leaf] = value
        return out

    def digest(self) -> str:
        """SHA-256 of the canonical JSON of every value that can change results.

        ``output_dir`` is left out so the same run written elsewhere hashes alike.
        """
        hashed = {k: v for k, v in self.values.items() if k not in _NOT_HASHED}
        blob = json.dumps(hashed, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def describe(self) -> list[str]:
        """One line per field: value, unit and whether it was defaulted."""
        lines = []
        for f in SCHEMA:
            unit = f" [{f.unit}]" if f.unit else ""
            tag = "  (default)" if f.key in self.defaulted else ""
            lines.append(f"{f.key} = {self.values[f.key]!r}{unit}{tag}")
        return lines


def _flatten(doc: dict, prefix: str = "") -> dict:
    flat = {}
    for k, v in doc.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            flat.update(_flatten(v, key + "."))
        else:
            flat[key] = v
    return flat


def _coerce(f: Field, value, errors: list[str]):
    if value is None:
        if f.optional:
            return None
        errors.append(f"{f.key}: a value is required")
        return None
    if f.kind is bool:
        if not isinstance(value, bool):
            errors.append(f"{f.key}: expected true/false, got {value!r}")
        return value
    if f.kind is float and isinstance(value, (int, float)) and not isinstance(value, bool):
        value = float(value)
    elif f.kind is int and isinstance(value, int) and not isinstance(value, bool):
        pass
    elif f.kind is str and isinstance(value, str):
        pass
    elif f.kind is list and isinstance(value, list):
        if not value or not all(isinstance(x, (int, float)) and not isinstance(x, bool)
                                for x in value):
            errors.append(f"{f.key}: expected a non-empty list of numbers")
        return value
    else:
        errors.append(f"{f.key}: expected {f.kind.__name__}, got {value!r}")
        return value
    if f.choices and value not in f.choices:
        errors.append(f"{f.key}: {value!r} is not one of {', '.join(f.choices)}")
    if f.minimum is not None and value < f.minimum:
        errors.append(f"{f.key}: must be >= {f.minimum}, got {value!r}")
    if f.positive and value <= 0:
        errors.append(f"{f.key}: must be > 0, got {value!r}")
    return value


def resolve(doc: dict, overrides: dict | None = None, source: str | None = None) -> RunConfig:
    """Validate a parsed document and fill defaults; raises :class:`ConfigInvalid`.

    ``overrides`` (flat dotted keys, e.g. from the command line) win over
    the document. All problems are collected before raising.
    """
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    flat = _flatten(doc)
    flat.update(overrides)
    errors = [f"{k}: unknown field" for k in flat if k not in _BY_KEY]
    values, defaulted = {}, []
    for f in SCHEMA:
        if f.key in flat:
            values[f.key] = _coerce(f, flat[f.key], errors)
        elif f.default is _NOT_SET:
            errors.append(f"{f.key}: required field is missing")
        else:
            values[f.key] = list(f.default) if isinstance(f.default, list) else f.default
            defaulted.append(f.key)
    if not errors:
        errors.extend(_semantic_errors(values))
    if errors:
        raise ConfigInvalid("invalid configuration:\n  " + "\n  ".join(errors))
    return RunConfig(values=values, defaulted=tuple(defaulted), source=source,
                     overrides=overrides)


def _semantic_errors(v: dict) -> list[str]:
    errors = []
    if v["noise.spectrum"] == "bandlimited" and v["noise.cutoff"] is None:
        errors.append("noise.cutoff: required for the bandlimited spectrum")
    if v["noise.spectrum"] == "ou" and v["noise.correlation_time"] is None:
        errors.append("noise.correlation_time: required for the ou spectrum")
    if v["system.n_qubits"] > 10:
        errors.append("system.n_qubits: at most 10 qubits are supported")
    if v["scenario"] == "zeno-check" and v["system.n_qubits"] < 2:
        errors.append("system.n_qubits: zeno-check needs at least 2 qubits")
    for key in ("scan.n_list", "acdd.n_list"):
        if any(int(n) != n or not 1 <= n <= 10 for n in v[key]):
            errors.append(f"{key}: entries must be integers in 1..10")
    grid = list(v["kth.k_grid"])
    if any(x < 0 for x in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
        errors.append("kth.k_grid: must be non-negative and strictly ascending")
    if any(t <= 0 for t in v["acdd.t_list"]):
        errors.append("acdd.t_list: times must be > 0")
    return errors


def load(path, overrides: dict | None = None) -> RunConfig:
    """Parse a TOML file; syntax errors are reported with line and column."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigInvalid(f"cannot read {path}: {exc}") from exc
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigInvalid(f"{path}: {exc}") from exc
    return resolve(doc, overrides, source=str(path))


def frozen_sigma(spectrum: str, cutoff: float | None, gamma: float, dt: float) -> float | None:
    """Pre-calibrated field strength, or ``None`` when no entry applies."""
    if gamma == 0:
        return 0.0
    key = (spectrum, None if spectrum == "white" else cutoff)
    if key not in FROZEN_SIGMA or not math.isclose(dt, FROZEN_DT, rel_tol=1e-9):
        return None
    return FROZEN_SIGMA[key] * math.sqrt(gamma)
