"""Experiment configuration ingestion, noise synthesis, and persistence.

All formats are human-diffable text: JSON for configs, fit results and
probability maps; '#'-headed key=value plus whitespace-separated columns for
traces.  Floats are written with 17 significant digits so round trips are
bit-exact (beyond the declared 15-digit precision).
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import SchemaError, VersionMismatchError
from .physics import FieldSetting, SpinSystem
from .signals import MODELS, SignalTrace

CONFIG_VERSION = 1
TRACE_VERSION = 1
FILE_VERSION = 1  # fit results, maps, dataset manifests


# ---------------------------------------------------------------------------
# noise model and synthesis
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NoiseModel:
    """Photon-shot-noise model of the averaged readout.

    Per-point standard deviation in the [-1, +1] population convention:
    sigma = 1 / (contrast * sqrt(repetitions * photons_per_readout)).
    The contrast and photon yield are instrument calibration knobs, not
    measured quantities; defaults are typical shallow-NV values.
    """

    repetitions: float = 5e6
    contrast: float = 0.03
    photons_per_readout: float = 0.02

    def __post_init__(self):
        if self.repetitions <= 0 or self.photons_per_readout <= 0:
            raise ValueError("repetitions and photons_per_readout must be > 0")
        if not 0.0 < self.contrast <= 1.0:
            raise ValueError("contrast must be in (0, 1]")

    @property
    def sigma(self) -> float:
        return 1.0 / (
            self.contrast * math.sqrt(self.repetitions * self.photons_per_readout)
        )


def synthesize_trace(trace: SignalTrace, noise: NoiseModel, seed: int) -> SignalTrace:
    """Add independent Gaussian shot noise to a noiseless model trace.

    Deterministic per seed.  Draws are redrawn (deterministically) in the
    <1e-6 tail where a point would leave the [-1-5s, 1+5s] validity band,
    so the output always satisfies the trace invariants.
    """
    if trace.sigma.size:
        raise ValueError("synthesize_trace expects a noiseless model trace")
    rng = np.random.default_rng(seed)
    sigma = noise.sigma
    signal = trace.signal + rng.normal(0.0, sigma, size=len(trace))
    bad = (signal > 1.0 + 5.0 * sigma) | (signal < -1.0 - 5.0 * sigma)
    while np.any(bad):
        signal[bad] = trace.signal[bad] + rng.normal(0.0, sigma, size=int(bad.sum()))
        bad = (signal > 1.0 + 5.0 * sigma) | (signal < -1.0 - 5.0 * sigma)
    meta = dict(trace.meta)
    meta.update(
        {
            "seed": seed,
            "repetitions": noise.repetitions,
            "contrast": noise.contrast,
            "photons_per_readout": noise.photons_per_readout,
        }
    )
    return SignalTrace(
        abscissa=trace.abscissa.copy(),
        signal=signal,
        sigma=np.full(len(trace), sigma),
        meta=meta,
    )


# ---------------------------------------------------------------------------
# config schema
# ---------------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    """Validated experiment description.

    Either `model` (a named analytic model plus params) or `sequence`
    (a sweepable pulse-sequence spec for the oracle) drives the run; both
    may be present (e.g. for oracle-vs-model comparisons).
    """

    scene: SpinSystem | None
    model: str | None
    model_params: dict
    sequence: dict | None
    abscissa: np.ndarray
    noise: NoiseModel | None
    seed: int
    raw: dict


def _require(mapping: dict, key: str, where: str):
    if key not in mapping:
        raise SchemaError(f"{where}: missing required field {key!r}")
    return mapping[key]


def _as_vector(value, where: str, length: int = 3) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{where}: expected a numeric array") from exc
    if arr.shape != (length,):
        raise SchemaError(f"{where}: expected a length-{length} vector")
    return arr


def _parse_scene(data: dict, where: str = "scene") -> SpinSystem:
    if not isinstance(data, dict):
        raise SchemaError(f"{where}: expected an object")
    field_data = _require(data, "field", where)
    magnitude = _require(field_data, "magnitude", f"{where}.field")
    direction = _as_vector(
        field_data.get("direction", [0.0, 0.0, 1.0]), f"{where}.field.direction"
    )
    try:
        field = FieldSetting(float(magnitude), direction)
    except ValueError as exc:
        raise SchemaError(f"{where}.field: {exc}") from exc
    reporters = np.asarray(data.get("reporter_sites", []), dtype=float).reshape(-1, 3)
    protons = np.asarray(data.get("proton_sites", []), dtype=float).reshape(-1, 3)
    try:
        return SpinSystem(
            nv_position=_as_vector(data.get("nv_position", [0, 0, 0]), f"{where}.nv_position"),
            nv_axis=_as_vector(data.get("nv_axis", [1, 1, 1]), f"{where}.nv_axis"),
            reporter_sites=reporters,
            proton_sites=protons,
            field=field,
            surface_z=data.get("surface_z"),
            surface_tolerance=float(data.get("surface_tolerance", 0.1)),
        )
    except ValueError as exc:
        raise SchemaError(f"{where}: {exc}") from exc


def _parse_abscissa(data, where: str = "abscissa") -> np.ndarray:
    if isinstance(data, dict) and "values" in data:
        grid = np.asarray(data["values"], dtype=float)
    elif isinstance(data, dict):
        for key in ("start", "stop", "num"):
            _require(data, key, where)
        grid = np.linspace(
            float(data["start"]), float(data["stop"]), int(data["num"])
        )
    else:
        grid = np.asarray(data, dtype=float)
    if grid.ndim != 1 or len(grid) == 0:
        raise SchemaError(f"{where}: expected a non-empty 1-d grid")
    if len(grid) > 1 and not np.all(np.diff(grid) > 0):
        raise SchemaError(f"{where}: grid must be strictly increasing")
    return grid


def parse_config(data: dict, source: str = "<config>") -> ExperimentConfig:
    if not isinstance(data, dict):
        raise SchemaError(f"{source}: top level must be an object")
    version = _require(data, "version", source)
    if version != CONFIG_VERSION:
        raise VersionMismatchError(
            f"{source}: config version {version} != supported {CONFIG_VERSION}"
        )
    scene = _parse_scene(data["scene"], "scene") if "scene" in data else None
    model = None
    model_params: dict = {}
    if "model" in data:
        model_block = data["model"]
        model = _require(model_block, "id", "model")
        model_params = dict(model_block.get("params", {}))
        scene_models = ("deer", "nv_echo", "deer_spectrum")
        if model not in MODELS and model not in scene_models:
            raise SchemaError(f"model.id: unknown model {model!r}")
    sequence = data.get("sequence")
    if sequence is not None and not isinstance(sequence, dict):
        raise SchemaError("sequence: expected an object")
    noise = None
    if "noise" in data:
        nd = data["noise"]
        try:
            noise = NoiseModel(
                repetitions=float(_require(nd, "repetitions", "noise")),
                contrast=float(_require(nd, "contrast", "noise")),
                photons_per_readout=float(
                    _require(nd, "photons_per_readout", "noise")
                ),
            )
        except ValueError as exc:
            raise SchemaError(f"noise: {exc}") from exc
    abscissa = _parse_abscissa(_require(data, "abscissa", source))
    seed = int(data.get("seed", 0))
    if model is None and sequence is None:
        raise SchemaError(f"{source}: need at least one of 'model' or 'sequence'")
    return ExperimentConfig(
        scene=scene,
        model=model,
        model_params=model_params,
        sequence=sequence,
        abscissa=abscissa,
        noise=noise,
        seed=seed,
        raw=data,
    )


def load_config(path: str | os.PathLike) -> ExperimentConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from exc
    return parse_config(data, source=str(path))


def save_config(data: dict, path: str | os.PathLike):
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# trace tables
# ---------------------------------------------------------------------------


def save_trace(trace: SignalTrace, path: str | os.PathLike):
    """Write a trace as '#' key=value headers plus plot-ready columns."""
    lines = [f"# reporterspin-trace version={TRACE_VERSION}"]
    for key in sorted(trace.meta):
        lines.append(f"# {key}={trace.meta[key]}")
    has_sigma = bool(trace.sigma.size)
    columns = "abscissa signal sigma" if has_sigma else "abscissa signal"
    lines.append(f"# columns={columns}")
    for idx in range(len(trace)):
        row = [f"{trace.abscissa[idx]:.17g}", f"{trace.signal[idx]:.17g}"]
        if has_sigma:
            row.append(f"{trace.sigma[idx]:.17g}")
        lines.append(" ".join(row))
    Path(path).write_text("\n".join(lines) + "\n")


def load_trace(path: str | os.PathLike) -> SignalTrace:
    path = Path(path)
    meta: dict = {}
    rows = []
    columns = None
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, _, value = body.partition("=")
                key = key.strip()
                if key == "reporterspin-trace version":
                    pass
                meta[key] = value.strip()
            continue
        parts = line.split()
        try:
            rows.append([float(p) for p in parts])
        except ValueError as exc:
            raise SchemaError(f"{path}:{lineno}: non-numeric value") from exc
    header_version = meta.pop("reporterspin-trace version", None)
    if header_version is not None and int(header_version) != TRACE_VERSION:
        raise VersionMismatchError(
            f"{path}: trace version {header_version} != supported {TRACE_VERSION}"
        )
    columns = meta.pop("columns", "abscissa signal sigma")
    ncol = len(columns.split())
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    data = np.asarray(rows, dtype=float)
    if data.shape[1] != ncol:
        raise SchemaError(
            f"{path}: expected {ncol} columns ({columns}), found {data.shape[1]}"
        )
    sigma = data[:, 2] if ncol == 3 else np.array([])
    # restore numeric metadata where possible
    parsed_meta = {}
    for key, value in meta.items():
        try:
            parsed_meta[key] = int(value)
        except ValueError:
            try:
                parsed_meta[key] = float(value)
            except ValueError:
                parsed_meta[key] = value
    return SignalTrace(data[:, 0], data[:, 1], sigma, parsed_meta)


def save_table(columns: dict, path: str | os.PathLike, meta: dict | None = None):
    """Write named columns as a '#'-headed whitespace table (e.g. omega_n vs B)."""
    names = list(columns)
    arrays = [np.asarray(columns[n], dtype=float) for n in names]
    length = len(arrays[0])
    if any(len(a) != length for a in arrays):
        raise ValueError("all columns must have equal length")
    lines = [f"# reporterspin-table version={TRACE_VERSION}"]
    for key in sorted(meta or {}):
        lines.append(f"# {key}={meta[key]}")
    lines.append(f"# columns={' '.join(names)}")
    for idx in range(length):
        lines.append(" ".join(f"{a[idx]:.17g}" for a in arrays))
    Path(path).write_text("\n".join(lines) + "\n")


def load_table(path: str | os.PathLike) -> dict:
    """Read a '#'-headed column table back into {name: array}."""
    path = Path(path)
    names = None
    rows = []
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("columns="):
                names = body[len("columns=") :].split()
            continue
        try:
            rows.append([float(p) for p in line.split()])
        except ValueError as exc:
            raise SchemaError(f"{path}:{lineno}: non-numeric value") from exc
    if names is None or not rows:
        raise SchemaError(f"{path}: missing columns header or data rows")
    data = np.asarray(rows, dtype=float)
    if data.shape[1] != len(names):
        raise SchemaError(f"{path}: column count mismatch")
    return {name: data[:, idx] for idx, name in enumerate(names)}


# ---------------------------------------------------------------------------
# fit results and probability maps (JSON)
# ---------------------------------------------------------------------------


def save_fit_result(fit, path: str | os.PathLike):
    payload = {
        "version": FILE_VERSION,
        "parameters": fit.parameters,
        "param_order": list(fit.param_order),
        "covariance": np.asarray(fit.covariance).tolist(),
        "chi2": fit.chi2,
        "reduced_chi2": fit.reduced_chi2,
        "dof": fit.dof,
        "singular_jacobian": fit.singular_jacobian,
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def load_fit_result(path: str | os.PathLike):
    from .inference import FitResult  # deferred to avoid an import cycle

    data = _load_versioned_json(path)
    for key in ("parameters", "param_order", "covariance", "reduced_chi2", "dof"):
        _require(data, key, str(path))
    return FitResult(
        parameters=dict(data["parameters"]),
        param_order=tuple(data["param_order"]),
        covariance=np.asarray(data["covariance"], dtype=float),
        chi2=float(data.get("chi2", math.nan)),
        reduced_chi2=float(data["reduced_chi2"]),
        dof=int(data["dof"]),
        singular_jacobian=bool(data.get("singular_jacobian", False)),
    )


def save_probability_map(pmap, path: str | os.PathLike):
    payload = {
        "version": FILE_VERSION,
        "axes": list(pmap.axes),
        "x_centers": pmap.x_centers.tolist(),
        "y_centers": pmap.y_centers.tolist(),
        "density": pmap.density.tolist(),
        "meta": pmap.meta,
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def load_probability_map(path: str | os.PathLike):
    from .inference import ProbabilityMap

    data = _load_versioned_json(path)
    for key in ("axes", "x_centers", "y_centers", "density"):
        _require(data, key, str(path))
    return ProbabilityMap(
        x_centers=np.asarray(data["x_centers"], dtype=float),
        y_centers=np.asarray(data["y_centers"], dtype=float),
        density=np.asarray(data["density"], dtype=float),
        axes=tuple(data["axes"]),
        meta=data.get("meta", {}),
    )


def _load_versioned_json(path: str | os.PathLike) -> dict:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from exc
    if not isinstance(data, dict):
        raise SchemaError(f"{path}: top level must be an object")
    version = data.get("version")
    if version != FILE_VERSION:
        raise VersionMismatchError(
            f"{path}: file version {version} != supported {FILE_VERSION}"
        )
    return data


# ---------------------------------------------------------------------------
# multi-angle dataset manifests
# ---------------------------------------------------------------------------


def save_dataset(entries, path: str | os.PathLike):
    """Write a multi-angle dataset manifest.

    entries: sequence of (FieldSetting, trace_path) with paths relative to
    the manifest location.
    """
    payload = {
        "version": FILE_VERSION,
        "entries": [
            {
                "field": {
                    "magnitude": field.magnitude,
                    "direction": field.direction.tolist(),
                },
                "trace": str(trace_path),
            }
            for field, trace_path in entries
        ],
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def load_dataset(path: str | os.PathLike):
    from .inference import MultiAngleDataset

    path = Path(path)
    data = _load_versioned_json(path)
    entries = []
    for idx, entry in enumerate(_require(data, "entries", str(path))):
        field_data = _require(entry, "field", f"{path}:entries[{idx}]")
        field = FieldSetting(
            float(_require(field_data, "magnitude", f"{path}:entries[{idx}].field")),
            _as_vector(
                _require(field_data, "direction", f"{path}:entries[{idx}].field"),
                f"{path}:entries[{idx}].field.direction",
            ),
        )
        trace = load_trace(path.parent / _require(entry, "trace", f"{path}:entries[{idx}]"))
        entries.append((field, trace))
    return MultiAngleDataset(entries=tuple(entries))
