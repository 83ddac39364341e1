"""Command-line frontend: reproducible simulation/oracle/fit/localize runs.

Every command reads a JSON config and/or data files, writes plot-ready text
outputs, and records a run manifest (<out>.manifest.json) listing the
command, resolved config, seed, constants version and output paths.
Re-running a command with the same inputs and seed reproduces the output
files byte for byte.

Exit codes: 0 success, 2 schema/config error, 3 fit non-convergence,
4 Hilbert-space dimension error, 1 any other failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from .constants import CONSTANTS
from .errors import (
    ConvergenceError,
    DimensionLimitError,
    ReporterSpinError,
    SchemaError,
)
from .experiment_io import (
    ExperimentConfig,
    NoiseModel,
    load_config,
    load_dataset,
    load_trace,
    save_dataset,
    save_fit_result,
    save_probability_map,
    save_table,
    save_trace,
    synthesize_trace,
)
from .inference import PlaneGrid, fit_trace, localize_reporters
from .oracle import (
    Delay,
    PairCoupling,
    Pulse,
    PulseSequence,
    Readout,
    oracle_deer_trace,
    oracle_echo_trace,
    run_sequence,
    system_from_scene,
    thermal_initial,
)
from .physics import FieldSetting, larmor_proton
from .signals import (
    MODELS,
    DecoherenceParams,
    SignalTrace,
    deer_signal,
    deer_spectrum,
    evaluate_model,
    nv_echo,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_SCHEMA = 2
EXIT_CONVERGENCE = 3
EXIT_DIMENSION = 4

SCENE_MODELS = ("deer", "nv_echo", "deer_spectrum")


# ---------------------------------------------------------------------------
# model dispatch
# ---------------------------------------------------------------------------


def _decoherence_from(params: dict) -> DecoherenceParams:
    return DecoherenceParams(
        t2_nv=float(params.get("t2_nv", 5.0)),
        t2_s=float(params.get("t2_s", 3.0)),
        t1_s=float(params.get("t1_s", 29.4)),
        rabi_decay=float(params.get("rabi_decay", 1.0)),
        stretch_exponent=float(params.get("stretch", 1.0)),
    )


def simulate_model_trace(config: ExperimentConfig, model_id: str | None = None) -> SignalTrace:
    """Evaluate the configured (or overridden) analytic model on the grid."""
    model = model_id or config.model
    if model is None:
        raise SchemaError("no model in the config and none given on the command line")
    t = config.abscissa
    params = config.model_params
    meta = {"model": model, "seed": config.seed}
    if config.scene is not None:
        meta["field_G"] = config.scene.field.magnitude
    if model in MODELS:
        signal = evaluate_model(model, t, params)
    elif model == "nv_echo":
        signal = nv_echo(t, _decoherence_from(params))
    elif model == "deer":
        if config.scene is None:
            raise SchemaError("model 'deer' needs a scene in the config")
        signal = deer_signal(
            t,
            config.scene,
            float(params.get("flip_prob", 1.0)),
            _decoherence_from(params),
        )
    elif model == "deer_spectrum":
        if config.scene is None:
            raise SchemaError("model 'deer_spectrum' needs a scene in the config")
        signal = deer_spectrum(
            t,
            config.scene,
            linewidth=float(params.get("linewidth", 30.0)),
            t_nv=float(params.get("t_nv", 1.0)),
            flip_prob=float(params.get("flip_prob", 1.0)),
            dec=_decoherence_from(params),
        )
    else:
        raise SchemaError(f"unknown model {model!r}")
    return SignalTrace(t, np.asarray(signal, float), np.array([]), meta)


def _parse_literal_sequence(elements: list) -> PulseSequence:
    parsed = []
    for idx, item in enumerate(elements):
        kind = item.get("type")
        if kind == "delay":
            parsed.append(Delay(float(item["duration"])))
        elif kind == "pulse":
            parsed.append(
                Pulse(
                    channel=item.get("channel", "reporter"),
                    axis=item.get("axis", "x"),
                    angle=float(item["angle"]),
                    duration=item.get("duration"),
                )
            )
        elif kind == "readout":
            parsed.append(Readout(axis=item.get("axis", "z"), spin=int(item.get("spin", 0))))
        else:
            raise SchemaError(f"sequence.elements[{idx}]: unknown type {kind!r}")
    try:
        return PulseSequence(tuple(parsed))
    except ValueError as exc:
        raise SchemaError(f"sequence: {exc}") from exc


def _oracle_system(config: ExperimentConfig):
    if config.scene is None:
        raise SchemaError("oracle runs need a scene in the config")
    block = config.raw.get("oracle", {})
    contact = {}
    for pair in block.get("contact_terms", []):
        contact[(int(pair["i"]), int(pair["j"]))] = float(pair["a0"])
    overrides = {}
    for pair in block.get("coupling_overrides", []):
        key = (int(pair["i"]), int(pair["j"]))
        if pair.get("kind") is None:
            overrides[key] = None
        else:
            overrides[key] = PairCoupling(
                kind=pair["kind"],
                zz=float(pair.get("zz", 0.0)),
                a=float(pair.get("a", 0.0)),
                b=float(pair.get("b", 0.0)),
            )
    return system_from_scene(
        config.scene,
        frame=block.get("frame", "rotating"),
        contact_terms=contact,
        coupling_overrides=overrides,
    )


def oracle_trace(config: ExperimentConfig) -> SignalTrace:
    """Execute the configured pulse sequence on the density-matrix oracle."""
    if config.sequence is None:
        raise SchemaError("oracle command needs a 'sequence' block in the config")
    system = _oracle_system(config)
    spec = config.sequence
    kind = spec.get("kind")
    if kind == "echo":
        return oracle_echo_trace(
            system, config.abscissa, channel=spec.get("channel", "reporter")
        )
    if kind == "deer":
        return oracle_deer_trace(
            system,
            config.abscissa,
            flip_prob=float(spec.get("flip_prob", 1.0)),
            flip_mode=spec.get("flip_mode", "coherent"),
        )
    if "elements" in spec:
        seq = _parse_literal_sequence(spec["elements"])
        result = run_sequence(system, seq, thermal_initial(system))
        return SignalTrace(
            np.array([0.0]),
            np.array([result.expectation]),
            np.array([]),
            {"sequence": "literal", "purity": result.purity},
        )
    raise SchemaError("sequence: need 'kind' ('echo'|'deer') or literal 'elements'")


# ---------------------------------------------------------------------------
# manifests and small parsers
# ---------------------------------------------------------------------------


def _write_manifest(out_path: Path, args, config_raw, seed, outputs, t0):
    manifest = {
        "command": " ".join(sys.argv) if sys.argv else "",
        "subcommand": args.command,
        "resolved_config": config_raw,
        "seed": seed,
        "constants_version": CONSTANTS.version,
        "outputs": [str(p) for p in outputs],
        "wall_time_s": round(time.monotonic() - t0, 3),
    }
    path = Path(str(out_path) + ".manifest.json")
    path.write_text(json.dumps(manifest, indent=2, default=str) + "\n")
    return path


def _parse_kv(text: str | None) -> dict:
    out = {}
    if not text:
        return out
    for chunk in text.split(","):
        if not chunk.strip():
            continue
        key, _, value = chunk.partition("=")
        if not _ or not key.strip():
            raise SchemaError(f"expected name=value, got {chunk!r}")
        out[key.strip()] = float(value)
    return out


def _parse_bounds(text: str | None) -> dict:
    out = {}
    if not text:
        return out
    for chunk in text.split(","):
        if not chunk.strip():
            continue
        key, _, value = chunk.partition("=")
        lo, sep, hi = value.partition(":")
        if not sep:
            raise SchemaError(f"expected name=lo:hi, got {chunk!r}")
        out[key.strip()] = (float(lo), float(hi))
    return out


def _parse_grid(text: str) -> PlaneGrid:
    parts = text.split(":")
    if len(parts) != 5:
        raise SchemaError("grid must be x0:x1:y0:y1:cell")
    x0, x1, y0, y1, cell = (float(p) for p in parts)
    return PlaneGrid(x0, x1, y0, y1, cell)


def _parse_angles(text: str) -> list[tuple[float, float]]:
    pairs = []
    for chunk in text.split(","):
        if not chunk.strip():
            continue
        polar, sep, azimuth = chunk.partition(":")
        pairs.append((float(polar), float(azimuth) if sep else 0.0))
    if not pairs:
        raise SchemaError("need at least one polar[:azimuth] pair")
    return pairs


def _direction(polar_deg: float, azimuth_deg: float) -> np.ndarray:
    th, ph = np.radians(polar_deg), np.radians(azimuth_deg)
    return np.array([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)])


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_simulate(args) -> int:
    t0 = time.monotonic()
    config = load_config(args.config)
    if args.seed is not None:
        config.seed = args.seed
    trace = simulate_model_trace(config, args.model)
    out = Path(args.out)
    save_trace(trace, out)
    _write_manifest(out, args, config.raw, config.seed, [out], t0)
    if not args.quiet:
        print(f"wrote {out} ({len(trace)} points, model={trace.meta.get('model')})")
    return EXIT_OK


def _cmd_oracle(args) -> int:
    t0 = time.monotonic()
    config = load_config(args.config)
    trace = oracle_trace(config)
    out = Path(args.out)
    save_trace(trace, out)
    _write_manifest(out, args, config.raw, config.seed, [out], t0)
    if not args.quiet:
        print(f"wrote {out} ({len(trace)} points, oracle)")
    return EXIT_OK


def _cmd_fit(args) -> int:
    t0 = time.monotonic()
    data = load_trace(args.data)
    init = _parse_kv(args.init)
    if not init:
        raise SchemaError("--init must name at least one free parameter")
    fit = fit_trace(
        args.model,
        data,
        init=init,
        bounds=_parse_bounds(args.bounds),
        fixed=_parse_kv(args.fixed),
        seed=args.seed or 0,
    )
    out = Path(args.out)
    save_fit_result(fit, out)
    _write_manifest(out, args, {"data": str(args.data)}, args.seed or 0, [out], t0)
    if not args.quiet:
        pairs = ", ".join(f"{k}={v:.6g}" for k, v in fit.parameters.items())
        print(f"fit {args.model}: {pairs}; reduced_chi2={fit.reduced_chi2:.3f}")
    return EXIT_OK


def _cmd_localize(args) -> int:
    t0 = time.monotonic()
    dataset = load_dataset(args.dataset)
    if ":" in args.depth:
        lo, _, hi = args.depth.partition(":")
        depth = (float(lo), float(hi))
    else:
        depth = float(args.depth)
    result = localize_reporters(
        dataset,
        _parse_grid(args.grid),
        nv_depth=depth,
        n_spins=args.n_spins,
        flip_prob=args.flip_prob,
        dec=DecoherenceParams(t2_nv=args.t2_nv),
        n_starts=args.starts,
        seed=args.seed or 0,
    )
    out = Path(args.out)
    save_probability_map(result.map, out)
    sites_path = out.with_suffix(".sites.json")
    sites_path.write_text(
        json.dumps(
            {
                "best_sites_nm": result.best_sites.tolist(),
                "best_chi2": result.best_chi2,
                "depth_nm": result.depth,
            },
            indent=2,
        )
        + "\n"
    )
    _write_manifest(out, args, {"dataset": str(args.dataset)}, args.seed or 0,
                    [out, sites_path], t0)
    if not args.quiet:
        print(f"wrote {out}; best chi2 {result.best_chi2:.2f}; "
              f"argmax at {result.map.argmax()}")
    return EXIT_OK


def _cmd_scan_field(args) -> int:
    t0 = time.monotonic()
    config = load_config(args.config)
    seed = args.seed if args.seed is not None else config.seed
    fields = [float(x) for x in args.fields.split(",") if x.strip()]
    if not fields:
        raise SchemaError("--fields must list at least one field in G")
    noise = config.noise or NoiseModel()
    params = dict(config.model_params)
    rows_omega, rows_sigma = [], []
    for idx, B in enumerate(fields):
        omega_true = larmor_proton(FieldSetting(B))
        params["omega_n"] = omega_true
        model = SignalTrace(
            config.abscissa,
            evaluate_model("bath_echo", config.abscissa, params),
            np.array([]),
            {},
        )
        noisy = synthesize_trace(model, noise, seed + idx)
        fit = fit_trace(
            "bath_echo",
            noisy,
            init={"omega_n": omega_true, "b_rms": params.get("b_rms", 0.3)},
            bounds={"omega_n": (0.3 * omega_true, 3.0 * omega_true),
                    "b_rms": (0.0, 10.0)},
            fixed={k: v for k, v in params.items() if k in ("t2_s", "stretch")},
            seed=seed + idx,
        )
        rows_omega.append(fit.parameters["omega_n"])
        rows_sigma.append(fit.sigma("omega_n"))
    out = Path(args.out)
    save_table(
        {"field_G": np.array(fields), "omega_n": np.array(rows_omega),
         "sigma": np.array(rows_sigma)},
        out,
        meta={"seed": seed, "model": "bath_echo"},
    )
    _write_manifest(out, args, config.raw, seed, [out], t0)
    if not args.quiet:
        print(f"wrote {out} ({len(fields)} fields)")
    return EXIT_OK


def _cmd_synth(args) -> int:
    t0 = time.monotonic()
    config = load_config(args.config)
    seed = args.seed if args.seed is not None else config.seed
    if config.noise is None:
        raise SchemaError("synth needs a 'noise' block in the config")
    if args.angles:
        if config.scene is None:
            raise SchemaError("synth --angles needs a scene in the config")
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        entries = []
        outputs = []
        for idx, (polar, azimuth) in enumerate(_parse_angles(args.angles)):
            field = FieldSetting(config.scene.field.magnitude, _direction(polar, azimuth))
            scene = replace(config.scene, field=field)
            model = SignalTrace(
                config.abscissa,
                deer_signal(
                    config.abscissa,
                    scene,
                    float(config.model_params.get("flip_prob", 1.0)),
                    _decoherence_from(config.model_params),
                ),
                np.array([]),
                {"model": "deer", "polar_deg": polar, "azimuth_deg": azimuth},
            )
            noisy = synthesize_trace(model, config.noise, seed + idx)
            name = f"angle_{idx:02d}.trace"
            save_trace(noisy, out_dir / name)
            entries.append((field, name))
            outputs.append(out_dir / name)
        manifest_path = out_dir / "dataset.json"
        save_dataset(entries, manifest_path)
        outputs.append(manifest_path)
        _write_manifest(out_dir / "dataset", args, config.raw, seed, outputs, t0)
        if not args.quiet:
            print(f"wrote {len(entries)}-angle dataset under {out_dir}")
        return EXIT_OK
    model = simulate_model_trace(config, args.model)
    noisy = synthesize_trace(model, config.noise, seed)
    out = Path(args.out)
    save_trace(noisy, out)
    _write_manifest(out, args, config.raw, seed, [out], t0)
    if not args.quiet:
        print(f"wrote {out} (sigma={config.noise.sigma:.4f})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reporterspin",
        description="Simulate, validate and invert surface-spin magnetic "
        "resonance experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--out", required=True, help="output file (or directory)")
        p.add_argument("--seed", type=int, default=None, help="seed override")
        p.add_argument("--quiet", action="store_true", help="suppress chatter")

    p = sub.add_parser("simulate", help="evaluate an analytic model trace")
    common(p)
    p.add_argument("--model", default=None, help="model id override")

    p = sub.add_parser("oracle", help="run the density-matrix oracle")
    common(p)

    p = sub.add_parser("fit", help="weighted least-squares trace fit")
    p.add_argument("--data", required=True, help="trace file to fit")
    p.add_argument("--model", required=True, help="registered model id")
    p.add_argument("--init", required=True, help="free params, e.g. a=60,b=40")
    p.add_argument("--bounds", default=None, help="bounds, e.g. a=0:150")
    p.add_argument("--fixed", default=None, help="fixed params, e.g. omega_n=16.57")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--quiet", action="store_true")

    p = sub.add_parser("localize", help="reporter position map from DEER data")
    p.add_argument("--dataset", required=True, help="multi-angle dataset manifest")
    p.add_argument("--grid", required=True, help="x0:x1:y0:y1:cell (nm)")
    p.add_argument("--depth", required=True, help="NV depth nm, or lo:hi interval")
    p.add_argument("--n-spins", type=int, default=1)
    p.add_argument("--flip-prob", type=float, default=1.0)
    p.add_argument("--t2-nv", type=float, default=5.0)
    p.add_argument("--starts", type=int, default=5)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--quiet", action="store_true")

    p = sub.add_parser("scan-field", help="omega_n vs B table (bath-echo fits)")
    common(p)
    p.add_argument("--fields", required=True, help="comma list of fields in G")

    p = sub.add_parser("synth", help="synthesize noisy data (optionally multi-angle)")
    common(p)
    p.add_argument("--model", default=None, help="model id override")
    p.add_argument(
        "--angles",
        default=None,
        help="comma list of field angles polar:azimuth in deg "
        "(emits a DEER dataset)",
    )
    return parser


_HANDLERS = {
    "simulate": _cmd_simulate,
    "oracle": _cmd_oracle,
    "fit": _cmd_fit,
    "localize": _cmd_localize,
    "scan-field": _cmd_scan_field,
    "synth": _cmd_synth,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except SchemaError as exc:
        print(f"error (schema): {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except ConvergenceError as exc:
        print(f"error (convergence): {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except DimensionLimitError as exc:
        print(f"error (dimension): {exc}", file=sys.stderr)
        return EXIT_DIMENSION
    except (ReporterSpinError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
