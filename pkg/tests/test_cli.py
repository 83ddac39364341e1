import json
import math
from pathlib import Path

import numpy as np
import pytest

from reporterspin.cli import main
from reporterspin.experiment_io import (
    load_fit_result,
    load_probability_map,
    load_table,
    load_trace,
)
from reporterspin.inference import fit_gyromagnetic

CONFIG_DIR = Path(__file__).resolve().parent.parent / "demos" / "configs"
GAMMA_P = 0.026766369408585036


def write_json(path, data):
    path.write_text(json.dumps(data, indent=2))
    return path


class TestSimulate:
    def test_eseem_fixture_fft_peaks(self, tmp_path):
        out = tmp_path / "eseem.trace"
        rc = main(
            [
                "simulate",
                "--config",
                str(CONFIG_DIR / "nv_a_eseem.json"),
                "--out",
                str(out),
                "--quiet",
            ]
        )
        assert rc == 0
        trace = load_trace(out)
        # spectral content at the two branch frequencies, read off in the
        # inter-pulse-delay variable tau = t/2 (zero-padded FFT, local maxima)
        tau = 0.5 * trace.abscissa
        sig = trace.signal - trace.signal.mean()
        spect = np.abs(np.fft.rfft(sig, n=4 * len(sig)))
        freqs = 2 * math.pi * np.fft.rfftfreq(4 * len(sig), d=tau[1] - tau[0])
        peaks = [
            freqs[i]
            for i in range(1, len(spect) - 1)
            if spect[i] > spect[i - 1] and spect[i] > spect[i + 1]
        ]
        assert any(abs(f - 30.8) < 1.0 for f in peaks)
        assert any(abs(f - 56.0) < 1.0 for f in peaks)
        # manifest written alongside
        manifest = json.loads((tmp_path / "eseem.trace.manifest.json").read_text())
        assert manifest["outputs"] == [str(out)]
        assert manifest["constants_version"] == 1

    def test_bath_fixture_first_minimum(self, tmp_path):
        out = tmp_path / "bath.trace"
        rc = main(
            [
                "simulate",
                "--config",
                str(CONFIG_DIR / "fig3a_bath.json"),
                "--out",
                str(out),
                "--quiet",
            ]
        )
        assert rc == 0
        trace = load_trace(out)
        first = trace.abscissa < 1.2
        t_min = trace.abscissa[first][np.argmin(trace.signal[first])]
        step = trace.abscissa[1] - trace.abscissa[0]
        # echo decay drags the discrete argmin slightly past the collapse
        assert t_min == pytest.approx(0.613, abs=2 * step)

    def test_flat_deer_with_zero_flip(self, tmp_path):
        config = json.loads((CONFIG_DIR / "deer_single.json").read_text())
        config["model"]["params"]["flip_prob"] = 0.0
        config["model"]["params"]["t2_nv"] = 1e9
        cfg = write_json(tmp_path / "c.json", config)
        out = tmp_path / "deer.trace"
        assert main(["simulate", "--config", str(cfg), "--out", str(out), "--quiet"]) == 0
        trace = load_trace(out)
        assert np.allclose(trace.signal, 1.0, atol=1e-6)

    def test_schema_error_exit_code(self, tmp_path):
        cfg = write_json(tmp_path / "bad.json", {"version": 1})
        rc = main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "x"), "--quiet"])
        assert rc == 2

    def test_rerun_is_byte_identical(self, tmp_path):
        out1 = tmp_path / "a.trace"
        out2 = tmp_path / "b.trace"
        for out in (out1, out2):
            main(
                [
                    "simulate",
                    "--config",
                    str(CONFIG_DIR / "nv_a_eseem.json"),
                    "--out",
                    str(out),
                    "--quiet",
                ]
            )
        assert out1.read_bytes() == out2.read_bytes()


class TestOracle:
    def test_echo_config_matches_branch_content(self, tmp_path):
        out = tmp_path / "oracle.trace"
        rc = main(
            [
                "oracle",
                "--config",
                str(CONFIG_DIR / "oracle_reporter_echo.json"),
                "--out",
                str(out),
                "--quiet",
            ]
        )
        assert rc == 0
        trace = load_trace(out)
        assert len(trace) == 60
        assert np.all(np.abs(trace.signal) <= 1.0 + 1e-9)
        assert trace.signal[0] == pytest.approx(1.0, abs=1e-9)

    def test_empty_sequence_sanity(self, tmp_path):
        config = json.loads((CONFIG_DIR / "oracle_reporter_echo.json").read_text())
        config["sequence"] = {"elements": [{"type": "readout", "axis": "z", "spin": 0}]}
        cfg = write_json(tmp_path / "c.json", config)
        out = tmp_path / "o.trace"
        assert main(["oracle", "--config", str(cfg), "--out", str(out), "--quiet"]) == 0
        trace = load_trace(out)
        assert trace.signal[0] == pytest.approx(1.0, abs=1e-12)

    def test_dimension_error_exit_code(self, tmp_path):
        config = json.loads((CONFIG_DIR / "oracle_reporter_echo.json").read_text())
        config["scene"]["proton_sites"] = [
            [3.0 + 0.3 * (k + 1), 0.0, 3.0] for k in range(12)
        ]
        config["scene"]["surface_tolerance"] = 1.0
        cfg = write_json(tmp_path / "c.json", config)
        rc = main(["oracle", "--config", str(cfg), "--out", str(tmp_path / "x"), "--quiet"])
        assert rc == 4


class TestFitCommand:
    def test_fit_noiseless_synthetic(self, tmp_path):
        sim_out = tmp_path / "t1.trace"
        config = {
            "version": 1,
            "seed": 0,
            "model": {"id": "exp_decay", "params": {"t1": 29.4}},
            "abscissa": {"start": 0.5, "stop": 90.0, "num": 61},
        }
        cfg = write_json(tmp_path / "c.json", config)
        main(["simulate", "--config", str(cfg), "--out", str(sim_out), "--quiet"])
        fit_out = tmp_path / "fit.json"
        rc = main(
            [
                "fit",
                "--data",
                str(sim_out),
                "--model",
                "exp_decay",
                "--init",
                "t1=10",
                "--bounds",
                "t1=1:200",
                "--out",
                str(fit_out),
                "--quiet",
            ]
        )
        assert rc == 0
        fit = load_fit_result(fit_out)
        assert fit.parameters["t1"] == pytest.approx(29.4, rel=1e-6)

    def test_convergence_error_exit_code(self, tmp_path):
        bad = tmp_path / "bad.trace"
        bad.write_text(
            "# reporterspin-trace version=1\n# columns=abscissa signal sigma\n"
            "0 nan 0.1\n1 nan 0.1\n2 nan 0.1\n"
        )
        rc = main(
            [
                "fit",
                "--data",
                str(bad),
                "--model",
                "exp_decay",
                "--init",
                "t1=10",
                "--out",
                str(tmp_path / "f.json"),
                "--quiet",
            ]
        )
        assert rc == 3


class TestSynthAndLocalize:
    def test_multi_angle_pipeline(self, tmp_path):
        out_dir = tmp_path / "dataset"
        angles = "0:0,45:0,45:60,45:120,45:180,45:240,45:300"
        rc = main(
            [
                "synth",
                "--config",
                str(CONFIG_DIR / "deer_single.json"),
                "--out",
                str(out_dir),
                "--angles",
                angles,
                "--seed",
                "11",
                "--quiet",
            ]
        )
        assert rc == 0
        manifest = out_dir / "dataset.json"
        assert manifest.exists()
        map_out = tmp_path / "map.json"
        rc = main(
            [
                "localize",
                "--dataset",
                str(manifest),
                "--grid=-5:5:-5:5:0.5",
                "--depth",
                "3.0",
                "--n-spins",
                "1",
                "--t2-nv",
                "5.0",
                "--out",
                str(map_out),
                "--quiet",
            ]
        )
        assert rc == 0
        pmap = load_probability_map(map_out)
        assert pmap.total == pytest.approx(1.0, abs=1e-9)
        ax, ay = pmap.argmax()
        assert math.hypot(ax - 2.25, ay - 1.25) <= 1.0
        sites = json.loads((tmp_path / "map.sites.json").read_text())
        assert len(sites["best_sites_nm"]) == 1

    def test_synth_single_trace(self, tmp_path):
        out = tmp_path / "noisy.trace"
        rc = main(
            [
                "synth",
                "--config",
                str(CONFIG_DIR / "nv_a_eseem.json"),
                "--out",
                str(out),
                "--seed",
                "3",
                "--quiet",
            ]
        )
        assert rc == 0
        trace = load_trace(out)
        assert trace.sigma.size == len(trace)
        assert trace.sigma[0] == pytest.approx(0.105, abs=5e-4)


class TestScanField:
    def test_slope_recovers_gyromagnetic_ratio(self, tmp_path):
        out = tmp_path / "scan.dat"
        rc = main(
            [
                "scan-field",
                "--config",
                str(CONFIG_DIR / "fig3a_bath.json"),
                "--out",
                str(out),
                "--fields",
                "383,450,500,560,619",
                "--seed",
                "2",
                "--quiet",
            ]
        )
        assert rc == 0
        table = load_table(out)
        fit = fit_gyromagnetic(
            np.column_stack([table["field_G"], table["omega_n"], table["sigma"]])
        )
        assert abs(fit.slope - GAMMA_P) < 2 * fit.slope_sigma
        assert fit.slope == pytest.approx(GAMMA_P, rel=0.02)
