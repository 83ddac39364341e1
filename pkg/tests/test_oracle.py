import math

import numpy as np
import pytest

from reporterspin.constants import CONSTANTS
from reporterspin.errors import DimensionLimitError, UnknownChannelError
from reporterspin.oracle import (
    Delay,
    OracleEngine,
    OracleSystem,
    PairCoupling,
    Pulse,
    PulseSequence,
    Readout,
    SpinSpec,
    build_hamiltonian,
    echo_sequence,
    oracle_bath_limit,
    oracle_deer_trace,
    oracle_echo_trace,
    run_sequence,
    system_from_scene,
    thermal_initial,
)
from reporterspin.physics import (
    FieldSetting,
    HyperfineParams,
    SpinSystem,
    eseem_frequencies,
    larmor_proton,
)
from reporterspin.signals import NO_DECAY, deer_signal, eseem_multi, eseem_single

Z = np.array([0.0, 0.0, 1.0])
FIELD_619 = FieldSetting(619.0, Z)
WN_619 = larmor_proton(FIELD_619)


def reporter_proton_system(a=66.0, b=52.0, field=FIELD_619, frame="rotating"):
    return OracleSystem(
        spins=(SpinSpec("electron", [0, 0, 0]), SpinSpec("proton", [0.3, 0, 0])),
        field=field,
        coupling_overrides={(0, 1): PairCoupling(kind="hyperfine", a=a, b=b)},
        frame=frame,
    )


def deer_scene(sites, field=FieldSetting(383.0, Z)):
    sites = np.asarray(sites, float).reshape(-1, 3)
    return SpinSystem(
        nv_position=[0, 0, 0],
        nv_axis=Z,
        reporter_sites=sites,
        proton_sites=np.zeros((0, 3)),
        field=field,
        surface_z=float(sites[0, 2]),
        surface_tolerance=50.0,
    )


def no_rr_overrides(n_reporters):
    """Switch off reporter-reporter couplings (spins 1..n after the NV)."""
    return {
        (i, j): None
        for i in range(1, n_reporters + 1)
        for j in range(i + 1, n_reporters + 1)
    }


class TestHamiltonian:
    def test_single_proton_zeeman_doublet(self):
        system = OracleSystem(
            spins=(SpinSpec("proton", [0, 0, 0]),), field=FieldSetting(383.0, Z)
        )
        H = build_hamiltonian(system)
        evals = np.linalg.eigvalsh(H)
        assert evals[-1] - evals[0] == pytest.approx(larmor_proton(system.field), rel=1e-12)

    def test_manifold_splittings_match_branch_frequencies(self):
        system = reporter_proton_system()
        H = build_hamiltonian(system)
        # basis order: electron (x) proton; electron-up block is the top-left
        up = H[:2, :2] + 0.0
        up[0, 0] -= 0  # keep dense layout explicit
        blocks = [H[0::1][:2, :2], H[2:, 2:]]
        splittings = sorted(
            float(np.diff(np.linalg.eigvalsh(block))[0]) for block in blocks
        )
        branches = eseem_frequencies(HyperfineParams(a=66.0, b=52.0), WN_619)
        expected = sorted([branches.omega_plus, branches.omega_minus])
        assert splittings == pytest.approx(expected, rel=1e-9)
        assert splittings == pytest.approx([30.76, 55.97], abs=0.01)

    def test_uncoupled_hamiltonian_is_diagonal(self):
        system = reporter_proton_system(a=0.0, b=0.0)
        H = build_hamiltonian(system)
        off = H - np.diag(np.diag(H))
        assert np.max(np.abs(off)) < 1e-14

    def test_hermiticity_random_scenes(self):
        rng = np.random.default_rng(21)
        for _ in range(5):
            sites = rng.uniform(-4, 4, size=(3, 3))
            sites[:, 2] = 0.0
            scene = deer_scene(sites, FieldSetting(383.0, rng.normal(size=3)))
            H = build_hamiltonian(system_from_scene(scene))
            assert np.max(np.abs(H - H.conj().T)) < 1e-12

    def test_dimension_limit(self):
        spins = tuple(SpinSpec("proton", [0.3 * k, 0, 0]) for k in range(13))
        with pytest.raises(DimensionLimitError):
            OracleSystem(spins=spins, field=FieldSetting(100.0, Z))


class TestSequences:
    def test_exactly_one_readout_at_end(self):
        with pytest.raises(ValueError):
            PulseSequence((Delay(1.0),))
        with pytest.raises(ValueError):
            PulseSequence((Readout("z", 0), Delay(1.0)))
        with pytest.raises(ValueError):
            PulseSequence((Readout("z", 0), Readout("z", 0)))

    def test_negative_durations_rejected(self):
        with pytest.raises(ValueError):
            Delay(-1.0)
        with pytest.raises(ValueError):
            Pulse("reporter", "x", math.pi, duration=-0.5)

    def test_empty_sequence_readout(self):
        system = reporter_proton_system()
        seq = PulseSequence((Readout("z", 0),))
        result = run_sequence(system, seq, ["up", "mixed"])
        assert result.expectation == pytest.approx(1.0, abs=1e-12)

    def test_pi_pulse_inverts(self):
        system = reporter_proton_system(a=0.0, b=0.0)
        seq = PulseSequence((Pulse(0, "x", math.pi), Readout("z", 0)))
        result = run_sequence(system, seq, ["up", "mixed"])
        assert result.expectation == pytest.approx(-1.0, abs=1e-12)

    def test_unknown_channel(self):
        system = OracleSystem(
            spins=(SpinSpec("electron", [0, 0, 0]),), field=FieldSetting(100.0, Z)
        )
        with pytest.raises(UnknownChannelError):
            run_sequence(
                system,
                PulseSequence((Pulse("proton", "x", math.pi), Readout("z", 0))),
                ["up"],
            )
        with pytest.raises(UnknownChannelError):
            run_sequence(
                system,
                PulseSequence((Pulse("bogus", "x", math.pi), Readout("z", 0))),
                ["up"],
            )


class TestStateIntegrity:
    def test_trace_purity_hermiticity_preserved(self):
        system = reporter_proton_system()
        engine = OracleEngine(system)
        rho = engine.initial_density(["up", "mixed"])
        seq = echo_sequence(0.7, 0, 0)
        for element in seq.elements[:-1]:
            if isinstance(element, Delay):
                U = engine.delay_unitary(element.duration)
            else:
                U = engine.rotation(element)
            rho = U @ rho @ U.conj().T
            assert abs(np.trace(rho).real - 1.0) < 1e-10
            assert np.max(np.abs(rho - rho.conj().T)) < 1e-10
        purity = float(np.real(np.trace(rho @ rho)))
        assert purity == pytest.approx(0.5, abs=1e-10)  # unitary keeps purity

    def test_result_diagnostics(self):
        system = reporter_proton_system()
        result = run_sequence(system, echo_sequence(0.4, 0, 0), ["up", "mixed"])
        assert 0.0 < result.purity <= 1.0 + 1e-12
        assert result.populations == pytest.approx(
            np.full(4, 0.25), abs=0.26
        )  # all populations physical
        assert np.all(result.populations >= -1e-12)
        assert abs(result.populations.sum() - 1.0) < 1e-10

    def test_stochastic_flip_reduces_purity(self):
        system = reporter_proton_system(a=0.0, b=0.0)
        seq = PulseSequence(
            (Pulse(0, "x", math.pi, flip_prob=0.5), Readout("z", 0))
        )
        result = run_sequence(system, seq, ["up", "up"])
        assert result.purity == pytest.approx(0.5, abs=1e-10)


class TestOracleVsAnalytic:
    def test_eseem_single_matches(self):
        system = reporter_proton_system()
        ts = np.linspace(0.0, 1.2, 120)
        trace = oracle_echo_trace(system, ts, channel=0)
        analytic = eseem_single(ts, HyperfineParams(a=66.0, b=52.0), WN_619)
        assert np.max(np.abs(trace.signal - analytic)) < 1e-10

    def test_eseem_respects_full_time_convention(self):
        # the echo argument is the full echo time: pin it by comparing the
        # oracle at t_s against the analytic model evaluated at tau = t_s/2
        system = reporter_proton_system()
        t_s = 0.62
        trace = oracle_echo_trace(system, np.array([t_s]), channel=0)
        analytic = eseem_single(np.array([t_s]), HyperfineParams(66.0, 52.0), WN_619)
        assert trace.signal[0] == pytest.approx(float(analytic[0]), abs=1e-10)
        wrong_convention = eseem_single(
            np.array([2 * t_s]), HyperfineParams(66.0, 52.0), WN_619
        )
        assert abs(trace.signal[0] - float(wrong_convention[0])) > 0.05

    def test_eseem_two_protons_matches(self):
        field = FieldSetting(665.0, Z)
        wn = larmor_proton(field)
        pairs = [(-11.17, 42.29), (-25.50, 14.00)]
        system = OracleSystem(
            spins=(
                SpinSpec("electron", [0, 0, 0]),
                SpinSpec("proton", [0.26, 0, 0]),
                SpinSpec("proton", [0, 0.32, 0]),
            ),
            field=field,
            coupling_overrides={
                (0, k + 1): PairCoupling(kind="hyperfine", a=a, b=b)
                for k, (a, b) in enumerate(pairs)
            },
        )
        ts = np.linspace(0.0, 1.0, 100)
        trace = oracle_echo_trace(system, ts, channel=0)
        analytic = eseem_multi(
            ts, [(HyperfineParams(a=a, b=b), wn) for a, b in pairs]
        )
        assert np.max(np.abs(trace.signal - analytic)) < 1e-10

    def test_deer_single_reporter_matches(self):
        scene = deer_scene([[3.0, 0, 0]])
        system = system_from_scene(scene)
        t = np.linspace(0, 1.0, 60)
        trace = oracle_deer_trace(system, t, flip_prob=1.0)
        analytic = deer_signal(t, scene, 1.0, NO_DECAY)
        assert np.max(np.abs(trace.signal - analytic)) < 1e-10

    def test_deer_flip_probability_mixture(self):
        scene = deer_scene([[3.0, 0, 0]])
        system = system_from_scene(scene)
        t = np.linspace(0, 1.0, 40)
        for mode in ("coherent", "stochastic"):
            trace = oracle_deer_trace(system, t, flip_prob=0.4, flip_mode=mode)
            analytic = deer_signal(t, scene, 0.4, NO_DECAY)
            assert np.max(np.abs(trace.signal - analytic)) < 1e-10

    def test_deer_zero_flip_is_flat(self):
        scene = deer_scene([[3.0, 0, 0]])
        trace = oracle_deer_trace(
            system_from_scene(scene), np.linspace(0, 2, 20), flip_prob=0.0
        )
        assert np.allclose(trace.signal, 1.0, atol=1e-10)

    def test_deer_two_reporters_product_rule(self):
        scene = deer_scene([[3.0, 0, 0], [0, -4.0, 0]])
        system = system_from_scene(scene, coupling_overrides=no_rr_overrides(2))
        t = np.linspace(0, 1.0, 50)
        trace = oracle_deer_trace(system, t, flip_prob=1.0)
        analytic = deer_signal(t, scene, 1.0, NO_DECAY)
        assert np.max(np.abs(trace.signal - analytic)) < 1e-10

    def test_reporter_reporter_coupling_breaks_product_rule(self):
        # with the physical flip-flop term included and unequal NV couplings
        # the analytic product model is only approximate; this pins why the
        # override exists (flip-flops between equally coupled reporters are
        # invisible to the NV and would not show up here)
        scene = deer_scene(
            [[3.0, 0, 0], [0, -3.0, 0]],
            field=FieldSetting(383.0, np.array([0.3, 0.2, 0.9])),
        )
        system = system_from_scene(scene)
        t = np.linspace(0, 1.0, 50)
        trace = oracle_deer_trace(system, t, flip_prob=1.0)
        analytic = deer_signal(t, scene, 1.0, NO_DECAY)
        assert np.max(np.abs(trace.signal - analytic)) > 1e-3


class TestFrames:
    def test_lab_and_rotating_agree_on_echo(self):
        ts = np.linspace(0.0, 0.9, 30)
        rot = oracle_echo_trace(reporter_proton_system(frame="rotating"), ts, channel=0)
        lab = oracle_echo_trace(reporter_proton_system(frame="lab"), ts, channel=0)
        assert np.max(np.abs(rot.signal - lab.signal)) < 1e-8

    def test_lab_frame_deer_agrees(self):
        scene = deer_scene([[3.0, 0, 0]])
        t = np.linspace(0, 0.8, 25)
        rot = oracle_deer_trace(system_from_scene(scene, frame="rotating"), t, 1.0)
        lab = oracle_deer_trace(system_from_scene(scene, frame="lab"), t, 1.0)
        assert np.max(np.abs(rot.signal - lab.signal)) < 1e-8

    def test_lab_frame_enforces_weak_drive(self):
        system = reporter_proton_system(frame="lab")
        seq = PulseSequence(
            (Pulse(0, "x", math.pi, duration=0.001), Readout("z", 0))
        )
        with pytest.raises(ValueError, match="Zeeman"):
            run_sequence(system, seq, ["up", "mixed"])

    def test_finite_duration_pulse_rotating_frame(self):
        # an isolated spin driven for a finite pi time still inverts
        system = OracleSystem(
            spins=(SpinSpec("electron", [0, 0, 0]),), field=FieldSetting(100.0, Z)
        )
        seq = PulseSequence((Pulse(0, "x", math.pi, duration=0.05), Readout("z", 0)))
        result = run_sequence(system, seq, ["up"])
        assert result.expectation == pytest.approx(-1.0, abs=1e-10)


class TestBathLimit:
    def test_empty_bath_is_flat(self):
        ts = np.linspace(0, 1, 10)
        trace = oracle_bath_limit(0, 0.5, 10.25, ts)
        assert np.allclose(trace.signal, 1.0)

    def test_weak_coupling_collapse_position(self):
        wn = 10.25
        ts = np.linspace(0.05, 1.2, 150)
        trace = oracle_bath_limit(6, 0.8, wn, ts, n_configs=6, seed=3)
        t_min = trace.abscissa[np.argmin(trace.signal)]
        assert abs(t_min - 2 * math.pi / wn) / (2 * math.pi / wn) < 0.05

    def test_depth_scales_with_coupling_squared(self):
        wn = 10.25
        ts = np.linspace(0.05, 1.0, 100)
        scales = np.array([0.2, 0.4, 0.8])
        depths = []
        for s in scales:
            trace = oracle_bath_limit(6, float(s), wn, ts, n_configs=6, seed=3)
            depths.append(1.0 - trace.signal.min())
        slope = np.polyfit(np.log(scales), np.log(depths), 1)[0]
        assert slope == pytest.approx(2.0, abs=0.1)

    def test_proton_limit(self):
        with pytest.raises(DimensionLimitError):
            oracle_bath_limit(11, 0.5, 10.0, np.linspace(0, 1, 5))


class TestSceneConversion:
    def test_spin_order_and_auto_couplings(self):
        scene = SpinSystem(
            nv_position=[0, 0, 0],
            nv_axis=Z,
            reporter_sites=[[3.0, 0, 0]],
            proton_sites=[[3.0, 0.22, 0]],
            field=FieldSetting(619.0, Z),
            surface_z=0.0,
            surface_tolerance=10.0,
        )
        system = system_from_scene(scene)
        assert [s.species for s in system.spins] == ["nv", "electron", "proton"]
        nv_rep = system.pair_coupling(0, 1)
        assert nv_rep.kind == "zz"
        assert nv_rep.zz == pytest.approx(CONSTANTS.k_ee / 27.0, rel=1e-12)
        rep_p = system.pair_coupling(1, 2)
        assert rep_p.kind == "hyperfine"
        # proton sits at r=0.22 nm, theta=90 deg from the reporter
        assert rep_p.a == pytest.approx(CONSTANTS.k_ep / 0.22**3, rel=1e-9)
        assert rep_p.b == pytest.approx(0.0, abs=1e-9)

    def test_contact_term_enters_a(self):
        scene = SpinSystem(
            nv_position=[0, 0, 0],
            nv_axis=Z,
            reporter_sites=[[3.0, 0, 0]],
            proton_sites=[[3.0, 0.22, 0]],
            field=FieldSetting(619.0, Z),
            surface_z=0.0,
            surface_tolerance=10.0,
        )
        plain = system_from_scene(scene).pair_coupling(1, 2)
        shifted = system_from_scene(scene, contact_terms={(1, 2): 25.0}).pair_coupling(1, 2)
        assert shifted.a - plain.a == pytest.approx(25.0, rel=1e-12)

    def test_thermal_initial(self):
        scene = deer_scene([[3.0, 0, 0]])
        system = system_from_scene(scene)
        assert thermal_initial(system) == ["up", "mixed"]
