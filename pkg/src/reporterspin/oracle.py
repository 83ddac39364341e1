"""Brute-force density-matrix simulator for small spin systems.

Executes literal pulse sequences on a dense 2^n density matrix (n <= 12) and
serves as the ground truth for every closed-form signal model.  Spins are the
effective NV two-level system {ms=0, ms=-1}, reporter electrons (S=1/2) and
protons (I=1/2); the quantization axis is the applied field direction.

Frame convention: electron Zeeman terms are removed by default (each
electron in its own rotating frame, the standard secular treatment); the
nuclear Zeeman term omega_n Iz stays.  A lab-frame mode keeps the electron
Zeeman terms during delays, applies pulses phase-coherently (conjugated by
the accumulated Zeeman phase, the ideal resonant-drive limit) and
demodulates the readout; it must agree with the rotating frame because every
secular coupling commutes with the Zeeman terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field
from typing import Sequence

import numpy as np
import scipy.sparse as sps

from .constants import CONSTANTS, PhysicalConstants
from .errors import DimensionLimitError, UnknownChannelError
from .physics import FieldSetting, SpinSystem, dipolar_coupling_ee, larmor_proton
from .signals import SignalTrace

MAX_SPINS = 12

SPECIES = ("nv", "electron", "proton")

_SIGMA = {
    "x": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}

_STATES = {
    "up": np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex),
    "down": np.array([[0.0, 0.0], [0.0, 1.0]], dtype=complex),
    "mixed": 0.5 * np.eye(2, dtype=complex),
    "plus_x": 0.5 * np.array([[1.0, 1.0], [1.0, 1.0]], dtype=complex),
    "plus_y": 0.5 * np.array([[1.0, -1.0j], [1.0j, 1.0]], dtype=complex),
}


# ---------------------------------------------------------------------------
# system and sequence types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpinSpec:
    """One spin: species ('nv' | 'electron' | 'proton') and position in nm."""

    species: str
    position: np.ndarray

    def __post_init__(self):
        if self.species not in SPECIES:
            raise ValueError(f"unknown species {self.species!r}")
        object.__setattr__(
            self, "position", np.asarray(self.position, dtype=float).reshape(3)
        )


@dataclass(frozen=True)
class PairCoupling:
    """Coupling between one spin pair.

    Electron-electron pairs carry the secular dipolar constant zz (rad/us)
    and, for like spins, the flip-flop part it implies; electron-proton
    pairs carry (a, b).
    """

    kind: str  # "zz" | "hyperfine"
    zz: float = 0.0
    a: float = 0.0
    b: float = 0.0


@dataclass(frozen=True)
class OracleSystem:
    """Spins, field, and pairwise couplings for the simulator.

    Couplings are derived from the geometry unless an override for the
    (i, j) pair is supplied.  `contact_terms[(i, j)]` adds an isotropic a0
    to the derived hyperfine a of designated electron-proton pairs.
    `frame` selects the rotating (default) or lab frame.
    """

    spins: tuple[SpinSpec, ...]
    field: FieldSetting
    coupling_overrides: dict = dataclass_field(default_factory=dict)
    contact_terms: dict = dataclass_field(default_factory=dict)
    frame: str = "rotating"
    constants: PhysicalConstants = CONSTANTS

    def __post_init__(self):
        object.__setattr__(self, "spins", tuple(self.spins))
        if len(self.spins) > MAX_SPINS:
            raise DimensionLimitError(
                f"{len(self.spins)} spins exceed the {MAX_SPINS}-spin "
                f"(dimension {2**MAX_SPINS}) dense-matrix limit"
            )
        if self.frame not in ("rotating", "lab"):
            raise ValueError("frame must be 'rotating' or 'lab'")
        for key in list(self.coupling_overrides) + list(self.contact_terms):
            i, j = key
            if not (0 <= i < len(self.spins) and 0 <= j < len(self.spins)) or i == j:
                raise ValueError(f"bad pair key {key}")

    @property
    def dim(self) -> int:
        return 2 ** len(self.spins)

    def pair_coupling(self, i: int, j: int) -> PairCoupling | None:
        """Effective coupling for pair (i, j), override-aware."""
        key = (min(i, j), max(i, j))
        if key in self.coupling_overrides:
            value = self.coupling_overrides[key]
            return value if isinstance(value, PairCoupling) else None
        si, sj = self.spins[key[0]], self.spins[key[1]]
        electronic = {"nv", "electron"}
        if si.species in electronic and sj.species in electronic:
            d = dipolar_coupling_ee(
                si.position, sj.position, self.field, self.constants
            )
            return PairCoupling(kind="zz", zz=d)
        if {si.species, sj.species} == {"proton"}:
            return None  # proton-proton couplings are negligible here
        # electron-proton: point-dipole hyperfine (+ optional contact term)
        if si.species == "proton":
            si, sj = sj, si
        rvec = sj.position - si.position
        r = float(np.linalg.norm(rvec))
        cos_t = float(np.dot(rvec, self.field.direction)) / r
        sin_t = math.sqrt(max(0.0, 1.0 - cos_t**2))
        k = self.constants.k_ep / r**3
        a = k * (1.0 - 3.0 * cos_t**2) + self.contact_terms.get(key, 0.0)
        b = abs(k * 3.0 * cos_t * sin_t)
        return PairCoupling(kind="hyperfine", a=a, b=b)


@dataclass(frozen=True)
class Delay:
    duration: float

    def __post_init__(self):
        if self.duration < 0:
            raise ValueError("delay duration must be >= 0")


@dataclass(frozen=True)
class Pulse:
    """Rotation by `angle` about x or y on a channel.

    channel: 'nv', 'reporter' (all electrons), 'proton', or a spin index.
    duration None means an instantaneous ideal rotation; a finite duration
    adds the drive to the internal Hamiltonian for that segment.
    flip_prob < 1 turns the pulse into the stochastic mixture
    (1-p) rho + p R rho R^dagger (used for imperfect DEER inversion pulses).
    """

    channel: str | int
    axis: str
    angle: float
    duration: float | None = None
    flip_prob: float | None = None

    def __post_init__(self):
        if self.axis not in ("x", "y"):
            raise ValueError("pulse axis must be 'x' or 'y'")
        if self.duration is not None and self.duration < 0:
            raise ValueError("pulse duration must be >= 0")
        if self.flip_prob is not None and not 0.0 <= self.flip_prob <= 1.0:
            raise ValueError("flip_prob must be in [0, 1]")


@dataclass(frozen=True)
class Readout:
    """Projective readout of a single-spin Pauli expectation."""

    axis: str
    spin: int

    def __post_init__(self):
        if self.axis not in ("x", "y", "z"):
            raise ValueError("readout axis must be x, y or z")


@dataclass(frozen=True)
class PulseSequence:
    """Ordered delays and pulses with exactly one readout at the end."""

    elements: tuple

    def __post_init__(self):
        elements = tuple(self.elements)
        object.__setattr__(self, "elements", elements)
        readouts = [k for k, e in enumerate(elements) if isinstance(e, Readout)]
        if len(readouts) != 1 or readouts[0] != len(elements) - 1:
            raise ValueError("a sequence must contain exactly one readout, at the end")
        for e in elements[:-1]:
            if not isinstance(e, (Delay, Pulse)):
                raise ValueError(f"unsupported sequence element {e!r}")

    @property
    def readout(self) -> Readout:
        return self.elements[-1]


@dataclass(frozen=True)
class OracleResult:
    """Readout expectation plus final-state diagnostics."""

    expectation: float
    populations: np.ndarray
    purity: float


# ---------------------------------------------------------------------------
# operator construction
# ---------------------------------------------------------------------------


def _site_operator(n: int, site: int, op2: np.ndarray) -> sps.csr_matrix:
    mats = [sps.identity(2, format="csr", dtype=complex)] * n
    mats[site] = sps.csr_matrix(op2)
    out = mats[0]
    for m in mats[1:]:
        out = sps.kron(out, m, format="csr")
    return out


def _pair_operator(
    n: int, i: int, j: int, op_i: np.ndarray, op_j: np.ndarray
) -> sps.csr_matrix:
    mats = [sps.identity(2, format="csr", dtype=complex)] * n
    mats[i] = sps.csr_matrix(op_i)
    mats[j] = sps.csr_matrix(op_j)
    out = mats[0]
    for m in mats[1:]:
        out = sps.kron(out, m, format="csr")
    return out


def _moment_z(species: str) -> np.ndarray:
    """z spin operator entering couplings: diag(0,-1) for the effective NV
    (ms values of the {0,-1} manifold), sigma_z/2 otherwise."""
    if species == "nv":
        return np.diag([0.0, -1.0]).astype(complex)
    return 0.5 * _SIGMA["z"]


def build_hamiltonian(system: OracleSystem) -> np.ndarray:
    """Assemble the dense internal Hamiltonian, rad/us.

    Terms: nuclear Zeeman omega_n Iz per proton (both frames), electron
    Zeeman gamma_e B sz per electron/NV transition in the lab frame only,
    secular dipolar zz between unlike electron pairs (NV-reporter),
    zz - (flip-flop)/2 between like electron pairs (reporter-reporter), and
    a Jz Iz + b Jz Ix for electron-proton pairs.
    """
    n = len(system.spins)
    if n == 0:
        raise ValueError("system has no spins")
    dim = 2**n
    H = sps.csr_matrix((dim, dim), dtype=complex)
    omega_n = larmor_proton(system.field, system.constants)
    for k, spin in enumerate(system.spins):
        if spin.species == "proton":
            H = H + omega_n * _site_operator(n, k, 0.5 * _SIGMA["z"])
        elif system.frame == "lab":
            H = H + _electron_zeeman_term(system, n, k)
    half = {ax: 0.5 * _SIGMA[ax] for ax in "xyz"}
    for i in range(n):
        for j in range(i + 1, n):
            cpl = system.pair_coupling(i, j)
            if cpl is None:
                continue
            si, sj = system.spins[i].species, system.spins[j].species
            if cpl.kind == "zz":
                zi, zj = _moment_z(si), _moment_z(sj)
                H = H + cpl.zz * _pair_operator(n, i, j, zi, zj)
                if si == "electron" and sj == "electron":
                    # like spins: secular dipolar includes the flip-flop part
                    H = H - 0.5 * cpl.zz * (
                        _pair_operator(n, i, j, half["x"], half["x"])
                        + _pair_operator(n, i, j, half["y"], half["y"])
                    )
            else:
                e, p = (i, j) if sj == "proton" else (j, i)
                jz = _moment_z(system.spins[e].species)
                H = H + cpl.a * _pair_operator(n, e, p, jz, half["z"])
                H = H + cpl.b * _pair_operator(n, e, p, jz, half["x"])
    Hd = np.asarray(H.todense())
    herm = np.max(np.abs(Hd - Hd.conj().T))
    if herm > 1e-12:
        raise AssertionError(f"Hamiltonian not Hermitian (max dev {herm:.2e})")
    return Hd


def _electron_zeeman_term(system: OracleSystem, n: int, k: int) -> sps.csr_matrix:
    """Lab-frame splitting of the addressed transition of spin k."""
    from .physics import zeeman_nv, zeeman_reporter  # local to avoid cycle

    spin = system.spins[k]
    if spin.species == "nv":
        omega = zeeman_nv(system.field, constants=system.constants)
        # energies 0 and +omega for ms=0 / ms=-1 in the pseudo-spin basis
        return omega * _site_operator(n, k, np.diag([0.0, 1.0]).astype(complex))
    omega = zeeman_reporter(system.field, system.constants)
    return omega * _site_operator(n, k, 0.5 * _SIGMA["z"])


def _channel_sites(system: OracleSystem, channel: str | int) -> list[int]:
    if isinstance(channel, (int, np.integer)):
        if not 0 <= channel < len(system.spins):
            raise UnknownChannelError(f"spin index {channel} out of range")
        return [int(channel)]
    mapping = {"nv": ("nv",), "reporter": ("electron",), "proton": ("proton",)}
    if channel not in mapping:
        raise UnknownChannelError(f"unknown channel {channel!r}")
    sites = [
        k for k, s in enumerate(system.spins) if s.species in mapping[channel]
    ]
    if not sites:
        raise UnknownChannelError(f"no spins on channel {channel!r}")
    return sites


# ---------------------------------------------------------------------------
# execution engine
# ---------------------------------------------------------------------------


class OracleEngine:
    """Prebuilt Hamiltonian eigensystem for repeated sequence execution."""

    def __init__(self, system: OracleSystem):
        self.system = system
        self.n = len(system.spins)
        self.H = build_hamiltonian(system)
        self._evals, self._evecs = np.linalg.eigh(self.H)
        self._rotation_cache: dict = {}
        self._observable_cache: dict = {}
        self._zeeman_phases = None
        if system.frame == "lab":
            diag = np.zeros(system.dim, dtype=float)
            for k, spin in enumerate(system.spins):
                if spin.species != "proton":
                    term = _electron_zeeman_term(system, self.n, k)
                    diag = diag + np.real(term.diagonal())
            self._zeeman_phases = diag

    # -- propagators --------------------------------------------------

    def delay_unitary(self, t: float) -> np.ndarray:
        phases = np.exp(-1j * self._evals * t)
        return (self._evecs * phases) @ self._evecs.conj().T

    def rotation(self, pulse: Pulse) -> np.ndarray:
        key = (pulse.channel, pulse.axis, pulse.angle)
        cached = self._rotation_cache.get(key)
        if cached is not None:
            return cached
        sites = _channel_sites(self.system, pulse.channel)
        half = 0.5 * pulse.angle
        r2 = (
            math.cos(half) * np.eye(2, dtype=complex)
            - 1j * math.sin(half) * _SIGMA[pulse.axis]
        )
        out = np.array([[1.0 + 0j]])
        for k in range(self.n):
            out = np.kron(out, r2 if k in sites else np.eye(2, dtype=complex))
        self._rotation_cache[key] = out
        return out

    def _drive_generator(self, pulse: Pulse) -> np.ndarray:
        sites = _channel_sites(self.system, pulse.channel)
        dim = 2**self.n
        G = sps.csr_matrix((dim, dim), dtype=complex)
        for k in sites:
            G = G + _site_operator(self.n, k, 0.5 * _SIGMA[pulse.axis])
        return np.asarray(G.todense())

    def _phase_conjugate(self, U: np.ndarray, t_now: float) -> np.ndarray:
        """Shift a rotation into the lab frame at time t_now."""
        if self._zeeman_phases is None:
            return U
        phases = np.exp(-1j * self._zeeman_phases * t_now)
        return (phases[:, None] * U) * phases.conj()[None, :]

    # -- sequence execution --------------------------------------------

    def run(
        self, seq: PulseSequence, initial: Sequence | np.ndarray
    ) -> OracleResult:
        rho = self.initial_density(initial)
        t_now = 0.0
        for element in seq.elements[:-1]:
            if isinstance(element, Delay):
                if element.duration > 0.0:
                    U = self.delay_unitary(element.duration)
                    rho = U @ rho @ U.conj().T
                t_now += element.duration
            else:
                rho, t_now = self._apply_pulse(rho, element, t_now)
        if self._zeeman_phases is not None:
            # demodulate: rotate the final state back into the rotating frame
            phases = np.exp(1j * self._zeeman_phases * t_now)
            rho = (phases[:, None] * rho) * phases.conj()[None, :]
        readout = seq.readout
        if not 0 <= readout.spin < self.n:
            raise UnknownChannelError(f"readout spin {readout.spin} out of range")
        obs_key = (readout.axis, readout.spin)
        obs = self._observable_cache.get(obs_key)
        if obs is None:
            obs = np.asarray(
                _site_operator(self.n, readout.spin, _SIGMA[readout.axis]).todense()
            )
            self._observable_cache[obs_key] = obs
        expectation = float(np.real(np.trace(rho @ obs)))
        populations = np.real(np.diag(rho)).copy()
        purity = float(np.real(np.trace(rho @ rho)))
        return OracleResult(expectation, populations, purity)

    def _apply_pulse(self, rho, pulse: Pulse, t_now: float):
        if pulse.duration:
            omega = pulse.angle / pulse.duration
            if self._zeeman_phases is not None:
                zmin = np.max(np.abs(self._zeeman_phases))
                if omega > 0.1 * zmin:
                    raise ValueError(
                        "finite-duration lab-frame pulse violates the "
                        f"drive << Zeeman condition (Omega={omega:.3g})"
                    )
                # interaction picture: exact for a co-rotating drive
                Hz = np.diag(self._zeeman_phases)
                Hrot = self.H - Hz
                w, V = np.linalg.eigh(Hrot + omega * self._drive_generator(pulse))
                U = (V * np.exp(-1j * w * pulse.duration)) @ V.conj().T
                pre = np.exp(1j * self._zeeman_phases * t_now)
                post = np.exp(-1j * self._zeeman_phases * (t_now + pulse.duration))
                U = (post[:, None] * U) * pre[None, :]
            else:
                w, V = np.linalg.eigh(self.H + omega * self._drive_generator(pulse))
                U = (V * np.exp(-1j * w * pulse.duration)) @ V.conj().T
            t_after = t_now + pulse.duration
        else:
            U = self._phase_conjugate(self.rotation(pulse), t_now)
            t_after = t_now
        if pulse.flip_prob is not None and pulse.flip_prob < 1.0:
            p = pulse.flip_prob
            rho = (1.0 - p) * rho + p * (U @ rho @ U.conj().T)
        else:
            rho = U @ rho @ U.conj().T
        return rho, t_after

    def initial_density(self, initial) -> np.ndarray:
        if isinstance(initial, np.ndarray) and initial.ndim == 2:
            if initial.shape != (self.system.dim,) * 2:
                raise ValueError("initial density matrix has wrong dimension")
            return initial.astype(complex)
        specs = list(initial)
        if len(specs) != self.n:
            raise ValueError("need one initial-state spec per spin")
        rho = np.array([[1.0 + 0j]])
        for spec in specs:
            local = _STATES[spec] if isinstance(spec, str) else np.asarray(spec, complex)
            rho = np.kron(rho, local)
        return rho


def run_sequence(
    system: OracleSystem, seq: PulseSequence, initial: Sequence | np.ndarray
) -> OracleResult:
    """Build the engine and execute one sequence (see :class:`OracleEngine`)."""
    return OracleEngine(system).run(seq, initial)


def thermal_initial(system: OracleSystem) -> list[str]:
    """Room-temperature default: NV polarized in ms=0, the rest unpolarized."""
    return ["up" if s.species == "nv" else "mixed" for s in system.spins]


# ---------------------------------------------------------------------------
# sequence builders and trace drivers
# ---------------------------------------------------------------------------


def echo_sequence(
    t_s: float, channel: str | int, readout_spin: int
) -> PulseSequence:
    """Two-pulse echo pi/2_y - t/2 - pi_x - t/2 with transverse readout."""
    return PulseSequence(
        (
            Pulse(channel, "y", math.pi / 2),
            Delay(0.5 * t_s),
            Pulse(channel, "x", math.pi),
            Delay(0.5 * t_s),
            Readout("x", readout_spin),
        )
    )


def deer_sequence(
    t_nv: float,
    nv_spin: int,
    flip_prob: float,
    flip_mode: str = "coherent",
) -> PulseSequence:
    """DEER: NV echo with a reporter inversion alongside the NV pi pulse.

    flip_mode 'coherent' uses a partial rotation by arccos(1 - 2 p); mode
    'stochastic' applies a full pi with probability p.
    """
    if flip_mode == "coherent":
        flip = Pulse("reporter", "x", math.acos(1.0 - 2.0 * flip_prob))
    elif flip_mode == "stochastic":
        flip = Pulse("reporter", "x", math.pi, flip_prob=flip_prob)
    else:
        raise ValueError("flip_mode must be 'coherent' or 'stochastic'")
    return PulseSequence(
        (
            Pulse(nv_spin, "y", math.pi / 2),
            Delay(0.5 * t_nv),
            Pulse(nv_spin, "x", math.pi),
            flip,
            Delay(0.5 * t_nv),
            Readout("x", nv_spin),
        )
    )


def oracle_echo_trace(
    system: OracleSystem,
    ts_grid,
    channel: str | int = "reporter",
    initial: Sequence | None = None,
    readout_spin: int | None = None,
) -> SignalTrace:
    """Echo amplitude versus total echo time for the probed channel.

    The probed spin starts polarized ('up'); everything else defaults to
    maximally mixed.
    """
    sites = _channel_sites(system, channel)
    if readout_spin is None:
        readout_spin = sites[0]
    if initial is None:
        initial = [
            "up" if k in sites else ("up" if s.species == "nv" else "mixed")
            for k, s in enumerate(system.spins)
        ]
    engine = OracleEngine(system)
    ts_grid = np.asarray(ts_grid, dtype=float)
    values = np.empty_like(ts_grid)
    for idx, t_s in enumerate(ts_grid):
        result = engine.run(echo_sequence(float(t_s), channel, readout_spin), initial)
        values[idx] = result.expectation
    return SignalTrace(ts_grid, values, np.array([]), {"sequence": "echo"})


def oracle_deer_trace(
    system: OracleSystem,
    t_grid,
    flip_prob: float,
    flip_mode: str = "coherent",
) -> SignalTrace:
    """DEER trace over the echo-time grid with thermal reporters.

    The system must contain exactly one NV spin and at least one reporter.
    """
    nv_sites = [k for k, s in enumerate(system.spins) if s.species == "nv"]
    if len(nv_sites) != 1:
        raise ValueError("DEER needs exactly one NV spin in the system")
    if not any(s.species == "electron" for s in system.spins):
        raise ValueError("DEER needs at least one reporter spin")
    engine = OracleEngine(system)
    initial = thermal_initial(system)
    t_grid = np.asarray(t_grid, dtype=float)
    values = np.empty_like(t_grid)
    for idx, t in enumerate(t_grid):
        seq = deer_sequence(float(t), nv_sites[0], flip_prob, flip_mode)
        values[idx] = engine.run(seq, initial).expectation
    return SignalTrace(t_grid, values, np.array([]), {"sequence": "deer"})


def oracle_bath_limit(
    n_protons: int,
    coupling_scale: float,
    omega_n: float,
    ts_grid,
    n_configs: int = 8,
    seed: int = 0,
    constants: PhysicalConstants = CONSTANTS,
) -> SignalTrace:
    """Reporter echo with n weakly coupled protons, configuration-averaged.

    Proton couplings are synthesized at random orientations (cos theta
    uniform) and rescaled so the root-mean-square pseudo-secular coupling
    equals `coupling_scale` (rad/us); used to validate the semiclassical
    bath model in the weak-coupling limit.
    """
    if n_protons > 10:
        raise DimensionLimitError("bath-limit oracle supports at most 10 protons")
    ts_grid = np.asarray(ts_grid, dtype=float)
    if n_protons == 0:
        return SignalTrace(ts_grid, np.ones_like(ts_grid), np.array([]), {})
    rng = np.random.default_rng(seed)
    field_B = omega_n / constants.gamma_p
    field = FieldSetting(field_B, np.array([0.0, 0.0, 1.0]))
    total = np.zeros_like(ts_grid)
    for _ in range(n_configs):
        cos_t = rng.uniform(-1.0, 1.0, size=n_protons)
        sin_t = np.sqrt(1.0 - cos_t**2)
        a_raw = 1.0 - 3.0 * cos_t**2
        b_raw = np.abs(3.0 * cos_t * sin_t)
        rms = math.sqrt(float(np.mean(b_raw**2)))
        scale = coupling_scale / rms if rms > 0 else 0.0
        overrides = {
            (0, 1 + k): PairCoupling(
                kind="hyperfine", a=scale * a_raw[k], b=scale * b_raw[k]
            )
            for k in range(n_protons)
        }
        spins = [SpinSpec("electron", np.zeros(3))] + [
            SpinSpec("proton", np.array([0.3 * (k + 1), 0.0, 0.0]))
            for k in range(n_protons)
        ]
        system = OracleSystem(
            spins=tuple(spins),
            field=field,
            coupling_overrides=overrides,
            constants=constants,
        )
        total += oracle_echo_trace(system, ts_grid, channel=0).signal
    return SignalTrace(
        ts_grid,
        total / n_configs,
        np.array([]),
        {"sequence": "bath_limit", "n_protons": n_protons, "seed": seed},
    )


# ---------------------------------------------------------------------------
# scene conversion
# ---------------------------------------------------------------------------


def system_from_scene(
    scene: SpinSystem,
    frame: str = "rotating",
    contact_terms: dict | None = None,
    coupling_overrides: dict | None = None,
) -> OracleSystem:
    """Build an OracleSystem from a geometric scene.

    Spin order: NV first, then reporters, then protons (matching
    ``SpinSystem.all_sites``).
    """
    spins = [SpinSpec("nv", scene.nv_position)]
    spins += [SpinSpec("electron", p) for p in scene.reporter_sites]
    spins += [SpinSpec("proton", p) for p in scene.proton_sites]
    return OracleSystem(
        spins=tuple(spins),
        field=scene.field,
        coupling_overrides=coupling_overrides or {},
        contact_terms=contact_terms or {},
        frame=frame,
    )
