"""Closed-form signal models for every pulse sequence in the toolkit.

All models return echo amplitudes in the uniform [-1, +1] population
convention (spin-state populations scaled so +1 is the initialized state and
-1 is the inverted one).  Internally the two-pulse modulation factors are
derived in a [0, 1] probability convention V and mapped as 2V - 1; decay and
bath factors are attenuations in (0, 1] that multiply the amplitude.

Abscissa convention: echo arguments are the *full* echo time (pi/2 - t/2 -
pi - t/2), so the inter-pulse delay is t/2.  This is pinned against the
density-matrix oracle in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .constants import CONSTANTS
from .physics import (
    HyperfineParams,
    SpinSystem,
    dipolar_coupling_ee,
    eseem_frequencies,
    zeeman_reporter,
)

# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------


@dataclass
class SignalTrace:
    """(abscissa, signal, sigma) series, the universal data-exchange unit.

    sigma may be empty for noiseless model traces.  The abscissa is time in
    us for delay sweeps or field in G for field scans; metadata travels in
    the `meta` dict (units, field, sequence id, seed).
    """

    abscissa: np.ndarray
    signal: np.ndarray
    sigma: np.ndarray
    meta: dict | None = None

    def __post_init__(self):
        self.abscissa = np.asarray(self.abscissa, dtype=float)
        self.signal = np.asarray(self.signal, dtype=float)
        self.sigma = np.asarray(
            self.sigma if self.sigma is not None else [], dtype=float
        )
        if self.meta is None:
            self.meta = {}
        self.validate()

    def validate(self):
        if self.abscissa.ndim != 1 or self.signal.ndim != 1:
            raise ValueError("abscissa and signal must be 1-d")
        if len(self.abscissa) != len(self.signal):
            raise ValueError("abscissa and signal lengths differ")
        if self.sigma.size and len(self.sigma) != len(self.signal):
            raise ValueError("sigma length differs from signal")
        if len(self.abscissa) > 1 and not np.all(np.diff(self.abscissa) > 0):
            raise ValueError("abscissa must be strictly increasing")
        slack = 5.0 * self.sigma if self.sigma.size else 1e-9
        if np.any(self.signal > 1.0 + slack) or np.any(self.signal < -1.0 - slack):
            raise ValueError("signal exceeds [-1, +1] beyond 5 sigma")

    def __len__(self) -> int:
        return len(self.abscissa)


@dataclass(frozen=True)
class DecoherenceParams:
    """Phenomenological decay times, us, and the echo stretch exponent."""

    t2_nv: float = 5.0
    t2_s: float = 3.0
    t1_s: float = 29.4
    rabi_decay: float = 1.0
    stretch_exponent: float = 1.0

    def __post_init__(self):
        for name in ("t2_nv", "t2_s", "t1_s", "rabi_decay"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        if not 1.0 <= self.stretch_exponent <= 3.0:
            raise ValueError("stretch_exponent must be in [1, 3]")


#: Decay parameters that switch every phenomenological envelope off.
NO_DECAY = DecoherenceParams(t2_nv=1e12, t2_s=1e12, t1_s=1e12, rabi_decay=1e12)


@dataclass(frozen=True)
class BathParams:
    """Semiclassical proton-bath field at the reporter site.

    b_rms is the rms amplitude (G) of the oscillating field component along
    the quantization axis; omega_n its angular frequency (rad/us).
    """

    b_rms: float
    omega_n: float

    def __post_init__(self):
        if self.b_rms < 0:
            raise ValueError("b_rms must be >= 0")


# ---------------------------------------------------------------------------
# NV-side sequences
# ---------------------------------------------------------------------------


def nv_echo(t_nv, dec: DecoherenceParams):
    """NV spin-echo amplitude exp(-(t/T2_nv)^stretch)."""
    t = np.asarray(t_nv, dtype=float)
    return np.exp(-((t / dec.t2_nv) ** dec.stretch_exponent))


def deer_couplings(system: SpinSystem) -> np.ndarray:
    """NV-reporter secular dipolar couplings for the scene, rad/us."""
    return np.array(
        [
            dipolar_coupling_ee(system.nv_position, site, system.field)
            for site in system.reporter_sites
        ]
    )


def deer_signal(t_nv, system: SpinSystem, flip_prob: float, dec: DecoherenceParams):
    """NV echo with a simultaneous reporter pi flip of probability flip_prob.

    Each (thermally unpolarized) reporter i contributes the mixture factor
    1 - p + p cos(d_i t/2); the product over reporters multiplies the bare
    echo.  d_i is the NV-reporter secular dipolar coupling.
    """
    if not 0.0 <= flip_prob <= 1.0:
        raise ValueError("flip_prob must be in [0, 1]")
    t = np.asarray(t_nv, dtype=float)
    out = nv_echo(t, dec)
    for d in deer_couplings(system):
        out = out * (1.0 - flip_prob + flip_prob * np.cos(0.5 * d * t))
    return out


def deer_spectrum(
    omega_drive,
    system: SpinSystem,
    linewidth: float,
    t_nv: float,
    flip_prob: float = 1.0,
    dec: DecoherenceParams = NO_DECAY,
):
    """DEER signal vs reporter drive frequency at fixed echo time t_nv.

    Lorentzian dip (FWHM = linewidth) centered on the reporter resonance
    gamma_e B; on resonance the signal is deer_signal(t_nv), far off
    resonance it returns to the bare NV echo level.
    """
    if linewidth <= 0:
        raise ValueError("linewidth must be > 0")
    omega = np.asarray(omega_drive, dtype=float)
    center = zeeman_reporter(system.field)
    half = 0.5 * linewidth
    lineshape = half**2 / ((omega - center) ** 2 + half**2)
    base = nv_echo(np.asarray(t_nv, float), dec)
    dip = base - deer_signal(t_nv, system, flip_prob, dec)
    return base - dip * lineshape


# ---------------------------------------------------------------------------
# reporter-side sequences
# ---------------------------------------------------------------------------


def reporter_rabi(t_r, rabi_freq: float, dec: DecoherenceParams):
    """Damped Rabi oscillation cos(Omega t) exp(-t/rabi_decay)."""
    t = np.asarray(t_r, dtype=float)
    return np.cos(rabi_freq * t) * np.exp(-t / dec.rabi_decay)


def reporter_t1(t_p, dec: DecoherenceParams):
    """Reporter population relaxation exp(-t/T1_s)."""
    t = np.asarray(t_p, dtype=float)
    return np.exp(-t / dec.t1_s)


def eseem_single(t_s, params: HyperfineParams, omega_n: float):
    """Two-pulse echo envelope of a reporter coupled to one proton.

    In the [0, 1] probability convention V = 1 - (k/4)(1 - cos w+ tau)(1 -
    cos w- tau) with tau = t_s/2 and the Mims depth k; returned in the
    [-1, +1] convention as 2V - 1.
    """
    branches = eseem_frequencies(params, omega_n)
    tau = 0.5 * np.asarray(t_s, dtype=float)
    v = 1.0 - 0.25 * branches.depth * (1.0 - np.cos(branches.omega_plus * tau)) * (
        1.0 - np.cos(branches.omega_minus * tau)
    )
    return 2.0 * v - 1.0


def eseem_multi(t_s, protons: Sequence[tuple[HyperfineParams, float]]):
    """Echo envelope of a reporter coupled to several protons.

    The per-proton [-1, +1] envelope factors multiply (nuclei evolve
    independently within each electron manifold); the product can cross
    zero, the signature of coherent population transfer.
    """
    protons = list(protons)
    if not protons:
        raise ValueError("proton list must be non-empty")
    t = np.asarray(t_s, dtype=float)
    out = np.ones_like(t)
    for params, omega_n in protons:
        out = out * eseem_single(t, params, omega_n)
    return out


def bath_attenuation(t_s, bath: BathParams, constants=CONSTANTS):
    """Echo attenuation from the semiclassical oscillating proton-bath field.

    exp(-2 (gamma_e b_rms / wn)^2 sin^4(wn t_s / 4)): collapse minima at
    t_s = 2 pi k / wn for odd k, full revivals at even k.  A static field
    (wn = 0) is refocused completely.
    """
    t = np.asarray(t_s, dtype=float)
    if bath.omega_n == 0.0 or bath.b_rms == 0.0:
        return np.ones_like(t)
    amp = constants.gamma_e * bath.b_rms / bath.omega_n
    return np.exp(-2.0 * amp**2 * np.sin(0.25 * bath.omega_n * t) ** 4)


def bath_echo(t_s, bath: BathParams, dec: DecoherenceParams):
    """Reporter echo vs total echo time with the semiclassical bath only."""
    t = np.asarray(t_s, dtype=float)
    decay = np.exp(-((t / dec.t2_s) ** dec.stretch_exponent))
    return bath_attenuation(t, bath) * decay


def reporter_echo_combined(
    t_s,
    protons: Iterable[tuple[HyperfineParams, float]],
    bath: BathParams,
    dec: DecoherenceParams,
):
    """Reporter echo with coherent protons, semiclassical bath, and decay.

    Product of the coherent multi-proton envelope, the bath attenuation and
    the echo decay envelope; an empty proton list reduces to bath_echo.
    """
    t = np.asarray(t_s, dtype=float)
    protons = list(protons)
    coherent = eseem_multi(t, protons) if protons else np.ones_like(t)
    return coherent * bath_echo(t, bath, dec)


# ---------------------------------------------------------------------------
# trace helpers and the fittable-model registry
# ---------------------------------------------------------------------------


def make_trace(grid, values, meta: dict | None = None) -> SignalTrace:
    """Wrap model output into a noiseless SignalTrace."""
    return SignalTrace(
        abscissa=np.asarray(grid, float),
        signal=np.asarray(values, float),
        sigma=np.array([]),
        meta=meta or {},
    )


@dataclass(frozen=True)
class ModelDef:
    """A named, fittable trace model: y = fn(t, **params)."""

    name: str
    params: tuple[str, ...]
    defaults: dict
    fn: Callable


def _model_exp_decay(t, t1=29.4):
    return reporter_t1(t, DecoherenceParams(t1_s=t1))


def _model_stretched_echo(t, t2=5.0, stretch=1.0):
    return nv_echo(t, DecoherenceParams(t2_nv=t2, stretch_exponent=stretch))


def _model_rabi(t, rabi_freq=30.0, rabi_decay=1.0):
    return reporter_rabi(t, rabi_freq, DecoherenceParams(rabi_decay=rabi_decay))


def _model_bath_echo(t, b_rms=0.3, omega_n=10.25, t2_s=3.0, stretch=1.0):
    return bath_echo(
        t,
        BathParams(b_rms=b_rms, omega_n=omega_n),
        DecoherenceParams(t2_s=t2_s, stretch_exponent=stretch),
    )


def _model_eseem_bath_1p(
    t, a=66.0, b=52.0, omega_n=16.57, b_rms=0.0, t2_s=3.0, stretch=1.0
):
    return reporter_echo_combined(
        t,
        [(HyperfineParams(a=a, b=abs(b)), omega_n)],
        BathParams(b_rms=abs(b_rms), omega_n=omega_n),
        DecoherenceParams(t2_s=t2_s, stretch_exponent=stretch),
    )


def _model_eseem_bath_2p(
    t,
    a1=66.0,
    b1=52.0,
    a2=20.0,
    b2=10.0,
    omega_n=16.57,
    b_rms=0.0,
    t2_s=3.0,
    stretch=1.0,
):
    return reporter_echo_combined(
        t,
        [
            (HyperfineParams(a=a1, b=abs(b1)), omega_n),
            (HyperfineParams(a=a2, b=abs(b2)), omega_n),
        ],
        BathParams(b_rms=abs(b_rms), omega_n=omega_n),
        DecoherenceParams(t2_s=t2_s, stretch_exponent=stretch),
    )


MODELS: dict[str, ModelDef] = {
    m.name: m
    for m in (
        ModelDef("exp_decay", ("t1",), {"t1": 29.4}, _model_exp_decay),
        ModelDef(
            "stretched_echo",
            ("t2", "stretch"),
            {"t2": 5.0, "stretch": 1.0},
            _model_stretched_echo,
        ),
        ModelDef(
            "rabi",
            ("rabi_freq", "rabi_decay"),
            {"rabi_freq": 30.0, "rabi_decay": 1.0},
            _model_rabi,
        ),
        ModelDef(
            "bath_echo",
            ("b_rms", "omega_n", "t2_s", "stretch"),
            {"b_rms": 0.3, "omega_n": 10.25, "t2_s": 3.0, "stretch": 1.0},
            _model_bath_echo,
        ),
        ModelDef(
            "eseem_bath_1p",
            ("a", "b", "omega_n", "b_rms", "t2_s", "stretch"),
            {
                "a": 66.0,
                "b": 52.0,
                "omega_n": 16.57,
                "b_rms": 0.0,
                "t2_s": 3.0,
                "stretch": 1.0,
            },
            _model_eseem_bath_1p,
        ),
        ModelDef(
            "eseem_bath_2p",
            ("a1", "b1", "a2", "b2", "omega_n", "b_rms", "t2_s", "stretch"),
            {
                "a1": 66.0,
                "b1": 52.0,
                "a2": 20.0,
                "b2": 10.0,
                "omega_n": 16.57,
                "b_rms": 0.0,
                "t2_s": 3.0,
                "stretch": 1.0,
            },
            _model_eseem_bath_2p,
        ),
    )
}


def evaluate_model(model_id: str, t, params: dict) -> np.ndarray:
    """Evaluate a registered model; unknown params raise KeyError."""
    model = MODELS[model_id]
    values = dict(model.defaults)
    for key, val in params.items():
        if key not in model.params:
            raise KeyError(f"model {model_id!r} has no parameter {key!r}")
        values[key] = val
    return np.asarray(model.fn(np.asarray(t, float), **values), dtype=float)
