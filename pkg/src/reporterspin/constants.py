"""Physical constants, loaded from a versioned key-value text file.

The packaged default lives in ``data/constants_v1.txt``; the environment
variable ``REPORTERSPIN_CONSTANTS`` or an explicit path overrides it so that
downstream runs can pin alternative constant sets.  All angular frequencies
are rad/us, fields are G, distances are nm.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from importlib import resources

from .errors import SchemaError, VersionMismatchError

ENV_CONSTANTS = "REPORTERSPIN_CONSTANTS"

_SUPPORTED_VERSIONS = (1,)

_REQUIRED_KEYS = (
    "version",
    "delta_nv",
    "gamma_e",
    "gamma_p",
    "gamma_e_si",
    "gamma_p_si",
    "hbar_si",
    "mu0_si",
    "k_ee",
    "k_ep",
)


@dataclass(frozen=True)
class PhysicalConstants:
    """Frozen constant set in package units.

    Attributes
    ----------
    delta_nv : float
        NV zero-field splitting, rad/us.
    gamma_e : float
        Electron gyromagnetic ratio, rad/(us G).
    gamma_p : float
        Proton gyromagnetic ratio, rad/(us G).
    gamma_e_si, gamma_p_si : float
        The SI gyromagnetic ratios (rad/(s T)) the dipolar prefactors derive
        from.
    hbar_si, mu0_si : float
        SI constants entering the dipolar prefactors.
    k_ee : float
        Electron-electron dipolar prefactor (mu0/4pi) hbar gamma_e_si^2,
        rad nm^3/us.
    k_ep : float
        Electron-proton dipolar prefactor (mu0/4pi) hbar gamma_e_si
        gamma_p_si, rad nm^3/us.
    """

    version: int
    delta_nv: float
    gamma_e: float
    gamma_p: float
    gamma_e_si: float
    gamma_p_si: float
    hbar_si: float
    mu0_si: float
    k_ee: float
    k_ep: float


def derive_dipolar_prefactors(
    gamma_i_si: float, gamma_j_si: float, hbar_si: float, mu0_si: float
) -> float:
    """Dipolar prefactor (mu0/4pi) hbar gamma_i gamma_j in rad nm^3/us.

    Conversion: 1 m^3 = 1e27 nm^3 and 1 s^-1 = 1e-6 us^-1, so the SI value in
    rad m^3/s picks up a net factor 1e21.
    """
    return mu0_si / (4.0 * math.pi) * hbar_si * gamma_i_si * gamma_j_si * 1e21


def parse_constants(text: str, source: str = "<string>") -> PhysicalConstants:
    """Parse a key-value constants file into a :class:`PhysicalConstants`."""
    values: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SchemaError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        try:
            values[key] = float(value.strip())
        except ValueError as exc:
            raise SchemaError(f"{source}:{lineno}: non-numeric value for {key!r}") from exc
    missing = [k for k in _REQUIRED_KEYS if k not in values]
    if missing:
        raise SchemaError(f"{source}: missing required constants: {', '.join(missing)}")
    version = int(values["version"])
    if version not in _SUPPORTED_VERSIONS:
        raise VersionMismatchError(
            f"{source}: constants version {version} not in supported {_SUPPORTED_VERSIONS}"
        )
    return PhysicalConstants(
        version=version,
        **{k: values[k] for k in _REQUIRED_KEYS if k != "version"},
    )


def load_constants(path: str | os.PathLike | None = None) -> PhysicalConstants:
    """Load constants from `path`, the env override, or the packaged default."""
    if path is None:
        path = os.environ.get(ENV_CONSTANTS)
    if path is None:
        text = (
            resources.files("reporterspin.data").joinpath("constants_v1.txt").read_text()
        )
        return parse_constants(text, source="constants_v1.txt")
    with open(path, "r", encoding="utf-8") as fh:
        return parse_constants(fh.read(), source=str(path))


# Default constant set used throughout the package unless a caller passes
# its own (the env override is honored at import time).
CONSTANTS = load_constants()
