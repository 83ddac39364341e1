"""Level structure, coupling and geometry formulas (forward and inverse).

Scene convention: NV at the origin, surface plane at z = depth, NV axis along
the (111)-type unit vector stored on the system.  Quantization axis for all
secular coupling formulas is the applied field direction.  Angular
frequencies rad/us, fields G, distances nm (angstrom only in display
helpers); see :mod:`reporterspin.constants`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .constants import CONSTANTS, PhysicalConstants
from .errors import (
    CoincidentSitesError,
    DegenerateRadiusError,
    FieldMisalignmentError,
    NoSolutionError,
)

#: Angle where 1 - 3 cos^2(theta) vanishes, degrees.
MAGIC_ANGLE_DEG = math.degrees(math.acos(1.0 / math.sqrt(3.0)))

#: Minimum allowed separation between point-dipole sites, nm.
MIN_SITE_DISTANCE_NM = 0.05

#: Default (111) quantization axis in the lab frame.
NV_AXIS_111 = np.array([1.0, 1.0, 1.0]) / math.sqrt(3.0)


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FieldSetting:
    """Static applied magnetic field: magnitude in G plus a unit direction.

    The direction is normalized on construction; a zero vector or negative
    magnitude is rejected.
    """

    magnitude: float
    direction: np.ndarray = dataclass_field(
        default_factory=lambda: np.array([0.0, 0.0, 1.0])
    )

    def __post_init__(self):
        if self.magnitude < 0:
            raise ValueError("field magnitude must be >= 0")
        direction = np.asarray(self.direction, dtype=float)
        if direction.shape != (3,):
            raise ValueError("field direction must be a 3-vector")
        norm = float(np.linalg.norm(direction))
        if norm == 0.0:
            raise ValueError("field direction must be nonzero")
        object.__setattr__(self, "direction", direction / norm)


@dataclass(frozen=True)
class HyperfineParams:
    """Secular/pseudo-secular/contact couplings (a, b, a0), rad/us.

    b is stored non-negative: its sign is an azimuth choice that no echo
    observable resolves.
    """

    a: float
    b: float
    a0: float = 0.0

    def __post_init__(self):
        if self.b < 0:
            raise ValueError("b must be >= 0 (sign is absorbed into the azimuth)")


@dataclass(frozen=True)
class SpinSystem:
    """Geometric scene: NV, reporter sites, proton sites, applied field.

    Parameters
    ----------
    nv_position : (3,) array, nm
        NV location; the origin by convention.
    nv_axis : (3,) array
        NV quantization axis (normalized on construction).
    reporter_sites : (n, 3) array, nm
        Surface electron spins (S=1/2).
    proton_sites : (m, 3) array, nm
        Nuclear spins (I=1/2).  When used for hyperfine geometry these are
        positions relative to their coupled reporter.
    field : FieldSetting
    surface_z : float or None
        Surface-plane height (= NV depth).  None derives it as the median
        reporter/proton z and only then checks planarity.
    surface_tolerance : float
        Allowed out-of-plane scatter of surface sites, nm.
    """

    nv_position: np.ndarray
    nv_axis: np.ndarray
    reporter_sites: np.ndarray
    proton_sites: np.ndarray
    field: FieldSetting
    surface_z: float | None = None
    surface_tolerance: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "nv_position", np.asarray(self.nv_position, float))
        axis = np.asarray(self.nv_axis, dtype=float)
        object.__setattr__(self, "nv_axis", axis / np.linalg.norm(axis))
        reporters = np.asarray(self.reporter_sites, dtype=float).reshape(-1, 3)
        protons = np.asarray(self.proton_sites, dtype=float).reshape(-1, 3)
        object.__setattr__(self, "reporter_sites", reporters)
        object.__setattr__(self, "proton_sites", protons)
        surface = np.vstack([reporters, protons]) if reporters.size + protons.size else None
        if surface is not None:
            plane_z = self.surface_z
            if plane_z is None:
                plane_z = float(np.median(surface[:, 2]))
                object.__setattr__(self, "surface_z", plane_z)
            off = np.abs(surface[:, 2] - plane_z)
            if np.any(off > self.surface_tolerance):
                raise ValueError(
                    "site z-coordinates deviate from the surface plane "
                    f"z={plane_z:.3f} nm by up to {off.max():.3f} nm "
                    f"(tolerance {self.surface_tolerance} nm)"
                )
        sites = np.vstack([self.nv_position[None, :], reporters, protons])
        for i in range(len(sites)):
            for j in range(i + 1, len(sites)):
                dij = np.linalg.norm(sites[i] - sites[j])
                if dij <= MIN_SITE_DISTANCE_NM:
                    raise CoincidentSitesError(
                        f"sites {i} and {j} are {dij:.4f} nm apart "
                        f"(minimum {MIN_SITE_DISTANCE_NM} nm)"
                    )

    @property
    def all_sites(self) -> np.ndarray:
        return np.vstack(
            [self.nv_position[None, :], self.reporter_sites, self.proton_sites]
        )


# ---------------------------------------------------------------------------
# transition frequencies
# ---------------------------------------------------------------------------


def zeeman_nv(
    B: FieldSetting,
    nv_axis: np.ndarray | None = None,
    max_misalignment_deg: float = 5.0,
    constants: PhysicalConstants = CONSTANTS,
) -> float:
    """Frequency of the ms=0 <-> ms=-1 NV transition, delta_nv - gamma_e B.

    Valid for fields applied along the NV axis, below the ground-state level
    anticrossing (~1024 G is inside the window but flagged only by physics,
    not rejected).  If `nv_axis` is given the field direction must lie within
    `max_misalignment_deg` of it; the linear formula is wrong off axis.

    Raises
    ------
    FieldMisalignmentError
        If the field direction is further than `max_misalignment_deg` from
        `nv_axis` (and the magnitude is nonzero).
    ValueError
        If the magnitude is outside the [0, 1500] G validity window.
    """
    if not 0.0 <= B.magnitude <= 1500.0:
        raise ValueError("zeeman_nv is valid for |B| in [0, 1500] G")
    if nv_axis is not None and B.magnitude > 0:
        axis = np.asarray(nv_axis, dtype=float)
        axis = axis / np.linalg.norm(axis)
        cosang = float(np.clip(np.dot(B.direction, axis), -1.0, 1.0))
        angle = math.degrees(math.acos(abs(cosang)))
        if angle > max_misalignment_deg:
            raise FieldMisalignmentError(
                f"field is {angle:.2f} deg off the NV axis "
                f"(limit {max_misalignment_deg} deg)"
            )
    return constants.delta_nv - constants.gamma_e * B.magnitude


def zeeman_reporter(B: FieldSetting, constants: PhysicalConstants = CONSTANTS) -> float:
    """Reporter spin (S=1/2, g=2) transition frequency gamma_e B."""
    return constants.gamma_e * B.magnitude


def larmor_proton(B: FieldSetting, constants: PhysicalConstants = CONSTANTS) -> float:
    """Proton Larmor frequency gamma_p B."""
    return constants.gamma_p * B.magnitude


def zeeman_diagram(
    B: FieldSetting, constants: PhysicalConstants = CONSTANTS
) -> dict[str, float]:
    """All Zeeman branches vs field: NV ms=+-1 transitions and the reporter.

    The ms=+1 branch (delta_nv + gamma_e B) appears only here; everywhere
    else the NV is the effective {ms=0, ms=-1} two-level system.
    """
    return {
        "nv_lower": constants.delta_nv - constants.gamma_e * B.magnitude,
        "nv_upper": constants.delta_nv + constants.gamma_e * B.magnitude,
        "reporter": constants.gamma_e * B.magnitude,
    }


# ---------------------------------------------------------------------------
# dipolar / hyperfine geometry
# ---------------------------------------------------------------------------


def dipolar_coupling_ee(
    site_i: np.ndarray,
    site_j: np.ndarray,
    B: FieldSetting,
    constants: PhysicalConstants = CONSTANTS,
) -> float:
    """Secular electron-electron dipolar coupling k_ee (1-3cos^2 theta)/r^3.

    theta is the angle between the separation vector and the field direction.
    Units rad/us with sites in nm.
    """
    rvec = np.asarray(site_i, dtype=float) - np.asarray(site_j, dtype=float)
    r = float(np.linalg.norm(rvec))
    if r < MIN_SITE_DISTANCE_NM:
        raise CoincidentSitesError(
            f"sites are {r:.4f} nm apart (minimum {MIN_SITE_DISTANCE_NM} nm)"
        )
    cos_theta = float(np.dot(rvec, B.direction)) / r
    return constants.k_ee * (1.0 - 3.0 * cos_theta**2) / r**3


def hyperfine_from_geometry(
    r_nm: float,
    theta_deg: float,
    a0: float = 0.0,
    constants: PhysicalConstants = CONSTANTS,
) -> HyperfineParams:
    """Hyperfine (a, b) of a proton at polar coordinates (r, theta) from an
    electron spin, theta measured from the field axis.

    a = a0 + k_ep (1 - 3 cos^2 theta)/r^3 and b = |k_ep 3 cos theta sin
    theta / r^3|; the sign of b is an azimuth convention (stored >= 0).
    """
    if r_nm < MIN_SITE_DISTANCE_NM:
        raise DegenerateRadiusError(
            f"r = {r_nm:.4f} nm below the minimum {MIN_SITE_DISTANCE_NM} nm"
        )
    if not 0.0 <= theta_deg <= 180.0:
        raise ValueError("theta must be in [0, 180] degrees")
    theta = math.radians(theta_deg)
    k = constants.k_ep / r_nm**3
    a = a0 + k * (1.0 - 3.0 * math.cos(theta) ** 2)
    b = abs(k * 3.0 * math.cos(theta) * math.sin(theta))
    return HyperfineParams(a=a, b=b, a0=a0)


@dataclass(frozen=True)
class BranchEstimate:
    """One sign hypothesis of the (r, theta) inversion.

    a_sign is the sign applied to the measured secular coupling; contours
    sweep the contact-term interval (same length arrays, one row per a0
    sample).
    """

    a_sign: int
    r_nm: float
    theta_deg: float
    contour_a0: np.ndarray
    contour_r_nm: np.ndarray
    contour_theta_deg: np.ndarray


@dataclass(frozen=True)
class GeometrySolution:
    """Both sign branches of the geometry inversion, low-theta branch first."""

    branches: tuple[BranchEstimate, ...]

    @property
    def primary(self) -> BranchEstimate:
        return self.branches[0]

    @property
    def r_nm(self) -> float:
        return self.primary.r_nm

    @property
    def theta_deg(self) -> float:
        return self.primary.theta_deg


def _invert_dipolar_pair(a_eff: float, b: float, constants: PhysicalConstants):
    """Solve a_eff = k(1-3u), b = 3k sqrt(u(1-u)) for k and u = cos^2 theta.

    Eliminating u gives 2k^2 - k a_eff - (a_eff^2 + b^2) = 0, whose positive
    root is k = (a_eff + sqrt(9 a_eff^2 + 8 b^2))/4.
    """
    k = (a_eff + math.sqrt(9.0 * a_eff**2 + 8.0 * b**2)) / 4.0
    if k <= 0.0:
        raise NoSolutionError(
            f"no positive dipolar strength reproduces a_eff={a_eff}, b={b}"
        )
    u = (1.0 - a_eff / k) / 3.0
    if u < -1e-12 or u > 1.0 + 1e-12:
        raise NoSolutionError(
            f"cos^2(theta) = {u:.6f} out of [0, 1] for a_eff={a_eff}, b={b}"
        )
    u = min(max(u, 0.0), 1.0)
    r = (constants.k_ep / k) ** (1.0 / 3.0)
    theta = math.degrees(math.acos(math.sqrt(u)))
    return r, theta


def geometry_from_hyperfine(
    params: HyperfineParams,
    a0_range: tuple[float, float] | float = (0.0, 0.0),
    n_contour: int = 33,
    constants: PhysicalConstants = CONSTANTS,
) -> GeometrySolution:
    """Invert (a, b) to proton polar coordinates (r, theta), theta in (0, 90).

    The sign of the measured secular coupling is not observable from the two
    echo modulation frequencies alone, so both hypotheses are solved; the
    low-theta branch (below the magic angle) is listed first.  Point
    estimates use the midpoint of `a0_range`; the contour arrays sweep the
    interval.

    Raises
    ------
    DegenerateRadiusError
        If b <= 0 (theta pinned at a branch endpoint 0 or 90 degrees, radius
        undetermined).
    NoSolutionError
        If no (r, theta) is consistent with the inputs.
    """
    if params.b <= 0.0:
        raise DegenerateRadiusError(
            "b = 0 pins theta at 0 or 90 degrees and leaves the radius "
            "undetermined"
        )
    if abs(params.a) + params.b <= 0.0:
        raise NoSolutionError("need |a| + b > 0")
    if np.isscalar(a0_range):
        a0_lo = a0_hi = float(a0_range)
    else:
        a0_lo, a0_hi = (float(a0_range[0]), float(a0_range[1]))
        if a0_hi < a0_lo:
            a0_lo, a0_hi = a0_hi, a0_lo
    a0_mid = 0.5 * (a0_lo + a0_hi)
    a0_samples = (
        np.array([a0_mid]) if a0_hi == a0_lo else np.linspace(a0_lo, a0_hi, n_contour)
    )

    branches = []
    for sign in (+1, -1):
        r_mid, theta_mid = _invert_dipolar_pair(
            sign * params.a - a0_mid, params.b, constants
        )
        rs, thetas = [], []
        for a0 in a0_samples:
            r, theta = _invert_dipolar_pair(sign * params.a - a0, params.b, constants)
            rs.append(r)
            thetas.append(theta)
        branches.append(
            BranchEstimate(
                a_sign=sign,
                r_nm=r_mid,
                theta_deg=theta_mid,
                contour_a0=a0_samples.copy(),
                contour_r_nm=np.array(rs),
                contour_theta_deg=np.array(thetas),
            )
        )
    branches.sort(key=lambda br: br.theta_deg)
    return GeometrySolution(branches=tuple(branches))


# ---------------------------------------------------------------------------
# echo modulation frequencies
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EseemBranches:
    """Echo modulation frequencies and depth for one electron-proton pair.

    depth is the two-pulse (Mims) modulation depth k = (b wn / w+ w-)^2;
    depth_scaling = 2 b wn / (w+ w-) is reported alongside for traceability
    (it is 2 sqrt(depth)).
    """

    omega_plus: float
    omega_minus: float
    depth: float
    depth_scaling: float


def eseem_frequencies(params: HyperfineParams, omega_n: float) -> EseemBranches:
    """Branch frequencies w+- = sqrt((+-a/2 - wn)^2 + b^2/4) and Mims depth.

    For omega_n = 0 or b = 0 the depth vanishes (no modulation).
    """
    if omega_n < 0:
        raise ValueError("omega_n must be >= 0")
    half_a = 0.5 * params.a
    omega_plus = math.hypot(half_a - omega_n, 0.5 * params.b)
    omega_minus = math.hypot(-half_a - omega_n, 0.5 * params.b)
    if omega_plus * omega_minus == 0.0:
        depth = 0.0 if params.b * omega_n == 0.0 else math.inf
        scaling = 2.0 * math.sqrt(depth) if depth != math.inf else math.inf
        return EseemBranches(omega_plus, omega_minus, depth, scaling)
    ratio = params.b * omega_n / (omega_plus * omega_minus)
    return EseemBranches(omega_plus, omega_minus, ratio**2, 2.0 * ratio)


def hyperfine_from_eseem(
    omega_plus: float, omega_minus: float, omega_n: float
) -> HyperfineParams:
    """Invert measured branch frequencies (w+, w-) at Larmor wn to (a, b).

    Uses the identities w+^2 - w-^2 = -2 a wn and w+^2 + w-^2 = a^2/2 +
    2 wn^2 + b^2/2.  The returned a follows the labeling convention where
    w+ carries the +a/2 detuning (a > 0 when w+ < w-).

    Raises
    ------
    NoSolutionError
        If no real b reproduces the inputs.
    """
    if omega_n <= 0:
        raise ValueError("omega_n must be > 0 for the inversion")
    a = (omega_minus**2 - omega_plus**2) / (2.0 * omega_n)
    b_sq = 2.0 * (omega_plus**2 + omega_minus**2) - a**2 - 4.0 * omega_n**2
    if b_sq < 0.0:
        if b_sq > -1e-9 * max(omega_plus, omega_minus) ** 2:
            b_sq = 0.0
        else:
            raise NoSolutionError(
                f"no real b for w+={omega_plus}, w-={omega_minus}, wn={omega_n}"
            )
    return HyperfineParams(a=a, b=math.sqrt(b_sq))


# ---------------------------------------------------------------------------
# relaxation-based separation bound
# ---------------------------------------------------------------------------


def min_separation_from_t1(
    t1_s: float, geometry_factor: float, constants: PhysicalConstants = CONSTANTS
) -> float:
    """Lower bound on the mean reporter separation from the measured T1.

    Models mutual flip-flops as a rate k_ee/(g r^3) and equates it to 1/T1,
    giving r_min = (g k_ee T1)^(1/3).  The geometry factor g absorbs the
    ensemble averaging over the network: g = 1/4 is an isolated like-spin
    pair; g ~ 1.3e-2 calibrates r_min = 5 nm at T1 = 29.4 us.
    """
    if t1_s <= 0 or geometry_factor <= 0:
        raise ValueError("t1_s and geometry_factor must be > 0")
    return (geometry_factor * constants.k_ee * t1_s) ** (1.0 / 3.0)
