"""Inverse problems: trace fits, gyromagnetic slope, and localization maps.

Two chi-squared localization maps are produced the same way the forward
models are defined: reporter positions from multi-angle DEER traces
(profile construction: the scanned spin is fixed at each map cell while the
remaining spins and nuisance parameters are re-optimized) and proton
positions from hyperfine parameters (uncertainty propagated by sampling).
Probability densities are exp(-chi2/2), normalized over the grid.

All stochastic steps (multi-starts, samplers) take explicit seeds and are
deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field
from typing import Sequence

import numpy as np
from scipy.optimize import least_squares

from .constants import CONSTANTS
from .errors import (
    ConvergenceError,
    DegenerateAbscissaError,
    NoSolutionError,
    OptimizerBudgetError,
    ZeroDofError,
)
from .physics import (
    FieldSetting,
    GeometrySolution,
    HyperfineParams,
    geometry_from_hyperfine,
)
from .signals import MODELS, NO_DECAY, DecoherenceParams, SignalTrace, evaluate_model

# ---------------------------------------------------------------------------
# chi-squared and trace fitting
# ---------------------------------------------------------------------------


def reduced_chi2(data: SignalTrace, model_signal, n_params: int) -> float:
    """Sum((y - m)/sigma)^2 / (N - n_params)."""
    model_signal = np.asarray(model_signal, dtype=float)
    if not data.sigma.size or np.any(data.sigma <= 0):
        raise ValueError("data must carry strictly positive sigmas")
    if len(data) <= n_params:
        raise ZeroDofError(f"{len(data)} points cannot constrain {n_params} parameters")
    resid = (data.signal - model_signal) / data.sigma
    return float(np.sum(resid**2) / (len(data) - n_params))


def _init_lattice(x0, lo, hi, count, rng) -> list[np.ndarray]:
    """Extra optimizer starts: a jittered regular lattice over the bounded
    parameter box, with relative jitter for unbounded parameters."""
    if count <= 0:
        return []
    k = len(x0)
    bounded = np.isfinite(lo) & np.isfinite(hi)
    per_axis = max(2, math.ceil(count ** (1.0 / max(1, int(bounded.sum())))))
    axes = []
    for idx in range(k):
        if bounded[idx]:
            step = (hi[idx] - lo[idx]) / per_axis
            axes.append(lo[idx] + step * (0.5 + np.arange(per_axis)))
        else:
            axes.append(np.array([x0[idx]]))
    lattice = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, k)
    # visit lattice nodes nearest the user init first
    order = np.argsort(np.linalg.norm(lattice - x0, axis=1))
    starts = []
    for node in lattice[order[:count]]:
        start = node.copy()
        start[bounded] += 0.1 * rng.standard_normal(int(bounded.sum())) * (
            (hi[bounded] - lo[bounded]) / per_axis
        )
        free_jitter = ~bounded
        start[free_jitter] = x0[free_jitter] * (
            1.0 + 0.3 * rng.standard_normal(int(free_jitter.sum()))
        )
        starts.append(np.clip(start, lo, hi))
    return starts


@dataclass(frozen=True)
class FitResult:
    """Best-fit parameters with covariance and goodness of fit."""

    parameters: dict
    param_order: tuple
    covariance: np.ndarray
    chi2: float
    reduced_chi2: float
    dof: int
    singular_jacobian: bool = False

    def sigma(self, name: str) -> float:
        idx = self.param_order.index(name)
        return math.sqrt(max(0.0, float(self.covariance[idx, idx])))


def fit_trace(
    model_id: str,
    data: SignalTrace,
    init: dict,
    bounds: dict | None = None,
    fixed: dict | None = None,
    n_starts: int = 9,
    seed: int = 0,
    max_restarts: int | None = None,
) -> FitResult:
    """Weighted least-squares fit of a registered model to a trace.

    Free parameters are the keys of `init`; `fixed` pins the rest.  The
    damped Gauss-Newton solver is restarted from `n_starts` jittered
    initializations and the best local optimum wins.  Noiseless traces
    (empty sigma) are fitted with unit weights.

    Raises
    ------
    ConvergenceError
        If no start converges within the configured restarts.
    """
    model = MODELS[model_id]
    bounds = bounds or {}
    fixed = dict(fixed or {})
    free = list(init)
    for name in list(init) + list(bounds) + list(fixed):
        if name not in model.params:
            raise KeyError(f"model {model_id!r} has no parameter {name!r}")
    if set(free) & set(fixed):
        raise ValueError("a parameter cannot be both free and fixed")
    lo = np.array([bounds.get(k, (-np.inf, np.inf))[0] for k in free], dtype=float)
    hi = np.array([bounds.get(k, (-np.inf, np.inf))[1] for k in free], dtype=float)
    x0 = np.array([float(init[k]) for k in free])
    if np.any(x0 < lo) or np.any(x0 > hi):
        raise ValueError("init values must lie within the bounds")
    weights = 1.0 / data.sigma if data.sigma.size else np.ones(len(data))
    if data.sigma.size and np.any(data.sigma <= 0):
        raise ValueError("data sigmas must be strictly positive")

    def residual(x):
        params = dict(fixed)
        params.update(dict(zip(free, x)))
        return (data.signal - evaluate_model(model_id, data.abscissa, params)) * weights

    rng = np.random.default_rng(seed)
    starts = [x0] + _init_lattice(x0, lo, hi, max(0, n_starts - 1), rng)
    if max_restarts is not None:
        starts = starts[: max_restarts + 1]

    best = None
    for start in starts:
        try:
            res = least_squares(residual, start, bounds=(lo, hi), method="trf")
        except (ValueError, FloatingPointError):
            continue
        if not res.success:
            continue
        if best is None or res.cost < best.cost:
            best = res
    if best is None:
        raise ConvergenceError(
            f"fit of model {model_id!r} failed to converge in {len(starts)} starts"
        )
    dof = max(1, len(data) - len(free))
    chi2 = 2.0 * best.cost
    jtj = best.jac.T @ best.jac
    singular = False
    try:
        cov = np.linalg.inv(jtj)
        if not np.all(np.isfinite(cov)) or np.linalg.cond(jtj) > 1e12:
            raise np.linalg.LinAlgError
    except np.linalg.LinAlgError:
        cov = np.linalg.pinv(jtj)
        singular = True
    cov = 0.5 * (cov + cov.T)
    return FitResult(
        parameters=dict(zip(free, (float(v) for v in best.x))),
        param_order=tuple(free),
        covariance=cov,
        chi2=float(chi2),
        reduced_chi2=float(chi2 / (len(data) - len(free)))
        if len(data) > len(free)
        else float("nan"),
        dof=len(data) - len(free),
        singular_jacobian=singular,
    )


# ---------------------------------------------------------------------------
# gyromagnetic slope
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GyroFitResult:
    """Weighted through-origin slope of omega_n versus B."""

    slope: float
    slope_sigma: float
    dof: int
    low_dof: bool
    reduced_chi2: float


def fit_gyromagnetic(points: Sequence[tuple[float, float, float]]) -> GyroFitResult:
    """Weighted linear fit of (B, omega_n, sigma) points through the origin.

    A single point is allowed but flagged low-dof.

    Raises
    ------
    DegenerateAbscissaError
        If every field value is zero (slope undetermined).
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    if len(pts) == 0:
        raise ValueError("need at least one point")
    B, omega, sigma = pts[:, 0], pts[:, 1], pts[:, 2]
    if np.any(sigma <= 0):
        raise ValueError("sigmas must be strictly positive")
    w = 1.0 / sigma**2
    denom = float(np.sum(w * B * B))
    if denom <= 0.0:
        raise DegenerateAbscissaError("all field values vanish; slope undetermined")
    slope = float(np.sum(w * B * omega)) / denom
    slope_sigma = 1.0 / math.sqrt(denom)
    dof = len(pts) - 1
    chi2 = float(np.sum(w * (omega - slope * B) ** 2))
    return GyroFitResult(
        slope=slope,
        slope_sigma=slope_sigma,
        dof=dof,
        low_dof=dof < 1,
        reduced_chi2=chi2 / dof if dof >= 1 else float("nan"),
    )


# ---------------------------------------------------------------------------
# probability maps
# ---------------------------------------------------------------------------


@dataclass
class ProbabilityMap:
    """Normalized position likelihood on a rectangular grid.

    density[i, j] belongs to (x_centers[i], y_centers[j]); the discrete sum
    over all cells is 1.
    """

    x_centers: np.ndarray
    y_centers: np.ndarray
    density: np.ndarray
    axes: tuple[str, str] = ("x", "y")
    meta: dict = dataclass_field(default_factory=dict)

    def __post_init__(self):
        self.x_centers = np.asarray(self.x_centers, dtype=float)
        self.y_centers = np.asarray(self.y_centers, dtype=float)
        self.density = np.asarray(self.density, dtype=float)
        if self.density.shape != (len(self.x_centers), len(self.y_centers)):
            raise ValueError("density shape must be (len(x), len(y))")
        if not np.all(np.isfinite(self.density)) or np.any(self.density < 0):
            raise ValueError("density must be finite and non-negative")

    @classmethod
    def from_chi2(cls, x_centers, y_centers, chi2, axes=("x", "y"), meta=None):
        chi2 = np.asarray(chi2, dtype=float)
        density = np.exp(-0.5 * (chi2 - chi2.min()))
        density /= density.sum()
        return cls(x_centers, y_centers, density, axes=tuple(axes), meta=meta or {})

    @property
    def total(self) -> float:
        return float(self.density.sum())

    def argmax(self) -> tuple[float, float]:
        i, j = np.unravel_index(int(np.argmax(self.density)), self.density.shape)
        return float(self.x_centers[i]), float(self.y_centers[j])


@dataclass(frozen=True)
class PlaneGrid:
    """Square-cell rectangular grid on the surface plane, nm."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    cell: float

    def __post_init__(self):
        if self.cell <= 0 or self.x_max <= self.x_min or self.y_max <= self.y_min:
            raise ValueError("grid extents must be increasing and cell > 0")

    @property
    def x_centers(self) -> np.ndarray:
        return np.arange(self.x_min + 0.5 * self.cell, self.x_max, self.cell)

    @property
    def y_centers(self) -> np.ndarray:
        return np.arange(self.y_min + 0.5 * self.cell, self.y_max, self.cell)


@dataclass(frozen=True)
class MultiAngleDataset:
    """DEER traces taken at distinct field directions."""

    entries: tuple[tuple[FieldSetting, SignalTrace], ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        directions = {tuple(np.round(e[0].direction, 12)) for e in self.entries}
        if len(directions) < 2:
            raise ValueError("need traces at >= 2 distinct field directions")


# ---------------------------------------------------------------------------
# reporter localization from multi-angle DEER
# ---------------------------------------------------------------------------


@dataclass
class ReporterLocalization:
    """Superposed per-spin probability map plus the joint best fit."""

    map: ProbabilityMap
    per_spin_maps: tuple[ProbabilityMap, ...]
    best_sites: np.ndarray
    best_chi2: float
    depth: float
    optimizer_calls: int


class _DeerObjective:
    """Chi-squared machinery for reporter positions on the surface plane."""

    def __init__(self, dataset, flip_prob, dec, nv_position, constants=CONSTANTS):
        self.flip_prob = float(flip_prob)
        self.nv = np.asarray(nv_position, dtype=float)
        self.k_ee = constants.k_ee
        self.fields = [e[0] for e in dataset.entries]
        self.traces = [e[1] for e in dataset.entries]
        self.envelopes = []
        self.weights = []
        for _, trace in dataset.entries:
            t = trace.abscissa
            env = np.exp(-((t / dec.t2_nv) ** dec.stretch_exponent))
            self.envelopes.append(env)
            w = 1.0 / trace.sigma if trace.sigma.size else np.ones(len(trace))
            self.weights.append(w)

    def couplings(self, xy: np.ndarray, depth: float) -> np.ndarray:
        """Dipolar couplings, shape (..., n_fields), for sites (..., 2)."""
        xy = np.asarray(xy, dtype=float)
        pos = np.concatenate(
            [xy, np.full(xy.shape[:-1] + (1,), depth)], axis=-1
        ) - self.nv
        r = np.linalg.norm(pos, axis=-1)
        out = np.empty(xy.shape[:-1] + (len(self.fields),))
        for idx, field in enumerate(self.fields):
            cos_t = pos @ field.direction / r
            out[..., idx] = self.k_ee * (1.0 - 3.0 * cos_t**2) / r**3
        return out

    def residuals(self, xy_all: np.ndarray, depth: float) -> np.ndarray:
        """Stacked weighted residuals for a full configuration (n, 2)."""
        d = self.couplings(xy_all, depth)  # (n_spins, n_fields)
        chunks = []
        p = self.flip_prob
        for idx, trace in enumerate(self.traces):
            model = self.envelopes[idx].copy()
            for spin in range(d.shape[0]):
                model = model * (
                    1.0 - p + p * np.cos(0.5 * d[spin, idx] * trace.abscissa)
                )
            chunks.append((trace.signal - model) * self.weights[idx])
        return np.concatenate(chunks)

    def chi2(self, xy_all: np.ndarray, depth: float) -> float:
        res = self.residuals(xy_all, depth)
        return float(np.sum(res**2))

    def chi2_single_grid(
        self, xy_cells: np.ndarray, depth: float, fixed_factors=None
    ) -> np.ndarray:
        """Vectorized chi-squared over (n_cells, 2) candidate positions.

        fixed_factors, when given, holds one (n_t,) modulation factor per
        field from spins already placed; the candidate's factor multiplies
        it (used by the greedy initializer).
        """
        d = self.couplings(xy_cells, depth)  # (n_cells, n_fields)
        p = self.flip_prob
        chi2 = np.zeros(len(xy_cells))
        for idx, trace in enumerate(self.traces):
            model = self.envelopes[idx][None, :] * (
                1.0 - p + p * np.cos(0.5 * d[:, idx : idx + 1] * trace.abscissa[None, :])
            )
            if fixed_factors is not None:
                model = model * fixed_factors[idx][None, :]
            resid = (trace.signal[None, :] - model) * self.weights[idx][None, :]
            chi2 += np.sum(resid**2, axis=1)
        return chi2

    def _factor(self, site: np.ndarray, depth: float) -> list[np.ndarray]:
        """Per-field modulation factor of one spin."""
        p = self.flip_prob
        d = self.couplings(site[None, :], depth)[0]
        return [
            1.0 - p + p * np.cos(0.5 * d[idx] * trace.abscissa)
            for idx, trace in enumerate(self.traces)
        ]

    def greedy_sites(self, cells: np.ndarray, n_spins: int, depth: float) -> np.ndarray:
        """Sequentially place spins at the best conditioned grid cell each.

        The DEER model is a product over spins, so after placing a spin its
        modulation factor is frozen into `fixed_factors` and the next spin
        is scanned against the residual structure.
        """
        fixed = [np.ones_like(tr.abscissa) for tr in self.traces]
        chosen = []
        for _ in range(n_spins):
            chi2 = self.chi2_single_grid(cells, depth, fixed_factors=fixed)
            best = cells[int(np.argmin(chi2))]
            chosen.append(best)
            factor = self._factor(best, depth)
            fixed = [fixed[idx] * factor[idx] for idx in range(len(fixed))]
        return self.refine_sites(cells, np.asarray(chosen), depth)

    def refine_sites(
        self, cells: np.ndarray, sites: np.ndarray, depth: float, sweeps: int = 3
    ) -> np.ndarray:
        """Coordinate-descent sweeps: rescan each spin over the grid with the
        others held fixed (cheap because the scan is vectorized)."""
        sites = np.array(sites, dtype=float)
        for _ in range(sweeps):
            moved = False
            for s in range(len(sites)):
                fixed = [np.ones_like(tr.abscissa) for tr in self.traces]
                for o in range(len(sites)):
                    if o == s:
                        continue
                    factor = self._factor(sites[o], depth)
                    fixed = [fixed[idx] * factor[idx] for idx in range(len(fixed))]
                chi2 = self.chi2_single_grid(cells, depth, fixed_factors=fixed)
                new = cells[int(np.argmin(chi2))]
                if not np.allclose(new, sites[s]):
                    moved = True
                sites[s] = new
            if not moved:
                break
        return sites


def localize_reporters(
    dataset: MultiAngleDataset,
    grid: PlaneGrid,
    nv_depth: float | tuple[float, float],
    n_spins: int,
    flip_prob: float = 1.0,
    dec: DecoherenceParams = NO_DECAY,
    nv_position=(0.0, 0.0, 0.0),
    n_starts: int = 5,
    seed: int = 0,
    optimizer_budget: int | None = None,
) -> ReporterLocalization:
    """Reconstruct reporter positions on the surface plane from DEER data.

    For every grid cell and every scanned spin, the scanned spin is fixed at
    the cell center while the remaining spins (and the NV depth, when given
    as an interval) are re-optimized; the cell records the minimum
    chi-squared, converted to a normalized exp(-chi2/2) density.  Per-spin
    maps are superposed into the returned map.

    nv_depth is the fixed surface-plane height (nm) or a (lo, hi) interval
    profiled as a nuisance parameter.

    Raises
    ------
    OptimizerBudgetError
        If the number of local optimizations exceeds `optimizer_budget`
        (the partial map built so far is attached to the error).
    """
    if n_spins < 1:
        raise ValueError("n_spins must be >= 1")
    objective = _DeerObjective(dataset, flip_prob, dec, nv_position)
    rng = np.random.default_rng(seed)
    fit_depth = not np.isscalar(nv_depth)
    depth_bounds = tuple(nv_depth) if fit_depth else (float(nv_depth),) * 2
    depth0 = 0.5 * (depth_bounds[0] + depth_bounds[1])

    calls = 0

    def budget_check(partial_builder=None):
        nonlocal calls
        calls += 1
        if optimizer_budget is not None and calls > optimizer_budget:
            raise OptimizerBudgetError(
                f"optimizer budget {optimizer_budget} exceeded",
                partial_map=partial_builder() if partial_builder else None,
            )

    lo = [grid.x_min, grid.y_min] * n_spins + ([depth_bounds[0]] if fit_depth else [])
    hi = [grid.x_max, grid.y_max] * n_spins + ([depth_bounds[1]] if fit_depth else [])

    x_centers, y_centers = grid.x_centers, grid.y_centers
    cells = np.stack(
        np.meshgrid(x_centers, y_centers, indexing="ij"), axis=-1
    ).reshape(-1, 2)

    def polish(xy_sites, depth_start):
        n_free = len(xy_sites)
        p_lo = [grid.x_min, grid.y_min] * n_free + ([depth_bounds[0]] if fit_depth else [])
        p_hi = [grid.x_max, grid.y_max] * n_free + ([depth_bounds[1]] if fit_depth else [])
        x0 = np.asarray(xy_sites, float).ravel()
        if fit_depth:
            x0 = np.concatenate([x0, [depth_start]])

        def resid(x):
            if fit_depth:
                return objective.residuals(x[:-1].reshape(-1, 2), float(x[-1]))
            return objective.residuals(x.reshape(-1, 2), depth0)

        budget_check()
        res = least_squares(resid, x0, bounds=(p_lo, p_hi), method="trf")
        if fit_depth:
            return res.x[:-1].reshape(-1, 2), float(res.x[-1]), 2.0 * float(res.cost)
        return res.x.reshape(-1, 2), depth0, 2.0 * float(res.cost)

    def staged_fit(first_cell):
        """Add spins one at a time, polishing jointly after each addition.

        The product model is heavily multimodal; incremental placement with
        continuous refits reliably reaches the global basin where joint
        random multi-starts do not.
        """
        sites = np.asarray([first_cell], dtype=float)
        sites, depth, cost = polish(sites, depth0)
        for _ in range(1, n_spins):
            fixed = [np.ones_like(tr.abscissa) for tr in objective.traces]
            for placed in sites:
                factor = objective._factor(placed, depth)
                fixed = [fixed[i] * factor[i] for i in range(len(fixed))]
            scan = objective.chi2_single_grid(cells, depth, fixed_factors=fixed)
            sites = np.vstack([sites, cells[int(np.argmin(scan))]])
            sites, depth, cost = polish(sites, depth)
        if n_spins > 1:
            sites = objective.refine_sites(cells, sites, depth)
            sites, depth, cost = polish(sites, depth)
        return sites, depth, cost

    # -- stage 1: joint best fit over all spins ------------------------------
    # beam over the best separated cells of the single-spin scan, then a few
    # random joint starts as a safety net
    scan0 = objective.chi2_single_grid(cells, depth0)
    beam, taken = [], []
    for idx in np.argsort(scan0):
        cell = cells[idx]
        if all(np.linalg.norm(cell - prev) > 3.0 * grid.cell for prev in taken):
            beam.append(cell)
            taken.append(cell)
        if len(beam) >= max(4, n_starts):
            break
    best_xy, best_depth, best_chi2 = None, depth0, np.inf
    for first_cell in beam:
        sites, depth, cost = staged_fit(first_cell)
        if cost < best_chi2:
            best_xy, best_depth, best_chi2 = sites, depth, cost
    for _ in range(max(0, n_starts - 1)):
        start = rng.uniform(lo, hi)
        xy = (start[:-1] if fit_depth else start).reshape(-1, 2)
        sites, depth, cost = polish(xy, start[-1] if fit_depth else depth0)
        if cost < best_chi2:
            best_xy, best_depth, best_chi2 = sites, depth, cost
    if best_xy is None:
        raise ConvergenceError("joint DEER fit failed")

    # -- stage 2: profile map per scanned spin ------------------------------
    per_spin = []
    for scanned in range(n_spins):
        if n_spins == 1 and not fit_depth:
            chi2 = objective.chi2_single_grid(cells, depth0)
        else:
            others = [s for s in range(n_spins) if s != scanned]
            warm = best_xy[others].ravel()
            chi2 = np.empty(len(cells))

            def cell_residual(x, cell_xy):
                if fit_depth:
                    xy_free, depth = x[:-1].reshape(-1, 2), float(x[-1])
                else:
                    xy_free, depth = x.reshape(-1, 2), depth0
                xy_all = np.empty((n_spins, 2))
                xy_all[scanned] = cell_xy
                xy_all[others] = xy_free
                return objective.residuals(xy_all, depth)

            lo_free = [grid.x_min, grid.y_min] * len(others) + (
                [depth_bounds[0]] if fit_depth else []
            )
            hi_free = [grid.x_max, grid.y_max] * len(others) + (
                [depth_bounds[1]] if fit_depth else []
            )
            for c_idx, cell in enumerate(cells):
                starts = [np.concatenate([warm, [best_depth]]) if fit_depth else warm]
                for extra in range(max(0, n_starts - 1)):
                    jit = warm + grid.cell * rng.standard_normal(len(warm))
                    jit = np.clip(jit, lo_free[: len(warm)], hi_free[: len(warm)])
                    starts.append(
                        np.concatenate([jit, [best_depth]]) if fit_depth else jit
                    )
                cost = np.inf
                for start in starts:
                    budget_check(lambda: _superpose(per_spin, x_centers, y_centers))
                    res = least_squares(
                        cell_residual,
                        start,
                        bounds=(lo_free, hi_free),
                        method="trf",
                        args=(cell,),
                        ftol=1e-6,
                        xtol=1e-6,
                        gtol=1e-6,
                    )
                    cost = min(cost, 2.0 * float(res.cost))
                chi2[c_idx] = cost
        per_spin.append(
            ProbabilityMap.from_chi2(
                x_centers,
                y_centers,
                chi2.reshape(len(x_centers), len(y_centers)),
                meta={"scanned_spin": scanned},
            )
        )

    combined = _superpose(per_spin, x_centers, y_centers)
    sites = np.column_stack([best_xy, np.full(n_spins, best_depth)])
    return ReporterLocalization(
        map=combined,
        per_spin_maps=tuple(per_spin),
        best_sites=sites,
        best_chi2=best_chi2,
        depth=best_depth,
        optimizer_calls=calls,
    )


def _superpose(per_spin, x_centers, y_centers) -> ProbabilityMap | None:
    if not per_spin:
        return None
    density = np.mean([m.density for m in per_spin], axis=0)
    density = density / density.sum()
    return ProbabilityMap(x_centers, y_centers, density, meta={"superposed": True})


# ---------------------------------------------------------------------------
# proton localization from hyperfine parameters
# ---------------------------------------------------------------------------


@dataclass
class BranchPosterior:
    """Sampled posterior of one a-sign branch."""

    a_sign: int
    map: ProbabilityMap
    r_samples: np.ndarray
    theta_samples: np.ndarray

    def r_interval(self, level: float = 0.6827) -> tuple[float, float]:
        q = 50.0 * (1.0 - level), 50.0 * (1.0 + level)
        return tuple(np.percentile(self.r_samples, q))

    def theta_interval(self, level: float = 0.6827) -> tuple[float, float]:
        q = 50.0 * (1.0 - level), 50.0 * (1.0 + level)
        return tuple(np.percentile(self.theta_samples, q))


@dataclass
class ProtonLocalization:
    """Per-branch posterior maps plus the midpoint point estimates."""

    branches: tuple[BranchPosterior, ...]
    point: GeometrySolution

    @property
    def primary(self) -> BranchPosterior:
        return self.branches[0]


def localize_protons(
    params: HyperfineParams,
    covariance,
    a0_range: tuple[float, float] = (0.0, 0.0),
    n_samples: int = 20000,
    seed: int = 0,
    grid_cell: float = 0.005,
    grid_max: float | None = None,
) -> ProtonLocalization:
    """Propagate (a, b) uncertainty and the contact-term interval to position.

    Samples (a, b) from their Gaussian, a0 uniformly over `a0_range`, inverts
    every sample to (r, theta) on both sign branches, and histograms the
    cloud on the (r sin theta, r cos theta) half plane (nm).  Branch order
    matches :func:`geometry_from_hyperfine` (low-theta branch first).

    Raises
    ------
    NoSolutionError
        If no sample yields a valid inversion.
    """
    cov = np.zeros((2, 2)) if covariance is None else np.asarray(covariance, float)
    if cov.shape != (2, 2):
        raise ValueError("covariance must be 2x2 for (a, b)")
    if not np.allclose(cov, cov.T):
        raise ValueError("covariance must be symmetric")
    rng = np.random.default_rng(seed)
    mean = np.array([params.a, params.b], dtype=float)
    draws = rng.multivariate_normal(mean, cov, size=n_samples, method="svd")
    a0 = rng.uniform(min(a0_range), max(a0_range), size=n_samples)
    valid = draws[:, 1] > 0.0
    if not np.any(valid):
        raise NoSolutionError("no sample has b > 0; nothing to invert")
    a_s, b_s, a0_s = draws[valid, 0], draws[valid, 1], a0[valid]

    point = geometry_from_hyperfine(params, a0_range)
    branches = []
    for branch in point.branches:
        a_eff = branch.a_sign * a_s - a0_s
        k = 0.25 * (a_eff + np.sqrt(9.0 * a_eff**2 + 8.0 * b_s**2))
        ok = k > 0.0
        u = np.clip((1.0 - a_eff[ok] / k[ok]) / 3.0, 0.0, 1.0)
        r = (CONSTANTS.k_ep / k[ok]) ** (1.0 / 3.0)
        theta = np.degrees(np.arccos(np.sqrt(u)))
        if len(r) == 0:
            raise NoSolutionError(f"no sample inverts on branch {branch.a_sign:+d}")
        x = r * np.sin(np.radians(theta))
        z = r * np.cos(np.radians(theta))
        top = grid_max or max(x.max(), z.max()) * 1.1 + grid_cell
        edges_x = np.arange(0.0, top + grid_cell, grid_cell)
        edges_z = np.arange(0.0, top + grid_cell, grid_cell)
        hist, _, _ = np.histogram2d(x, z, bins=(edges_x, edges_z))
        density = hist / hist.sum()
        pmap = ProbabilityMap(
            x_centers=0.5 * (edges_x[:-1] + edges_x[1:]),
            y_centers=0.5 * (edges_z[:-1] + edges_z[1:]),
            density=density,
            axes=("r_sin_theta", "r_cos_theta"),
            meta={"a_sign": branch.a_sign},
        )
        branches.append(
            BranchPosterior(
                a_sign=branch.a_sign, map=pmap, r_samples=r, theta_samples=theta
            )
        )
    return ProtonLocalization(branches=tuple(branches), point=point)
