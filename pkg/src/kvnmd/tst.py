"""Static canonical rate readout on the phase-space grid.

The rate comes out of a single canonical state with no propagation at
all: encode the Boltzmann density with zero phase, weight the positive
momentum flux with a smoothed delta at the dividing surface, and divide
by the reactant-side population.  Because the state covers the whole
grid at once there is no trajectory-count detection floor; a classical
crossing counter is included to exhibit exactly that floor.

Temperatures cross module boundaries in kelvin; everything else is in
atomic units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import SECONDS_PER_AU_TIME, kelvin_to_hartree
from .diagnostics import canonical_reference
from .electronic import PesModel
from .errors import ConfigurationError, ResolutionError, SingularityError
from .grid import Basis, KvnState, PhaseSpaceGrid
from .oracles import canonical_sampler, verlet_ensemble

SURFACE_MASS_TOLERANCE = 0.01


@dataclass(frozen=True)
class TstConfig:
    """Dividing-surface placement and the temperature ladder."""

    r_dividing: float
    sigma: float | None = None  # smoothing width; default 2*dR of the grid
    temperatures: tuple[float, ...] = ()  # kelvin

    def __post_init__(self):
        if self.sigma is not None and self.sigma <= 0.0:
            raise ConfigurationError("surface smoothing width must be > 0")
        if any(t <= 0.0 for t in self.temperatures):
            raise ConfigurationError("temperatures must be positive")


@dataclass(frozen=True)
class TstResult:
    t_kelvin: float
    flux_au: float  # positive-direction surface flux, 1/a.u. time
    population: float  # reactant-side weight, dimensionless
    k_au: float

    @property
    def k_per_second(self) -> float:
        return self.k_au / SECONDS_PER_AU_TIME


@dataclass(frozen=True)
class ArrheniusFit:
    results: tuple[TstResult, ...]
    ln_prefactor: float
    activation_energy: float  # hartree, from the slope against 1/T


@dataclass(frozen=True)
class CrossingResult:
    """Finite-time trajectory-counting estimate and its detection floor."""

    n_cross: int
    k_cross: float
    k_min: float


def analytic_canonical_state(grid: PhaseSpaceGrid, pes: PesModel, mu: float,
                             t_phys: float) -> KvnState:
    """Boltzmann amplitudes sqrt(rho_eq) with zero phase, normalized."""
    rho = canonical_reference(grid, pes, mu, t_phys)
    return KvnState(np.sqrt(rho).astype(complex), Basis.RP, grid)


def _check_surface(grid: PhaseSpaceGrid, cfg: TstConfig) -> None:
    if not grid.r_min < cfg.r_dividing < grid.r_max:
        raise ConfigurationError(
            f"dividing surface {cfg.r_dividing} outside the grid range "
            f"({grid.r_min}, {grid.r_max})")


def _surface_weights(grid: PhaseSpaceGrid, cfg: TstConfig) -> np.ndarray:
    """Grid-renormalized Gaussian delta along R, unit mass under sum*dR."""
    _check_surface(grid, cfg)
    sigma = 2.0 * grid.dR if cfg.sigma is None else cfg.sigma
    if sigma < grid.dR:
        raise ResolutionError(
            f"surface width {sigma:.3g} below the grid step {grid.dR:.3g}")
    x = grid.R - cfg.r_dividing
    delta = np.exp(-0.5 * (x / sigma) ** 2) / (sigma * math.sqrt(2 * math.pi))
    mass = float(delta.sum()) * grid.dR
    if abs(mass - 1.0) > SURFACE_MASS_TOLERANCE:
        raise ResolutionError(
            f"dividing surface poorly resolved: delta mass {mass:.4f} on the "
            "grid (surface too close to a boundary or width under-resolved)")
    return delta / mass


def dividing_surface_flux(state: KvnState, mu: float,
                          cfg: TstConfig) -> float:
    """Positive-momentum probability flux through the dividing surface.

    Diagonal sum delta_sigma(R - R_div) * P/mu over P > 0, weighted by the
    cell probabilities |psi|^2 dR dP.
    """
    if state.basis is not Basis.RP:
        raise ConfigurationError("flux needs the (R, P) basis")
    grid = state.grid
    delta = _surface_weights(grid, cfg)
    velocity = np.where(grid.P > 0.0, grid.P / mu, 0.0)
    prob = (np.abs(state.amplitudes) ** 2) * grid.cell
    return float(delta @ prob @ velocity)


def reactant_population(state: KvnState, cfg: TstConfig) -> float:
    """Total probability on the reactant side R < R_div."""
    if state.basis is not Basis.RP:
        raise ConfigurationError("population needs the (R, P) basis")
    grid = state.grid
    _check_surface(grid, cfg)
    mask = grid.R < cfg.r_dividing
    prob = (np.abs(state.amplitudes[mask]) ** 2) * grid.cell
    return float(prob.sum())


def tst_rate(grid: PhaseSpaceGrid, pes: PesModel, mu: float, t_kelvin: float,
             cfg: TstConfig) -> TstResult:
    """Flux-over-population rate from the analytic canonical state."""
    if t_kelvin <= 0.0:
        raise ConfigurationError("temperature must be positive")
    state = analytic_canonical_state(grid, pes, mu,
                                     kelvin_to_hartree(t_kelvin))
    flux = dividing_surface_flux(state, mu, cfg)
    population = reactant_population(state, cfg)
    if population <= 0.0:
        raise SingularityError("no canonical weight on the reactant side")
    return TstResult(t_kelvin, flux, population, flux / population)


def arrhenius_sweep(grid: PhaseSpaceGrid, pes: PesModel, mu: float,
                    cfg: TstConfig) -> ArrheniusFit:
    """Rates over the temperature ladder plus a line through (1/T, ln k)."""
    if len(cfg.temperatures) < 3:
        raise ConfigurationError("Arrhenius fit needs at least 3 temperatures")
    results = tuple(tst_rate(grid, pes, mu, t, cfg)
                    for t in cfg.temperatures)
    if any(r.k_au <= 0.0 for r in results):
        raise SingularityError("non-positive rate in the Arrhenius sweep")
    inv_t = np.array([1.0 / kelvin_to_hartree(r.t_kelvin) for r in results])
    log_k = np.log([r.k_au for r in results])
    slope, intercept = np.polyfit(inv_t, log_k, 1)
    return ArrheniusFit(results, float(intercept), float(-slope))


def crossing_reference(pes: PesModel, mu: float, t_kelvin: float,
                       n_traj: int, t_sim: float, seed: int, cfg: TstConfig,
                       r_range: tuple[float, float],
                       dt: float = 2.0) -> CrossingResult:
    """Count positive surface crossings over finite NVE trajectories.

    Initial conditions are canonical samples; the trajectories themselves
    are conservative, so this is an equilibrium flux estimate, not a count
    of thermostated reaction events.  With zero observed crossings the
    result is pinned at the single-count floor k_min = 1/(n_traj * t_sim).
    """
    if n_traj < 1 or t_sim <= 0.0 or dt <= 0.0:
        raise ConfigurationError("need n_traj >= 1 and positive t_sim, dt")
    n_steps = max(1, int(round(t_sim / dt)))
    t_total = n_steps * dt
    r0, p0 = canonical_sampler(pes, mu, kelvin_to_hartree(t_kelvin), n_traj,
                               seed, r_range)
    ens = verlet_ensemble(pes, mu, r0, p0, dt, n_steps, record_every=1)
    upward = (ens.R[:-1] < cfg.r_dividing) & (ens.R[1:] >= cfg.r_dividing)
    n_cross = int(np.count_nonzero(upward))
    denom = n_traj * t_total
    return CrossingResult(n_cross, n_cross / denom, 1.0 / denom)
