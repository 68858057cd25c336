"""One thermostated phase-space step: transport, friction, momentum filter.

The conservative part advances the amplitude along classical
characteristics with a symmetric split step: half drift (diagonal in the
(k_R, P) representation), full force kick (diagonal in (R, k_P)), half
drift. Both factors are pure phases, so the step is exactly unitary and
its splitting error is second order in dt.

Friction contracts momentum by rescaling the amplitude's P argument,
psi(R, P) -> e^{s/2} psi(R, e^s P) with s = gamma*dt, realized by
band-limited resampling; amplitude stretched past the grid edge is
dropped and the lost mass is reported as a boundary leak.

Diffusion multiplies the (R, k_P) components by cos(sigma_H k_P) and
renormalizes; the squared norm before renormalization is the success
probability of the postselected filter. The filter width sigma_H is
calibrated against friction by the discrete fluctuation-dissipation
relation sigma_H^2 = 2 mu T_int (1 - e^{-2s}), where the internal
temperature T_int = T_phys / (1 + tanh(s)/2) pre-compensates the
second-order kinetic bias of the cosine filter.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .electronic import PesModel, tabulate_pes
from .errors import (BoundaryLeakWarning, ConfigurationError,
                     ConvergenceError, FilterBandWarning, FilterCollapseError)
from .grid import Basis, KvnState, PhaseSpaceGrid, fourier_P, fourier_R

BOUNDARY_LEAK_TOLERANCE = 1e-3
FILTER_COLLAPSE_FLOOR = 1e-6


@dataclass(frozen=True)
class LangevinParams:
    """Calibrated thermostat parameters (atomic units throughout)."""

    mu: float
    gamma: float
    dt: float
    t_phys: float
    t_int: float
    sigma_h: float
    correction: bool = True

    @property
    def s(self) -> float:
        return self.gamma * self.dt


@dataclass
class StepReport:
    """Bookkeeping for the non-unitary parts of one step."""

    success_probability: float
    log_success: float
    friction_leak: float = 0.0


@dataclass(frozen=True)
class BiasResult:
    bias: float
    t_kin: float
    n_steps: int


def corrected_internal_temperature(t_phys: float, s: float) -> float:
    """Internal target temperature compensating the filter's kinetic bias."""
    return t_phys / (1.0 + 0.5 * math.tanh(s))


def calibrate(mu: float, gamma: float, dt: float, t_phys: float,
              correction: bool = True) -> LangevinParams:
    """Fix T_int and the filter width from the physical inputs."""
    if mu <= 0 or gamma <= 0 or dt <= 0 or t_phys <= 0:
        raise ConfigurationError(
            "mu, gamma, dt and t_phys must all be strictly positive")
    s = gamma * dt
    t_int = corrected_internal_temperature(t_phys, s) if correction else t_phys
    sigma_h = math.sqrt(2.0 * mu * t_int * (1.0 - math.exp(-2.0 * s)))
    return LangevinParams(mu=mu, gamma=gamma, dt=dt, t_phys=t_phys,
                          t_int=t_int, sigma_h=sigma_h, correction=correction)


class NvePropagator:
    """Precomputed phase tables for the conservative step at fixed dt."""

    def __init__(self, grid: PhaseSpaceGrid, pes: PesModel, mu: float,
                 dt: float):
        self.grid = grid
        self.mu = mu
        self.dt = dt
        _, self.force = tabulate_pes(pes, grid.R)
        self.half_drift = np.exp(-0.5j * dt * np.outer(grid.k_R, grid.P) / mu)
        self.kick = np.exp(-1j * dt * np.outer(self.force, grid.k_P))

    def step(self, state: KvnState) -> KvnState:
        st = fourier_R(state)
        amp = st.amplitudes * self.half_drift
        st = fourier_R(KvnState(amp, Basis.KR_P, state.grid))
        st = fourier_P(st)
        amp = st.amplitudes * self.kick
        st = fourier_P(KvnState(amp, Basis.R_KP, state.grid))
        st = fourier_R(st)
        amp = st.amplitudes * self.half_drift
        return fourier_R(KvnState(amp, Basis.KR_P, state.grid))


def nve_step(state: KvnState, pes: PesModel, mu: float, dt: float) -> KvnState:
    """One conservative step; builds the phase tables on the fly."""
    return NvePropagator(state.grid, pes, mu, dt).step(state)


class FrictionOperator:
    """Band-limited momentum dilation psi(P) -> e^{s/2} psi(e^s P).

    Resampling at the stretched abscissas is done with the exact discrete
    Fourier interpolant; requests landing outside the covered momentum
    interval evaluate to zero, which is where the boundary leak comes
    from. The Nyquist column uses the symmetric cosine convention.
    """

    def __init__(self, grid: PhaseSpaceGrid, s: float):
        if s < 0:
            raise ConfigurationError("gamma*dt must be nonnegative")
        self.grid = grid
        self.s = s
        if s == 0.0:
            self.matrix = None
            return
        n = grid.shape[1]
        target = np.exp(s) * grid.P
        u = (target - grid.p_min) / grid.dP
        valid = (target >= grid.p_min) & (target < grid.p_min + n * grid.dP)
        m = np.rint(np.fft.fftfreq(n) * n).astype(int)
        e = np.exp(2j * np.pi * np.outer(u, m) / n) / n
        e[:, n // 2] = np.cos(np.pi * u) / n
        e[~valid, :] = 0.0
        self.matrix = np.ascontiguousarray(e.T)

    def apply_raw(self, amplitudes: np.ndarray) -> np.ndarray:
        """Dilated but not yet renormalized amplitudes."""
        if self.matrix is None:
            return amplitudes.copy()
        spec = np.fft.fft(amplitudes, axis=1)
        return math.exp(0.5 * self.s) * (spec @ self.matrix)

    def apply(self, state: KvnState) -> tuple[KvnState, float]:
        """Returns the renormalized state and the boundary leak |1 - norm^2|.

        Warns when the leak exceeds BOUNDARY_LEAK_TOLERANCE: the packet is
        being squeezed against the momentum-grid edge.
        """
        if state.basis is not Basis.RP:
            raise ConfigurationError("friction acts in the (R, P) representation")
        if self.matrix is None:
            return state.copy(), 0.0
        amp = self.apply_raw(state.amplitudes)
        n2 = np.sum(np.abs(amp) ** 2) * state.grid.cell
        leak = abs(1.0 - n2)
        if leak > BOUNDARY_LEAK_TOLERANCE:
            warnings.warn(
                f"momentum-grid boundary leak {leak:.2e} exceeds "
                f"{BOUNDARY_LEAK_TOLERANCE:.0e}; widen the P range",
                BoundaryLeakWarning)
        if n2 <= 0.0:
            raise FilterCollapseError("friction removed the entire state")
        return KvnState(amp / np.sqrt(n2), Basis.RP, state.grid), leak


def friction_step(state: KvnState, gamma_dt: float) -> KvnState:
    """Single friction substep on a fresh operator table."""
    out, _ = FrictionOperator(state.grid, gamma_dt).apply(state)
    return out


def _filtered(state: KvnState, multiplier: np.ndarray) -> tuple[KvnState, StepReport]:
    spec = fourier_P(state)
    amp = spec.amplitudes * multiplier[None, :]
    p_success = float(np.sum(np.abs(amp) ** 2) * state.grid.cell)
    if p_success < FILTER_COLLAPSE_FLOOR:
        raise FilterCollapseError(
            f"filter success probability {p_success:.3e} below "
            f"{FILTER_COLLAPSE_FLOOR:.0e}")
    out = fourier_P(KvnState(amp / np.sqrt(p_success), Basis.R_KP, state.grid))
    return out, StepReport(success_probability=p_success,
                           log_success=math.log(p_success))


def diffusion_step(state: KvnState, sigma_h: float) -> tuple[KvnState, StepReport]:
    """Postselected cosine momentum filter (renormalization = postselection)."""
    return _filtered(state, np.cos(sigma_h * state.grid.k_P))


def ideal_diffusion_step(state: KvnState, sigma_h: float) -> tuple[KvnState, StepReport]:
    """Gaussian stand-in for the cosine filter (its exact quadratic part).

    Test hook only: with this kernel the calibrated fixed point
    <P^2> = mu*T_int holds exactly for Gaussian states.
    """
    return _filtered(state, np.exp(-0.5 * (sigma_h * state.grid.k_P) ** 2))


class LangevinStepper:
    """Fused step with all operator tables built once.

    Order per step: conservative transport, friction, diffusion filter,
    renormalization.
    """

    def __init__(self, grid: PhaseSpaceGrid, pes: PesModel,
                 params: LangevinParams):
        self.grid = grid
        self.params = params
        self.nve = NvePropagator(grid, pes, params.mu, params.dt)
        self.friction = FrictionOperator(grid, params.s)
        self.cos_filter = np.cos(params.sigma_h * grid.k_P)
        # transport shears density into high k_P; if the filter argument
        # leaves the first quarter-wave there, |cos| ~ 1 lobes let that
        # content survive and alias instead of diffusing away, which can
        # destabilize long runs. Keeping dP >= 2 sigma_H avoids the lobes.
        band_edge = params.sigma_h * float(np.max(np.abs(grid.k_P)))
        if band_edge > 0.5 * math.pi:
            warnings.warn(
                f"filter argument reaches {band_edge:.2f} rad at the k_P "
                f"band edge (> pi/2); widen the momentum range so that "
                f"dP >= 2*sigma_H = {2.0 * params.sigma_h:.3g} or reduce "
                f"the step", FilterBandWarning)

    def step(self, state: KvnState) -> tuple[KvnState, StepReport]:
        st = self.nve.step(state)
        st, leak = self.friction.apply(st)
        st, report = _filtered(st, self.cos_filter)
        report.friction_leak = leak
        return st, report


def langevin_step(state: KvnState, pes: PesModel,
                  params: LangevinParams) -> tuple[KvnState, StepReport]:
    """One full thermostated step (transport, friction, filter)."""
    return LangevinStepper(state.grid, pes, params).step(state)


def momentum_bias_experiment(grid: PhaseSpaceGrid, params: LangevinParams,
                             n_steps_max: int = 20000, window: int = 50,
                             rel_tol: float = 1e-8) -> BiasResult:
    """Measure the stationary kinetic-temperature bias of the thermostat.

    Runs friction + diffusion only (no transport, so the potential is
    irrelevant and R is a spectator axis) from a Maxwell packet at T_int
    until the kinetic temperature is stationary: relative change below
    rel_tol across a `window`-step window. Returns the relative deviation
    of T_kin from T_int.
    """
    friction = FrictionOperator(grid, params.s)
    cos_filter = np.cos(params.sigma_h * grid.k_P)

    amp = np.ones(grid.shape, dtype=np.complex128)
    amp *= np.exp(-grid.P[None, :] ** 2 / (4.0 * params.mu * params.t_int))
    amp /= np.sqrt(np.sum(np.abs(amp) ** 2) * grid.cell)
    state = KvnState(amp, Basis.RP, grid)

    p_sq = grid.P[None, :] ** 2
    history = []
    for step in range(1, n_steps_max + 1):
        state, _ = friction.apply(state)
        state, _ = _filtered(state, cos_filter)
        t_kin = float(np.sum(np.abs(state.amplitudes) ** 2 * p_sq)
                      * grid.cell / params.mu)
        history.append(t_kin)
        if step > window:
            if abs(history[-1] - history[-1 - window]) < rel_tol * history[-1]:
                bias = (t_kin - params.t_int) / params.t_int
                return BiasResult(bias=bias, t_kin=t_kin, n_steps=step)
    raise ConvergenceError(
        f"kinetic temperature not stationary after {n_steps_max} steps")
