"""Classical reference engines used to cross-check the grid dynamics.

Nothing here touches the wavefunction machinery: trajectories are plain
(R, P) arrays, thermal states come from exact Maxwell draws plus a
Metropolis walk, and the stationary momentum-filter bias is evaluated
straight from its infinite-product form. These are the independent
"second route" for every physics claim made by the propagator and the
readout modules.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import SamplerWarning
from .electronic import PesModel
from .grid import PhaseSpaceGrid

_CHUNK = 4096


def trajectory_stream(seed: int, index: int) -> np.random.Generator:
    """Per-trajectory RNG keyed by (seed, index), independent of scheduling."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed,
                                                        spawn_key=(index,)))


@dataclass(frozen=True)
class TrajectoryEnsemble:
    """Recorded ensemble series; axis 0 is time, axis 1 the trajectory."""

    times: np.ndarray
    R: np.ndarray
    P: np.ndarray

    @property
    def n_traj(self) -> int:
        return self.R.shape[1]


def _record_steps(n_steps: int, record_every: int) -> np.ndarray:
    steps = np.arange(0, n_steps + 1, record_every)
    if steps[-1] != n_steps:
        steps = np.append(steps, n_steps)
    return steps


def verlet_ensemble(pes: PesModel, mu: float, r0, p0, dt: float,
                    n_steps: int, record_every: int = 1,
                    omega_ref: float | None = None) -> TrajectoryEnsemble:
    """Energy-conserving half-kick/drift/half-kick integration.

    The drift is split in two halves so that the zero-friction limit of
    the thermostated integrator below reproduces this one step for step.
    """
    if omega_ref is not None and dt * omega_ref >= 0.1:
        raise ValueError(
            f"dt*omega_ref = {dt * omega_ref:.3f} too large for a faithful "
            "reference trajectory (need < 0.1)")
    r = np.atleast_1d(np.array(r0, dtype=float)).copy()
    p = np.atleast_1d(np.array(p0, dtype=float)).copy()
    r, p = np.broadcast_arrays(r, p)
    r, p = r.copy(), p.copy()

    steps = _record_steps(n_steps, record_every)
    out_r = np.empty((len(steps), len(r)))
    out_p = np.empty((len(steps), len(r)))
    rec = 0
    f = pes.f(r)
    for step in range(n_steps + 1):
        if step == steps[rec]:
            out_r[rec], out_p[rec] = r, p
            rec += 1
        if step == n_steps:
            break
        p = p + 0.5 * dt * f
        r = r + 0.5 * dt * p / mu
        r = r + 0.5 * dt * p / mu
        f = pes.f(r)
        p = p + 0.5 * dt * f
    return TrajectoryEnsemble(times=steps * dt, R=out_r, P=out_p)


def verlet_trajectory(pes: PesModel, mu: float, r0: float, p0: float,
                      dt: float, n_steps: int,
                      omega_ref: float | None = None):
    """Single reference trajectory: returns (times, R, P) 1-D arrays."""
    ens = verlet_ensemble(pes, mu, r0, p0, dt, n_steps, record_every=1,
                          omega_ref=omega_ref)
    return ens.times, ens.R[:, 0], ens.P[:, 0]


def langevin_ensemble(pes: PesModel, mu: float, gamma: float, t: float,
                      dt: float, n_steps: int, n_traj: int, seed: int,
                      r0, p0=0.0, record_every: int = 1) -> TrajectoryEnsemble:
    """Thermostated ensemble (kick/drift/thermostat/drift/kick splitting).

    Noise comes from one counter-based stream per trajectory, so results
    are reproducible regardless of chunking. gamma = 0 turns the
    thermostat substep into the exact identity and the integrator reduces
    to the energy-conserving one above.
    """
    r_init = np.broadcast_to(np.asarray(r0, dtype=float), (n_traj,))
    p_init = np.broadcast_to(np.asarray(p0, dtype=float), (n_traj,))
    c1 = np.exp(-gamma * dt)
    c2 = np.sqrt(mu * t * (1.0 - c1 * c1))

    steps = _record_steps(n_steps, record_every)
    out_r = np.empty((len(steps), n_traj))
    out_p = np.empty((len(steps), n_traj))

    for lo in range(0, n_traj, _CHUNK):
        hi = min(lo + _CHUNK, n_traj)
        noise = np.empty((n_steps, hi - lo))
        for i in range(lo, hi):
            noise[:, i - lo] = trajectory_stream(seed, i).standard_normal(n_steps)
        r = r_init[lo:hi].copy()
        p = p_init[lo:hi].copy()
        f = pes.f(r)
        rec = 0
        for step in range(n_steps + 1):
            if step == steps[rec]:
                out_r[rec, lo:hi], out_p[rec, lo:hi] = r, p
                rec += 1
            if step == n_steps:
                break
            p = p + 0.5 * dt * f
            r = r + 0.5 * dt * p / mu
            p = c1 * p + c2 * noise[step]
            r = r + 0.5 * dt * p / mu
            f = pes.f(r)
            p = p + 0.5 * dt * f
    return TrajectoryEnsemble(times=steps * dt, R=out_r, P=out_p)


def canonical_sampler(pes: PesModel, mu: float, t: float, n_samples: int,
                      seed: int, r_range: tuple[float, float]):
    """Draw (R, P) from the canonical density on r_range.

    P is an exact Maxwell draw. R runs an adaptive random-walk Metropolis
    chain on exp(-V/T): 1000-sweep burn-in with step adaptation, then one
    harvest every 10 sweeps across parallel walkers. A post-adaptation
    acceptance rate outside [0.1, 0.9] emits SamplerWarning.
    """
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed))
    p = rng.normal(0.0, np.sqrt(mu * t), n_samples)

    lo, hi = r_range
    scan = np.linspace(lo, hi, 1024)
    v_scan = pes.v(scan)
    n_chains = min(64, n_samples)
    start = scan[np.argmin(v_scan)]
    r = np.full(n_chains, start) + 1e-3 * (hi - lo) * rng.standard_normal(n_chains)
    r = np.clip(r, lo, hi)
    v = pes.v(r)
    step = 0.1 * (hi - lo)

    def sweep(step, count_stats=False):
        nonlocal r, v
        prop = r + step * rng.standard_normal(n_chains)
        inside = (prop >= lo) & (prop <= hi)
        v_prop = np.where(inside, pes.v(np.clip(prop, lo, hi)), np.inf)
        accept = inside & (np.log(rng.random(n_chains))
                           < -(v_prop - v) / t)
        r = np.where(accept, prop, r)
        v = np.where(accept, v_prop, v)
        return accept.mean()

    # burn-in with step adaptation toward ~50% acceptance
    acc_window = []
    for i in range(1000):
        acc_window.append(sweep(step))
        if (i + 1) % 50 == 0:
            rate = float(np.mean(acc_window[-50:]))
            step *= np.exp(rate - 0.5)

    harvested = []
    acc_after = []
    while sum(len(h) for h in harvested) < n_samples:
        for _ in range(10):
            acc_after.append(sweep(step))
        harvested.append(r.copy())
    rate = float(np.mean(acc_after))
    if not (0.1 <= rate <= 0.9):
        warnings.warn(f"Metropolis acceptance {rate:.2f} outside [0.1, 0.9] "
                      "after adaptation", SamplerWarning)
    r_out = np.concatenate(harvested)[:n_samples]
    return r_out, p


def histogram_density(r_samples: np.ndarray, p_samples: np.ndarray,
                      grid: PhaseSpaceGrid) -> np.ndarray:
    """Sample histogram on node-centered cells, normalized like a density.

    Out-of-range samples are dropped but still count in the normalization,
    mirroring a grid state that simply has no mass there.
    """
    r_edges = np.append(grid.R - 0.5 * grid.dR, grid.R[-1] + 0.5 * grid.dR)
    p_edges = np.append(grid.P - 0.5 * grid.dP, grid.P[-1] + 0.5 * grid.dP)
    counts, _, _ = np.histogram2d(r_samples, p_samples,
                                  bins=(r_edges, p_edges))
    return counts / (len(r_samples) * grid.cell)


def cos_filter_stationary_bias(s: float, n_terms: int = 200,
                               n_points: int = 1 << 17,
                               kappa_max: float = 10.0) -> float:
    """Relative excess of <P^2> over its target for the filtered map.

    The stationary amplitude of the dilate-then-filter momentum map is an
    infinite product of shrinking cosine filters (truncated at n_terms) in
    the variable conjugate to P. Working in units where the target second
    moment is 1, this returns <P^2> - 1 from direct quadrature of the
    truncated product and its derivative.
    """
    if s <= 0:
        return 0.0
    y = np.exp(-s)
    sigma = np.sqrt(2.0 * (1.0 - y * y))
    kappa = np.linspace(-kappa_max, kappa_max, n_points + 1)
    psi = np.ones_like(kappa)
    for r in range(n_terms):
        psi *= np.cos(sigma * y ** r * kappa)
    # the dropped r >= n_terms factors have shrunk deep into their
    # quadratic/quartic regime; close the remainder analytically
    # (at small s the bare truncation would still be missing e^(-2 n s)
    # of the stationary width)
    ytail = y ** n_terms
    a_tail = sigma ** 2 * ytail ** 2 / (2.0 * (1.0 - y ** 2))
    b_tail = sigma ** 4 * ytail ** 4 / (12.0 * (1.0 - y ** 4))
    psi = psi * np.exp(-a_tail * kappa ** 2 - b_tail * kappa ** 4)
    dpsi = np.gradient(psi, kappa)
    num = np.trapezoid(dpsi * dpsi, kappa)
    den = np.trapezoid(psi * psi, kappa)
    return float(num / den - 1.0)
