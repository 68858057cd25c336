"""Vibrational spectra from phase-estimation readout of the transport step.

The readout excites the equilibrium state along one rotating branch,
A_pm = Q -+ i*Pi with Q = R - <R> and Pi = P/(mu*omega_ref), then computes
the exact ancilla distribution of textbook phase estimation run against
powers of the conservative one-step propagator. Because that propagator
is unitary, the full distribution follows from the autocorrelation
sequence c_d = <alpha|U^d|alpha> alone, so the sweep over 2^m readout
bins costs 2^m propagator applications and O(1) state memory.

A classical reference pipeline turns trajectory ensembles into a spectrum
on the identical bin grid: windowed correlation transform, folding into
the readout window, and convolution against the same finite-time kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import WAVENUMBER_PER_HARTREE
from .electronic import PesModel, tabulate_pes
from .errors import ConfigurationError, DomainError, SingularityError
from .grid import Basis, KvnState
from .oracles import TrajectoryEnsemble
from .propagator import NvePropagator

ZERO_BRANCH_FLOOR = 1e-12


@dataclass(frozen=True)
class QpeConfig:
    """Readout geometry: 2^m bins of width 2*pi/(tau*2^m) above omega_shift.

    tau is the evolution time per controlled power. inner_steps splits
    each power into that many transport sub-steps of size tau/inner_steps,
    which keeps the splitting error small when tau spans several
    vibration radians.
    """

    m: int
    tau: float
    omega_shift: float = 0.0
    branch: str = "plus"
    inner_steps: int = 1

    def __post_init__(self):
        if not 1 <= self.m <= 16:
            raise ConfigurationError(f"ancilla count m={self.m} outside [1, 16]")
        if self.tau <= 0.0:
            raise ConfigurationError("tau must be positive")
        if self.branch not in ("plus", "minus"):
            raise ConfigurationError(f"unknown branch {self.branch!r}")
        if self.inner_steps < 1:
            raise ConfigurationError("inner_steps must be >= 1")

    @property
    def n_bins(self) -> int:
        return 1 << self.m

    @property
    def bin_width(self) -> float:
        return 2.0 * math.pi / (self.tau * self.n_bins)

    @property
    def window_width(self) -> float:
        return 2.0 * math.pi / self.tau

    def bin_centers(self) -> np.ndarray:
        return self.omega_shift + self.bin_width * np.arange(self.n_bins)


@dataclass(frozen=True)
class SpectrumResult:
    """Bin-resolved probability readout of one branch."""

    omega_au: np.ndarray
    prob: np.ndarray
    branch: str
    branch_weight: float

    @property
    def omega_cm1(self) -> np.ndarray:
        return self.omega_au * WAVENUMBER_PER_HARTREE

    @property
    def peak_bin(self) -> int:
        """Strongest bin after folding onto the |omega| half-window.

        Bin j and bin M-j alias the same physical line with opposite
        rotation sense, so the argmax runs over max(P_j, P_{M-j}) for j
        below the midpoint.
        """
        m_bins = len(self.prob)
        half = m_bins // 2
        idx = np.arange(half)
        folded = np.maximum(self.prob[:half], self.prob[(-idx) % m_bins])
        return int(np.argmax(folded))


def fejer_kernel(theta, m: int):
    """Finite-time readout kernel, 2*pi-periodic, peak value 2^m."""
    n = 1 << m
    th = np.asarray(theta, dtype=float)
    half = 0.5 * th
    denom = np.sin(half)
    on_peak = np.isclose(np.abs(denom), 0.0, atol=1e-12)
    safe = np.where(on_peak, 1.0, denom)
    vals = (np.sin(n * half) / safe) ** 2 / n
    return np.where(on_peak, float(n), vals)


def reference_frequency(pes: PesModel, mu: float, r_nodes: np.ndarray) -> float:
    """Harmonic frequency from a local quadratic fit around the minimum.

    Fits V over the 11 nodes centered on the sampled minimum; the minimum
    must sit at least 5 nodes away from either edge.
    """
    v, _ = tabulate_pes(pes, r_nodes)
    i0 = int(np.argmin(v))
    if i0 < 5 or i0 > len(r_nodes) - 6:
        raise DomainError(
            "potential minimum sits on the grid boundary; widen the range")
    window = slice(i0 - 5, i0 + 6)
    coeffs = np.polyfit(r_nodes[window] - r_nodes[i0], v[window], 2)
    curvature = 2.0 * coeffs[0]
    if curvature <= 0.0:
        raise SingularityError("no positive curvature at the sampled minimum")
    return math.sqrt(curvature / mu)


def prepare_branch_states(eq_state: KvnState, omega_ref: float, mu: float):
    """Split a state into normalized rotating-branch excitations.

    Returns (alpha_plus, alpha_minus, (weight_plus, weight_minus)) where
    the weights are the squared norms of the unnormalized branch states.
    Both operators are real multipliers on the phase-space table, so the
    weights agree identically; they are still returned as a pair.
    """
    if eq_state.basis is not Basis.RP:
        raise ConfigurationError("branch preparation expects the (R, P) basis")
    if omega_ref <= 0.0 or mu <= 0.0:
        raise ConfigurationError("omega_ref and mu must be positive")
    g = eq_state.grid
    rho = np.abs(eq_state.amplitudes) ** 2
    r_mean = float(np.sum(rho * g.R[:, None]) * g.cell)
    q = (g.R - r_mean)[:, None]
    pi = (g.P / (mu * omega_ref))[None, :]

    states, weights = [], []
    for sign in (-1.0, +1.0):  # A_plus carries -i*Pi, A_minus carries +i*Pi
        amps = (q + sign * 1j * pi) * eq_state.amplitudes
        w = float(np.sum(np.abs(amps) ** 2) * g.cell)
        if w < ZERO_BRANCH_FLOOR:
            raise SingularityError(
                "branch state has zero norm; the input carries no spread "
                "in either R or P")
        states.append(KvnState(amps / math.sqrt(w), Basis.RP, g))
        weights.append(w)
    return states[0], states[1], (weights[0], weights[1])


def qpe_distribution(state: KvnState, step, cfg: QpeConfig) -> np.ndarray:
    """Exact ancilla distribution for an arbitrary one-power step callable.

    Uses the unitarity identity P_j = (1/M^2) [M + 2 Re sum_d (M-d)
    e^{i d (omega_shift tau + 2 pi j / M)} c_d] with the autocorrelation
    sequence c_d of the stepped state, algebraically equal to
    accumulating the full weighted sums but without 2^m live registers.
    """
    g = state.grid
    m_bins = cfg.n_bins
    bra = state.amplitudes.conj()
    corr = np.empty(m_bins, dtype=complex)
    corr[0] = np.sum(bra * state.amplitudes) * g.cell
    st = state.copy()
    for d in range(1, m_bins):
        st = step(st)
        corr[d] = np.sum(bra * st.amplitudes) * g.cell

    d_idx = np.arange(1, m_bins)
    theta = cfg.omega_shift * cfg.tau + 2.0 * math.pi * np.arange(m_bins) / m_bins
    phases = np.exp(1j * np.outer(theta, d_idx))
    prob = (m_bins * corr[0].real
            + 2.0 * (phases @ ((m_bins - d_idx) * corr[1:])).real) / m_bins ** 2
    return np.maximum(prob, 0.0)


def qpe_spectrum(state: KvnState, pes: PesModel, mu: float,
                 cfg: QpeConfig, branch_weight: float = 1.0) -> SpectrumResult:
    """Readout distribution of the conservative evolution of `state`."""
    dt = cfg.tau / cfg.inner_steps
    prop = NvePropagator(state.grid, pes, mu, dt)

    def one_power(st: KvnState) -> KvnState:
        for _ in range(cfg.inner_steps):
            st = prop.step(st)
        return st

    prob = qpe_distribution(state, one_power, cfg)
    return SpectrumResult(omega_au=cfg.bin_centers(), prob=prob,
                          branch=cfg.branch, branch_weight=branch_weight)


def branch_spectra(eq_state: KvnState, pes: PesModel, mu: float,
                   cfg: QpeConfig, omega_ref: float | None = None):
    """Prepare both branches of eq_state and read each one out."""
    if omega_ref is None:
        omega_ref = reference_frequency(pes, mu, eq_state.grid.R)
    alpha_p, alpha_m, (w_p, w_m) = prepare_branch_states(eq_state, omega_ref, mu)
    plus = qpe_spectrum(alpha_p, pes, mu,
                        QpeConfig(cfg.m, cfg.tau, cfg.omega_shift, "plus",
                                  cfg.inner_steps), branch_weight=w_p)
    minus = qpe_spectrum(alpha_m, pes, mu,
                         QpeConfig(cfg.m, cfg.tau, cfg.omega_shift, "minus",
                                   cfg.inner_steps), branch_weight=w_m)
    return plus, minus


def kvn_autocorrelation(eq_state: KvnState, pes: PesModel, mu: float,
                        dt: float, n_t: int) -> np.ndarray:
    """Centered-coordinate autocorrelation series under pure transport.

    Entry n is <psi|Q U^n Q|psi> at t = n*dt; entry 0 is <Q^2>, real and
    nonnegative.
    """
    if eq_state.basis is not Basis.RP:
        raise ConfigurationError("autocorrelation expects the (R, P) basis")
    g = eq_state.grid
    rho = np.abs(eq_state.amplitudes) ** 2
    r_mean = float(np.sum(rho * g.R[:, None]) * g.cell)
    q_amps = (g.R - r_mean)[:, None] * eq_state.amplitudes
    bra = q_amps.conj()

    prop = NvePropagator(g, pes, mu, dt)
    series = np.empty(n_t, dtype=complex)
    series[0] = np.sum(bra * q_amps) * g.cell
    st = KvnState(q_amps.copy(), Basis.RP, g)
    for n in range(1, n_t):
        st = prop.step(st)
        series[n] = np.sum(bra * st.amplitudes) * g.cell
    return series


_WINDOWS = {
    "hann": lambda n: np.hanning(n),
    "rect": lambda n: np.ones(n),
}


def aimd_reference_spectrum(trajectories: TrajectoryEnsemble, cfg: QpeConfig,
                            window: str = "hann", pad_factor: int = 16,
                            r_mean: float | None = None) -> SpectrumResult:
    """Bin a trajectory-ensemble spectrum onto the readout grid.

    The centered coordinate subtracts r_mean, estimated from all samples
    (time and ensemble average) when not given. The windowed correlation
    transform is evaluated on a zero-padded frequency grid, and the
    finite-time kernel is 2*pi-periodic, so convolving over the full fine
    grid performs the fold into the readout window automatically. The
    result is normalized to unit total weight; branch_weight reports
    <Q^2>.
    """
    if window not in _WINDOWS:
        raise ConfigurationError(f"unknown window {window!r}; "
                                 f"choose from {sorted(_WINDOWS)}")
    r = trajectories.R
    if r.ndim != 2 or r.shape[1] == 0:
        raise ConfigurationError("empty trajectory set")
    times = trajectories.times
    if len(times) < 2:
        raise ConfigurationError("need at least two trajectory records")
    dt_rec = float(times[1] - times[0])

    q = r - (np.mean(r) if r_mean is None else r_mean)
    c_t = np.mean(q * q[0], axis=1)
    n_t = len(c_t)

    windowed = _WINDOWS[window](n_t) * c_t * dt_rec
    n_fine = pad_factor * n_t
    # L*ifft supplies the e^{+i omega t} transform convention
    amp = n_fine * np.fft.ifft(windowed, n=n_fine)
    s_fine = np.abs(amp) ** 2
    omega_fine = 2.0 * math.pi * np.arange(n_fine) / (n_fine * dt_rec)
    d_omega = omega_fine[1] - omega_fine[0]

    centers = cfg.bin_centers()
    binned = np.empty(cfg.n_bins)
    for j, w_j in enumerate(centers):
        binned[j] = np.sum(fejer_kernel((omega_fine - w_j) * cfg.tau, cfg.m)
                           * s_fine) * d_omega
    total = binned.sum()
    if total <= 0.0:
        raise SingularityError("trajectory spectrum carries no weight")
    return SpectrumResult(omega_au=centers, prob=binned / total,
                          branch="aimd", branch_weight=float(c_t[0]))
