"""Phase-space wavefunction engine for thermal molecular dynamics.

Classical Liouville transport is propagated as a unitary on a grid
wavefunction psi(R, P); dissipation enters through a momentum dilation
(friction) and a postselected cosine momentum filter (diffusion), giving
a discrete Langevin step. Readouts: relaxation traces, a phase-estimation
vibrational spectrum, and transition-state rate estimators, each with
classical trajectory oracles for cross-checks.
"""

__version__ = "0.1.0"
