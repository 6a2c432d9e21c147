"""ks_glimm package.

Random-choice (Glimm) solver with operator splitting for the hyperbolic
Keller-Segel balance law, a Lax-Friedrichs reference solver and the
diagnostics used to study time-asymptotic decay toward the heat-kernel profile.

Public API:
- ks_glimm.riemann: solve_riemann, sample_fan, forward_wave_curve, backward_wave_curve
- ks_glimm.glimm: init_solution, compute_split_states, riemann_step, advance
- ks_glimm.diagnostics: DiagnosticsAccumulator, fit_decay and the snapshot functionals
- ks_glimm.oracle: fv_solve
- ks_glimm.cli: the ``ks-glimm`` command
"""

from __future__ import annotations

__all__ = [
    "__version__",
]

__version__ = "0.1.0"
