"""
Heralding a four-qubit W state
==============================

Four cavity nodes start in an even superposition of "atom excited" and
"atom in |0>".  Photons leaking out of the cavities are mixed on a
balanced network of beam splitters and counted.  After two rounds, with a
bit flip of every atom in between, a 3+1 (or 1+3) click pattern leaves the
atoms in a W state up to a known sign mask.

Run with ``python3 demos/seeding_walkthrough.py``.
"""

from collections import Counter

import numpy as np

from entweb.rng import trial_rng
from entweb.seeding import (CavityParams, ProtocolConfig, detector_matrix, estimate_success,
                            run_trajectory, seed_success_formula)
from entweb.seeding.cavity import alpha_beta, excited_norm

# %% The cavity: an excited atom hands its photon to the field, which leaks out.
cav = CavityParams(g=0.5, kappa=1.0)
print(f"slow decay rate |omega_+| = {cav.slow_rate:.4f} (1/kappa units)")
for t in (1.0, 5.0, 20.0, 40.0):
    a, b = alpha_beta(t, cav)
    print(f"  t={t:5.1f}  field amp {abs(a):.4f}  atom amp {abs(b):.4f}  not yet emitted {excited_norm(t, cav):.2e}")

# %% The detector network: a ±1 matrix, rows are detectors, columns are nodes.
print("\nlevel-2 detector signs:")
print(detector_matrix(2).signs.astype(int))

# %% One trajectory, step by step.
cfg = ProtocolConfig(n=4)
for k in range(200):
    res = run_trajectory(cfg, trial_rng(2024, k))
    if res.accepted:
        break
print(f"\ntrial {k}: clicks")
for ev in res.clicks.events:
    print(f"  round {ev.round}  detector {ev.detector}  t={ev.time:.3f}")
print("sign mask applied:", res.correction.mask, " flip all:", res.correction.flip_all)
print(f"fidelity with W_4: {res.fidelity:.12f}")

# %% Many trajectories: half of all runs herald a W state.
est = estimate_success(cfg, 5000, master_seed=1)
print(f"\nsuccess rate {est.rate:.4f} ± {est.stderr:.4f}  (formula {seed_success_formula(4)})")
print("most common accepted patterns:")
for key, count in Counter(est.accepted_histogram).most_common(5):
    print(f"  {key:12s} {count}")

# %% Detector losses cost a factor eta per photon.
for eta in (0.9, 0.7):
    lossy = estimate_success(ProtocolConfig(n=4, eta_d=eta), 5000, master_seed=1)
    print(f"eta={eta}: rate {lossy.rate:.4f}, expected {seed_success_formula(4, eta):.4f}, "
          f"min fidelity {lossy.min_fidelity:.12f}")
