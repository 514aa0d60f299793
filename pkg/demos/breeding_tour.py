"""
Growing W states by breeding
============================

Two W states of size N are fused with one CNOT and two single-qubit
measurements.  One branch yields a W state of size 2(N-1); the most likely
branch hands back both inputs minus one qubit each, which can be fed into
later steps.

Run with ``python3 demos/breeding_tour.py``.
"""

from entweb import breeding as br
from entweb.resources import overhead_breeding

# %% One step on the effective two-register picture.
pair = br.initial_pair(4)
print("input amplitudes (00, 01, 10, 11):", [round(a, 4) for a in pair.amplitudes])
for b in br.breed_step_exact(pair):
    print(f"  {b.record}  {b.outcome.value:10s} p={b.probability:.4f}")

# %% The same numbers from a brute-force statevector of all 2N qubits.
oracle = br.statevector_oracle(4)
print("\nstatevector oracle:", {o.value: round(p, 6) for o, p in oracle.probabilities.items()})
print("fidelity of the converted output with W_6:", oracle.converted_fidelity)

# %% The exact lost-branch weight is 1/N^2; a cruder bookkeeping counts 1/N as lost.
for n in (4, 10, 100):
    print(f"N={n:4d} exact {br.breed_step_distribution(n, 'exact')}  "
          f"paper {br.breed_step_distribution(n, 'paper')}")

# %% Whole sequences: seeds of size 4 bred up to a target, with and without recycling.
print("\nsize schedule:", br.schedule_sizes(6))
for target in (6, 10):
    for policy in br.POLICIES:
        s = br.breed_sequence_mc(target, "paper", policy, master_seed=3, trials=4000)
        print(f"target {target:3d} {policy:8s} qubits {s.mean_qubits:9.2f} ± {s.stderr_qubits:6.2f}  "
              f"closed form (no recycling) {overhead_breeding(target, 1.0, 'paper'):9.2f}")
