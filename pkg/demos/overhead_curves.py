"""
Resource overhead: breeding against concatenation
=================================================

Expected number of qubits spent per W state of size N, for breeding and
for plain concatenation of two-qubit pairs, at a few efficiencies.  The
script writes ``overhead.csv`` and a gnuplot script next to it.

Run with ``python3 demos/overhead_curves.py [outdir]``.
"""

import math
import sys
from pathlib import Path

from entweb import resources as rs

# %% A few values by hand.
for n in rs.breeding_schedule(4):
    print(f"N={n:3d}  p_N={rs.p_breed(n):.4e}  R_N={rs.overhead_breeding(n):.4e}  clicks={rs.total_clicks(n)}")

# %% Where breeding overtakes concatenation.
for eta in (1.0, 0.7, 0.5):
    for n in (8, 16, 32, 64):
        rb, rc = rs.overhead_breeding(n + 2, eta), rs.overhead_concat(n, eta)
        tag = "breeding" if rb < rc else "concat"
        print(f"eta={eta}: N={n:3d}  breed(N+2)={rb:10.4g}  concat(N)={rc:10.4g}  cheaper: {tag}")

# %% Growth: log R grows like (log N)^2, slower than linear in N.
for n in rs.breeding_schedule(20)[4::4]:
    print(f"N={n:8d}  log2 R / (log2 N)^2 = {math.log2(rs.overhead_breeding(n)) / math.log2(n) ** 2:.3f}")

# %% The full table.
out = Path(sys.argv[1] if len(sys.argv) > 1 else ".") / "overhead.csv"
rows = rs.fig3_table(rs.default_sizes(10), [1.0, 0.7, 0.5])
path = rs.write_fig3(out, rows)
print(f"\nwrote {len(rows)} rows to {path} and {path.with_suffix('.gp')}")
