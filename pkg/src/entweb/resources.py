"""Closed-form resource counts for W-state breeding and concatenated seeding.

Sizes follow the schedule N_k = 2^(k+1) + 2, where K is the number of
conversions from |W_4> up to |W_N>.  Each conversion from size n succeeds
with (n-1)/n^2 in ``paper`` mode and twice that in ``exact`` mode.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .breeding import ProbabilityMode, breed_step_distribution

MAX_K = 30
MAX_CONCAT = 512
SCHEMES = ("breeding", "concatenated")
CSV_COLUMNS = ("scheme", "N", "K", "eta", "mode", "p_N", "R_N", "total_clicks")


class ScheduleError(ValueError):
    """Size not on the breeding schedule."""


@dataclass(frozen=True)
class EfficiencyParams:
    eta_d: float = 1.0
    transmission: float = 1.0

    def __post_init__(self):
        for name in ("eta_d", "transmission"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")

    @property
    def eta(self) -> float:
        return self.eta_d * self.transmission


def _as_eta(eta) -> float:
    if isinstance(eta, EfficiencyParams):
        return eta.eta
    eta = float(eta)
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"efficiency must lie in [0, 1], got {eta}")
    return eta


@dataclass(frozen=True)
class OverheadPoint:
    scheme: str
    n: int
    k: int
    eta: float
    mode: str
    p: float
    r: float
    total_clicks: int


def breeding_schedule(k_max: int) -> list[int]:
    if not 0 <= k_max <= MAX_K:
        raise ValueError(f"k_max must lie in [0, {MAX_K}], got {k_max}")
    return [2 ** (k + 1) + 2 for k in range(k_max + 1)]


def schedule_index(n: int) -> int:
    """K such that N = 2^(K+1) + 2."""
    m = n - 2
    if m >= 2 and m & (m - 1) == 0 and m.bit_length() - 2 <= MAX_K:
        return m.bit_length() - 2
    sizes = breeding_schedule(MAX_K)
    below = [s for s in sizes if s < n]
    above = [s for s in sizes if s > n]
    near = ([below[-1]] if below else []) + ([above[0]] if above else [])
    raise ScheduleError(f"N={n} is not a breeding size 2^(k+1)+2; nearest valid sizes: {near}")


def _conversion_p(n: int, mode: ProbabilityMode) -> float:
    return breed_step_distribution(n, mode)[0]


def p_breed(n: int, eta=1.0, mode: ProbabilityMode | str = ProbabilityMode.PAPER) -> float:
    """Success probability of the full sequence |W_4> -> ... -> |W_N>.

    ``eta^4 / 2`` for the seed times ``eta^2`` times the conversion
    probability for every step.
    """
    mode = ProbabilityMode(mode)
    k_total = schedule_index(n)
    eta = _as_eta(eta)
    p = eta ** 4 / 2
    for k in range(1, k_total + 1):
        p *= eta ** 2 * _conversion_p(2 ** k + 2, mode)
    return p


def overhead_breeding(n: int, eta=1.0, mode: ProbabilityMode | str = ProbabilityMode.PAPER) -> float:
    """Expected seed qubits per delivered |W_N>: 4 * 2^K / p_N."""
    k = schedule_index(n)
    p = p_breed(n, eta, mode)
    if p == 0:
        return math.inf
    return 4 * 2 ** k / p


def overhead_recursion(n: int, eta=1.0, mode: ProbabilityMode | str = ProbabilityMode.PAPER) -> float:
    """Same quantity by E(4) = 4/p_seed and E(2(n-1)) = 2 E(n) / p_conv(n)."""
    mode = ProbabilityMode(mode)
    k_total = schedule_index(n)
    eta = _as_eta(eta)
    e = 4 / (eta ** 4 / 2)
    size = 4
    for _ in range(k_total):
        e = 2 * e / (eta ** 2 * _conversion_p(size, mode))
        size = 2 * (size - 1)
    return e


def overhead_concat(n: int, eta=1.0) -> float:
    """N qubits per attempt over the success probability eta^N N / 2^(N-1)."""
    if n < 2 or n & (n - 1):
        raise ValueError(f"concatenated seeding needs N a power of two, got {n}")
    if n > MAX_CONCAT:
        raise ValueError(f"concatenated overhead overflows double precision beyond N={MAX_CONCAT}")
    eta = _as_eta(eta)
    if eta == 0:
        return math.inf
    r = 2.0 ** (n - 1) / eta ** n
    if math.isinf(r):
        raise OverflowError(f"concatenated overhead at N={n}, eta={eta} exceeds double range")
    return r


def total_clicks(n: int) -> int:
    return 4 + 2 * schedule_index(n)


@dataclass(frozen=True)
class ByproductRow:
    m: int
    size: int
    probability: float
    resources: float


def byproduct_table(n: int, mode: ProbabilityMode | str = ProbabilityMode.PAPER, eta=1.0) -> list[ByproductRow]:
    """Smaller registers |W_(N-2M)> obtained by recycling, 1 <= M <= N/2 - 1."""
    k = schedule_index(n)
    p = p_breed(n, eta, mode)
    rows = []
    for m in range(1, n // 2):
        size = n - 2 * m
        rows.append(ByproductRow(m, size, size * p / n, 4 * 2 ** k * (n / size) / p))
    return rows


def fig3_table(sizes: Sequence[int], etas: Sequence[float],
               modes: Sequence[str] = (ProbabilityMode.PAPER.value,)) -> list[OverheadPoint]:
    """Overhead rows ordered by scheme, then eta descending, then N ascending.

    Breeding rows use the schedule sizes in ``sizes`` (once per mode);
    concatenated rows use the power-of-two sizes.  Concatenated seeding has
    no breeding mode, so its rows carry mode ``-`` and K = 0.
    """
    if not sizes or not etas:
        raise ValueError("need at least one size and one efficiency")
    modes = [ProbabilityMode(m).value for m in modes]
    rows = []
    for scheme in SCHEMES:
        for eta in sorted(set(etas), reverse=True):
            for n in sorted(set(sizes)):
                if scheme == "breeding":
                    try:
                        k = schedule_index(n)
                    except ScheduleError:
                        continue
                    for mode in modes:
                        rows.append(OverheadPoint(scheme, n, k, eta, mode, p_breed(n, eta, mode),
                                                  overhead_breeding(n, eta, mode), total_clicks(n)))
                elif n >= 2 and n & (n - 1) == 0 and n <= MAX_CONCAT:
                    p = eta ** n * n / 2 ** (n - 1)
                    rows.append(OverheadPoint(scheme, n, 0, eta, "-", p, overhead_concat(n, eta), n))
    return rows


def default_sizes(k_max: int) -> list[int]:
    """Breeding schedule up to K plus powers of two up to the same range (at most 512)."""
    sched = breeding_schedule(k_max)
    top = min(sched[-1], MAX_CONCAT)
    powers = [2 ** j for j in range(2, top.bit_length())]
    return sorted(set(sched) | set(powers))


def _fmt(x: float) -> str:
    return format(x, ".12g")


def format_row(p: OverheadPoint) -> list[str]:
    return [p.scheme, str(p.n), str(p.k), repr(float(p.eta)), p.mode,
            _fmt(p.p), _fmt(p.r), str(p.total_clicks)]


def rows_to_csv(rows: Iterable[OverheadPoint]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for p in rows:
        w.writerow(format_row(p))
    return buf.getvalue()


def csv_to_rows(text: str) -> list[OverheadPoint]:
    reader = csv.reader(io.StringIO(text))
    header = tuple(next(reader))
    if header != CSV_COLUMNS:
        raise ValueError(f"unexpected header {header}")
    return [OverheadPoint(s, int(n), int(k), float(eta), mode, float(p), float(r), int(c))
            for s, n, k, eta, mode, p, r, c in reader]


def gnuplot_script(csv_name: str) -> str:
    """Plot log2 R_N against N for every (scheme, eta) curve in the CSV."""
    return "\n".join([
        "set datafile separator ','",
        "set logscale y 2",
        "set xlabel 'N'",
        "set ylabel 'R_N'",
        "set key outside",
        f"file = '{csv_name}'",
        "plot for [eta in '1.0 0.7 0.5'] \\",
        "  file using ((strcol(1) eq 'breeding' && strcol(4) eq eta) ? $2 : 1/0):7 \\",
        "  with linespoints title 'breeding eta='.eta, \\",
        "  for [eta in '1.0 0.7 0.5'] \\",
        "  file using ((strcol(1) eq 'concatenated' && strcol(4) eq eta) ? $2 : 1/0):7 \\",
        "  with linespoints dashtype 2 title 'concatenated eta='.eta",
        "",
    ])


def write_fig3(path: str | Path, rows: Sequence[OverheadPoint]) -> Path:
    path = Path(path)
    path.write_text(rows_to_csv(rows), newline="")
    path.with_suffix(".gp").write_text(gnuplot_script(path.name), newline="")
    return path
