"""Beam-splitter detector network, click records, acceptance and phase correction.

Detectors and nodes are 0-indexed.  Detector ``i`` measures the mode
``a_i = sum_j A[i, j] c_j / sqrt(N)`` where ``A`` is the Sylvester-type
±1 matrix built by the block recursion ``[[A, A], [A, -A]]``.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from ..hilbert import permanent

MAX_LEVEL = 5

PERMISSIVE = "permissive"
STRICT_DISTINCT = "strict-distinct"
ACCEPTANCE_MODES = (PERMISSIVE, STRICT_DISTINCT)


class CannotCorrectError(RuntimeError):
    """The click record does not herald a state fixable by single-qubit phases."""


@dataclass(frozen=True)
class DetectorNetwork:
    level: int
    signs: np.ndarray = field(repr=False)

    @property
    def n_modes(self) -> int:
        return self.signs.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        """Mode coefficients ``A / sqrt(N)``; orthogonal."""
        return self.signs / math.sqrt(self.n_modes)


def detector_matrix(level: int) -> DetectorNetwork:
    if not 0 <= level <= MAX_LEVEL:
        raise ValueError(f"network level must be in [0, {MAX_LEVEL}], got {level}")
    a = np.ones((1, 1), dtype=np.int64)
    for _ in range(level):
        a = np.block([[a, a], [a, -a]])
    return DetectorNetwork(level, a)


def level_for(n_nodes: int) -> int:
    if n_nodes < 1 or n_nodes & (n_nodes - 1):
        raise ValueError(f"number of nodes must be a power of two, got {n_nodes}")
    return n_nodes.bit_length() - 1


@dataclass(frozen=True)
class ClickEvent:
    round: int
    detector: int
    time: float


@dataclass
class ClickRecord:
    events: list[ClickEvent] = field(default_factory=list)

    def add(self, event: ClickEvent):
        for prev in reversed(self.events):
            if prev.round == event.round:
                if not event.time > prev.time:
                    raise ValueError("click times must increase within a round")
                break
        self.events.append(event)

    def detectors(self, rnd: int) -> list[int]:
        return [e.detector for e in self.events if e.round == rnd]

    def counts(self) -> tuple[int, int]:
        return len(self.detectors(1)), len(self.detectors(2))

    @classmethod
    def from_detectors(cls, round1: Iterable[int], round2: Iterable[int]) -> "ClickRecord":
        """Record with unit-spaced times; handy for tests and pattern tables."""
        rec = cls()
        for rnd, dets in ((1, round1), (2, round2)):
            for k, d in enumerate(dets):
                rec.add(ClickEvent(rnd, int(d), float(k + 1)))
        return rec


def canonical_pattern(clicks: ClickRecord) -> tuple[tuple[int, ...], tuple[int, ...]]:
    return tuple(sorted(clicks.detectors(1))), tuple(sorted(clicks.detectors(2)))


def pattern_key(pattern) -> str:
    """String form ``"0,1,2|3"`` of a canonical pattern; rounds split by ``|``."""
    if isinstance(pattern, ClickRecord):
        pattern = canonical_pattern(pattern)
    return "|".join(",".join(str(d) for d in rnd) for rnd in pattern)


def parse_pattern_key(key: str) -> tuple[tuple[int, ...], tuple[int, ...]]:
    r1, r2 = key.split("|")
    conv = lambda s: tuple(int(x) for x in s.split(",")) if s else ()
    return conv(r1), conv(r2)


def accept_pattern(clicks: ClickRecord, n_nodes: int, m: int = 1, mode: str = PERMISSIVE) -> bool:
    """Does the record herald the (m, N-m) target?

    Permissive: one round has exactly ``m`` clicks and the other ``N - m``,
    detectors may repeat.  Strict-distinct additionally forbids a detector
    clicking twice within a round.
    """
    if mode not in ACCEPTANCE_MODES:
        raise ValueError(f"unknown acceptance mode {mode!r}")
    c1, c2 = clicks.counts()
    if sorted((c1, c2)) != sorted((m, n_nodes - m)):
        return False
    if mode == STRICT_DISTINCT:
        for rnd in (1, 2):
            dets = clicks.detectors(rnd)
            if len(set(dets)) != len(dets):
                return False
    return True


@dataclass(frozen=True)
class PhaseCorrection:
    """Z flips on nodes with ``mask[j] == -1``, then X on every node if ``flip_all``."""
    mask: tuple[int, ...]
    flip_all: bool


def heralded_amplitudes(clicks: ClickRecord, network: DetectorNetwork) -> dict[tuple[int, ...], int]:
    """Relative amplitudes of the final atomic configurations, from the clicks alone.

    Keys are qubit strings (1 = atom in |1>).  Nodes emitting in round one
    end in |0>, the others in |1>.  The amplitude of round-one emitter set S
    is per(A[r1, S]) * per(A[r2, not S]) up to a common factor.
    """
    a = network.signs
    n = network.n_modes
    r1, r2 = clicks.detectors(1), clicks.detectors(2)
    if len(r1) + len(r2) != n:
        raise CannotCorrectError(f"{len(r1)} + {len(r2)} clicks do not account for {n} nodes")
    amps = {}
    for emit1 in itertools.combinations(range(n), len(r1)):
        rest = [j for j in range(n) if j not in emit1]
        value = permanent(_sub(a, r1, emit1)) * permanent(_sub(a, r2, rest))
        bits = tuple(0 if j in emit1 else 1 for j in range(n))
        amps[bits] = int(value)
    return amps


def _sub(a: np.ndarray, rows, cols) -> np.ndarray:
    return a[np.ix_(np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64))]


def _signs_to_mask(signs: Sequence[int]) -> tuple[int, ...]:
    # canonical global sign: first node +1
    s0 = signs[0]
    return tuple(int(s * s0) for s in signs)


def phase_correction(clicks: ClickRecord, network: DetectorNetwork, target_ones: int | None = None) -> PhaseCorrection:
    """Single-qubit corrections mapping the heralded state onto the target.

    With one round holding a single click at detector ``i`` and the other
    the pattern ``P`` of N-1 clicks, node ``j`` carries the sign of
    ``A[i, j] * per(A[P, columns != j])`` regardless of round order.  Other
    patterns (Dicke targets) are solved by searching the Z masks.
    ``target_ones`` is the number of |1> atoms in the target; when the
    heralded state has the complementary count every qubit is bit-flipped.
    """
    n = network.n_modes
    r1, r2 = clicks.detectors(1), clicks.detectors(2)
    ones = len(r2)
    flip_all = target_ones is not None and ones != target_ones and n - ones == target_ones
    if target_ones is not None and ones != target_ones and not flip_all:
        raise CannotCorrectError(f"heralded state has {ones} ones, target has {target_ones}")

    a = network.signs
    if n >= 2 and sorted((len(r1), len(r2))) == [1, n - 1]:
        single, multi = (r1, r2) if len(r1) == 1 else (r2, r1)
        i = single[0]
        signs = []
        for j in range(n):
            cols = [c for c in range(n) if c != j]
            per = int(permanent(_sub(a, multi, cols)))
            if per == 0:
                raise CannotCorrectError(f"vanishing permanent for node {j}")
            signs.append(int(np.sign(a[i, j] * per)))
        return PhaseCorrection(_signs_to_mask(signs), flip_all)

    amps = heralded_amplitudes(clicks, network)
    mags = {abs(v) for v in amps.values()}
    if len(mags) != 1 or 0 in mags:
        raise CannotCorrectError(f"unequal branch magnitudes {sorted(mags)}")
    bits = np.array(list(amps.keys()), dtype=np.int64)
    vals = np.sign(np.array(list(amps.values()), dtype=np.int64))
    for tail in itertools.product((1, -1), repeat=n - 1):
        mask = np.array((1,) + tail)
        # Z on node j multiplies a term by mask[j] when that node holds |1>
        factors = np.prod(np.where(bits == 1, mask, 1), axis=1)
        prod = vals * factors
        if np.all(prod == prod[0]):
            return PhaseCorrection(tuple(int(x) for x in mask), flip_all)
    raise CannotCorrectError("branch signs do not factor into single-qubit phases")


def pattern_probabilities(n_nodes: int, n_clicks: int) -> dict[tuple[int, ...], float]:
    """Brute-force unordered click-pattern probabilities for one round.

    Round starts in ``((|0> + |e>)/sqrt 2)^N`` conditioned on exactly
    ``n_clicks`` excitations with unit efficiency.  Different emitter sets
    leave orthogonal atomic states, so they add incoherently; within a set
    the pattern probability is ``|per(U[P, S])|^2 / prod(mult!)`` with
    ``U = A / sqrt(N)``.
    """
    net = detector_matrix(level_for(n_nodes))
    a = net.signs
    subsets = list(itertools.combinations(range(n_nodes), n_clicks))
    out = {}
    for pattern in itertools.combinations_with_replacement(range(n_nodes), n_clicks):
        mult = math.prod(math.factorial(c) for c in Counter(pattern).values())
        total = 0.0
        for s in subsets:
            per = permanent(_sub(a, pattern, s))
            total += abs(per) ** 2 / n_nodes ** n_clicks / mult
        out[pattern] = total / len(subsets)
    return out
