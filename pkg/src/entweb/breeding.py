"""Economical breeding: two |W_N> registers into one |W_2(N-1)>.

One qubit of each register serves as an ancilla.  A CNOT (first ancilla
controls the second) is followed by a Z measurement of the second ancilla:

* outcome 1 leaves ``(|1>|W,0> + |0>|0,W>)/sqrt 2`` on (first ancilla,
  registers); an X measurement of the first ancilla then yields
  |W_2(N-1)>, after Z on every qubit of the first register for outcome ``-``;
* outcome 0 followed by a Z measurement of the first ancilla giving 0
  leaves two |W_(N-1)> registers to recycle; giving 1 leaves product states.

The effective algebra tracks four register labels (``"00"``, ``"W0"``,
``"0W"``, ``"WW"``); :func:`statevector_oracle` repeats the procedure on
explicit 2N-qubit vectors.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .hilbert import (X_BASIS, LevelLayout, LocalOperator, StateVector,
                      apply_local, fidelity, measure_projective, project_sites,
                      w_state)
from .rng import trial_rng
from .seeding.trajectory import seed_success_formula


class Outcome(enum.Enum):
    CONVERTED = "converted"
    RECYCLED = "recycled"
    LOST = "lost"


class ProbabilityMode(str, enum.Enum):
    EXACT = "exact"
    PAPER = "paper"


@dataclass(frozen=True)
class EffectiveWPair:
    """Two |W_N> registers with their ancillas pulled out front.

    ``amplitudes`` = (c11, c10, c01, c00) on |11>|0,0>, |10>|W,0>,
    |01>|0,W>, |00>|W,W> (ancilla bits, then register 1 and register 2
    of N-1 qubits each).
    """
    n: int
    amplitudes: tuple[float, float, float, float]

    def __post_init__(self):
        total = sum(abs(a) ** 2 for a in self.amplitudes)
        if abs(total - 1) > 1e-12:
            raise ValueError(f"amplitudes not normalized: {total}")


def initial_pair(n: int) -> EffectiveWPair:
    if n < 2:
        raise ValueError(f"W registers need N >= 2, got {n}")
    r = math.sqrt(n - 1)
    return EffectiveWPair(n, (1 / n, r / n, r / n, (n - 1) / n))


# register labels carried by each ancilla pair before the CNOT
_LABELS = {(1, 1): "00", (1, 0): "W0", (0, 1): "0W", (0, 0): "WW"}


@dataclass
class BreedBranch:
    record: tuple[str, ...]
    outcome: Outcome
    probability: float
    # normalized amplitudes over register labels after corrections
    registers: dict[str, complex] = field(default_factory=dict)


def breed_step_exact(pair: EffectiveWPair) -> list[BreedBranch]:
    """All measurement branches of one breeding attempt.

    Records are ``("Z2=1", "X1=+")`` / ``("Z2=1", "X1=-")`` (converted),
    ``("Z2=0", "Z1=0")`` (recycled) and ``("Z2=0", "Z1=1")`` (lost).
    """
    c11, c10, c01, c00 = pair.amplitudes
    before = {(1, 1): c11, (1, 0): c10, (0, 1): c01, (0, 0): c00}
    # CNOT, first ancilla controls: (a1, a2) -> (a1, a2 xor a1)
    after: dict[tuple[int, int], dict[str, complex]] = {}
    for (a1, a2), amp in before.items():
        after.setdefault((a1, a2 ^ a1), {})[_LABELS[(a1, a2)]] = amp

    branches = []
    # second ancilla reads 1: first ancilla holds the register information
    reg_a1 = {a1: after.get((a1, 1), {}) for a1 in (0, 1)}
    p_one = sum(abs(v) ** 2 for part in reg_a1.values() for v in part.values())
    for sign, tag in ((1, "+"), (-1, "-")):
        combined: dict[str, complex] = {}
        for a1, part in reg_a1.items():
            coeff = (1 if a1 == 0 else sign) / math.sqrt(2)
            for label, v in part.items():
                combined[label] = combined.get(label, 0) + coeff * v
        if sign == -1:
            # Z on every qubit of register 1: odd parity of W flips its sign
            combined = {k: (-v if k[0] == "W" else v) for k, v in combined.items()}
        prob = sum(abs(v) ** 2 for v in combined.values())
        branches.append(BreedBranch(("Z2=1", f"X1={tag}"), Outcome.CONVERTED, prob,
                                    _normalize(combined)))
    for a1, outcome in ((0, Outcome.RECYCLED), (1, Outcome.LOST)):
        part = after.get((a1, 0), {})
        prob = sum(abs(v) ** 2 for v in part.values())
        branches.append(BreedBranch(("Z2=0", f"Z1={a1}"), outcome, prob, _normalize(part)))
    assert abs(p_one - sum(b.probability for b in branches[:2])) < 1e-12
    return branches


def _normalize(amps: dict[str, complex]) -> dict[str, complex]:
    total = math.sqrt(sum(abs(v) ** 2 for v in amps.values()))
    if total == 0:
        return {}
    return {k: v / total for k, v in amps.items()}


def _register_vector(label: str, n_reg: int) -> np.ndarray:
    w = w_state(n_reg).amplitudes if n_reg > 0 else np.ones(1)
    zero = np.zeros(2 ** n_reg)
    zero[0] = 1.0
    parts = [w if ch == "W" else zero for ch in label]
    return np.kron(parts[0], parts[1])


def conversion_result_state(pair: EffectiveWPair, branch: BreedBranch) -> StateVector:
    """Dense state of the 2(N-1) output qubits, register 1 first."""
    if branch.outcome is not Outcome.CONVERTED:
        raise ValueError(f"branch {branch.record} is not a conversion")
    n_reg = pair.n - 1
    amps = sum(v * _register_vector(k, n_reg) for k, v in branch.registers.items())
    return StateVector(LevelLayout.uniform(2 * n_reg, 2), amps)


def breed_step_fractions(n: int, mode: ProbabilityMode | str = ProbabilityMode.EXACT):
    """(converted, recycled, lost) as exact fractions."""
    mode = ProbabilityMode(mode)
    if n < 2:
        raise ValueError(f"W registers need N >= 2, got {n}")
    nn = Fraction(n * n)
    recycled = Fraction((n - 1) ** 2) / nn
    if mode is ProbabilityMode.EXACT:
        converted = Fraction(2 * (n - 1)) / nn
    else:
        converted = Fraction(n - 1) / nn
    return converted, recycled, 1 - converted - recycled


def breed_step_distribution(n: int, mode: ProbabilityMode | str = ProbabilityMode.EXACT) -> tuple[float, float, float]:
    """Branch probabilities of one conversion attempt.

    ``exact`` is what the CNOT procedure gives; ``paper`` uses the halved
    conversion probability (N-1)/N^2, which matches a Barrett-Kok projection
    onto {|10>, |01>} succeeding half the time; its lost branch is 1/N.
    """
    return tuple(float(x) for x in breed_step_fractions(n, mode))


@dataclass
class OracleReport:
    n: int
    probabilities: dict[Outcome, float]
    converted_fidelity: float
    recycled_fidelity: float
    branch_probabilities: dict[tuple[str, ...], float]


_ORACLE_MAX = 7
_CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=np.complex128)
_Z = np.diag([1.0, -1.0]).astype(np.complex128)


def statevector_oracle(n: int) -> OracleReport:
    """Brute-force the breeding step on 2N explicit qubits.

    Register 1 occupies qubits 0..N-1 with qubit 0 as its ancilla; register 2
    occupies N..2N-1 with qubit N as its ancilla.
    """
    if not 2 <= n <= _ORACLE_MAX:
        raise ValueError(f"oracle supports 2 <= N <= {_ORACLE_MAX}, got {n}")
    w = w_state(n).amplitudes
    state = StateVector(LevelLayout.uniform(2 * n, 2), np.kron(w, w))
    a1, a2 = 0, n
    state = apply_local(state, LocalOperator((a1, a2), _CNOT))

    branch_p: dict[tuple[str, ...], float] = {}
    probs = {o: 0.0 for o in Outcome}
    target_conv = w_state(2 * (n - 1))
    target_rec = None
    if n > 2:
        w_rest = w_state(n - 1).amplitudes
        target_rec = StateVector(LevelLayout.uniform(2 * (n - 1), 2), np.kron(w_rest, w_rest))
    conv_fids, rec_fid = [], float("nan")
    e0, e1 = np.array([1, 0]), np.array([0, 1])

    for z2 in measure_projective(state, a2, [[0], [1]]):
        if z2.state is None:
            continue
        if z2.outcome == 1:
            for x1 in measure_projective(z2.state, a1, [[0], [1]], basis=X_BASIS):
                tag = "+" if x1.outcome == 0 else "-"
                p = z2.probability * x1.probability
                branch_p[("Z2=1", f"X1={tag}")] = p
                probs[Outcome.CONVERTED] += p
                if x1.state is None:
                    continue
                post = x1.state
                if tag == "-":
                    for q in range(1, n):
                        post = apply_local(post, LocalOperator((q,), _Z))
                ket = X_BASIS[:, x1.outcome]
                rest = project_sites(post, {a1: ket, a2: e1})
                conv_fids.append(fidelity(target_conv, rest.normalized()))
        else:
            for z1 in measure_projective(z2.state, a1, [[0], [1]]):
                p = z2.probability * z1.probability
                branch_p[("Z2=0", f"Z1={z1.outcome}")] = p
                if z1.outcome == 0:
                    probs[Outcome.RECYCLED] += p
                    if z1.state is not None:
                        rest = project_sites(z1.state, {a1: e0, a2: e0}).normalized()
                        if target_rec is None:
                            rec_fid = abs(rest.amplitudes[-1]) ** 2
                        else:
                            rec_fid = fidelity(target_rec, rest)
                else:
                    probs[Outcome.LOST] += p
    return OracleReport(n, probs, min(conv_fids), rec_fid, branch_p)


def effective_distribution(n: int) -> dict[Outcome, float]:
    """Branch probabilities summed per outcome from the effective algebra."""
    out = {o: 0.0 for o in Outcome}
    for b in breed_step_exact(initial_pair(n)):
        out[b.outcome] += b.probability
    return out


# ---------------------------------------------------------------------------
# breeding sequences


NO_RECYCLING = "no-recycling"
GREEDY_RECYCLING = "greedy-recycling"
POLICIES = (NO_RECYCLING, GREEDY_RECYCLING)


def schedule_sizes(k_max: int) -> list[int]:
    return [2 ** (k + 1) + 2 for k in range(k_max + 1)]


@dataclass
class ResourceLedger:
    seed_attempts: int = 0
    seeds: int = 0
    conversions_attempted: int = 0
    conversions_succeeded: int = 0
    recycles: int = 0
    byproducts: list[int] = field(default_factory=list)
    final_size: int = 0

    @property
    def qubits(self) -> int:
        """Physical qubits consumed: four per seeding attempt."""
        return 4 * self.seed_attempts

    @property
    def clicks(self) -> int:
        return 4 * self.seeds + 2 * self.conversions_attempted


@dataclass
class SequenceStats:
    target: int
    mode: str
    policy: str
    trials: int
    mean_qubits: float
    stderr_qubits: float
    mean_clicks: float
    mean_seeds: float
    mean_conversions: float
    mean_recycles: float
    byproducts: dict[int, int]


def _conversion_probabilities(n: int, mode, eta: float) -> tuple[float, float]:
    conv, rec, _ = breed_step_distribution(n, mode)
    return eta ** 2 * conv, rec


class _Breeder:
    def __init__(self, target: int, mode, policy: str, eta: float, rng: np.random.Generator):
        self.target = target
        self.mode = mode
        self.policy = policy
        self.eta = eta
        self.rng = rng
        self.p_seed = seed_success_formula(4, eta)
        self.ledger = ResourceLedger()
        # sizes on a doubling chain up to the target; 3 feeds 4 since 2(3-1) = 4
        chain = [target]
        while chain[-1] > 4:
            chain.append(chain[-1] // 2 + 1)
        self.useful = set(chain) | ({3} if policy == GREEDY_RECYCLING else set())

    def seed(self):
        attempts = int(self.rng.geometric(self.p_seed))
        self.ledger.seed_attempts += attempts
        self.ledger.seeds += 1

    def convert(self, n: int) -> Outcome:
        p_conv, p_rec = _conversion_probabilities(n, self.mode, self.eta)
        self.ledger.conversions_attempted += 1
        u = self.rng.random()
        if u < p_conv:
            self.ledger.conversions_succeeded += 1
            return Outcome.CONVERTED
        if u < p_conv + p_rec:
            return Outcome.RECYCLED
        return Outcome.LOST

    def build(self, n: int):
        """No recycling: grow one register of size n, restarting on failure."""
        if n == 4:
            self.seed()
            return
        half = n // 2 + 1
        while True:
            self.build(half)
            self.build(half)
            if self.convert(half) is Outcome.CONVERTED:
                return

    def run_greedy(self):
        pool: dict[int, int] = {}
        while pool.get(self.target, 0) == 0:
            pairs = [s for s, c in pool.items() if c >= 2 and s != self.target]
            if not pairs:
                self.seed()
                pool[4] = pool.get(4, 0) + 1
                continue
            n = max(pairs)
            pool[n] -= 2
            outcome = self.convert(n)
            if outcome is Outcome.CONVERTED:
                out = 2 * (n - 1)
                pool[out] = pool.get(out, 0) + 1
            elif outcome is Outcome.RECYCLED:
                self.ledger.recycles += 1
                if n - 1 in self.useful:
                    pool[n - 1] = pool.get(n - 1, 0) + 2
                else:
                    self.ledger.byproducts.extend([n - 1, n - 1])

    def run(self) -> ResourceLedger:
        if self.policy == NO_RECYCLING:
            self.build(self.target)
        else:
            self.run_greedy()
        self.ledger.final_size = self.target
        return self.ledger


def breed_sequence_mc(target: int, mode: ProbabilityMode | str = ProbabilityMode.EXACT,
                      policy: str = NO_RECYCLING, master_seed: int = 0, trials: int = 10000,
                      eta: float = 1.0) -> SequenceStats:
    """Monte Carlo of the resources needed to deliver one |W_target>.

    Seeds (4 qubits per attempt) succeed with ``eta^4 / 2``; a conversion of
    two size-n registers succeeds with ``eta^2`` times the mode's conversion
    probability and otherwise recycles with (n-1)^2/n^2.  Greedy recycling
    pools registers by size, always converts the largest available pair and
    keeps recycled registers whose size lies on a chain to the target.
    """
    mode = ProbabilityMode(mode)
    valid = schedule_sizes(30)
    if target not in valid:
        raise ValueError(f"target {target} not in the breeding schedule; valid sizes start {valid[:6]}")
    if policy not in POLICIES:
        raise ValueError(f"policy must be one of {POLICIES}")
    if trials < 1:
        raise ValueError("need at least one trial")
    qubits, clicks, seeds, convs, recs = [], [], [], [], []
    byproducts: dict[int, int] = {}
    for k in range(trials):
        ledger = _Breeder(target, mode, policy, eta, trial_rng(master_seed, k)).run()
        qubits.append(ledger.qubits)
        clicks.append(ledger.clicks)
        seeds.append(ledger.seeds)
        convs.append(ledger.conversions_attempted)
        recs.append(ledger.recycles)
        for b in ledger.byproducts:
            byproducts[b] = byproducts.get(b, 0) + 1
    q = np.array(qubits, dtype=float)
    stderr = float(q.std(ddof=1) / math.sqrt(trials)) if trials > 1 else float("nan")
    return SequenceStats(target, mode.value, policy, trials, float(q.mean()), stderr,
                         float(np.mean(clicks)), float(np.mean(seeds)), float(np.mean(convs)),
                         float(np.mean(recs)), dict(sorted(byproducts.items())))
