"""Quantum-jump trajectories of the two-round seeding protocol.

Two interchangeable engines drive the same round logic and consume random
numbers in the same order, so a given generator produces the same click
record in either:

``dense``
    Full 6-level-per-node state vector, propagated with the exact node
    propagator and jumped with the detector-mode operators.  Cost grows as
    6^N; meant for N <= 4 and for validating the reduced engine.

``sector``
    Exact reduction for identical nodes excited simultaneously.  Every node
    is either untouched ground, excited (then its state is
    ``beta(t)|e,0> + alpha(t)|1,1>`` with t the round time, whatever
    happened elsewhere) or has emitted (``|1,0>``).  The state is a tensor
    over these three labels, constant between clicks, so a click is a
    re-mixing of 3^N coefficients and the survival probability is a
    polynomial in ``|alpha|^2 + |beta|^2``.

Random draws per round: one uniform for each waiting time, then for each
photon one uniform for the detector and one for detection (efficiency
thinning).  A finite wait window that ends with excitation left draws one
more uniform to decide whether the leftover is found.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from ..hilbert import (LevelLayout, LocalOperator, StateVector, apply_local,
                       dicke_state, fidelity, norm)
from .cavity import (ATOM_0, ATOM_1, ATOM_E, D10, E0, G00, LEVELS_PER_NODE,
                     CavityParams, drop_excitations, evolve_conditional,
                     excitation_weight, excited_norm_function, level, node_layout,
                     photon_annihilator)
from .network import (ACCEPTANCE_MODES, PERMISSIVE, CannotCorrectError,
                      ClickEvent, ClickRecord, DetectorNetwork, PhaseCorrection,
                      accept_pattern, detector_matrix, level_for,
                      phase_correction)

MAX_NODES = 8
TIME_TOL = 1e-10


class ProtocolSequencingError(RuntimeError):
    """A round boundary was reached with photons still in the cavities."""


class BisectionError(ArithmeticError):
    """The waiting-time root could not be bracketed."""


class InvariantViolation(RuntimeError):
    pass


@dataclass(frozen=True)
class ProtocolConfig:
    n: int = 4
    cavity: CavityParams = field(default_factory=CavityParams)
    eta_d: float = 1.0
    eta_transmission: float = 1.0
    acceptance: str = PERMISSIVE
    threshold: float = 1e-12
    m: int = 1
    t_wait: float | None = None

    def __post_init__(self):
        level_for(self.n)
        if self.n < 2 or self.n > MAX_NODES:
            raise ValueError(f"N must be a power of two in [2, {MAX_NODES}], got {self.n}")
        for name in ("eta_d", "eta_transmission"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.acceptance not in ACCEPTANCE_MODES:
            raise ValueError(f"acceptance must be one of {ACCEPTANCE_MODES}, got {self.acceptance!r}")
        if not self.threshold > 0:
            raise ValueError("threshold must be positive")
        if not 1 <= self.m <= self.n - 1:
            raise ValueError(f"need 1 <= m <= N-1, got m={self.m}")
        if self.t_wait is not None and not self.t_wait > 0:
            raise ValueError("t_wait must be positive")

    @property
    def eta(self) -> float:
        return self.eta_d * self.eta_transmission

    @property
    def network(self) -> DetectorNetwork:
        return _network(self.n)


@functools.lru_cache(maxsize=None)
def _network(n: int) -> DetectorNetwork:
    return detector_matrix(level_for(n))


@dataclass
class TrajectoryResult:
    clicks: ClickRecord
    accepted: bool
    final_state: StateVector | None
    fidelity: float | None = None
    correction: PhaseCorrection | None = None
    correctable: bool = True
    status: str = "ok"


# ---------------------------------------------------------------------------
# dense single-step operations


def build_initial_state(n: int) -> StateVector:
    """((|0,0> + |e,0>)/sqrt 2)^N."""
    level_for(n)
    site = np.zeros(LEVELS_PER_NODE, dtype=np.complex128)
    site[G00] = site[E0] = 1 / math.sqrt(2)
    return StateVector.product([site] * n)


def _atom_permutation(mapping: dict[int, int]) -> np.ndarray:
    u = np.zeros((LEVELS_PER_NODE, LEVELS_PER_NODE), dtype=np.complex128)
    for src, dst in mapping.items():
        for ph in (0, 1):
            u[level(dst, ph), level(src, ph)] = 1.0
    return u


FLIP = _atom_permutation({ATOM_0: ATOM_1, ATOM_1: ATOM_0, ATOM_E: ATOM_E})
PI_PULSE = _atom_permutation({ATOM_0: ATOM_0, ATOM_1: ATOM_E, ATOM_E: ATOM_1})


def _apply_each(state: StateVector, matrix: np.ndarray) -> StateVector:
    for site in range(state.layout.n_sites):
        state = apply_local(state, LocalOperator((site,), matrix))
    return state


def flip(state: StateVector) -> StateVector:
    """|0> <-> |1> on every atom."""
    return _apply_each(state, FLIP)


def excite(state: StateVector) -> StateVector:
    """pi-pulse |1> <-> |e> on every atom."""
    return _apply_each(state, PI_PULSE)


def flip_and_excite(state: StateVector, threshold: float = 1e-12) -> StateVector:
    photon = _photon_weight(state)
    if photon > threshold:
        raise ProtocolSequencingError(f"photon weight {photon:.3g} left at the round boundary")
    return excite(flip(state))


def _photon_weight(state: StateVector) -> float:
    t = state.tensor
    mask = np.zeros(t.shape, dtype=bool)
    for site in range(t.ndim):
        sl = [slice(None)] * t.ndim
        sl[site] = [level(a, 1) for a in (ATOM_0, ATOM_1, ATOM_E)]
        mask[tuple(sl)] = True
    return float(np.sum(np.abs(t[mask]) ** 2))


# ---------------------------------------------------------------------------
# engines


class _DenseEngine:
    def __init__(self, n: int, cavity: CavityParams, network: DetectorNetwork, state: StateVector | None = None):
        self.n = n
        self.cavity = cavity
        self.signs = network.signs
        self.state = build_initial_state(n) if state is None else state.normalized()
        self.time = 0.0
        self._c = photon_annihilator()

    def start_round(self):
        self.time = 0.0

    def no_jump_probability(self) -> float:
        return 1.0 - excitation_weight(self.state)

    def survival(self, t: float) -> float:
        return norm(evolve_conditional(self.state, t - self.time, self.cavity)) ** 2

    def advance(self, t: float):
        self.state = evolve_conditional(self.state, t - self.time, self.cavity).normalized()
        self.time = t

    def excitation_fraction(self) -> float:
        return excitation_weight(self.state)

    def drop_excitations(self):
        self.state = drop_excitations(self.state).normalized()

    def _lowered(self) -> np.ndarray:
        return np.array([apply_local(self.state, LocalOperator((j,), self._c)).amplitudes
                         for j in range(self.n)])

    def detector_weights(self, t: float) -> np.ndarray:
        self.advance(t)
        v = self._lowered()
        gram = v.conj() @ v.T
        return np.real(np.einsum("ij,jk,ik->i", self.signs, gram, self.signs))

    def jump(self, detector: int):
        v = self._lowered()
        amps = self.signs[detector] @ v
        self.state = StateVector(self.state.layout, amps).normalized()

    def flip_and_excite(self, threshold: float):
        self.state = flip_and_excite(self.state, threshold)

    def atomic_state(self) -> StateVector:
        idx = np.array([G00, D10])
        sub = self.state.tensor[np.ix_(*([idx] * self.n))]
        return StateVector(LevelLayout.uniform(self.n, 2), sub.reshape(-1))


GROUND, EXCITED, EMITTED = 0, 1, 2


@functools.lru_cache(maxsize=None)
def _sector_tables(n: int):
    dim = 3 ** n
    labels = np.array(np.unravel_index(np.arange(dim), (3,) * n)).T
    n_exc = (labels == EXCITED).sum(axis=1)
    radix = 3 ** np.arange(n - 1, -1, -1)
    src, dst = [], []
    for j in range(n):
        s = np.nonzero(labels[:, j] == EXCITED)[0]
        src.append(s)
        dst.append(s + (EMITTED - EXCITED) * radix[j])
    # round boundary: ground -> excited, emitted -> ground
    relabel = np.array([EXCITED, -1, GROUND])
    settled = np.nonzero(n_exc == 0)[0]
    new_labels = relabel[labels[settled]]
    flip_dst = new_labels @ radix
    qubit_radix = 2 ** np.arange(n - 1, -1, -1)
    qubit_index = (labels[settled] == EMITTED).astype(np.int64) @ qubit_radix
    return dict(labels=labels, n_exc=n_exc, src=src, dst=dst, settled=settled,
                flip_dst=flip_dst, qubit_index=qubit_index)


class _SectorEngine:
    def __init__(self, n: int, cavity: CavityParams, network: DetectorNetwork):
        self.n = n
        self.cavity = cavity
        self.signs = network.signs.astype(float)
        self.tab = _sector_tables(n)
        start = np.all(self.tab["labels"] != EMITTED, axis=1)
        # real throughout: the common phase of alpha(t) is dropped at each click
        self.amps = np.where(start, 1.0 / math.sqrt(2 ** n), 0.0)
        self.time = 0.0
        self._weights_cache = None
        self._d = excited_norm_function(cavity)

    def start_round(self):
        self.time = 0.0

    def _sector_weights(self) -> np.ndarray:
        if self._weights_cache is None:
            self._weights_cache = np.bincount(self.tab["n_exc"], weights=self.amps ** 2,
                                              minlength=self.n + 1).tolist()
        return self._weights_cache

    def _set_amps(self, amps: np.ndarray, t: float):
        w = np.bincount(self.tab["n_exc"], weights=amps ** 2, minlength=self.n + 1)
        self.amps = amps / math.sqrt(w @ self._d(t) ** np.arange(self.n + 1))
        self.time = t
        self._weights_cache = None

    def no_jump_probability(self) -> float:
        return self._sector_weights()[0]

    def survival(self, t: float) -> float:
        d = self._d(t)
        total = 0.0
        for w in reversed(self._sector_weights()):
            total = total * d + w
        return total

    def advance(self, t: float):
        self._set_amps(self.amps, t)

    def excitation_fraction(self) -> float:
        d = self._d(self.time)
        w = np.array(self._sector_weights()) * d ** np.arange(self.n + 1)
        return float(1.0 - w[0] / w.sum())

    def drop_excitations(self):
        amps = np.where(self.tab["n_exc"] == 0, self.amps, 0.0)
        self._set_amps(amps, self.time)

    def _lowered(self) -> np.ndarray:
        v = np.zeros((self.n, self.amps.size))
        for j in range(self.n):
            v[j, self.tab["dst"][j]] = self.amps[self.tab["src"][j]]
        return v

    def detector_weights(self, t: float) -> np.ndarray:
        self.advance(t)
        v = self._v = self._lowered()
        w = (self._d(t) ** np.arange(self.n + 1))[self.tab["n_exc"]]
        gram = (v * w) @ v.T
        return np.einsum("ij,jk,ik->i", self.signs, gram, self.signs)

    def jump(self, detector: int):
        amps = self.signs[detector] @ self._v
        self._set_amps(amps, self.time)

    def flip_and_excite(self, threshold: float):
        tab = self.tab
        leftover = self.excitation_fraction()
        if leftover > threshold:
            raise ProtocolSequencingError(f"excitation weight {leftover:.3g} left at the round boundary")
        amps = np.zeros_like(self.amps)
        amps[tab["flip_dst"]] = self.amps[tab["settled"]]
        self.amps = amps
        self._set_amps(amps, 0.0)

    def atomic_state(self) -> StateVector:
        tab = self.tab
        out = np.zeros(2 ** self.n)
        out[tab["qubit_index"]] = self.amps[tab["settled"]]
        return StateVector(LevelLayout.uniform(self.n, 2), out)


ENGINES = {"dense": _DenseEngine, "sector": _SectorEngine}


def _waiting_time(engine, u: float) -> float:
    """Solve survival(t) = u for t > engine.time."""
    t0 = engine.time
    span = 1.0 / engine.cavity.slow_rate
    for _ in range(200):
        if engine.survival(t0 + span) <= u:
            break
        span *= 2.0
    else:
        raise BisectionError(f"could not bracket survival {u!r} above t={t0}")
    return brentq(lambda t: engine.survival(t) - u, t0, t0 + span, xtol=TIME_TOL)


def _choose(weights: np.ndarray, u: float) -> int:
    cdf = np.cumsum(weights)
    return int(min(np.searchsorted(cdf, u * cdf[-1], side="right"), len(weights) - 1))


def _run_round(engine, rnd: int, rng: np.random.Generator, eta: float, t_wait: float | None,
               threshold: float, record: ClickRecord) -> str:
    engine.start_round()
    photons = 0
    while True:
        u = rng.random()
        if t_wait is None:
            if u <= engine.no_jump_probability():
                engine.drop_excitations()
                return "ok"
        elif u <= engine.survival(t_wait):
            engine.advance(t_wait)
            left = engine.excitation_fraction()
            if left > threshold and rng.random() < left:
                return "leftover"
            engine.drop_excitations()
            return "ok"
        t = _waiting_time(engine, u)
        weights = engine.detector_weights(t)
        detector = _choose(weights, rng.random())
        detected = rng.random() < eta
        engine.jump(detector)
        photons += 1
        if photons > engine.n:
            raise InvariantViolation(f"{photons} photons emitted in round {rnd} from {engine.n} nodes")
        if detected:
            record.add(ClickEvent(rnd, detector, float(t)))


@dataclass
class JumpStep:
    event: ClickEvent | None
    state: StateVector
    waited: float


def sample_and_apply_jump(state: StateVector, rng: np.random.Generator, p: CavityParams,
                          network: DetectorNetwork, eta: float = 1.0, rnd: int = 1,
                          t0: float = 0.0) -> JumpStep:
    """Sample the next photon emission from a dense state.

    Returns the click (``None`` if the photon is lost or no photon ever
    comes), the post-state and the waiting time (``inf`` when the state can
    no longer emit; the state is then projected onto the unexcited part).
    """
    engine = _DenseEngine(state.layout.n_sites, p, network, state)
    u = rng.random()
    if u <= engine.no_jump_probability():
        if engine.no_jump_probability() > 0:
            engine.drop_excitations()
        return JumpStep(None, engine.state, math.inf)
    t = _waiting_time(engine, u)
    detector = _choose(engine.detector_weights(t), rng.random())
    detected = rng.random() < eta
    engine.jump(detector)
    event = ClickEvent(rnd, detector, t0 + t) if detected else None
    return JumpStep(event, engine.state, t)


def herald_state(n: int, round1, round2, cavity: CavityParams | None = None,
                 spacing: float = 0.7) -> StateVector | None:
    """Atomic state heralded by clicking ``round1`` then ``round2`` detectors.

    Clicks within a round are placed ``spacing`` apart and each round ends
    with no further emission.  Returns ``None`` when the record has zero
    probability.  Uses the dense engine, so it is independent of the sector
    bookkeeping.
    """
    cavity = cavity or CavityParams()
    eng = _DenseEngine(n, cavity, _network(n))
    for rnd, dets in ((1, round1), (2, round2)):
        eng.start_round()
        for k, d in enumerate(dets):
            if eng.detector_weights(spacing * (k + 1))[d] <= 1e-24:
                return None
            eng.jump(d)
        if eng.no_jump_probability() <= 1e-24:
            return None
        eng.drop_excitations()
        if rnd == 1:
            eng.flip_and_excite(1e-12)
    return eng.atomic_state().normalized()


def target_state(n: int, m: int = 1) -> StateVector:
    """Equal superposition of the n-qubit strings with ``m`` atoms in |1>."""
    if not 1 <= m <= n - 1:
        raise ValueError(f"need 1 <= m <= N-1, got m={m}, N={n}")
    return dicke_state(n, m)


_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
_Z = np.diag([1.0, -1.0]).astype(np.complex128)


def apply_correction(state: StateVector, corr: PhaseCorrection) -> StateVector:
    for j, s in enumerate(corr.mask):
        if s == -1:
            state = apply_local(state, LocalOperator((j,), _Z))
    if corr.flip_all:
        state = _apply_each(state, _X)
    return state


def run_trajectory(config: ProtocolConfig, rng: np.random.Generator, engine: str = "sector") -> TrajectoryResult:
    network = config.network
    eng = ENGINES[engine](config.n, config.cavity, network)
    record = ClickRecord()
    for rnd in (1, 2):
        status = _run_round(eng, rnd, rng, config.eta, config.t_wait, config.threshold, record)
        if status != "ok":
            return TrajectoryResult(record, False, None, status=status)
        if rnd == 1:
            eng.flip_and_excite(config.threshold)

    final = eng.atomic_state().normalized()
    if not accept_pattern(record, config.n, config.m, config.acceptance):
        return TrajectoryResult(record, False, final)

    target = target_state(config.n, config.m)
    try:
        corr = phase_correction(record, network, target_ones=config.m)
    except CannotCorrectError:
        flipped = final if record.counts()[1] == config.m else _apply_each(final, _X)
        return TrajectoryResult(record, True, final, fidelity(target, flipped),
                                None, correctable=False)
    fid = fidelity(target, apply_correction(final, corr))
    return TrajectoryResult(record, True, final, fid, corr)


def seed_success_formula(n: int, eta_d: float = 1.0, eta_l: float = 1.0) -> float:
    """Heralding probability of the W seed: (eta_d eta_l)^N * N / 2^(N-1).

    N = 2 is the two-node base case, (eta_d eta_l)^2 / 2.
    """
    level_for(n)
    eta = eta_d * eta_l
    if n == 2:
        return eta ** 2 / 2
    if n < 2:
        raise ValueError("need at least two nodes")
    return eta ** n * n / 2 ** (n - 1)


def pattern_success_probability(n: int, m: int, eta: float = 1.0) -> float:
    """Probability of an (m, N-m) click pattern in either round order.

    With unit efficiency the round-one click count equals the number of
    initial excitations, binomially distributed.
    """
    ways = math.comb(n, m) if 2 * m == n else 2 * math.comb(n, m)
    return eta ** n * ways / 2 ** n
