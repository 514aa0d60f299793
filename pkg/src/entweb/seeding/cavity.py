"""Single-node cavity-QED dynamics under the no-click (non-Hermitian) evolution.

Each node is a three-level atom {|0>, |1>, |e>} times a cavity mode truncated
at one photon.  Site levels are indexed ``2*atom + photon`` with atom
0, 1, e -> 0, 1, 2, giving six levels per node.

The coupling sign is chosen so that a node prepared in |e,0> evolves into
``beta(t)|e,0> + alpha(t)|1,1>`` with exactly the closed forms used for
alpha and beta.  Flipping that sign only changes the phase convention of
|1,1>, which every photon detection multiplies into a global phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..hilbert import LevelLayout, LocalOperator, StateVector, apply_local

ATOM_0, ATOM_1, ATOM_E = 0, 1, 2
LEVELS_PER_NODE = 6


def level(atom: int, photon: int) -> int:
    return 2 * atom + photon


G00 = level(ATOM_0, 0)   # |0,0>
G01 = level(ATOM_0, 1)   # |0,1>
D10 = level(ATOM_1, 0)   # |1,0>, emitted
P11 = level(ATOM_1, 1)   # |1,1>, photon in cavity
E0 = level(ATOM_E, 0)    # |e,0>
E1 = level(ATOM_E, 1)    # |e,1>

# levels that still hold an excitation (atomic or photonic)
EXCITED_LEVELS = (G01, P11, E0, E1)


class UnsupportedRegimeError(ValueError):
    """Raised outside the overdamped regime kappa > g > 0."""


@dataclass(frozen=True)
class CavityParams:
    g: float = 0.5
    kappa: float = 1.0

    def __post_init__(self):
        if not (self.g > 0):
            raise UnsupportedRegimeError(f"coupling g must be positive, got {self.g}")
        if not (self.kappa > self.g):
            raise UnsupportedRegimeError(f"need kappa > g, got kappa={self.kappa}, g={self.g}")

    @property
    def root(self) -> float:
        return math.sqrt(self.kappa ** 2 - self.g ** 2)

    @property
    def omega_plus(self) -> float:
        return (-self.kappa + self.root) / 2

    @property
    def omega_minus(self) -> float:
        return (-self.kappa - self.root) / 2

    @property
    def slow_rate(self) -> float:
        """|omega_+|, the slowest decay rate of the excited doublet."""
        return -self.omega_plus


def alpha_beta(t, p: CavityParams):
    """Cavity-photon and excited-atom amplitudes after time ``t`` from |e,0>.

    Vectorized over ``t``.  Returns ``(alpha, beta)``.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("time must be non-negative")
    wp, wm, s, g = p.omega_plus, p.omega_minus, p.root, p.g
    ep, em = np.exp(wp * t), np.exp(wm * t)
    alpha = -1j * g / (2 * s) * (-ep + em)
    beta = g ** 2 / (4 * s) * (-ep / wp + em / wm)
    return alpha, beta + 0j


def excited_norm(t, p: CavityParams):
    """|alpha(t)|^2 + |beta(t)|^2: survival of one excitation with no click."""
    t = np.asarray(t, dtype=float)
    wp, wm, s, g = p.omega_plus, p.omega_minus, p.root, p.g
    ep, em = np.exp(wp * t), np.exp(wm * t)
    a = g / (2 * s) * (em - ep)
    b = g ** 2 / (4 * s) * (-ep / wp + em / wm)
    return a * a + b * b


def excited_norm_function(p: CavityParams):
    """Scalar, allocation-free version of :func:`excited_norm` for hot loops."""
    wp, wm, s, g = p.omega_plus, p.omega_minus, p.root, p.g
    ca = g / (2 * s)
    cb = g ** 2 / (4 * s)
    exp = math.exp

    def d(t: float) -> float:
        ep, em = exp(wp * t), exp(wm * t)
        a = ca * (em - ep)
        b = cb * (em / wm - ep / wp)
        return a * a + b * b
    return d


def doublet_propagator(t: float, p: CavityParams) -> np.ndarray:
    """exp(M t) on the (|e,0>, |1,1>) doublet, M = [[0, i g/2], [i g/2, -kappa]].

    Closed form of a 2x2 exponential, written independently of
    :func:`alpha_beta` so the two can be checked against each other.
    """
    mu = -p.kappa / 2
    nu = p.root / 2
    half_g = p.g / 2
    c = math.cosh(nu * t)
    sh = math.sinh(nu * t) / nu
    pref = math.exp(mu * t)
    return pref * np.array([[c + p.kappa / 2 * sh, 1j * half_g * sh],
                            [1j * half_g * sh, c - p.kappa / 2 * sh]], dtype=np.complex128)


def node_generator(p: CavityParams) -> np.ndarray:
    """Effective non-Hermitian Hamiltonian of one node (6x6)."""
    h = np.zeros((LEVELS_PER_NODE, LEVELS_PER_NODE), dtype=np.complex128)
    h[P11, E0] = h[E0, P11] = -p.g / 2
    for lv in (G01, P11, E1):
        h[lv, lv] = -1j * p.kappa
    return h


def node_propagator(dt: float, p: CavityParams) -> np.ndarray:
    """exp(-i H dt) for one node, exact."""
    u = np.zeros((LEVELS_PER_NODE, LEVELS_PER_NODE), dtype=np.complex128)
    u[G00, G00] = u[D10, D10] = 1.0
    decay = math.exp(-p.kappa * dt)
    u[G01, G01] = u[E1, E1] = decay
    block = doublet_propagator(dt, p)
    idx = (E0, P11)
    for a in range(2):
        for b in range(2):
            u[idx[a], idx[b]] = block[a, b]
    return u


def photon_annihilator() -> np.ndarray:
    """Cavity lowering operator c on one node: |a,1> -> |a,0>."""
    c = np.zeros((LEVELS_PER_NODE, LEVELS_PER_NODE), dtype=np.complex128)
    for atom in (ATOM_0, ATOM_1, ATOM_E):
        c[level(atom, 0), level(atom, 1)] = 1.0
    return c


def node_layout(n_nodes: int) -> LevelLayout:
    return LevelLayout.uniform(n_nodes, LEVELS_PER_NODE)


def evolve_conditional(state: StateVector, dt: float, p: CavityParams) -> StateVector:
    """Propagate all nodes by ``dt`` under the no-click evolution."""
    if dt < 0:
        raise ValueError("dt must be non-negative")
    u = node_propagator(dt, p)
    for site in range(state.layout.n_sites):
        state = apply_local(state, LocalOperator((site,), u))
    return state


def excitation_weight(state: StateVector) -> float:
    """Squared norm of the part of ``state`` with any excitation left."""
    t = state.tensor
    mask = np.zeros(t.shape, dtype=bool)
    for site in range(t.ndim):
        sl = [slice(None)] * t.ndim
        sl[site] = list(EXCITED_LEVELS)
        mask[tuple(sl)] = True
    return float(np.sum(np.abs(t[mask]) ** 2))


def drop_excitations(state: StateVector) -> StateVector:
    """Zero every amplitude that still carries an excitation (unnormalized)."""
    t = state.tensor.copy()
    for site in range(t.ndim):
        sl = [slice(None)] * t.ndim
        sl[site] = list(EXCITED_LEVELS)
        t[tuple(sl)] = 0.0
    return StateVector(state.layout, t.reshape(-1))
