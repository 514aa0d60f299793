"""Dense state vectors over small products of finite level sets.

Sites are ordered most-significant first: in a layout ``(d0, d1, ..., dn)``
the configuration ``(c0, c1, ..., cn)`` sits at index
``c0*d1*...*dn + c1*d2*...*dn + ... + cn``.  Everything is double-precision
complex and stored densely; the largest spaces used by the package are a few
million amplitudes.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


class InvalidConfigurationError(ValueError):
    """A level index or site does not fit the layout."""


class DimensionMismatchError(ValueError):
    """Operator or state dimensions disagree with the layout."""


@dataclass(frozen=True)
class LevelLayout:
    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims or any(d < 1 for d in dims):
            raise InvalidConfigurationError(f"level counts must be positive, got {self.dims}")
        object.__setattr__(self, "dims", dims)

    @classmethod
    def uniform(cls, n_sites: int, levels: int) -> "LevelLayout":
        return cls((levels,) * n_sites)

    @property
    def n_sites(self) -> int:
        return len(self.dims)

    @property
    def dim(self) -> int:
        return math.prod(self.dims)

    def encode(self, config: Sequence[int]) -> int:
        if len(config) != self.n_sites:
            raise InvalidConfigurationError(
                f"configuration has {len(config)} sites, layout has {self.n_sites}")
        index = 0
        for level, d in zip(config, self.dims):
            level = int(level)
            if not 0 <= level < d:
                raise InvalidConfigurationError(f"level {level} out of range for site with {d} levels")
            index = index * d + level
        return index

    def decode(self, index: int) -> tuple[int, ...]:
        index = int(index)
        if not 0 <= index < self.dim:
            raise InvalidConfigurationError(f"index {index} out of range [0, {self.dim})")
        config = []
        for d in reversed(self.dims):
            index, level = divmod(index, d)
            config.append(level)
        return tuple(reversed(config))

    def configurations(self):
        """Iterate all configurations in index order."""
        return itertools.product(*(range(d) for d in self.dims))


def basis_index(layout: LevelLayout, configuration: Sequence[int]) -> int:
    return layout.encode(configuration)


@dataclass
class StateVector:
    layout: LevelLayout
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128).reshape(-1)
        if amps.shape[0] != self.layout.dim:
            raise DimensionMismatchError(
                f"{amps.shape[0]} amplitudes for layout of dimension {self.layout.dim}")
        self.amplitudes = amps

    @classmethod
    def basis(cls, layout: LevelLayout, configuration: Sequence[int]) -> "StateVector":
        amps = np.zeros(layout.dim, dtype=np.complex128)
        amps[layout.encode(configuration)] = 1.0
        return cls(layout, amps)

    @classmethod
    def product(cls, site_vectors: Sequence[Sequence[complex]]) -> "StateVector":
        """Tensor product of per-site vectors, site 0 first."""
        vecs = [np.asarray(v, dtype=np.complex128) for v in site_vectors]
        amps = vecs[0]
        for v in vecs[1:]:
            amps = np.kron(amps, v)
        return cls(LevelLayout(tuple(len(v) for v in vecs)), amps)

    @property
    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.layout.dims)

    def norm(self) -> float:
        return norm(self)

    def normalized(self) -> "StateVector":
        n = self.norm()
        if n == 0.0:
            raise ZeroDivisionError("cannot normalize the zero vector")
        return StateVector(self.layout, self.amplitudes / n)

    def copy(self) -> "StateVector":
        return StateVector(self.layout, self.amplitudes.copy())

    def probability(self, configuration: Sequence[int]) -> float:
        return float(abs(self.amplitudes[self.layout.encode(configuration)]) ** 2)


@dataclass(frozen=True)
class LocalOperator:
    """Dense operator acting on one site or a tuple of sites.

    For several sites the matrix acts on their tensor product in the order
    given by ``sites`` (first listed site most significant).
    """
    sites: tuple[int, ...]
    matrix: np.ndarray

    def __post_init__(self):
        sites = (self.sites,) if isinstance(self.sites, (int, np.integer)) else tuple(self.sites)
        sites = tuple(int(s) for s in sites)
        if len(set(sites)) != len(sites):
            raise InvalidConfigurationError(f"repeated site in {sites}")
        object.__setattr__(self, "sites", sites)
        object.__setattr__(self, "matrix", np.asarray(self.matrix, dtype=np.complex128))


def apply_local(state: StateVector, op: LocalOperator) -> StateVector:
    layout = state.layout
    for s in op.sites:
        if not 0 <= s < layout.n_sites:
            raise InvalidConfigurationError(f"site {s} outside layout with {layout.n_sites} sites")
    sub_dims = [layout.dims[s] for s in op.sites]
    sub_dim = math.prod(sub_dims)
    if op.matrix.shape != (sub_dim, sub_dim):
        raise DimensionMismatchError(
            f"operator of shape {op.matrix.shape} on sites {op.sites} with dims {sub_dims}")
    k = len(op.sites)
    mat = op.matrix.reshape(sub_dims + sub_dims)
    out = np.tensordot(mat, state.tensor, axes=(list(range(k, 2 * k)), list(op.sites)))
    # tensordot puts the operator's output axes first
    out = np.moveaxis(out, list(range(k)), list(op.sites))
    return StateVector(layout, out.reshape(-1))


def inner(a: StateVector, b: StateVector) -> complex:
    """<a|b>, antilinear in ``a``."""
    if a.layout != b.layout:
        raise DimensionMismatchError("states live on different layouts")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def norm(a: StateVector) -> float:
    return float(np.linalg.norm(a.amplitudes))


def fidelity(a: StateVector, b: StateVector) -> float:
    """|<a|b>|^2 for normalized inputs."""
    return abs(inner(a, b)) ** 2


Z_BASIS = None
X_BASIS = np.array([[1, 1], [1, -1]], dtype=np.complex128) / math.sqrt(2)


@dataclass
class MeasurementBranch:
    outcome: int
    probability: float
    state: StateVector | None


def measure_projective(state: StateVector, site: int, partition: Sequence[Sequence[int]],
                       basis: np.ndarray | None = None) -> list[MeasurementBranch]:
    """All branches of a projective measurement on one site.

    ``partition`` groups the site's levels into outcomes; outcome ``k`` is
    the projector onto ``partition[k]``.  ``basis`` (columns are the basis
    vectors, e.g. :data:`X_BASIS`) measures in a rotated basis; post-states
    are expressed back in the computational basis.  Branches with zero
    probability carry ``state=None``.
    """
    d = state.layout.dims[site]
    cells = [tuple(int(l) for l in cell) for cell in partition]
    if any(len(cell) == 0 for cell in cells):
        raise InvalidConfigurationError("empty partition cell")
    flat = [l for cell in cells for l in cell]
    if sorted(flat) != list(range(d)):
        raise InvalidConfigurationError(f"partition {cells} does not cover levels 0..{d - 1} exactly once")

    total = norm(state) ** 2
    if total == 0.0:
        raise ZeroDivisionError("cannot measure the zero vector")
    rotated = state
    if basis is not None:
        basis = np.asarray(basis, dtype=np.complex128)
        rotated = apply_local(state, LocalOperator((site,), basis.conj().T))

    branches = []
    for k, cell in enumerate(cells):
        proj = np.zeros((d, d), dtype=np.complex128)
        proj[list(cell), list(cell)] = 1.0
        post = apply_local(rotated, LocalOperator((site,), proj))
        if basis is not None:
            post = apply_local(post, LocalOperator((site,), basis))
        p = norm(post) ** 2 / total
        branches.append(MeasurementBranch(k, p, post.normalized() if p > 0 else None))
    return branches


def project_sites(state: StateVector, fixed: dict[int, Sequence[complex]]) -> StateVector:
    """Contract the listed sites against bra vectors, leaving the rest.

    Used to strip ancillas that are known to sit in a product state.
    """
    tensor = state.tensor
    keep = [s for s in range(state.layout.n_sites) if s not in fixed]
    for site in sorted(fixed, reverse=True):
        vec = np.asarray(fixed[site], dtype=np.complex128)
        tensor = np.tensordot(vec.conj(), tensor, axes=([0], [site]))
    layout = LevelLayout(tuple(state.layout.dims[s] for s in keep))
    return StateVector(layout, tensor.reshape(-1))


def dicke_state(n: int, ones: int) -> StateVector:
    """Equal superposition of all n-qubit strings with ``ones`` ones."""
    if not 0 <= ones <= n:
        raise InvalidConfigurationError(f"need 0 <= ones <= n, got ones={ones}, n={n}")
    layout = LevelLayout.uniform(n, 2)
    amps = np.zeros(layout.dim, dtype=np.complex128)
    for bits in itertools.combinations(range(n), ones):
        config = [0] * n
        for b in bits:
            config[b] = 1
        amps[layout.encode(config)] = 1.0
    return StateVector(layout, amps / math.sqrt(math.comb(n, ones)))


def w_state(n: int) -> StateVector:
    return dicke_state(n, 1)


_NAIVE_MAX = 4
_RYSER_MAX = 12


def _permanent_naive(m: np.ndarray):
    n = m.shape[0]
    return sum(math.prod(m[i, p[i]] for i in range(n)) for p in itertools.permutations(range(n)))


def _permanent_ryser(m: np.ndarray):
    # Ryser with Gray-code column updates, O(2^n n)
    n = m.shape[0]
    row_sums = np.zeros(n, dtype=m.dtype)
    total = 0
    prev_gray = 0
    for k in range(1, 1 << n):
        gray = k ^ (k >> 1)
        changed = (gray ^ prev_gray).bit_length() - 1
        if gray & (1 << changed):
            row_sums = row_sums + m[:, changed]
        else:
            row_sums = row_sums - m[:, changed]
        prev_gray = gray
        sign = -1 if bin(gray).count("1") % 2 else 1
        total += sign * np.prod(row_sums)
    return (-1) ** n * total


def permanent(matrix) -> complex:
    """Permanent of a square matrix.

    Permutation sum up to 4x4, Ryser's formula beyond.  Integer inputs stay
    in integer arithmetic, so ±1 matrices are exact.  Sizes above 12 are
    refused.  The empty matrix has permanent 1.
    """
    m = np.asarray(matrix)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatchError(f"permanent needs a square matrix, got shape {m.shape}")
    n = m.shape[0]
    if n == 0:
        return 1
    if n > _RYSER_MAX:
        raise DimensionMismatchError(f"permanent limited to size {_RYSER_MAX}, got {n}")
    if np.issubdtype(m.dtype, np.integer):
        m = m.astype(object)
        return _permanent_naive(m) if n <= _NAIVE_MAX else _permanent_ryser(m)
    m = m.astype(np.complex128)
    value = _permanent_naive(m) if n <= _NAIVE_MAX else _permanent_ryser(m)
    return complex(value)


def permanent_naive(matrix) -> complex:
    """Plain permutation sum, for cross-checking :func:`permanent`."""
    m = np.asarray(matrix)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatchError(f"permanent needs a square matrix, got shape {m.shape}")
    if np.issubdtype(m.dtype, np.integer):
        return _permanent_naive(m.astype(object))
    return complex(_permanent_naive(m.astype(np.complex128)))
