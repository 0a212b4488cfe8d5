"""Grid graph representation and the dense complex linear algebra built on it.

Buses are nodes, branches are edges carrying a series impedance in per-unit.
Distribution graphs are rooted spanning trees (the root is the substation);
transmission graphs are connected and may be meshed.  The nodal admittance
matrix of the in-service branches doubles as the graph shift operator once
normalized by its largest singular value, which keeps powers of the operator
bounded when it is used inside polynomial graph filters.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np

from .errors import (
    DanglingBranch,
    DegenerateMatrix,
    DimensionMismatch,
    Disconnected,
    InvalidGraph,
    NotRadial,
    ZeroImpedance,
)

IMPEDANCE_FLOOR = 1e-12
PINV_RCOND = 1e-10

DISTRIBUTION = "distribution"
TRANSMISSION = "transmission"


@dataclass(frozen=True)
class Branch:
    """One series branch; out-of-service branches stay in the record."""

    from_bus: int
    to_bus: int
    impedance: complex
    in_service: bool = True

    def key(self) -> frozenset:
        return frozenset((self.from_bus, self.to_bus))


class BfsTree(NamedTuple):
    """Breadth-first traversal of the in-service graph, by bus position."""

    order: np.ndarray        # positions in visit order, root first
    parent: np.ndarray       # parent position per bus, -1 at the root
    depth: np.ndarray        # hop count from the root
    parent_branch: np.ndarray  # index into graph.branches of the edge to the parent, -1 at root


@dataclass(frozen=True)
class GridGraph:
    """Immutable bus/branch graph with structural invariants enforced on build."""

    bus_ids: tuple[int, ...]
    branches: tuple[Branch, ...]
    kind: str = DISTRIBUTION
    root: int | None = None
    _pos: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "bus_ids", tuple(int(b) for b in self.bus_ids))
        object.__setattr__(self, "branches", tuple(self.branches))
        if self.kind not in (DISTRIBUTION, TRANSMISSION):
            raise InvalidGraph(f"unknown graph kind {self.kind!r}")
        if len(set(self.bus_ids)) != len(self.bus_ids):
            raise InvalidGraph("duplicate bus ids")
        object.__setattr__(self, "_pos", {b: i for i, b in enumerate(self.bus_ids)})
        self._validate()

    def _validate(self):
        seen = set()
        for br in self.branches:
            if br.from_bus == br.to_bus:
                raise InvalidGraph(f"self-loop at bus {br.from_bus}")
            for end in (br.from_bus, br.to_bus):
                if end not in self._pos:
                    raise DanglingBranch(end)
            if br.in_service:
                if abs(br.impedance) <= 0.0:
                    raise ZeroImpedance(f"branch {br.from_bus}-{br.to_bus} has zero impedance")
                k = br.key()
                if k in seen:
                    raise InvalidGraph(f"duplicate in-service branch {br.from_bus}-{br.to_bus}")
                seen.add(k)
        if self.kind == DISTRIBUTION:
            if self.root is None:
                raise InvalidGraph("distribution graph requires a root bus")
            if self.root not in self._pos:
                raise DanglingBranch(self.root)
            live = self.in_service()
            if len(live) != self.n - 1 or not self._connected(live):
                raise NotRadial(
                    f"{self.n} buses with {len(live)} in-service branches do not form a spanning tree"
                )
        else:
            if not self._connected(self.in_service()):
                raise Disconnected("transmission graph is not connected")

    def _connected(self, live: list[Branch]) -> bool:
        if self.n == 0:
            return False
        parent = list(range(self.n))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for br in live:
            ra, rb = find(self._pos[br.from_bus]), find(self._pos[br.to_bus])
            if ra != rb:
                parent[ra] = rb
        root = find(0)
        return all(find(i) == root for i in range(self.n))

    @property
    def n(self) -> int:
        return len(self.bus_ids)

    def pos(self, bus_id: int) -> int:
        return self._pos[bus_id]

    def in_service(self) -> list[Branch]:
        return [br for br in self.branches if br.in_service]

    def adjacency(self) -> list[list[tuple[int, int]]]:
        """Per bus position: (neighbor position, branch index) over in-service branches."""
        adj: list[list[tuple[int, int]]] = [[] for _ in range(self.n)]
        for idx, br in enumerate(self.branches):
            if not br.in_service:
                continue
            i, j = self._pos[br.from_bus], self._pos[br.to_bus]
            adj[i].append((j, idx))
            adj[j].append((i, idx))
        return adj

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=int)
        for br in self.in_service():
            deg[self._pos[br.from_bus]] += 1
            deg[self._pos[br.to_bus]] += 1
        return deg

    def leaves(self) -> list[int]:
        """Bus ids with in-service degree one, excluding the root."""
        deg = self.degrees()
        return [b for b, d in zip(self.bus_ids, deg) if d == 1 and b != self.root]

    def slack_bus(self) -> int:
        return self.root if self.root is not None else self.bus_ids[0]

    def bfs(self, start: int | None = None) -> BfsTree:
        """Breadth-first tree from the root/slack; neighbor order follows bus order."""
        start = self.slack_bus() if start is None else start
        s = self._pos[start]
        adj = self.adjacency()
        order = [s]
        parent = np.full(self.n, -1, dtype=int)
        parent_branch = np.full(self.n, -1, dtype=int)
        depth = np.full(self.n, -1, dtype=int)
        depth[s] = 0
        head = 0
        while head < len(order):
            u = order[head]
            head += 1
            for v, bidx in sorted(adj[u]):
                if depth[v] < 0:
                    depth[v] = depth[u] + 1
                    parent[v] = u
                    parent_branch[v] = bidx
                    order.append(v)
        if len(order) < self.n:
            raise Disconnected("graph is not connected from the start bus")
        return BfsTree(np.array(order), parent, depth, parent_branch)


@dataclass(frozen=True)
class Gso:
    """Graph shift operator: complex symmetric, spectral norm 1 when normalized."""

    matrix: np.ndarray
    scale: float
    normalized: bool = True

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.complex128)
        object.__setattr__(self, "matrix", m)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatch(f"GSO must be square, got {m.shape}")
        if not np.all(np.isfinite(m.view(np.float64))):
            raise DegenerateMatrix("GSO has non-finite entries")
        if np.max(np.abs(m - m.T)) > 1e-12:
            raise InvalidGraph("GSO must be complex symmetric")
        if self.normalized:
            top = np.linalg.norm(m, 2)
            if abs(top - 1.0) > 1e-9:
                raise DegenerateMatrix(f"normalized GSO has spectral norm {top}")

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


def build_admittance(graph: GridGraph) -> np.ndarray:
    """Nodal admittance matrix of the in-service branches (no shunts)."""
    n = graph.n
    y = np.zeros((n, n), dtype=np.complex128)
    for br in graph.in_service():
        if abs(br.impedance) < IMPEDANCE_FLOOR:
            raise ZeroImpedance(f"branch {br.from_bus}-{br.to_bus}: |z| < {IMPEDANCE_FLOOR}")
        adm = 1.0 / br.impedance
        i, j = graph.pos(br.from_bus), graph.pos(br.to_bus)
        y[i, i] += adm
        y[j, j] += adm
        y[i, j] -= adm
        y[j, i] -= adm
    if not np.all(np.isfinite(y.view(np.float64))):
        raise DegenerateMatrix("admittance matrix has non-finite entries")
    return y


def build_gso(admittance: np.ndarray, normalize: bool = True) -> Gso:
    """Shift operator from an admittance matrix, scaled to unit spectral norm."""
    y = np.asarray(admittance, dtype=np.complex128)
    if y.ndim != 2 or y.shape[0] != y.shape[1]:
        raise DimensionMismatch(f"expected square matrix, got {y.shape}")
    if np.max(np.abs(y - y.T)) > 1e-9:
        raise InvalidGraph("admittance matrix must be symmetric")
    if not normalize:
        return Gso(matrix=y, scale=1.0, normalized=False)
    top = float(np.linalg.norm(y, 2))
    if top < 1e-12:
        raise DegenerateMatrix("admittance matrix is numerically zero")
    return Gso(matrix=y / top, scale=top, normalized=True)


def filter_matrix(s: np.ndarray, coeffs: Iterable[complex]) -> np.ndarray:
    """Polynomial of the shift operator, sum_k c_k S^k."""
    s = np.asarray(s, dtype=np.complex128)
    out = np.zeros_like(s)
    power = np.eye(s.shape[0], dtype=np.complex128)
    for c in coeffs:
        out = out + c * power
        power = power @ s
    return out


def shift_powers(s: np.ndarray, k_max: int) -> list[np.ndarray]:
    """[I, S, S^2, ..., S^k_max]."""
    s = np.asarray(s, dtype=np.complex128)
    powers = [np.eye(s.shape[0], dtype=np.complex128)]
    for _ in range(k_max):
        powers.append(powers[-1] @ s)
    return powers


def regularized_solve(h: np.ndarray, z: np.ndarray, s: np.ndarray, mu1: float) -> np.ndarray:
    """Solve the shift-regularized normal equations (H^H H + mu1 S)^+ H^H z.

    The pseudoinverse truncates singular values below PINV_RCOND times the
    largest one, which absorbs the rank deficiency of sparse sensor layouts.
    """
    h = np.asarray(h, dtype=np.complex128)
    z = np.asarray(z, dtype=np.complex128)
    s = np.asarray(s, dtype=np.complex128)
    if h.ndim != 2:
        raise DimensionMismatch(f"H must be a matrix, got ndim {h.ndim}")
    if z.shape[0] != h.shape[0]:
        raise DimensionMismatch(f"H has {h.shape[0]} rows but z has {z.shape[0]}")
    if s.shape != (h.shape[1], h.shape[1]):
        raise DimensionMismatch(f"S must be {h.shape[1]}x{h.shape[1]}, got {s.shape}")
    if mu1 < 0:
        raise ValueError("mu1 must be nonnegative")
    a = h.conj().T @ h + mu1 * s
    x = np.linalg.pinv(a, rcond=PINV_RCOND) @ (h.conj().T @ z)
    if not np.all(np.isfinite(x.view(np.float64))):
        raise DegenerateMatrix("regularized solve produced non-finite values")
    return x
