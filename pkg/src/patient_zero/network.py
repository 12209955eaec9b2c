"""Contact networks: the household network model and the lazy red-blue tree.

Both graph types expose the same small read-only surface used by the rest
of the package: ``neighbors(v)``, ``household(v)``, ``household_id(v)`` and
``v in graph``.  HNM nodes are dense integers; red-blue tree nodes are tuples
of child indices (the empty tuple is the root), so the infinite tree never
needs global storage.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

RED = "red"
BLUE = "blue"


class ParameterError(ValueError):
    """Raised for inconsistent model parameters."""


@dataclass(frozen=True)
class NetworkParams:
    n: int = 399
    d_h: int = 2
    d_c: int = 3

    def __post_init__(self):
        if self.n <= 0:
            raise ParameterError(f"n must be positive, got {self.n}")
        if self.d_h < 0:
            raise ParameterError(f"d_h must be >= 0, got {self.d_h}")
        if self.d_c < 1:
            raise ParameterError(f"d_c must be >= 1, got {self.d_c}")
        if self.n % (self.d_h + 1):
            raise ParameterError(
                f"n={self.n} is not divisible by the household size {self.d_h + 1}")

    @property
    def household_size(self) -> int:
        return self.d_h + 1


class Graph:
    """Static undirected graph with a household partition."""

    def __init__(self, adjacency: list[tuple[int, ...]], household_of: np.ndarray,
                 params: NetworkParams | None = None, discarded_pairs: int = 0):
        self.adjacency = adjacency
        self.household_of = np.asarray(household_of, dtype=np.int64)
        self.params = params
        self.discarded_pairs = discarded_pairs
        households: dict[int, list[int]] = {}
        for v, hid in enumerate(self.household_of.tolist()):
            households.setdefault(hid, []).append(v)
        self.households = {hid: tuple(members) for hid, members in households.items()}

    @property
    def n(self) -> int:
        return len(self.adjacency)

    @property
    def finite(self) -> bool:
        return True

    def __contains__(self, v) -> bool:
        return isinstance(v, (int, np.integer)) and 0 <= v < self.n

    def __iter__(self):
        return iter(range(self.n))

    def _check(self, v):
        if v not in self:
            raise KeyError(f"unknown node {v!r}")

    def neighbors(self, v: int) -> tuple[int, ...]:
        self._check(v)
        return self.adjacency[v]

    def degree(self, v: int) -> int:
        return len(self.neighbors(v))

    def household_id(self, v: int) -> int:
        self._check(v)
        return int(self.household_of[v])

    def household(self, v: int) -> tuple[int, ...]:
        return self.households[self.household_id(v)]

    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u, nbrs in enumerate(self.adjacency) for v in nbrs if u < v]

    def number_of_edges(self) -> int:
        return sum(len(a) for a in self.adjacency) // 2

    def to_csr(self):
        """Adjacency as a scipy CSR matrix (used for all-pairs distances)."""
        from scipy.sparse import csr_matrix

        indptr = np.zeros(self.n + 1, dtype=np.int64)
        indptr[1:] = np.cumsum([len(a) for a in self.adjacency])
        indices = np.fromiter((v for a in self.adjacency for v in a), dtype=np.int64,
                              count=int(indptr[-1]))
        data = np.ones(len(indices), dtype=np.int8)
        return csr_matrix((data, indices, indptr), shape=(self.n, self.n))

    def __eq__(self, other) -> bool:
        return (isinstance(other, Graph) and self.adjacency == other.adjacency
                and np.array_equal(self.household_of, other.household_of))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, edges={self.number_of_edges()})"


def generate_hnm(params: NetworkParams, seed=None) -> Graph:
    """Sample a household network model graph.

    Households are the consecutive blocks ``[k(d_h+1), (k+1)(d_h+1))``.  The
    ``n * d_c`` half-edges are shuffled once and paired in order; pairs that
    would create a self-loop or repeat an existing edge (household edges
    included) are dropped, not re-paired.
    """
    if not isinstance(params, NetworkParams):
        raise ParameterError("params must be a NetworkParams instance")
    rng = np.random.default_rng(seed)
    n, size = params.n, params.household_size
    household_of = np.arange(n) // size
    adj: list[set[int]] = [set() for _ in range(n)]
    for start in range(0, n, size):
        members = range(start, start + size)
        for u in members:
            adj[u].update(m for m in members if m != u)

    stubs = np.repeat(np.arange(n), params.d_c)
    rng.shuffle(stubs)
    if len(stubs) % 2:
        stubs = stubs[:-1]
    discarded = 0
    for u, v in stubs.reshape(-1, 2).tolist():
        if u == v or v in adj[u]:
            discarded += 1
            continue
        adj[u].add(v)
        adj[v].add(u)
    adjacency = [tuple(sorted(a)) for a in adj]
    return Graph(adjacency, household_of, params, discarded_pairs=discarded)


def household_members(g, v) -> tuple:
    """All members of the household containing ``v`` (``v`` included)."""
    return g.household(v)


def dump_graph(g: Graph) -> str:
    """Adjacency-list text dump: ``id: nbr,nbr`` lines, then a household map."""
    out = io.StringIO()
    out.write("# adjacency\n")
    for v, nbrs in enumerate(g.adjacency):
        out.write(f"{v}: {','.join(map(str, nbrs))}\n")
    out.write("# households\n")
    for hid in sorted(g.households):
        out.write(f"{hid}: {','.join(map(str, g.households[hid]))}\n")
    return out.getvalue()


def load_graph(text: str) -> Graph:
    section = None
    adjacency: dict[int, tuple[int, ...]] = {}
    household_of: dict[int, int] = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            section = line[1:].strip()
            continue
        key, _, rest = line.partition(":")
        items = tuple(int(x) for x in rest.split(",") if x.strip())
        if section == "adjacency":
            adjacency[int(key)] = items
        elif section == "households":
            for v in items:
                household_of[v] = int(key)
        else:
            raise ValueError(f"line outside a section: {raw!r}")
    n = len(adjacency)
    if sorted(adjacency) != list(range(n)) or sorted(household_of) != list(range(n)):
        raise ValueError("node ids must be dense 0..n-1 in both sections")
    return Graph([adjacency[v] for v in range(n)],
                 np.array([household_of[v] for v in range(n)]))


# --- red-blue tree -------------------------------------------------------

class RBNode(NamedTuple):
    address: tuple[int, ...]
    color: str
    household: tuple[int, ...]


class RBTree:
    """The infinite red-blue tree, materialised lazily by address.

    Child ``i`` of a node is red when ``i`` is below the node's red-child
    count and blue otherwise.  A household is identified by the address of
    its red node.
    """

    root: tuple[int, ...] = ()

    def __init__(self, d_c: int, d_h: int):
        if d_c < 1 or d_h < 0:
            raise ParameterError(f"invalid red-blue tree parameters d_c={d_c}, d_h={d_h}")
        self.d_c = d_c
        self.d_h = d_h
        self._colors: dict[tuple[int, ...], str] = {(): RED}

    @classmethod
    def from_params(cls, params: NetworkParams) -> "RBTree":
        return cls(params.d_c, params.d_h)

    @property
    def finite(self) -> bool:
        return False

    n = None

    def __contains__(self, v) -> bool:
        if not isinstance(v, tuple):
            return False
        try:
            self.color(v)
        except KeyError:
            return False
        return True

    def red_children_count(self, v: tuple[int, ...]) -> int:
        c = self.color(v)
        if c == BLUE or v == ():
            return self.d_c
        return self.d_c - 1

    def blue_children_count(self, v: tuple[int, ...]) -> int:
        return self.d_h if self.color(v) == RED else 0

    def color(self, v: tuple[int, ...]) -> str:
        c = self._colors.get(v)
        if c is not None:
            return c
        if not isinstance(v, tuple) or not v:
            raise KeyError(f"unknown node {v!r}")
        parent = v[:-1]
        i = v[-1]
        pc = self.color(parent)
        n_red = self.d_c if (pc == BLUE or parent == ()) else self.d_c - 1
        n_blue = self.d_h if pc == RED else 0
        if not 0 <= i < n_red + n_blue:
            raise KeyError(f"unknown node {v!r}")
        c = RED if i < n_red else BLUE
        self._colors[v] = c
        return c

    def children(self, v: tuple[int, ...]) -> list[tuple[int, ...]]:
        k = self.red_children_count(v) + self.blue_children_count(v)
        return [v + (i,) for i in range(k)]

    def parent(self, v: tuple[int, ...]):
        self.color(v)
        return v[:-1] if v else None

    def neighbors(self, v: tuple[int, ...]) -> list[tuple[int, ...]]:
        kids = self.children(v)
        return kids if v == () else [v[:-1]] + kids

    def degree(self, v) -> int:
        return len(self.neighbors(v))

    def household_id(self, v: tuple[int, ...]) -> tuple[int, ...]:
        return v if self.color(v) == RED else v[:-1]

    def household(self, v: tuple[int, ...]) -> list[tuple[int, ...]]:
        red = self.household_id(v)
        n_red = self.red_children_count(red)
        return [red] + [red + (n_red + j,) for j in range(self.d_h)]

    def node(self, v: tuple[int, ...]) -> RBNode:
        return RBNode(v, self.color(v), self.household_id(v))


def rb_children(node: RBNode | tuple, params) -> list[RBNode]:
    """Children of a red-blue tree node (root: d_c red + d_h blue; red: d_c-1
    red + d_h blue; blue: d_c red)."""
    tree = params if isinstance(params, RBTree) else RBTree(params.d_c, params.d_h)
    address = node.address if isinstance(node, RBNode) else node
    return [tree.node(c) for c in tree.children(address)]


def rb_paths(tree: RBTree, length: int) -> Iterable[tuple[tuple[int, ...], ...]]:
    """Every downward path of ``length`` edges starting at the root, found by
    breadth-first expansion of the lazy tree."""
    frontier = [((),)]
    for _ in range(length):
        frontier = [path + (c,) for path in frontier for c in tree.children(path[-1])]
    return frontier
