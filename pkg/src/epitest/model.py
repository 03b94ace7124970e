"""Core domain types and the controlled transition structure.

The population is a fixed set of N individuals, each either healthy (0) or
infected (1). Social contacts form a weighted undirected graph that may change
every step. Per step exactly one contact edge becomes *active*, drawn from the
non-quarantined (induced) subgraph with probability proportional to its weight;
if exactly one endpoint of the active edge is infected, the infection crosses
with probability p. Quarantined individuals are cut out of the contact graph:
they neither transmit nor catch the disease, and remain quarantined forever.

States are packed as bitmasks: bit (i - 1) of ``SystemState.mask`` is the
infection indicator of individual i. Wherever the 2**N state space is
enumerated, it is ordered by that integer mask, and argmin ties anywhere in
the toolkit break toward the lowest index.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Optional

import numpy as np

from .errors import ContractViolation, DimensionError, SizeCapError, ValidationError

# 2**N enumeration (dense kernels, exhaustive beliefs) is refused beyond this.
MAX_ENUMERATION_N = 20

Quarantine = frozenset  # set of quarantined vertex ids, subset of [1, N]

EMPTY_QUARANTINE: Quarantine = frozenset()


# ---------------------------------------------------------------------------
# states
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SystemState:
    """Infection pattern of the whole population, packed as a bitmask.

    ``mask`` bit (i - 1) holds individual i's indicator; ``n`` is the
    population size. Instances are immutable value objects.
    """

    mask: int
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError(f"population size must be >= 1, got {self.n}")
        if not 0 <= self.mask < (1 << self.n):
            raise ValidationError(
                f"state mask {self.mask} out of range for n={self.n}"
            )

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> "SystemState":
        bits = tuple(bits)
        mask = 0
        for i, b in enumerate(bits):
            if b not in (0, 1):
                raise ValidationError(f"state bits must be 0/1, got {b}")
            mask |= b << i
        return cls(mask, len(bits))

    @property
    def bits(self) -> tuple:
        return tuple((self.mask >> i) & 1 for i in range(self.n))

    def infected(self, i: int) -> bool:
        """Whether individual i (1-based) is infected."""
        self._check_vertex(i)
        return bool((self.mask >> (i - 1)) & 1)

    def infect(self, i: int) -> "SystemState":
        self._check_vertex(i)
        return SystemState(self.mask | (1 << (i - 1)), self.n)

    def count(self) -> int:
        """Number of infected individuals (the L1 norm of the bit vector)."""
        return self.mask.bit_count()

    def _check_vertex(self, i: int):
        if not 1 <= i <= self.n:
            raise ValidationError(f"vertex id {i} out of range [1, {self.n}]")

    def __str__(self):
        return "".join(str(b) for b in self.bits)


def _coerce_state(x) -> SystemState:
    if isinstance(x, SystemState):
        return x
    return SystemState.from_bits(x)


def single_flip(x, y) -> int:
    """1 if the two states differ in exactly one position, else 0.

    The disease spreads to at most one new individual per step, so this is
    the reachability indicator between consecutive hidden states.
    """
    x, y = _coerce_state(x), _coerce_state(y)
    if x.n != y.n:
        raise DimensionError(f"state lengths differ: {x.n} vs {y.n}")
    return 1 if (x.mask ^ y.mask).bit_count() == 1 else 0


def flipped_vertex(x, y) -> Optional[int]:
    """The unique vertex at which the two states differ, or None.

    Defined only when :func:`single_flip` is 1; identifies the individual
    that changed status between consecutive states.
    """
    x, y = _coerce_state(x), _coerce_state(y)
    if x.n != y.n:
        raise DimensionError(f"state lengths differ: {x.n} vs {y.n}")
    diff = x.mask ^ y.mask
    if diff.bit_count() != 1:
        return None
    return diff.bit_length()  # bit index + 1 == vertex id


# ---------------------------------------------------------------------------
# contact graphs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ContactGraph:
    """Weighted undirected contact graph over vertices 1..n_vertices.

    Edges are stored canonically as (i, j, w) with i < j, sorted, at most one
    entry per unordered pair, weights nonnegative.
    """

    n_vertices: int
    edges: tuple

    def __post_init__(self):
        if self.n_vertices < 1:
            raise ValidationError("graph needs at least one vertex")
        canonical = []
        seen = set()
        for e in self.edges:
            i, j, w = e
            if i == j:
                raise ValidationError(f"self-loop ({i},{j}) not allowed")
            if not (1 <= i <= self.n_vertices and 1 <= j <= self.n_vertices):
                raise ValidationError(f"edge ({i},{j}) has vertex outside [1,{self.n_vertices}]")
            if w < 0:
                raise ValidationError(f"edge ({i},{j}) has negative weight {w}")
            a, b = (i, j) if i < j else (j, i)
            if (a, b) in seen:
                raise ValidationError(f"duplicate edge for pair ({a},{b})")
            seen.add((a, b))
            canonical.append((a, b, float(w)))
        canonical.sort()
        object.__setattr__(self, "edges", tuple(canonical))

    @classmethod
    def from_edges(cls, n_vertices: int, edges: Iterable) -> "ContactGraph":
        return cls(n_vertices, tuple(tuple(e) for e in edges))

    def total_weight(self) -> float:
        return sum(w for _, _, w in self.edges)

    def incident_weight(self, u: int) -> float:
        return sum(w for i, j, w in self.edges if u in (i, j))


def active_subgraph(g: ContactGraph, q: Quarantine) -> ContactGraph:
    """Vertex-induced subgraph on the non-quarantined population.

    Keeps exactly the edges with both endpoints outside q.
    """
    _check_quarantine(g.n_vertices, q)
    kept = tuple(e for e in g.edges if e[0] not in q and e[1] not in q)
    return ContactGraph(g.n_vertices, kept)


def _check_quarantine(n: int, q: Quarantine):
    for u in q:
        if not 1 <= u <= n:
            raise ValidationError(f"quarantined vertex {u} outside [1, {n}]")


@dataclass(frozen=True)
class ContactSchedule:
    """One contact graph per step t = 1..horizon, all over the same vertices."""

    horizon: int
    graphs: tuple

    def __post_init__(self):
        if self.horizon < 1:
            raise ValidationError("horizon must be >= 1")
        if len(self.graphs) != self.horizon:
            raise ValidationError(
                f"schedule length {len(self.graphs)} does not match horizon {self.horizon}"
            )
        sizes = {g.n_vertices for g in self.graphs}
        if len(sizes) > 1:
            raise ValidationError(f"graphs disagree on population size: {sorted(sizes)}")

    @classmethod
    def static(cls, horizon: int, graph: ContactGraph) -> "ContactSchedule":
        return cls(horizon, tuple([graph] * horizon))

    @property
    def n(self) -> int:
        return self.graphs[0].n_vertices

    def graph_at(self, t: int) -> ContactGraph:
        if not 1 <= t <= self.horizon:
            raise ValidationError(f"step {t} outside [1, {self.horizon}]")
        return self.graphs[t - 1]


# ---------------------------------------------------------------------------
# transition structure
# ---------------------------------------------------------------------------


def infection_flows(
    x: SystemState,
    g: ContactGraph,
    q_edges: Quarantine,
    q_active: Quarantine,
    p: float,
) -> dict:
    """Per-target one-step infection probabilities out of state x.

    Returns {vertex k: P(k becomes infected)}. The active edge is drawn from
    the subgraph induced by dropping ``q_edges`` (weights renormalized by that
    subgraph's total weight); transmission additionally requires both
    endpoints outside ``q_active``. Passing the same set twice gives the plain
    single-quarantine kernel; ``q_edges`` strictly before ``q_active`` models
    an individual quarantined mid-step, after the edge was already drawn but
    before transmission.
    """
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"transmission probability {p} outside [0, 1]")
    if g.n_vertices != x.n:
        raise DimensionError(f"graph has {g.n_vertices} vertices, state has {x.n}")
    if not q_edges <= q_active:
        raise ValidationError("q_edges must be a subset of q_active")
    sub = active_subgraph(g, q_edges)
    total = sub.total_weight()
    if total <= 0.0:
        return {}
    flows: dict = {}
    for i, j, w in sub.edges:
        if w == 0.0 or i in q_active or j in q_active:
            continue
        xi, xj = x.infected(i), x.infected(j)
        if xi == xj:
            continue  # both infected or both healthy: nothing crosses
        target = j if xi else i
        flows[target] = flows.get(target, 0.0) + p * w / total
    return flows


def transition_kernel(x, g: ContactGraph, q: Quarantine, p: float) -> dict:
    """One-step distribution over next states from x under quarantine q.

    Mass moves only to states that add exactly one infection at a
    non-quarantined vertex; the remaining mass stays on x. The returned dict
    maps SystemState to probability and sums to 1.
    """
    x = _coerce_state(x)
    _check_quarantine(x.n, q)
    flows = infection_flows(x, g, q, q, p)
    out = {}
    moved = 0.0
    for k, prob in sorted(flows.items()):
        if prob <= 0.0:
            continue
        out[x.infect(k)] = prob
        moved += prob
    out[x] = 1.0 - moved
    return out


def _enumeration_cap(n: int):
    if n > MAX_ENUMERATION_N:
        raise SizeCapError(
            f"2**{n} state enumeration exceeds the cap of 2**{MAX_ENUMERATION_N}"
        )


@lru_cache(maxsize=None)
def _bits_matrix(n: int) -> np.ndarray:
    """(2**n, n) matrix of state bits; row index is the state mask."""
    _enumeration_cap(n)
    masks = np.arange(1 << n, dtype=np.uint32)
    return ((masks[:, None] >> np.arange(n)) & 1).astype(np.float64)


@lru_cache(maxsize=None)
def infection_counts(n: int) -> np.ndarray:
    """Dense terminal-cost vector: infected count per state mask."""
    return _bits_matrix(n).sum(axis=1)


@lru_cache(maxsize=None)
def kernel_matrix(
    g: ContactGraph, q_edges: Quarantine, q_active: Quarantine, p: float
) -> np.ndarray:
    """Dense (2**n, 2**n) one-step transition matrix; row = current state.

    Same semantics as :func:`infection_flows` extended over the whole state
    space. Cached per (graph, quarantine pair, p).
    """
    n = g.n_vertices
    _enumeration_cap(n)
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"transmission probability {p} outside [0, 1]")
    if not q_edges <= q_active:
        raise ValidationError("q_edges must be a subset of q_active")
    size = 1 << n
    bits = _bits_matrix(n)

    sub = active_subgraph(g, q_edges)
    total = sub.total_weight()
    P = np.zeros((size, size))
    if total <= 0.0:
        np.fill_diagonal(P, 1.0)
        return P

    # pair_w[i-1, k-1]: weight usable for transmission between i and k
    pair_w = np.zeros((n, n))
    for i, j, w in sub.edges:
        if i in q_active or j in q_active:
            continue
        pair_w[i - 1, j - 1] = w
        pair_w[j - 1, i - 1] = w

    # flow[x, k-1] = p/W * sum over infected i of pair_w[i, k], for healthy k
    flow = (p / total) * (bits @ pair_w)
    flow *= 1.0 - bits  # target must currently be healthy
    masks = np.arange(size, dtype=np.int64)
    for k in range(n):
        col = flow[:, k]
        nz = np.nonzero(col)[0]
        P[nz, masks[nz] | (1 << k)] += col[nz]
    np.fill_diagonal(P, np.diag(P) + 1.0 - flow.sum(axis=1))
    return P


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


def sample_active_edge(g: ContactGraph, q: Quarantine, rng) -> Optional[tuple]:
    """Draw one edge of the active subgraph, proportional to weight.

    Returns the (i, j, w) tuple, or None when the active subgraph carries no
    weight. Consumes exactly one uniform variate either way, so parallel
    policy evaluations sharing a seed stay aligned.
    """
    sub = active_subgraph(g, q)
    total = sub.total_weight()
    r = rng.random()
    if total <= 0.0:
        return None
    r *= total
    acc = 0.0
    for e in sub.edges:
        acc += e[2]
        if r < acc:
            return e
    return sub.edges[-1]  # r == total due to rounding


def sample_step(x, edge: tuple, p: float, rng) -> SystemState:
    """Resolve transmission along one active edge.

    If exactly one endpoint is infected, the other catches the disease with
    probability p; otherwise the state is unchanged. At most one bit flips.
    """
    x = _coerce_state(x)
    i, j, _ = edge
    xi, xj = x.infected(i), x.infected(j)
    if xi == xj:
        return x
    if rng.random() < p:
        return x.infect(j if xi else i)
    return x


def transmit_with_uniform(
    x: SystemState, edge: Optional[tuple], p: float, q_active: Quarantine, u: float
) -> SystemState:
    """Transmission step driven by a pre-drawn uniform variate.

    Used by the simulator so the transmission stream is consumed once per
    step regardless of whether a crossing was possible, keeping paired-seed
    runs of different policies on common randomness. Endpoints quarantined by
    the current step's test block the crossing.
    """
    if edge is None:
        return x
    i, j, _ = edge
    if i in q_active or j in q_active:
        return x
    xi, xj = x.infected(i), x.infected(j)
    if xi == xj:
        return x
    if u < p:
        return x.infect(j if xi else i)
    return x


def validate_action(u: int, n: int, q: Quarantine = EMPTY_QUARANTINE) -> int:
    """Check a test decision: 0 (no test) or a vertex id in [1, n]."""
    if not isinstance(u, (int, np.integer)) or not 0 <= int(u) <= n:
        raise ContractViolation(f"action {u!r} outside [0, {n}]")
    return int(u)
