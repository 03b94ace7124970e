"""Scenario configuration: the unit of reproducible experiments.

A scenario fixes the population size, horizon, transmission probability,
test cost, contact schedule, initial belief and base seed. Scenarios load
from a small YAML schema::

    n: 3
    horizon: 4
    p: 0.5
    lambda: 0.5
    seed: 20260810
    initial_belief: "000"            # point state, or a list of [bits, prob]
    graphs:                          # one static graph, or a list of length T
      edges: [[1, 2, 1.0], [2, 3, 1.0]]

Bitstrings read left to right as individuals 1..N ("010" means only
individual 2 infected). A canonical digest of the parsed content is attached
to every exported result row so any single run can be replayed.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
import yaml

from .beliefs import Belief, SUM_TOLERANCE
from .errors import ValidationError
from .model import ContactGraph, ContactSchedule, SystemState

MAX_N = 20  # exhaustive-kernel paths enumerate 2**N states


def state_from_bitstring(s: str) -> SystemState:
    if not s or any(c not in "01" for c in s):
        raise ValidationError(f"bad state bitstring {s!r}")
    return SystemState.from_bits(int(c) for c in s)


def state_to_bitstring(state: SystemState) -> str:
    return str(state)


@dataclass(frozen=True)
class ScenarioConfig:
    """Immutable description of one experiment instance."""

    n: int
    horizon: int
    p: float
    lam: float
    schedule: ContactSchedule
    initial_belief: Belief
    seed: int

    def __post_init__(self):
        if not 1 <= self.n <= MAX_N:
            raise ValidationError(f"population size {self.n} outside [1, {MAX_N}]")
        if self.horizon < 1:
            raise ValidationError(f"horizon {self.horizon} must be >= 1")
        if not 0.0 <= self.p <= 1.0:
            raise ValidationError(f"p out of range: {self.p}")
        if self.lam < 0.0:
            raise ValidationError(f"test cost must be >= 0, got {self.lam}")
        if self.schedule.horizon != self.horizon:
            raise ValidationError(
                f"schedule covers {self.schedule.horizon} steps, horizon is {self.horizon}"
            )
        if self.schedule.n != self.n:
            raise ValidationError(
                f"schedule population {self.schedule.n} does not match n={self.n}"
            )
        if self.initial_belief.n != self.n:
            raise ValidationError(
                f"initial belief over {self.initial_belief.n} individuals, n={self.n}"
            )

    def graph_at(self, t: int) -> ContactGraph:
        return self.schedule.graph_at(t)

    def canonical_dict(self) -> dict:
        return {
            "n": self.n,
            "horizon": self.horizon,
            "p": self.p,
            "lambda": self.lam,
            "seed": self.seed,
            "initial_belief": [
                [state_to_bitstring(SystemState(m, self.n)), pr]
                for m, pr in self.initial_belief.probs.items()
            ],
            "graphs": [
                [[i, j, w] for i, j, w in g.edges] for g in self.schedule.graphs
            ],
        }

    def digest(self) -> str:
        blob = json.dumps(self.canonical_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def with_seed(self, seed: int) -> "ScenarioConfig":
        return ScenarioConfig(
            self.n, self.horizon, self.p, self.lam, self.schedule,
            self.initial_belief, seed,
        )

    def with_initial_belief(self, belief: Belief) -> "ScenarioConfig":
        return ScenarioConfig(
            self.n, self.horizon, self.p, self.lam, self.schedule, belief, self.seed,
        )


def _parse_belief(n: int, raw) -> Belief:
    if isinstance(raw, str):
        state = state_from_bitstring(raw)
        if state.n != n:
            raise ValidationError(f"initial state {raw!r} has length {state.n}, n={n}")
        return Belief.point(state)
    if isinstance(raw, (list, tuple)):
        pairs = []
        total = 0.0
        for entry in raw:
            if not isinstance(entry, (list, tuple)) or len(entry) != 2:
                raise ValidationError(f"belief entry {entry!r} is not [bitstring, prob]")
            bits, pr = entry
            state = state_from_bitstring(str(bits))
            if state.n != n:
                raise ValidationError(f"belief state {bits!r} has length {state.n}, n={n}")
            pairs.append((state, float(pr)))
            total += float(pr)
        if abs(total - 1.0) > SUM_TOLERANCE:
            raise ValidationError(f"initial belief sums to {total}, expected 1")
        return Belief.from_pairs(n, pairs)
    raise ValidationError(f"cannot parse initial_belief from {type(raw).__name__}")


def _parse_graph(n: int, raw) -> ContactGraph:
    if not isinstance(raw, dict) or "edges" not in raw:
        raise ValidationError("each graph must be a mapping with an 'edges' list")
    edges = []
    for e in raw["edges"]:
        if not isinstance(e, (list, tuple)) or len(e) != 3:
            raise ValidationError(f"edge {e!r} is not [i, j, w]")
        edges.append((int(e[0]), int(e[1]), float(e[2])))
    return ContactGraph.from_edges(n, edges)


def scenario_from_dict(doc: dict) -> ScenarioConfig:
    """Build and fully validate a ScenarioConfig from parsed YAML/JSON."""
    if not isinstance(doc, dict):
        raise ValidationError("scenario document must be a mapping")
    required = {"n", "horizon", "p", "lambda", "seed", "initial_belief", "graphs"}
    missing = required - doc.keys()
    if missing:
        raise ValidationError(f"scenario missing keys: {sorted(missing)}")
    unknown = doc.keys() - required
    if unknown:
        raise ValidationError(f"scenario has unknown keys: {sorted(unknown)}")

    n = int(doc["n"])
    horizon = int(doc["horizon"])
    p = float(doc["p"])
    lam = float(doc["lambda"])
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"p out of range: {p}")
    seed = int(doc["seed"])

    raw_graphs = doc["graphs"]
    if isinstance(raw_graphs, dict):
        schedule = ContactSchedule.static(horizon, _parse_graph(n, raw_graphs))
    elif isinstance(raw_graphs, list):
        if len(raw_graphs) != horizon:
            raise ValidationError(
                f"per-step graph list has {len(raw_graphs)} entries, horizon is {horizon}"
            )
        schedule = ContactSchedule(horizon, tuple(_parse_graph(n, g) for g in raw_graphs))
    else:
        raise ValidationError("graphs must be a mapping (static) or a list (per step)")

    belief = _parse_belief(n, doc["initial_belief"])
    return ScenarioConfig(n, horizon, p, lam, schedule, belief, seed)


def load_scenario(path) -> ScenarioConfig:
    """Parse and validate a scenario file; raises ValidationError on any
    schema or invariant violation."""
    with open(path, "r") as fh:
        try:
            doc = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ValidationError(f"cannot parse scenario file {path}: {exc}") from exc
    return scenario_from_dict(doc)


def dump_scenario(cfg: ScenarioConfig, path) -> None:
    """Write a scenario back out in the canonical file schema."""
    doc = cfg.canonical_dict()
    graphs = doc.pop("graphs")
    if all(g == graphs[0] for g in graphs):
        doc["graphs"] = {"edges": graphs[0]}
    else:
        doc["graphs"] = [{"edges": g} for g in graphs]
    doc["initial_belief"] = [[bits, pr] for bits, pr in doc["initial_belief"]]
    with open(path, "w") as fh:
        yaml.safe_dump(doc, fh, sort_keys=False)
