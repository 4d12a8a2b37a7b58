"""Latent-root DAGs for the paired confounding/interference scenarios.

Undirected within-pair edges (inherent spatial dependence) are compiled to a
latent common parent: ``U1 - U2`` becomes ``Uu -> U1, Uu -> U2`` and
``Z1 - Z2`` becomes ``Zu -> Z1, Zu -> Z2``.  The latent roots can never be
conditioned on.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .errors import InvalidArgumentError

OBSERVED = ("U1", "U2", "Z1", "Z2", "Y1", "Y2")
LATENT = ("Uu", "Zu")
NODES = OBSERVED + LATENT
SCENARIOS = ("2a", "2b", "2c", "2d", "2e", "2f", "full")

_LOCAL_CONF = {("U1", "Z1"), ("U1", "Y1"), ("U2", "Z2"), ("U2", "Y2")}
_LOCAL_EFFECT = {("Z1", "Y1"), ("Z2", "Y2")}
_INTERFERENCE = {("Z1", "Y2"), ("Z2", "Y1")}
_INDIRECT_CONF = {("U1", "Y2"), ("U2", "Y1")}
_EXPOSURE_PRED = {("U1", "Z1"), ("U2", "Z2")}

_SCENARIO_EDGES = {
    "2a": _LOCAL_CONF | _LOCAL_EFFECT,
    "2b": _LOCAL_EFFECT | _INTERFERENCE,
    "2c": _LOCAL_CONF | _LOCAL_EFFECT | _INDIRECT_CONF,
    "2d": _LOCAL_CONF | _LOCAL_EFFECT | _INTERFERENCE,
    "2e": _EXPOSURE_PRED | _LOCAL_EFFECT | _INTERFERENCE,
    "2f": _LOCAL_CONF | _LOCAL_EFFECT | _INTERFERENCE | _INDIRECT_CONF,
}
_SCENARIO_EDGES["full"] = _SCENARIO_EDGES["2f"]

_ROOT_EDGES = {
    "Uu": {("Uu", "U1"), ("Uu", "U2")},
    "Zu": {("Zu", "Z1"), ("Zu", "Z2")},
}


@dataclass(frozen=True)
class ScenarioDag:
    scenario_id: str
    nodes: frozenset
    directed_edges: frozenset

    def parents(self, v):
        return {a for a, b in self.directed_edges if b == v}

    def children(self, v):
        return {b for a, b in self.directed_edges if a == v}

    def descendants(self, v) -> set:
        seen, stack = set(), [v]
        while stack:
            for c in self.children(stack.pop()):
                if c not in seen:
                    seen.add(c)
                    stack.append(c)
        return seen

    def ancestors(self, nodes) -> set:
        seen, stack = set(nodes), list(nodes)
        while stack:
            for p in self.parents(stack.pop()):
                if p not in seen:
                    seen.add(p)
                    stack.append(p)
        return seen

    def collapsed_edges(self) -> set[tuple[str, str, str]]:
        """Edges in chain-graph notation: ``(a, '->', b)`` or ``(a, '-', b)``."""
        out = {(a, "->", b) for a, b in self.directed_edges if a not in LATENT}
        for root in LATENT:
            if root in self.nodes:
                kids = sorted(self.children(root))
                out.add((kids[0], "-", kids[1]))
        return out

    def is_acyclic(self) -> bool:
        indeg = {v: len(self.parents(v)) for v in self.nodes}
        queue = deque(v for v, d in indeg.items() if d == 0)
        seen = 0
        while queue:
            v = queue.popleft()
            seen += 1
            for c in self.children(v):
                indeg[c] -= 1
                if indeg[c] == 0:
                    queue.append(c)
        return seen == len(self.nodes)


def build_scenario(scenario_id: str, inherent_z_spatial: bool = True, inherent_u_spatial: bool = True) -> ScenarioDag:
    if scenario_id not in _SCENARIO_EDGES:
        raise InvalidArgumentError(f"unknown scenario {scenario_id!r}; expected one of {SCENARIOS}")
    edges = set(_SCENARIO_EDGES[scenario_id])
    nodes = set(OBSERVED)
    if inherent_u_spatial:
        nodes.add("Uu")
        edges |= _ROOT_EDGES["Uu"]
    if inherent_z_spatial:
        nodes.add("Zu")
        edges |= _ROOT_EDGES["Zu"]
    return ScenarioDag(scenario_id, frozenset(nodes), frozenset(edges))


def _check_query(dag: ScenarioDag, x, y, cond):
    cond = set(cond)
    for v in (x, y, *cond):
        if v not in dag.nodes:
            raise InvalidArgumentError(f"node {v!r} not in scenario {dag.scenario_id}")
    if cond & set(LATENT):
        raise InvalidArgumentError(f"latent roots cannot be conditioned on: {sorted(cond & set(LATENT))}")
    if x in cond or y in cond:
        raise InvalidArgumentError("query endpoints must not be in the conditioning set")
    if x == y:
        raise InvalidArgumentError("query endpoints must differ")
    return cond


def d_separated(dag: ScenarioDag, x: str, y: str, cond=()) -> bool:
    """Reachability (Bayes-ball) test of ``x _||_ y | cond``."""
    cond = _check_query(dag, x, y, cond)
    anc = dag.ancestors(cond)
    # states: (node, arrived_from_child) -- "up" when travelling against an edge
    visited = set()
    queue = deque([(x, True)])
    while queue:
        v, up = queue.popleft()
        if (v, up) in visited:
            continue
        visited.add((v, up))
        if v == y:
            return False
        if up and v not in cond:
            for p in dag.parents(v):
                queue.append((p, True))
            for c in dag.children(v):
                queue.append((c, False))
        elif not up:
            if v not in cond:
                for c in dag.children(v):
                    queue.append((c, False))
            if v in anc:
                for p in dag.parents(v):
                    queue.append((p, True))
    return True


# -- trails and back-door paths ----------------------------------------------


def trails(dag: ScenarioDag, x: str, y: str):
    """All simple trails from ``x`` to ``y`` as ``[(node, arrow), ...]``.

    ``arrow`` for step k describes the edge between node k and node k+1:
    ``'->'`` if it points toward node k+1, ``'<-'`` otherwise.
    """
    adj = {v: [] for v in dag.nodes}
    for a, b in dag.directed_edges:
        adj[a].append((b, "->"))
        adj[b].append((a, "<-"))
    for v in adj:
        adj[v].sort()
    out = []

    def walk(v, path, arrows, seen):
        if v == y:
            out.append((list(path), list(arrows)))
            return
        for w, arrow in adj[v]:
            if w in seen:
                continue
            seen.add(w)
            path.append(w)
            arrows.append(arrow)
            walk(w, path, arrows, seen)
            path.pop()
            arrows.pop()
            seen.discard(w)

    walk(x, [x], [], {x})
    return out


def trail_status(dag: ScenarioDag, nodes, arrows, cond) -> tuple[bool, str]:
    """Return ``(is_open, reason)`` for one trail under ``cond``."""
    cond = set(cond)
    for k in range(1, len(nodes) - 1):
        v = nodes[k]
        collider = arrows[k - 1] == "->" and arrows[k] == "<-"
        if collider:
            if v not in cond and not (dag.descendants(v) & cond):
                return False, f"collider {v} unconditioned"
        elif v in cond:
            kind = "fork" if (arrows[k - 1] == "<-" and arrows[k] == "->") else "chain"
            return False, f"{kind} {v} conditioned"
    return True, ""


def render_trail(nodes, arrows) -> str:
    """Collapsed chain-graph notation: ``A <- Uu -> B`` is rendered ``A - B``."""
    parts = [nodes[0]]
    k = 0
    while k < len(arrows):
        nxt = nodes[k + 1]
        if nxt in LATENT and k + 1 < len(arrows):
            parts += ["-", nodes[k + 2]]
            k += 2
            continue
        parts += [arrows[k], nxt]
        k += 1
    return " ".join(parts)


@dataclass
class PathReport:
    source: str
    sink: str
    cond: tuple
    paths: list = field(default_factory=list)  # (rendered, nodes, is_open, reason)

    @property
    def open_paths(self):
        return [p for p in self.paths if p[2]]

    def rows(self):
        return [
            {
                "source": self.source,
                "sink": self.sink,
                "path": text,
                "status": "open" if is_open else "blocked",
                "reason": reason,
            }
            for text, _, is_open, reason in self.paths
        ]

    def to_text(self) -> str:
        given = ", ".join(self.cond) if self.cond else "{}"
        lines = [f"back-door paths {self.source} -> {self.sink} given {given}: {len(self.paths)}"]
        for text, _, is_open, reason in self.paths:
            tag = "open" if is_open else f"blocked ({reason})"
            lines.append(f"  {text}  [{tag}]")
        return "\n".join(lines)


def backdoor_paths(dag: ScenarioDag, treatment: str, outcome: str, cond=()) -> PathReport:
    """Every trail from ``treatment`` to ``outcome`` whose first edge points into ``treatment``."""
    if treatment == outcome:
        raise InvalidArgumentError("treatment and outcome must differ")
    cond = tuple(sorted(_check_query(dag, treatment, outcome, cond)))
    report = PathReport(treatment, outcome, cond)
    for nodes, arrows in trails(dag, treatment, outcome):
        if arrows[0] != "<-":
            continue
        is_open, reason = trail_status(dag, nodes, arrows, cond)
        report.paths.append((render_trail(nodes, arrows), tuple(nodes), is_open, reason))
    report.paths.sort(key=lambda p: (len(p[1]), p[0]))
    return report


def parse_query(text: str) -> tuple[str, str, tuple]:
    """Parse ``"X _||_ Y | A,B"`` into ``(X, Y, (A, B))``."""
    if "_||_" not in text:
        raise InvalidArgumentError(f"query must look like 'X _||_ Y | A,B', got {text!r}")
    lhs, _, rest = text.partition("_||_")
    rhs, _, given = rest.partition("|")
    cond = tuple(s.strip() for s in given.replace(";", ",").split(",") if s.strip())
    x, y = lhs.strip(), rhs.strip()
    if not x or not y:
        raise InvalidArgumentError(f"malformed query {text!r}")
    return x, y, cond
