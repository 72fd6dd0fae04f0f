"""Scenario files: strict JSON schema, validation, and the bundled example.

A scenario file declares nodes (dynamics and/or a declared passivity
index), named graphs, couplings per edge, optional plug events joining the
named graphs, and the noise/solver blocks. Parsing is strict: unknown keys
are rejected so golden files fail loudly on drift, every cross-reference
must resolve, and every declared coupling must pass the sector check
against its declared bounds.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Union

import numpy as np

from .errors import PlugnetError, ScenarioError
from .graph import Graph, PlugPlan
from .passivity import (
    IfpIndex,
    LtiSystem,
    SectorCoupling,
    estimate_ifp_index,
    linear_gain,
    realize,
    saturated_sine,
    saturated_sine_smooth,
    tabulated,
    verify_sector,
)
from .sim import NoiseSpec, PlugEvent, Scenario, SolverConfig

SCHEMA_VERSION = "1"

_TOP_KEYS = {"version", "nodes", "graphs", "initial", "couplings",
             "plug_events", "noise", "solver", "outputs"}
_NODE_KEYS = {"id", "dynamics", "nu", "delta", "y0", "x0"}
_DYNAMICS_KEYS = {"num", "den"}
_GRAPH_KEYS = {"nodes", "edges"}
_COUPLING_KEYS = {"edge", "kind", "a", "alpha_lower", "alpha_upper", "table"}
_PLUG_KEYS = {"time", "base", "added", "added_node", "boundary"}
_NOISE_KEYS = {"scale", "seed", "kind"}
_SOLVER_KEYS = {"dt", "t_end", "sample_stride"}
_OUTPUT_KEYS = {"csv", "meta", "report", "disagreement"}


def _check_keys(obj: dict, allowed: set[str], required: set[str], path: str) -> None:
    if not isinstance(obj, dict):
        raise ScenarioError(f"{path}: expected an object")
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise ScenarioError(f"{path}: unknown key(s) {unknown}")
    missing = sorted(required - set(obj))
    if missing:
        raise ScenarioError(f"{path}: missing required key(s) {missing}")


def _edge_pair(value: Any, path: str) -> tuple[int, int]:
    if (not isinstance(value, (list, tuple)) or len(value) != 2
            or not all(isinstance(v, int) for v in value)):
        raise ScenarioError(f"{path}: edge must be a pair of integer node ids")
    return int(value[0]), int(value[1])


def _edge_key(i: int, j: int) -> tuple[int, int]:
    return (i, j) if i <= j else (j, i)


@dataclass(frozen=True)
class NodeSpec:
    """One node as declared in a scenario file."""

    node_id: int
    system: LtiSystem | None
    declared_nu: float | None
    delta: float
    y0: float | None
    x0: tuple[float, ...] | None


@dataclass(frozen=True, eq=False)
class ScenarioDocument:
    """Validated scenario file contents, ready to feed the other modules."""

    version: str
    nodes: dict[int, NodeSpec]
    graphs: dict[str, Graph]
    initial_names: tuple[str, ...]
    couplings: dict[tuple[int, int], SectorCoupling]
    plug_entries: tuple[dict, ...]
    noise: NoiseSpec
    solver: SolverConfig
    outputs: dict[str, str] = field(default_factory=dict)

    def initial_graph(self) -> Graph:
        nodes: tuple[int, ...] = ()
        edges: tuple[tuple[int, int], ...] = ()
        for name in self.initial_names:
            g = self.graphs[name]
            nodes += g.node_ids
            edges += g.edges
        return Graph(nodes, edges)

    def plug_plan(self, entry: dict) -> PlugPlan:
        base = self.graphs[entry["base"]]
        added: Union[Graph, int]
        if "added" in entry:
            added = self.graphs[entry["added"]]
        else:
            added = entry["added_node"]
        return PlugPlan(base=base, added=added, boundary=tuple(entry["boundary"]))

    def plug_events(self) -> tuple[PlugEvent, ...]:
        return tuple(
            PlugEvent(time=float(e["time"]), plan=self.plug_plan(e))
            for e in self.plug_entries
        )

    def final_graph(self) -> Graph:
        from .graph import compose

        if not self.plug_entries:
            return self.initial_graph()
        return compose(self.plug_plan(self.plug_entries[-1]))

    def build_scenario(self, seed: int | None = None) -> Scenario:
        systems = {}
        for node_id, spec in self.nodes.items():
            if spec.system is None:
                raise ScenarioError(
                    f"node {node_id} has no dynamics; it cannot be simulated"
                )
            systems[node_id] = spec.system
        noise = self.noise if seed is None else NoiseSpec(
            scale=self.noise.scale, seed=seed, kind=self.noise.kind
        )
        return Scenario(
            systems=systems,
            initial_graph=self.initial_graph(),
            couplings=dict(self.couplings),
            noise=noise,
            solver=self.solver,
            initial_outputs={
                i: s.y0 for i, s in self.nodes.items() if s.y0 is not None
            },
            initial_states={
                i: np.asarray(s.x0, dtype=float)
                for i, s in self.nodes.items()
                if s.x0 is not None
            },
            plug_events=self.plug_events(),
        )

    def certificate_inputs(self) -> tuple[dict[int, float], dict[tuple[int, int], float]]:
        """Passivity indices (declared where present, sweep otherwise) and
        upper sector bounds per edge."""
        nus: dict[int, float] = {}
        for node_id, spec in self.nodes.items():
            if spec.declared_nu is not None:
                nus[node_id] = spec.declared_nu
            elif spec.system is not None:
                nus[node_id] = estimate_ifp_index(spec.system).nu
            else:
                raise ScenarioError(
                    f"node {node_id} has neither a declared index nor dynamics"
                )
        alphas = {edge: c.alpha_upper for edge, c in self.couplings.items()}
        return nus, alphas

    def sweep_indices(self) -> dict[int, IfpIndex]:
        """Frequency-sweep indices for every node that has dynamics."""
        return {
            node_id: estimate_ifp_index(spec.system)
            for node_id, spec in self.nodes.items()
            if spec.system is not None
        }

    def to_dict(self) -> dict:
        nodes = []
        for node_id in sorted(self.nodes):
            spec = self.nodes[node_id]
            entry: dict[str, Any] = {"id": node_id}
            if spec.system is not None:
                entry["dynamics"] = {
                    "num": list(spec.system.num),
                    "den": list(spec.system.den),
                }
            if spec.declared_nu is not None:
                entry["nu"] = spec.declared_nu
            if spec.delta != 0.0:
                entry["delta"] = spec.delta
            if spec.y0 is not None:
                entry["y0"] = spec.y0
            if spec.x0 is not None:
                entry["x0"] = list(spec.x0)
            nodes.append(entry)
        couplings = []
        for edge in sorted(self.couplings):
            c = self.couplings[edge]
            entry = {"edge": list(edge), "kind": c.kind}
            if c.gain is not None:
                entry["a"] = c.gain
            entry["alpha_lower"] = c.alpha_lower
            entry["alpha_upper"] = c.alpha_upper
            if c.table is not None:
                entry["table"] = [list(p) for p in c.table]
            couplings.append(entry)
        out: dict[str, Any] = {
            "version": self.version,
            "nodes": nodes,
            "graphs": {
                name: {
                    "nodes": list(g.node_ids),
                    "edges": [list(e) for e in g.edges],
                }
                for name, g in self.graphs.items()
            },
            "initial": list(self.initial_names),
            "couplings": couplings,
            "plug_events": [dict(e) for e in self.plug_entries],
            "noise": {
                "scale": self.noise.scale,
                "seed": self.noise.seed,
                "kind": self.noise.kind,
            },
            "solver": {
                "dt": self.solver.dt,
                "t_end": self.solver.t_end,
                "sample_stride": self.solver.sample_stride,
            },
        }
        if self.outputs:
            out["outputs"] = dict(self.outputs)
        return out


def _parse_nodes(raw: Any) -> dict[int, NodeSpec]:
    if not isinstance(raw, list) or not raw:
        raise ScenarioError("nodes: must be a non-empty list")
    nodes: dict[int, NodeSpec] = {}
    for idx, entry in enumerate(raw):
        path = f"nodes[{idx}]"
        _check_keys(entry, _NODE_KEYS, {"id"}, path)
        node_id = entry["id"]
        if not isinstance(node_id, int) or node_id < 0:
            raise ScenarioError(f"{path}: id must be a nonnegative integer")
        if node_id in nodes:
            raise ScenarioError(f"{path}: duplicate node id {node_id}")
        system = None
        if "dynamics" in entry:
            _check_keys(entry["dynamics"], _DYNAMICS_KEYS, _DYNAMICS_KEYS, f"{path}.dynamics")
            try:
                system = realize(entry["dynamics"]["num"], entry["dynamics"]["den"])
            except PlugnetError as exc:
                raise ScenarioError(f"{path}.dynamics: {exc}") from exc
        nu = entry.get("nu")
        if nu is not None and not isinstance(nu, (int, float)):
            raise ScenarioError(f"{path}: nu must be a number")
        if system is None and nu is None:
            raise ScenarioError(f"{path}: need dynamics, a declared nu, or both")
        x0 = entry.get("x0")
        nodes[node_id] = NodeSpec(
            node_id=node_id,
            system=system,
            declared_nu=float(nu) if nu is not None else None,
            delta=float(entry.get("delta", 0.0)),
            y0=float(entry["y0"]) if "y0" in entry else None,
            x0=tuple(float(v) for v in x0) if x0 is not None else None,
        )
    return nodes


def _parse_graphs(raw: Any, nodes: dict[int, NodeSpec]) -> dict[str, Graph]:
    if not isinstance(raw, dict) or not raw:
        raise ScenarioError("graphs: must be a non-empty object")
    graphs: dict[str, Graph] = {}
    for name, entry in raw.items():
        path = f"graphs.{name}"
        _check_keys(entry, _GRAPH_KEYS, _GRAPH_KEYS, path)
        for node in entry["nodes"]:
            if node not in nodes:
                raise ScenarioError(f"{path}: node {node} is not declared")
        pairs = [_edge_pair(e, f"{path}.edges[{k}]") for k, e in enumerate(entry["edges"])]
        try:
            graphs[name] = Graph.from_pairs(entry["nodes"], pairs)
        except PlugnetError as exc:
            raise ScenarioError(f"{path}: {exc}") from exc
    return graphs


def _parse_coupling(entry: dict, path: str) -> tuple[tuple[int, int], SectorCoupling]:
    _check_keys(entry, _COUPLING_KEYS, {"edge", "kind"}, path)
    edge = _edge_pair(entry["edge"], f"{path}.edge")
    kind = entry["kind"]
    if kind not in ("linear_gain", "sat_sine", "sat_sine_smooth", "tabulated"):
        raise ScenarioError(f"{path}: unknown coupling kind {kind!r}")
    try:
        if kind == "linear_gain":
            c = linear_gain(entry["a"])
        elif kind == "sat_sine":
            c = saturated_sine(entry["a"])
        elif kind == "sat_sine_smooth":
            c = saturated_sine_smooth(entry["a"])
        else:
            c = tabulated(
                entry["table"],
                alpha_lower=entry.get("alpha_lower"),
                alpha_upper=entry.get("alpha_upper"),
            )
        if kind != "tabulated" and ("alpha_lower" in entry or "alpha_upper" in entry):
            c = SectorCoupling(
                kind=c.kind,
                gain=c.gain,
                alpha_lower=float(entry.get("alpha_lower", c.alpha_lower)),
                alpha_upper=float(entry.get("alpha_upper", c.alpha_upper)),
                table=c.table,
            )
    except KeyError as exc:
        raise ScenarioError(f"{path}: missing field {exc} for kind {kind!r}") from exc
    except PlugnetError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc
    return _edge_key(*edge), c


def parse_scenario_dict(raw: dict) -> ScenarioDocument:
    """Validate an in-memory scenario object. See parse_scenario for files."""
    _check_keys(raw, _TOP_KEYS,
                {"version", "nodes", "graphs", "initial", "couplings", "noise", "solver"},
                "scenario")
    if raw["version"] != SCHEMA_VERSION:
        raise ScenarioError(
            f"version: expected {SCHEMA_VERSION!r}, got {raw['version']!r}"
        )
    nodes = _parse_nodes(raw["nodes"])
    graphs = _parse_graphs(raw["graphs"], nodes)

    initial = raw["initial"]
    if not isinstance(initial, list) or not initial:
        raise ScenarioError("initial: must be a non-empty list of graph names")
    for name in initial:
        if name not in graphs:
            raise ScenarioError(f"initial: unknown graph {name!r}")
    seen_nodes: set[int] = set()
    for name in initial:
        overlap = seen_nodes & set(graphs[name].node_ids)
        if overlap:
            raise ScenarioError(
                f"initial: graphs share node(s) {sorted(overlap)}"
            )
        seen_nodes |= set(graphs[name].node_ids)

    plug_entries = []
    boundary_edges: set[tuple[int, int]] = set()
    for idx, entry in enumerate(raw.get("plug_events", [])):
        path = f"plug_events[{idx}]"
        _check_keys(entry, _PLUG_KEYS, {"time", "base", "boundary"}, path)
        if ("added" in entry) == ("added_node" in entry):
            raise ScenarioError(f"{path}: exactly one of 'added'/'added_node' required")
        if entry["base"] not in graphs:
            raise ScenarioError(f"{path}: unknown base graph {entry['base']!r}")
        if "added" in entry and entry["added"] not in graphs:
            raise ScenarioError(f"{path}: unknown added graph {entry['added']!r}")
        if "added_node" in entry and entry["added_node"] not in nodes:
            raise ScenarioError(f"{path}: added node {entry['added_node']} not declared")
        boundary = [
            _edge_pair(e, f"{path}.boundary[{k}]") for k, e in enumerate(entry["boundary"])
        ]
        normalized = dict(entry)
        normalized["boundary"] = [list(e) for e in boundary]
        plug_entries.append(normalized)
        boundary_edges |= {_edge_key(*e) for e in boundary}

    couplings: dict[tuple[int, int], SectorCoupling] = {}
    for idx, entry in enumerate(raw["couplings"]):
        key, c = _parse_coupling(entry, f"couplings[{idx}]")
        if key in couplings:
            raise ScenarioError(f"couplings[{idx}]: duplicate coupling for edge {list(key)}")
        couplings[key] = c
    declared_edges = set(couplings)
    needed = {_edge_key(i, j) for g in graphs.values() for i, j in g.edges}
    needed |= boundary_edges
    missing = sorted(needed - declared_edges)
    if missing:
        raise ScenarioError(
            "couplings: no coupling declared for edge(s) "
            + ", ".join(str(list(e)) for e in missing)
        )
    extra = sorted(declared_edges - needed)
    if extra:
        raise ScenarioError(
            "couplings: edge(s) "
            + ", ".join(str(list(e)) for e in extra)
            + " do not appear in any graph"
        )

    for edge, c in couplings.items():
        check = verify_sector(c)
        if not check.odd_symmetry_ok:
            raise ScenarioError(f"coupling on edge {list(edge)} is not odd-symmetric")
        if not check.within_declared:
            raise ScenarioError(
                f"coupling on edge {list(edge)} violates its declared sector "
                f"bounds: observed [{check.alpha_lower_observed:.6g}, "
                f"{check.alpha_upper_observed:.6g}], declared "
                f"[{c.alpha_lower:.6g}, {c.alpha_upper:.6g}]"
            )

    _check_keys(raw["noise"], _NOISE_KEYS, {"scale", "seed"}, "noise")
    _check_keys(raw["solver"], _SOLVER_KEYS, {"dt", "t_end"}, "solver")
    try:
        noise = NoiseSpec(
            scale=float(raw["noise"]["scale"]),
            seed=int(raw["noise"]["seed"]),
            kind=raw["noise"].get("kind", "white_gaussian_held"),
        )
        solver = SolverConfig(
            dt=float(raw["solver"]["dt"]),
            t_end=float(raw["solver"]["t_end"]),
            sample_stride=int(raw["solver"].get("sample_stride", 1)),
        )
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc

    outputs_raw = raw.get("outputs", {})
    _check_keys(outputs_raw, _OUTPUT_KEYS, set(), "outputs")

    doc = ScenarioDocument(
        version=raw["version"],
        nodes=nodes,
        graphs=graphs,
        initial_names=tuple(initial),
        couplings=couplings,
        plug_entries=tuple(plug_entries),
        noise=noise,
        solver=solver,
        outputs={k: str(v) for k, v in outputs_raw.items()},
    )
    try:
        doc.initial_graph()
        for entry in doc.plug_entries:
            doc.plug_plan(entry)
    except PlugnetError as exc:
        raise ScenarioError(str(exc)) from exc
    return doc


def parse_scenario(path: str | Path) -> ScenarioDocument:
    """Load and validate a scenario file."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON: {exc}") from exc
    return parse_scenario_dict(raw)


def write_scenario(doc_or_dict, path: str | Path) -> None:
    raw = doc_or_dict.to_dict() if isinstance(doc_or_dict, ScenarioDocument) else doc_or_dict
    Path(path).write_text(json.dumps(raw, indent=2) + "\n")


def paper_example(seed: int = 22, t_end: float = 30.0) -> dict:
    """The bundled seven-node example: two subnetworks plugged at t = 15 s.

    Four systems form the first network (path-plus-chord on nodes 1-4),
    three the second (path 5-6-7); saturated-sine couplings; the plug joins
    1-5 and 4-7. Declared passivity indices accompany the dynamics.
    """
    dynamics = {
        1: ([1.0, 1.0], [1.0, 0.7, 0.0]),
        2: ([1.0, 0.9], [1.0, 0.65, 0.0]),
        3: ([1.0, 0.5], [1.0, 0.4, 0.0]),
        4: ([1.0, 3.5, 3.0], [1.0, 2.8, 1.8, 0.0]),
        5: ([1.0, 1.2, 0.35], [1.0, 1.1, 0.2925, 0.0]),
        6: ([1.0, 2.4, 1.4], [1.0, 2.0, 0.96, 0.0]),
        7: ([1.0, 3.5, 3.06], [1.0, 2.8, 1.92, 0.0]),
    }
    declared_nu = {1: -0.45, 2: -0.60, 3: -0.63, 4: -0.65, 5: -0.40, 6: -0.54, 7: -0.51}
    y0 = {1: -0.25, 2: -0.55, 3: -1.25, 4: -0.4, 5: -0.0875, 6: 0.2, 7: 1.36}
    gains = {
        (1, 2): 0.40, (2, 3): 0.32, (2, 4): 0.30, (3, 4): 0.35,
        (5, 6): 0.60, (6, 7): 0.55, (1, 5): 0.37, (4, 7): 0.16,
    }
    return {
        "version": SCHEMA_VERSION,
        "nodes": [
            {
                "id": i,
                "dynamics": {"num": dynamics[i][0], "den": dynamics[i][1]},
                "nu": declared_nu[i],
                "y0": y0[i],
            }
            for i in sorted(dynamics)
        ],
        "graphs": {
            "g1": {"nodes": [1, 2, 3, 4], "edges": [[1, 2], [2, 3], [2, 4], [3, 4]]},
            "g2": {"nodes": [5, 6, 7], "edges": [[5, 6], [6, 7]]},
        },
        "initial": ["g1", "g2"],
        "couplings": [
            {"edge": list(edge), "kind": "sat_sine", "a": gains[edge]}
            for edge in sorted(gains)
        ],
        "plug_events": [
            {"time": 15.0, "base": "g1", "added": "g2", "boundary": [[1, 5], [4, 7]]}
        ],
        "noise": {"scale": 0.5, "seed": seed, "kind": "white_gaussian_held"},
        "solver": {"dt": 0.001, "t_end": t_end, "sample_stride": 10},
    }
