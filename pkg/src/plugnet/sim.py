"""Fixed-step time-domain simulation of diffusively coupled networks.

Each node is a strictly proper LTI system; inputs are built from
neighbour output differences passed through sector-bounded couplings,
with per-node noise added inside the coupling argument:

    u_i = -sum_{j in N_i} phi_ij(y_i + w_i - y_j - w_j)

Integration is classic RK4 with a fixed step. Noise is piecewise-constant:
one Gaussian draw per node per step, held across the step's internal
stages. The draw for (node, step) depends only on the seed and the node
id, so plugging more nodes in never perturbs existing noise streams.
Scheduled plug events swap in the composed graph mid-run, carrying node
states over and initializing newly added nodes from their declared
initial outputs (minimum-norm state).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import SimulationDiverged
from .graph import Graph, PlugPlan, compose, incidence
from .passivity import LtiSystem, SectorCoupling, evaluate_coupling

NOISE_KINDS = ("white_gaussian_held", "white_gaussian_sqrt_dt")

_HALF_PI = math.pi / 2.0


@dataclass(frozen=True)
class NoiseSpec:
    """Seeded per-node Gaussian noise, held constant over each dt interval.

    ``white_gaussian_held`` uses standard deviation ``scale`` as-is;
    ``white_gaussian_sqrt_dt`` scales it by 1/sqrt(dt) (the
    Euler-Maruyama-style reading of white noise).
    """

    scale: float
    seed: int
    kind: str = "white_gaussian_held"

    def __post_init__(self):
        if self.scale < 0.0:
            raise ValueError("noise scale must be nonnegative")
        if self.seed < 0:
            raise ValueError("seed must be a nonnegative integer")
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}")


@dataclass(frozen=True)
class SolverConfig:
    dt: float
    t_end: float
    sample_stride: int = 1

    def __post_init__(self):
        if self.dt <= 0.0 or self.t_end <= 0.0:
            raise ValueError("dt and t_end must be positive")
        if self.sample_stride < 1:
            raise ValueError("sample_stride must be >= 1")
        steps = self.t_end / self.dt
        if abs(steps - round(steps)) > 1e-6:
            raise ValueError("t_end must be an integer number of steps")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


@dataclass(frozen=True)
class PlugEvent:
    time: float
    plan: PlugPlan


@dataclass(frozen=True, eq=False)
class Scenario:
    """Full experiment description: dynamics, topology phases, noise, solver."""

    systems: Mapping[int, LtiSystem]
    initial_graph: Graph
    couplings: Mapping[tuple[int, int], SectorCoupling]
    noise: NoiseSpec
    solver: SolverConfig
    initial_outputs: Mapping[int, float] = field(default_factory=dict)
    initial_states: Mapping[int, np.ndarray] = field(default_factory=dict)
    plug_events: tuple[PlugEvent, ...] = ()

    def __post_init__(self):
        if not self.systems:
            raise ValueError("scenario declares no systems")
        if any(i < 0 for i in self.systems):
            raise ValueError("node ids must be nonnegative (they key noise streams)")
        last = -1.0
        for ev in self.plug_events:
            if not (0.0 <= ev.time <= self.solver.t_end):
                raise ValueError(f"plug event at t={ev.time} outside [0, t_end]")
            if ev.time <= last:
                raise ValueError("plug event times must be strictly increasing")
            steps = ev.time / self.solver.dt
            if abs(steps - round(steps)) > 1e-6:
                raise ValueError(f"plug event at t={ev.time} not on the step grid")
            last = ev.time
        object.__setattr__(self, "plug_events", tuple(self.plug_events))
        phases = [self.initial_graph]
        for ev in self.plug_events:
            new_graph = compose(ev.plan)
            prev = phases[-1]
            if not set(prev.node_ids) <= set(new_graph.node_ids):
                raise ValueError("plug event drops active nodes")
            if not prev.edge_keys() <= new_graph.edge_keys():
                raise ValueError("plug event drops active edges")
            phases.append(new_graph)
        for g in phases:
            for node in g.node_ids:
                if node not in self.systems:
                    raise ValueError(f"no dynamics declared for node {node}")
            for i, j in g.edges:
                _coupling_for(self.couplings, i, j)
        object.__setattr__(self, "_phases", tuple(phases))

    @property
    def phases(self) -> tuple[Graph, ...]:
        return self._phases

    def phase_start_steps(self) -> list[int]:
        starts = [0]
        for ev in self.plug_events:
            starts.append(int(round(ev.time / self.solver.dt)))
        return starts


@dataclass(frozen=True, eq=False)
class TrajectoryRecord:
    """Sampled trajectories: outputs, reconstructed inputs and noise per node.

    Columns follow ``node_ids``. Entries are NaN while a node is not yet
    part of the active graph. ``active_graph[s]`` indexes ``graphs``.
    """

    node_ids: tuple[int, ...]
    times: np.ndarray
    outputs: np.ndarray
    inputs: np.ndarray
    noise: np.ndarray
    active_graph: np.ndarray
    graphs: tuple[Graph, ...] = ()

    def __post_init__(self):
        m = len(self.times)
        n = len(self.node_ids)
        for name in ("outputs", "inputs", "noise"):
            arr = getattr(self, name)
            if arr.shape != (m, n):
                raise ValueError(f"{name} must have shape ({m}, {n}), got {arr.shape}")
        for arr in (self.times, self.outputs, self.inputs, self.noise, self.active_graph):
            arr.flags.writeable = False

    def column(self, node: int) -> int:
        try:
            return self.node_ids.index(node)
        except ValueError:
            raise ValueError(f"node {node} not recorded") from None


def _coupling_for(couplings: Mapping, i: int, j: int) -> SectorCoupling:
    for key in ((i, j), (j, i)):
        if key in couplings:
            return couplings[key]
    raise ValueError(f"no coupling declared for edge ({i}, {j})")


def noise_stream(noise: NoiseSpec, node_id: int, n_steps: int, dt: float) -> np.ndarray:
    """Held noise samples for one node; a pure function of (seed, node, step)."""
    rng = np.random.default_rng([noise.seed, node_id])
    z = rng.standard_normal(n_steps)
    scale = noise.scale
    if noise.kind == "white_gaussian_sqrt_dt":
        scale = scale / math.sqrt(dt)
    return scale * z


class _PhaseContext:
    """Stacked dynamics and coupling machinery for one topology phase."""

    def __init__(self, graph: Graph, systems: Mapping[int, LtiSystem],
                 couplings: Mapping[tuple[int, int], SectorCoupling]):
        self.graph = graph
        self.node_ids = graph.node_ids
        self.systems = [systems[i] for i in self.node_ids]
        for node, sys in zip(self.node_ids, self.systems):
            if sys.d != 0.0:
                raise ValueError(
                    f"node {node} has direct feedthrough; the coupled network "
                    "would need an algebraic loop solve (unsupported)"
                )
        orders = [sys.order for sys in self.systems]
        self.slices = []
        offset = 0
        for k in orders:
            self.slices.append(slice(offset, offset + k))
            offset += k
        self.n_states = offset
        n = len(self.node_ids)
        self.A = np.zeros((offset, offset))
        self.B = np.zeros((offset, n))
        self.C = np.zeros((n, offset))
        for idx, sys in enumerate(self.systems):
            sl = self.slices[idx]
            self.A[sl, sl] = sys.a
            self.B[sl, idx] = sys.b
            self.C[idx, sl] = sys.c

        self.D = incidence(graph).astype(float)
        self.Dt = self.D.T

        p = graph.p
        kinds = np.zeros(p, dtype=int)
        gains = np.zeros(p)
        tabulated: list[tuple[int, SectorCoupling]] = []
        codes = {"linear_gain": 0, "sat_sine": 1, "sat_sine_smooth": 2, "tabulated": 3}
        for k, (i, j) in enumerate(graph.edges):
            c = _coupling_for(couplings, i, j)
            kinds[k] = codes[c.kind]
            if c.kind == "tabulated":
                tabulated.append((k, c))
            else:
                gains[k] = c.gain
        self._gains = gains
        self._lin = kinds == 0
        self._sine = kinds == 1
        self._smooth = kinds == 2
        self._tabulated = tabulated

    def phi(self, v: np.ndarray) -> np.ndarray:
        out = np.empty_like(v)
        if self._lin.any():
            out[self._lin] = self._gains[self._lin] * v[self._lin]
        if self._sine.any():
            m = self._sine
            vv = v[m]
            out[m] = np.where(np.abs(vv) < _HALF_PI,
                              self._gains[m] * np.sin(vv), self._gains[m] * vv)
        if self._smooth.any():
            m = self._smooth
            vv = v[m]
            out[m] = np.where(
                np.abs(vv) < _HALF_PI,
                self._gains[m] * np.sin(vv),
                self._gains[m] * np.sign(vv) * (np.abs(vv) - _HALF_PI + 1.0),
            )
        for k, c in self._tabulated:
            out[k] = evaluate_coupling(c, v[k])
        return out

    def outputs(self, x: np.ndarray) -> np.ndarray:
        return self.C @ x

    def input_vector(self, y: np.ndarray, w: np.ndarray) -> np.ndarray:
        return -(self.D @ self.phi(self.Dt @ (y + w)))

    def deriv(self, x: np.ndarray, w: np.ndarray) -> np.ndarray:
        u = self.input_vector(self.C @ x, w)
        return self.A @ x + self.B @ u

    def rk4(self, x: np.ndarray, w: np.ndarray, dt: float) -> np.ndarray:
        k1 = self.deriv(x, w)
        k2 = self.deriv(x + 0.5 * dt * k1, w)
        k3 = self.deriv(x + 0.5 * dt * k2, w)
        k4 = self.deriv(x + dt * k3, w)
        return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    def initial_state(self, outputs: Mapping[int, float],
                      states: Mapping[int, np.ndarray]) -> np.ndarray:
        x = np.zeros(self.n_states)
        for idx, node in enumerate(self.node_ids):
            x[self.slices[idx]] = _node_initial_state(
                self.systems[idx], node, outputs.get(node), states.get(node)
            )
        return x


def _node_initial_state(sys: LtiSystem, node: int, y0: float | None,
                        x0: np.ndarray | None) -> np.ndarray:
    if x0 is not None:
        x0 = np.asarray(x0, dtype=float)
        if x0.shape != (sys.order,):
            raise ValueError(
                f"node {node}: initial state must have {sys.order} entries"
            )
        return x0
    if sys.order == 0:
        return np.empty(0)
    if y0 is None or y0 == 0.0:
        return np.zeros(sys.order)
    cc = float(sys.c @ sys.c)
    if cc == 0.0:
        raise ValueError(f"node {node}: cannot match a nonzero initial output")
    return sys.c * (y0 / cc)  # minimum-norm solution of C x = y0


def step(
    state: Mapping[int, np.ndarray],
    graph: Graph,
    systems: Mapping[int, LtiSystem],
    couplings: Mapping[tuple[int, int], SectorCoupling],
    w_sample: Mapping[int, float],
    dt: float,
    t0: float = 0.0,
) -> tuple[dict[int, np.ndarray], dict[int, float]]:
    """One RK4 update of the coupled network; noise held across stages.

    Returns the next per-node states and the outputs at the end of the
    step. Convenience wrapper over the phase machinery; ``run`` builds the
    context once per phase instead.
    """
    ctx = _PhaseContext(graph, systems, couplings)
    x = np.zeros(ctx.n_states)
    for idx, node in enumerate(ctx.node_ids):
        arr = np.asarray(state[node], dtype=float)
        if arr.shape != (ctx.systems[idx].order,):
            raise ValueError(f"node {node}: state must have {ctx.systems[idx].order} entries")
        x[ctx.slices[idx]] = arr
    w = np.array([float(w_sample.get(node, 0.0)) for node in ctx.node_ids])
    with np.errstate(over="ignore", invalid="ignore"):
        x_next = ctx.rk4(x, w, dt)
    if not np.all(np.isfinite(x_next)):
        raise SimulationDiverged(t0 + dt)
    y = ctx.outputs(x_next)
    next_state = {node: x_next[ctx.slices[idx]].copy() for idx, node in enumerate(ctx.node_ids)}
    return next_state, {node: float(y[idx]) for idx, node in enumerate(ctx.node_ids)}


def run(scenario: Scenario) -> TrajectoryRecord:
    """Integrate a scenario phase by phase and sample the trajectories.

    Deterministic: the same scenario (same seed) produces bit-identical
    records. Raises SimulationDiverged with the offending time if the
    state leaves the finite range.
    """
    solver = scenario.solver
    dt = solver.dt
    total_steps = solver.n_steps
    stride = solver.sample_stride

    all_ids = tuple(sorted(scenario.systems))
    col_of = {node: k for k, node in enumerate(all_ids)}
    noise = np.column_stack(
        [noise_stream(scenario.noise, node, total_steps, dt) for node in all_ids]
    )

    n_samples = total_steps // stride + 1
    times = np.arange(n_samples) * (stride * dt)
    y_rec = np.full((n_samples, len(all_ids)), np.nan)
    u_rec = np.full((n_samples, len(all_ids)), np.nan)
    w_rec = np.empty((n_samples, len(all_ids)))
    active = np.zeros(n_samples, dtype=int)
    for s in range(n_samples):
        w_rec[s] = noise[min(s * stride, total_steps - 1)]

    starts = scenario.phase_start_steps()
    bounds = starts[1:] + [total_steps]
    phases = scenario.phases

    x = None
    prev_ctx: _PhaseContext | None = None
    for phase_idx, graph in enumerate(phases):
        ctx = _PhaseContext(graph, scenario.systems, scenario.couplings)
        if prev_ctx is None:
            x = ctx.initial_state(scenario.initial_outputs, scenario.initial_states)
        else:
            x_new = ctx.initial_state(scenario.initial_outputs, scenario.initial_states)
            for idx_prev, node in enumerate(prev_ctx.node_ids):
                x_new[ctx.slices[ctx.node_ids.index(node)]] = x[prev_ctx.slices[idx_prev]]
            x = x_new
        cols = [col_of[node] for node in ctx.node_ids]

        with np.errstate(over="ignore", invalid="ignore"):
            for step_i in range(starts[phase_idx], bounds[phase_idx]):
                w = noise[step_i, cols]
                if step_i % stride == 0:
                    s = step_i // stride
                    y = ctx.outputs(x)
                    y_rec[s, cols] = y
                    u_rec[s, cols] = ctx.input_vector(y, w)
                    active[s] = phase_idx
                x = ctx.rk4(x, w, dt)
                if not np.all(np.isfinite(x)):
                    raise SimulationDiverged((step_i + 1) * dt)
        prev_ctx = ctx

    if total_steps % stride == 0:
        ctx = prev_ctx
        cols = [col_of[node] for node in ctx.node_ids]
        w = noise[total_steps - 1, cols]
        y = ctx.outputs(x)
        s = total_steps // stride
        y_rec[s, cols] = y
        u_rec[s, cols] = ctx.input_vector(y, w)
        active[s] = len(phases) - 1

    return TrajectoryRecord(
        node_ids=all_ids,
        times=times,
        outputs=y_rec,
        inputs=u_rec,
        noise=w_rec,
        active_graph=active,
        graphs=phases,
    )
