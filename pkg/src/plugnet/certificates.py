"""Interface-condition certificates for plug-and-play consensus.

Three layers:

* a weighted Gershgorin sufficient test for positive definiteness of
  ``M = D^T Theta D + Sigma`` phrased per edge, next to an exact
  eigenvalue oracle for the same matrix;
* the per-edge interface condition
  ``1/alpha_ij + nu_i + nu_j - (r_i - 1)|nu_i| - (r_j - 1)|nu_j| > 0``;
* plug certifiers for a single added node and for an added subnetwork,
  which combine the edge conditions with the boundary-edge weight
  construction (gamma) and cross-check the composed problem against both
  the Gershgorin test and the oracle.

The edge conditions are what a certificate verdict rests on. The composed
Gershgorin margins are recorded for transparency: with the minimizing
gamma weight one of them is zero by construction, which is why both the
strict and the non-strict reading are reported.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import AssumptionViolation, DegenerateInput, GraphError
from .graph import Graph, PlugPlan, assumption_1_violation, compose, incidence, is_connected

DEFAULT_STRICTNESS_TOL = 1e-12

VERDICT_CERTIFIED = "certified"
VERDICT_ORACLE_PD = "gershgorin_failed_oracle_pd"
VERDICT_NOT_PD = "not_pd"


@dataclass(frozen=True)
class CertificateProblem:
    """Data of one positive-definiteness question: graph, node and edge weights.

    ``theta`` aligns with ``graph.node_ids``, ``sigma`` and ``s_weights``
    with ``graph.edges``. All ``s_weights`` must be positive.
    """

    graph: Graph
    theta: tuple[float, ...]
    sigma: tuple[float, ...]
    s_weights: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "theta", tuple(float(v) for v in self.theta))
        object.__setattr__(self, "sigma", tuple(float(v) for v in self.sigma))
        object.__setattr__(self, "s_weights", tuple(float(v) for v in self.s_weights))
        if len(self.theta) != self.graph.n:
            raise GraphError(
                f"theta has {len(self.theta)} entries for {self.graph.n} nodes"
            )
        if len(self.sigma) != self.graph.p or len(self.s_weights) != self.graph.p:
            raise GraphError(
                f"sigma/s_weights must have one entry per edge ({self.graph.p})"
            )
        if any(s <= 0.0 for s in self.s_weights):
            raise GraphError("s_weights must be strictly positive")


@dataclass(frozen=True)
class GershgorinResult:
    """Per-edge margins of the weighted disc condition plus both verdicts.

    ``margins[k]`` is the left side minus the right side of the disc
    inequality for edge k. ``ok_nonstrict`` tolerates zero margins (the
    inequality as written), ``ok_strict`` demands them above ``tol`` (what
    the plug theorems actually need).
    """

    margins: tuple[float, ...]
    ok_strict: bool
    ok_nonstrict: bool
    tol: float


def gershgorin_pd_check(
    prob: CertificateProblem, tol: float = DEFAULT_STRICTNESS_TOL
) -> GershgorinResult:
    """Edge-wise disc test: does the scaled matrix have all discs right of zero?

    For edge k = (i, j):
    ``s_k (theta_i + theta_j + sigma_k) - |theta_i| (t_i - s_k) - |theta_j| (t_j - s_k)``
    with ``t_i`` the total s-weight of edges at node i. Sufficient only;
    the oracle gives the exact answer.
    """
    g = prob.graph
    total = {node: 0.0 for node in g.node_ids}
    for k, (i, j) in enumerate(g.edges):
        total[i] += prob.s_weights[k]
        total[j] += prob.s_weights[k]
    margins = []
    for k, (i, j) in enumerate(g.edges):
        s_k = prob.s_weights[k]
        ti = prob.theta[g.index(i)]
        tj = prob.theta[g.index(j)]
        margin = (
            s_k * (ti + tj + prob.sigma[k])
            - abs(ti) * (total[i] - s_k)
            - abs(tj) * (total[j] - s_k)
        )
        margins.append(float(margin))
    arr = np.array(margins) if margins else np.empty(0)
    return GershgorinResult(
        margins=tuple(margins),
        ok_strict=bool(np.all(arr >= tol)),
        ok_nonstrict=bool(np.all(arr >= -tol)),
        tol=tol,
    )


def certificate_matrix(prob: CertificateProblem) -> np.ndarray:
    """M = D^T Theta D + Sigma, the matrix whose definiteness is in question."""
    d = incidence(prob.graph).astype(float)
    theta = np.diag(prob.theta)
    return d.T @ theta @ d + np.diag(prob.sigma)


def pd_oracle(prob: CertificateProblem) -> float:
    """Smallest eigenvalue of M, computed exactly (symmetric eigensolve)."""
    m = certificate_matrix(prob)
    if m.shape[0] == 0:
        raise DegenerateInput("no edges: positive definiteness is vacuous")
    return float(np.linalg.eigvalsh(m)[0])


def check_edge_condition(
    nu_i: float, nu_j: float, r_i: int, r_j: int, alpha_upper: float
) -> float:
    """Margin of the per-edge interface condition; positive means satisfied."""
    return (
        1.0 / alpha_upper
        + nu_i
        + nu_j
        - (r_i - 1) * abs(nu_i)
        - (r_j - 1) * abs(nu_j)
    )


def _alpha_for(alphas: Mapping, i: int, j: int) -> float:
    for key in ((i, j), (j, i)):
        if key in alphas:
            return float(alphas[key])
    raise KeyError(f"no upper sector bound for edge ({i}, {j})")


def intra_edge_margins(
    graph: Graph, nus: Mapping[int, float], alphas: Mapping
) -> dict[tuple[int, int], float]:
    """Interface-condition margin for every edge of a fixed graph."""
    return {
        (i, j): check_edge_condition(
            nus[i], nus[j], graph.degree(i), graph.degree(j), _alpha_for(alphas, i, j)
        )
        for i, j in graph.edges
    }


def compute_gamma_single(
    c: int, base: Graph, nus: Mapping[int, float], alphas: Mapping
) -> float:
    """Spare-margin weight at node c: min over its neighbours of margin/|nu_c|.

    Undefined when nu_c = 0 (the construction divides by |nu_c|) or when c
    has no neighbours; both raise DegenerateInput.
    """
    nu_c = float(nus[c])
    if nu_c == 0.0:
        raise DegenerateInput(
            f"gamma is undefined at node {c}: its passivity index is zero"
        )
    neighbours = base.neighbors(c)
    if not neighbours:
        raise DegenerateInput(f"gamma is undefined at node {c}: it has no neighbours")
    r_c = base.degree(c)
    return min(
        check_edge_condition(
            nu_c, nus[j], r_c, base.degree(j), _alpha_for(alphas, c, j)
        )
        / abs(nu_c)
        for j in neighbours
    )


@dataclass(frozen=True)
class EdgeMargin:
    edge: tuple[int, int]
    margin: float


@dataclass(frozen=True)
class BoundaryCheck:
    """Weight construction and interface margin for one boundary edge.

    For a single-node plug only ``gamma`` is set. For a network plug,
    ``gamma_p``/``gamma_q`` are the per-side minima (None when that side's
    attachment node has no intra-network edges and its term is dropped) and
    ``gamma = min`` of the available ones.
    """

    edge: tuple[int, int]
    gamma: float
    margin: float
    gamma_p: float | None = None
    gamma_q: float | None = None


@dataclass(frozen=True)
class CertificateReport:
    """Everything a verdict rests on, in one serializable record."""

    plan_kind: str
    edge_margins: tuple[EdgeMargin, ...]
    boundary: tuple[BoundaryCheck, ...]
    composed_edges: tuple[tuple[int, int], ...]
    s_weights: tuple[float, ...]
    gershgorin_margins: tuple[float, ...]
    gershgorin_ok: bool
    gershgorin_ok_strict: bool
    oracle_min_eigenvalue: float
    verdict: str
    strictness_tol: float

    def failing_edges(self) -> tuple[tuple[int, int], ...]:
        """Edges (intra or boundary) whose interface margin is not strictly positive."""
        bad = [em.edge for em in self.edge_margins if em.margin <= self.strictness_tol]
        bad += [bc.edge for bc in self.boundary if bc.margin <= self.strictness_tol]
        return tuple(bad)

    def to_dict(self) -> dict:
        return {
            "plan_kind": self.plan_kind,
            "verdict": self.verdict,
            "edge_margins": [
                {"edge": list(em.edge), "margin": em.margin} for em in self.edge_margins
            ],
            "boundary": [
                {
                    "edge": list(bc.edge),
                    "gamma": bc.gamma,
                    "gamma_p": bc.gamma_p,
                    "gamma_q": bc.gamma_q,
                    "margin": bc.margin,
                }
                for bc in self.boundary
            ],
            "composed_edges": [list(e) for e in self.composed_edges],
            "s_weights": list(self.s_weights),
            "gershgorin": {
                "margins": list(self.gershgorin_margins),
                "ok_nonstrict": self.gershgorin_ok,
                "ok_strict": self.gershgorin_ok_strict,
            },
            "oracle_min_eigenvalue": self.oracle_min_eigenvalue,
            "strictness_tol": self.strictness_tol,
        }

    def render_table(self) -> str:
        lines = [f"verdict: {self.verdict}"]
        lines.append(f"{'edge':>10}  {'margin':>12}")
        for em in self.edge_margins:
            lines.append(f"{str(em.edge):>10}  {em.margin:>12.6f}")
        for bc in self.boundary:
            parts = [f"{str(bc.edge):>10}  {bc.margin:>12.6f}  gamma={bc.gamma:.6f}"]
            if bc.gamma_p is not None:
                parts.append(f"gamma_p={bc.gamma_p:.6f}")
            if bc.gamma_q is not None:
                parts.append(f"gamma_q={bc.gamma_q:.6f}")
            lines.append("  ".join(parts) + "  [boundary]")
        lines.append(
            f"gershgorin: min margin {min(self.gershgorin_margins):.3e}  "
            f"nonstrict={'ok' if self.gershgorin_ok else 'FAIL'}  "
            f"strict={'ok' if self.gershgorin_ok_strict else 'FAIL'}"
        )
        lines.append(f"oracle min eigenvalue: {self.oracle_min_eigenvalue:.6g}")
        return "\n".join(lines)


def _composed_problem(
    composed: Graph,
    nus: Mapping[int, float],
    alphas: Mapping,
    s_weights: tuple[float, ...],
) -> CertificateProblem:
    theta = tuple(float(nus[i]) for i in composed.node_ids)
    sigma = tuple(1.0 / _alpha_for(alphas, i, j) for i, j in composed.edges)
    return CertificateProblem(composed, theta, sigma, s_weights)


def _verdict(
    condition_margins: list[float], kappa: float, tol: float
) -> str:
    if all(m > tol for m in condition_margins) and kappa > 0.0:
        return VERDICT_CERTIFIED
    return VERDICT_ORACLE_PD if kappa > 0.0 else VERDICT_NOT_PD


def _finish_report(
    plan_kind: str,
    margins: dict[tuple[int, int], float],
    boundary: list[BoundaryCheck],
    composed: Graph,
    nus: Mapping[int, float],
    alphas: Mapping,
    s_weights: tuple[float, ...],
    tol: float,
) -> CertificateReport:
    prob = _composed_problem(composed, nus, alphas, s_weights)
    gersh = gershgorin_pd_check(prob, tol)
    kappa = pd_oracle(prob)
    condition_margins = list(margins.values()) + [bc.margin for bc in boundary]
    return CertificateReport(
        plan_kind=plan_kind,
        edge_margins=tuple(EdgeMargin(e, m) for e, m in margins.items()),
        boundary=tuple(boundary),
        composed_edges=composed.edges,
        s_weights=s_weights,
        gershgorin_margins=gersh.margins,
        gershgorin_ok=gersh.ok_nonstrict,
        gershgorin_ok_strict=gersh.ok_strict,
        oracle_min_eigenvalue=kappa,
        verdict=_verdict(condition_margins, kappa, tol),
        strictness_tol=tol,
    )


def certify_fixed_network(
    graph: Graph,
    nus: Mapping[int, float],
    alphas: Mapping,
    tol: float = DEFAULT_STRICTNESS_TOL,
) -> CertificateReport:
    """Certificate for a fixed connected network: edge conditions with unit weights."""
    if graph.p == 0:
        raise DegenerateInput("network has no edges to certify")
    if not is_connected(graph):
        raise DegenerateInput("network must be connected")
    margins = intra_edge_margins(graph, nus, alphas)
    return _finish_report(
        "fixed_network", margins, [], graph, nus, alphas, (1.0,) * graph.p, tol
    )


def certify_single_node_plug(
    plan: PlugPlan,
    nus: Mapping[int, float],
    alphas: Mapping,
    tol: float = DEFAULT_STRICTNESS_TOL,
) -> CertificateReport:
    """Certificate for one node joining a network through a single edge.

    Checks the edge condition on every existing edge, builds gamma at the
    attachment node, evaluates the boundary condition
    ``gamma (1/alpha + nu_new + nu_c) - r_c |nu_c|`` (degrees taken in the
    pre-plug network), then cross-checks the composed problem with weights
    (1, ..., 1, gamma) against the disc test and the eigenvalue oracle.
    """
    if not plan.is_single_node:
        raise GraphError("expected a single-node plug plan")
    base = plan.base
    if base.p == 0:
        raise DegenerateInput(
            "base network has no edges: gamma has no edge conditions to draw on"
        )
    if not is_connected(base):
        raise DegenerateInput("base network must be connected")
    new, c = plan.boundary[0]
    margins = intra_edge_margins(base, nus, alphas)
    gamma = compute_gamma_single(c, base, nus, alphas)
    boundary_margin = gamma * (
        1.0 / _alpha_for(alphas, new, c) + float(nus[new]) + float(nus[c])
    ) - base.degree(c) * abs(float(nus[c]))
    composed = compose(plan)
    s_last = gamma if gamma > 0.0 else 1.0  # disc test needs positive weights
    s_weights = (1.0,) * base.p + (s_last,)
    boundary = [BoundaryCheck(edge=(new, c), gamma=gamma, margin=boundary_margin)]
    return _finish_report(
        "single_node", margins, boundary, composed, nus, alphas, s_weights, tol
    )


def certify_network_plug(
    plan: PlugPlan,
    nus: Mapping[int, float],
    alphas: Mapping,
    tol: float = DEFAULT_STRICTNESS_TOL,
) -> CertificateReport:
    """Certificate for joining two networks through boundary edges.

    Every boundary edge (p, q) gets gamma_p from p's intra-network edge
    conditions and gamma_q from q's; when one attachment node has no
    intra-network edges its term is dropped (that side degenerates to the
    single-node case). Both missing is rejected. The boundary condition is
    ``gamma_pq (1/alpha_pq + nu_p + nu_q) - r_p |nu_p| - r_q |nu_q|`` with
    degrees taken within each node's own subnetwork.
    """
    if plan.is_single_node:
        raise GraphError("expected a network plug plan")
    violation = assumption_1_violation(plan)
    if violation is not None:
        raise AssumptionViolation(
            f"boundary edges {violation[0]} and {violation[1]} attach to "
            "shared or adjacent nodes"
        )
    base, added = plan.base, plan.added
    if not is_connected(base) or not is_connected(added):
        raise DegenerateInput("both subnetworks must be connected")

    margins = intra_edge_margins(base, nus, alphas)
    margins.update(intra_edge_margins(added, nus, alphas))

    boundary: list[BoundaryCheck] = []
    for p, q in plan.boundary:
        gamma_p = (
            compute_gamma_single(p, base, nus, alphas) if base.degree(p) > 0 else None
        )
        gamma_q = (
            compute_gamma_single(q, added, nus, alphas) if added.degree(q) > 0 else None
        )
        candidates = [g for g in (gamma_p, gamma_q) if g is not None]
        if not candidates:
            raise DegenerateInput(
                f"boundary edge ({p}, {q}): neither attachment node has "
                "intra-network edges"
            )
        gamma_pq = min(candidates)
        margin = gamma_pq * (
            1.0 / _alpha_for(alphas, p, q) + float(nus[p]) + float(nus[q])
        ) - base.degree(p) * abs(float(nus[p])) - added.degree(q) * abs(float(nus[q]))
        boundary.append(
            BoundaryCheck(
                edge=(p, q), gamma=gamma_pq, margin=margin, gamma_p=gamma_p, gamma_q=gamma_q
            )
        )

    composed = compose(plan)
    s_weights = (1.0,) * (base.p + added.p) + tuple(
        bc.gamma if bc.gamma > 0.0 else 1.0 for bc in boundary
    )
    return _finish_report(
        "network", margins, boundary, composed, nus, alphas, s_weights, tol
    )
