"""Consensus quantification: truncated norms, disagreement, empirical gain.

The consensus notion is input-output: edge disagreement of the outputs
stays bounded by a scaled edge disagreement of the noise plus a transient
offset, ``|D^T Y|_T <= rho |D^T W|_T + sigma`` at every horizon T. One
trajectory cannot identify the system's true (rho, sigma); the estimator
returns a feasible pair for the observed data (least-squares rho, then the
smallest sigma that makes the inequality hold at every sampled horizon).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import Graph, incidence
from .sim import TrajectoryRecord


def _squared_cumulative(times: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Trapezoidal cumulative integral of the squared Euclidean norm."""
    g = values * values
    if g.ndim == 2:
        g = g.sum(axis=1)
    seg = 0.5 * (g[1:] + g[:-1]) * np.diff(times)
    return np.concatenate(([0.0], np.cumsum(seg)))


def truncated_norm(times: np.ndarray, values: np.ndarray, horizon: float) -> float:
    """L2 norm of a sampled signal on [0, horizon], by the trapezoid rule.

    ``values`` is (m,) or (m, d); the horizon must lie within the recorded
    span (the integrand is interpolated linearly onto a horizon between
    samples).
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.size == 0:
        raise ValueError("empty signal")
    if not (times[0] <= horizon <= times[-1]):
        raise ValueError(f"horizon {horizon} outside recorded span [{times[0]}, {times[-1]}]")
    cum = _squared_cumulative(times, values)
    return float(np.sqrt(np.interp(horizon, times, cum)))


def disagreement(traj: TrajectoryRecord, graph: Graph) -> np.ndarray:
    """Pointwise Euclidean norm of the edge output differences |D^T Y(t)|.

    The graph may cover a subset of the recorded nodes (e.g. one
    subnetwork); its nodes must all be recorded.
    """
    cols = [traj.column(node) for node in graph.node_ids]
    d = incidence(graph).astype(float)
    edge_diffs = traj.outputs[:, cols] @ d
    return np.linalg.norm(edge_diffs, axis=1)


@dataclass(frozen=True)
class ConsensusEstimate:
    """Feasible (rho, sigma) for the observed horizons, plus the samples used.

    ``samples`` rows are (T, |D^T Y|_T, |D^T W|_T). ``satisfied`` means the
    fit produced finite values and the inequality holds at every sampled
    horizon (by construction after the minimal sigma inflation).
    """

    rho_hat: float
    sigma_hat: float
    samples: tuple[tuple[float, float, float], ...]
    satisfied: bool

    def to_dict(self) -> dict:
        return {
            "rho_hat": self.rho_hat,
            "sigma_hat": self.sigma_hat,
            "satisfied": self.satisfied,
            "samples": [
                {"T": t, "edge_output_norm": y, "edge_noise_norm": w}
                for t, y, w in self.samples
            ],
        }


def default_horizons(t_end: float, count: int = 50) -> np.ndarray:
    lo = min(0.1, t_end / 10.0)
    return np.logspace(np.log10(lo), np.log10(t_end), count)


def fit_gain_offset(noise_norms: np.ndarray, output_norms: np.ndarray) -> tuple[float, float]:
    """Least-squares (rho, sigma) with both nonnegative, then the minimal
    sigma inflation making ``output <= rho * noise + sigma`` hold at every
    sample. With all-zero noise the gain is free and sigma carries it all.
    """
    w_t = np.asarray(noise_norms, dtype=float)
    y_t = np.asarray(output_norms, dtype=float)
    if np.all(w_t == 0.0):
        rho, sigma = 0.0, float(y_t.max())
    else:
        a = np.column_stack([w_t, np.ones_like(w_t)])
        (rho, sigma), *_ = np.linalg.lstsq(a, y_t, rcond=None)
        if sigma < 0.0:
            sigma = 0.0
            rho = float(w_t @ y_t) / float(w_t @ w_t)
        if rho < 0.0:
            rho = 0.0
            sigma = float(y_t.max())
    sigma = float(sigma) + max(0.0, float(np.max(y_t - rho * w_t - sigma)))
    return float(rho), sigma


def estimate_io_gain(
    traj: TrajectoryRecord, graph: Graph, horizons: np.ndarray | None = None
) -> ConsensusEstimate:
    """Fit a feasible gain/offset pair over a grid of horizons.

    Norms come from the trapezoid rule on the recorded sampling grid; the
    fit is ``fit_gain_offset`` on the per-horizon norm pairs.
    """
    if horizons is None:
        horizons = default_horizons(float(traj.times[-1]))
    horizons = np.asarray(horizons, dtype=float)
    if horizons.size < 2:
        raise ValueError("need at least two horizons")

    cols = [traj.column(node) for node in graph.node_ids]
    d = incidence(graph).astype(float)
    y_cum = _squared_cumulative(traj.times, traj.outputs[:, cols] @ d)
    w_cum = _squared_cumulative(traj.times, traj.noise[:, cols] @ d)
    y_t = np.sqrt(np.interp(horizons, traj.times, y_cum))
    w_t = np.sqrt(np.interp(horizons, traj.times, w_cum))

    rho, sigma = fit_gain_offset(w_t, y_t)
    satisfied = bool(np.isfinite(rho) and np.isfinite(sigma))
    samples = tuple(
        (float(t), float(y), float(w)) for t, y, w in zip(horizons, y_t, w_t)
    )
    return ConsensusEstimate(rho_hat=rho, sigma_hat=sigma, samples=samples, satisfied=satisfied)


def analytic_gain_bound(kappa: float, alpha_lower_min: float) -> float:
    """Informational closed-form gain bound 1/(kappa * alpha_lower) + 1.

    Valid when the certificate matrix is positive definite with smallest
    eigenvalue kappa; never asserted against the empirical fit because the
    offset's value is unknown.
    """
    if kappa <= 0.0 or alpha_lower_min <= 0.0:
        raise ValueError("bound requires kappa > 0 and a positive lower sector bound")
    return 1.0 / (kappa * alpha_lower_min) + 1.0
