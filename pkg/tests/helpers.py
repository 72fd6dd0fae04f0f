"""Scenario builders shared between test modules."""

from __future__ import annotations


def fig2_scenario(boundary, noise_scale=0.0):
    """Two three-node paths joined by two boundary edges; certifiable data."""
    edges = [[1, 2], [2, 3], [4, 5], [5, 6]] + [list(b) for b in boundary]
    return {
        "version": "1",
        "nodes": [
            {"id": i, "dynamics": {"num": [1], "den": [1, 1]}, "nu": -0.1, "y0": 0.2 * i}
            for i in range(1, 7)
        ],
        "graphs": {
            "g1": {"nodes": [1, 2, 3], "edges": [[1, 2], [2, 3]]},
            "g2": {"nodes": [4, 5, 6], "edges": [[4, 5], [5, 6]]},
        },
        "initial": ["g1", "g2"],
        "couplings": [{"edge": e, "kind": "linear_gain", "a": 0.5} for e in edges],
        "plug_events": [
            {"time": 1.0, "base": "g1", "added": "g2", "boundary": boundary}
        ],
        "noise": {"scale": noise_scale, "seed": 3},
        "solver": {"dt": 0.01, "t_end": 2.0, "sample_stride": 5},
    }
