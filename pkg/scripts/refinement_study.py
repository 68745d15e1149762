"""Flatness of the S^6 frames under grid refinement: the grid stencil converges like h^2."""
from dataclasses import dataclass

import numpy as np

from _common import emit, parse_config
from unitonlab.harmonic import flatness_residual, frame_grid
from unitonlab.potentials import example_s6_potential


@dataclass
class Config:
    """Half-width of the square domain and the coarsest number of points per axis."""

    half_width: float = 0.4
    points: int = 9
    levels: int = 3


def main(cfg: Config) -> dict:
    eta = example_s6_potential()
    rows = []
    n = cfg.points
    for _ in range(cfg.levels):
        xs = np.linspace(-cfg.half_width, cfg.half_width, n)
        fr = frame_grid(eta, xs, xs)
        rows.append({"points": n, "h": float(xs[1] - xs[0]),
                     "grid_stencil": flatness_residual(fr, stencil="grid").max})
        n = 2 * n - 1
    for a, b in zip(rows, rows[1:]):
        b["ratio"] = a["grid_stencil"] / b["grid_stencil"]
    xs = np.linspace(-cfg.half_width, cfg.half_width, cfg.points)
    local = flatness_residual(frame_grid(eta, xs, xs), stencil="local").max
    return {"config": vars(cfg), "levels": rows, "local_stencil_coarsest": local}


if __name__ == "__main__":
    emit(main(parse_config(Config)))
