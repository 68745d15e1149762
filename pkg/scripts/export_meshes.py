"""OBJ meshes of the S^6 associated family and of one S^4 example, with surface diagnostics."""
import os
from dataclasses import dataclass

import numpy as np

from _common import emit, parse_config
from unitonlab.willmore import export_mesh, sample_s4, sample_s6, verify_surface


@dataclass
class Config:
    """Grid size, domain half-width, number of ``lam`` samples and output directory."""

    points: int = 41
    half_width: float = 1.5
    lambdas: int = 4
    out_dir: str = "runs/meshes"


def main(cfg: Config) -> dict:
    os.makedirs(cfg.out_dir, exist_ok=True)
    xs = np.linspace(-cfg.half_width, cfg.half_width, cfg.points)
    out = []
    for k in range(cfg.lambdas):
        lam = np.exp(2j * np.pi * k / cfg.lambdas)
        s = sample_s6(xs, xs, lam)
        path = os.path.join(cfg.out_dir, f"s6_lam{k}.obj")
        nv, nt = export_mesh(s, path)
        out.append({"path": path, "lam": lam, "vertices": nv, "triangles": nt, **verify_surface(s)})
    # f' = (1, z, z, -z^2) satisfies the constraint and gives a full surface in S^4
    s = sample_s4([[0, 1], [0, 0, 0.5], [0, 0, 0.5], [0, 0, 0, -1 / 3]], xs, xs)
    path = os.path.join(cfg.out_dir, "s4_cubic.obj")
    nv, nt = export_mesh(s, path)
    out.append({"path": path, "vertices": nv, "triangles": nt, **s.diagnostics, **verify_surface(s)})
    return {"config": vars(cfg), "meshes": out}


if __name__ == "__main__":
    emit(main(parse_config(Config)))
