"""Conformality defect of the closed-form S^6 surface against the step size, second and fourth order."""
from dataclasses import dataclass

import numpy as np

from _common import emit, parse_config
from unitonlab.willmore import sample_s6, verify_surface


@dataclass
class Config:
    """Domain half-width and the coarsest step; each level halves the step."""

    half_width: float = 1.0
    step: float = 0.1
    levels: int = 4


def main(cfg: Config) -> dict:
    rows = []
    h = cfg.step
    for _ in range(cfg.levels):
        n = int(round(2 * cfg.half_width / h)) + 1
        xs = np.linspace(-cfg.half_width, cfg.half_width, n)
        s = sample_s6(xs, xs)
        rows.append({"h": h, "order2": verify_surface(s)["conformality_defect"],
                     "order4": verify_surface(s, order=4)["conformality_defect"]})
        h /= 2
    for a, b in zip(rows, rows[1:]):
        b["ratio2"] = a["order2"] / b["order2"]
        b["ratio4"] = a["order4"] / b["order4"]
    return {"config": vars(cfg), "levels": rows}


if __name__ == "__main__":
    emit(main(parse_config(Config)))
