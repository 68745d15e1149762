"""Three-way minus-factor agreement along the real axis for the engineered off-cell potential."""
from dataclasses import dataclass

import numpy as np

from _common import emit, parse_config
from unitonlab.dpw import picard_integrate
from unitonlab.factor import duality_check
from unitonlab.potentials import timelike_probe_potential


@dataclass
class Config:
    """Sample ``z`` on ``[start, stop]`` with ``samples`` points (the cell boundary is |z| = 1)."""

    start: float = 0.1
    stop: float = 2.0
    samples: int = 20


def main(cfg: Config) -> dict:
    frame = picard_integrate(timelike_probe_potential())
    rows = []
    for x in np.linspace(cfg.start, cfg.stop, cfg.samples):
        rep = duality_check(frame.loop_at(complex(x)))
        rows.append({"z": float(x), "compact_vs_direct": rep["compact_vs_direct"],
                     "noncompact": rep["noncompact"].split(":")[0]})
    return {"config": vars(cfg), "samples": rows}


if __name__ == "__main__":
    emit(main(parse_config(Config)))
