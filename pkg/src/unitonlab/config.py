"""Numerical tolerances and run configuration.

Every default tolerance used by the library lives in :data:`TOLERANCES` so
that reports can echo the effective values.
"""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field, replace


@dataclass(frozen=True)
class Tolerances:
    """Single table of numerical thresholds (max-abs entry norm throughout)."""

    prune: float = 1e-14
    twist: float = 1e-10
    reality: float = 1e-8
    birkhoff_consistency: float = 1e-9
    birkhoff_reconstruction: float = 1e-9
    iwasawa_reconstruction: float = 1e-8
    bauer_delta: float = 1e-12
    bauer_max_iter: int = 500
    grading_round: float = 1e-8
    closure: float = 1e-10
    flatness: float = 1e-7
    dressing_flatness: float = 1e-6
    adjoint_support: float = 1e-9
    alpha_support: float = 1e-8
    solution: float = 1e-8
    isotropy: float = 1e-12
    light_cone: float = 1e-9
    unit_norm: float = 1e-12

    def as_dict(self) -> dict:
        return asdict(self)

    def updated(self, **kwargs) -> "Tolerances":
        return replace(self, **kwargs)


TOLERANCES = Tolerances()


def thread_count() -> int:
    """Worker cap from ``UNITONLAB_THREADS`` (defaults to 1)."""
    raw = os.environ.get("UNITONLAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


@dataclass
class PipelineConfig:
    """Configuration of an end-to-end run.

    Parameters
    ----------
    source : str
        ``"s6-example"``, ``"s4-family"``, ``"zero"`` or a path to a
        potential JSON file.
    grid : tuple
        ``((re_lo, re_hi, n_re), (im_lo, im_hi, n_im))``.
    lambdas : list of complex
        Spectral parameter samples on the unit circle.
    mode : str
        ``"compact"``, ``"noncompact"`` or ``"duality"``.
    s4_derivatives : list, optional
        Polynomial coefficient lists for f1', ..., f4' (``s4-family`` only).
    """

    source: str = "s6-example"
    grid: tuple = ((-1.0, 1.0, 21), (-1.0, 1.0, 21))
    lambdas: list = field(
        default_factory=lambda: [1.0, complex(2**-0.5, 2**-0.5), 1j, -1.0]
    )
    mode: str = "compact"
    tolerances: Tolerances = TOLERANCES
    out_dir: str | None = None
    s4_derivatives: list | None = None

    def validate(self) -> None:
        if self.mode not in ("compact", "noncompact", "duality"):
            raise ValueError(f"unknown mode {self.mode!r}")
        for lo, hi, n in self.grid:
            if n < 3 or not hi > lo:
                raise ValueError("grid needs at least 3 points per axis")
        for lam in self.lambdas:
            if abs(abs(complex(lam)) - 1) > 1e-12:
                raise ValueError(f"lambda {lam} is not on the unit circle")
        for name, value in self.tolerances.as_dict().items():
            if value <= 0:
                raise ValueError(f"tolerance {name} must be positive")
