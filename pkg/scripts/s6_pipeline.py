"""End-to-end S^6 run: exact frame, Iwasawa grid, flatness, uniton degree, artifacts."""
from dataclasses import dataclass

from _common import emit, parse_config
from unitonlab.cli import run_pipeline
from unitonlab.config import PipelineConfig


@dataclass
class Config:
    """Square grid ``[-half_width, half_width]^2`` with ``points`` per axis and an artifact directory."""

    half_width: float = 1.0
    points: int = 21
    mode: str = "compact"
    out_dir: str = "runs/s6"


def main(cfg: Config) -> tuple[int, dict]:
    axis = (-cfg.half_width, cfg.half_width, cfg.points)
    return run_pipeline(PipelineConfig(source="s6-example", grid=(axis, axis), mode=cfg.mode,
                                       out_dir=cfg.out_dir or None))


if __name__ == "__main__":
    status, report = main(parse_config(Config))
    emit(report)
    raise SystemExit(status)
