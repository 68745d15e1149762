"""Shared helpers: dataclass config from command-line overrides, JSON output."""
import argparse
import dataclasses
import sys

from unitonlab.cli import dumps


def parse_config(cls, argv=None):
    """Build ``cls`` with one ``--field`` option per dataclass field (parsed with the field type)."""
    p = argparse.ArgumentParser(description=cls.__doc__)
    for f in dataclasses.fields(cls):
        kind = f.type if f.type in ("int", "float", "str", int, float, str) else "str"
        conv = {"int": int, "float": float, "str": str}.get(kind, kind)
        p.add_argument("--" + f.name.replace("_", "-"), type=conv, default=f.default)
    return cls(**vars(p.parse_args(argv)))


def emit(obj) -> None:
    sys.stdout.write(dumps(obj))
