"""Dataclass configs with command-line overrides for the experiment scripts."""
from __future__ import annotations

import argparse
import dataclasses
import json


def parse(cls, argv=None, description: str | None = None):
    """Build ``cls`` from its defaults, overridden by ``--field value`` flags.

    List and tuple fields take a JSON literal, e.g. ``--epsilons "[0.1, 0.01]"``.
    """
    ap = argparse.ArgumentParser(description=description or cls.__doc__)
    for f in dataclasses.fields(cls):
        default = f.default if f.default is not dataclasses.MISSING else f.default_factory()
        if isinstance(default, bool):
            ap.add_argument(f"--{f.name.replace('_', '-')}", type=json.loads, default=default,
                            help="true or false")
        elif isinstance(default, (list, tuple)):
            ap.add_argument(f"--{f.name.replace('_', '-')}", type=json.loads, default=default)
        else:
            ap.add_argument(f"--{f.name.replace('_', '-')}", type=type(default), default=default)
    return cls(**vars(ap.parse_args(argv)))
