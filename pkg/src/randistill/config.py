"""Numeric tolerances shared by every module.

All thresholds live in one frozen record so that the CLI and the acceptance
runner can override them from a single place.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields, replace

ENV_VAR = "RANDISTILL_TOLERANCES"


@dataclass(frozen=True)
class Tolerances:
    # state engine
    normalization: float = 1e-10
    isometry: float = 1e-12
    projector: float = 1e-12
    hermitian: float = 1e-10
    prune: float = 1e-14
    # measures
    eigen_floor: float = 1e-15
    root_find: float = 1e-12
    # acceptance targets
    reliability: float = 1e-3
    reset: float = 1e-12
    recurrence: float = 1e-10
    limit: float = 1e-3
    engine_vs_closed: float = 1e-3
    threshold: float = 1e-12
    tangle: float = 1e-9
    finite_round: float = 1e-9
    dicke: float = 1e-10
    zeta: float = 1e-6
    spectrum_entropy: float = 5e-4
    two_h2: float = 1e-5
    mincut: float = 1e-10
    convexity: float = 1e-9
    bridge: float = 1e-9

    def override(self, values: dict) -> "Tolerances":
        known = {f.name for f in fields(self)}
        unknown = set(values) - known
        if unknown:
            raise KeyError(f"unknown tolerance keys: {sorted(unknown)}")
        return replace(self, **{k: float(v) for k, v in values.items()})


DEFAULT = Tolerances()


def load_tolerances(overrides: dict | None = None, env: dict | None = None) -> Tolerances:
    """Defaults, then the file named by ``RANDISTILL_TOLERANCES``, then ``overrides``."""
    env = os.environ if env is None else env
    tol = DEFAULT
    path = env.get(ENV_VAR)
    if path:
        with open(path, encoding="utf-8") as fh:
            tol = tol.override(json.load(fh))
    if overrides:
        tol = tol.override(overrides)
    return tol
