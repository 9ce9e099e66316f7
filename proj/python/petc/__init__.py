"""Periodic event-triggered control: design, simulation and verification.

Every entry point takes a scenario either as a path to a JSON config file or
as an already-parsed dict with the same schema.
"""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass
from typing import Any, Optional, Sequence, Union

import numpy as np

from ._core import (
    ConfigError,
    DesignError,
    EtmParams,
    HybridError,
    design_agent,
    integrate_phi,
    phi_derivative,
)
from . import _core

Config = Union[str, os.PathLike, dict]

__all__ = [
    "ConfigError",
    "DesignError",
    "EtmParams",
    "HybridError",
    "SimulationResult",
    "curve",
    "design",
    "design_agent",
    "integrate_phi",
    "phi_derivative",
    "simulate",
    "verify",
]


def _config_text(config: Config) -> str:
    if isinstance(config, dict):
        return json.dumps(config)
    with open(config, encoding="utf-8") as fh:
        return fh.read()


@dataclass
class SimulationResult:
    summary: dict
    trace_csv: str
    report: Optional[dict] = None

    def flow_states(self) -> tuple[np.ndarray, np.ndarray]:
        """Times and states of the flow rows, shape (k,) and (k, n_agents)."""
        lines = [ln for ln in self.trace_csv.splitlines() if not ln.startswith("#")]
        reader = csv.DictReader(io.StringIO("\n".join(lines)))
        xcols = [c for c in reader.fieldnames or [] if c.startswith("x")]
        t, x = [], []
        for row in reader:
            if row["kind"] == "flow":
                t.append(float(row["t"]))
                x.append([float(row[c]) for c in xcols])
        return np.asarray(t), np.asarray(x)


def design(config: Config) -> dict[str, Any]:
    """Timing constants, timing certificates and the reference comparison."""
    return json.loads(_core.design(_config_text(config)))


def simulate(
    config: Config,
    *,
    seed: Optional[int] = None,
    horizon: Optional[float] = None,
    mode: Optional[str] = None,
    verify: bool = False,
    full_state: bool = False,
) -> SimulationResult:
    summary, trace, report = _core.simulate(
        _config_text(config), seed, horizon, mode, verify, full_state
    )
    return SimulationResult(
        json.loads(summary), trace, json.loads(report) if report is not None else None
    )


def verify(config: Config, trace_csv: str) -> dict[str, Any]:
    """Replay checks on a full-state trace."""
    return json.loads(_core.verify(_config_text(config), trace_csv))


def curve(config: Config, lambdas: Sequence[float]) -> list[dict[str, float]]:
    """(lambda, tau_max, tau_MAD, tau_MIET) per out-degree class."""
    rows = csv.DictReader(io.StringIO(_core.curve(_config_text(config), list(lambdas))))
    return [{k: float(v) for k, v in r.items()} for r in rows]
