"""Problem records, validation, objective evaluation and the instance file format.

All combinatorial data (delta, gamma, xi, x, d) is kept in exact integers so
that budget arithmetic never suffers from rounding; only the cost vector c,
the penalty alpha and objective values are floating point.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np


class InstanceError(ValueError):
    """Raised when a candidate instance violates an invariant."""


@dataclass(frozen=True)
class TripInstance:
    """One trust-region integer step problem.

    Attributes:
        n: number of discretization intervals.
        c: gradient coefficients, length n.
        alpha: nonnegative switching-cost penalty.
        delta: nonnegative integer budget on sum_i gamma_i |d_i|.
        xi: strictly ascending admissible control values.
        x: current control, length n, every entry a member of xi.
        gamma: positive integer interval weights, length n.
    """

    n: int
    c: np.ndarray
    alpha: float
    delta: int
    xi: np.ndarray
    x: np.ndarray
    gamma: np.ndarray

    def __post_init__(self) -> None:
        for arr in (self.c, self.xi, self.x, self.gamma):
            arr.flags.writeable = False

    @property
    def m(self) -> int:
        return len(self.xi)

    def value_index(self, i: int) -> int:
        """Index into xi of the current control on interval i (1-based)."""
        return int(np.searchsorted(self.xi, self.x[i - 1]))

    def shifts(self, i: int) -> np.ndarray:
        """Admissible step values xi - x_i on interval i (1-based)."""
        return self.xi - self.x[i - 1]

    def to_dict(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "alpha": self.alpha,
            "delta": self.delta,
            "xi": self.xi.tolist(),
            "x": self.x.tolist(),
            "gamma": self.gamma.tolist(),
            "c": self.c.tolist(),
        }


@dataclass
class SolverStats:
    nodes_expanded: int = 0
    nodes_generated: int = 0
    preprocessing_iterations: int = 0
    wall_seconds: float = 0.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "nodes_expanded": self.nodes_expanded,
            "nodes_generated": self.nodes_generated,
            "preprocessing_iterations": self.preprocessing_iterations,
            "wall_seconds": self.wall_seconds,
        }


@dataclass
class Solution:
    """A feasible step vector with its cost, budget use and solver counters."""

    d: np.ndarray
    objective: float
    resource: int
    stats: SolverStats = field(default_factory=SolverStats)

    def to_dict(self) -> dict[str, Any]:
        return {
            "d": self.d.tolist(),
            "objective": self.objective,
            "resource": self.resource,
            "stats": self.stats.to_dict(),
        }


_FIELDS = ("n", "alpha", "delta", "xi", "x", "gamma", "c")


def validate(raw: Mapping[str, Any]) -> TripInstance:
    """Check a candidate instance record and return the immutable instance.

    Collects every violated invariant into a single error message instead of
    stopping at the first one.
    """
    missing = [name for name in _FIELDS if name not in raw]
    if missing:
        raise InstanceError(
            "missing field(s): " + ", ".join(repr(name) for name in missing)
        )

    problems: list[str] = []
    n = int(raw["n"])
    if n < 1:
        raise InstanceError(f"n = {n} must be a positive integer")

    xi = np.asarray(raw["xi"], dtype=np.int64)
    x = np.asarray(raw["x"], dtype=np.int64)
    gamma = np.asarray(raw["gamma"], dtype=np.int64)
    c = np.asarray(raw["c"], dtype=np.float64)
    alpha = float(raw["alpha"])
    delta = int(raw["delta"])

    if xi.ndim != 1 or len(xi) < 1:
        problems.append("xi must be a nonempty vector")
    elif np.any(np.diff(xi) <= 0):
        problems.append("xi not strictly ascending")
    for name, arr in (("x", x), ("gamma", gamma), ("c", c)):
        if arr.ndim != 1 or len(arr) != n:
            problems.append(f"{name} has length {len(arr)}, expected n = {n}")
    if len(x) == n and len(xi) >= 1:
        members = np.isin(x, xi)
        for i in np.flatnonzero(~members):
            problems.append(f"x_{i + 1} = {x[i]} not in xi")
    if len(gamma) == n:
        for i in np.flatnonzero(gamma < 1):
            problems.append(f"gamma_{i + 1} = {gamma[i]} must be >= 1")
    raw_gamma = np.asarray(raw["gamma"])
    if raw_gamma.ndim == 1 and len(raw_gamma) == n and not np.all(raw_gamma == gamma):
        problems.append("gamma entries must be integers")
    if alpha < 0:
        problems.append(f"alpha = {alpha} must be nonnegative")
    if delta < 0:
        problems.append(f"delta = {delta} must be a nonnegative integer")

    if problems:
        raise InstanceError("; ".join(problems))
    return TripInstance(n=n, c=c, alpha=alpha, delta=delta, xi=xi, x=x, gamma=gamma)


def clamp_delta(inst: TripInstance) -> TripInstance:
    """Cap the budget at the level where the budget constraint turns inactive.

    Beyond (max xi - min xi) * max_i gamma_i * n no step vector can consume
    more budget, so larger deltas are equivalent.
    """
    cap = int(inst.xi[-1] - inst.xi[0]) * int(inst.gamma.max()) * inst.n
    if inst.delta <= cap:
        return inst
    return TripInstance(
        n=inst.n,
        c=inst.c,
        alpha=inst.alpha,
        delta=cap,
        xi=inst.xi,
        x=inst.x,
        gamma=inst.gamma,
    )


def objective(inst: TripInstance, d: np.ndarray) -> float:
    """Cost of a step vector: linear term plus penalized jumps of x + d."""
    d = np.asarray(d, dtype=np.int64)
    if d.shape != (inst.n,):
        raise InstanceError(f"d has shape {d.shape}, expected ({inst.n},)")
    jumps = np.abs(np.diff(inst.x + d)).sum()
    return float(np.dot(inst.c, d) + inst.alpha * jumps)


def is_feasible(inst: TripInstance, d: np.ndarray) -> bool:
    d = np.asarray(d, dtype=np.int64)
    if d.shape != (inst.n,):
        return False
    if not np.all(np.isin(inst.x + d, inst.xi)):
        return False
    return int(np.dot(inst.gamma, np.abs(d))) <= inst.delta


def resource_use(inst: TripInstance, d: np.ndarray) -> int:
    """Budget consumed by a step vector: sum_i gamma_i |d_i|."""
    d = np.asarray(d, dtype=np.int64)
    return int(np.dot(inst.gamma, np.abs(d)))


def read_instance(text: str) -> TripInstance:
    """Parse the JSON instance document and validate it."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"malformed instance document: {exc}") from exc
    if not isinstance(doc, dict):
        raise InstanceError("instance document must be a JSON object")
    return validate(doc)


def write_instance(inst: TripInstance) -> str:
    return json.dumps(inst.to_dict())


def solution_to_json(sol: Solution) -> str:
    return json.dumps(sol.to_dict())
