"""Shared state containers: agent opinion vectors and recorded trajectories."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class SimulationError(Exception):
    """Base class for simulation failures."""


class NonConvergentError(SimulationError):
    """An iterative computation did not converge within its iteration budget."""

    def __init__(self, message, iterations=None):
        super().__init__(message)
        self.iterations = iterations


class UnstableError(SimulationError):
    """A stability precondition (spectral radius strictly below 1) failed."""


class IntegrationError(SimulationError):
    """The ODE integrator produced a non-finite state."""

    def __init__(self, message, step=None, time=None):
        super().__init__(message)
        self.step = step
        self.time = time


class MaxStepsError(SimulationError):
    """A fixed-point iteration hit its step budget; carries the partial run."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


def as_state_array(values) -> np.ndarray:
    """Coerce input to an (n, m) float array; 1-D input becomes (n, 1)."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError(f"opinion values must be 1-D or 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"need at least one agent and one dimension, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("opinion values must be finite")
    return arr


@dataclass(frozen=True)
class OpinionState:
    """Opinions of n agents, each a point in R^m (m=1 for scalar models)."""

    values: np.ndarray  # shape (n, m), treated as immutable

    def __post_init__(self):
        arr = as_state_array(self.values)
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]

    @property
    def flat(self) -> np.ndarray:
        """The (n,) view for scalar opinions; requires m == 1."""
        if self.m != 1:
            raise ValueError(f"flat view requires scalar opinions, m={self.m}")
        return self.values[:, 0]

    def diameter(self) -> float:
        """Largest pairwise Euclidean distance between agents."""
        diff = self.values[:, None, :] - self.values[None, :, :]
        return float(np.sqrt((diff**2).sum(-1)).max())


@dataclass
class Trajectory:
    """Time-ordered sequence of opinion states with optional per-step events.

    States are held stacked in one (S, n, m) array to keep long runs cheap;
    ``state(k)`` materializes a single :class:`OpinionState`. ``events[k]``
    describes the transition from state k to state k+1 (len S-1 when present).
    ``terminated_at`` is the first step index whose state is a fixed point of
    the generating map (within the run's stop tolerance), or None.
    """

    array: np.ndarray  # (S, n, m)
    stamps: np.ndarray  # (S,)
    terminated_at: int | None = None
    events: list | None = None

    def __post_init__(self):
        self.array = np.asarray(self.array, dtype=float)
        self.stamps = np.asarray(self.stamps, dtype=float)
        if self.array.ndim != 3:
            raise ValueError(f"trajectory array must be (S, n, m), got {self.array.shape}")
        if len(self.stamps) != self.array.shape[0]:
            raise ValueError("one stamp per state required")
        if len(self.stamps) > 1 and not np.all(np.diff(self.stamps) > 0):
            raise ValueError("stamps must be strictly increasing")

    def __len__(self) -> int:
        return self.array.shape[0]

    @property
    def n(self) -> int:
        return self.array.shape[1]

    @property
    def m(self) -> int:
        return self.array.shape[2]

    def state(self, k: int) -> OpinionState:
        return OpinionState(self.array[k])

    @property
    def states(self) -> tuple:
        """All states as OpinionState objects (materializes; avoid on huge runs)."""
        return tuple(OpinionState(self.array[k]) for k in range(len(self)))

    @property
    def initial(self) -> OpinionState:
        return self.state(0)

    @property
    def final(self) -> OpinionState:
        return self.state(len(self) - 1)


def trajectory_from_states(states, stamps=None, terminated_at=None, events=None) -> Trajectory:
    """Build a Trajectory from a list of (n, m) arrays or OpinionState objects."""
    arrays = [s.values if isinstance(s, OpinionState) else as_state_array(s) for s in states]
    if not arrays:
        raise ValueError("need at least one state")
    if stamps is None:
        stamps = np.arange(len(arrays), dtype=float)
    return Trajectory(np.stack(arrays), stamps, terminated_at=terminated_at, events=events)
