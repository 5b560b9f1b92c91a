#!/usr/bin/env python
# encoding: utf-8

"""Clocks for planning budgets and timing metrics.

All budgets (hybrid A*, planner trials) and all timing metrics (PT, NNET,
executionMs) read time through a Clock. The WallClock reports real time.
The VirtualClock only advances when work is charged to it, which makes
budgets and timings a pure function of the inputs.
"""

import time
from typing import Protocol

from pydantic import BaseModel, ConfigDict, Field


class ClockConfig(BaseModel):
    """Unit costs of the virtual clock, in milliseconds"""

    model_config = ConfigDict(frozen=True)

    astar_expansion_ms: float = Field(0.002, ge=0)
    node_simulation_ms: float = Field(0.01, ge=0)
    network_forward_ms: float = Field(0.5, ge=0)


class Clock(Protocol):
    """Millisecond clock"""

    def now_ms(self) -> float:
        """Current time in ms (arbitrary origin)"""

    def charge(self, kind: str, count: int = 1) -> None:
        """Report that 'count' units of work of 'kind' have been done"""


class WallClock:
    """Real time; charging work is a no-op"""

    def now_ms(self) -> float:
        return time.perf_counter() * 1000.0

    def charge(self, kind: str, count: int = 1) -> None:
        pass


class VirtualClock:
    """Deterministic time, advanced by unit costs of the work done"""

    KINDS = ("astar_expansion", "node_simulation", "network_forward")

    def __init__(self, cfg: None | ClockConfig = None):
        self.cfg = cfg or ClockConfig()
        self._now = 0.0
        self.counts = {kind: 0 for kind in self.KINDS}

    def now_ms(self) -> float:
        return self._now

    def charge(self, kind: str, count: int = 1) -> None:
        try:
            unit = getattr(self.cfg, f"{kind}_ms")
        except AttributeError as exc:
            raise ValueError(f"Unknown kind of work: '{kind}'") from exc

        self.counts[kind] += count
        self._now += unit * count


def create_clock(name: str, cfg: None | ClockConfig = None) -> Clock:
    """'wall' or 'virtual'"""
    if name == "wall":
        return WallClock()
    if name == "virtual":
        return VirtualClock(cfg)

    raise ValueError(f"Unknown clock: '{name}'. Expected 'wall' or 'virtual'")
