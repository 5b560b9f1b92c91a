#!/usr/bin/env python
# encoding: utf-8

"""Decision pipeline

Every control tick is processed by a named group of steps. The decision
is a dict that every step may read and enrich: the observation and belief
go in, the predictions, costmap, path, steering, intention image and the
velocity plan come out. A step returning True ends the group early, e.g.
when no path exists and the fallback action has been set.
"""

from .decision import Decision
from .step import DecisionStep
from .pipeline import Pipeline, PipelineException
