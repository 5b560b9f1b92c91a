#!/usr/bin/env python
# encoding: utf-8

"""Empirical recalibration of the MC dropout value estimates, and the
variance -> confidence law used for vertical pruning.

Moment matching form: normalized residuals z = (target - mu) / sigma are
collected on held-out scenes; a new estimate (mu, sigma^2) becomes
(mu + sigma * mean(z), sigma^2 * var(z)). Confidence is s^2 / (s^2 + var).
"""

import math
from typing import Iterable

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from . import logging
from .file_utils import read_json, write_json

logger = logging.get_logger(__name__, logging.DEBUG)


class CalibrationException(Exception):
    """CalibrationException"""


class InsufficientDataException(CalibrationException):
    """Too few usable samples to fit the residual distribution"""


class CalibrationConfig(BaseModel):
    """Fitting thresholds and MC dropout pass count"""

    model_config = ConfigDict(frozen=True)

    min_samples: int = Field(10, ge=2)
    min_sigma: float = Field(1e-6, gt=0)
    conf_floor: float = Field(1e-6, gt=0)
    passes: int = Field(10, ge=2)


class CalibrationTable(BaseModel):
    """Sorted normalized residuals and their statistics"""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    residuals: tuple[float, ...]
    mean_z: float = Field(alias="meanZ")
    var_z: float = Field(alias="varZ", ge=0)
    conf_scale: float = Field(1.0, alias="confScale", gt=0)
    skipped_low_sigma: int = Field(0, alias="skippedLowSigma", ge=0)

    @field_validator("residuals")
    @classmethod
    def _sorted(cls, value: tuple[float, ...]):
        if not value:
            raise ValueError("Residuals must not be empty")
        if any(a > b for a, b in zip(value[:-1], value[1:])):
            raise ValueError("Residuals must be sorted")
        return value

    @model_validator(mode="after")
    def _finite(self):
        if not all(math.isfinite(x) for x in (self.mean_z, self.var_z, self.conf_scale)):
            raise ValueError("Calibration statistics must be finite")
        return self

    @classmethod
    def identity(cls, conf_scale: float = 1.0) -> "CalibrationTable":
        """mean 0, variance 1: crude_calibrate() changes nothing"""
        return cls(residuals=(-1.0, 0.0, 1.0), mean_z=0.0, var_z=1.0, conf_scale=conf_scale)

    def with_conf_scale(self, calibrated_vars: Iterable[float], floor: float = 1e-6) -> "CalibrationTable":
        """Median of the calibrated variances seen in a calibration pass"""
        values = np.asarray(list(calibrated_vars), dtype=float)
        scale = float(np.median(values)) if len(values) else 1.0
        return self.model_copy(update={"conf_scale": max(scale, floor)})


def fit_crude(
    samples: Iterable[tuple[float, float, float]], cfg: None | CalibrationConfig = None
) -> CalibrationTable:
    """samples: (mu, sigma^2, target). Samples with sigma < min_sigma are
    skipped and counted."""

    cfg = cfg or CalibrationConfig()
    residuals = []
    skipped = 0
    for mu, var, target in samples:
        sigma = math.sqrt(max(var, 0.0))
        if sigma < cfg.min_sigma:
            skipped += 1
            continue
        residuals.append((target - mu) / sigma)

    if len(residuals) < cfg.min_samples:
        raise InsufficientDataException(
            f"Need at least {cfg.min_samples} samples with sigma >= {cfg.min_sigma}; "
            f"got {len(residuals)} ({skipped} skipped)"
        )

    z = np.sort(np.asarray(residuals, dtype=float))
    table = CalibrationTable(
        residuals=tuple(float(x) for x in z),
        mean_z=float(z.mean()),
        var_z=float(z.var(ddof=1)),
        skipped_low_sigma=skipped,
    )
    logger.info(
        "Fitted calibration: n=%d, meanZ=%.4f, varZ=%.4f, skipped=%d",
        len(z),
        table.mean_z,
        table.var_z,
        skipped,
    )
    return table


def crude_calibrate(mu: float, var: float, table: CalibrationTable) -> tuple[float, float]:
    """(mu + sigma * meanZ, sigma^2 * varZ)"""
    if var < 0:
        raise ValueError(f"Variance must be >= 0: {var}")
    if var == 0:
        return mu, 0.0
    return mu + math.sqrt(var) * table.mean_z, var * table.var_z


def confidence(var: float, table: CalibrationTable) -> float:
    """s^2 / (s^2 + var), in (0, 1]"""
    if var < 0:
        raise ValueError(f"Variance must be >= 0: {var}")
    return table.conf_scale / (table.conf_scale + var)


def save_table(table: CalibrationTable, *paths):
    """JSON {residuals, meanZ, varZ, confScale, skippedLowSigma}"""
    return write_json(table.model_dump(by_alias=True, mode="json"), *paths)


def load_table(*paths) -> CalibrationTable:
    """Inverse of save_table()"""
    try:
        return CalibrationTable.model_validate(read_json(*paths))
    except FileNotFoundError as exc:
        raise CalibrationException(f"Calibration file not found: {paths}") from exc
    except ValueError as exc:
        raise CalibrationException(f"Invalid calibration file: {paths}") from exc
