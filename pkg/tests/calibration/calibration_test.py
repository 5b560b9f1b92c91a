#!/usr/bin/env python
# -*- coding: utf-8 -*-

# pylint: disable=missing-function-docstring, missing-module-docstring

import json

import numpy as np
import pytest
from pydantic import ValidationError

from hyplan.calibration import (
    CalibrationConfig,
    CalibrationException,
    CalibrationTable,
    InsufficientDataException,
    confidence,
    crude_calibrate,
    fit_crude,
    load_table,
    save_table,
)


def synthetic(count, shift=0.0, scale=1.0, seed=0):
    rng = np.random.default_rng(seed)
    mu = rng.normal(0.0, 10.0, count)
    sigma = rng.uniform(1.0, 5.0, count)
    target = mu + sigma * (shift + scale * rng.normal(size=count))
    return list(zip(mu, sigma**2, target))


def test_fit_calibrated():
    table = fit_crude(synthetic(10_000))
    assert -0.05 <= table.mean_z <= 0.05
    assert 0.9 <= table.var_z <= 1.1
    assert len(table.residuals) == 10_000
    assert list(table.residuals) == sorted(table.residuals)
    assert table.skipped_low_sigma == 0


def test_fit_biased():
    table = fit_crude(synthetic(10_000, shift=0.5, scale=2.0))
    assert table.mean_z == pytest.approx(0.5, abs=0.06)
    assert table.var_z == pytest.approx(4.0, rel=0.05)

    mu, var = crude_calibrate(10.0, 9.0, table)
    assert mu == pytest.approx(10.0 + 3.0 * table.mean_z)
    assert var == pytest.approx(9.0 * table.var_z)

    assert crude_calibrate(10.0, 0.0, table) == (10.0, 0.0)
    with pytest.raises(ValueError):
        crude_calibrate(10.0, -1.0, table)


def test_fit_errors():
    with pytest.raises(InsufficientDataException):
        fit_crude(synthetic(9))

    # Low sigma samples are skipped and counted
    samples = synthetic(12) + [(1.0, 0.0, 2.0), (1.0, 1e-14, 2.0)]
    table = fit_crude(samples)
    assert table.skipped_low_sigma == 2
    assert len(table.residuals) == 12

    with pytest.raises(InsufficientDataException):
        fit_crude(synthetic(12), CalibrationConfig(min_samples=20))


def test_confidence():
    table = CalibrationTable.identity(conf_scale=4.0)
    assert confidence(0.0, table) == 1.0
    assert confidence(4.0, table) == 0.5
    assert confidence(12.0, table) == 0.25
    assert 0.0 < confidence(1e12, table) < 1e-9

    with pytest.raises(ValueError):
        confidence(-1.0, table)


def test_identity():
    table = CalibrationTable.identity()
    assert crude_calibrate(-300.0, 25.0, table) == (-300.0, 25.0)
    assert table.conf_scale == 1.0


def test_conf_scale():
    table = CalibrationTable.identity()
    assert table.with_conf_scale([1.0, 9.0, 4.0]).conf_scale == 4.0
    assert table.with_conf_scale([]).conf_scale == 1.0
    assert table.with_conf_scale([0.0, 0.0], floor=1e-3).conf_scale == 1e-3
    # Immutable
    assert table.conf_scale == 1.0


def test_table_validation():
    with pytest.raises(ValidationError):
        CalibrationTable(residuals=(), mean_z=0.0, var_z=1.0)

    with pytest.raises(ValidationError):
        CalibrationTable(residuals=(1.0, 0.0), mean_z=0.0, var_z=1.0)

    with pytest.raises(ValidationError):
        CalibrationTable(residuals=(0.0,), mean_z=float("nan"), var_z=1.0)


def test_save_load(tmp_path):
    table = fit_crude(synthetic(50)).with_conf_scale([2.0, 3.0])
    file = save_table(table, tmp_path, "calib.json")

    data = json.loads(file.read_text())
    assert set(data) == {"residuals", "meanZ", "varZ", "confScale", "skippedLowSigma"}
    assert data["confScale"] == 2.5

    assert load_table(file) == table

    with pytest.raises(CalibrationException):
        load_table(tmp_path, "missing.json")

    (tmp_path / "bad.json").write_text('{"residuals": []}')
    with pytest.raises(CalibrationException):
        load_table(tmp_path, "bad.json")
