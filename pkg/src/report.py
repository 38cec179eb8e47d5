"""JSON payloads and polars summary tables for the command-line runs."""

from typing import Dict, Iterable, Optional

import polars as pl

from .engine.algebra import Multivector
from .engine.antiderivatives import DerivativeCheck
from .engine.boundary_method import IncisionBound, IntegrationReport, SweepPoint
from .engine.quadrature import DirectedIntegralResult
from .engine.suites import AlgebraSuiteResult, TableSuiteResult

SCHEMA_VERSION = 1


def multivector_to_dict(value: Optional[Multivector]) -> Optional[Dict[str, float]]:
    """Nonzero coefficients keyed by blade label ("1", "e1", "e12", ...)."""
    if value is None:
        return None
    if value.is_batched:
        raise ValueError("Only single multivectors are serialized")
    labels = value.algebra.labels()
    return {labels[i]: float(c) for i, c in enumerate(value.coeffs) if c != 0.0}


def _optional_float(value) -> Optional[float]:
    return None if value is None else float(value)


def incision_to_dict(bound: IncisionBound) -> dict:
    return {
        "name": bound.incision.name,
        "level": bound.incision.level,
        "volume": float(bound.incision.volume),
        "sup": float(bound.sup),
        "sup_bound": float(bound.sup_bound),
        "bound": float(bound.bound),
        "estimated": bound.estimated,
    }


def sweep_point_to_dict(point: SweepPoint) -> dict:
    return {
        "epsilon": float(point.epsilon),
        "result": multivector_to_dict(point.result),
        "coefficient": float(point.coefficient),
        "error_bound": float(point.error_bound),
        "total_volume": float(point.total_volume),
        "oracle_delta": _optional_float(point.oracle_delta),
        "theorem_holds": point.theorem_holds,
    }


def scenario_payload(report: IntegrationReport) -> dict:
    oracle = None
    if report.oracle_value is not None:
        oracle = {
            "value": multivector_to_dict(report.oracle_value),
            "estimated_error": _optional_float(report.oracle_error),
            "delta": _optional_float(report.oracle_delta),
            "theorem_holds": report.theorem_holds,
        }
    return {
        "schema": SCHEMA_VERSION,
        "command": "run-scenario",
        "scenario": report.scenario,
        "params": {key: float(value) for key, value in sorted(report.params.items())},
        "result": multivector_to_dict(report.result),
        "coefficient": float(report.coefficient),
        "expected": multivector_to_dict(report.expected),
        "error_bound": float(report.error_bound),
        "incisions": [incision_to_dict(bound) for bound in report.incisions],
        "derivative_residual": float(report.derivative_residual),
        "continuity_ratio": float(report.continuity_ratio),
        "oracle": oracle,
        "sweep": [sweep_point_to_dict(point) for point in report.sweep],
        "extrapolated": multivector_to_dict(report.extrapolated),
        "extrapolated_coefficient": _optional_float(report.extrapolated_coefficient),
        "convergence_order": _optional_float(report.convergence_order),
        "bound_slope": _optional_float(report.bound_slope),
        "linear_bound_holds": report.linear_bound_holds,
        "passed": report.passed,
    }


def algebra_payload(result: AlgebraSuiteResult) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "command": "verify-algebra",
        "dim": result.dim,
        "seed": result.seed,
        "trials": result.trials,
        "tol": result.tol,
        "residuals": dict(sorted(result.residuals.items())),
        "violations": sorted(result.violations),
        "passed": result.passed,
    }


def table_payload(result: TableSuiteResult, catalog: Iterable[dict]) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "command": "verify-table",
        "tol": result.tol,
        "checks": [check.to_dict() for check in result.checks],
        "gauge_deltas": dict(sorted(result.gauge_deltas.items())),
        "gauge_tol": result.gauge_tol,
        "cross_checks": dict(sorted(result.cross_checks.items())),
        "catalog": list(catalog),
        "passed": result.passed,
    }


def integral_to_dict(result: DirectedIntegralResult) -> dict:
    return {
        "value": multivector_to_dict(result.value),
        "cells": int(result.cells),
        "estimated_error": float(result.estimated_error),
        "converged": result.converged,
        "subdivisions": int(result.subdivisions),
    }


# --- summary tables ------------------------------------------------------------


def residual_table(residuals: Dict[str, float], tol: float) -> pl.DataFrame:
    names = sorted(residuals)
    values = [residuals[name] for name in names]
    return pl.DataFrame({"property": names, "worst_residual": values}).with_columns(
        (pl.col("worst_residual") <= tol).alias("passed")
    )


def derivative_check_table(checks: Iterable[DerivativeCheck]) -> pl.DataFrame:
    rows = [check.to_dict() for check in checks]
    schema = {"entry": pl.String, "points": pl.Int64, "max_residual": pl.Float64, "tol": pl.Float64, "passed": pl.Boolean}
    return pl.DataFrame(rows, schema=schema)


def incision_table(bounds: Iterable[IncisionBound]) -> pl.DataFrame:
    rows = [incision_to_dict(bound) for bound in bounds]
    schema = {
        "name": pl.String,
        "level": pl.Int64,
        "volume": pl.Float64,
        "sup": pl.Float64,
        "sup_bound": pl.Float64,
        "bound": pl.Float64,
        "estimated": pl.Boolean,
    }
    return pl.DataFrame(rows, schema=schema).sort(["level", "name"])


def sweep_table(report: IntegrationReport) -> pl.DataFrame:
    frame = pl.DataFrame(
        {
            "epsilon": [p.epsilon for p in report.sweep],
            "coefficient": [p.coefficient for p in report.sweep],
            "error_bound": [p.error_bound for p in report.sweep],
            "incision_volume": [p.total_volume for p in report.sweep],
        },
        schema={"epsilon": pl.Float64, "coefficient": pl.Float64, "error_bound": pl.Float64, "incision_volume": pl.Float64},
    )
    if report.extrapolated_coefficient is None:
        return frame
    return frame.with_columns(
        (pl.col("coefficient") - report.extrapolated_coefficient).abs().alias("distance_to_limit")
    )


def print_table(frame: pl.DataFrame, title: str):
    """Writes a summary table to standard output."""
    with pl.Config(tbl_rows=-1, tbl_hide_dataframe_shape=True):
        print(f"\n{title}")
        print(frame)
