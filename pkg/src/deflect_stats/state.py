"""JSON serialization of stage results.

Floats are written with ``repr`` precision, so a value read back is bitwise
equal to the one written and downstream stages reproduce in-memory results
exactly. Non-finite floats are encoded as strings.
"""

from __future__ import annotations

import json
import math

import numpy as np

from deflect_stats.bootreg import BootstrapRegressionSummary, OlsFit, summarize_fits
from deflect_stats.errors import DataError
from deflect_stats.ingest import Dataset, parse_dataset, write_dataset
from deflect_stats.pca import PcaModel
from deflect_stats.permtest import GroupMedianResult, PermutationTestReport
from deflect_stats.standardize import ExtremeFlag, StandardizedMatrix

FORMAT = "deflect-stats-state/1"


def _num(x):
    x = float(x)
    if math.isfinite(x):
        return x
    return "inf" if x > 0 else "-inf" if x < 0 else "nan"


def _unnum(x):
    return float(x)


def _arr(a):
    return np.asarray(a, dtype=float).tolist()


def _frozen(values):
    a = np.array(values, dtype=float)
    a.setflags(write=False)
    return a


def dataset_to_dict(ds: Dataset) -> dict:
    return {"csv": write_dataset(ds)}


def dataset_from_dict(d) -> Dataset:
    return parse_dataset(d["csv"])


def standardized_to_dict(std: StandardizedMatrix) -> dict:
    return {
        "column_names": list(std.column_names),
        "column_means": _arr(std.column_means),
        "column_sds": _arr(std.column_sds),
        "values": _arr(std.values),
    }


def standardized_from_dict(d) -> StandardizedMatrix:
    return StandardizedMatrix(
        values=_frozen(d["values"]),
        column_means=_frozen(d["column_means"]),
        column_sds=_frozen(d["column_sds"]),
        column_names=tuple(d["column_names"]),
    )


def flags_to_list(flags) -> list:
    return [{"row_index": f.row_index, "column": f.column, "z_value": f.z_value} for f in flags]


def flags_from_list(items) -> list:
    return [ExtremeFlag(int(i["row_index"]), i["column"], float(i["z_value"])) for i in items]


def pca_to_dict(model: PcaModel) -> dict:
    return {
        "variable_names": list(model.variable_names),
        "eigenvalues": _arr(model.eigenvalues),
        "eigenvectors": _arr(model.eigenvectors),
        "individual_coords": _arr(model.individual_coords),
        "inertia_pct": _arr(model.inertia_pct),
        "cumulative_pct": _arr(model.cumulative_pct),
        "var_dim_corr": _arr(model.var_dim_corr),
        "supp_corr": {k: _arr(v) for k, v in model.supp_corr.items()},
        "warnings": list(model.warnings),
    }


def pca_from_dict(d) -> PcaModel:
    return PcaModel(
        eigenvalues=_frozen(d["eigenvalues"]),
        eigenvectors=_frozen(d["eigenvectors"]),
        individual_coords=_frozen(d["individual_coords"]),
        inertia_pct=_frozen(d["inertia_pct"]),
        cumulative_pct=_frozen(d["cumulative_pct"]),
        var_dim_corr=_frozen(d["var_dim_corr"]),
        supp_corr={k: _frozen(v) for k, v in d["supp_corr"].items()},
        variable_names=tuple(d["variable_names"]),
        warnings=tuple(d.get("warnings", ())),
    )


def permtest_to_dict(report: PermutationTestReport) -> dict:
    return {
        "replicates": report.replicates,
        "seed": report.seed,
        "dimensions_tested": list(report.dimensions_tested),
        "groups": list(report.groups),
        "coverage_label": report.coverage_label,
        "results": [
            {
                "group": r.group,
                "dimension": r.dimension,
                "observed_median": r.observed_median,
                "lower_bound": r.lower_bound,
                "upper_bound": r.upper_bound,
                "inside": r.inside,
            }
            for r in report.results
        ],
    }


def permtest_from_dict(d) -> PermutationTestReport:
    return PermutationTestReport(
        results=tuple(
            GroupMedianResult(
                r["group"],
                int(r["dimension"]),
                float(r["observed_median"]),
                float(r["lower_bound"]),
                float(r["upper_bound"]),
                bool(r["inside"]),
            )
            for r in d["results"]
        ),
        replicates=int(d["replicates"]),
        seed=int(d["seed"]),
        dimensions_tested=tuple(d["dimensions_tested"]),
        groups=tuple(d["groups"]),
        coverage_label=d.get("coverage_label", "96%"),
    )


def fit_to_dict(f: OlsFit) -> dict:
    return {
        "intercept": f.intercept,
        "coefficients": _arr(f.coefficients),
        "r_squared": f.r_squared,
        "f_statistic": _num(f.f_statistic),
        "p_value": f.p_value,
        "residual_variance": f.residual_variance,
        "n": f.n,
        "p": f.p,
    }


def fit_from_dict(d) -> OlsFit:
    return OlsFit(
        intercept=float(d["intercept"]),
        coefficients=_frozen(d["coefficients"]),
        r_squared=float(d["r_squared"]),
        f_statistic=_unnum(d["f_statistic"]),
        p_value=float(d["p_value"]),
        residual_variance=float(d["residual_variance"]),
        n=int(d["n"]),
        p=int(d["p"]),
    )


def bootreg_to_dict(s: BootstrapRegressionSummary) -> dict:
    return {
        "response": s.response,
        "design": s.design,
        "seed": s.seed,
        "replicates": s.replicates,
        "redraw_count": s.redraw_count,
        "failed_replicates": list(s.failed_replicates),
        "standardized_response": s.standardized_response,
        "coefficient_names": list(s.coefficient_names),
        "rows": [list(r) for r in s.rows],
        "fits": [fit_to_dict(f) for f in s.fits],
    }


def bootreg_from_dict(d) -> BootstrapRegressionSummary:
    return summarize_fits(
        [fit_from_dict(f) for f in d["fits"]],
        d["rows"],
        d["coefficient_names"],
        seed=d["seed"],
        response=d["response"],
        design=d["design"],
        replicates=d["replicates"],
        redraw_count=d["redraw_count"],
        failed_replicates=d["failed_replicates"],
        standardized_response=d["standardized_response"],
    )


def dumps(state: dict) -> str:
    return json.dumps(state, ensure_ascii=False, allow_nan=False, separators=(",", ":")) + "\n"


def loads(text: str) -> dict:
    try:
        state = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"stage input is not valid JSON ({exc})") from None
    if not isinstance(state, dict) or state.get("format") != FORMAT:
        raise DataError(f"stage input is not a {FORMAT} document")
    return state
