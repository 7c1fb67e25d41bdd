"""Command-line pipeline.

Stage subcommands read and write a JSON state document, so they can be
chained with pipes::

    deflect-stats synth --seed 7 \\
      | deflect-stats standardize --seed 7 \\
      | deflect-stats pca | deflect-stats permtest | deflect-stats bootreg \\
      | deflect-stats report --output-dir out/

which produces the same output tree as ``deflect-stats pipeline --input
synth:default --seed 7 --output-dir out/``.

Exit codes: 0 success, 1 usage error, 2 data/validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import yaml

from deflect_stats import __version__
from deflect_stats.bootreg import DEFAULT_REPLICATES as BOOT_REPLICATES
from deflect_stats.bootreg import bootstrap_regression
from deflect_stats.errors import DataError, DeflectStatsError, NumericalError, StageError
from deflect_stats.ingest import SUPPLEMENTARY_COLUMNS, parse_dataset, write_dataset
from deflect_stats.pca import fit_pca, strong_correlations
from deflect_stats.permtest import DEFAULT_REPLICATES as PERM_REPLICATES
from deflect_stats.permtest import permutation_test
from deflect_stats import report as rpt
from deflect_stats import state as st
from deflect_stats.seeding import derive_seed
from deflect_stats.standardize import flag_extremes, standardize
from deflect_stats.synth import CampaignSpec, generate

log = logging.getLogger("deflect_stats")

SEED_ENV = "DEFLECT_STATS_SEED"
EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

NIGHT_DIMS = (2, 3)
FACTOR_MAPS = ((1, 2, None), (3, 4, None), (2, 3, "night"), (1, 2, "star"))
CORR_CIRCLES = ((1, 2), (3, 4))


class UsageError(DeflectStatsError):
    pass


@dataclass
class RunConfig:
    input: Optional[str] = None
    output_dir: Optional[str] = None
    seed: int = 0
    perm_replicates: int = PERM_REPLICATES
    boot_replicates: int = BOOT_REPLICATES
    extreme_threshold: float = 2.0
    corr_threshold: float = 0.5
    pca_dims: str = "all"
    response: str = "both"
    drop_extremes: bool = False
    standardize_response: bool = False
    threads: int = 1

    def validate(self):
        if self.perm_replicates < 3:
            raise UsageError("--perm-replicates must be at least 3")
        if self.boot_replicates < 1:
            raise UsageError("--boot-replicates must be positive")
        if not self.extreme_threshold > 0:
            raise UsageError("--extreme-threshold must be positive")
        if not 0 < self.corr_threshold <= 1:
            raise UsageError("--corr-threshold must lie in (0, 1]")
        if self.seed < 0:
            raise UsageError("--seed must be a non-negative integer")
        if self.threads < 1:
            raise UsageError("--threads must be positive")
        self.responses()
        if self.pca_dims != "all":
            try:
                if int(self.pca_dims) < 1:
                    raise ValueError
            except ValueError:
                raise UsageError(f"--pca-dims must be a positive count or 'all', got {self.pca_dims!r}") from None

    def responses(self):
        aliases = {"xi": ("xi",), "ξ": ("xi",), "eta": ("eta",), "η": ("eta",), "both": ("xi", "eta")}
        if self.response not in aliases:
            raise UsageError(f"--response must be xi, eta or both, got {self.response!r}")
        return aliases[self.response]

    def analysis_record(self) -> dict:
        """Settings that determine results; excludes paths and thread count."""
        skip = {"input", "output_dir", "threads"}
        return {k: v for k, v in dataclasses.asdict(self).items() if k not in skip}


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(RunConfig)}
_CASTS = {"int": int, "float": float, "str": str, "bool": bool, "Optional[str]": str}


def _coerce(settings: dict, source: str) -> dict:
    out = {}
    for key, value in settings.items():
        key = key.replace("-", "_")
        if key not in _FIELD_TYPES:
            raise UsageError(f"unknown setting {key!r} in {source}")
        if value is None:
            continue
        cast = _CASTS[_FIELD_TYPES[key]]
        try:
            out[key] = cast(value)
        except (TypeError, ValueError):
            raise UsageError(f"invalid value {value!r} for {key!r} in {source}") from None
    return out


def load_config_file(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh) or {}
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc.strerror}") from None
    except yaml.YAMLError as exc:
        raise UsageError(f"malformed config file {path}: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError(f"config file {path} must hold a mapping")
    return _coerce(data, str(path))


def build_config(args, base: Optional[dict] = None) -> RunConfig:
    """Merge, lowest precedence first: env seed, prior state, config file, flags."""
    settings = {}
    env_seed = os.environ.get(SEED_ENV)
    if env_seed:
        try:
            settings["seed"] = int(env_seed)
        except ValueError:
            raise UsageError(f"{SEED_ENV} must be an integer, got {env_seed!r}") from None
    if base:
        settings.update(_coerce(base, "stage input"))
    if getattr(args, "config", None):
        settings.update(load_config_file(args.config))
    flags = {k: getattr(args, k) for k in _FIELD_TYPES if getattr(args, k, None) is not None}
    settings.update(flags)
    cfg = RunConfig(**settings)
    cfg.validate()
    return cfg


# --- stages -----------------------------------------------------------------


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except (DeflectStatsError, OSError) as exc:
        raise StageError(name, exc) from exc


def parse_synth_spec(text: str, master_seed: int) -> CampaignSpec:
    """``synth:default`` or ``synth:key=value,...`` (planted values separated by '/')."""
    body = text.split(":", 1)[1] if ":" in text else text
    kwargs = {"seed": derive_seed(master_seed, "synth")}
    if body and body != "default":
        for item in body.split(","):
            if "=" not in item:
                raise UsageError(f"malformed synth option {item!r}")
            key, value = (s.strip() for s in item.split("=", 1))
            try:
                if key in ("nights", "seed", "stars"):
                    kwargs[key] = int(value)
                elif key in ("night_effect_scale", "noise_scale"):
                    kwargs[key] = float(value)
                elif key == "obs_per_night":
                    lo, _, hi = value.partition("-")
                    kwargs[key] = (int(lo), int(hi or lo))
                elif key == "planted":
                    kwargs["planted_coefficients"] = tuple(float(v) for v in value.split("/"))
                else:
                    raise UsageError(f"unknown synth option {key!r}")
            except ValueError:
                raise UsageError(f"invalid value for synth option {key!r}: {value!r}") from None
    return CampaignSpec(**kwargs)


def load_input(source: str, master_seed: int):
    if source is None:
        raise UsageError("no input given (use --input PATH, '-' or synth:...)")
    if source.startswith("synth:"):
        return generate(parse_synth_spec(source, master_seed))
    if source == "-":
        return parse_dataset(sys.stdin.buffer.read())
    with open(source, "rb") as fh:
        return parse_dataset(fh.read())


def run_standardize(dataset, cfg: RunConfig) -> dict:
    std = standardize(dataset.matrix())
    flags = flag_extremes(std, cfg.extreme_threshold)
    dropped = []
    if cfg.drop_extremes and flags:
        dropped = sorted({f.row_index for f in flags})
        keep = [i for i in range(len(dataset)) if i not in set(dropped)]
        log.info("dropping %d rows with extreme values", len(dropped))
        dataset = dataset.subset(keep)
        std = standardize(dataset.matrix())
    return {
        "format": st.FORMAT,
        "config": cfg.analysis_record(),
        "dataset": st.dataset_to_dict(dataset),
        "standardized": st.standardized_to_dict(std),
        "extremes": st.flags_to_list(flags),
        "dropped_rows": dropped,
    }


def run_pca(state: dict, cfg: RunConfig) -> dict:
    dataset = st.dataset_from_dict(state["dataset"])
    std = st.standardized_from_dict(state["standardized"])
    supp = {n: dataset.supplementary(n) for n in SUPPLEMENTARY_COLUMNS if dataset.has_supplementary(n)}
    model = fit_pca(std, supp)
    state["pca"] = st.pca_to_dict(model)
    state["strong_correlations"] = [list(t) for t in strong_correlations(model, cfg.corr_threshold)]
    return state


def run_permtest(state: dict, cfg: RunConfig) -> dict:
    dataset = st.dataset_from_dict(state["dataset"])
    model = st.pca_from_dict(state["pca"])
    coords = model.individual_coords
    out = {}
    for grouping, labels, dims in (
        ("night", dataset.nights, NIGHT_DIMS),
        ("star", dataset.stars, tuple(range(1, model.n_dims + 1))),
    ):
        dims = tuple(d for d in dims if d <= model.n_dims)
        report = permutation_test(
            coords,
            labels,
            B=cfg.perm_replicates,
            dims=dims,
            seed=derive_seed(cfg.seed, f"permtest:{grouping}"),
            workers=cfg.threads,
        )
        out[grouping] = st.permtest_to_dict(report)
    state["permtest"] = out
    return state


def run_bootreg(state: dict, cfg: RunConfig) -> dict:
    dataset = st.dataset_from_dict(state["dataset"])
    std = st.standardized_from_dict(state["standardized"])
    model = st.pca_from_dict(state["pca"])
    k = model.n_dims
    pca_dims = None if cfg.pca_dims == "all" else tuple(range(1, min(int(cfg.pca_dims), k) + 1))
    out = []
    for response in cfg.responses():
        if not dataset.has_supplementary(response):
            raise DataError(f"response column {response!r} is missing from the dataset")
        for design in ("raw", "pca"):
            summary = bootstrap_regression(
                dataset,
                response,
                B=cfg.boot_replicates,
                seed=derive_seed(cfg.seed, f"bootreg:{response}:{design}"),
                design=design,
                pca_model=model,
                pca_dims=pca_dims,
                standardized=std,
                standardize_response=cfg.standardize_response,
                workers=cfg.threads,
            )
            if summary.failed_replicates:
                log.warning(
                    "%s/%s: %d replicates failed after redraws",
                    response,
                    design,
                    len(summary.failed_replicates),
                )
            out.append(st.bootreg_to_dict(summary))
    state["bootreg"] = out
    return state


def run_report(state: dict, output_dir, cfg: RunConfig) -> rpt.ReportBundle:
    output_dir = Path(output_dir)
    bundle = rpt.ReportBundle(output_dir)
    dataset = st.dataset_from_dict(state["dataset"])
    if "pca" not in state:
        raise DataError("stage input has no PCA results; run the pca stage first")
    model = st.pca_from_dict(state["pca"])
    k = model.n_dims

    bundle.add(rpt.emit_inertia_table(model, output_dir))
    bundle.add(rpt.emit_extremes_table(st.flags_from_list(state.get("extremes", [])), output_dir))
    bundle.add(rpt.emit_correlation_table(model, output_dir))
    strong = [tuple(t) for t in state.get("strong_correlations", [])]
    bundle.add(rpt.emit_strong_correlations(strong, output_dir))
    labels = {"night": dataset.nights, "star": dataset.stars}
    for a, b, grouping in FACTOR_MAPS:
        if max(a, b) <= k:
            bundle.add(
                rpt.emit_factor_map(
                    model, (a, b), output_dir, labels=labels.get(grouping), label_name=grouping
                )
            )
    for a, b in CORR_CIRCLES:
        if max(a, b) <= k:
            bundle.add(rpt.emit_correlation_circle(model, (a, b), output_dir))
    for grouping, rep in state.get("permtest", {}).items():
        bundle.add(rpt.emit_permtest_table(st.permtest_from_dict(rep), output_dir, grouping))
    for summary in state.get("bootreg", []):
        for art in rpt.emit_bootstrap_histograms(st.bootreg_from_dict(summary), output_dir):
            bundle.add(art)
    record = dict(state.get("config") or cfg.analysis_record())
    text = json.dumps(record, indent=2, sort_keys=True) + "\n"
    bundle.add(rpt._emit(output_dir, "run_config.json", "json", text))
    rpt.write_manifest(bundle)
    return bundle


def run_pipeline(cfg: RunConfig) -> rpt.ReportBundle:
    """ingest -> standardize -> PCA -> permutation tests -> bootstrap regressions -> report."""
    if cfg.output_dir is None:
        raise UsageError("--output-dir is required")
    dataset = _stage("ingest", load_input, cfg.input, cfg.seed)
    state = _stage("standardize", run_standardize, dataset, cfg)
    state = _stage("pca", run_pca, state, cfg)
    state = _stage("permtest", run_permtest, state, cfg)
    state = _stage("bootreg", run_bootreg, state, cfg)
    return _stage("report", run_report, state, cfg.output_dir, cfg)


# --- argument parsing -------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_common(p):
    p.add_argument("--config", help="YAML or JSON file with run settings; flags win")
    p.add_argument("--seed", type=int, help=f"master seed (fallback: ${SEED_ENV}, then 0)")
    p.add_argument("--threads", type=int, help="worker threads for replicate loops")
    p.add_argument("-v", "--verbose", action="store_true")


def _add_analysis(p, which):
    if "standardize" in which:
        p.add_argument("--extreme-threshold", type=float, dest="extreme_threshold")
        p.add_argument("--drop-extremes", action="store_const", const=True, dest="drop_extremes",
                       help="remove rows with any extreme value before the analysis")
    if "pca" in which:
        p.add_argument("--corr-threshold", type=float, dest="corr_threshold")
    if "permtest" in which:
        p.add_argument("--perm-replicates", type=int, dest="perm_replicates")
    if "bootreg" in which:
        p.add_argument("--boot-replicates", type=int, dest="boot_replicates")
        p.add_argument("--pca-dims", dest="pca_dims", help="leading PCA coordinates in the pca design, or 'all'")
        p.add_argument("--response", help="xi, eta or both")
        p.add_argument("--standardize-response", action="store_const", const=True,
                       dest="standardize_response", help="z-score the response before fitting")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="deflect-stats", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("pipeline", help="run every stage and write the report")
    _add_common(p)
    p.add_argument("--input", help="CSV path, '-' for stdin, or synth:default / synth:key=value,...")
    p.add_argument("--output-dir", dest="output_dir")
    _add_analysis(p, ("standardize", "pca", "permtest", "bootreg"))

    p = sub.add_parser("synth", help="write a synthetic campaign CSV")
    _add_common(p)
    p.add_argument("spec", nargs="?", default="synth:default")
    p.add_argument("-o", "--output", default="-")

    p = sub.add_parser("standardize", help="read a CSV, standardize and flag extremes")
    _add_common(p)
    p.add_argument("--input", default="-")
    p.add_argument("-o", "--output", default="-")
    _add_analysis(p, ("standardize",))

    for name, help_text in (
        ("pca", "fit the PCA"),
        ("permtest", "run the median-centre permutation tests"),
        ("bootreg", "run the grouped bootstrap regressions"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        p.add_argument("--state", default="-", help="stage input (default stdin)")
        p.add_argument("-o", "--output", default="-")
        _add_analysis(p, (name,))

    p = sub.add_parser("report", help="emit tables and figures from a stage state")
    _add_common(p)
    p.add_argument("--state", default="-")
    p.add_argument("--output-dir", dest="output_dir", required=True)
    return parser


def _read_state(path):
    if path == "-":
        return st.loads(sys.stdin.read())
    with open(path, encoding="utf-8") as fh:
        return st.loads(fh.read())


def _write_text(path, text):
    if path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _dispatch(args):
    command = args.command
    if command == "pipeline":
        cfg = build_config(args)
        bundle = run_pipeline(cfg)
        log.info("wrote %d artifacts to %s", len(bundle.artifacts), bundle.output_dir)
        return
    if command == "synth":
        cfg = build_config(args)
        spec = args.spec if args.spec.startswith("synth:") else "synth:" + args.spec
        dataset = _stage("synth", load_input, spec, cfg.seed)
        _write_text(args.output, write_dataset(dataset))
        return
    if command == "standardize":
        cfg = build_config(args)
        dataset = _stage("ingest", load_input, args.input, cfg.seed)
        state = _stage("standardize", run_standardize, dataset, cfg)
        _write_text(args.output, st.dumps(state))
        return

    state = _stage(command, _read_state, args.state)
    cfg = build_config(args, base=state.get("config"))
    state["config"] = cfg.analysis_record()
    if command == "report":
        bundle = _stage("report", run_report, state, args.output_dir, cfg)
        log.info("wrote %d artifacts to %s", len(bundle.artifacts), bundle.output_dir)
        return
    runner = {"pca": run_pca, "permtest": run_permtest, "bootreg": run_bootreg}[command]
    required = {"pca": ("standardized",), "permtest": ("pca",), "bootreg": ("pca",)}[command]
    for key in required:
        if key not in state:
            raise StageError(command, DataError(f"stage input lacks {key!r} results"))
    state = _stage(command, runner, state, cfg)
    _write_text(args.output, st.dumps(state))


def _exit_code(exc):
    cause = exc.cause if isinstance(exc, StageError) else exc
    if isinstance(cause, UsageError):
        return EXIT_USAGE
    if isinstance(cause, NumericalError):
        return EXIT_NUMERIC
    return EXIT_DATA


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        _dispatch(args)
    except UsageError as exc:
        print(f"deflect-stats: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DeflectStatsError, OSError) as exc:
        print(f"deflect-stats: error: {exc}", file=sys.stderr)
        return _exit_code(exc)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
