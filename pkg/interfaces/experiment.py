# Experiment files (INI), the head-to-head runner and its CSV/SVG/metadata output.

import configparser
import dataclasses
import itertools
import json
import logging
import math
import os
import re
from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd

from config import suites
from config.settings import DATA_DIR, DEFAULT_MAX_ITER, DEFAULT_P, DEFAULT_THETA, DEFAULT_XI, OUTPUT_DIR, VERSION
from core.applications import build_fda, build_recovery, build_srm
from core.data_handler import resolve_dataset
from core.exceptions import (
    ConfigError, DenominatorError, NonFiniteIterateError, ParameterError, UnsupportedVariantError,
)
from core.solver import SolverConfig, Variant, initial_point, run
from interfaces.plots import emit_svg

logger = logging.getLogger(__name__)

APPS = ("fda", "srm", "recovery")
SUMMARY_COLUMNS = ["instance", "variant", "status", "iterations", "final_objective",
                   "final_residual", "flagged", "reason"]
# used as the iteration cap when only a wall-clock budget is given
UNBOUNDED_ITER = 10 ** 9


@dataclass(frozen=True)
class RunSpec:
    app: str
    dataset: str
    variants: tuple = ("fadmm-d",)
    seed: int = 0
    output_dir: str = OUTPUT_DIR
    xi: float = DEFAULT_XI
    theta: float = DEFAULT_THETA
    p: float = DEFAULT_P
    chi: Optional[float] = None
    beta0: Optional[float] = None  # None: per-application default
    record_diagnostics: bool = False
    iterations: Optional[int] = None
    seconds: Optional[float] = None
    r: int = suites.fda_rank
    rho: tuple = (10.0,)
    k: Optional[int] = None
    p_count: int = suites.srm_portfolios
    rho0: float = suites.recovery_box
    rho1: tuple = (10.0,)
    rho2: tuple = (1.0,)

    @property
    def max_iter(self):
        if self.iterations is not None:
            return self.iterations
        return UNBOUNDED_ITER if self.seconds is not None else DEFAULT_MAX_ITER


# section -> key -> (field name, parser)
def _bool(text):
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _float_list(text):
    return tuple(float(v) for v in text.split(",") if v.strip())


def _str_list(text):
    return tuple(v.strip().lower() for v in text.split(",") if v.strip())


SCHEMA = {
    "experiment": {"app": str.strip, "dataset": str.strip, "variants": _str_list,
                   "seed": int, "output_dir": str.strip},
    "solver": {"xi": float, "theta": float, "p": float, "chi": float, "beta0": float,
               "record_diagnostics": _bool},
    "budget": {"iterations": int, "seconds": float},
    "app": {"r": int, "rho": _float_list, "k": int, "p_count": int, "rho0": float,
            "rho1": _float_list, "rho2": _float_list},
}
REQUIRED = ("app", "dataset")


def _line_numbers(text):
    """(section, key) -> 1-based line of its definition."""
    lines, section = {}, None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        header = re.match(r"^\[([^\]]+)\]$", line)
        if header:
            section = header.group(1).strip().lower()
            lines[(section, None)] = lineno
            continue
        match = re.match(r"^([^=:#;\s][^=:]*?)\s*[=:]", line)
        if match and section is not None:
            lines.setdefault((section, match.group(1).strip().lower()), lineno)
    return lines


def parse_config(text):
    """Parses experiment INI text into a validated RunSpec."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as e:
        raise ConfigError(getattr(e, "option", None) or getattr(e, "section", "?"),
                          getattr(e, "lineno", None), str(e).splitlines()[0]) from None
    lines = _line_numbers(text)

    values = {}
    for section in parser.sections():
        schema = SCHEMA.get(section.lower())
        if schema is None:
            raise ConfigError(f"[{section}]", lines.get((section.lower(), None)), "unknown section")
        for key, raw in parser.items(section):
            line = lines.get((section.lower(), key))
            if key not in schema:
                raise ConfigError(key, line, f"unknown key in [{section}]")
            try:
                values[key] = schema[key](raw)
            except ValueError as e:
                raise ConfigError(key, line, f"cannot parse {raw!r}: {e}") from None

    for key in REQUIRED:
        if key not in values:
            raise ConfigError(key, None, "required key is missing")
    values["app"] = values["app"].lower()
    return _validated(RunSpec(**values), lines)


def _line_of(lines, key):
    for (section, name), lineno in lines.items():
        if name == key:
            return lineno
    return None


def _validated(spec, lines=None):
    lines = lines or {}
    if spec.app not in APPS:
        raise ConfigError("app", _line_of(lines, "app"), f"expected one of {list(APPS)}")
    if not spec.variants:
        raise ConfigError("variants", _line_of(lines, "variants"), "at least one variant is required")
    for variant in spec.variants:
        if variant not in [v.value for v in Variant]:
            raise ConfigError("variants", _line_of(lines, "variants"), f"unknown variant '{variant}'")
    if spec.iterations is not None and spec.iterations < 0:
        raise ConfigError("iterations", _line_of(lines, "iterations"), "must be non-negative")
    if spec.seconds is not None and not spec.seconds > 0:
        raise ConfigError("seconds", _line_of(lines, "seconds"), "must be positive")
    try:
        _solver_config(spec, spec.variants[0], _beta0(spec, 1.0))
    except ParameterError as e:
        raise ConfigError(e.name, _line_of(lines, e.name), e.reason) from None
    return spec


def _format(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(_format(v) for v in value)
    return str(value)


def to_config_text(spec):
    """INI text that parse_config turns back into an equal RunSpec."""
    defaults = RunSpec(app=spec.app, dataset=spec.dataset)
    out = []
    for section, schema in SCHEMA.items():
        body = []
        for key in schema:
            value = getattr(spec, key)
            if key not in REQUIRED and value == getattr(defaults, key):
                continue
            body.append(f"{key} = {_format(value)}")
        if body:
            out.append(f"[{section}]")
            out.extend(body)
            out.append("")
    return "\n".join(out)


def _solver_config(spec, variant, beta0):
    return SolverConfig(xi=spec.xi, theta=spec.theta, p=spec.p, chi=spec.chi, beta0=beta0,
                        max_iter=spec.max_iter, variant=variant, seed=spec.seed,
                        record_diagnostics=spec.record_diagnostics, max_seconds=spec.seconds)


def _beta0(spec, default):
    return spec.beta0 if spec.beta0 is not None else default


def build_instances(spec, ds):
    """(tag, ProblemComponents, beta0) for every point of the parameter grid."""
    instances = []
    if spec.app == "fda":
        for rho in spec.rho:
            _, P = build_fda(ds, spec.r, rho, spec.k)
            instances.append((f"rho-{rho:g}", P, _beta0(spec, suites.fda_beta0(rho))))
    elif spec.app == "srm":
        _, P = build_srm(ds, spec.p_count, spec.seed)
        instances.append((f"p-{spec.p_count}", P, _beta0(spec, suites.srm_beta0)))
    else:
        for rho1, rho2 in itertools.product(spec.rho1, spec.rho2):
            _, P = build_recovery(ds, spec.rho0, rho1, rho2, spec.k)
            instances.append((f"rho1-{rho1:g}_rho2-{rho2:g}", P, _beta0(spec, suites.recovery_beta0(rho1))))
    return instances


def _summary_row(tag, variant, trace=None, status="ok", reason=""):
    row = {"instance": tag, "variant": variant, "status": status, "iterations": 0,
           "final_objective": math.nan, "final_residual": math.nan, "flagged": 0, "reason": reason}
    if trace is not None:
        last = trace.records[-1]
        row.update(iterations=len(trace.step_records()), final_objective=last.objective,
                   final_residual=last.primal_residual, flagged=trace.flag_count)
    return row


def _write_metadata(spec, ds, path):
    meta = {
        "version": VERSION,
        "numpy": np.__version__,
        "seed": spec.seed,
        "dataset": {"name": ds.name, "shape": list(ds.Q.shape)},
        "config": to_config_text(spec),
        "spec": {k: (list(v) if isinstance(v, tuple) else v) for k, v in dataclasses.asdict(spec).items()},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True, default=str)


def run_experiment(spec, data_dir=DATA_DIR, log_callback=None, progress_callback=None):
    """
    Runs every variant on every instance of the grid from one shared initialization.

    Writes <output_dir>/<instance>/<variant>.csv, per-instance SVG plots,
    <output_dir>/summary.csv and <output_dir>/metadata.json. Variants the instance
    cannot support, and runs stopped by a degenerate denominator or a non-finite
    iterate, are reported in the summary instead of raising.
    """
    def _log(message):
        logger.info(message)
        if log_callback:
            log_callback(message)

    ds = resolve_dataset(spec.dataset, spec.seed, data_dir)
    os.makedirs(spec.output_dir, exist_ok=True)
    _write_metadata(spec, ds, os.path.join(spec.output_dir, "metadata.json"))

    traces, summary = [], []
    instances = build_instances(spec, ds)
    total = len(instances) * len(spec.variants)
    done = 0
    for tag, P, beta0 in instances:
        _log(f"Instance {P.name}: {len(spec.variants)} variant(s), beta0={beta0:g}")
        x0, y0, z0 = initial_point(P, spec.seed)
        folder = os.path.join(spec.output_dir, tag)
        os.makedirs(folder, exist_ok=True)
        finished = []
        for variant in spec.variants:
            cfg = _solver_config(spec, variant, beta0)
            try:
                trace = run(P, cfg, x0, y0, z0, log_callback=log_callback)
            except UnsupportedVariantError as e:
                _log(f"Skipping {variant}: {e.reason}")
                summary.append(_summary_row(tag, variant, status="skipped", reason=e.reason))
            except (DenominatorError, NonFiniteIterateError) as e:
                logger.warning("%s on %s stopped: %s", variant, P.name, e)
                summary.append(_summary_row(tag, variant, status="failed", reason=str(e)))
            else:
                trace.to_frame().to_csv(os.path.join(folder, f"{variant}.csv"), index=False)
                summary.append(_summary_row(tag, variant, trace))
                finished.append(trace)
            done += 1
            if progress_callback:
                progress_callback(done, total)

        if finished:
            emit_svg(finished, "objective", os.path.join(folder, "objective.svg"))
            emit_svg(finished, "e_plus", os.path.join(folder, "e_plus.svg"))
            if spec.record_diagnostics:
                emit_svg(finished, "crit", os.path.join(folder, "crit.svg"))
        traces.extend(finished)

    pd.DataFrame(summary, columns=SUMMARY_COLUMNS).to_csv(
        os.path.join(spec.output_dir, "summary.csv"), index=False)
    _log(f"Wrote {len(traces)} trace(s) to {spec.output_dir}")
    return traces


def load_summary(output_dir):
    return pd.read_csv(os.path.join(output_dir, "summary.csv"), keep_default_na=False)


def suite_specs(suite, output_dir, seed=0, iterations=None, seconds=None):
    """RunSpecs for `bench`: one per dataset of the suite."""
    if suite not in suites.suite_datasets:
        raise ConfigError("suite", None, f"expected one of {sorted(suites.suite_datasets)}")
    if iterations is None and seconds is None:
        seconds = 20.0
    common = dict(app=suite, variants=tuple(suites.suite_variants[suite]), seed=seed,
                  iterations=iterations, seconds=seconds)
    specs = []
    for dataset in suites.suite_datasets[suite]:
        out = os.path.join(output_dir, suite, dataset)
        if suite == "fda":
            specs.append(RunSpec(dataset=dataset, output_dir=out, r=suites.fda_rank,
                                 rho=tuple(suites.fda_rhos), **common))
        elif suite == "srm":
            specs.append(RunSpec(dataset=dataset, output_dir=out, p_count=suites.srm_portfolios,
                                 beta0=suites.srm_beta0, **common))
        else:
            # the penalty grid is a list of pairs, not a product
            for rho1, rho2 in suites.recovery_penalties:
                specs.append(RunSpec(dataset=dataset, output_dir=os.path.join(out, f"rho1-{rho1:g}_rho2-{rho2:g}"),
                                     rho0=suites.recovery_box, rho1=(rho1,), rho2=(rho2,), **common))
    return specs
