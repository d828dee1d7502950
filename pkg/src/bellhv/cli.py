"""Command-line front end: ``bellhv run | verify | scan | enumerate | sample``.

Exit codes: 0 success, 1 acceptance failure, 2 input or schema error,
3 numerical validation error. Configs are JSON documents tagged
``"schema": "bellhv/1"``; either a bare model document or a wrapper::

    {"schema": "bellhv/1",
     "model": {...} | "model_path": "model.json",
     "scenario": {"a": 0, "a_prime": 90, "b": 225, "b_prime": 135, "units": "degrees"},
     "samples": 1000000, "seed": 7, "kappas": [0, 0.5, 1], "resolution": 64}

Angles are radians unless flagged otherwise (``"units"`` in a config,
``--degrees`` on the command line). Scenario entries may also be setting
labels such as ``"a'"`` for the finite models.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from pathlib import Path

import jsonschema

from . import __version__
from .acceptance import FAULTS, VerifyContext, format_report, run_criteria
from .analysis import (
    CANONICAL_SCENARIO,
    UnsupportedOperationError,
    chsh_exact,
    decoupling_scan,
    enumerate_binary_alphas,
    grid_search_chsh,
    mi_diagnostics,
    mi_summary,
    normalization_audit,
)
from .core import ChshReport, ChshScenario, PlanarSetting, ValidationError, chsh_value
from .models import (
    SCHEMA_TAG,
    AlphaConstruction,
    ConstructionError,
    ContinuousM3Model,
    DichotomicM3Model,
    HallModel,
    SchemaError,
    SingletReference,
    build_alpha_m3,
    model_from_dict,
)
from .models.spherical import MIN_SAMPLES
from .sampling import estimate_joint_mc
from .streams import SeededStream

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3
DEFAULT_SAMPLES = 1_000_000
DEFAULT_KAPPAS = [k / 100 for k in range(101)]

RUN_HEADER = ["x", "y", "p_pp", "p_pm", "p_mp", "p_mm", "correlation"]
SCAN_HEADER = ["kappa", "m_ab", "m_apb", "m_abp", "m_apbp", "x_bi"]
ENUMERATE_HEADER = ["alpha_bits", "x_bi"]
SAMPLE_HEADER = ["cell", "mean", "standard_error", "samples"]

_ANGLE = {"type": ["number", "string", "integer"]}

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["schema"],
    "properties": {
        "schema": {"const": SCHEMA_TAG},
        "model": {"type": "object"},
        "model_path": {"type": "string"},
        "scenario": {
            "type": "object",
            "required": ["a", "a_prime", "b", "b_prime"],
            "properties": {
                "a": _ANGLE,
                "a_prime": _ANGLE,
                "b": _ANGLE,
                "b_prime": _ANGLE,
                "units": {"enum": ["radians", "degrees"]},
            },
            "additionalProperties": False,
        },
        "samples": {"type": "integer", "minimum": 1000},
        "seed": {"type": "integer", "minimum": 0},
        "kappas": {"type": "array", "minItems": 1, "items": {"type": "number", "minimum": 0, "maximum": 1}},
        "resolution": {"type": "integer", "minimum": 8},
    },
    "oneOf": [{"required": ["model"]}, {"required": ["model_path"]}],
    "additionalProperties": False,
}


class InputError(Exception):
    """Bad command-line input or config; maps to exit code 2."""


def _fmt(x) -> str:
    return format(float(x), ".12g")


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _emit_csv(text: str, out) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# config --------------------------------------------------------------------

def load_config(path) -> dict:
    """Read and validate a config; a bare model document is wrapped as ``{"model": doc}``."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise InputError(f"config not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: malformed JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise InputError(f"{path}: config must be a JSON object")
    if "kind" in doc:
        doc = {"schema": doc.get("schema"), "model": doc}
    try:
        jsonschema.validate(doc, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(map(str, exc.absolute_path)) or "<root>"
        raise InputError(f"{path}: {where}: {exc.message}") from None
    if "model_path" in doc:
        model_path = Path(doc["model_path"])
        if not model_path.is_absolute():
            model_path = Path(path).parent / model_path
        try:
            doc["model"] = json.loads(model_path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise InputError(f"model file not found: {model_path}") from None
        except json.JSONDecodeError as exc:
            raise InputError(f"{model_path}: malformed JSON ({exc})") from None
    # an inline model inherits the config's schema tag
    doc["model"] = {"schema": doc["schema"], **doc["model"]}
    return doc


def scenario_from_config(spec) -> ChshScenario | None:
    if spec is None:
        return None
    values = [spec[k] for k in ("a", "a_prime", "b", "b_prime")]
    numeric = [isinstance(v, (int, float)) for v in values]
    if not any(numeric):
        return ChshScenario(*values)
    if not all(numeric):
        raise InputError("scenario mixes angles and setting labels")
    units = spec.get("units")
    if units is None:
        raise InputError('scenario angles need an explicit "units" entry ("radians" or "degrees")')
    return ChshScenario.from_angles(*values, degrees=(units == "degrees"))


def resolve_seed(cli_seed, config_seed=None) -> int:
    """--seed, then the config's seed, then BELLHV_SEED, then 0."""
    if cli_seed is not None:
        return int(cli_seed)
    if config_seed is not None:
        return int(config_seed)
    env = os.environ.get("BELLHV_SEED")
    if env:
        try:
            return int(env)
        except ValueError:
            raise InputError(f"BELLHV_SEED must be an integer, got {env!r}") from None
    return 0


def parse_setting(text: str, degrees: bool):
    """A planar angle (radians unless ``degrees``) or a setting label such as ``a'``."""
    try:
        value = float(text)
    except ValueError:
        return text
    return PlanarSetting.from_degrees(value) if degrees else PlanarSetting(value)


def _sample_count(args, cfg) -> int:
    samples = args.samples or cfg.get("samples") or DEFAULT_SAMPLES
    if samples < MIN_SAMPLES:
        raise InputError(f"need at least {MIN_SAMPLES} samples, got {samples}")
    return samples


def _describe(setting) -> str:
    if isinstance(setting, PlanarSetting):
        return _fmt(setting.angle)
    return str(setting)


# commands ------------------------------------------------------------------

def cmd_run(args) -> int:
    if not args.config:
        raise InputError("run needs --config")
    cfg = load_config(args.config)
    model = model_from_dict(cfg["model"])
    scenario = scenario_from_config(cfg.get("scenario"))
    resolution = args.resolution or cfg.get("resolution")
    seed = resolve_seed(args.seed, cfg.get("seed"))
    samples = _sample_count(args, cfg)
    out = sys.stdout

    print(f"bellhv {__version__}: model {cfg['model']['kind']}", file=out)
    if isinstance(model, AlphaConstruction):
        model = build_alpha_m3(model)

    if isinstance(model, SingletReference) and resolution:
        scenario, _ = grid_search_chsh(model.correlation, resolution, workers=args.workers)
        print(f"grid search at resolution {resolution}", file=out)
    if isinstance(model, (SingletReference, HallModel, ContinuousM3Model)) and scenario is None:
        raise InputError(f"a {cfg['model']['kind']} model needs scenario angles")
    scenario = scenario or CANONICAL_SCENARIO

    rows = []
    if isinstance(model, (HallModel, ContinuousM3Model)):
        estimates = []
        for k, (x, y) in enumerate(scenario.pairs()):
            est = estimate_joint_mc(model, x, y, samples, SeededStream(seed, k), args.workers)
            estimates.append(est)
            rows.append((x, y, est.joint))
        corrs = [e.correlation.mean for e in estimates]
        x_bi = chsh_value(*corrs)
        # the four estimates are independent
        se = math.sqrt(sum(e.correlation.standard_error ** 2 for e in estimates))
        report = ChshReport.from_correlators(*corrs, scenario=scenario)
        _print_pairs(rows, out)
        _print_correlators(report, out)
        print(f"X_BI = {x_bi:.6f} +/- {se:.6f} ({samples} samples per pair, seed {seed})", file=out)
        print("MI diagnostics: not available for continuous hidden variables", file=out)
    else:
        report = chsh_exact(model, scenario)
        rows = [(x, y, model.joint(x, y)) for x, y in scenario.pairs()]
        _print_pairs(rows, out)
        _print_correlators(report, out)
        print(f"X_BI = {report.x_bi:.6f}", file=out)
        if isinstance(model, SingletReference):
            print("MI diagnostics: not available for the singlet reference", file=out)
        else:
            summary = mi_summary(mi_diagnostics(model))
            print(
                "MI diagnostics: {tuples} ratios, {equal_one} equal to 1, {not_one} different "
                "({infinite} infinite), {indeterminate} indeterminate (0/0)".format(**summary),
                file=out,
            )
            audit = normalization_audit(model)
            print(f"normalization audit: {'passed' if audit.passed else 'FAILED'}, worst residual {audit.worst:.3g}",
                  file=out)
    if args.out:
        text = _csv_text(
            RUN_HEADER,
            [[_describe(x), _describe(y), *(_fmt(p) for p in j), _fmt(j.correlation)] for x, y, j in rows],
        )
        _emit_csv(text, args.out)
    return EXIT_OK


def _print_pairs(rows, out):
    for x, y, j in rows:
        print(
            f"P(s1,s2|{_describe(x)},{_describe(y)}): ++ {j.p_pp:.6f}  +- {j.p_pm:.6f}  "
            f"-+ {j.p_mp:.6f}  -- {j.p_mm:.6f}",
            file=out,
        )


def _print_correlators(report: ChshReport, out):
    print(
        f"M(a,b) = {report.m_ab:.6f}  M(a',b) = {report.m_apb:.6f}  "
        f"M(a,b') = {report.m_abp:.6f}  M(a',b') = {report.m_apbp:.6f}",
        file=out,
    )


def cmd_verify(args) -> int:
    seed = resolve_seed(args.seed)
    ctx = VerifyContext(seed=seed, workers=args.workers, fault=args.inject_fault)
    results = run_criteria(ctx)
    sys.stdout.write(format_report(results, ctx))
    for r in results:
        print(f"criterion {r.number}: {r.elapsed:.3f} s", file=sys.stderr)
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


def cmd_scan(args) -> int:
    if args.config:
        cfg = load_config(args.config)
        model = model_from_dict(cfg["model"])
        kappas = cfg.get("kappas", DEFAULT_KAPPAS)
        scenario = scenario_from_config(cfg.get("scenario"))
    else:
        model, kappas, scenario = AlphaConstruction(), DEFAULT_KAPPAS, None
    if not isinstance(model, (AlphaConstruction, DichotomicM3Model)):
        raise InputError("scan needs an alpha construction or a dichotomic M3 model")
    points = decoupling_scan(model, kappas, scenario)
    rows = [[_fmt(p.kappa), *(_fmt(m) for m in p.report.correlators), _fmt(p.x_bi)] for p in points]
    _emit_csv(_csv_text(SCAN_HEADER, rows), args.out)
    return EXIT_OK


def cmd_enumerate(args) -> int:
    selection = None
    if args.config:
        cfg = load_config(args.config)
        model = model_from_dict(cfg["model"])
        if not isinstance(model, AlphaConstruction):
            raise InputError("enumerate takes an alpha construction config")
        selection = model.selection
    results = enumerate_binary_alphas(selection)
    results = sorted(results, key=lambda r: (-r[1], "".join(map(str, r[0]))))
    rows = [["".join(map(str, bits)), _fmt(x)] for bits, x in results]
    _emit_csv(_csv_text(ENUMERATE_HEADER, rows), args.out)
    return EXIT_OK


def cmd_sample(args) -> int:
    cfg = load_config(args.config) if args.config else {}
    if args.model:
        doc = {"schema": SCHEMA_TAG, "kind": args.model}
        if args.model == "alpha":
            doc["alphas"] = list(AlphaConstruction().alphas)
        model = model_from_dict(doc)
    elif cfg:
        model = model_from_dict(cfg["model"])
    else:
        raise InputError("sample needs --model or --config")
    if isinstance(model, AlphaConstruction):
        model = build_alpha_m3(model)
    if not hasattr(model, "sample_outcomes"):
        raise InputError(f"{type(model).__name__} has no per-sample outcomes")
    if args.a is None or args.b is None:
        scenario = scenario_from_config(cfg.get("scenario")) if cfg else None
        if scenario is None:
            raise InputError("sample needs --a and --b (or a config scenario)")
        x, y = scenario.a, scenario.b
    else:
        x, y = parse_setting(args.a, args.degrees), parse_setting(args.b, args.degrees)
    samples = _sample_count(args, cfg)
    seed = resolve_seed(args.seed, cfg.get("seed"))
    est = estimate_joint_mc(model, x, y, samples, SeededStream(seed, 0), args.workers)
    rows = [[name, _fmt(c.mean), _fmt(c.standard_error), c.samples] for name, c in est.cells.items()]
    c = est.correlation
    rows.append(["correlation", _fmt(c.mean), _fmt(c.standard_error), c.samples])
    _emit_csv(_csv_text(SAMPLE_HEADER, rows), args.out)
    return EXIT_OK


# entry point -----------------------------------------------------------------

def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH")
    common.add_argument("--out", metavar="PATH")
    common.add_argument("--samples", type=_positive, metavar="N")
    common.add_argument("--seed", type=int, metavar="N")
    common.add_argument("--resolution", type=_positive, metavar="N")
    common.add_argument("--degrees", action="store_true", help="read angles given on the command line as degrees")
    common.add_argument("--workers", type=_positive, default=1, metavar="N")

    parser = argparse.ArgumentParser(prog="bellhv", description="Hidden-variable models against the CHSH bound.")
    parser.add_argument("--version", action="version", version=f"bellhv {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="exact (or sampled) CHSH report for a model config")
    verify = sub.add_parser("verify", parents=[common], help="run the acceptance criteria")
    verify.add_argument("--inject-fault", choices=FAULTS, help="corrupt a table to check that verify fails")
    sub.add_parser("scan", parents=[common], help="CHSH value along the background-decoupling path")
    sub.add_parser("enumerate", parents=[common], help="CHSH value of all 256 binary alpha assignments")
    sample = sub.add_parser("sample", parents=[common], help="raw Monte Carlo joint estimate at one setting pair")
    sample.add_argument("--model", choices=["hall", "m3c", "alpha"])
    sample.add_argument("--a", metavar="ANGLE")
    sample.add_argument("--b", metavar="ANGLE")
    return parser


COMMANDS = {"run": cmd_run, "verify": cmd_verify, "scan": cmd_scan, "enumerate": cmd_enumerate, "sample": cmd_sample}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    try:
        code = COMMANDS[args.command](args)
    except (InputError, SchemaError, UnsupportedOperationError) as exc:
        print(f"bellhv: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ValidationError, ConstructionError) as exc:
        print(f"bellhv: validation error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(f"bellhv: {args.command} took {time.perf_counter() - start:.3f} s", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
