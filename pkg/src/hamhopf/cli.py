"""Command line interface: ``hamhopf <subcommand> [--config FILE] ...``.

Exit status is 0 on success, 2 when a hypothesis (H1-H4) fails and 1 on any
other error.  Reports are deterministic for a given config; the wall-clock
timestamp is written to a separate ``run_info.json``.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .errors import SCHEMA_ERROR, HopfError
from .kernels import BACKEND
from .pipeline import (
    MODELS,
    RunConfig,
    format_csv,
    inline_family,
    run_analyze,
    run_branches,
    run_resonance,
    run_sweep,
    run_verify,
    sweep_rows,
)
from .selftest import run_selftest
from .tolerances import DEFAULT

SCHEMA_VERSION = 1
SUBCOMMANDS = ("analyze", "resonance", "branches", "verify", "sweep", "selftest")

_num = {"type": "number"}
_num_list = {"type": "array", "items": _num}
CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "model": {
            "oneOf": [
                {"type": "string", "enum": list(MODELS)},
                {"type": "object", "required": ["jet", "omega"],
                 "properties": {"jet": {"type": "object", "required": ["dim", "terms"]},
                                "omega": {"type": "array"}, "group": {"type": "object"},
                                "momenta": {"type": "object"}}},
            ]
        },
        "lambda_interval": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2},
        "params": {"type": "object"},
        "tolerances": {"type": "object", "additionalProperties": {"type": "number", "exclusiveMinimum": 0}},
        "branches": {"type": "object", "properties": {"r": _num_list, "alpha": _num_list,
                                                      "xi": {"oneOf": [_num, _num_list]},
                                                      "psi": _num_list, "pi_n": _num_list}},
        "verify": {"type": "object", "properties": {"r": _num, "alpha": _num, "xi": _num,
                                                    "mode": {"enum": ["z1", "z2", "symmetric"]}}},
        "sweep": {"type": "object", "properties": {"npts": {"type": "integer", "minimum": 2}}},
        "seed": {"type": "integer", "minimum": 0},
    },
    "required": ["model"],
    "additionalProperties": False,
}


def _pointer(path) -> str:
    return "/" + "/".join(str(p) for p in path) if path else ""


def parse_config(text: str) -> RunConfig:
    """Validate a JSON config; raises SCHEMA_ERROR listing JSON-pointer locations."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise HopfError(SCHEMA_ERROR, "config is not valid JSON",
                        errors=[{"pointer": "", "message": str(err)}]) from None
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errs = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    problems = [{"pointer": _pointer(e.absolute_path), "message": e.message} for e in errs]
    if isinstance(data, dict):
        iv = data.get("lambda_interval")
        if isinstance(iv, list) and len(iv) == 2 and all(isinstance(x, (int, float)) for x in iv) \
                and not iv[0] < iv[1]:
            problems.append({"pointer": "/lambda_interval", "message": "interval must be nonempty (lo < hi)"})
    if problems:
        raise HopfError(SCHEMA_ERROR, "config does not match the schema", errors=problems)
    try:
        tols = DEFAULT.with_overrides(data.get("tolerances"))
    except KeyError as err:
        raise HopfError(SCHEMA_ERROR, "unknown tolerance",
                        errors=[{"pointer": f"/tolerances/{err.args[0]}", "message": "unknown tolerance"}]) from None
    model = data["model"]
    inline = None
    if isinstance(model, dict):
        inline = inline_family(model)      # raises H1_VIOLATION for degree 0/1 terms
        model = "inline"
    default_iv = {"coupled_oscillator": (0.9, 1.1)}.get(model, (0.0, 1.0))
    return RunConfig(model=model, lambda_interval=tuple(data.get("lambda_interval", default_iv)),
                     params=data.get("params", {}), tolerances=tols, branches=data.get("branches", {}),
                     verify=data.get("verify", {}), sweep=data.get("sweep", {}), inline=inline,
                     seed=int(data.get("seed", 0)))


def _default_config(model: str = "coupled_oscillator") -> str:
    return json.dumps({"schema_version": SCHEMA_VERSION, "model": model})


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def dumps(report: dict) -> str:
    return json.dumps(_clean(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


def run(command: str, cfg: RunConfig, jobs: int = 1) -> dict:
    if command == "analyze":
        return run_analyze(cfg)
    if command == "resonance":
        return run_resonance(cfg)
    if command == "branches":
        return run_branches(cfg)
    if command == "verify":
        return run_verify(cfg)
    if command == "sweep":
        return run_sweep(cfg, jobs)
    if command == "selftest":
        res = run_selftest(cfg.seed, cfg.tolerances)
        return {"command": "selftest", "tool_version": __version__, "seed": cfg.seed,
                "tolerances": cfg.tolerances.as_dict(), "suites": res}
    raise ValueError(command)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hamhopf", description="Symmetric Hamiltonian Hopf analysis")
    p.add_argument("--version", action="version", version=f"hamhopf {__version__} ({BACKEND} kernels)")
    sub = p.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="JSON config file")
        s.add_argument("--out", help="output directory")
        s.add_argument("--format", choices=("json", "csv"), default="json")
        s.add_argument("--tol", action="append", default=[], metavar="NAME=VALUE")
        s.add_argument("--jobs", type=int, default=1)
        s.add_argument("--seed", type=int, default=None)
        if name == "branches":
            s.add_argument("--xi", type=float, default=None, help="drift velocity (single value)")
    return p


def _apply_flags(cfg: RunConfig, args) -> RunConfig:
    if args.tol:
        over = {}
        for item in args.tol:
            if "=" not in item:
                raise HopfError(SCHEMA_ERROR, "--tol expects NAME=VALUE",
                                errors=[{"pointer": "/tolerances", "message": item}])
            k, v = item.split("=", 1)
            over[k.strip()] = float(v)
        try:
            cfg.tolerances = cfg.tolerances.with_overrides(over)
        except (KeyError, ValueError) as err:
            raise HopfError(SCHEMA_ERROR, "bad tolerance override",
                            errors=[{"pointer": "/tolerances", "message": str(err)}]) from None
    if args.seed is not None:
        cfg.seed = args.seed
    if getattr(args, "xi", None) is not None:
        cfg.branches = {**cfg.branches, "xi": [args.xi]}
    return cfg


def _emit(text: str, out_dir, filename: str):
    if out_dir:
        path = Path(out_dir)
        path.mkdir(parents=True, exist_ok=True)
        with open(path / filename, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    started = time.time()
    status = 0
    try:
        text = Path(args.config).read_text(encoding="utf-8") if args.config else _default_config()
        cfg = _apply_flags(parse_config(text), args)
        if args.command == "sweep" and args.format == "csv":
            header, rows = sweep_rows(cfg, args.jobs)
            _emit(format_csv(header, rows), args.out, "sweep.csv")
            report = None
        elif args.command == "branches" and args.format == "csv":
            rep = run(args.command, cfg, args.jobs)
            lines = ["r,lambda,alpha,xi," + ",".join(f"c{k + 1}" for k in range(2)) + ",admissible"]
            for b in rep["branches"]:
                c = b["coords"]
                lines.append(",".join(format(float(x), ".17g") for x in [b["r"], b["lambda"], b["alpha"], b["xi"]] + c[:2])
                             + f",{int(b['admissible'])}")
            _emit("\n".join(lines) + "\n", args.out, "branches.csv")
            report = None
        else:
            report = run(args.command, cfg, args.jobs)
            if args.command == "selftest" and report["suites"]["total_failures"]:
                status = 1
    except HopfError as err:
        report = {"command": args.command, "tool_version": __version__, "error": err.to_dict()}
        status = 2 if err.is_hypothesis_failure else 1
    except Exception as err:  # noqa: BLE001 - serialized into the report
        report = {"command": args.command, "tool_version": __version__,
                  "error": {"code": "INTERNAL", "message": f"{type(err).__name__}: {err}"}}
        status = 1
    if report is not None:
        report["exit_status"] = status
        _emit(dumps(report), args.out, f"{args.command}.json")
    if args.out:
        info = {"timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(started)),
                "elapsed_s": round(time.time() - started, 3), "backend": BACKEND}
        _emit(json.dumps(info, sort_keys=True, indent=2) + "\n", args.out, "run_info.json")
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
