"""Command-line front end.

Every subcommand is a thin wrapper over the harness so scripted runs and
tests share one code path.  All output files are deterministic for a
fixed seed: floats are serialized via repr and JSON keys are sorted.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import COUPLING_VARS
from .channel import ChannelConfig
from .dataset import read_log, write_log
from .errors import ConfigurationError, ParseError, TeleopsimError
from .harness import (
    ScenarioConfig, eval_closed_loop, eval_open_loop, gen_data, run_case,
    train_models,
)

USAGE_EXIT = 2


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="teleopsim",
        description="Bilateral teleoperation simulator for a slip-prone UGV "
                    "with delay-compensating predictors.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one scenario and write its log")
    sim.add_argument("--config", required=True, help="scenario JSON file")
    sim.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    sim.add_argument("--out", default="runs", help="output directory")

    gd = sub.add_parser("gen-data", help="generate training/test datasets")
    gd.add_argument("--out", default="data", help="output directory")
    gd.add_argument("--duration-train", type=float, default=300.0)
    gd.add_argument("--duration-test", type=float, default=30.0)
    gd.add_argument("--base-delay", type=float, default=1.0)
    gd.add_argument("--jitter", type=float, default=0.25)

    tr = sub.add_parser("train", help="train predictor checkpoints")
    tr.add_argument("--data", required=True, help="directory with train_*.csv / test_*.csv")
    tr.add_argument("--out", default="models", help="checkpoint directory")
    tr.add_argument("--variable", default="all",
                    choices=("all",) + tuple(COUPLING_VARS))
    tr.add_argument("--preset", default="desk", choices=("desk", "reference"))
    tr.add_argument("--physics-weight", type=float, default=0.1)
    tr.add_argument("--epochs", type=int, default=None)
    tr.add_argument("--seed", type=int, default=0)

    ol = sub.add_parser("eval-open-loop", help="replay a log through both predictors")
    ol.add_argument("--log", required=True, help="recorded run CSV")
    ol.add_argument("--models", required=True, help="checkpoint directory")
    ol.add_argument("--base-delay", type=float, default=1.0)
    ol.add_argument("--jitter", type=float, default=0.25)
    ol.add_argument("--out", default=None, help="report JSON path (default stdout)")

    cl = sub.add_parser("eval-closed-loop", help="three-case persona sweep")
    cl.add_argument("--models", required=True, help="checkpoint directory")
    cl.add_argument("--out", default="eval", help="report directory")
    cl.add_argument("--track", default="A")
    cl.add_argument("--base-delay", type=float, default=1.0)
    cl.add_argument("--jitter", type=float, default=0.25)
    cl.add_argument("--duration", type=float, default=400.0)

    gc = sub.add_parser("gradcheck", help="finite-difference gradient audit")
    gc.add_argument("--seed", type=int, default=0)
    gc.add_argument("--physics-weight", type=float, default=0.1)
    gc.add_argument("--tolerance", type=float, default=1e-4)

    sv = sub.add_parser("serve", help="websocket cockpit bridge")
    sv.add_argument("--host", default="127.0.0.1")
    sv.add_argument("--port", type=int, default=8321)
    sv.add_argument("--models", default=None, help="checkpoint directory for pilstm mode")
    return ap


def _cmd_simulate(args) -> int:
    config = ScenarioConfig.from_json(args.config)
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result, report = run_case(config)
    write_log(out / "log.csv", result.log)
    (out / "report.json").write_text(json.dumps(report, sort_keys=True, indent=2))
    print(f"case={report['case']} samples={report['n_samples']} "
          f"completion={report['completion_time']}")
    return 0


def _cmd_gen_data(args) -> int:
    paths = gen_data(args.out, duration_train=args.duration_train,
                     duration_test=args.duration_test,
                     base_delay=args.base_delay, jitter=args.jitter)
    for kind in ("train", "test"):
        for p in paths[kind]:
            print(p)
    return 0


def _cmd_train(args) -> int:
    variables = COUPLING_VARS if args.variable == "all" else (args.variable,)
    summary = train_models(args.data, args.out, variables=variables,
                           preset=args.preset, physics_weight=args.physics_weight,
                           epochs=args.epochs, seed=args.seed)
    for var, rep in summary.items():
        heldout = rep.get("heldout", {})
        rms = {k: round(v["rmse"], 6) for k, v in heldout.items()}
        print(f"{var}: checkpoint={rep['checkpoint']} best_epoch={rep['best_epoch']} "
              f"heldout_rmse={rms}")
    return 0


def _cmd_eval_open_loop(args) -> int:
    log = read_log(args.log)
    cfg = ChannelConfig(args.base_delay, args.jitter)
    report = eval_open_loop(log, cfg, args.models)
    slim = {
        "seed": report["seed"],
        "skip": report["skip"],
        "variables": {
            var: {"conv": v["conv"], "pilstm": v["pilstm"]}
            for var, v in report["variables"].items()
        },
    }
    text = json.dumps(slim, sort_keys=True, indent=2)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text)
    else:
        print(text)
    return 0


def _cmd_eval_closed_loop(args) -> int:
    report = eval_closed_loop(args.models, args.out, track_id=args.track,
                              base_delay=args.base_delay, jitter=args.jitter,
                              duration=args.duration)
    md = report["mean_delta_n"]
    print(f"wrote tables3.csv tables4.csv completion.csv report.json to {args.out}")
    print(f"mean delta_n: conv={md['conv']} pilstm={md['pilstm']}")
    return 0


def _cmd_gradcheck(args) -> int:
    from .pilstm.gradcheck import run_gradcheck
    rep = run_gradcheck(seed=args.seed, physics_weight=args.physics_weight)
    print(f"max_rel_err={rep['max_rel_err']:.3e} worst={rep['worst_component']} "
          f"n_components={rep['n_components']}")
    if rep["max_rel_err"] >= args.tolerance:
        print(f"FAIL: exceeds tolerance {args.tolerance}", file=sys.stderr)
        return 1
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .bridge import build_app

    app = build_app(model_dir=args.models)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


_DISPATCH = {
    "simulate": _cmd_simulate,
    "gen-data": _cmd_gen_data,
    "train": _cmd_train,
    "eval-open-loop": _cmd_eval_open_loop,
    "eval-closed-loop": _cmd_eval_closed_loop,
    "gradcheck": _cmd_gradcheck,
    "serve": _cmd_serve,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _DISPATCH[args.command](args)
    except (ConfigurationError, ParseError) as e:
        print(f"error: {e}", file=sys.stderr)
        return USAGE_EXIT
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return USAGE_EXIT
    except TeleopsimError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
