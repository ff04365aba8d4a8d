"""Command-line entry points for the meltpool toolkit.

Subcommands: ingest, benchmark, tune, train, predict, identify, rosenthal,
report, serve. Every command is a pure function of its config and input
files; outputs carry no timestamps, so re-runs are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from collections import Counter
from pathlib import Path

import numpy as np

from . import report as report_mod
from .bundle import ModelBundle, load_bundle, save_bundle
from .config import ConfigError, load_config
from .dataset import load_dataset, zscore_fit
from .errors import MpnetError
from .evaluate import r2 as r2_metric
from .featurize import Target, assemble
from .learners import train as train_model
from .materials import lookup_material
from .powerlaw import (
    FitConfig,
    covariates_from_records,
    evaluate_power_law,
    fit_power_law,
)
from .rosenthal import geometry_estimates
from .server import ModelRegistry, serve
from .tune import default_space, search


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1)


def _write_or_print(obj, out: str | None):
    text = _dump(obj)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    print(text)


def cmd_ingest(args) -> int:
    ds = load_dataset(args.data)
    summary = {
        "source": str(args.data),
        "rows": len(ds),
        "processes": dict(sorted(Counter(r.process.value for r in ds).items())),
        "materials": dict(sorted(Counter(r.material_name for r in ds).items())),
        "label_coverage": {
            name: sum(1 for r in ds if r.get(name) is not None)
            for name in ("depth", "width", "length", "defect_class")
        },
        "classes": dict(
            sorted(
                Counter(
                    r.defect_class.value for r in ds if r.defect_class is not None
                ).items()
            )
        ),
    }
    _write_or_print(summary, args.out)
    return 0


def _benchmark(args, figures: bool) -> int:
    config = load_config(args.config, seed_override=args.seed)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    ds = load_dataset(config.data)
    rows = report_mod.run_benchmark(config, ds)
    produced = [
        report_mod.write_benchmark_csv(rows, outdir / "benchmark.csv"),
        report_mod.write_benchmark_json(rows, outdir / "benchmark.json"),
    ]
    if figures:
        produced += report_mod.render_benchmark_figures(rows, outdir)
        produced += report_mod.render_learning_curves(config, outdir, ds)
    for p in produced:
        print(p)
    return 0


def cmd_benchmark(args) -> int:
    return _benchmark(args, figures=False)


def cmd_report(args) -> int:
    return _benchmark(args, figures=True)


def cmd_tune(args) -> int:
    config = load_config(args.config, seed_override=args.seed)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    ds = load_dataset(config.data)
    kind = config.models[0].kind
    result = search(
        default_space(kind),
        kind,
        ds,
        config.featurizations[0].spec,
        budget=config.budget,
        seed=config.seed,
        k=config.k,
    )
    trials_path = outdir / "trials.csv"
    with trials_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["trial", "params", "objective", "error"])
        for t in result.trials:
            writer.writerow(
                [
                    t.index,
                    json.dumps(t.params, sort_keys=True),
                    "" if t.objective is None else f"{t.objective:.10g}",
                    t.error or "",
                ]
            )
    best = {
        "kind": kind,
        "objective": result.objective_name,
        "best_objective": result.best_objective,
        "best_trial": result.best_index,
        "best_params": result.best_params,
    }
    (outdir / "best.json").write_text(_dump(best) + "\n", encoding="utf-8")
    print(trials_path)
    print(outdir / "best.json")
    return 0


def cmd_train(args) -> int:
    config = load_config(args.config, seed_override=args.seed)
    ds = load_dataset(config.data)
    feat = config.featurizations[0]
    model_cfg = config.models[0]
    matrix = assemble(ds, feat.spec)
    stats = zscore_fit(matrix)
    x = stats.transform(matrix.rows)
    model = train_model(
        model_cfg.kind,
        x,
        matrix.target_values,
        model_cfg.hyperparams,
        seed=config.seed,
        task="classification" if config.target is Target.DEFECT_CLASS else "regression",
        columns=matrix.column_names,
    )
    out = Path(args.out)
    bundle = ModelBundle(name=out.stem, model=model, spec=feat.spec, stats=stats)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_bundle(bundle, out)
    print(out)
    return 0


def cmd_predict(args) -> int:
    from .server import record_from_query

    bundle = load_bundle(args.model)
    payload = json.loads(Path(args.record).read_text(encoding="utf-8"))
    record = record_from_query(payload)
    prediction = bundle.predict_record(record)
    if bundle.model.task == "classification":
        from .dataset import CLASS_ORDER

        out = {
            "model": bundle.name,
            "class_probs": {
                CLASS_ORDER[i].value: float(p) for i, p in enumerate(prediction)
            },
        }
    else:
        out = {"model": bundle.name, f"{bundle.spec.target.value}_um": prediction * 1e6}
    _write_or_print(out, args.out)
    return 0


def cmd_identify(args) -> int:
    ds = load_dataset(args.data)
    x, y, _ = covariates_from_records(ds.records, args.t0, args.target)
    model = fit_power_law(x, y, FitConfig(seed=args.seed or 0))
    doc = model.to_dict()
    doc["target"] = args.target
    doc["n_samples"] = int(len(y))
    rendering = model.render(label=args.target)
    if args.out:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "equation.json").write_text(_dump(doc) + "\n", encoding="utf-8")
        (outdir / "equation.txt").write_text(rendering + "\n", encoding="utf-8")
        report_mod.render_identify_figure(
            y, evaluate_power_law(model, x), args.target, outdir / "identified_fit.png"
        )
    print(_dump(doc))
    print(rendering)
    return 0


def cmd_rosenthal(args) -> int:
    mat = lookup_material(args.material)
    if args.q is not None:
        q = args.q
    else:
        q = args.eta * args.power
    out = geometry_estimates(q, args.velocity, mat, args.t0)
    out["absorbed_power_w"] = q
    _write_or_print(out, args.out)
    return 0


def cmd_serve(args) -> int:
    models_dir = args.models or os.environ.get("MPNET_DATA_DIR")
    if not models_dir:
        print("serve: provide --models DIR or set MPNET_DATA_DIR", file=sys.stderr)
        return 2
    registry = ModelRegistry.load_dir(
        models_dir, ambient_temp=args.t0, min_absorptivity=args.eta
    )
    httpd = serve(registry, host=args.host, port=args.port, static_dir=args.static)
    host, port = httpd.server_address[:2]
    # flush so wrappers that pipe stdout see the address immediately
    print(f"serving {len(registry.bundles)} models on http://{host}:{port}", flush=True)
    try:
        httpd.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        httpd.server_close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mpnet", description="Meltpool characterization toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a dataset file and summarize it")
    p.add_argument("--data", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_ingest)

    for name, func, help_text in (
        ("benchmark", cmd_benchmark, "cross-validate featurization x model pairs"),
        ("report", cmd_report, "benchmark plus rendered figures"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", required=True)
        p.set_defaults(func=func)

    p = sub.add_parser("tune", help="random hyperparameter search")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("train", help="train one model bundle")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict from a saved model bundle")
    p.add_argument("--model", required=True)
    p.add_argument("--record", required=True, help="JSON file with the request record")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("identify", help="fit the dimension-constrained power law")
    p.add_argument("--data", required=True)
    p.add_argument("--target", choices=["depth", "width", "length"], default="depth")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--t0", type=float, default=298.15)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("rosenthal", help="closed-form geometry estimates")
    p.add_argument("--material", required=True)
    p.add_argument("--velocity", type=float, required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--q", type=float, default=None, help="absorbed power, W")
    group.add_argument("--power", type=float, default=None, help="beam power, W")
    p.add_argument("--eta", type=float, default=0.3, help="absorptivity for Q = eta * P")
    p.add_argument("--t0", type=float, default=298.15)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_rosenthal)

    p = sub.add_parser("serve", help="serve predictions over HTTP")
    p.add_argument("--models", default=None, help="bundle directory (default $MPNET_DATA_DIR)")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8173)
    p.add_argument("--static", default=None, help="static assets directory (explorer UI)")
    p.add_argument("--t0", type=float, default=298.15)
    p.add_argument("--eta", type=float, default=0.3)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except MpnetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
