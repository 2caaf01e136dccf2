"""Command-line entry point for the full pipeline.

Subcommands: gen, ingest, train, eval, sweep, plot, study serve,
study report, oracle-study. Every run writes a JSON manifest of its
resolved configuration and seeds next to its primary output; re-running
the manifest's argv reproduces the output bit for bit.

Exit codes: 0 success, 2 configuration error, 3 data error,
4 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict
from pathlib import Path

from . import __version__
from .calibrate import fit_temperature
from .errors import ConfigError, DataError, NumericError, StormlocError
from .evaluation import (
    PreferenceTally,
    denoising_report,
    format_preference_table,
    simulated_rater,
    tally_choices,
)
from .grid import DEFAULT_GRID, GridSpec, cell_center
from .ingest import ingest_table
from .nn import kernels
from .nn.checkpoint import load_checkpoint, save_checkpoint
from .nn.unet import ModelConfig, PRESETS, build_unet, predict_proba
from .pack import read_pack, write_pack
from .render import Marker, render_quiver
from .study import sample_study_items
from .synth import NoiseModel, build_dataset
from .train import TrainConfig, save_history, train

log = logging.getLogger(__name__)

OUT_DIR_ENV = "STORMLOC_OUT_DIR"


def _out_path(value: str) -> Path:
    base = os.environ.get(OUT_DIR_ENV)
    path = Path(value)
    if base and not path.is_absolute():
        return Path(base) / path
    return path


def _write_manifest(target: Path, command: str, argv: list[str], params: dict) -> None:
    manifest = {
        "tool": f"stormloc {__version__}",
        "command": command,
        "argv": argv,
        "kernels": kernels.BACKEND,
        "params": params,
    }
    if target.is_dir():
        path = target / "manifest.json"
    else:
        path = Path(str(target) + ".manifest.json")
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _grid_from_args(args: argparse.Namespace) -> GridSpec:
    return GridSpec(
        lat0=args.lat0, lon0=args.lon0, dlat=args.dlat, dlon=args.dlon,
        height=args.grid_height, width=args.grid_width,
    )


def _add_grid_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--grid-height", type=int, default=DEFAULT_GRID.height)
    p.add_argument("--grid-width", type=int, default=DEFAULT_GRID.width)
    p.add_argument("--lat0", type=float, default=DEFAULT_GRID.lat0)
    p.add_argument("--lon0", type=float, default=DEFAULT_GRID.lon0)
    p.add_argument("--dlat", type=float, default=DEFAULT_GRID.dlat)
    p.add_argument("--dlon", type=float, default=DEFAULT_GRID.dlon)


def _cmd_gen(args: argparse.Namespace, argv: list[str]) -> int:
    noise = NoiseModel(
        corrupt_prob=args.corrupt_prob,
        offset_min_cells=args.offset_min,
        offset_max_cells=args.offset_max,
        background_sigma=args.background_sigma,
    )
    grid = _grid_from_args(args)
    data = build_dataset(args.n, noise, args.seed, grid)
    out = _out_path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_pack(data, out)
    _write_manifest(out, "gen", argv, {
        "n": args.n, "seed": args.seed, "noise": asdict(noise), "grid": asdict(grid),
    })
    sizes = {s: len(data.indices(s)) for s in ("train", "val", "test")}
    print(f"wrote {out} ({len(data)} samples, splits {sizes})")
    return 0


def _cmd_ingest(args: argparse.Namespace, argv: list[str]) -> int:
    grid = _grid_from_args(args)
    data = ingest_table(args.manifest, grid, seed=args.seed)
    out = _out_path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_pack(data, out)
    _write_manifest(out, "ingest", argv, {
        "manifest": str(args.manifest), "seed": args.seed, "grid": asdict(grid),
    })
    print(f"ingested {len(data)} samples into {out}")
    return 0


def _cmd_train(args: argparse.Namespace, argv: list[str]) -> int:
    data = read_pack(args.data)
    if not data.samples:
        raise DataError("dataset is empty")
    grid = data.samples[0].field.grid
    cfg = ModelConfig(grid=grid, encoder_filters=PRESETS[args.preset])
    model = build_unet(cfg, seed=args.model_seed)
    tcfg = TrainConfig(
        batch_size=args.batch_size, epochs=args.epochs, lr=args.lr, seed=args.seed,
    )
    result = train(model, data, tcfg)
    val = data.subset("val")
    fit_temperature(result.model, val)
    fit_temperature(result.best_model, val)
    out_dir = _out_path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_checkpoint(result.model, out_dir / "model.stck")
    save_checkpoint(result.best_model, out_dir / "model.best.stck")
    save_history(result.history, out_dir / "history.csv")
    _write_manifest(out_dir, "train", argv, {
        "data": str(args.data), "preset": args.preset, "model_seed": args.model_seed,
        "batch_size": tcfg.batch_size, "epochs": tcfg.epochs, "lr": tcfg.lr,
        "seed": tcfg.seed, "temperature": result.model.temperature,
        "best_epoch": result.history.best_epoch,
    })
    print(
        f"trained {args.epochs} epochs: final train {result.history.train_loss[-1]:.4f}, "
        f"val {result.history.val_loss[-1]:.4f}, temperature {result.model.temperature:.3f}"
    )
    print(f"checkpoints in {out_dir}")
    return 0


def _load_model_and_data(args: argparse.Namespace):
    data = read_pack(args.data)
    model = load_checkpoint(args.ckpt)
    if data.samples and data.samples[0].field.grid != model.config.grid:
        raise ConfigError("dataset grid does not match checkpoint grid")
    return model, data


def _cmd_eval(args: argparse.Namespace, argv: list[str]) -> int:
    model, data = _load_model_and_data(args)
    splits = args.splits.split(",")
    rows = []
    for split in splits:
        rep = denoising_report(model, data, split)
        rows.append((split, rep))
        print(
            f"{split}: {len(rep.records)} samples, {rep.n_corrupted} corrupted; "
            f"median error vs truth: model {rep.median_model_vs_truth_km:.1f} km, "
            f"label {rep.median_label_vs_truth_km:.1f} km"
        )
    if args.out_dir:
        out_dir = _out_path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for split, rep in rows:
            (out_dir / f"eval_{split}.csv").write_text(rep.to_csv())
        _write_manifest(out_dir, "eval", argv, {
            "data": str(args.data), "ckpt": str(args.ckpt), "splits": splits,
        })
        print(f"reports in {out_dir}")
    return 0


def _cmd_sweep(args: argparse.Namespace, argv: list[str]) -> int:
    rates = [float(r) for r in args.rates.split(",")]
    out_dir = _out_path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = ["corrupt_prob,split,n_corrupted,median_model_km,median_label_km"]
    for rate in rates:
        noise = NoiseModel(corrupt_prob=rate)
        data = build_dataset(args.n, noise, args.seed, DEFAULT_GRID)
        cfg = ModelConfig(grid=DEFAULT_GRID, encoder_filters=PRESETS["desk"])
        model = build_unet(cfg, seed=args.model_seed)
        result = train(model, data, TrainConfig(epochs=args.epochs, seed=args.seed))
        fit_temperature(result.model, data.subset("val"))
        for split in ("train", "test"):
            rep = denoising_report(result.model, data, split)
            lines.append(
                f"{rate},{split},{rep.n_corrupted},"
                f"{rep.median_model_vs_truth_km:.3f},{rep.median_label_vs_truth_km:.3f}"
            )
            print(lines[-1])
    (out_dir / "sweep.csv").write_text("\n".join(lines) + "\n")
    _write_manifest(out_dir, "sweep", argv, {
        "rates": rates, "n": args.n, "epochs": args.epochs,
        "seed": args.seed, "model_seed": args.model_seed,
    })
    print(f"sweep table in {out_dir / 'sweep.csv'}")
    return 0


def _cmd_plot(args: argparse.Namespace, argv: list[str]) -> int:
    data = read_pack(args.data)
    indices = data.indices(args.split) if args.split else range(len(data.samples))
    if args.index >= len(indices):
        raise ConfigError(f"index {args.index} out of range ({len(indices)} samples)")
    sample = data.samples[list(indices)[args.index]]
    grid = sample.field.grid
    markers = [Marker(point=cell_center(sample.label_cell, grid), style="label-orange")]
    prob = None
    if args.ckpt:
        model = load_checkpoint(args.ckpt)
        if model.config.grid != grid:
            raise ConfigError("checkpoint grid does not match dataset grid")
        prob = predict_proba(model, sample.field)
    svg = render_quiver(sample.field, markers, prob)
    out = _out_path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(svg)
    _write_manifest(out, "plot", argv, {
        "data": str(args.data), "ckpt": str(args.ckpt) if args.ckpt else None,
        "split": args.split, "index": args.index,
    })
    print(f"wrote {out}")
    return 0


def _cmd_oracle_study(args: argparse.Namespace, argv: list[str]) -> int:
    model, data = _load_model_and_data(args)
    tallies: dict[str, PreferenceTally] = {}
    for split in args.splits.split(","):
        items = sample_study_items(data, split, args.n, args.seed, model)
        choices = []
        for item in items:
            sample = data.samples[item.sample_index]
            choices.append(simulated_rater(model, sample))
        tallies[split] = tally_choices(choices)
    print(format_preference_table(tallies))
    if args.out:
        out = _out_path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(json.dumps(
            {s: asdict(t) | {"total": t.total} for s, t in tallies.items()},
            indent=2, sort_keys=True,
        ) + "\n")
        _write_manifest(out, "oracle-study", argv, {
            "data": str(args.data), "ckpt": str(args.ckpt),
            "n": args.n, "seed": args.seed, "splits": args.splits,
        })
    return 0


def _cmd_study_serve(args: argparse.Namespace, argv: list[str]) -> int:
    import uvicorn

    from .server import StudyState, create_app

    model, data = _load_model_and_data(args)
    state = StudyState(
        data=data,
        model=model,
        log_path=_out_path(args.log),
        splits=tuple(args.splits.split(",")),
        n_items=args.n,
        seed=args.seed,
    )
    app = create_app(state, static_dir=args.static_dir)
    print(f"serving study on http://{args.host}:{args.port} (log: {args.log})")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def _parse_counts(text: str) -> tuple[str, PreferenceTally]:
    try:
        name, numbers = text.split("=", 1)
        m, l, n = (int(x) for x in numbers.split(","))
    except ValueError as exc:
        raise ConfigError(f"--counts wants SPLIT=MODEL,LABEL,NEITHER, got {text!r}") from exc
    return name, tally_choices(["model"] * m + ["label"] * l + ["neither"] * n)


def _cmd_study_report(args: argparse.Namespace, argv: list[str]) -> int:
    tallies: dict[str, PreferenceTally] = {}
    if args.counts:
        for spec in args.counts:
            name, tally = _parse_counts(spec)
            tallies[name] = tally
    elif args.log and args.data and args.ckpt:
        from .server import StudyState

        model, data = _load_model_and_data(args)
        state = StudyState(
            data=data, model=model, log_path=args.log,
            splits=tuple(args.splits.split(",")), n_items=args.n, seed=args.seed,
        )
        for split in args.splits.split(","):
            rep = state.report(split)
            tallies[split] = PreferenceTally(
                prefer_model=rep["model"], prefer_label=rep["label"],
                neither=rep["neither"], p_value=rep["p_value"], vacuous=rep["vacuous"],
            )
    else:
        raise ConfigError("study report needs either --counts or --log with --data and --ckpt")
    print(format_preference_table(tallies))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stormloc",
        description="Storm-center localization from wind fields under label noise.",
    )
    parser.add_argument("--version", action="version", version=f"stormloc {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="info-level logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic dataset pack")
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--corrupt-prob", type=float, default=0.25)
    p.add_argument("--offset-min", type=int, default=3)
    p.add_argument("--offset-max", type=int, default=10)
    p.add_argument("--background-sigma", type=float, default=2.0)
    _add_grid_flags(p)
    p.add_argument("--out", required=True, help="pack file to write")
    p.set_defaults(fn=_cmd_gen)

    p = sub.add_parser("ingest", help="ingest a raw-field manifest into a pack")
    p.add_argument("--manifest", required=True)
    p.add_argument("--seed", type=int, default=0, help="split-assignment seed")
    _add_grid_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_ingest)

    p = sub.add_parser("train", help="train and calibrate a model")
    p.add_argument("--data", required=True, help="dataset pack")
    p.add_argument("--preset", choices=sorted(PRESETS), default="desk")
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0, help="shuffle seed")
    p.add_argument("--model-seed", type=int, default=0, help="weight-init seed")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(fn=_cmd_train)

    p = sub.add_parser("eval", help="denoising metrics against ground truth")
    p.add_argument("--data", required=True)
    p.add_argument("--ckpt", required=True)
    p.add_argument("--splits", default="train,test")
    p.add_argument("--out-dir", default=None)
    p.set_defaults(fn=_cmd_eval)

    p = sub.add_parser("sweep", help="corruption-rate grid of train + denoising report")
    p.add_argument("--rates", default="0.1,0.25,0.4")
    p.add_argument("--n", type=int, default=400)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--model-seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(fn=_cmd_sweep)

    p = sub.add_parser("plot", help="render one sample as an SVG quiver plot")
    p.add_argument("--data", required=True)
    p.add_argument("--ckpt", default=None, help="overlay this model's probability map")
    p.add_argument("--split", default=None, choices=(None, "train", "val", "test"))
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_plot)

    p = sub.add_parser("oracle-study", help="simulated-rater preference study")
    p.add_argument("--data", required=True)
    p.add_argument("--ckpt", required=True)
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--splits", default="train,test")
    p.add_argument("--out", default=None, help="optional JSON tally output")
    p.set_defaults(fn=_cmd_oracle_study)

    p = sub.add_parser("study", help="blinded human study service and reports")
    study_sub = p.add_subparsers(dest="study_command", required=True)

    q = study_sub.add_parser("serve", help="serve the study API and rater UI")
    q.add_argument("--data", required=True)
    q.add_argument("--ckpt", required=True)
    q.add_argument("--log", default="study_records.log")
    q.add_argument("--host", default="127.0.0.1")
    q.add_argument("--port", type=int, default=8000)
    q.add_argument("--n", type=int, default=200)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--splits", default="train,test")
    q.add_argument("--static-dir", default=None, help="built rater UI assets")
    q.set_defaults(fn=_cmd_study_serve)

    q = study_sub.add_parser("report", help="print the preference table")
    q.add_argument("--counts", action="append", default=None,
                   metavar="SPLIT=MODEL,LABEL,NEITHER",
                   help="tally literal counts instead of reading a log")
    q.add_argument("--log", default=None)
    q.add_argument("--data", default=None)
    q.add_argument("--ckpt", default=None)
    q.add_argument("--n", type=int, default=200)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--splits", default="train,test")
    q.set_defaults(fn=_cmd_study_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.fn(args, argv)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 4
    except StormlocError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
