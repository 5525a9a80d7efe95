"""
Command-line interface.

Subcommands: ``generate``, ``train``, ``evaluate``, ``ablate``, ``plot``.
Exit codes: 0 success, 1 other library error, 2 configuration error,
3 data error, 4 numerical divergence.
"""

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Dict, List, Optional

from trajreason.errors import ConfigError, DataError, TrajReasonError
from trajreason.harness.config import MODALITIES, TrainConfig, load_config

logger = logging.getLogger("trajreason.harness.cli")


def _split_list(value: Optional[str]) -> List[str]:
    return [item.strip() for item in (value or "").split(",") if item.strip()]


def _parse_mix(value: Optional[str]) -> Optional[Dict[str, float]]:
    if not value:
        return None
    mix = {}
    for item in _split_list(value):
        kind, sep, weight = item.partition("=")
        try:
            mix[kind] = float(weight) if sep else 1.0
        except ValueError as e:
            raise ConfigError(f"invalid mix weight '{item}'") from e
    return mix


def _parse_seeds(value: Optional[str]) -> Optional[List[int]]:
    try:
        return [int(s) for s in _split_list(value)] or None
    except ValueError as e:
        raise ConfigError(f"seeds must be integers, got '{value}'") from e


def _setup_telemetry(config: TrainConfig, args: argparse.Namespace) -> None:
    from trajreason.telemetry import setup_telemetry

    t = config.telemetry
    file_path = getattr(args, "telemetry_file", None) or t.file_path
    exporter = "file" if t.exporter == "file" and file_path else t.exporter
    if exporter == "file" and not file_path:
        raise ConfigError("telemetry.exporter 'file' requires telemetry.file_path")
    setup_telemetry(
        run_name=config.run_name,
        exporter=exporter,
        file_path=file_path,
        console=t.console or getattr(args, "console", False),
    )


def _config_from(args: argparse.Namespace) -> TrainConfig:
    return load_config(args.config) if getattr(args, "config", None) else TrainConfig().validate()


def cmd_generate(args: argparse.Namespace) -> int:
    from trajreason.scenes.io import save_scenes
    from trajreason.scenes.synthetic import GeneratorConfig, generate_dataset, load_generator_config

    params = load_generator_config(args.params) if args.params else GeneratorConfig()
    scenes = generate_dataset(args.count, seed=args.seed, mix=_parse_mix(args.mix), params=params, workers=args.workers)
    count = save_scenes(scenes, args.out)
    print(f"Wrote {count} scenes to {args.out}")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    from trajreason.harness.train import train

    config = _config_from(args)
    path = args.checkpoint or config.checkpoint_path or f"runs/{config.run_name}/checkpoint.zip"
    config = replace(config, checkpoint_path=path)
    _setup_telemetry(config, args)
    checkpoint = train(config)
    print(f"Trained {checkpoint.step} steps, final loss {checkpoint.final_loss}, checkpoint {path}")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    from trajreason.harness.checkpoint import load_checkpoint
    from trajreason.harness.evaluate import evaluate

    checkpoint = load_checkpoint(args.checkpoint)
    _setup_telemetry(checkpoint.config, args)
    csv_path = args.csv or str(Path(args.report).with_suffix(".csv"))
    report = evaluate(checkpoint, args.data, report_path=args.report, csv_path=csv_path)
    print(f"Wrote report for {report.n_scenes} scenes to {args.report} and {csv_path}")
    return 0


def cmd_ablate(args: argparse.Namespace) -> int:
    from trajreason.harness.ablation import compare_backbones, run_ablation, run_map_utilization
    from trajreason.harness.plots import render_ablation_plot

    config = _config_from(args)
    _setup_telemetry(config, args)
    seeds = _parse_seeds(args.seeds)
    if args.study == "modality":
        modalities = _split_list(args.modalities) or list(MODALITIES)
        table = run_ablation(config, modalities, seeds=seeds, output_dir=args.out)
    else:
        names = _split_list(args.backbones)
        if not names:
            raise ConfigError(f"--backbones is required for the {args.study} study")
        runner = compare_backbones if args.study == "backbones" else run_map_utilization
        table = runner(config, names, seeds=seeds, output_dir=args.out)
    if args.plot:
        render_ablation_plot(table, args.plot)
    print(table.to_markdown(), end="")
    return 0


def cmd_plot(args: argparse.Namespace) -> int:
    from trajreason.harness.checkpoint import load_checkpoint, restore_backbone
    from trajreason.harness.factory import load_dataset
    from trajreason.harness.plots import render_scene_plot
    from trajreason.models.pipeline import predict
    from trajreason.scenes.normalize import normalize_scene

    checkpoint = load_checkpoint(args.checkpoint)
    scenes = load_dataset(checkpoint.config, args.data)
    matches = [s for s in scenes if s.id == args.scene]
    if not matches:
        raise DataError(f"scene '{args.scene}' not found")
    scene = matches[0] if matches[0].in_ego_frame else normalize_scene(matches[0])
    backbone = restore_backbone(checkpoint)
    prediction = predict(scene, checkpoint.predictor, backbone)
    render_scene_plot(scene, {checkpoint.config.modality.name: prediction}, args.out)
    print(f"Wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trajreason", description="Frozen-backbone trajectory prediction")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    parser.add_argument("--console", action="store_true", help="print run spans to the console")
    parser.add_argument("--telemetry-file", help="append run spans to this JSONL file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a synthetic scene dataset")
    p.add_argument("--count", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mix", help="kind weights, e.g. straight=1,turn=2,intersection=2")
    p.add_argument("--params", help="generator YAML")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="train the adapter groups")
    p.add_argument("--config")
    p.add_argument("--checkpoint", help="override checkpoint_path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="evaluate a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", help="scene JSONL (default: the checkpoint's dataset)")
    p.add_argument("--report", required=True, help="metrics JSON output")
    p.add_argument("--csv", help="per-scene CSV output (default: the report path with a .csv suffix)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("ablate", help="run a comparison study")
    p.add_argument("--config")
    p.add_argument("--study", choices=("modality", "backbones", "map-utilization"), default="modality")
    p.add_argument("--modalities", help=f"comma list from {','.join(MODALITIES)}")
    p.add_argument("--backbones", help="comma list of backbone names")
    p.add_argument("--seeds", help="comma list of seeds; rows report the median")
    p.add_argument("--out", default="runs/ablation")
    p.add_argument("--plot", help="write a comparison bar chart here")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("plot", help="plot one scene with its prediction")
    p.add_argument("--scene", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", help="scene JSONL (default: the checkpoint's dataset)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except TrajReasonError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code
    except FileNotFoundError as e:
        logger.error(f"file not found: {e.filename}")
        return ConfigError.exit_code


if __name__ == "__main__":
    sys.exit(main())
