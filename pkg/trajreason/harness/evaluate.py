"""
Evaluation driver: per-scene prediction with timed inference, aggregated
into a :class:`MetricsReport`.
"""

import logging
from typing import List, Optional, Sequence, Union

from trajreason.errors import ModalityError
from trajreason.harness.checkpoint import Checkpoint, load_checkpoint, restore_backbone, verify_backbone
from trajreason.harness.factory import load_dataset
from trajreason.metrics import MetricsReport, SceneResult, aggregate, inference_efficiency, score_scene
from trajreason.models.backbone import FrozenBackbone
from trajreason.models.pipeline import predict
from trajreason.scenes.normalize import normalize_scene
from trajreason.scenes.types import Scene
from trajreason.telemetry import get_telemetry, trace_run

logger = logging.getLogger("trajreason.harness.evaluate")


def check_modality(scenes: Sequence[Scene], use_map: bool) -> None:
    """Raise :class:`ModalityError` listing scenes the configuration cannot evaluate."""
    missing_future = [s.id for s in scenes if s.future is None]
    if missing_future:
        raise ModalityError("scenes have no ground-truth future", missing_future)
    if use_map:
        missing_map = [s.id for s in scenes if s.map_raster is None]
        if missing_map:
            raise ModalityError("map enabled but scenes have no map raster", missing_map)


def evaluate_scenes(
    checkpoint: Checkpoint,
    scenes: Sequence[Scene],
    backbone: Optional[FrozenBackbone] = None,
) -> MetricsReport:
    """Score ``checkpoint`` on ``scenes``; only the ``predict`` calls are timed."""
    config = checkpoint.config
    ev = config.evaluation
    if backbone is None:
        backbone = restore_backbone(checkpoint)
    else:
        verify_backbone(checkpoint, backbone)
    predictor = checkpoint.predictor
    predictor.eval()
    check_modality(scenes, config.modality.use_map)

    normalized = [s if s.in_ego_frame else normalize_scene(s) for s in scenes]
    prompt = predictor.prompt_embeddings(backbone)
    telemetry = get_telemetry()

    rows: List[SceneResult] = []
    samples: List[float] = []
    with telemetry.start_span("evaluate", "EVALUATION", n_scenes=len(normalized), modality=config.modality.name):
        for scene in normalized:
            with telemetry.start_span("predict", "INFERENCE", scene_id=scene.id) as span:
                pred = predict(scene, predictor, backbone, prompt)
            samples.append(span.duration_s)
            rows.append(
                score_scene(
                    scene.id,
                    pred,
                    scene.future,
                    horizons=ev.horizons,
                    fde_horizons=ev.fde_horizons,
                    miss_threshold=ev.miss_threshold,
                    miss_mode=ev.miss_mode,
                    kind=scene.kind,
                    inference_s=span.duration_s,
                )
            )

    report = aggregate(rows, inference_efficiency=inference_efficiency(samples, ev.warmup))
    logger.info(
        f"Evaluated {report.n_scenes} scenes: "
        + ", ".join(f"ADE({k})={m:.3f}" for k, (m, _) in report.ade.items())
        + f", MR={report.miss_rate:.3f}, IE={report.inference_efficiency:.4f}s"
    )
    return report


@trace_run("evaluate")
def evaluate(
    checkpoint: Union[Checkpoint, str],
    dataset: Union[str, Sequence[Scene], None] = None,
    report_path: Optional[str] = None,
    csv_path: Optional[str] = None,
    backbone: Optional[FrozenBackbone] = None,
) -> MetricsReport:
    """
    Evaluate a checkpoint (object or archive path) on a dataset.

    ``dataset`` is a JSONL path or a scene list; by default the checkpoint's
    configured dataset is used. Writes the JSON report and the per-scene CSV
    when paths are given.
    """
    if isinstance(checkpoint, str):
        checkpoint = load_checkpoint(checkpoint)
    if dataset is None or isinstance(dataset, str):
        scenes = load_dataset(checkpoint.config, dataset)
    else:
        scenes = list(dataset)

    report = evaluate_scenes(checkpoint, scenes, backbone)
    if report_path:
        report.save_json(report_path)
    if csv_path:
        report.save_csv(csv_path)
    return report
