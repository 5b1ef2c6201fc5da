"""Training, evaluation protocols, probes and reporting."""

from .data import BatchSampler, CorpusData, collate, full_batch
from .evaluate import (corpus_hash, distorted_view, evaluate, f1_score,
                       false_alarm, image_metrics, pixel_counts)
from .probes import (ABLATION_VARIANTS, ablation_suite, agm_probe,
                     bias_statistic, gate_ablation, score_histogram,
                     variant_config)
from .report import EvalRow, MetricsReport
from .train import TrainConfig, alignment_accuracy, compute_losses, train

__all__ = [
    "ABLATION_VARIANTS", "BatchSampler", "CorpusData", "EvalRow",
    "MetricsReport", "TrainConfig", "ablation_suite", "agm_probe",
    "alignment_accuracy", "bias_statistic", "collate", "compute_losses",
    "corpus_hash", "distorted_view", "evaluate", "f1_score", "false_alarm",
    "full_batch", "gate_ablation", "image_metrics", "pixel_counts",
    "score_histogram", "train", "variant_config",
]
