"""
RPTM Experiments
Embedding-level benchmarks: the positive-policy ablation and the
lambda_tri sensitivity sweep. Models train on one draw of identities and
are scored on a held-out draw.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Union

import numpy as np

from .config import MiningConfig, TrainConfig
from .evalrank import evaluate, pairwise_distances
from .learn import embed, train, windowed_descent
from .learn.trainer import RANDOM_POLICY
from .synth import ClusterSpec, embedding_manifest, generate_embeddings, simulated_matrix
from .tabular import write_csv

logger = logging.getLogger(__name__)

POLICIES = ("min", "mean", "max", RANDOM_POLICY)
LAMBDAS = (0.5, 1.0, 2.0)
SEEDS = (0, 1, 2, 3, 4)
RESULT_HEADER = ("arm", "seed", "mAP", "cmc@1", "cmc@5", "cmc@10", "first_total",
                 "final_total", "descent")

# Poses sit further from each other than ids do, and clusters touch.
BENCHMARK_SPEC = ClusterSpec(dim=8, within_sigma=1.0, pose_separation=6.0, id_separation=2.0)
# Evaluation identities come from a disjoint draw of the generator.
HELD_OUT_OFFSET = 10_000


@dataclass(frozen=True)
class ArmResult:
    """Metrics and loss trend of one (arm, seed) run"""
    arm: str
    seed: int
    metrics: Dict[str, float]
    first_total: float
    final_total: float
    descent: bool


@dataclass(frozen=True)
class BenchmarkData:
    """Training clusters and held-out evaluation clusters, z-scored alike"""
    train_inputs: np.ndarray
    train_ids: List[str]
    train_poses: np.ndarray
    test_inputs: np.ndarray
    test_ids: List[str]
    test_poses: np.ndarray


def benchmark_config(epochs: int = 20, **overrides) -> TrainConfig:
    """Training settings for the 200-point benchmark"""
    return TrainConfig(epochs=epochs, lr0=0.002, **overrides)


def benchmark_data(seed: int, spec: Optional[ClusterSpec] = None) -> BenchmarkData:
    spec = spec or BENCHMARK_SPEC
    vectors, ids, poses = generate_embeddings(spec, seed)
    test_vectors, test_ids, test_poses = generate_embeddings(spec, seed + HELD_OUT_OFFSET)
    mean, std = vectors.mean(axis=0), vectors.std(axis=0) + 1e-12
    return BenchmarkData((vectors - mean) / std, ids, poses,
                         (test_vectors - mean) / std, test_ids, test_poses)


def query_mask(pose_labels: np.ndarray) -> np.ndarray:
    """First point of every pose group is a query"""
    _, first = np.unique(pose_labels, return_index=True)
    mask = np.zeros(len(pose_labels), dtype=bool)
    mask[first] = True
    return mask


def held_out_metrics(vectors: np.ndarray, ids: Sequence[str],
                     poses: np.ndarray) -> Dict[str, float]:
    """Pose-group queries against the remaining points, matched by id"""
    queries = query_mask(poses)
    labels = np.asarray(ids)
    dists = pairwise_distances(vectors[queries], vectors[~queries])
    return evaluate(dists, labels[queries], labels[~queries])


def run_arm(
    arm: str,
    seed: int,
    cfg: TrainConfig,
    policy: str = "mean",
    spec: Optional[ClusterSpec] = None,
) -> ArmResult:
    """Train on one draw of identities, score on another"""
    data = benchmark_data(seed, spec)
    manifest = embedding_manifest(data.train_ids)
    matrix = simulated_matrix(manifest, data.train_poses, seed)

    mining = MiningConfig() if policy == RANDOM_POLICY else MiningConfig(policy=policy)
    model, history = train(manifest, matrix, cfg.model_copy(update={"seed": seed}), mining,
                           inputs=data.train_inputs, positive_policy=policy)

    metrics = held_out_metrics(embed(model, data.test_inputs), data.test_ids, data.test_poses)
    result = ArmResult(arm, seed, metrics, history[0].total, history[-1].total,
                       windowed_descent(history))
    logger.info("%s seed %d: mAP=%.4f cmc@1=%.4f loss %.3f -> %.3f", arm, seed,
                metrics["mAP"], metrics["cmc@1"], result.first_total, result.final_total)
    return result


def run_policy_ablation(
    seeds: Iterable[int] = SEEDS,
    policies: Sequence[str] = POLICIES,
    epochs: int = 20,
    spec: Optional[ClusterSpec] = None,
) -> List[ArmResult]:
    """Each tau policy against random same-id positives"""
    cfg = benchmark_config(epochs)
    return [run_arm(policy, seed, cfg, policy, spec) for seed in seeds for policy in policies]


def run_lambda_sweep(
    lambdas: Sequence[float] = LAMBDAS,
    seeds: Iterable[int] = (0,),
    epochs: int = 20,
    spec: Optional[ClusterSpec] = None,
) -> List[ArmResult]:
    """RPTM-mean training at each lambda_tri"""
    return [run_arm(f"lambda_tri={lam:g}", seed, benchmark_config(epochs, lambda_tri=lam),
                    "mean", spec)
            for seed in seeds for lam in lambdas]


def summarize(results: Sequence[ArmResult]) -> Dict[str, Dict[str, float]]:
    """Seed-averaged metrics per arm, in first-seen arm order"""
    arms: Dict[str, List[ArmResult]] = {}
    for r in results:
        arms.setdefault(r.arm, []).append(r)
    summary = {}
    for arm, runs in arms.items():
        summary[arm] = {name: float(np.mean([r.metrics[name] for r in runs]))
                        for name in runs[0].metrics}
        summary[arm]["descent"] = float(np.mean([r.descent for r in runs]))
    return summary


def write_results(results: Sequence[ArmResult], path: Union[str, Path]) -> None:
    write_csv(path, RESULT_HEADER, (
        (r.arm, r.seed, *(f"{r.metrics[k]:.6f}" for k in ("mAP", "cmc@1", "cmc@5", "cmc@10")),
         f"{r.first_total:.6f}", f"{r.final_total:.6f}", int(r.descent))
        for r in results
    ))
