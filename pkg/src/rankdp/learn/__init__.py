"""Differentially private pairwise ranking: data, models, training."""

from .data import (
    MECHANISM_KINDS,
    RankingDataset,
    UserItemData,
    generate_dataset,
    ingest_order_file,
    privatize_dataset,
    read_feature_csv,
    read_ranking_csv,
    write_feature_csv,
    write_ranking_csv,
)
from .models import LinearTwoTower, MLPTwoTower, build_model
from .train import (
    PairAccuracy,
    TrainConfig,
    TrainResult,
    build_pairs,
    ordered_agreement,
    pairwise_accuracy,
    pairwise_loss_and_gradient,
    train,
)
