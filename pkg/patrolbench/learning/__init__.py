# The MIT License (MIT)
# Copyright © 2024 patrolbench developers

from .gae import RolloutBatch as RolloutBatch, gae as gae, trans_gae as trans_gae
from .normalizer import (
    EPSILON as EPSILON,
    ObservationNormalizer as ObservationNormalizer,
    RunningNormalizer as RunningNormalizer,
    running_normalizer as running_normalizer,
)
from .dataset import (
    DemoDataset as DemoDataset,
    DemoTuple as DemoTuple,
    build_demo_dataset as build_demo_dataset,
    discounted_returns as discounted_returns,
    load_demo_dataset as load_demo_dataset,
    normalize_returns as normalize_returns,
    save_demo_dataset as save_demo_dataset,
    team_reward as team_reward,
)
from .qlearn import (
    QLearnParams as QLearnParams,
    QTable as QTable,
    QTablePolicy as QTablePolicy,
    smdp_q_learn as smdp_q_learn,
)
