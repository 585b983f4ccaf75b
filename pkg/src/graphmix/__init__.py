"""Semi-supervised node and link classification on graphs: a two-layer
GCN co-trained with a weight-sharing fully-connected twin that learns
from mixed hidden states and model-predicted soft targets."""

from .evaluate import (
    MetricReport,
    accuracy,
    aggregate,
    binary_f1,
    class_soft_ranks,
    export_hidden,
    soft_rank,
)
from .graphdata import (
    UNLABELED,
    DataFormatError,
    Dataset,
    Graph,
    SignedEdgeList,
    SplitSpec,
    dualize,
    l1_normalize_rows,
    load_dataset,
    load_signed_edges,
    load_split,
    normalize_adjacency,
    random_split,
    save_dataset,
    save_split,
)
from .kernels import active_backend
from .model import (
    FeatureSource,
    MixSpec,
    ModelParams,
    fcn_forward,
    fcn_mixup_forward,
    gcn_forward,
    gcn_hidden,
    load_checkpoint,
    save_checkpoint,
)
from .nn import AdamConfig, Parameter, adam_step, dropout, sample_beta, softmax, softmax_cross_entropy
from .rng import Rng
from .sparse import CSRMatrix
from .synthetic import make_synthetic
from .trainer import (
    METHODS,
    EpochRecord,
    TrainConfig,
    TrainingDiverged,
    TrialResult,
    predict_targets,
    rampup_weight,
    run_trial,
    sharpen,
    train_graphmix,
    train_self_training,
    unsupervised_weight,
)

__version__ = "0.1.0"
