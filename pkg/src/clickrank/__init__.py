"""Click-feedback retrieval: text search, like/dislike re-ranking, adapter training."""

from ._kernels import available_backends, backend_name
from .encoders import (
    Adapter,
    EncodedIndex,
    EncoderStack,
    encode_dataset,
    load_checkpoint,
    save_checkpoint,
)
from .evaluation import (
    ProtocolParams,
    Report,
    diversity_grid,
    feedback_count_grid,
    lambda_grid,
    mean_rank,
    median_rank,
    recall_at_k,
    run_ablation,
    run_protocol,
)
from .oracle import OracleConfig, attribute_iou, give_feedback
from .ranker import (
    Feedback,
    RankerParams,
    Ranking,
    rank,
    score_no_feedback,
    score_with_feedback,
    similarity,
    top_k,
)
from .selector import SelectorConfig, select_candidates
from .store import (
    Dataset,
    FormatError,
    Item,
    Splits,
    SynthConfig,
    UnencodableQueryError,
    Vocab,
    dataset_checksum,
    encode_query,
    generate_synthetic,
    ingest,
    load_bundle,
    read_embeddings,
    save_bundle,
    write_embeddings,
)
from .trainer import (
    Batch,
    TrainerConfig,
    TrainingDiverged,
    alignment_loss,
    contrastive_feedback_loss,
    gradient_check,
    ranking_loss,
    total_loss,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "Adapter",
    "Batch",
    "Dataset",
    "EncodedIndex",
    "EncoderStack",
    "Feedback",
    "FormatError",
    "Item",
    "OracleConfig",
    "ProtocolParams",
    "RankerParams",
    "Ranking",
    "Report",
    "SelectorConfig",
    "Splits",
    "SynthConfig",
    "TrainerConfig",
    "TrainingDiverged",
    "UnencodableQueryError",
    "Vocab",
    "alignment_loss",
    "attribute_iou",
    "available_backends",
    "backend_name",
    "contrastive_feedback_loss",
    "dataset_checksum",
    "diversity_grid",
    "encode_dataset",
    "encode_query",
    "feedback_count_grid",
    "generate_synthetic",
    "give_feedback",
    "gradient_check",
    "ingest",
    "lambda_grid",
    "load_bundle",
    "load_checkpoint",
    "mean_rank",
    "median_rank",
    "rank",
    "ranking_loss",
    "read_embeddings",
    "recall_at_k",
    "run_ablation",
    "run_protocol",
    "save_bundle",
    "save_checkpoint",
    "score_no_feedback",
    "score_with_feedback",
    "select_candidates",
    "similarity",
    "top_k",
    "total_loss",
    "train",
    "write_embeddings",
]
