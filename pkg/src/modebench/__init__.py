"""modebench: benchmark chat-completion LLMs as synthetic commuters on
travel mode choice surveys, from survey ingestion through few-shot example
retrieval, prompt assembly, batch inference, two-tier evaluation, and
fine-tuning corpus preparation."""

from .analysis import (
    ExperimentCell,
    VarianceShare,
    learning_style_gain,
    learning_style_summary,
    rank_models,
    variance_decomposition,
)
from .dataset import (
    Attribute,
    AttributeSchema,
    ChoiceInstance,
    DatasetError,
    NumericNormalizer,
    TrainTestSplit,
    fit_normalizer,
    load_dataset,
    save_dataset,
    split_train_test,
)
from .finetune import (
    FinetuneConfig,
    FinetuneCorpus,
    MaskedSequence,
    TrainingExample,
    build_training_corpus,
    export_finetune_bundle,
    load_finetune_bundle,
    mask_labels,
)
from .gateway import (
    INVALID,
    DecisionRecord,
    GatewayError,
    GenerationParams,
    InvalidChoiceError,
    ModelEndpoint,
    ParseError,
    RecordStore,
    extract_choice,
    parse_response,
    query_model,
    run_single,
)
from .metrics import (
    ConfusionMatrix,
    MetricsReport,
    ShareDistribution,
    confusion,
    cross_entropy,
    dist_mae,
    evaluate_run,
    instance_metrics,
    jsd,
    smooth_distribution,
)
from .mocking import BudgetedTransport, DeterministicMock, ScriptedMock
from .prompts import PromptBundle, PromptTemplate, assemble_prompt, render_instance
from .reasoning import EsiScore, FactorLexicon, esi, esi_aggregate
from .runner import (
    ExperimentConfig,
    RunManifest,
    analyze_cells,
    cells_from_table,
    enumerate_matrix,
    report,
    run_experiment,
)
from .similarity import (
    SimilarityBreakdown,
    SimilarityWeights,
    categorical_group_similarity,
    numeric_group_similarity,
    ordinal_similarity,
    select_random,
    select_targeted,
    total_similarity,
)

__version__ = "0.1.0"
