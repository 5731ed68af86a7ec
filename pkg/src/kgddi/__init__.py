"""Drug-drug interaction prediction from knowledge-graph embeddings.

The package covers the whole path from RDF dumps to a metrics table:
graph ingestion (:mod:`kgddi.graph`), walk and co-occurrence corpora
(:mod:`kgddi.walks`), shallow and triple embeddings (:mod:`kgddi.shallow`,
:mod:`kgddi.triple`), pair datasets (:mod:`kgddi.pairs`), classifiers
(:mod:`kgddi.baselines`, :mod:`kgddi.convlstm`), evaluation
(:mod:`kgddi.metrics`, :mod:`kgddi.evaluation`) and orchestration
(:mod:`kgddi.pipeline`, :mod:`kgddi.cli`).
"""

__version__ = "0.1.0"

from .convlstm import ConvLSTMClassifier, NetworkConfig
from .embedding import EmbeddingSet, load_embeddings, save_embeddings
from .exceptions import (
    ConfigError,
    FitError,
    IntegrationError,
    KGDDIError,
    MetricError,
    ParseError,
    PipelineError,
    ReportError,
    SamplingError,
    StratificationError,
    TrainingError,
)
from .graph import DdiDataset, KnowledgeGraph, build_graph, extract_ddi_pairs, parse_ntriples, strip_relations
from .metrics import calibration_curve, pearson, pr_aupr, roc_auc, threshold_metrics
from .pairs import FoldPlan, PairFeaturizer, build_pair_features, make_folds, sample_negative_pairs
from .shallow import GloVe, KGloVe, RDF2Vec, SkipGram
from .synth import SyntheticSpec, generate_synthetic
from .triple import TripleEmbedder

__all__ = [
    "ConfigError", "ConvLSTMClassifier", "DdiDataset", "EmbeddingSet", "FitError", "FoldPlan", "GloVe",
    "IntegrationError", "KGDDIError", "KGloVe", "KnowledgeGraph", "MetricError", "NetworkConfig",
    "PairFeaturizer", "ParseError", "PipelineError", "RDF2Vec", "ReportError", "SamplingError", "SkipGram",
    "StratificationError", "SyntheticSpec", "TrainingError", "TripleEmbedder", "build_graph",
    "build_pair_features", "calibration_curve", "extract_ddi_pairs", "generate_synthetic",
    "load_embeddings", "make_folds", "parse_ntriples", "pearson", "pr_aupr", "roc_auc",
    "sample_negative_pairs", "save_embeddings", "strip_relations", "threshold_metrics", "__version__",
]
