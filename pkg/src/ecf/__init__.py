"""Explanation consistency: score feature-attribution methods on the identity,
separability and stability axioms."""
from .axioms import (
    EcfConfig,
    PairCounting,
    check_identity,
    check_separability,
    check_stability_classification,
    check_stability_regression,
)
from .core import (
    AugmentedObjectSet,
    Axiom,
    AxiomVerdict,
    ClusteringAlgorithm,
    ClusterSimilarityTable,
    DistanceMatrix,
    EvaluationReport,
    ExplanationSet,
    ObjectSet,
    PredictionVector,
    RhoSummary,
    Task,
    build_augmented,
    validate_aligned,
)
from .evaluation import evaluate
from .explainers import (
    KnnModel,
    LinearModel,
    ShapleyExplainer,
    SoftmaxModel,
    SurrogateExplainer,
    explain_all,
    fit_linear,
)

__version__ = "0.1.0"
