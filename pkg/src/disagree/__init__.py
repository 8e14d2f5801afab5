"""Feature-attribution explainers and pairwise disagreement metrics.

A desk-scale laboratory for the explanation-disagreement problem on
tabular binary classifiers: train a logistic or small ReLU model, explain
test instances with six attribution methods, and quantify how much any
two methods' explanations agree via six rank/sign/top-k metrics.
"""

__version__ = "0.1.0"

from .data import (
    Dataset,
    FeatureSchema,
    Standardizer,
    fit_standardizer,
    load_csv,
    load_schema,
    save_csv,
    save_schema,
    standardize,
    train_test_split,
    unstandardize,
)
from .errors import (
    ConfigError,
    DataError,
    DisagreeError,
    ExplainerError,
    MetricError,
    ModelError,
)
from .explainers import (
    Attribution,
    GradientConfig,
    IntegratedGradientsConfig,
    KernelShapConfig,
    LimeConfig,
    SmoothGradConfig,
    convergence_check,
    exact_shapley,
    explain,
    explain_gradient,
    explain_grad_times_input,
    explain_integrated_gradients,
    explain_kernelshap,
    explain_lime,
    explain_smoothgrad,
    make_config,
    smoothgrad_sigma,
    GRADIENT_METHODS,
    METHOD_IDS,
    PERTURBATION_METHODS,
)
from .harness import (
    ExperimentConfig,
    ExperimentResult,
    InstanceRecord,
    PairwiseMatrix,
    aggregate,
    default_k_grid,
    dichotomy_report,
    instance_seed,
    run_experiment,
    sweep_k,
)
from .heatmap import matrix_svg, write_heatmaps
from .metrics import (
    METRIC_IDS,
    SUBSET_METRICS,
    TOP_K_METRICS,
    TopKSelection,
    compute_metric,
    feature_agreement,
    pairwise_rank_agreement,
    rank_agreement,
    rank_correlation,
    sign_agreement,
    signed_rank_agreement,
    top_features,
)
from .models import (
    LinearModel,
    MlpModel,
    PredictOnlyModel,
    TrainConfig,
    accuracy,
    input_gradient,
    load_model,
    predict_label,
    predict_proba,
    save_model,
    train_logistic,
    train_mlp,
)
from .synth import synthetic_compas, synthetic_german_credit, write_dataset
