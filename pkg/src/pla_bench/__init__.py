"""Physical layer authentication benchmark toolkit.

Simulates a training/classification protocol over correlated fading
channels and evaluates statistical tests, one-class and binary machine
learning authenticators, and impersonation attacks under a seeded,
reproducible Monte Carlo harness.
"""

from .attacks import (
    AttackStrategy,
    exponent_attack,
    ml_attack,
    mismatched_eval,
    modulus_attack,
    optimize_attack_exponents,
    simplified_attack,
)
from .channel import (
    ReferenceEstimate,
    ScenarioParams,
    alice_estimate_phase2,
    average_estimates,
    bob_estimate_phase1,
    bob_training_set,
    complex_gaussian,
    eve_observations,
    forged_observation,
    reference_estimate,
    sample_channel,
)
from .errors import (
    ConfigError,
    InfeasibleTargetError,
    NumericError,
    SingularTestError,
    UndefinedMetricError,
)
from .harness import (
    AttackerSpec,
    DefenderSpec,
    ExperimentConfig,
    REPRODUCE_TARGETS,
    ResultTable,
    emit,
    load,
    reproduce,
    run_experiment,
)
from .metrics import ConfusionMatrix, accuracy, binomial_se, g_mean, p_fa, p_md, record
from .mlauth import (
    CvConfig,
    DistanceMetric,
    OcnnModel,
    OcsvmModel,
    binary_knn,
    binary_knn_tune,
    binary_svm_classify,
    binary_svm_train,
    featurize,
    kmeans_label,
    llr_distance,
    ocnn_classify,
    ocnn_train,
    ocsvm_classify,
    ocsvm_decision,
    ocsvm_train,
    ocsvm_train_cv,
    unfeaturize,
)
from .rng import Rng
from .statdec import (
    CombinedTest,
    Hypothesis,
    IdealBoundTest,
    LlrTest,
    NoncentralChi2,
    ThresholdResult,
    analytic_pfa_pmd,
    calibrate_threshold,
    combined_decide,
    ideal_llr,
    llr_decide,
    llr_statistic,
    modulus_statistic,
    ncx2_cdf,
    ncx2_inv,
    noncentrality_beta,
    noncentrality_mu,
    normal_upper_quantile,
    optimize_thresholds,
    per_dim_variance,
)

__version__ = "0.1.0"
