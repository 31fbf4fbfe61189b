"""Shrinkage estimation for matrices of normal means under a matrix
quadratic loss, with reproducible Monte Carlo risk estimation, dominance
verdicts, and analytic oracles."""

__version__ = "0.1.0"

from .estimators import (
    EstimatorSpec,
    ZeroNormColumnError,
    cross_product_stats,
    diagonal_js,
    efron_morris,
    js_shrink_vector,
    js_shrink_vector_unknown,
    matrix_loss,
    whitened_js,
)
from .linalg import (
    SingularMatrixError,
    SymEig,
    gram,
    matmul,
    solve_spd,
    spd_sqrt_inv,
    sym_eigen,
)
from .oracles import (
    RiskCurve,
    a_lambda,
    counterexample_quadratic,
    matrix_risk_origin,
    scalar_risk_exact,
)
from .risk import (
    DominanceReport,
    PairedDifference,
    RiskEstimate,
    SweepEntry,
    ThetaScenario,
    dominance_check,
    make_theta,
    mc_matrix_risk,
    paired_risk_difference,
    tuning_sweep,
)
from .sampling import (
    Draw,
    ModelSpec,
    SeedSpec,
    chi2_mean_inverse_mc,
    draw,
    draw_batch,
    stein_identity_mc,
)

__all__ = [
    "__version__",
    "EstimatorSpec", "ZeroNormColumnError", "cross_product_stats",
    "diagonal_js", "efron_morris", "js_shrink_vector",
    "js_shrink_vector_unknown", "matrix_loss", "whitened_js",
    "SingularMatrixError", "SymEig", "gram", "matmul", "solve_spd",
    "spd_sqrt_inv", "sym_eigen",
    "RiskCurve", "a_lambda", "counterexample_quadratic",
    "matrix_risk_origin", "scalar_risk_exact",
    "DominanceReport", "PairedDifference", "RiskEstimate", "SweepEntry",
    "ThetaScenario", "dominance_check", "make_theta", "mc_matrix_risk",
    "paired_risk_difference", "tuning_sweep",
    "Draw", "ModelSpec", "SeedSpec", "chi2_mean_inverse_mc", "draw",
    "draw_batch", "stein_identity_mc",
]
