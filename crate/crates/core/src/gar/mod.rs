//! Growth-at-risk: quantile regression, skewed-t fitting and scoring.

mod evaluate;
mod fit;
mod quad;
mod quantreg;
mod scoring;
mod skewt;
mod special;

pub use evaluate::{
    evaluate_model, evaluate_models, first_origin, model_grid, sort_results, EvalConfig,
    EvalScheme, GarModelResult, GarPanel, ModelSpec, PeriodResult, Regressor, RegressorSet,
};
pub use fit::{
    fit_skewt_to_quantiles, max_quantile_mismatch, rms_mismatch, SkewTFit, SkewTFitConfig, GAR_TAUS,
};
pub use quantreg::{
    check_loss, fit_quantile, pinball_loss, predict_quantiles, DesignMatrix, PredictedQuantiles,
    QuantileFit, RANK_TOL,
};
pub use scoring::{
    crps, log_score, CrpsConfig, LogScore, Predictive, Uniform, DEFAULT_LOG_SCORE_CAP,
};
pub use skewt::{SkewT, SkewTParams};
