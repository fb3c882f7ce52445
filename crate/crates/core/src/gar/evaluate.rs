//! Out-of-sample evaluation of growth-at-risk models.
//!
//! Row `t` of a [`GarPanel`] holds the regressors observed at `t` and the
//! outcome `y_{t+h}`. A forecast made at origin `t` may only use rows whose
//! outcome is already known, i.e. rows `s` with `s + h <= t`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use super::fit::{fit_skewt_to_quantiles, SkewTFit, SkewTFitConfig, GAR_TAUS};
use super::quantreg::{fit_quantile, predict_quantiles, DesignMatrix};
use super::scoring::{crps, log_score, CrpsConfig, DEFAULT_LOG_SCORE_CAP};
use super::skewt::{SkewT, SkewTParams};
use crate::math::ceil;
use crate::{Error, Quarter, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Regressor {
    Gdp,
    Nfci,
    Spf,
    Ssi,
}

impl Regressor {
    pub const ALL: [Regressor; 4] = [
        Regressor::Gdp,
        Regressor::Nfci,
        Regressor::Spf,
        Regressor::Ssi,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Regressor::Gdp => "GDP",
            Regressor::Nfci => "NFCI",
            Regressor::Spf => "SPF",
            Regressor::Ssi => "SSI",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// Subset of the four regressors. The empty set is the intercept-only model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct RegressorSet(u8);

impl RegressorSet {
    pub const EMPTY: RegressorSet = RegressorSet(0);

    pub fn of(regs: &[Regressor]) -> Self {
        RegressorSet(regs.iter().fold(0, |m, r| m | (1 << r.index())))
    }

    pub fn contains(self, r: Regressor) -> bool {
        self.0 & (1 << r.index()) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(self) -> impl Iterator<Item = Regressor> {
        Regressor::ALL
            .into_iter()
            .filter(move |r| self.contains(*r))
    }
}

impl fmt::Display for RegressorSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("intercept");
        }
        let mut first = true;
        for r in self.iter() {
            if !first {
                f.write_str("+")?;
            }
            f.write_str(r.as_str())?;
            first = false;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelSpec {
    pub name: String,
    pub regressors: RegressorSet,
}

/// The fifteen non-empty regressor subsets, numbered as in the usual table
/// layout. The four-regressor model is number 15.
pub fn model_grid() -> Vec<ModelSpec> {
    use Regressor::*;
    let sets: [&[Regressor]; 15] = [
        &[Gdp],
        &[Nfci],
        &[Spf],
        &[Ssi],
        &[Gdp, Nfci],
        &[Gdp, Spf],
        &[Gdp, Ssi],
        &[Nfci, Spf],
        &[Nfci, Ssi],
        &[Gdp, Nfci, Ssi],
        &[Gdp, Spf, Ssi],
        &[Gdp, Nfci, Spf],
        &[Nfci, Spf, Ssi],
        &[Spf, Ssi],
        &[Gdp, Nfci, Spf, Ssi],
    ];
    sets.iter()
        .enumerate()
        .map(|(i, s)| ModelSpec {
            name: format!("Model {}", i + 1),
            regressors: RegressorSet::of(s),
        })
        .collect()
}

/// Aligned regression panel.
#[derive(Debug, Clone, PartialEq)]
pub struct GarPanel {
    pub rounds: Vec<Quarter>,
    /// Outcome `h` quarters after each round.
    pub target: Vec<f64>,
    columns: [Option<Vec<f64>>; 4],
}

impl GarPanel {
    pub fn new(rounds: Vec<Quarter>, target: Vec<f64>) -> Result<Self> {
        if rounds.len() != target.len() {
            return Err(Error::LayoutMismatch {
                expected: rounds.len(),
                got: target.len(),
            });
        }
        if target.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "target contains non-finite values".into(),
            ));
        }
        Ok(Self {
            rounds,
            target,
            columns: [None, None, None, None],
        })
    }

    pub fn with_column(mut self, r: Regressor, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.target.len() {
            return Err(Error::LayoutMismatch {
                expected: self.target.len(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "{} column contains non-finite values",
                r.as_str()
            )));
        }
        self.columns[r.index()] = Some(values);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.target.len()
    }

    pub fn is_empty(&self) -> bool {
        self.target.is_empty()
    }

    pub fn column(&self, r: Regressor) -> Option<&[f64]> {
        self.columns[r.index()].as_deref()
    }

    pub fn available(&self) -> RegressorSet {
        RegressorSet::of(
            &Regressor::ALL
                .into_iter()
                .filter(|r| self.column(*r).is_some())
                .collect::<Vec<_>>(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EvalScheme {
    Expanding,
    Rolling { window: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalConfig {
    pub scheme: EvalScheme,
    /// Share of the panel reserved for the first training window.
    pub initial_frac: f64,
    pub min_eval_periods: usize,
    pub horizon: usize,
    pub fit: SkewTFitConfig,
    pub crps: CrpsConfig,
    pub log_score_cap: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            scheme: EvalScheme::Expanding,
            initial_frac: 0.6,
            min_eval_periods: 20,
            horizon: 1,
            fit: SkewTFitConfig::default(),
            crps: CrpsConfig::default(),
            log_score_cap: DEFAULT_LOG_SCORE_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodResult {
    /// Forecast origin.
    pub round: Quarter,
    /// Predicted quantiles at [`GAR_TAUS`] after rearrangement.
    pub quantiles: [f64; 4],
    pub crossing: bool,
    pub params: SkewTParams,
    pub fit_residual: f64,
    pub fit_converged: bool,
    pub realized: f64,
    pub log_score: f64,
    pub log_score_capped: bool,
    pub crps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GarModelResult {
    pub name: String,
    pub regressors: RegressorSet,
    pub periods: Vec<PeriodResult>,
    pub avg_log_score: f64,
    pub avg_crps: f64,
    pub crossing_count: usize,
}

impl GarModelResult {
    pub fn n_periods(&self) -> usize {
        self.periods.len()
    }

    pub fn unconverged_count(&self) -> usize {
        self.periods.iter().filter(|p| !p.fit_converged).count()
    }
}

/// First forecast origin under `cfg`.
pub fn first_origin(n: usize, cfg: &EvalConfig) -> usize {
    (ceil(cfg.initial_frac * n as f64) as usize).min(n)
}

fn check_history(panel: &GarPanel, cfg: &EvalConfig) -> Result<usize> {
    if !(cfg.initial_frac > 0.0 && cfg.initial_frac < 1.0) || cfg.horizon == 0 {
        return Err(Error::InvalidArgument(
            "initial_frac must lie in (0, 1) and horizon must be positive".into(),
        ));
    }
    if let EvalScheme::Rolling { window } = cfg.scheme {
        if window == 0 {
            return Err(Error::InvalidArgument(
                "rolling window must be positive".into(),
            ));
        }
    }
    let start = first_origin(panel.len(), cfg);
    let n_eval = panel.len() - start;
    if n_eval < cfg.min_eval_periods.max(1) {
        return Err(Error::InsufficientHistory(format!(
            "{n_eval} evaluation periods after a training window of {start}, need {}",
            cfg.min_eval_periods.max(1)
        )));
    }
    Ok(start)
}

/// Pushes tied quantiles apart so the skew-t fit sees a strictly increasing
/// set. Returns whether anything moved.
fn separate_ties(q: &mut [f64; 4]) -> bool {
    let gap = 1e-8 * (q[3] - q[0]).abs().max(1.0);
    let mut moved = false;
    for i in 1..4 {
        if q[i] < q[i - 1] + gap {
            q[i] = q[i - 1] + gap;
            moved = true;
        }
    }
    moved
}

/// Runs one model over every evaluation origin.
pub fn evaluate_model(
    panel: &GarPanel,
    spec: &ModelSpec,
    cfg: &EvalConfig,
) -> Result<GarModelResult> {
    let start = check_history(panel, cfg)?;
    let cols: Vec<&[f64]> = spec
        .regressors
        .iter()
        .map(|r| {
            panel.column(r).ok_or_else(|| {
                Error::InvalidArgument(format!("panel has no {} column", r.as_str()))
            })
        })
        .collect::<Result<_>>()?;
    let x = DesignMatrix::with_intercept(&cols, panel.len())?;
    let h = cfg.horizon;

    let mut periods = Vec::with_capacity(panel.len() - start);
    let mut warm: Option<(f64, f64)> = None;
    for t in start..panel.len() {
        let end = (t + 1).saturating_sub(h);
        let begin = match cfg.scheme {
            EvalScheme::Expanding => 0,
            EvalScheme::Rolling { window } => end.saturating_sub(window),
        };
        if end - begin < x.cols() + 1 {
            return Err(Error::InsufficientHistory(format!(
                "{} training rows at {} for {} coefficients",
                end - begin,
                panel.rounds[t],
                x.cols()
            )));
        }
        let idx: Vec<usize> = (begin..end).collect();
        let xs = x.select_rows(&idx);
        let ys = &panel.target[begin..end];
        let fits = GAR_TAUS
            .iter()
            .map(|&tau| fit_quantile(ys, &xs, tau))
            .collect::<Result<Vec<_>>>()?;
        let pred = predict_quantiles(&fits, x.row(t))?;
        let mut q = [
            pred.values[0],
            pred.values[1],
            pred.values[2],
            pred.values[3],
        ];
        let tied = separate_ties(&mut q);

        let fit: SkewTFit = match fit_skewt_to_quantiles(&GAR_TAUS, &q, &cfg.fit, warm) {
            Ok(f) => f,
            Err(Error::ConvergenceFailure(best)) => *best,
            Err(e) => return Err(e),
        };
        warm = Some((fit.params.shape, fit.params.dof));
        let realized = panel.target[t];
        let ls = log_score(fit.params, realized, cfg.log_score_cap)?;
        let c = crps(&SkewT::new(fit.params)?, realized, &cfg.crps)?;
        periods.push(PeriodResult {
            round: panel.rounds[t],
            quantiles: q,
            crossing: pred.crossed || tied,
            params: fit.params,
            fit_residual: fit.residual,
            fit_converged: fit.converged,
            realized,
            log_score: ls.value,
            log_score_capped: ls.capped,
            crps: c,
        });
    }
    let n = periods.len() as f64;
    Ok(GarModelResult {
        name: spec.name.clone(),
        regressors: spec.regressors,
        avg_log_score: periods.iter().map(|p| p.log_score).sum::<f64>() / n,
        avg_crps: periods.iter().map(|p| p.crps).sum::<f64>() / n,
        crossing_count: periods.iter().filter(|p| p.crossing).count(),
        periods,
    })
}

/// Evaluates every model and sorts by average CRPS, ties broken by name.
pub fn evaluate_models(
    panel: &GarPanel,
    specs: &[ModelSpec],
    cfg: &EvalConfig,
) -> Result<Vec<GarModelResult>> {
    let mut out = specs
        .iter()
        .map(|s| evaluate_model(panel, s, cfg))
        .collect::<Result<Vec<_>>>()?;
    sort_results(&mut out);
    Ok(out)
}

pub fn sort_results(results: &mut [GarModelResult]) {
    results.sort_by(|a, b| {
        a.avg_crps
            .total_cmp(&b.avg_crps)
            .then_with(|| a.name.cmp(&b.name))
    });
}
