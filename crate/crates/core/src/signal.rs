//! Strong and weak expectation signals and the signal strength index.
//!
//! A forecaster's histogram sends a *strong* signal when its median
//! deviation from the policy target and its (demeaned) skewness point the
//! same way, and a *weak* one when they disagree. Per survey round the
//! cross-section is aggregated into a median-deviation component `Q` and an
//! asymmetry component `A`; the index combines their normalized values:
//!
//! ```text
//! SSI_t = Q_t * [ |Qn_t| |An_t| (1 + s) / 2  +  (Qn_t + An_t) / 2 * (1 - s) / 2 ]
//! s     = sgn(A_t) sgn(Q_t)
//! ```
//!
//! with `sgn(0) = 0`, so an exact zero in either component puts weight 1/2
//! on both bracket terms.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::math::sgn;
use crate::stats::{mean, median, sample_quantile};
use crate::{Error, Quarter, Result};

/// Default policy target in percentage points.
pub const DEFAULT_TARGET: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SignalClass {
    StrongUp,
    WeakUp,
    WeakDown,
    StrongDown,
    Neutral,
}

impl SignalClass {
    pub const ALL: [SignalClass; 5] = [
        Self::StrongUp,
        Self::WeakUp,
        Self::WeakDown,
        Self::StrongDown,
        Self::Neutral,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::StrongUp => "strong_up",
            Self::WeakUp => "weak_up",
            Self::WeakDown => "weak_down",
            Self::StrongDown => "strong_down",
            Self::Neutral => "neutral",
        }
    }
}

/// Quadrant of (median deviation, skewness). Exact zeros are neutral.
pub fn classify(median_dev: f64, skew: f64) -> SignalClass {
    match (sgn(median_dev) as i8, sgn(skew) as i8) {
        (1, 1) => SignalClass::StrongUp,
        (-1, -1) => SignalClass::StrongDown,
        (-1, 1) => SignalClass::WeakUp,
        (1, -1) => SignalClass::WeakDown,
        _ => SignalClass::Neutral,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkewObservation {
    pub forecaster: String,
    pub round: Quarter,
    pub skew: f64,
}

/// Subtract each forecaster's average skewness over their rounds.
pub fn demean_skew_by_forecaster(obs: &[SkewObservation]) -> Vec<SkewObservation> {
    let mut sums: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for o in obs {
        let e = sums.entry(o.forecaster.as_str()).or_insert((0.0, 0));
        e.0 += o.skew;
        e.1 += 1;
    }
    obs.iter()
        .map(|o| {
            let (s, n) = sums[o.forecaster.as_str()];
            SkewObservation {
                skew: o.skew - s / n as f64,
                ..o.clone()
            }
        })
        .collect()
}

/// One forecaster's signal in one round.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalRecord {
    pub forecaster: String,
    pub round: Quarter,
    pub horizon: String,
    /// Histogram median minus target (pp).
    pub median_dev: f64,
    /// Bowley skewness net of the forecaster's average.
    pub skew: f64,
    pub class: SignalClass,
}

/// Raw per-histogram inputs to [`build_signal_records`].
#[derive(Debug, Clone, PartialEq)]
pub struct SignalInput {
    pub forecaster: String,
    pub round: Quarter,
    pub horizon: String,
    pub median: f64,
    pub skew: f64,
}

/// Demean skewness by forecaster, measure the median against `target` and
/// classify. Records keep the input order.
pub fn build_signal_records(inputs: &[SignalInput], target: f64) -> Vec<SignalRecord> {
    let obs: Vec<SkewObservation> = inputs
        .iter()
        .map(|i| SkewObservation {
            forecaster: i.forecaster.clone(),
            round: i.round,
            skew: i.skew,
        })
        .collect();
    demean_skew_by_forecaster(&obs)
        .into_iter()
        .zip(inputs)
        .map(|(o, i)| {
            let median_dev = i.median - target;
            SignalRecord {
                forecaster: o.forecaster,
                round: o.round,
                horizon: i.horizon.clone(),
                median_dev,
                skew: o.skew,
                class: classify(median_dev, o.skew),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Aggregation {
    #[default]
    Mean,
    Median,
}

/// Cross-section of one survey round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundAggregate {
    pub round: Quarter,
    pub n: usize,
    pub q_bar: f64,
    pub a_bar: f64,
    /// First and third quartiles of the median deviations.
    pub q_iqr: (f64, f64),
    pub a_iqr: (f64, f64),
    /// Count per class, in [`SignalClass::ALL`] order.
    pub class_counts: [usize; 5],
}

impl RoundAggregate {
    pub fn class_share(&self, class: SignalClass) -> f64 {
        let i = SignalClass::ALL.iter().position(|c| *c == class).unwrap();
        self.class_counts[i] as f64 / self.n as f64
    }
}

/// Aggregate records per round, in round order.
pub fn aggregate_rounds(
    records: &[SignalRecord],
    method: Aggregation,
) -> Result<Vec<RoundAggregate>> {
    if records.is_empty() {
        return Err(Error::EmptyRound);
    }
    let mut by_round: BTreeMap<Quarter, Vec<&SignalRecord>> = BTreeMap::new();
    for r in records {
        by_round.entry(r.round).or_default().push(r);
    }
    let center = |xs: &[f64]| match method {
        Aggregation::Mean => mean(xs),
        Aggregation::Median => median(xs),
    };
    by_round
        .into_iter()
        .map(|(round, rs)| {
            let qs: Vec<f64> = rs.iter().map(|r| r.median_dev).collect();
            let as_: Vec<f64> = rs.iter().map(|r| r.skew).collect();
            let mut class_counts = [0usize; 5];
            for r in &rs {
                let i = SignalClass::ALL.iter().position(|c| *c == r.class).unwrap();
                class_counts[i] += 1;
            }
            let iqr = |xs: &[f64]| -> Option<(f64, f64)> {
                Some((sample_quantile(xs, 0.25)?, sample_quantile(xs, 0.75)?))
            };
            Ok(RoundAggregate {
                round,
                n: rs.len(),
                q_bar: center(&qs).ok_or(Error::EmptyRound)?,
                a_bar: center(&as_).ok_or(Error::EmptyRound)?,
                q_iqr: iqr(&qs).ok_or(Error::EmptyRound)?,
                a_iqr: iqr(&as_).ok_or(Error::EmptyRound)?,
                class_counts,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormScheme {
    /// Divide by the largest absolute value over the whole sample.
    #[default]
    FullSampleMaxAbs,
    /// Divide by the largest absolute value over the trailing `window`
    /// observations (including the current one). Uses no future data.
    RollingMaxAbs { window: usize },
}

/// Scale a series into `[-1, 1]`, preserving signs.
pub fn normalize_series(xs: &[f64], scheme: NormScheme) -> Result<Vec<f64>> {
    if xs.is_empty() || xs.iter().all(|x| *x == 0.0) {
        return Err(Error::AllZeroSeries);
    }
    let max_abs = |s: &[f64]| s.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    match scheme {
        NormScheme::FullSampleMaxAbs => {
            let m = max_abs(xs);
            Ok(xs.iter().map(|x| x / m).collect())
        }
        NormScheme::RollingMaxAbs { window } => {
            if window == 0 {
                return Err(Error::InvalidArgument("rolling window of 0".into()));
            }
            Ok((0..xs.len())
                .map(|t| {
                    let m = max_abs(&xs[t.saturating_sub(window - 1)..=t]);
                    if m > 0.0 {
                        xs[t] / m
                    } else {
                        0.0
                    }
                })
                .collect())
        }
    }
}

/// Evaluate the index for one round from the raw and normalized components.
pub fn ssi_value(q_bar: f64, a_bar: f64, q_norm: f64, a_norm: f64) -> f64 {
    let s = sgn(a_bar) * sgn(q_bar);
    let same = q_norm.abs() * a_norm.abs() * (1.0 + s) / 2.0;
    let opposite = (q_norm + a_norm) / 2.0 * (1.0 - s) / 2.0;
    q_bar * (same + opposite)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SsiSeries {
    pub rounds: Vec<Quarter>,
    pub q_bar: Vec<f64>,
    pub a_bar: Vec<f64>,
    pub q_norm: Vec<f64>,
    pub a_norm: Vec<f64>,
    pub ssi: Vec<f64>,
}

/// Compute the index over aligned component series. A component that is
/// zero in every round normalizes to zeros.
pub fn ssi(
    q_rounds: &[Quarter],
    q_bar: &[f64],
    a_rounds: &[Quarter],
    a_bar: &[f64],
    scheme: NormScheme,
) -> Result<SsiSeries> {
    if q_rounds != a_rounds || q_rounds.len() != q_bar.len() || a_rounds.len() != a_bar.len() {
        return Err(Error::AlignmentError);
    }
    if q_bar.is_empty() {
        return Err(Error::EmptyRound);
    }
    let norm = |xs: &[f64]| match normalize_series(xs, scheme) {
        Err(Error::AllZeroSeries) => Ok(alloc::vec![0.0; xs.len()]),
        other => other,
    };
    let q_norm = norm(q_bar)?;
    let a_norm = norm(a_bar)?;
    let ssi = (0..q_bar.len())
        .map(|t| ssi_value(q_bar[t], a_bar[t], q_norm[t], a_norm[t]))
        .collect();
    Ok(SsiSeries {
        rounds: q_rounds.to_vec(),
        q_bar: q_bar.to_vec(),
        a_bar: a_bar.to_vec(),
        q_norm,
        a_norm,
        ssi,
    })
}

/// Index over the output of [`aggregate_rounds`].
pub fn ssi_from_aggregates(aggs: &[RoundAggregate], scheme: NormScheme) -> Result<SsiSeries> {
    let rounds: Vec<Quarter> = aggs.iter().map(|a| a.round).collect();
    let q: Vec<f64> = aggs.iter().map(|a| a.q_bar).collect();
    let a: Vec<f64> = aggs.iter().map(|a| a.a_bar).collect();
    ssi(&rounds, &q, &rounds, &a, scheme)
}
