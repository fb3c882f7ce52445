//! Moment estimators for closed histograms and the cross-moment
//! correlation matrix.
//!
//! Mean and variance use bin midpoints weighted by mass; the median and the
//! quantile-based shape measures (Bowley, Kelly, Moors) read the
//! piecewise-uniform quantile function of [`ClosedDistribution`].
//!
//! Two modes coexist. [`mode`] places the mode inside the run of
//! maximum-probability bins according to the mass on either side of it, and
//! is the reported mode. [`pearson_mode_skewness`] uses the midpoint of the
//! maximum-probability bin instead.

use alloc::format;
use alloc::vec::Vec;

use crate::math::sqrt;
use crate::spd::ClosedDistribution;
use crate::stats::pearson;
use crate::{Error, Result};

/// Relative tolerance under which two bin masses count as tied for the
/// maximum.
const TIE_TOL: f64 = 1e-12;

pub fn mean(d: &ClosedDistribution) -> Result<f64> {
    if d.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    Ok(d.midpoints().zip(d.probs()).map(|(m, p)| m * p).sum())
}

pub fn median(d: &ClosedDistribution) -> Result<f64> {
    d.quantile(0.5)
}

fn max_run(d: &ClosedDistribution) -> Result<(usize, usize)> {
    let probs = d.probs();
    if probs.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    let max = probs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let is_max = |p: f64| p >= max - TIE_TOL * max;
    let first = probs.iter().position(|&p| is_max(p)).unwrap();
    let last = probs.iter().rposition(|&p| is_max(p)).unwrap();
    if probs[first..=last].iter().any(|&p| !is_max(p)) {
        return Err(Error::IndeterminateMode);
    }
    Ok((first, last))
}

/// Mode placed inside the run of maximum-probability bins: starting from the
/// run's lower edge, move right by the share of outside mass lying to the
/// right of the run.
pub fn mode(d: &ClosedDistribution) -> Result<f64> {
    let (first, last) = max_run(d)?;
    let edges = d.edges();
    let cum = d.cumulative();
    let x = edges[first];
    let delta = edges[last + 1] - x;
    let left = cum[first];
    let right = (1.0 - cum[last + 1]).max(0.0);
    if left + right <= 0.0 {
        return Ok(x + 0.5 * delta);
    }
    Ok(x + right / (right + left) * delta)
}

pub fn variance(d: &ClosedDistribution) -> Result<f64> {
    let mu = mean(d)?;
    Ok(d.midpoints()
        .zip(d.probs())
        .map(|(m, p)| (m - mu) * (m - mu) * p)
        .sum())
}

/// Standard deviation over mean. Fails when `|mean| <= epsilon_mean`.
pub fn cv(d: &ClosedDistribution, epsilon_mean: f64) -> Result<f64> {
    let mu = mean(d)?;
    if mu.abs() <= epsilon_mean {
        return Err(Error::MeanNearZero(mu));
    }
    Ok(sqrt(variance(d)?) / mu)
}

/// What to do with Bowley skewness when a forecaster piles at least
/// `threshold` of their mass into an open tail bin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtremeTailRule {
    /// Always use the computed quartile skewness.
    Off,
    /// Report ±1, the bounds of the coefficient.
    Saturate { threshold: f64 },
    /// Report caller-supplied values, typically historical quartiles of the
    /// skewness coefficient.
    Historical {
        threshold: f64,
        negative: f64,
        positive: f64,
    },
}

impl Default for ExtremeTailRule {
    fn default() -> Self {
        Self::Saturate { threshold: 0.25 }
    }
}

/// Override value if the extreme-tail rule fires for `d`. When both tails
/// exceed the threshold the signals cancel and no override is applied.
pub fn extreme_tail_override(d: &ClosedDistribution, rule: ExtremeTailRule) -> Option<f64> {
    let (threshold, negative, positive) = match rule {
        ExtremeTailRule::Off => return None,
        ExtremeTailRule::Saturate { threshold } => (threshold, -1.0, 1.0),
        ExtremeTailRule::Historical {
            threshold,
            negative,
            positive,
        } => (threshold, negative, positive),
    };
    let low = d.open_lower_mass().is_some_and(|m| m >= threshold);
    let high = d.open_upper_mass().is_some_and(|m| m >= threshold);
    match (low, high) {
        (true, false) => Some(negative),
        (false, true) => Some(positive),
        _ => None,
    }
}

pub fn bowley_skewness(d: &ClosedDistribution, rule: ExtremeTailRule) -> Result<f64> {
    if let Some(v) = extreme_tail_override(d, rule) {
        return Ok(v);
    }
    let q1 = d.quantile(0.25)?;
    let q2 = d.quantile(0.5)?;
    let q3 = d.quantile(0.75)?;
    let iqr = q3 - q1;
    if iqr <= 0.0 {
        return Err(Error::DegenerateIqr);
    }
    Ok((((q3 - q2) - (q2 - q1)) / iqr).clamp(-1.0, 1.0))
}

/// True when more than one bin shares the maximum mass; Pearson skewness
/// then takes the first of them.
pub fn max_bin_tied(d: &ClosedDistribution) -> bool {
    let probs = d.probs();
    let max = probs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    probs.iter().filter(|&&p| p >= max - TIE_TOL * max).count() > 1
}

/// `(mean - mode) / sd` with the mode taken as the midpoint of the first
/// maximum-probability bin and `sd` from the midpoint variance.
pub fn pearson_mode_skewness(d: &ClosedDistribution) -> Result<f64> {
    let mu = mean(d)?;
    let sd = sqrt(variance(d)?);
    if !(sd > 0.0) {
        return Err(Error::ZeroStdDev);
    }
    let probs = d.probs();
    let max = probs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let i = probs
        .iter()
        .position(|&p| p >= max - TIE_TOL * max)
        .unwrap();
    let edges = d.edges();
    let mode = 0.5 * (edges[i] + edges[i + 1]);
    Ok((mu - mode) / sd)
}

pub fn kelly_skewness(d: &ClosedDistribution) -> Result<f64> {
    let p10 = d.quantile(0.1)?;
    let p50 = d.quantile(0.5)?;
    let p90 = d.quantile(0.9)?;
    let range = p90 - p10;
    if range <= 0.0 {
        return Err(Error::DegenerateRange);
    }
    Ok(((p90 - 2.0 * p50 + p10) / range).clamp(-1.0, 1.0))
}

/// Octile-based kurtosis.
pub fn moors_kurtosis(d: &ClosedDistribution) -> Result<f64> {
    let o = |k: u32| d.quantile(k as f64 / 8.0);
    let (o1, o2, o3, o5, o6, o7) = (o(1)?, o(2)?, o(3)?, o(5)?, o(6)?, o(7)?);
    let denom = o6 - o2;
    if denom <= 0.0 {
        return Err(Error::DegenerateOctiles);
    }
    Ok(((o7 - o5) + (o3 - o1)) / denom)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentConfig {
    pub epsilon_mean: f64,
    pub tail_rule: ExtremeTailRule,
    /// Kelly skewness is computed only on request.
    pub include_kelly: bool,
}

impl Default for MomentConfig {
    fn default() -> Self {
        Self {
            epsilon_mean: 1e-6,
            tail_rule: ExtremeTailRule::default(),
            include_kelly: false,
        }
    }
}

/// Conditions raised while computing a [`MomentSet`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MomentFlags {
    pub tail_saturated: bool,
    pub cv_undefined: bool,
    pub mode_indeterminate: bool,
    pub mode_tie: bool,
    pub degenerate_iqr: bool,
    pub degenerate_octiles: bool,
    pub zero_std_dev: bool,
    pub degenerate_range: bool,
}

impl MomentFlags {
    pub fn any(&self) -> bool {
        self.names().next().is_some()
    }

    /// Names of the raised flags, in a fixed order.
    pub fn names(&self) -> impl Iterator<Item = &'static str> {
        [
            (self.tail_saturated, "tail_saturated"),
            (self.cv_undefined, "cv_undefined"),
            (self.mode_indeterminate, "mode_indeterminate"),
            (self.mode_tie, "mode_tie"),
            (self.degenerate_iqr, "degenerate_iqr"),
            (self.degenerate_octiles, "degenerate_octiles"),
            (self.zero_std_dev, "zero_std_dev"),
            (self.degenerate_range, "degenerate_range"),
        ]
        .into_iter()
        .filter_map(|(on, name)| on.then_some(name))
    }
}

/// Every moment of one histogram. Estimators that are undefined for this
/// histogram are `None` and raise the matching flag.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSet {
    pub mean: f64,
    pub median: f64,
    pub mode: Option<f64>,
    pub variance: f64,
    pub cv: Option<f64>,
    pub bowley: Option<f64>,
    pub pearson_mode_skew: Option<f64>,
    pub kelly: Option<f64>,
    pub moors_kurtosis: Option<f64>,
    pub flags: MomentFlags,
}

impl MomentSet {
    pub fn compute(d: &ClosedDistribution, cfg: &MomentConfig) -> Result<Self> {
        let mut flags = MomentFlags::default();
        let mean = mean(d)?;
        let median = median(d)?;
        let variance = variance(d)?;

        let mode = match mode(d) {
            Ok(m) => Some(m),
            Err(Error::IndeterminateMode) => {
                flags.mode_indeterminate = true;
                None
            }
            Err(e) => return Err(e),
        };
        let cv = match cv(d, cfg.epsilon_mean) {
            Ok(v) => Some(v),
            Err(Error::MeanNearZero(_)) => {
                flags.cv_undefined = true;
                None
            }
            Err(e) => return Err(e),
        };
        flags.tail_saturated = extreme_tail_override(d, cfg.tail_rule).is_some();
        let bowley = match bowley_skewness(d, cfg.tail_rule) {
            Ok(v) => Some(v),
            Err(Error::DegenerateIqr) => {
                flags.degenerate_iqr = true;
                None
            }
            Err(e) => return Err(e),
        };
        flags.mode_tie = max_bin_tied(d);
        let pearson_mode_skew = match pearson_mode_skewness(d) {
            Ok(v) => Some(v),
            Err(Error::ZeroStdDev) => {
                flags.zero_std_dev = true;
                None
            }
            Err(e) => return Err(e),
        };
        let kelly = if cfg.include_kelly {
            match kelly_skewness(d) {
                Ok(v) => Some(v),
                Err(Error::DegenerateRange) => {
                    flags.degenerate_range = true;
                    None
                }
                Err(e) => return Err(e),
            }
        } else {
            None
        };
        let moors_kurtosis = match moors_kurtosis(d) {
            Ok(v) => Some(v),
            Err(Error::DegenerateOctiles) => {
                flags.degenerate_octiles = true;
                None
            }
            Err(e) => return Err(e),
        };
        Ok(Self {
            mean,
            median,
            mode,
            variance,
            cv,
            bowley,
            pearson_mode_skew,
            kelly,
            moors_kurtosis,
            flags,
        })
    }
}

/// Order of the rows and columns of [`moment_correlations`].
pub const CORRELATION_LABELS: [&str; 4] = ["mean", "cv", "skewness", "kurtosis"];

/// Pooled Pearson correlations between mean, CV, Bowley skewness and Moors
/// kurtosis. Undefined values are dropped pair by pair.
pub fn moment_correlations(panel: &[MomentSet]) -> Result<[[f64; 4]; 4]> {
    let column = |m: &MomentSet, k: usize| match k {
        0 => Some(m.mean),
        1 => m.cv,
        2 => m.bowley,
        _ => m.moors_kurtosis,
    };
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        out[i][i] = 1.0;
        for j in (i + 1)..4 {
            let (xs, ys): (Vec<f64>, Vec<f64>) = panel
                .iter()
                .filter_map(|m| Some((column(m, i)?, column(m, j)?)))
                .unzip();
            if xs.len() < 3 {
                return Err(Error::InsufficientData(format!(
                    "{} complete ({}, {}) pairs, need 3",
                    xs.len(),
                    CORRELATION_LABELS[i],
                    CORRELATION_LABELS[j]
                )));
            }
            let r = pearson(&xs, &ys).ok_or_else(|| {
                Error::ConstantSeries(format!(
                    "{} or {}",
                    CORRELATION_LABELS[i], CORRELATION_LABELS[j]
                ))
            })?;
            out[i][j] = r;
            out[j][i] = r;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn closed(edges: &[f64], probs: &[f64]) -> ClosedDistribution {
        ClosedDistribution::new(edges.to_vec(), probs.to_vec()).unwrap()
    }

    fn five_bin_example() -> ClosedDistribution {
        closed(
            &[-1.5, -1.0, -0.5, 0.0, 0.5, 1.0],
            &[10.0, 25.0, 35.0, 25.0, 5.0],
        )
    }

    #[test]
    fn mean_trivial_cases() {
        assert!((mean(&closed(&[1.5, 2.5], &[1.0])).unwrap() - 2.0).abs() < 1e-15);
        assert!((mean(&closed(&[1.0, 2.0, 3.0], &[1.0, 1.0])).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn mode_weighted_by_outside_mass() {
        let d = closed(&[0.0, 0.5, 1.0, 1.5], &[0.2, 0.5, 0.3]);
        assert!((mode(&d).unwrap() - 0.8).abs() < 1e-12);
        let d = closed(&[0.0, 0.5, 1.0], &[0.6, 0.4]);
        // no mass on the left pulls the mode to the upper edge of the max bin
        assert!((mode(&d).unwrap() - 0.5).abs() < 1e-12);
        let d = closed(&[0.0, 1.0, 2.0, 3.0], &[0.25, 0.5, 0.25]);
        assert!((mode(&d).unwrap() - 1.5).abs() < 1e-12);
        let single = closed(&[4.0, 5.0], &[1.0]);
        assert_eq!(mode(&single).unwrap(), 4.5);
    }

    #[test]
    fn mode_over_adjacent_tied_run() {
        // run [1, 3), left 0.2, right 0.2
        let d = closed(&[0.0, 1.0, 2.0, 3.0, 4.0], &[0.2, 0.3, 0.3, 0.2]);
        assert!((mode(&d).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn separated_maxima_make_mode_indeterminate() {
        let d = closed(&[0.0, 1.0, 2.0, 3.0], &[0.4, 0.2, 0.4]);
        assert_eq!(mode(&d), Err(Error::IndeterminateMode));
    }

    #[test]
    fn variance_and_cv() {
        assert_eq!(variance(&closed(&[0.0, 1.0], &[1.0])).unwrap(), 0.0);
        let two = closed(&[-1.0, 0.0, 1.0], &[1.0, 1.0]);
        assert!((variance(&two).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(cv(&closed(&[1.5, 2.5], &[1.0]), 1e-6).unwrap(), 0.0);
        let d = closed(&[0.5, 1.5, 2.5, 3.5], &[1.0, 0.0, 1.0]);
        assert!((cv(&d, 1e-6).unwrap() - 0.5).abs() < 1e-12);
        assert!(matches!(cv(&two, 1e-6), Err(Error::MeanNearZero(_))));
    }

    #[test]
    fn bowley_on_five_bin_example() {
        let b = bowley_skewness(&five_bin_example(), ExtremeTailRule::Off).unwrap();
        // Q1 = -0.7, Q2 = -0.5 + 0.15/0.35 * 0.5, Q3 = 0.1
        let q2 = -0.5 + 0.15 / 0.35 * 0.5;
        let want = ((0.1 - q2) - (q2 + 0.7)) / 0.8;
        assert!((b - want).abs() < 1e-12);
        assert!((b + 0.0357).abs() < 1e-4);
    }

    #[test]
    fn bowley_symmetric_and_bounded() {
        let sym = closed(&[0.0, 1.0, 2.0, 3.0], &[0.25, 0.5, 0.25]);
        assert!(bowley_skewness(&sym, ExtremeTailRule::Off).unwrap().abs() < 1e-12);
        let narrow = closed(&[0.0, 1e-9, 1.0, 1.0 + 1e-9], &[0.5, 0.0, 0.5]);
        assert!(
            bowley_skewness(&narrow, ExtremeTailRule::Off)
                .unwrap()
                .abs()
                <= 1.0
        );
    }

    #[test]
    fn extreme_upper_tail_saturates() {
        use crate::spd::{Bin, BinnedDistribution, TailPolicy};
        let d = BinnedDistribution::new(
            vec![
                Bin::open_below(1.0),
                Bin::closed(1.0, 3.0),
                Bin::closed(3.0, 5.0),
                Bin::open_above(5.0),
            ],
            vec![5.0, 40.0, 25.0, 30.0],
        )
        .unwrap()
        .prepare(TailPolicy::AdjacentWidth)
        .unwrap();
        assert_eq!(
            bowley_skewness(&d, ExtremeTailRule::default()).unwrap(),
            1.0
        );
        let hist = ExtremeTailRule::Historical {
            threshold: 0.25,
            negative: -0.3,
            positive: 0.4,
        };
        assert_eq!(bowley_skewness(&d, hist).unwrap(), 0.4);
        let raw = bowley_skewness(&d, ExtremeTailRule::Off).unwrap();
        assert!(raw < 1.0);

        let low = BinnedDistribution::new(
            vec![
                Bin::open_below(1.0),
                Bin::closed(1.0, 3.0),
                Bin::open_above(3.0),
            ],
            vec![30.0, 60.0, 10.0],
        )
        .unwrap()
        .prepare(TailPolicy::AdjacentWidth)
        .unwrap();
        assert_eq!(
            bowley_skewness(&low, ExtremeTailRule::default()).unwrap(),
            -1.0
        );
    }

    #[test]
    fn pearson_on_five_bin_example() {
        let d = five_bin_example();
        let sd = sqrt(variance(&d).unwrap());
        let s = pearson_mode_skewness(&d).unwrap();
        assert!((s - (-0.30 + 0.25) / sd).abs() < 1e-12);
        assert!(s < 0.0);
        assert_eq!(
            pearson_mode_skewness(&closed(&[0.0, 1.0], &[1.0])),
            Err(Error::ZeroStdDev)
        );
    }

    #[test]
    fn kelly_symmetric_and_uniform() {
        let sym = closed(&[0.0, 1.0, 2.0, 3.0], &[0.3, 0.4, 0.3]);
        assert!(kelly_skewness(&sym).unwrap().abs() < 1e-12);
        assert!(kelly_skewness(&closed(&[2.0, 2.5], &[1.0])).unwrap().abs() < 1e-12);
    }

    #[test]
    fn moors_uniform_is_one() {
        assert_eq!(moors_kurtosis(&closed(&[0.0, 1.0], &[1.0])).unwrap(), 1.0);
    }

    #[test]
    fn moment_set_flags_undefined_estimators() {
        let d = closed(&[-1.0, 0.0, 1.0, 2.0, 3.0], &[0.4, 0.1, 0.1, 0.4]);
        let m = MomentSet::compute(&d, &MomentConfig::default()).unwrap();
        assert!(m.flags.mode_indeterminate);
        assert!(m.mode.is_none());
        assert!(m.kelly.is_none());
        assert!(m.flags.mode_tie);

        let cfg = MomentConfig {
            include_kelly: true,
            ..MomentConfig::default()
        };
        let m = MomentSet::compute(&five_bin_example(), &cfg).unwrap();
        assert!(!m.flags.any());
        assert!(m.kelly.is_some());
    }

    #[test]
    fn correlation_matrix_shape() {
        let panel: Vec<MomentSet> = (0..6)
            .map(|i| {
                let w = 1.0 + i as f64;
                let d = closed(&[0.0, 1.0, 2.0, 3.0], &[1.0, w, w * w]);
                MomentSet::compute(&d, &MomentConfig::default()).unwrap()
            })
            .collect();
        let c = moment_correlations(&panel).unwrap();
        for i in 0..4 {
            assert_eq!(c[i][i], 1.0);
            for j in 0..4 {
                assert_eq!(c[i][j], c[j][i]);
            }
        }
        assert!(matches!(
            moment_correlations(&panel[..2]),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn correlation_negative_unit_when_cv_mirrors_mean() {
        let panel: Vec<MomentSet> = [0.5, 1.0, 2.0, 3.5]
            .iter()
            .enumerate()
            .map(|(i, &mu)| MomentSet {
                mean: mu,
                median: mu,
                mode: Some(mu),
                variance: 1.0,
                cv: Some(-mu),
                bowley: Some(0.1 * i as f64),
                pearson_mode_skew: None,
                kelly: None,
                moors_kurtosis: Some(1.0 + (i * i) as f64),
                flags: MomentFlags::default(),
            })
            .collect();
        let c = moment_correlations(&panel).unwrap();
        assert!((c[0][1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn flagged_cv_dropped_pairwise() {
        let mut panel: Vec<MomentSet> = (0..5)
            .map(|i| {
                let d = closed(
                    &[0.0, 1.0, 2.0, 3.0],
                    &[1.0, 2.0 + i as f64, 1.0 + (i * i) as f64],
                );
                MomentSet::compute(&d, &MomentConfig::default()).unwrap()
            })
            .collect();
        panel[0].cv = None;
        panel[1].cv = None;
        assert!(moment_correlations(&panel).is_ok());
        panel[2].cv = None;
        assert!(moment_correlations(&panel).is_err());
    }
}
