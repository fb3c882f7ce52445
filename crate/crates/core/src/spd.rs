//! Binned subjective probability distributions.
//!
//! A survey respondent reports probabilities over contiguous outcome bins
//! (0.5pp wide for inflation), with the first and last bins usually open.
//! [`BinnedDistribution`] holds the raw histogram; [`ClosedDistribution`] is
//! the normalized form with finite edges that every estimator reads. Mass is
//! treated as uniform within each bin, so quantiles are a linear
//! interpolation inside the bin where the cumulative probability first
//! reaches the target.

use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Normalized mass must sum to one within this tolerance.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// One histogram bin. `None` marks an open edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bin {
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

impl Bin {
    pub fn closed(lower: f64, upper: f64) -> Self {
        Self {
            lower: Some(lower),
            upper: Some(upper),
        }
    }

    pub fn open_below(upper: f64) -> Self {
        Self {
            lower: None,
            upper: Some(upper),
        }
    }

    pub fn open_above(lower: f64) -> Self {
        Self {
            lower: Some(lower),
            upper: None,
        }
    }

    pub fn is_closed(&self) -> bool {
        self.lower.is_some() && self.upper.is_some()
    }

    fn width(&self) -> Option<f64> {
        Some(self.upper? - self.lower?)
    }
}

/// How open tail bins are given a finite edge.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum TailPolicy {
    /// Open bin takes the width of its closed neighbour.
    #[default]
    AdjacentWidth,
    /// Open bin takes a fixed width (pp).
    FixedWidth(f64),
}

/// A forecaster's histogram as reported: ordered contiguous bins, possibly
/// open at either end, with non-negative mass per bin.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedDistribution {
    bins: Vec<Bin>,
    probs: Vec<f64>,
}

impl BinnedDistribution {
    pub fn new(bins: Vec<Bin>, probs: Vec<f64>) -> Result<Self> {
        if bins.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        if bins.len() != probs.len() {
            return Err(Error::InvalidBins(format!(
                "{} bins but {} probabilities",
                bins.len(),
                probs.len()
            )));
        }
        for (i, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::InvalidProbability(format!("bin {i} has mass {p}")));
            }
        }
        let last = bins.len() - 1;
        for (i, b) in bins.iter().enumerate() {
            if b.lower.is_none() && i != 0 {
                return Err(Error::InvalidBins(format!(
                    "bin {i} is open below but is not the first bin"
                )));
            }
            if b.upper.is_none() && i != last {
                return Err(Error::InvalidBins(format!(
                    "bin {i} is open above but is not the last bin"
                )));
            }
            if b.lower.is_some_and(|x| !x.is_finite()) || b.upper.is_some_and(|x| !x.is_finite()) {
                return Err(Error::InvalidBins(format!("bin {i} has a non-finite edge")));
            }
            if let Some(w) = b.width() {
                if w <= 0.0 {
                    return Err(Error::InvalidBins(format!("bin {i} has upper <= lower")));
                }
            }
        }
        for (i, pair) in bins.windows(2).enumerate() {
            // interior edges are always present by the checks above
            let (u, l) = (pair[0].upper.unwrap(), pair[1].lower.unwrap());
            if u != l {
                return Err(Error::InvalidBins(format!(
                    "bins {i} and {} are not contiguous ({u} vs {l})",
                    i + 1
                )));
            }
        }
        Ok(Self { bins, probs })
    }

    pub fn bins(&self) -> &[Bin] {
        &self.bins
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn total_mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Rescale the mass so it sums to one. Zero-mass bins are kept, and an
    /// already normalized distribution is returned unchanged.
    pub fn normalize(&self) -> Result<Self> {
        let total = self.total_mass();
        if total <= 0.0 {
            return Err(Error::ZeroMass);
        }
        if self.is_normalized() {
            return Ok(self.clone());
        }
        Ok(Self {
            bins: self.bins.clone(),
            probs: self.probs.iter().map(|p| p / total).collect(),
        })
    }

    pub fn is_normalized(&self) -> bool {
        (self.total_mass() - 1.0).abs() <= NORMALIZATION_TOL
    }

    /// Replace open edges with finite ones. The input must already be
    /// normalized.
    pub fn close_open_bins(&self, policy: TailPolicy) -> Result<ClosedDistribution> {
        if !self.is_normalized() {
            return Err(Error::NotNormalized(self.total_mass()));
        }
        let n = self.bins.len();
        let first = self.bins[0];
        let last = self.bins[n - 1];

        let width_for = |neighbor: Option<&Bin>| -> Result<f64> {
            match policy {
                TailPolicy::FixedWidth(w) if w > 0.0 && w.is_finite() => Ok(w),
                TailPolicy::FixedWidth(w) => Err(Error::InvalidArgument(format!("tail width {w}"))),
                TailPolicy::AdjacentWidth => {
                    neighbor.and_then(Bin::width).ok_or(Error::NoClosedNeighbor)
                }
            }
        };

        let mut edges = Vec::with_capacity(n + 1);
        let lower = match first.lower {
            Some(x) => x,
            None => {
                let upper = first.upper.ok_or(Error::NoClosedNeighbor)?;
                upper - width_for(self.bins.get(1))?
            }
        };
        edges.push(lower);
        for b in &self.bins[..n - 1] {
            edges.push(b.upper.unwrap());
        }
        let upper = match last.upper {
            Some(x) => x,
            None => {
                let lo = last.lower.ok_or(Error::NoClosedNeighbor)?;
                let neighbor = if n >= 2 { self.bins.get(n - 2) } else { None };
                lo + width_for(neighbor)?
            }
        };
        edges.push(upper);

        let open_lower_mass = first.lower.is_none().then_some(self.probs[0]);
        let open_upper_mass = last.upper.is_none().then_some(self.probs[n - 1]);
        let mut closed = ClosedDistribution::from_parts(edges, self.probs.clone())?;
        closed.open_lower_mass = open_lower_mass;
        closed.open_upper_mass = open_upper_mass;
        Ok(closed)
    }

    /// Normalize then close, the usual path from a survey record.
    pub fn prepare(&self, policy: TailPolicy) -> Result<ClosedDistribution> {
        self.normalize()?.close_open_bins(policy)
    }
}

/// A normalized histogram with finite edges.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedDistribution {
    edges: Vec<f64>,
    probs: Vec<f64>,
    cum: Vec<f64>,
    open_lower_mass: Option<f64>,
    open_upper_mass: Option<f64>,
}

impl ClosedDistribution {
    /// Build from `n + 1` increasing edges and `n` non-negative masses in
    /// any scale (percent or fraction); the masses are normalized.
    pub fn new(edges: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidProbability(format!("{probs:?}")));
        }
        let total: f64 = probs.iter().sum();
        if total <= 0.0 {
            return Err(Error::ZeroMass);
        }
        Self::from_parts(edges, probs.into_iter().map(|p| p / total).collect())
    }

    fn from_parts(edges: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        if edges.len() != probs.len() + 1 {
            return Err(Error::InvalidBins(format!(
                "{} edges for {} bins",
                edges.len(),
                probs.len()
            )));
        }
        if edges.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidBins(format!("non-finite edge in {edges:?}")));
        }
        if edges.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidBins(format!(
                "edges not strictly increasing: {edges:?}"
            )));
        }
        let mut cum = Vec::with_capacity(probs.len() + 1);
        cum.push(0.0);
        let mut acc = 0.0;
        for p in &probs {
            acc += p;
            cum.push(acc);
        }
        Ok(Self {
            edges,
            probs,
            cum,
            open_lower_mass: None,
            open_upper_mass: None,
        })
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Cumulative mass at each edge, starting at 0.
    pub fn cumulative(&self) -> &[f64] {
        &self.cum
    }

    pub fn lower_bound(&self) -> f64 {
        self.edges[0]
    }

    pub fn upper_bound(&self) -> f64 {
        self.edges[self.edges.len() - 1]
    }

    pub fn midpoints(&self) -> impl Iterator<Item = f64> + '_ {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1]))
    }

    /// Mass that sat in an open lower tail before closing, if there was one.
    pub fn open_lower_mass(&self) -> Option<f64> {
        self.open_lower_mass
    }

    pub fn open_upper_mass(&self) -> Option<f64> {
        self.open_upper_mass
    }

    /// Linear interpolation inside the first bin whose cumulative mass
    /// reaches `p`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if self.probs.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "quantile level {p} outside (0, 1)"
            )));
        }
        let n = self.probs.len();
        // first bin i with cum[i + 1] >= p
        let i = self.cum[1..].partition_point(|&c| c < p).min(n - 1);
        // rounding can leave the total a hair below p; fall back to the last
        // bin carrying mass
        let i = if self.probs[i] > 0.0 {
            i
        } else {
            (0..=i)
                .rev()
                .find(|&j| self.probs[j] > 0.0)
                .ok_or(Error::ZeroMass)?
        };
        let (a, b) = (self.edges[i], self.edges[i + 1]);
        let frac = ((p - self.cum[i]) / self.probs[i]).clamp(0.0, 1.0);
        Ok(a + frac * (b - a))
    }

    /// Piecewise-linear CDF, clamped to 0 below and 1 above the support.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.lower_bound() {
            return 0.0;
        }
        if x >= self.upper_bound() {
            return 1.0;
        }
        // bin j with edges[j] <= x < edges[j + 1]
        let j = self.edges.partition_point(|&e| e <= x) - 1;
        let (a, b) = (self.edges[j], self.edges[j + 1]);
        (self.cum[j] + self.probs[j] * (x - a) / (b - a)).clamp(0.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn five_bin_example() -> ClosedDistribution {
        ClosedDistribution::new(
            vec![-1.5, -1.0, -0.5, 0.0, 0.5, 1.0],
            vec![10.0, 25.0, 35.0, 25.0, 5.0],
        )
        .unwrap()
    }

    #[test]
    fn normalize_percent_masses() {
        let bins = vec![
            Bin::closed(-1.5, -1.0),
            Bin::closed(-1.0, -0.5),
            Bin::closed(-0.5, 0.0),
            Bin::closed(0.0, 0.5),
            Bin::closed(0.5, 1.0),
        ];
        let d = BinnedDistribution::new(bins, vec![10.0, 25.0, 35.0, 25.0, 5.0]).unwrap();
        let n = d.normalize().unwrap();
        for (got, want) in n.probs().iter().zip([0.10, 0.25, 0.35, 0.25, 0.05]) {
            assert!((got - want).abs() < 1e-15);
        }
        assert_eq!(n.normalize().unwrap(), n);
    }

    #[test]
    fn normalize_trivial_cases() {
        let one = BinnedDistribution::new(vec![Bin::closed(0.0, 1.0)], vec![1.0]).unwrap();
        assert_eq!(one.normalize().unwrap().probs(), &[1.0]);
        let two = BinnedDistribution::new(
            vec![Bin::closed(0.0, 1.0), Bin::closed(1.0, 2.0)],
            vec![2.0, 2.0],
        )
        .unwrap();
        assert_eq!(two.normalize().unwrap().probs(), &[0.5, 0.5]);
        let zero = BinnedDistribution::new(vec![Bin::closed(0.0, 1.0)], vec![0.0]).unwrap();
        assert_eq!(zero.normalize(), Err(Error::ZeroMass));
    }

    #[test]
    fn construction_rejects_bad_layouts() {
        let gap = BinnedDistribution::new(
            vec![Bin::closed(0.0, 0.5), Bin::closed(0.6, 1.0)],
            vec![1.0, 1.0],
        );
        assert!(matches!(gap, Err(Error::InvalidBins(_))));
        let interior_open = BinnedDistribution::new(
            vec![Bin::closed(0.0, 0.5), Bin::open_below(1.0)],
            vec![1.0, 1.0],
        );
        assert!(matches!(interior_open, Err(Error::InvalidBins(_))));
        let negative = BinnedDistribution::new(vec![Bin::closed(0.0, 0.5)], vec![-1.0]);
        assert!(matches!(negative, Err(Error::InvalidProbability(_))));
        let inverted = BinnedDistribution::new(vec![Bin::closed(0.5, 0.0)], vec![1.0]);
        assert!(matches!(inverted, Err(Error::InvalidBins(_))));
    }

    #[test]
    fn open_tails_take_adjacent_width() {
        let d = BinnedDistribution::new(
            vec![Bin::open_below(1.0), Bin::closed(1.0, 1.5)],
            vec![0.3, 0.7],
        )
        .unwrap();
        let c = d.close_open_bins(TailPolicy::AdjacentWidth).unwrap();
        assert_eq!(c.edges(), &[0.5, 1.0, 1.5]);
        assert_eq!(c.open_lower_mass(), Some(0.3));
        assert_eq!(c.open_upper_mass(), None);

        let d = BinnedDistribution::new(
            vec![
                Bin::open_below(0.0),
                Bin::closed(0.0, 0.5),
                Bin::open_above(0.5),
            ],
            vec![0.2, 0.5, 0.3],
        )
        .unwrap();
        let c = d.close_open_bins(TailPolicy::AdjacentWidth).unwrap();
        assert_eq!(c.edges(), &[-0.5, 0.0, 0.5, 1.0]);

        let c = d.close_open_bins(TailPolicy::FixedWidth(2.0)).unwrap();
        assert_eq!(c.edges(), &[-2.0, 0.0, 0.5, 2.5]);
    }

    #[test]
    fn closing_all_closed_is_identity() {
        let bins = vec![Bin::closed(0.0, 0.5), Bin::closed(0.5, 1.0)];
        let d = BinnedDistribution::new(bins, vec![0.4, 0.6]).unwrap();
        let c = d.close_open_bins(TailPolicy::AdjacentWidth).unwrap();
        assert_eq!(c.edges(), &[0.0, 0.5, 1.0]);
        assert_eq!(c.probs(), &[0.4, 0.6]);
    }

    #[test]
    fn closing_needs_a_closed_neighbor() {
        let d = BinnedDistribution::new(vec![Bin::open_below(1.0)], vec![1.0]).unwrap();
        assert_eq!(
            d.close_open_bins(TailPolicy::AdjacentWidth),
            Err(Error::NoClosedNeighbor)
        );
        let d = BinnedDistribution::new(
            vec![Bin::open_below(1.0), Bin::open_above(1.0)],
            vec![0.5, 0.5],
        )
        .unwrap();
        assert_eq!(
            d.close_open_bins(TailPolicy::AdjacentWidth),
            Err(Error::NoClosedNeighbor)
        );
        assert!(d.close_open_bins(TailPolicy::FixedWidth(0.5)).is_ok());
    }

    #[test]
    fn closing_requires_normalized_input() {
        let d = BinnedDistribution::new(vec![Bin::closed(0.0, 1.0)], vec![50.0]).unwrap();
        assert!(matches!(
            d.close_open_bins(TailPolicy::AdjacentWidth),
            Err(Error::NotNormalized(_))
        ));
    }

    #[test]
    fn first_quartile_of_five_bin_example() {
        // -1 + 15/25 * 0.5
        let q1 = five_bin_example().quantile(0.25).unwrap();
        assert!((q1 + 0.7).abs() < 1e-12, "{q1}");
    }

    #[test]
    fn single_bin_quantile_is_uniform() {
        let d = ClosedDistribution::new(vec![0.0, 1.0], vec![1.0]).unwrap();
        assert!((d.quantile(0.5).unwrap() - 0.5).abs() < 1e-15);
        assert!((d.quantile(0.125).unwrap() - 0.125).abs() < 1e-15);
    }

    #[test]
    fn quantile_rejects_levels_outside_unit_interval() {
        let d = five_bin_example();
        assert!(d.quantile(0.0).is_err());
        assert!(d.quantile(1.0).is_err());
        assert!(d.quantile(f64::NAN).is_err());
    }

    #[test]
    fn quantile_skips_zero_mass_bins() {
        let d = ClosedDistribution::new(vec![0.0, 1.0, 2.0, 3.0], vec![0.5, 0.0, 0.5]).unwrap();
        assert_eq!(d.quantile(0.5).unwrap(), 1.0);
        assert!((d.quantile(0.75).unwrap() - 2.5).abs() < 1e-15);
    }

    #[test]
    fn cdf_clamps_and_inverts() {
        let d = five_bin_example();
        assert_eq!(d.cdf(-10.0), 0.0);
        assert_eq!(d.cdf(-1.5), 0.0);
        assert_eq!(d.cdf(10.0), 1.0);
        assert!((d.cdf(-0.7) - 0.25).abs() < 1e-12);
    }
}
